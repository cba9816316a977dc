//! Maximal operators on lattice cube families, Muckenhoupt constants, the dyadic
//! Calderón–Zygmund decomposition and Fefferman–Stein ratios.
//!
//! Suprema over cubes run over a fixed family: squares of side 2^t whose corners
//! lie on the lattice of spacing 2^{t−1} (dyadic squares plus their half-shifts).
//! Cube sums are computed once as a pyramid, each square being the sum of its
//! four half-size subsquares, so the same number is used for a cube wherever it
//! appears.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::decomposition::MomentSubspace;
use crate::domains::{Cube, DomainKind, Grid, GridDomain, GridFunction};
use crate::numerics::Ratio;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaximalError {
    #[error("threshold {alpha} is below the average {average} of |f| over Q0")]
    ThresholdTooSmall { alpha: f64, average: f64 },
    #[error("grid must be a square box with a power-of-two side, got {0}×{1}")]
    NotDyadicBox(usize, usize),
    #[error("weight is not strictly positive at cell {0}")]
    NonPositiveWeight(usize),
    #[error("power weight center coincides with a lattice point")]
    SingularWeight,
    #[error("malformed weight spec: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    Unit,
    Power { a: f64, center: [f64; 2] },
    Custom,
}

/// Positive weight sampled at the cell centers of a grid.
#[derive(Clone, Debug, Serialize)]
pub struct Weight {
    pub kind: WeightKind,
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl Weight {
    pub fn unit(grid: &Grid) -> Weight {
        Weight { kind: WeightKind::Unit, values: vec![1.0; grid.len()] }
    }

    /// |x − center|^a at the cell centers.
    pub fn power(grid: &Grid, a: f64, center: [f64; 2]) -> Result<Weight, MaximalError> {
        let mut values = Vec::with_capacity(grid.len());
        for c in 0..grid.len() {
            let x = grid.center_of(c);
            let r = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt();
            if r < 1e-9 * grid.h {
                return Err(MaximalError::SingularWeight);
            }
            values.push(r.powf(a));
        }
        Ok(Weight { kind: WeightKind::Power { a, center }, values })
    }

    pub fn custom(values: Vec<f64>) -> Result<Weight, MaximalError> {
        if let Some(i) = values.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(MaximalError::NonPositiveWeight(i));
        }
        Ok(Weight { kind: WeightKind::Custom, values })
    }

    /// `unit`, `power:a=<a>,cx=<x>,cy=<y>` or `file:<path>` (whitespace-separated values, row-major).
    pub fn parse(spec: &str, grid: &Grid) -> Result<Weight, MaximalError> {
        if spec == "unit" {
            return Ok(Weight::unit(grid));
        }
        if let Some(rest) = spec.strip_prefix("power:") {
            let (mut a, mut cx, mut cy) = (None, 0.0, 0.0);
            for kv in rest.split(',') {
                let (k, v) = kv.split_once('=').ok_or_else(|| MaximalError::Malformed(kv.into()))?;
                let v: f64 = v.trim().parse().map_err(|_| MaximalError::Malformed(kv.into()))?;
                match k.trim() {
                    "a" => a = Some(v),
                    "cx" => cx = v,
                    "cy" => cy = v,
                    _ => return Err(MaximalError::Malformed(kv.into())),
                }
            }
            let a = a.ok_or_else(|| MaximalError::Malformed("power weight needs a=".into()))?;
            return Weight::power(grid, a, [cx, cy]);
        }
        if let Some(path) = spec.strip_prefix("file:") {
            let text = std::fs::read_to_string(path).map_err(|e| MaximalError::Malformed(e.to_string()))?;
            let values: Result<Vec<f64>, _> = text.split_whitespace().map(str::parse::<f64>).collect();
            let values = values.map_err(|e| MaximalError::Malformed(e.to_string()))?;
            if values.len() != grid.len() {
                return Err(MaximalError::Malformed(format!("expected {} values, got {}", grid.len(), values.len())));
            }
            return Weight::custom(values);
        }
        Err(MaximalError::Malformed(spec.into()))
    }
}

/// Square of `side` cells with lower-left cell (i0, j0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LatticeCube {
    pub i0: usize,
    pub j0: usize,
    pub side: usize,
}

impl LatticeCube {
    pub fn as_cube(&self) -> Cube {
        Cube::from_cells(self.i0 as i64, self.j0 as i64, self.side as i64)
    }

    pub fn cells(&self, grid: &Grid) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.side * self.side);
        for j in self.j0..self.j0 + self.side {
            for i in self.i0..self.i0 + self.side {
                out.push(grid.index(i, j));
            }
        }
        out
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i < self.i0 + self.side && j >= self.j0 && j < self.j0 + self.side
    }
}

/// One level of the family: squares of side 2^t on a lattice of spacing `step`.
struct Level {
    side: usize,
    step: usize,
    cols: usize,
    rows: usize,
}

impl Level {
    fn new(grid: &Grid, t: u32) -> Level {
        let side = 1usize << t;
        let step = (side / 2).max(1);
        Level { side, step, cols: (grid.nx - side) / step + 1, rows: (grid.ny - side) / step + 1 }
    }

    fn cube(&self, k: usize) -> LatticeCube {
        LatticeCube { i0: (k % self.cols) * self.step, j0: (k / self.cols) * self.step, side: self.side }
    }

    fn slot(&self, i0: usize, j0: usize) -> usize {
        (j0 / self.step) * self.cols + i0 / self.step
    }

    fn len(&self) -> usize {
        self.cols * self.rows
    }
}

fn levels(grid: &Grid) -> Vec<Level> {
    let max = grid.nx.min(grid.ny);
    (0..).take_while(|&t| (1usize << t) <= max).map(|t| Level::new(grid, t)).collect()
}

/// Every cube of the family, smallest first.
pub fn cube_family(grid: &Grid) -> Vec<LatticeCube> {
    levels(grid).iter().flat_map(|l| (0..l.len()).map(move |k| l.cube(k))).collect()
}

/// The dyadic subfamily (corners on multiples of the side).
pub fn dyadic_family(grid: &Grid) -> Vec<LatticeCube> {
    cube_family(grid).into_iter().filter(|q| q.i0 % q.side == 0 && q.j0 % q.side == 0).collect()
}

/// Pyramid of cube sums of the cell values `g`.
struct Pyramid {
    levels: Vec<Level>,
    sums: Vec<Vec<f64>>,
}

impl Pyramid {
    fn new(grid: &Grid, g: &[f64]) -> Pyramid {
        let levels = levels(grid);
        let mut sums: Vec<Vec<f64>> = Vec::with_capacity(levels.len());
        for (t, l) in levels.iter().enumerate() {
            let s: Vec<f64> = (0..l.len())
                .map(|k| {
                    let q = l.cube(k);
                    if t == 0 {
                        g[grid.index(q.i0, q.j0)]
                    } else {
                        let child = &levels[t - 1];
                        let h = l.side / 2;
                        let prev = &sums[t - 1];
                        let a = prev[child.slot(q.i0, q.j0)] + prev[child.slot(q.i0 + h, q.j0)];
                        let b = prev[child.slot(q.i0, q.j0 + h)] + prev[child.slot(q.i0 + h, q.j0 + h)];
                        a + b
                    }
                })
                .collect();
            sums.push(s);
        }
        Pyramid { levels, sums }
    }

    fn sum(&self, q: &LatticeCube) -> f64 {
        let t = q.side.trailing_zeros() as usize;
        self.sums[t][self.levels[t].slot(q.i0, q.j0)]
    }

    fn mean(&self, q: &LatticeCube) -> f64 {
        self.sum(q) / (q.side * q.side) as f64
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Variant<'a> {
    /// Uncentered Hardy–Littlewood maximal function over the family.
    Hl,
    /// Cubes Q with σQ ⊂ Ω, p-means.
    Restricted { domain: &'a GridDomain, sigma: f64, p: f64 },
    /// Cubes Q with σQ ⊂ Ω, inf over π ∈ 𝒩 of the p-mean of f − π.
    Sharp { domain: &'a GridDomain, sigma: f64, p: f64, space: &'a MomentSubspace },
}

#[derive(Clone, Debug, Serialize)]
pub struct MaximalResult {
    pub values: Vec<f64>,
    /// Cells of Ω admitting no eligible cube (value 0 by convention).
    pub no_eligible: Vec<usize>,
}

fn pmean(sum: f64, count: usize, p: f64) -> f64 {
    let m = sum / count as f64;
    if p == 1.0 {
        m
    } else {
        m.powf(1.0 / p)
    }
}

/// σQ ⊂ Ω, tested on lattice points.
pub fn eligible(q: &LatticeCube, domain: &GridDomain, sigma: f64) -> bool {
    q.as_cube().dilate(sigma).cells().into_iter().all(|(i, j)| domain.inside(i, j))
}

fn abs_powers(f: &GridFunction, p: f64) -> Vec<f64> {
    (0..f.grid.len())
        .map(|c| {
            let a = f.abs_at(c);
            if p == 1.0 {
                a
            } else {
                a.powf(p)
            }
        })
        .collect()
}

pub fn maximal(f: &GridFunction, variant: &Variant) -> MaximalResult {
    let grid = &f.grid;
    let family = cube_family(grid);
    let (p, domain, sigma) = match *variant {
        Variant::Hl => (1.0, None, 1.0),
        Variant::Restricted { domain, sigma, p } | Variant::Sharp { domain, sigma, p, .. } => (p, Some(domain), sigma),
    };
    let pyr = Pyramid::new(grid, &abs_powers(f, p));
    let chosen: Vec<LatticeCube> = match domain {
        None => family,
        Some(d) => family.into_par_iter().filter(|q| eligible(q, d, sigma)).collect(),
    };
    let plain: Vec<f64> = chosen.iter().map(|q| pmean(pyr.sum(q), q.side * q.side, p)).collect();
    let cube_values: Vec<f64> = match *variant {
        Variant::Sharp { space, .. } => {
            let basis = BasisTable::new(grid, space);
            chosen
                .par_iter()
                .zip(plain.par_iter())
                .map(|(q, &v)| v.min(best_pmean(f, &q.cells(grid), &basis, p)))
                .collect()
        }
        _ => plain,
    };
    let mut values = vec![0.0; grid.len()];
    let mut covered = vec![false; grid.len()];
    for (q, v) in chosen.iter().zip(cube_values) {
        for j in q.j0..q.j0 + q.side {
            for i in q.i0..q.i0 + q.side {
                let c = grid.index(i, j);
                covered[c] = true;
                if v > values[c] {
                    values[c] = v;
                }
            }
        }
    }
    let no_eligible = match domain {
        Some(d) => d.cells().into_iter().filter(|&c| !covered[c]).collect(),
        None => Vec::new(),
    };
    MaximalResult { values, no_eligible }
}

/// Basis values π_a(x_c) for every cell, in coordinates centered at the grid box.
pub struct BasisTable {
    dim: usize,
    count: usize,
    values: Vec<f64>,
}

impl BasisTable {
    pub fn new(grid: &Grid, space: &MomentSubspace) -> BasisTable {
        let (dim, count) = (space.dim, space.len());
        let mut values = Vec::with_capacity(grid.len() * dim * count);
        for c in 0..grid.len() {
            for p in space.eval_all(&grid.center_of(c)) {
                values.extend(p);
            }
        }
        BasisTable { dim, count, values }
    }

    fn at(&self, cell: usize, a: usize) -> &[f64] {
        let o = (cell * self.count + a) * self.dim;
        &self.values[o..o + self.dim]
    }
}

/// Weighted least squares min Σ w_c |f(c) − π(c)|² over π ∈ 𝒩; returns coefficients.
fn weighted_ls(f: &GridFunction, cells: &[usize], basis: &BasisTable, w: &[f64]) -> Vec<f64> {
    let (dim, d) = (basis.dim, basis.count);
    if d == 0 {
        return Vec::new();
    }
    let rows = cells.len() * dim;
    let mut a = DMatrix::zeros(rows, d);
    let mut b = DVector::zeros(rows);
    for (r, (&c, &wc)) in cells.iter().zip(w).enumerate() {
        let s = wc.sqrt();
        for k in 0..dim {
            b[r * dim + k] = s * f.at(c)[k];
            for col in 0..d {
                a[(r * dim + k, col)] = s * basis.at(c, col)[k];
            }
        }
    }
    // Column scaling keeps the SVD threshold meaningful for tiny cubes.
    let norms: Vec<f64> = (0..d).map(|j| a.column(j).norm().max(1e-300)).collect();
    for j in 0..d {
        a.column_mut(j).scale_mut(1.0 / norms[j]);
    }
    let svd = a.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    let x = svd.solve(&b, eps).unwrap_or_else(|_| DVector::zeros(d));
    (0..d).map(|j| x[j] / norms[j]).collect()
}

fn residuals(f: &GridFunction, cells: &[usize], basis: &BasisTable, coef: &[f64]) -> Vec<f64> {
    cells
        .iter()
        .map(|&c| {
            let mut r2 = 0.0;
            for k in 0..basis.dim {
                let mut v = f.at(c)[k];
                for (a, co) in coef.iter().enumerate() {
                    v -= co * basis.at(c, a)[k];
                }
                r2 += v * v;
            }
            r2.sqrt()
        })
        .collect()
}

fn pmean_of(res: &[f64], w: Option<&[f64]>, p: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, r) in res.iter().enumerate() {
        let wi = w.map_or(1.0, |w| w[i]);
        num += wi * if p == 1.0 { *r } else { r.powf(p) };
        den += wi;
    }
    let m = num / den;
    if p == 1.0 {
        m
    } else {
        m.powf(1.0 / p)
    }
}

/// Smallest p-mean of f − π among the ℓ² fit and its reweighted refinements.
fn best_pmean(f: &GridFunction, cells: &[usize], basis: &BasisTable, p: f64) -> f64 {
    best_fit(f, cells, basis, p, None, 1).1
}

/// Weighted p-mean fit: ℓ² solution followed by `passes` IRLS reweightings; returns (coefficients, p-mean).
fn best_fit(f: &GridFunction, cells: &[usize], basis: &BasisTable, p: f64, w: Option<&[f64]>, passes: usize) -> (Vec<f64>, f64) {
    let ones = vec![1.0; cells.len()];
    let w = w.unwrap_or(&ones);
    let mut coef = weighted_ls(f, cells, basis, w);
    let mut res = residuals(f, cells, basis, &coef);
    let mut best = (coef.clone(), pmean_of(&res, Some(w), p));
    if p == 2.0 {
        return best;
    }
    for _ in 0..passes {
        let scale = res.iter().cloned().fold(0.0, f64::max).max(1e-300);
        let ww: Vec<f64> = res
            .iter()
            .zip(w)
            .map(|(r, wc)| wc * r.max(1e-8 * scale).powf(p - 2.0))
            .collect();
        coef = weighted_ls(f, cells, basis, &ww);
        res = residuals(f, cells, basis, &coef);
        let v = pmean_of(&res, Some(w), p);
        if v < best.1 {
            best = (coef.clone(), v);
        }
    }
    best
}

/// Near-best approximation of f by 𝒩 in L^p_w over the given cells; returns (π, ‖f − π‖_{L^p_w}).
pub fn best_approximation(
    f: &GridFunction,
    cells: &[usize],
    space: &MomentSubspace,
    p: f64,
    weight: Option<&Weight>,
) -> (Vec<f64>, f64) {
    let basis = BasisTable::new(&f.grid, space);
    let w: Option<Vec<f64>> = weight.map(|w| cells.iter().map(|&c| w.values[c]).collect());
    let (coef, mean) = best_fit(f, cells, &basis, p, w.as_deref(), 8);
    let total: f64 = w.as_ref().map_or(cells.len() as f64, |w| w.iter().sum());
    (coef, mean * (total * f.grid.cell_area()).powf(1.0 / p))
}

/// sup over the cubes of (avg w)(avg w^{−1/(q−1)})^{q−1}, or (avg w)·max(1/w) when q = 1.
pub fn muckenhoupt_constant(w: &Weight, q: f64, grid: &Grid, cubes: &[LatticeCube]) -> f64 {
    let pw = Pyramid::new(grid, &w.values);
    let dual: Vec<f64> = if q > 1.0 {
        w.values.iter().map(|v| v.powf(-1.0 / (q - 1.0))).collect()
    } else {
        Vec::new()
    };
    let pd = (q > 1.0).then(|| Pyramid::new(grid, &dual));
    cubes
        .iter()
        .map(|c| {
            let aw = pw.mean(c);
            match &pd {
                Some(pd) => aw * pd.mean(c).powf(q - 1.0),
                None => {
                    let minw = c.cells(grid).into_iter().map(|x| w.values[x]).fold(f64::INFINITY, f64::min);
                    aw / minw
                }
            }
        })
        .fold(0.0, f64::max)
}

/// [|x|^a]_{A_q} on [−1,1]² with 2^{depth+1} cells per side over the full cube family.
pub fn power_weight_constant(a: f64, q: f64, depth: u32) -> f64 {
    let n = 1usize << (depth + 1);
    let grid = Grid::new(n, n, 2.0 / n as f64, [-1.0, -1.0]);
    let w = Weight::power(&grid, a, [0.0, 0.0]).expect("origin is a lattice vertex, not a cell center");
    muckenhoupt_constant(&w, q, &grid, &cube_family(&grid))
}

/// A selected stopping-time cube; `level` ℓ has side N/2^ℓ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CzCube {
    pub level: u32,
    pub corner: [usize; 2],
    pub side: usize,
}

impl CzCube {
    fn lattice(&self) -> LatticeCube {
        LatticeCube { i0: self.corner[0], j0: self.corner[1], side: self.side }
    }
}

fn dyadic_box(grid: &Grid) -> Result<usize, MaximalError> {
    if grid.nx != grid.ny || !grid.nx.is_power_of_two() {
        return Err(MaximalError::NotDyadicBox(grid.nx, grid.ny));
    }
    Ok(grid.nx)
}

/// avg_{Q₀}|f| over the dyadic box, summed as in the stopping-time recursion.
pub fn box_average(f: &GridFunction) -> Result<f64, MaximalError> {
    let n = dyadic_box(&f.grid)?;
    Ok(Pyramid::new(&f.grid, &abs_powers(f, 1.0)).mean(&LatticeCube { i0: 0, j0: 0, side: n }))
}

/// Maximal dyadic subcubes of the box Q₀ with α < avg|f|.
pub fn cz_decomposition(f: &GridFunction, alpha: f64) -> Result<Vec<CzCube>, MaximalError> {
    let n = dyadic_box(&f.grid)?;
    let pyr = Pyramid::new(&f.grid, &abs_powers(f, 1.0));
    cz_from_pyramid(&pyr, n, alpha)
}

fn cz_from_pyramid(pyr: &Pyramid, n: usize, alpha: f64) -> Result<Vec<CzCube>, MaximalError> {
    let root = LatticeCube { i0: 0, j0: 0, side: n };
    let average = pyr.mean(&root);
    if alpha < average {
        return Err(MaximalError::ThresholdTooSmall { alpha, average });
    }
    let mut out = Vec::new();
    let mut stack = vec![(root, 0u32)];
    while let Some((q, level)) = stack.pop() {
        if level > 0 && pyr.mean(&q) > alpha {
            out.push(CzCube { level, corner: [q.i0, q.j0], side: q.side });
            continue;
        }
        if q.side > 1 {
            let h = q.side / 2;
            for (di, dj) in [(h, h), (0, h), (h, 0), (0, 0)] {
                stack.push((LatticeCube { i0: q.i0 + di, j0: q.j0 + dj, side: h }, level + 1));
            }
        }
    }
    out.sort_by_key(|c| (c.level, c.corner[1], c.corner[0]));
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct CzReport {
    pub alphas: Vec<f64>,
    pub cubes: Vec<usize>,
    /// α < avg ≤ 2²α and pairwise disjoint.
    pub a: bool,
    /// Nesting across thresholds.
    pub b: bool,
    /// |f| ≤ α off the union.
    pub c: bool,
    /// Union inside {M_res f > α}.
    pub d: bool,
    /// {M_res f > 5²α} inside the union of 5Q_j.
    pub e: bool,
}

impl CzReport {
    pub fn all_pass(&self) -> bool {
        self.a && self.b && self.c && self.d && self.e
    }
}

/// Checks the five stopping-time properties at every threshold in `alphas`.
pub fn check_cz_properties(f: &GridFunction, alphas: &[f64]) -> Result<CzReport, MaximalError> {
    let n = dyadic_box(&f.grid)?;
    let grid = &f.grid;
    let pyr = Pyramid::new(grid, &abs_powers(f, 1.0));
    let mask = vec![true; grid.len()];
    let q0 = GridDomain::from_mask(grid.clone(), mask, DomainKind::Custom, false).expect("box is connected");
    let mres = maximal(f, &Variant::Restricted { domain: &q0, sigma: 1.0, p: 1.0 }).values;
    let mut sets = Vec::with_capacity(alphas.len());
    for &al in alphas {
        sets.push(cz_from_pyramid(&pyr, n, al)?);
    }
    let (mut a, mut b, mut c, mut d, mut e) = (true, true, true, true, true);
    for (k, (&al, cubes)) in alphas.iter().zip(&sets).enumerate() {
        let mut owner = vec![usize::MAX; grid.len()];
        for (idx, cz) in cubes.iter().enumerate() {
            let lq = cz.lattice();
            let avg = pyr.mean(&lq);
            a &= al < avg && avg <= 4.0 * al;
            for cell in lq.cells(grid) {
                a &= owner[cell] == usize::MAX;
                owner[cell] = idx;
                d &= mres[cell] > al;
            }
        }
        for cell in 0..grid.len() {
            if owner[cell] == usize::MAX {
                c &= f.abs_at(cell) <= al;
            }
            if mres[cell] > 25.0 * al {
                let (i, j) = grid.coords(cell);
                let (x, y) = (i as f64 + 0.5, j as f64 + 0.5);
                e &= cubes.iter().any(|cz| cz.lattice().as_cube().dilate(5.0).contains_point(x, y));
            }
        }
        for (k2, &be) in alphas.iter().enumerate() {
            if k2 == k || be > al {
                continue;
            }
            for cz in cubes {
                let q = cz.lattice();
                b &= sets[k2].iter().any(|p| {
                    let p = p.lattice();
                    p.contains(q.i0, q.j0) && p.contains(q.i0 + q.side - 1, q.j0 + q.side - 1)
                });
            }
        }
    }
    Ok(CzReport { alphas: alphas.to_vec(), cubes: sets.iter().map(Vec::len).collect(), a, b, c, d, e })
}

#[derive(Clone, Debug, Serialize)]
pub struct FeffermanStein {
    pub ratio: Ratio,
    pub best_error: f64,
    pub sharp_norm: f64,
    pub no_eligible: usize,
}

/// inf_π ‖f − π‖_{L^q_w(Ω)} / ‖M♯_{res,Ω,σ,1,𝒩} f‖_{L^q_w(Ω)}.
pub fn fefferman_stein_check(
    f: &GridFunction,
    domain: &GridDomain,
    sigma: f64,
    q: f64,
    w: &Weight,
    space: &MomentSubspace,
) -> FeffermanStein {
    let cells = domain.cells();
    let (_, best_error) = best_approximation(f, &cells, space, q, Some(w));
    let sharp = maximal(f, &Variant::Sharp { domain, sigma, p: 1.0, space });
    let sf = GridFunction { grid: f.grid.clone(), dim: 1, values: sharp.values };
    let sharp_norm = sf.lp_norm(&cells, q, Some(&w.values));
    let scale = f.lp_norm(&cells, q, Some(&w.values));
    FeffermanStein {
        ratio: Ratio::new(best_error, sharp_norm, scale, 1e-12),
        best_error,
        sharp_norm,
        no_eligible: sharp.no_eligible.len(),
    }
}

#[cfg(test)]
mod tests;

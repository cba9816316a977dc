//! Decomposition of fields with vanishing 𝒩-moments along a chain cover.
//!
//! Each piece T_i f lives on the cover element W_i and has vanishing moments
//! against 𝒩. Local parts S_i f = ξ_i f are corrected by η-weighted moment
//! projections, and the corrections are transported along the chain from W_i to
//! the central element W_0, where they telescope away because f itself is
//! moment-free.

mod replacement;

pub use replacement::{replacement_sequence, strip_band_cells, wk1_norm, ReplacementParams, ReplacementStep};


use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::domains::{ChainCover, Cube, GridDomain, GridFunction};
use crate::ellipticity::{c_ellipticity, Verdict};
use crate::fd::gradient_indices;
use crate::poly_core::exact::{rank, RMatrix};
use crate::poly_core::{indices_up_to, DiffOperator, Poly, VPolyF64, VPolynomial};
use crate::projection::ProjectionError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompositionError {
    #[error("singular moment Gram matrix on bump {0}")]
    SingularGram(String),
    #[error("f has nonzero moments (relative size {0:.3e})")]
    MomentsNotZero(f64),
    #[error("operator is not C-elliptic")]
    NotCElliptic,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("moment basis is linearly dependent")]
    DependentBasis,
    #[error("scale 2^-{0} is below the grid resolution")]
    ScaleTooFine(u32),
    #[error("scale 2^-{0} does not fit the strip")]
    ScaleTooCoarse(u32),
    #[error("domain is not a half-space strip")]
    NotAStrip,
    #[error(transparent)]
    Projection(#[from] ProjectionError),
}

/// A finite-dimensional space 𝒩 of E-valued polynomials on ℝ².
#[derive(Clone, Debug, Serialize)]
pub struct MomentSubspace {
    pub label: String,
    pub dim: usize,
    pub basis: Vec<VPolyF64>,
}

fn independent(polys: &[VPolynomial]) -> Vec<usize> {
    let deg = polys
        .iter()
        .filter_map(|p| match p.degree() {
            crate::poly_core::Degree::Finite(d) => Some(d),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let idx = indices_up_to(2, deg);
    let mut keep = Vec::new();
    let mut rows: RMatrix = Vec::new();
    for (i, p) in polys.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        rows.push(p.coordinates(&idx));
        if rank(&rows) == rows.len() {
            keep.push(i);
        } else {
            rows.pop();
        }
    }
    keep
}

impl MomentSubspace {
    /// Constant E-valued maps.
    pub fn constants(dim: usize) -> MomentSubspace {
        let basis = (0..dim)
            .map(|i| {
                let mut v = vec![0.0; dim];
                v[i] = 1.0;
                VPolyF64 { n: 2, dim, terms: vec![(crate::poly_core::MultiIndex::zero(2), v)] }
            })
            .collect();
        MomentSubspace { label: "constants".into(), dim, basis }
    }

    pub fn explicit(label: &str, basis: Vec<VPolynomial>) -> Result<MomentSubspace, DecompositionError> {
        let dim = basis.first().map_or(1, |p| p.dim);
        if independent(&basis).len() != basis.len() {
            return Err(DecompositionError::DependentBasis);
        }
        Ok(MomentSubspace { label: label.into(), dim, basis: basis.iter().map(|p| p.to_f64()).collect() })
    }

    /// ker 𝔸 for a ℂ-elliptic operator on ℝ².
    pub fn kernel(op: &DiffOperator) -> Result<MomentSubspace, DecompositionError> {
        let prof = c_ellipticity(op, 12);
        if prof.verdict != Verdict::CElliptic || op.n != 2 {
            return Err(DecompositionError::NotCElliptic);
        }
        MomentSubspace::explicit("ker", prof.kernel_basis())
    }

    /// D^k ker 𝔸, valued in V ⊗ ⊙^k ℝ² with the component layout of [`crate::fd::apply_gradient`].
    pub fn kernel_derivatives(op: &DiffOperator, k: u32) -> Result<MomentSubspace, DecompositionError> {
        let prof = c_ellipticity(op, 12);
        if prof.verdict != Verdict::CElliptic || op.n != 2 {
            return Err(DecompositionError::NotCElliptic);
        }
        let idx = gradient_indices(2, k);
        let dim = op.dim_v * idx.len();
        let mut exact = Vec::new();
        let mut weighted = Vec::new();
        for u in prof.kernel_basis() {
            let comps = u.components();
            let mut e_comps: Vec<Poly> = Vec::with_capacity(dim);
            let mut weights = Vec::with_capacity(dim);
            for c in &comps {
                for (a, w) in &idx {
                    e_comps.push(c.derivative_multi(a));
                    weights.push(*w);
                }
            }
            let p = VPolynomial::from_components(&e_comps);
            let mut f = p.to_f64();
            for (_, v) in f.terms.iter_mut() {
                for (x, w) in v.iter_mut().zip(&weights) {
                    *x *= w;
                }
            }
            exact.push(p);
            weighted.push(f);
        }
        let keep = independent(&exact);
        Ok(MomentSubspace {
            label: format!("D^{k} ker"),
            dim,
            basis: keep.into_iter().map(|i| weighted[i].clone()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Values π_a(x) for every basis element.
    pub fn eval_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.basis.iter().map(|p| p.eval(x)).collect()
    }

    /// Σ_cells f·π_a h² for each a.
    pub fn moments(&self, f: &GridFunction, cells: &[usize]) -> Vec<f64> {
        let a = f.grid.cell_area();
        let mut out = vec![0.0; self.len()];
        for &c in cells {
            let x = f.grid.center_of(c);
            let fv = f.at(c);
            for (o, pv) in out.iter_mut().zip(self.eval_all(&x)) {
                *o += a * fv.iter().zip(&pv).map(|(p, q)| p * q).sum::<f64>();
            }
        }
        out
    }

    /// Evaluates Σ_a c_a π_a at x.
    pub fn combine(&self, coeffs: &[f64], x: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for (c, p) in coeffs.iter().zip(self.eval_all(x)) {
            for (o, q) in v.iter_mut().zip(p) {
                *o += c * q;
            }
        }
        v
    }
}

/// Discrete bump η ≥ 0 with Σ η h² = 1 on the disk inscribed in a square (cell units).
#[derive(Clone, Debug)]
pub struct Bump {
    pub cells: Vec<usize>,
    pub values: Vec<f64>,
}

/// Exponent of the bump profile (1 − |z|²)^ρ.
const BUMP_RHO: i32 = 2;

pub fn bump(domain: &GridDomain, square: &Cube) -> Bump {
    let mut cells = Vec::new();
    let mut values = Vec::new();
    for (i, j) in square.cells() {
        let (px, py) = (i as f64 + 0.5, j as f64 + 0.5);
        let s = ((px - square.cx).powi(2) + (py - square.cy).powi(2)) / (square.half * square.half);
        if s < 1.0 && domain.inside(i, j) {
            let (a, b) = domain.wrap(i, j).expect("inside");
            cells.push(domain.grid.index(a, b));
            values.push((1.0 - s).powi(BUMP_RHO));
        }
    }
    let total: f64 = values.iter().sum::<f64>() * domain.grid.cell_area();
    if total > 0.0 {
        values.iter_mut().for_each(|v| *v /= total);
    }
    Bump { cells, values }
}

/// Cached LU factors of the η-weighted Gram matrices ∫ η π_a π_b.
struct GramCache<'a> {
    domain: &'a GridDomain,
    space: &'a MomentSubspace,
    store: BTreeMap<[u64; 3], (Bump, nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>)>,
}

impl<'a> GramCache<'a> {
    fn new(domain: &'a GridDomain, space: &'a MomentSubspace) -> Self {
        GramCache { domain, space, store: BTreeMap::new() }
    }

    fn get(&mut self, sq: &Cube) -> Result<&(Bump, nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>), DecompositionError> {
        let key = [sq.cx.to_bits(), sq.cy.to_bits(), sq.half.to_bits()];
        if !self.store.contains_key(&key) {
            let b = bump(self.domain, sq);
            let g = eta_gram(&b, self.domain, self.space);
            let scale = g.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let sv = g.clone().singular_values();
            let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
            if b.cells.is_empty() || !(smin > 1e-12 * scale) {
                return Err(DecompositionError::SingularGram(format!("{sq:?}")));
            }
            self.store.insert(key, (b, g.lu()));
        }
        Ok(&self.store[&key])
    }
}

fn eta_gram(b: &Bump, domain: &GridDomain, space: &MomentSubspace) -> DMatrix<f64> {
    let d = space.len();
    let area = domain.grid.cell_area();
    let mut g = DMatrix::zeros(d, d);
    for (&c, &w) in b.cells.iter().zip(&b.values) {
        let p = space.eval_all(&domain.grid.center_of(c));
        for a in 0..d {
            for bb in 0..d {
                g[(a, bb)] += w * area * p[a].iter().zip(&p[bb]).map(|(x, y)| x * y).sum::<f64>();
            }
        }
    }
    g
}

/// Cells of the domain whose lattice points lie in the square.
pub fn square_cells(domain: &GridDomain, sq: &Cube) -> Vec<usize> {
    sq.cells()
        .into_iter()
        .filter(|&(i, j)| domain.inside(i, j))
        .map(|(i, j)| {
            let (a, b) = domain.wrap(i, j).expect("inside");
            domain.grid.index(a, b)
        })
        .collect()
}

/// Π f ∈ 𝒩 with ∫ η (Π f)·π = ∫_{region} f·π for all π ∈ 𝒩; returns basis coefficients.
pub fn moment_projection(
    f: &GridFunction,
    domain: &GridDomain,
    region: &Cube,
    eta_square: &Cube,
    space: &MomentSubspace,
) -> Result<Vec<f64>, DecompositionError> {
    if f.dim != space.dim {
        return Err(DecompositionError::DimensionMismatch { expected: space.dim, got: f.dim });
    }
    let mut cache = GramCache::new(domain, space);
    let (_, lu) = cache.get(eta_square)?;
    let mu = space.moments(f, &square_cells(domain, region));
    Ok(lu.solve(&DVector::from_vec(mu)).expect("nonsingular").iter().cloned().collect())
}

/// ‖Π f‖_{L^∞(region)} |region| / ∫_{region} |f|: the scale-free stability ratio.
pub fn moment_projection_stability(
    f: &GridFunction,
    domain: &GridDomain,
    region: &Cube,
    eta_square: &Cube,
    space: &MomentSubspace,
) -> Result<f64, DecompositionError> {
    let c = moment_projection(f, domain, region, eta_square, space)?;
    let cells = square_cells(domain, region);
    let sup = cells
        .iter()
        .map(|&x| crate::numerics::norm(&space.combine(&c, &domain.grid.center_of(x))))
        .fold(0.0, f64::max);
    let l1 = f.lp_norm(&cells, 1.0, None);
    let vol = cells.len() as f64 * domain.grid.cell_area();
    Ok(sup * vol / l1)
}

/// f − Σ c_a π_a 1_Ω with the L²(Ω)-projection onto 𝒩 removed.
pub fn remove_moments(f: &GridFunction, domain: &GridDomain, space: &MomentSubspace) -> GridFunction {
    let cells = domain.cells();
    let d = space.len();
    let area = domain.grid.cell_area();
    let mut g = DMatrix::zeros(d, d);
    for &c in &cells {
        let p = space.eval_all(&domain.grid.center_of(c));
        for a in 0..d {
            for b in 0..d {
                g[(a, b)] += area * p[a].iter().zip(&p[b]).map(|(x, y)| x * y).sum::<f64>();
            }
        }
    }
    let mu = DVector::from_vec(space.moments(f, &cells));
    let coef = g.lu().solve(&mu).expect("basis is independent on Ω");
    let mut out = f.clone();
    for &c in &cells {
        let v = space.combine(coef.as_slice(), &domain.grid.center_of(c));
        for (o, x) in out.at_mut(c).iter_mut().zip(v) {
            *o -= x;
        }
    }
    out
}

/// Relative moment size max_a |∫ f π_a| / (‖f‖₁ ‖π_a‖_∞).
pub fn relative_moments(f: &GridFunction, cells: &[usize], space: &MomentSubspace) -> f64 {
    let l1 = f.lp_norm(cells, 1.0, None).max(1e-300);
    let mu = space.moments(f, cells);
    space
        .basis
        .iter()
        .zip(mu)
        .map(|(p, m)| {
            let sup = cells
                .iter()
                .map(|&c| crate::numerics::norm(&p.eval(&f.grid.center_of(c))))
                .fold(0.0, f64::max)
                .max(1e-300);
            m.abs() / (l1 * sup)
        })
        .fold(0.0, f64::max)
}

/// Sparse piece T_i f, supported in W_i.
#[derive(Clone, Debug, Serialize)]
pub struct Piece {
    pub cube: usize,
    pub cells: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Decomposition {
    pub dim: usize,
    pub pieces: Vec<Piece>,
    #[serde(skip)]
    pub grid: crate::domains::Grid,
}

impl Decomposition {
    pub fn piece_function(&self, i: usize) -> GridFunction {
        let mut g = GridFunction::zeros(&self.grid, self.dim);
        let p = &self.pieces[i];
        for (k, &c) in p.cells.iter().enumerate() {
            g.at_mut(c).copy_from_slice(&p.values[k * self.dim..(k + 1) * self.dim]);
        }
        g
    }

    /// Σ_i T_i f, summing pieces in the given order (default: by index).
    pub fn sum(&self, order: Option<&[usize]>) -> GridFunction {
        let default: Vec<usize> = (0..self.pieces.len()).collect();
        let order = order.unwrap_or(&default);
        let mut g = GridFunction::zeros(&self.grid, self.dim);
        for &i in order {
            let p = &self.pieces[i];
            for (k, &c) in p.cells.iter().enumerate() {
                for (o, v) in g.at_mut(c).iter_mut().zip(&p.values[k * self.dim..(k + 1) * self.dim]) {
                    *o += v;
                }
            }
        }
        g
    }
}

/// Smooth positive profile on the open square, zero outside.
fn cube_profile(sq: &Cube, px: f64, py: f64) -> f64 {
    let tx = (px - sq.cx) / sq.half;
    let ty = (py - sq.cy) / sq.half;
    if tx.abs() >= 1.0 || ty.abs() >= 1.0 {
        return 0.0;
    }
    (1.0 - tx * tx).powi(2) * (1.0 - ty * ty).powi(2)
}

/// Partition of unity ξ_i subordinate to the cover: (cells of W_i, ξ_i values).
pub fn partition_of_unity(cc: &ChainCover, domain: &GridDomain) -> Vec<(Vec<usize>, Vec<f64>)> {
    let g = &domain.grid;
    let mut total = vec![0.0; g.len()];
    let raw: Vec<(Vec<usize>, Vec<f64>)> = cc
        .cubes
        .iter()
        .map(|w| {
            let mut cells = Vec::new();
            let mut vals = Vec::new();
            for (i, j) in w.cells() {
                if !domain.inside(i, j) {
                    continue;
                }
                let v = cube_profile(w, i as f64 + 0.5, j as f64 + 0.5);
                if v > 0.0 {
                    let (a, b) = domain.wrap(i, j).expect("inside");
                    let c = g.index(a, b);
                    total[c] += v;
                    cells.push(c);
                    vals.push(v);
                }
            }
            (cells, vals)
        })
        .collect();
    raw.into_iter()
        .map(|(cells, vals)| {
            let v = cells.iter().zip(vals).map(|(&c, v)| v / total[c]).collect();
            (cells, v)
        })
        .collect()
}

/// Builds the pieces T_i f for a moment-free f.
pub fn decompose(
    f: &GridFunction,
    cc: &ChainCover,
    domain: &GridDomain,
    space: &MomentSubspace,
) -> Result<Decomposition, DecompositionError> {
    if f.dim != space.dim {
        return Err(DecompositionError::DimensionMismatch { expected: space.dim, got: f.dim });
    }
    let all = domain.cells();
    let rel = relative_moments(f, &all, space);
    if rel > 1e-9 {
        return Err(DecompositionError::MomentsNotZero(rel));
    }
    let dim = f.dim;
    let grid = &domain.grid;
    let area = grid.cell_area();
    let n = cc.cubes.len();
    let pou = partition_of_unity(cc, domain);
    let mut cache = GramCache::new(domain, space);
    let w0_square = cc.cubes[0];
    // Dense accumulators, one per piece.
    let mut acc: Vec<Vec<f64>> = vec![vec![0.0; grid.len() * dim]; n];

    let add_eta = |acc: &mut Vec<f64>, bump: &Bump, coeffs: &[f64], sign: f64| {
        for (&c, &e) in bump.cells.iter().zip(&bump.values) {
            let v = space.combine(coeffs, &grid.center_of(c));
            for (k, x) in v.into_iter().enumerate() {
                acc[c * dim + k] += sign * e * x;
            }
        }
    };

    for j in 0..n {
        let (cells, xi) = &pou[j];
        // S_j f on its support.
        let s: Vec<(usize, Vec<f64>, [f64; 2])> = cells
            .iter()
            .zip(xi)
            .map(|(&c, &x)| (c, f.at(c).iter().map(|v| v * x).collect(), grid.center_of(c)))
            .collect();
        for (c, v, _) in &s {
            for (k, x) in v.iter().enumerate() {
                acc[j][c * dim + k] += x;
            }
        }
        let chain = &cc.chains[j];
        let m = chain.len() - 1;
        // Coefficients of Π_{j,l}(S_j f) for l = 0..=m.
        let mut coeffs = Vec::with_capacity(m + 1);
        let mut bumps = Vec::with_capacity(m + 1);
        for l in 0..=m {
            let region = cc.cubes[chain[l]].dilate(cc.sigma2);
            let mut mu = vec![0.0; space.len()];
            for (c, v, x) in &s {
                let (i0, j0) = grid.coords(*c);
                if !region.contains_point(i0 as f64 + 0.5, j0 as f64 + 0.5) {
                    continue;
                }
                for (o, p) in mu.iter_mut().zip(space.eval_all(x)) {
                    *o += area * v.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            let sq = if l < m { cc.overlap_balls[j][l] } else { w0_square };
            let (b, lu) = cache.get(&sq)?;
            let c = lu.solve(&DVector::from_vec(mu)).expect("nonsingular");
            coeffs.push(c.as_slice().to_vec());
            bumps.push(b.clone());
        }
        add_eta(&mut acc[j], &bumps[0], &coeffs[0], -1.0);
        for l in 1..=m {
            let i = chain[l];
            add_eta(&mut acc[i], &bumps[l - 1], &coeffs[l - 1], 1.0);
            add_eta(&mut acc[i], &bumps[l], &coeffs[l], -1.0);
        }
    }

    let pieces = acc
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            let cells = square_cells(domain, &cc.cubes[i]);
            let mut values = Vec::with_capacity(cells.len() * dim);
            for &c in &cells {
                values.extend_from_slice(&a[c * dim..(c + 1) * dim]);
            }
            Piece { cube: i, cells, values }
        })
        .collect();
    Ok(Decomposition { dim, pieces, grid: grid.clone() })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionCheck {
    /// ‖Σ T_i f − f‖₁ / ‖f‖₁.
    pub reconstruction: f64,
    /// max_i relative 𝒩-moment of T_i f.
    pub max_piece_moment: f64,
    /// ‖f‖_{L^q_w} / (Σ ‖T_i f‖^q_{L^q_w})^{1/q}.
    pub lower_ratio: f64,
    /// (Σ ‖T_i f‖^q_{L^q_w})^{1/q} / ‖f‖_{L^q_w}.
    pub upper_ratio: f64,
    /// max_i max_x |T_i f(x)| / M(1_Ω f)(x).
    pub majorant_constant: f64,
}

pub fn verify_decomposition(
    d: &Decomposition,
    f: &GridFunction,
    domain: &GridDomain,
    space: &MomentSubspace,
    q: f64,
    weight: Option<&[f64]>,
) -> DecompositionCheck {
    let cells = domain.cells();
    let total = d.sum(None);
    let f_l1 = f.lp_norm(&cells, 1.0, None).max(1e-300);
    let reconstruction = total.sub(f).lp_norm(&cells, 1.0, None) / f_l1;
    let maxf = crate::maximal_weights::maximal(f, &crate::maximal_weights::Variant::Hl).values;
    let mut max_piece_moment = 0.0f64;
    let mut sum_q = 0.0;
    let mut majorant = 0.0f64;
    for (i, p) in d.pieces.iter().enumerate() {
        let g = d.piece_function(i);
        let norm_piece = g.lp_norm(&p.cells, 1.0, None);
        if norm_piece > 0.0 {
            let mu = space.moments(&g, &p.cells);
            for (pi, m) in space.basis.iter().zip(mu) {
                let sup = p
                    .cells
                    .iter()
                    .map(|&c| crate::numerics::norm(&pi.eval(&g.grid.center_of(c))))
                    .fold(0.0, f64::max)
                    .max(1e-300);
                // Relative to the size of f on W_i, so that tiny pieces are not amplified.
                let local = f.lp_norm(&p.cells, 1.0, None).max(norm_piece);
                max_piece_moment = max_piece_moment.max(m.abs() / (local * sup));
            }
        }
        sum_q += g.lp_norm(&p.cells, q, weight).powf(q);
        for &c in &p.cells {
            let v = g.abs_at(c);
            if v > 0.0 {
                majorant = majorant.max(if maxf[c] > 0.0 { v / maxf[c] } else { f64::INFINITY });
            }
        }
    }
    let fq = f.lp_norm(&cells, q, weight);
    let sq = sum_q.powf(1.0 / q);
    DecompositionCheck {
        reconstruction,
        max_piece_moment,
        lower_ratio: fq / sq,
        upper_ratio: sq / fq,
        majorant_constant: majorant,
    }
}

//! Finite-difference assembly of 𝔸 and D^k, best Korn constants by generalized
//! eigenvalue problems, sampled constants in weighted, Lorentz and Orlicz norms,
//! Fourier-multiplier reconstruction and the intermediate-derivative inequality.

mod fourier;
mod sampled;


pub use fourier::{
    interpolation_check, multiplier_reconstruction, multiplier_reconstruction_from, InterpolationResult, MultiplierResult,
};
pub use sampled::{
    kernel_perturbed_fields, korn_constant_sampled, norm_of, orlicz_check, poincare_and_bestapprox, random_smooth_fields,
    NormKind, OrliczIndices, PoincareBestApprox, SampledKorn,
};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::decomposition::DecompositionError;
use crate::domains::{GridDomain, GridFunction};
use crate::fd;
use crate::numerics::{conjugate_gradient, dot, Csr};
use crate::poly_core::gallery::gradient;
use crate::poly_core::{rat, DiffOperator, MultiIndex, Poly, PolyError, VPolynomial};
use crate::projection::ProjectionError;
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KornError {
    #[error("no stencil-valid node in the domain")]
    DomainTooThin,
    #[error("denominator operator is not positive definite")]
    SingularPencil,
    #[error("Orlicz function fails the doubling test: {0}")]
    InvalidOrlicz(String),
    #[error("u vanishes identically")]
    ZeroDenominator,
    #[error("symbol is singular at a resolvable frequency")]
    NotElliptic,
    #[error("grid {0}x{1} is not a power-of-two box")]
    NonPowerOfTwoGrid(usize, usize),
    #[error("operator is not C-elliptic")]
    NotCElliptic,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

impl From<DecompositionError> for KornError {
    fn from(e: DecompositionError) -> Self {
        match e {
            DecompositionError::NotCElliptic => KornError::NotCElliptic,
            other => KornError::InvalidParams(other.to_string()),
        }
    }
}

/// Unknowns of a grid field: the cells carrying values and each cell's position.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dofs {
    pub cells: Vec<usize>,
    #[serde(skip)]
    index: Vec<Option<usize>>,
}

impl Dofs {
    pub fn all(domain: &GridDomain) -> Dofs {
        Dofs::from_cells(domain, domain.cells())
    }

    /// Cells at Chebyshev distance ≥ 2 from the complement; the rest is held at zero.
    pub fn dirichlet(domain: &GridDomain) -> Dofs {
        let dist = domain.distance_transform();
        Dofs::from_cells(domain, domain.cells().into_iter().filter(|&c| dist[c] >= 2).collect())
    }

    fn from_cells(domain: &GridDomain, cells: Vec<usize>) -> Dofs {
        let mut index = vec![None; domain.grid.len()];
        for (k, &c) in cells.iter().enumerate() {
            index[c] = Some(k);
        }
        Dofs { cells, index }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn position(&self, cell: usize) -> Option<usize> {
        self.index[cell]
    }

    /// Packs the dof values of u (component-interleaved).
    pub fn gather(&self, u: &GridFunction) -> Vec<f64> {
        self.cells.iter().flat_map(|&c| u.at(c).iter().copied()).collect()
    }

    pub fn scatter(&self, grid: &crate::domains::Grid, dim: usize, x: &[f64]) -> GridFunction {
        let mut u = GridFunction::zeros(grid, dim);
        for (k, &c) in self.cells.iter().enumerate() {
            u.at_mut(c).copy_from_slice(&x[k * dim..(k + 1) * dim]);
        }
        u
    }
}

/// Where rows are placed and which stencils they use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Centered stencils, rows only at cells whose full footprint lies in the domain.
    Centered,
    /// Centered where the footprint fits, second-order one-sided stencils along an
    /// axis where it does not, so boundary cells carry rows as well.
    Closed,
}

/// A sparse stencil matrix from dof values to values at the row cells.
#[derive(Clone, Debug, Serialize)]
pub struct AssembledOperator {
    #[serde(skip)]
    pub matrix: Csr,
    pub out_cells: Vec<usize>,
    pub dim_in: usize,
    pub dim_out: usize,
    pub scheme: Scheme,
    /// Stencil reach in cells.
    pub margin: u32,
}

impl AssembledOperator {
    pub fn apply(&self, dofs: &Dofs, u: &GridFunction) -> GridFunction {
        let y = self.matrix.mul_vec(&dofs.gather(u));
        let mut out = GridFunction::zeros(&u.grid, self.dim_out);
        for (k, &c) in self.out_cells.iter().enumerate() {
            out.at_mut(c).copy_from_slice(&y[k * self.dim_out..(k + 1) * self.dim_out]);
        }
        out
    }
}

/// Weights on `offsets` for d^order/dt^order, exact on polynomials of degree < offsets.len().
fn weights_1d(offsets: &[i64], order: u32) -> Vec<(i64, f64)> {
    let m = offsets.len();
    let v = DMatrix::from_fn(m, m, |q, t| (offsets[t] as f64).powi(q as i32));
    let mut rhs = DVector::zeros(m);
    rhs[order as usize] = (1..=order).map(f64::from).product::<f64>();
    let w = v.lu().solve(&rhs).expect("distinct offsets");
    offsets.iter().copied().zip(w.iter().copied()).collect()
}

/// 1-D stencil for d^order along `axis` at (i, j): centered if it fits, else forward or backward.
fn axis_stencil(domain: &GridDomain, i: i64, j: i64, axis: usize, order: u32, scheme: Scheme) -> Option<Vec<(i64, f64)>> {
    let fits = |st: &[(i64, f64)]| {
        st.iter().all(|&(o, _)| if axis == 0 { domain.inside(i + o, j) } else { domain.inside(i, j + o) })
    };
    let centered = fd::stencil_1d(order);
    if fits(&centered) {
        return Some(centered);
    }
    if scheme == Scheme::Centered || order == 0 {
        return None;
    }
    let len = order as i64 + 2;
    for sign in [1, -1] {
        let offsets: Vec<i64> = (0..len).map(|t| sign * t).collect();
        let st = weights_1d(&offsets, order);
        if fits(&st) {
            return Some(st);
        }
    }
    None
}

fn cell_stencil(domain: &GridDomain, c: usize, alpha: &MultiIndex, scheme: Scheme) -> Option<Vec<((i64, i64), f64)>> {
    let (i, j) = domain.grid.coords(c);
    let (i, j) = (i as i64, j as i64);
    let sx = axis_stencil(domain, i, j, 0, alpha.get(0), scheme)?;
    let sy = axis_stencil(domain, i, j, 1, alpha.get(1), scheme)?;
    let mut out = Vec::with_capacity(sx.len() * sy.len());
    for &(oy, wy) in &sy {
        for &(ox, wx) in &sx {
            if !domain.inside(i + ox, j + oy) {
                return None;
            }
            out.push(((ox, oy), wx * wy));
        }
    }
    Some(out)
}

/// Assembles `op` with the closed scheme on all domain cells.
pub fn assemble_fd(op: &DiffOperator, domain: &GridDomain) -> Result<AssembledOperator, KornError> {
    assemble_fd_with(op, domain, &Dofs::all(domain), Scheme::Closed)
}

/// Rows sit at cells where every ∂^α of `op` has a stencil inside the domain; domain
/// cells that are not dofs contribute zero.
pub fn assemble_fd_with(op: &DiffOperator, domain: &GridDomain, dofs: &Dofs, scheme: Scheme) -> Result<AssembledOperator, KornError> {
    if op.n != 2 {
        return Err(KornError::InvalidParams("finite differences are planar".into()));
    }
    let scale = domain.h().powi(-(op.k as i32));
    let mut out_cells = Vec::new();
    let mut rows = Vec::new();
    let mut margin = 0u32;
    for c in domain.cells() {
        let Some(stencils) = op
            .terms
            .iter()
            .map(|(a, m)| cell_stencil(domain, c, a, scheme).map(|s| (m, s)))
            .collect::<Option<Vec<_>>>()
        else {
            continue;
        };
        let (i, j) = domain.grid.coords(c);
        let mut local: Vec<Vec<(usize, f64)>> = vec![Vec::new(); op.dim_w];
        for (m, st) in &stencils {
            for &((di, dj), w) in st {
                margin = margin.max(di.unsigned_abs().max(dj.unsigned_abs()) as u32);
                let (a, b) = domain.wrap(i as i64 + di, j as i64 + dj).expect("stencil inside");
                let Some(pos) = dofs.position(domain.grid.index(a, b)) else { continue };
                for (r, row) in m.iter().enumerate() {
                    for (comp, &coef) in row.iter().enumerate() {
                        if coef != 0.0 {
                            local[r].push((pos * op.dim_v + comp, coef * w * scale));
                        }
                    }
                }
            }
        }
        out_cells.push(c);
        rows.extend(local);
    }
    if out_cells.is_empty() {
        return Err(KornError::DomainTooThin);
    }
    Ok(AssembledOperator {
        matrix: Csr::from_rows(dofs.len() * op.dim_v, rows),
        out_cells,
        dim_in: op.dim_v,
        dim_out: op.dim_w,
        scheme,
        margin,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    /// Dense up to `DENSE_LIMIT` unknowns, Lanczos beyond.
    Auto,
    Dense,
    Lanczos,
}

pub const DENSE_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KornOptions {
    pub dirichlet: bool,
    pub method: EigenMethod,
    pub scheme: Scheme,
    pub seed: u64,
}

impl Default for KornOptions {
    fn default() -> Self {
        KornOptions { dirichlet: false, method: EigenMethod::Auto, scheme: Scheme::Closed, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessNorms {
    pub l2: f64,
    pub grad_k: f64,
    pub a: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KornConstant {
    pub h: f64,
    /// max ‖D^k u‖² / (diam^{−2k}‖u‖² + ‖𝔸u‖²).
    pub c: f64,
    /// The maximizer's quotient with ‖u‖² unscaled.
    pub witness_unscaled: f64,
    /// The maximizer's own quotient under the scaled normalization.
    pub witness_quotient: f64,
    pub dofs: usize,
    pub method: EigenMethod,
    pub witness_norms: WitnessNorms,
    #[serde(skip)]
    pub witness: GridFunction,
}

/// The pencil (N, M) with N = h² GᵀG and M = h²(diam^{−2k} I + AᵀA).
struct Pencil {
    g: Csr,
    a: Csr,
    shift: f64,
    area: f64,
    n: usize,
}

impl Pencil {
    fn apply_n(&self, x: &[f64]) -> Vec<f64> {
        self.g.mul_t_vec(&self.g.mul_vec(x)).into_iter().map(|v| v * self.area).collect()
    }

    fn apply_m(&self, x: &[f64]) -> Vec<f64> {
        let ata = self.a.mul_t_vec(&self.a.mul_vec(x));
        x.iter().zip(ata).map(|(xi, a)| self.area * (self.shift * xi + a)).collect()
    }

    fn quotient(&self, x: &[f64], shift: f64) -> f64 {
        let num = dot(x, &self.apply_n(x));
        let ax = self.a.mul_vec(x);
        num / (self.area * (shift * dot(x, x) + dot(&ax, &ax)))
    }

    fn dense(&self) -> Result<(f64, Vec<f64>), KornError> {
        let nmat = self.g.gram_dense() * self.area;
        let mut mmat = self.a.gram_dense();
        for i in 0..self.n {
            mmat[(i, i)] += self.shift;
        }
        mmat *= self.area;
        let chol = mmat.cholesky().ok_or(KornError::SingularPencil)?;
        let l = chol.l();
        // C = L⁻¹ N L⁻ᵀ
        let y = l.solve_lower_triangular(&nmat).ok_or(KornError::SingularPencil)?;
        let c = l.solve_lower_triangular(&y.transpose()).ok_or(KornError::SingularPencil)?;
        let c = (&c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(c);
        let (imax, lmax) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let yv: DVector<f64> = eig.eigenvectors.column(imax).into_owned();
        let x = l.transpose().solve_upper_triangular(&yv).ok_or(KornError::SingularPencil)?;
        Ok((lmax, x.iter().copied().collect()))
    }

    /// Lanczos for M⁻¹N in the M-inner product, full reorthogonalization, inner CG solves.
    fn lanczos(&self, seed: u64) -> Result<(f64, Vec<f64>), KornError> {
        let n = self.n;
        let max_steps = 400.min(n);
        let mut r = rng::seeded(seed);
        let mut v: Vec<f64> = (0..n).map(|_| r.random::<f64>() - 0.5).collect();
        let mv = self.apply_m(&v);
        let nv = dot(&v, &mv).sqrt();
        if !(nv > 0.0) {
            return Err(KornError::SingularPencil);
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let mut basis: Vec<Vec<f64>> = vec![v];
        let mut mbasis: Vec<Vec<f64>> = vec![mv.into_iter().map(|x| x / nv).collect()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let m_apply = |x: &[f64]| self.apply_m(x);
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for j in 0..max_steps {
            let z = self.apply_n(&basis[j]);
            alpha.push(dot(&z, &basis[j]));
            let (mut w, _) = conjugate_gradient(&m_apply, &z, None, 1e-13, 20 * n);
            for _ in 0..2 {
                for (b, mb) in basis.iter().zip(&mbasis) {
                    let c = dot(&w, mb);
                    w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
                }
            }
            let mw = self.apply_m(&w);
            let b = dot(&w, &mw).max(0.0).sqrt();
            let steps = alpha.len();
            if steps % 5 == 0 || b <= 1e-14 || j + 1 == max_steps {
                let t = DMatrix::from_fn(steps, steps, |a, c| {
                    if a == c {
                        alpha[a]
                    } else if a + 1 == c {
                        beta[a]
                    } else if c + 1 == a {
                        beta[c]
                    } else {
                        0.0
                    }
                });
                let eig = SymmetricEigen::new(t);
                let (imax, theta) = eig
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
                let s = eig.eigenvectors.column(imax);
                let resid = b * s[steps - 1].abs();
                let mut x = vec![0.0; n];
                for (k, bk) in basis.iter().enumerate() {
                    x.iter_mut().zip(bk).for_each(|(xi, bi)| *xi += s[k] * bi);
                }
                best = (theta, x);
                if resid <= 1e-11 * theta.abs() || b <= 1e-14 {
                    break;
                }
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
            mbasis.push(mw.iter().map(|x| x / b).collect());
        }
        Ok(best)
    }
}

/// Largest generalized Rayleigh quotient ‖D^k u‖² / (diam^{−2k}‖u‖² + ‖𝔸u‖²) over grid fields.
pub fn korn_constant_p2(op: &DiffOperator, domain: &GridDomain, opts: &KornOptions) -> Result<KornConstant, KornError> {
    let dofs = if opts.dirichlet { Dofs::dirichlet(domain) } else { Dofs::all(domain) };
    if dofs.is_empty() {
        return Err(KornError::DomainTooThin);
    }
    let g = assemble_fd_with(&gradient(op.n, op.dim_v, op.k), domain, &dofs, opts.scheme)?;
    let a = assemble_fd_with(op, domain, &dofs, opts.scheme)?;
    let shift = domain.diam.powi(-2 * op.k as i32);
    let n = dofs.len() * op.dim_v;
    let pencil = Pencil { g: g.matrix, a: a.matrix, shift, area: domain.grid.cell_area(), n };
    let method = match opts.method {
        EigenMethod::Auto if n <= DENSE_LIMIT => EigenMethod::Dense,
        EigenMethod::Auto => EigenMethod::Lanczos,
        m => m,
    };
    let (c, x) = match method {
        EigenMethod::Dense => pencil.dense()?,
        _ => pencil.lanczos(opts.seed)?,
    };
    let witness = dofs.scatter(&domain.grid, op.dim_v, &x);
    let area = domain.grid.cell_area();
    let ax = pencil.a.mul_vec(&x);
    let gx = pencil.g.mul_vec(&x);
    let witness_norms = WitnessNorms {
        l2: (area * dot(&x, &x)).sqrt(),
        grad_k: (area * dot(&gx, &gx)).sqrt(),
        a: (area * dot(&ax, &ax)).sqrt(),
    };
    Ok(KornConstant {
        h: domain.h(),
        c,
        witness_unscaled: pencil.quotient(&x, 1.0),
        witness_quotient: pencil.quotient(&x, shift),
        dofs: dofs.len(),
        method,
        witness_norms,
        witness,
    })
}

/// (Re, Im) of (z − c)^m as a planar vector field.
pub fn holomorphic_field(m: u32, center: [i64; 2], denom: i64) -> VPolynomial {
    let x = Poly::var(2, 0).add(&Poly::constant(2, rat(-center[0], denom)));
    let y = Poly::var(2, 1).add(&Poly::constant(2, rat(-center[1], denom)));
    let mut re = Poly::constant(2, rat(1, 1));
    let mut im = Poly::zero(2);
    for _ in 0..m {
        let nre = re.mul(&x).add(&im.mul(&y).scale(&rat(-1, 1)));
        let nim = re.mul(&y).add(&im.mul(&x));
        re = nre;
        im = nim;
    }
    VPolynomial::from_components(&[re, im])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolomorphicRow {
    pub m: u32,
    /// max |𝔸u_m| over the domain cells, from the exact action.
    pub a_residual: f64,
    /// ‖D^k u_m‖² / (diam^{−2k}‖u_m‖² + ‖𝔸u_m‖²) by midpoint sums of exact values.
    pub quotient: f64,
}

/// Rayleigh quotients of the fields (Re, Im)(z − c)^m for m in `ms`.
pub fn holomorphic_quotients(op: &DiffOperator, domain: &GridDomain, ms: &[u32], center: [i64; 2], denom: i64) -> Result<Vec<HolomorphicRow>, KornError> {
    if op.n != 2 || op.dim_v != 2 {
        return Err(KornError::InvalidParams("holomorphic fields are planar vector fields".into()));
    }
    let idx = fd::gradient_indices(2, op.k);
    let cells = domain.cells();
    let area = domain.grid.cell_area();
    let shift = domain.diam.powi(-2 * op.k as i32);
    ms.iter()
        .map(|&m| {
            let u = holomorphic_field(m, center, denom);
            let au = op.apply_to_polynomial(&u)?.to_f64();
            let uf = u.to_f64();
            let derivs: Vec<(f64, _)> = idx.iter().map(|(a, w)| (*w, uf.derivative_multi(a))).collect();
            let (mut num, mut l2, mut a2, mut res) = (0.0, 0.0, 0.0, 0.0f64);
            for &c in &cells {
                let x = domain.grid.center_of(c);
                for (w, d) in &derivs {
                    num += d.eval(&x).iter().map(|v| (w * v).powi(2)).sum::<f64>();
                }
                l2 += uf.eval(&x).iter().map(|v| v * v).sum::<f64>();
                let av = au.eval(&x);
                a2 += av.iter().map(|v| v * v).sum::<f64>();
                res = av.iter().fold(res, |r, v| r.max(v.abs()));
            }
            Ok(HolomorphicRow { m, a_residual: res, quotient: num * area / (area * (shift * l2 + a2)) })
        })
        .collect()
}

/// Exponent vector helper for callers building multi-indices.
pub fn multi_index(e: &[u32]) -> MultiIndex {
    MultiIndex::new(e.to_vec())
}

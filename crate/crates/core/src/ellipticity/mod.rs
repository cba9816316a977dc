//! Ellipticity and ℂ-ellipticity decisions, homogeneous nullspaces Z_ℓ, complex
//! witnesses and the cancellation image intersection.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{nelder_mead, sphere_points};
use crate::poly_core::exact::{nullspace, Rational};
use crate::poly_core::operator::ComplexRational;
use crate::poly_core::{DiffOperator, VPolynomial};
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticityError {
    #[error("operator is not elliptic (symbol degenerates at real ξ = {0:?})")]
    NotElliptic(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CElliptic,
    NotCElliptic,
    Undecided,
}

/// Result of the real-sphere minimization.
#[derive(Clone, Debug)]
pub struct RealEllipticity {
    pub elliptic: bool,
    pub min_singular_value: f64,
    pub argmin: Vec<f64>,
}

/// A complex frequency ξ and vector v with 𝔸[ξ]v ≈ 0, normalized so that the
/// largest-modulus entries of ξ and v equal 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    pub xi: Vec<[f64; 2]>,
    pub v: Vec<[f64; 2]>,
    /// ‖𝔸[ξ/|ξ|]v‖/‖v‖ evaluated in exact rational arithmetic.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct WitnessSearch {
    pub witness: Option<Witness>,
    /// Smallest σ_min(𝔸[ξ]) seen over the complex unit sphere.
    pub best_sigma: f64,
    pub best_xi: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct NullspaceProfile {
    pub per_degree: Vec<(u32, Vec<VPolynomial>)>,
    pub verdict: Verdict,
    pub deg_p: Option<u32>,
    pub witness: Option<Witness>,
    /// Best complex σ_min when a witness search ran.
    pub witness_infimum: Option<f64>,
}

impl NullspaceProfile {
    pub fn kernel_dims(&self) -> Vec<usize> {
        self.per_degree.iter().map(|(_, b)| b.len()).collect()
    }

    pub fn total_kernel_dim(&self) -> usize {
        self.kernel_dims().iter().sum()
    }

    /// Kernel basis of degree ≤ deg_p − 1, grouped by increasing degree.
    pub fn kernel_basis(&self) -> Vec<VPolynomial> {
        self.per_degree.iter().flat_map(|(_, b)| b.iter().cloned()).collect()
    }

    /// Verdict block of the report schema.
    pub fn verdict_block(&self) -> serde_json::Value {
        serde_json::json!({
            "verdict": self.verdict,
            "deg_p": self.deg_p,
            "kernel_dims": self.kernel_dims(),
            "witness": self.witness,
        })
    }
}

#[derive(Clone, Debug)]
pub struct CEllipticityOptions {
    pub max_degree: u32,
    pub restarts: usize,
    pub witness_tol: f64,
    pub seed: u64,
}

impl Default for CEllipticityOptions {
    fn default() -> Self {
        CEllipticityOptions { max_degree: 20, restarts: 8, witness_tol: 1e-8, seed: 0 }
    }
}

/// Smallest singular value of a complex matrix and the matching right singular vector.
pub fn sigma_min(a: &DMatrix<Complex64>) -> (f64, DVector<Complex64>) {
    let (rows, cols) = a.shape();
    let m = if rows < cols {
        let mut p = DMatrix::<Complex64>::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let (idx, s) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, s)| (i, *s))
        .expect("nonempty");
    let v = v_t.row(idx).transpose().map(|c| c.conj());
    (s, v)
}

fn sigma_min_real(op: &DiffOperator, xi: &[f64]) -> f64 {
    let s = op.symbol_real(xi);
    if op.dim_w < op.dim_v {
        return 0.0;
    }
    s.svd(false, false).singular_values.min()
}

/// Minimizes σ_min(𝔸[ξ]) over the real unit sphere.
pub fn is_elliptic(op: &DiffOperator, samples: usize, tol: f64) -> RealEllipticity {
    let samples = samples.max(100);
    let pts = sphere_points(samples, op.n);
    let mut scored: Vec<(f64, Vec<f64>)> = pts.into_iter().map(|p| (sigma_min_real(op, &p), p)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = scored[0].clone();
    for (_, start) in scored.iter().take(5) {
        let mut f = |x: &[f64]| {
            let r = crate::numerics::norm(x);
            if r < 1e-12 {
                return f64::INFINITY;
            }
            let u: Vec<f64> = x.iter().map(|v| v / r).collect();
            sigma_min_real(op, &u)
        };
        let (x, v) = nelder_mead(&mut f, start, 0.05, 400, 1e-15);
        if v < best.0 {
            let r = crate::numerics::norm(&x);
            best = (v, x.iter().map(|c| c / r).collect());
        }
    }
    RealEllipticity { elliptic: best.0 > tol, min_singular_value: best.0, argmin: best.1 }
}

/// Exact basis of Z_ℓ = ker 𝔸 ∩ 𝒫_ℓ^h(ℝⁿ;V).
pub fn kernel_homogeneous(op: &DiffOperator, degree: u32) -> Vec<VPolynomial> {
    let (mat, idx) = op.coefficient_matrix(degree);
    let cols = idx.len() * op.dim_v;
    let basis = if degree < op.k {
        (0..cols)
            .map(|c| {
                let mut v = vec![Rational::zero(); cols];
                v[c] = Rational::from_integer(1.into());
                v
            })
            .collect()
    } else {
        nullspace(&mat, cols)
    };
    basis
        .iter()
        .map(|x| VPolynomial::from_coordinates(op.n, op.dim_v, &idx, x))
        .collect()
}

pub fn c_ellipticity(op: &DiffOperator, max_degree: u32) -> NullspaceProfile {
    c_ellipticity_with(op, &CEllipticityOptions { max_degree, ..Default::default() })
}

/// Computes Z_ℓ for increasing ℓ. ∂_j maps Z_{ℓ+1} into Z_ℓ and the partials are
/// jointly injective in positive degree, so the first empty Z_ℓ ends the search.
pub fn c_ellipticity_with(op: &DiffOperator, opts: &CEllipticityOptions) -> NullspaceProfile {
    let mut per_degree = Vec::new();
    for l in 0..=opts.max_degree.max(op.k) {
        let basis = kernel_homogeneous(op, l);
        if basis.is_empty() {
            return NullspaceProfile {
                per_degree,
                verdict: Verdict::CElliptic,
                deg_p: Some(l),
                witness: None,
                witness_infimum: None,
            };
        }
        per_degree.push((l, basis));
    }
    let search = complex_witness_search(op, opts.restarts, opts.witness_tol, opts.seed);
    let verdict = if search.witness.is_some() { Verdict::NotCElliptic } else { Verdict::Undecided };
    NullspaceProfile {
        per_degree,
        verdict,
        deg_p: None,
        witness: search.witness,
        witness_infimum: Some(search.best_sigma),
    }
}

/// ξ from 2n reals, unit-normalized, with the largest-modulus entry made real positive.
fn complex_point(x: &[f64], n: usize) -> Option<Vec<Complex64>> {
    let xi: Vec<Complex64> = (0..n).map(|j| Complex64::new(x[j], x[n + j])).collect();
    let r = xi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if r < 1e-12 {
        return None;
    }
    Some(fix_phase(&xi.iter().map(|c| c / r).collect::<Vec<_>>()))
}

fn fix_phase(v: &[Complex64]) -> Vec<Complex64> {
    let big = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
    if big.norm() == 0.0 {
        return v.to_vec();
    }
    let ph = big.conj() / big.norm();
    v.iter().map(|c| c * ph).collect()
}

/// Scales so that the largest-modulus entry is exactly 1.
fn unit_max(v: &[Complex64]) -> Vec<Complex64> {
    let big = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
    let mut out: Vec<Complex64> = v.iter().map(|c| c / big).collect();
    for c in out.iter_mut() {
        // Snap round-off so that exact witnesses such as (1, i) stay exact.
        if c.re.abs() < 1e-14 {
            c.re = 0.0;
        }
        if c.im.abs() < 1e-14 {
            c.im = 0.0;
        }
    }
    let i = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    out[i] = Complex64::new(1.0, 0.0);
    out
}

/// Rounds parts lying within 1e−12 of an integer.
fn snap(v: &[Complex64]) -> Vec<Complex64> {
    let r = |x: f64| if (x - x.round()).abs() < 1e-12 { x.round() } else { x };
    v.iter().map(|c| Complex64::new(r(c.re), r(c.im))).collect()
}

fn to_exact(c: &Complex64) -> ComplexRational {
    ComplexRational::new(
        BigRational::from_float(c.re).expect("finite"),
        BigRational::from_float(c.im).expect("finite"),
    )
}

fn exact_norm_sqr(v: &[ComplexRational]) -> f64 {
    let s = v
        .iter()
        .fold(Rational::zero(), |acc, c| acc + &c.re * &c.re + &c.im * &c.im);
    crate::poly_core::to_f64(&s)
}

/// Residual ‖𝔸[ξ/|ξ|]v‖/‖v‖ computed from the exact rational values of the floats.
pub fn exact_residual(op: &DiffOperator, xi: &[Complex64], v: &[Complex64]) -> f64 {
    let xe: Vec<ComplexRational> = xi.iter().map(to_exact).collect();
    let ve: Vec<ComplexRational> = v.iter().map(to_exact).collect();
    let out = op.symbol_apply_exact(&xe, &ve);
    let num = exact_norm_sqr(&out).sqrt();
    let xin = exact_norm_sqr(&xe).sqrt();
    let vn = exact_norm_sqr(&ve).sqrt();
    num / (xin.powi(op.k as i32) * vn)
}

fn symbol_derivative(op: &DiffOperator, xi: &[Complex64], v: &DVector<Complex64>, j: usize) -> DVector<Complex64> {
    let mut out = DVector::<Complex64>::zeros(op.dim_w);
    for (a, m) in &op.terms {
        let aj = a.get(j);
        if aj == 0 {
            continue;
        }
        let mut c = Complex64::new(aj as f64, 0.0);
        for (l, (x, &e)) in xi.iter().zip(a.entries()).enumerate() {
            let e = if l == j { e - 1 } else { e };
            c *= x.powu(e);
        }
        for (i, row) in m.iter().enumerate() {
            for (jj, w) in row.iter().enumerate() {
                out[i] += c * w * v[jj];
            }
        }
    }
    out
}

/// Gauss–Newton on F(ξ, v) = (𝔸[ξ]v, ⟨ξ₀,ξ⟩−1, ⟨v₀,v⟩−1).
fn newton_polish(op: &DiffOperator, xi0: &[Complex64], v0: &DVector<Complex64>, steps: usize) -> (Vec<Complex64>, DVector<Complex64>) {
    let n = op.n;
    let dv = op.dim_v;
    let mut xi = xi0.to_vec();
    let mut v = v0.clone();
    for _ in 0..steps {
        let xref = xi.clone();
        let vref = v.clone();
        let a = op.symbol(&xi).expect("dimension checked").value;
        let f_top = &a * &v;
        let mut f = DVector::<Complex64>::zeros(op.dim_w + 2);
        f.rows_mut(0, op.dim_w).copy_from(&f_top);
        let sx: Complex64 = xref.iter().zip(&xi).map(|(r, x)| r.conj() * x).sum();
        let sv: Complex64 = vref.iter().zip(v.iter()).map(|(r, x)| r.conj() * x).sum();
        f[op.dim_w] = sx - 1.0;
        f[op.dim_w + 1] = sv - 1.0;
        let mut j = DMatrix::<Complex64>::zeros(op.dim_w + 2, n + dv);
        for l in 0..n {
            let col = symbol_derivative(op, &xi, &v, l);
            j.view_mut((0, l), (op.dim_w, 1)).copy_from(&col);
            j[(op.dim_w, l)] = xref[l].conj();
        }
        j.view_mut((0, n), (op.dim_w, dv)).copy_from(&a);
        for l in 0..dv {
            j[(op.dim_w + 1, n + l)] = vref[l].conj();
        }
        let Ok(pinv) = j.pseudo_inverse(1e-13) else { break };
        let step = pinv * f;
        for l in 0..n {
            xi[l] -= step[l];
        }
        for l in 0..dv {
            v[l] -= step[n + l];
        }
        if step.norm() < 1e-16 {
            break;
        }
    }
    (xi, v)
}

/// Searches the complex unit sphere for ξ with σ_min(𝔸[ξ]) ≈ 0.
pub fn complex_witness_search(op: &DiffOperator, restarts: usize, tol: f64, seed: u64) -> WitnessSearch {
    let n = op.n;
    let mut rng = rng::seeded(seed);
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    let objective = |x: &[f64]| -> f64 {
        match complex_point(x, n) {
            Some(xi) => sigma_min(&op.symbol(&xi).expect("n matches").value).0,
            None => f64::INFINITY,
        }
    };
    for _ in 0..restarts.max(1) {
        let x0: Vec<f64> = (0..2 * n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut f = |x: &[f64]| objective(x);
        let (x, _) = nelder_mead(&mut f, &x0, 0.3, 3000, 1e-14);
        // Restart the simplex once from the optimum to escape early collapse.
        let (x, val) = nelder_mead(&mut f, &x, 0.05, 3000, 1e-15);
        let xi = complex_point(&x, n).unwrap_or_else(|| vec![Complex64::new(1.0, 0.0); n]);
        let better = match &best {
            None => true,
            Some((b, bx)) => val < *b || (val == *b && lex_less(&xi, bx)),
        };
        if better {
            best = Some((val, xi));
        }
    }
    let (best_sigma, best_xi) = best.expect("at least one restart");
    let mut witness = None;
    if best_sigma < 1e-2 {
        let (_, v) = sigma_min(&op.symbol(&best_xi).expect("n matches").value);
        let (xi, v) = newton_polish(op, &best_xi, &v, 30);
        let xi = unit_max(&xi);
        let vv: Vec<Complex64> = unit_max(v.as_slice());
        let (xs, vs) = (snap(&xi), snap(&vv));
        let (r0, r1) = (exact_residual(op, &xi, &vv), exact_residual(op, &xs, &vs));
        let (xi, vv, residual) = if r1 <= r0 { (xs, vs, r1) } else { (xi, vv, r0) };
        if residual <= tol {
            witness = Some(Witness {
                xi: xi.iter().map(|c| [c.re, c.im]).collect(),
                v: vv.iter().map(|c| [c.re, c.im]).collect(),
                residual,
            });
        }
    }
    WitnessSearch { witness, best_sigma, best_xi }
}

fn lex_less(a: &[Complex64], b: &[Complex64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            _ => {}
        }
    }
    false
}

/// Result of the sampled image intersection ∩_ξ 𝔸[ξ](V).
#[derive(Clone, Debug)]
pub struct ImageIntersection {
    pub dimension: usize,
    /// Orthonormal basis vectors of the intersection in W.
    pub basis: Vec<Vec<f64>>,
    pub samples: Vec<Vec<f64>>,
}

fn column_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-10 * smax.max(1e-300))
        .collect();
    DMatrix::from_fn(a.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

fn intersect(q1: &DMatrix<f64>, q2: &DMatrix<f64>) -> DMatrix<f64> {
    if q1.ncols() == 0 || q2.ncols() == 0 {
        return DMatrix::zeros(q1.nrows(), 0);
    }
    let c = q1.transpose() * q2;
    let svd = c.svd(true, false);
    let u = svd.u.expect("requested U");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1.0 - 1e-9)
        .collect();
    let coeffs = DMatrix::from_fn(q1.ncols(), keep.len(), |r, c| u[(r, keep[c])]);
    q1 * coeffs
}

pub fn cancellation_image_intersection(op: &DiffOperator, samples: usize) -> Result<ImageIntersection, EllipticityError> {
    let ell = is_elliptic(op, 200, 1e-6);
    if !ell.elliptic {
        return Err(EllipticityError::NotElliptic(ell.argmin));
    }
    let pts = sphere_points(samples.max(op.n + 1), op.n);
    let mut q = column_space(&op.symbol_real(&pts[0]));
    let mut used = vec![pts[0].clone()];
    let mut stable = 0;
    for p in pts.iter().skip(1) {
        let before = q.ncols();
        q = intersect(&q, &column_space(&op.symbol_real(p)));
        used.push(p.clone());
        if q.ncols() == before {
            stable += 1;
            if stable >= 10 {
                break;
            }
        } else {
            stable = 0;
        }
    }
    let basis = (0..q.ncols()).map(|c| q.column(c).iter().copied().collect()).collect();
    Ok(ImageIntersection { dimension: q.ncols(), basis, samples: used })
}

/// Witness entries as complex numbers.
pub fn witness_to_complex(w: &[[f64; 2]]) -> Vec<Complex64> {
    w.iter().map(|c| Complex64::new(c[0], c[1])).collect()
}

#[cfg(test)]
mod tests;

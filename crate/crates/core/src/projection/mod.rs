//! Averaged Taylor polynomials and the nullspace projection Π_𝔸^B.
//!
//! Everything is built on the unit ball in local coordinates z = (x − c)/r and
//! transported to B(c, r); inner products are mean values over the ball, so all
//! polynomial-space linear algebra stays rational.

mod grid;
mod kernel;

pub use grid::{
    apply_projection_grid, averaged_taylor_grid, poincare_ratio, sample, stability_ratio, GridProjection, GridTaylor,
};
pub use kernel::{maz_kernel, maz_representation, riesz_bound_check, riesz_potential, RieszCheck};

use num_traits::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::ellipticity::{kernel_homogeneous, NullspaceProfile, Verdict};
use crate::poly_core::exact::{inverse, is_identity, matmul, matvec, nullspace, to_f64_matrix, transpose, RMatrix};
use crate::poly_core::moments::unit_moment_ratio;
use crate::poly_core::{
    homogeneous_indices, indices_up_to, rationalize, BallWeight, DiffOperator, MultiIndex, Poly, Rational,
    VPolynomial,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("operator is not C-elliptic: the nullspace is infinite-dimensional")]
    NotCElliptic,
    #[error("singular Gram matrix")]
    SingularGram,
    #[error("ball is not covered by grid samples")]
    BallOutsideGrid,
    #[error("kernel evaluated at coincident points")]
    CoincidentPoints,
    #[error("𝔸u vanishes but u is not in the kernel")]
    DegenerateDenominator,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bump exponent {rho} is below the Taylor order {m}; the grid route needs ρ ≥ m")]
    WeightTooRough { rho: u32, m: u32 },
    #[error("malformed projection JSON: {0}")]
    Malformed(String),
}

/// Ball B(center, radius) carrying the weight ω = c_ρ (1 − |y−c|²/r²)^ρ.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub rho: u32,
}

impl BallSpec {
    pub fn new(center: Vec<f64>, radius: f64, rho: u32) -> BallSpec {
        assert!(radius > 0.0, "radius must be positive");
        BallSpec { center, radius, rho }
    }

    fn center_exact(&self) -> Vec<Rational> {
        self.center.iter().map(|&c| rationalize(c)).collect()
    }

    fn radius_exact(&self) -> Rational {
        rationalize(self.radius)
    }

    /// p(x) ↦ p(c + r z).
    pub fn to_local(&self, p: &VPolynomial) -> VPolynomial {
        p.affine_pullback(&self.center_exact(), &self.radius_exact())
    }

    /// q(z) ↦ q((x − c)/r).
    pub fn to_global(&self, q: &VPolynomial) -> VPolynomial {
        let r = self.radius_exact();
        let inv = Rational::one() / &r;
        let c: Vec<Rational> = self.center_exact().iter().map(|c| -(c / &r)).collect();
        q.affine_pullback(&c, &inv)
    }

    /// Local coordinates of a point.
    pub fn local(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, c)| (a - c) / self.radius).collect()
    }

    /// ω at a physical point.
    pub fn omega(&self, x: &[f64]) -> f64 {
        let n = self.center.len();
        let z = self.local(x);
        let s: f64 = z.iter().map(|v| v * v).sum();
        if s >= 1.0 {
            return 0.0;
        }
        let mass = crate::poly_core::unit_ball_volume(n)
            * crate::poly_core::to_f64(&unit_moment_ratio(&MultiIndex::zero(n), BallWeight::Bump(self.rho)));
        (1.0 - s).powi(self.rho as i32) / (mass * self.radius.powi(n as i32))
    }
}

/// Normalized moment ∫ ω z^γ with ∫ ω = 1 on the unit ball.
fn bump_moment(gamma: &MultiIndex, rho: u32) -> Rational {
    crate::poly_core::moments::normalized_unit_moment(gamma, BallWeight::Bump(rho))
}

/// Mean value of z^γ over the unit ball.
fn flat_mean(gamma: &MultiIndex) -> Rational {
    unit_moment_ratio(gamma, BallWeight::Flat)
}

/// ∫ p ω for a scalar polynomial on the unit ball (normalized ω).
fn integrate_bump(p: &Poly, rho: u32) -> Rational {
    p.coeffs.iter().fold(Rational::zero(), |acc, (a, c)| acc + c * bump_moment(a, rho))
}

/// 𝕋_m u on the unit ball: Σ_{|α|≤m} (1/α!) ∫ ∂^α u(y) (z − y)^α ω(y) dy.
pub fn averaged_taylor_unit(u: &VPolynomial, m: u32, rho: u32) -> VPolynomial {
    let n = u.n;
    let mut out = VPolynomial::zero(n, u.dim);
    for alpha in indices_up_to(n, m) {
        let d = u.derivative_multi(&alpha);
        if d.is_zero() {
            continue;
        }
        let comps = d.components();
        for beta in indices_up_to(n, alpha.order()) {
            let Some(gamma) = alpha.checked_sub(&beta) else { continue };
            // C(α,β)/α! (−1)^{|γ|} = (−1)^{|γ|}/(β! γ!).
            let mut coef = Rational::one()
                / Rational::from_integer(beta.factorial() * gamma.factorial());
            if gamma.order() % 2 == 1 {
                coef = -coef;
            }
            let mono = Poly::monomial(gamma.clone(), Rational::one());
            for (i, p) in comps.iter().enumerate() {
                let v = integrate_bump(&p.mul(&mono), rho);
                if !v.is_zero() {
                    out.add_term(beta.clone(), i, &coef * v);
                }
            }
        }
    }
    out
}

/// 𝕋_m^B u for a polynomial u, exact.
pub fn averaged_taylor(u: &VPolynomial, m: u32, ball: &BallSpec) -> VPolynomial {
    ball.to_global(&averaged_taylor_unit(&ball.to_local(u), m, ball.rho))
}

/// Polynomials q_β with 𝕋_m u(z) = Σ_β z^β ∫_{B₁} u q_β / ∫_{B₁} (1−|y|²)^ρ, obtained by
/// moving the derivatives of the averaged Taylor formula onto ω(y)(z−y)^α. The
/// boundary terms vanish only when ρ ≥ m.
pub fn taylor_kernels(n: usize, m: u32, rho: u32) -> Vec<(MultiIndex, Poly)> {
    let mut b = Poly::constant(n, Rational::one());
    for j in 0..n {
        let mut e = vec![0; n];
        e[j] = 2;
        b.add_term(MultiIndex::new(e), -Rational::one());
    }
    let bump = b.pow(rho);
    indices_up_to(n, m)
        .into_iter()
        .map(|beta| {
            let mut q = Poly::zero(n);
            for alpha in indices_up_to(n, m) {
                let Some(gamma) = alpha.checked_sub(&beta) else { continue };
                // ((−1)^{|α|}/(β!γ!)) ∂^α[(−y)^γ b(y)]
                let mut coef = Rational::one() / Rational::from_integer(beta.factorial() * gamma.factorial());
                if (alpha.order() + gamma.order()) % 2 == 1 {
                    coef = -coef;
                }
                let inner = Poly::monomial(gamma, Rational::one()).mul(&bump);
                q = q.add(&inner.derivative_multi(&alpha).scale(&coef));
            }
            (beta, q)
        })
        .collect()
}

/// Kernel route for 𝕋_m on the unit ball, exact on polynomials.
pub fn averaged_taylor_unit_kernel(u: &VPolynomial, m: u32, rho: u32) -> VPolynomial {
    let n = u.n;
    let mass = unit_moment_ratio(&MultiIndex::zero(n), BallWeight::Bump(rho));
    let comps = u.components();
    let mut out = VPolynomial::zero(n, u.dim);
    for (beta, q) in taylor_kernels(n, m, rho) {
        for (i, p) in comps.iter().enumerate() {
            let prod = p.mul(&q);
            let v = prod.coeffs.iter().fold(Rational::zero(), |acc, (a, c)| acc + c * flat_mean(a)) / &mass;
            if !v.is_zero() {
                out.add_term(beta.clone(), i, v);
            }
        }
    }
    out
}

/// L²(B₁) mean inner product of two V-valued polynomials.
pub fn mean_inner(p: &VPolynomial, q: &VPolynomial) -> Rational {
    let mut s = Rational::zero();
    for (a, u) in &p.coeffs {
        for (b, v) in &q.coeffs {
            let dot = u.iter().zip(v).fold(Rational::zero(), |acc, (x, y)| acc + x * y);
            if !dot.is_zero() {
                s += dot * flat_mean(&a.add(b));
            }
        }
    }
    s
}

/// Gram matrix of the monomial basis (x^α e_i) in the given order.
fn monomial_gram(indices: &[MultiIndex], dim: usize) -> RMatrix {
    let size = indices.len() * dim;
    let mut g = vec![vec![Rational::zero(); size]; size];
    for (a, ia) in indices.iter().enumerate() {
        for (b, ib) in indices.iter().enumerate() {
            let v = flat_mean(&ia.add(ib));
            if v.is_zero() {
                continue;
            }
            for i in 0..dim {
                g[a * dim + i][b * dim + i] = v.clone();
            }
        }
    }
    g
}

/// The projection Π_𝔸^B = Π̃_𝔸 𝕋_{m−1}^B together with its construction data.
#[derive(Clone, Debug)]
pub struct ProjectionOperator {
    pub op: DiffOperator,
    pub ball: BallSpec,
    pub m: u32,
    /// Monomials of 𝒫_{m−1}, the coordinate basis of `pi_matrix`.
    pub indices: Vec<MultiIndex>,
    /// ψ_j in local coordinates: kernel bases Z_0,…,Z_{m−1} first, then 𝒲_0,…,𝒲_{m−1}.
    pub psi_basis: Vec<VPolynomial>,
    pub kernel_count: usize,
    /// ψ_j* = Σ_i dual_coeffs[j][i] ψ_i.
    pub dual_coeffs: RMatrix,
    /// Correctors ξ_ℓ ∈ 𝒲, one per 𝒲-basis element, in local coordinates.
    pub xi_polys: Vec<VPolynomial>,
    /// Π on local monomial coordinates of 𝒫_{m−1}.
    pub pi_matrix: RMatrix,
    pi_f64: Vec<Vec<f64>>,
}

/// Builds Π_𝔸^B with m = deg_𝒫(𝔸) (or `m_override` ≥ deg_𝒫).
pub fn build_projection(
    op: &DiffOperator,
    ball: &BallSpec,
    profile: &NullspaceProfile,
    m_override: Option<u32>,
) -> Result<ProjectionOperator, ProjectionError> {
    if profile.verdict != Verdict::CElliptic {
        return Err(ProjectionError::NotCElliptic);
    }
    if ball.center.len() != op.n {
        return Err(ProjectionError::DimensionMismatch { expected: op.n, got: ball.center.len() });
    }
    let deg_p = profile.deg_p.ok_or(ProjectionError::NotCElliptic)?;
    let m = m_override.unwrap_or(deg_p).max(deg_p).max(1);
    let n = op.n;
    let dim = op.dim_v;
    let indices = indices_up_to(n, m - 1);

    let mut kernel = Vec::new();
    let mut complement = Vec::new();
    for l in 0..m {
        let z = match profile.per_degree.iter().find(|(d, _)| *d == l) {
            Some((_, b)) => b.clone(),
            None => kernel_homogeneous(op, l),
        };
        // 𝒲_ℓ: L²(B)-orthogonal complement of Z_ℓ inside 𝒫_ℓ^h ⊗ V.
        let hidx = homogeneous_indices(n, l);
        let g = monomial_gram(&hidx, dim);
        let zc: Vec<Vec<Rational>> = z.iter().map(|p| p.coordinates(&hidx)).collect();
        let constraints: RMatrix = zc.iter().map(|c| matvec(&g, c)).collect();
        let w = if constraints.is_empty() {
            (0..hidx.len() * dim)
                .map(|k| (0..hidx.len() * dim).map(|t| if t == k { Rational::one() } else { Rational::zero() }).collect())
                .collect()
        } else {
            nullspace(&constraints, hidx.len() * dim)
        };
        kernel.extend(z);
        complement.extend(w.iter().map(|c| VPolynomial::from_coordinates(n, dim, &hidx, c)));
    }
    let kernel_count = kernel.len();
    let psi_basis: Vec<VPolynomial> = kernel.into_iter().chain(complement).collect();
    let size = indices.len() * dim;
    if psi_basis.len() != size {
        return Err(ProjectionError::SingularGram);
    }
    let psi_cols: RMatrix = psi_basis.iter().map(|p| p.coordinates(&indices)).collect();
    let psi = transpose(&psi_cols);
    let full_gram = monomial_gram(&indices, dim);
    let gram = matmul(&matmul(&psi_cols, &full_gram), &psi);
    let dual = inverse(&gram).ok_or(ProjectionError::SingularGram)?;

    // Π̃ q = Σ_{j<K} ⟨q, ψ_j*⟩ ψ_j with ⟨q, ψ_j*⟩ = Σ_i D_ji ⟨q, ψ_i⟩.
    let psi_t_g = matmul(&psi_cols, &full_gram);
    let dk: RMatrix = dual[..kernel_count].to_vec();
    let coeff = matmul(&dk, &psi_t_g);
    let psi_k: RMatrix = psi.iter().map(|row| row[..kernel_count].to_vec()).collect();
    let pi_matrix = if kernel_count == 0 { vec![vec![Rational::zero(); size]; size] } else { matmul(&psi_k, &coeff) };

    // Correctors: E_ij = ⟨𝔸ψ_i, 𝔸ψ_j⟩ on 𝒲, ξ_ℓ = Σ_j (E⁻¹)_{ℓj} ψ_j.
    let w_basis = &psi_basis[kernel_count..];
    let a_w: Vec<VPolynomial> = w_basis
        .iter()
        .map(|p| op.apply_to_polynomial(p).expect("dimensions match"))
        .collect();
    let e: RMatrix = a_w.iter().map(|a| a_w.iter().map(|b| mean_inner(a, b)).collect()).collect();
    let e_inv = inverse(&e).ok_or(ProjectionError::SingularGram)?;
    let xi_polys = e_inv
        .iter()
        .map(|row| {
            row.iter()
                .zip(w_basis)
                .fold(VPolynomial::zero(n, dim), |acc, (c, p)| acc.add(&p.scale(c)))
        })
        .collect();

    let pi_f64 = to_f64_matrix(&pi_matrix);
    Ok(ProjectionOperator {
        op: op.clone(),
        ball: ball.clone(),
        m,
        indices,
        psi_basis,
        kernel_count,
        dual_coeffs: dual,
        xi_polys,
        pi_matrix,
        pi_f64,
    })
}

impl ProjectionOperator {
    /// The same operator on another ball with the same weight exponent. All algebra
    /// lives in local coordinates, so only the ball changes.
    pub fn with_ball(&self, center: Vec<f64>, radius: f64) -> ProjectionOperator {
        ProjectionOperator { ball: BallSpec::new(center, radius, self.ball.rho), ..self.clone() }
    }

    pub fn kernel_basis(&self) -> &[VPolynomial] {
        &self.psi_basis[..self.kernel_count]
    }

    /// Π̃ as Ψ diag(1,…,1,0,…,0) Ψ⁻¹, computed without the dual basis.
    pub fn pi_matrix_coordinate_route(&self) -> RMatrix {
        let psi_cols: RMatrix = self.psi_basis.iter().map(|p| p.coordinates(&self.indices)).collect();
        let psi = transpose(&psi_cols);
        let inv = inverse(&psi).expect("ψ is a basis");
        let size = psi.len();
        let keep: RMatrix = (0..size)
            .map(|r| {
                if r < self.kernel_count {
                    inv[r].clone()
                } else {
                    vec![Rational::zero(); size]
                }
            })
            .collect();
        matmul(&psi, &keep)
    }

    /// Π̃ on local 𝒫_{m−1} coordinates.
    pub fn apply_local_coords(&self, c: &[Rational]) -> Vec<Rational> {
        matvec(&self.pi_matrix, c)
    }

    pub fn apply_local_coords_f64(&self, c: &[f64]) -> Vec<f64> {
        self.pi_f64.iter().map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum()).collect()
    }

    /// Π_𝔸^B u for a polynomial u, exact.
    pub fn apply(&self, u: &VPolynomial) -> Result<VPolynomial, ProjectionError> {
        if u.dim != self.op.dim_v || u.n != self.op.n {
            return Err(ProjectionError::DimensionMismatch { expected: self.op.dim_v, got: u.dim });
        }
        let t = averaged_taylor_unit(&self.ball.to_local(u), self.m - 1, self.ball.rho);
        let c = self.apply_local_coords(&t.coordinates(&self.indices));
        let local = VPolynomial::from_coordinates(self.op.n, self.op.dim_v, &self.indices, &c);
        Ok(self.ball.to_global(&local))
    }

    /// ψ_j* as a polynomial in local coordinates.
    pub fn dual_poly(&self, j: usize) -> VPolynomial {
        self.dual_coeffs[j]
            .iter()
            .zip(&self.psi_basis)
            .fold(VPolynomial::zero(self.op.n, self.op.dim_v), |acc, (c, p)| acc.add(&p.scale(c)))
    }

    /// (I − Π̃)q = Σ_{ℓ∈𝒲} ⟨𝔸q, 𝔸ξ_ℓ⟩ ψ_ℓ for q ∈ 𝒫_{m−1} in local coordinates.
    pub fn complement_via_correctors(&self, q: &VPolynomial) -> VPolynomial {
        let aq = self.op.apply_to_polynomial(q).expect("dimensions match");
        let mut out = VPolynomial::zero(self.op.n, self.op.dim_v);
        for (l, xi) in self.xi_polys.iter().enumerate() {
            let axi = self.op.apply_to_polynomial(xi).expect("dimensions match");
            let c = mean_inner(&aq, &axi);
            out = out.add(&self.psi_basis[self.kernel_count + l].scale(&c));
        }
        out
    }

    pub fn is_idempotent(&self) -> bool {
        let sq = matmul(&self.pi_matrix, &self.pi_matrix);
        sq == self.pi_matrix
    }

    /// Dual-basis exactness Gram · Dᵀ = I.
    pub fn dual_is_exact(&self) -> bool {
        let psi_cols: RMatrix = self.psi_basis.iter().map(|p| p.coordinates(&self.indices)).collect();
        let g = matmul(&matmul(&psi_cols, &monomial_gram(&self.indices, self.op.dim_v)), &transpose(&psi_cols));
        is_identity(&matmul(&g, &transpose(&self.dual_coeffs)))
    }

    /// JSON with exact rationals as "p/q" strings.
    pub fn to_json(&self) -> Value {
        let rs = |v: &[Rational]| v.iter().map(|r| r.to_string()).collect::<Vec<_>>();
        let poly = |p: &VPolynomial| rs(&p.coordinates(&self.indices));
        json!({
            "op": self.op.spec(),
            "ball": self.ball,
            "m": self.m,
            "kernel_count": self.kernel_count,
            "psi_basis": self.psi_basis.iter().map(poly).collect::<Vec<_>>(),
            "dual_coeffs": self.dual_coeffs.iter().map(|r| rs(r)).collect::<Vec<_>>(),
            "xi_polys": self.xi_polys.iter().map(poly).collect::<Vec<_>>(),
            "pi_matrix": self.pi_matrix.iter().map(|r| rs(r)).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<ProjectionOperator, ProjectionError> {
        let bad = |s: &str| ProjectionError::Malformed(s.to_string());
        let spec: crate::poly_core::OperatorSpec =
            serde_json::from_value(v["op"].clone()).map_err(|e| bad(&e.to_string()))?;
        let op = crate::poly_core::make_operator(&spec).map_err(|e| bad(&e.to_string()))?;
        let ball: BallSpec = serde_json::from_value(v["ball"].clone()).map_err(|e| bad(&e.to_string()))?;
        let m = v["m"].as_u64().ok_or_else(|| bad("m"))? as u32;
        let kernel_count = v["kernel_count"].as_u64().ok_or_else(|| bad("kernel_count"))? as usize;
        let indices = indices_up_to(op.n, m.max(1) - 1);
        let parse_row = |r: &Value| -> Result<Vec<Rational>, ProjectionError> {
            r.as_array()
                .ok_or_else(|| bad("row"))?
                .iter()
                .map(|s| s.as_str().and_then(|s| s.parse::<Rational>().ok()).ok_or_else(|| bad("rational")))
                .collect()
        };
        let parse_mat = |key: &str| -> Result<RMatrix, ProjectionError> {
            v[key].as_array().ok_or_else(|| bad(key))?.iter().map(parse_row).collect()
        };
        let to_poly = |c: Vec<Rational>| VPolynomial::from_coordinates(op.n, op.dim_v, &indices, &c);
        let psi_basis = parse_mat("psi_basis")?.into_iter().map(to_poly).collect();
        let xi_polys = parse_mat("xi_polys")?.into_iter().map(to_poly).collect();
        let dual_coeffs = parse_mat("dual_coeffs")?;
        let pi_matrix = parse_mat("pi_matrix")?;
        let pi_f64 = to_f64_matrix(&pi_matrix);
        let p = ProjectionOperator {
            op,
            ball,
            m,
            indices,
            psi_basis,
            kernel_count,
            dual_coeffs,
            xi_polys,
            pi_matrix,
            pi_f64,
        };
        if !p.is_idempotent() {
            return Err(bad("pi_matrix is not idempotent"));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests;

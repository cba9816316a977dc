//! Trace experiments on the tangentially periodic strip and the spike family
//! along a real kernel direction of a non-elliptic symbol.

use num_complex::Complex64;
use serde::Serialize;

use super::{besov_norm_osc, lp_profile, BesovError, BesovParams, LineFunction};
use crate::domains::{make_domain, DomainKind, GridFunction};
use crate::ellipticity::{c_ellipticity, exact_residual, Verdict};
use crate::fd;
use crate::numerics::{gauss_legendre, gl_integrate, Ratio};
use crate::poly_core::{homogeneous_indices, DiffOperator};

fn chi(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - s * s).powi(4)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceTestFunction {
    /// χ(σ)χ(τ)·(c₀ + c_x σ + c_y τ) in component `component`, with σ = (x−x₀)/a,
    /// τ = y/b and χ(t) = (1−t²)⁴.
    Bump { x0: f64, a: f64, b: f64, poly: [f64; 3], component: usize },
    /// cos(2πmx/W)·e^{−2πmy/W} cut off smoothly between y = depth/4 and depth/2.
    Harmonic { degree: u32 },
}

impl TraceTestFunction {
    pub fn id(&self) -> String {
        match self {
            TraceTestFunction::Bump { x0, a, b, poly, component } => {
                format!("bump(x0={x0},a={a},b={b},poly={poly:?},c={component})")
            }
            TraceTestFunction::Harmonic { degree } => format!("harmonic({degree})"),
        }
    }

    pub fn eval(&self, x: [f64; 2], dim: usize, width: f64, depth: f64) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        match *self {
            TraceTestFunction::Bump { x0, a, b, poly, component } => {
                let mut dx = x[0] - x0;
                dx -= width * (dx / width).round();
                let (s, t) = (dx / a, x[1] / b);
                out[component.min(dim - 1)] = chi(s) * chi(t) * (poly[0] + poly[1] * s + poly[2] * t);
            }
            TraceTestFunction::Harmonic { degree } => {
                let w = 2.0 * std::f64::consts::PI * degree as f64 / width;
                let cut = lp_profile(x[1] / (0.25 * depth));
                out[0] = cut * (w * x[0]).cos() * (-w * x[1]).exp();
            }
        }
        out
    }
}

/// Twelve bumps: four widths times three polynomial factors.
pub fn trace_bump_family(width: f64) -> Vec<TraceTestFunction> {
    let mut out = Vec::new();
    for (i, a) in [0.08, 0.12, 0.16, 0.24].into_iter().enumerate() {
        for poly in [[1.0, 0.0, 0.0], [0.5, 1.0, 0.0], [1.0, 0.0, 2.0]] {
            let x0 = width * (0.3 + 0.1 * i as f64);
            out.push(TraceTestFunction::Bump { x0, a, b: a, poly, component: 0 });
        }
    }
    out
}

pub fn trace_harmonic_family(degrees: &[u32]) -> Vec<TraceTestFunction> {
    degrees.iter().map(|&degree| TraceTestFunction::Harmonic { degree }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub id: String,
    pub ratio: Ratio,
    /// Ḃ^{k−1}_{1,1} seminorm of u(·, 0).
    pub numerator: f64,
    /// ‖𝔸u‖_{L¹} over the strip.
    pub denominator: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceReport {
    pub n_tangential: usize,
    pub h: f64,
    pub width: f64,
    pub depth: f64,
    /// Set when the operator was not checked for ℂ-ellipticity.
    pub exploratory: bool,
    pub rows: Vec<TraceRow>,
}

impl TraceReport {
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().filter_map(|r| r.ratio.value()).fold(0.0, f64::max)
    }
}

fn trace_rows(
    op: &DiffOperator,
    family: &[TraceTestFunction],
    n_tangential: usize,
    width: f64,
    depth: f64,
    exploratory: bool,
) -> Result<TraceReport, BesovError> {
    if op.k < 2 {
        return Err(BesovError::OrderTooLow(op.k));
    }
    if op.n != 2 {
        return Err(BesovError::InvalidParams("trace experiments run on planar strips".into()));
    }
    let h = width / n_tangential as f64;
    let domain = make_domain(DomainKind::HalfspaceStrip { depth, width }, h)
        .map_err(|e| BesovError::InvalidParams(e.to_string()))?;
    let cells = fd::operator_cells(op, &domain);
    let k = op.k;
    let params = BesovParams { m: k, ..BesovParams::new((k - 1) as f64, 1.0, 1.0, h, 0.25 * width) };
    let mut rows = Vec::with_capacity(family.len());
    for member in family {
        let u = GridFunction::from_fn(&domain.grid, op.dim_v, |x| member.eval(x, op.dim_v, width, depth));
        let au = fd::apply_operator(op, &u, &domain, &cells);
        let denominator = au.lp_norm(&cells, 1.0, None);
        let trace = LineFunction::from_fn(n_tangential, h, 0.0, op.dim_v, true, |x| member.eval([x, 0.0], op.dim_v, width, depth));
        let numerator = besov_norm_osc(&trace, &params)?.value;
        let scale = u.max_abs(&domain.cells());
        rows.push(TraceRow { id: member.id(), ratio: Ratio::new(numerator, denominator, scale, 1e-12), numerator, denominator });
    }
    Ok(TraceReport { n_tangential, h, width, depth, exploratory, rows })
}

/// Ratios ‖u(·,0)‖_{Ḃ^{k−1}_{1,1}} / ‖𝔸u‖_{L¹} on [0,width) × [0,depth) for a ℂ-elliptic 𝔸.
pub fn halfspace_trace_experiment(
    op: &DiffOperator,
    family: &[TraceTestFunction],
    n_tangential: usize,
    width: f64,
    depth: f64,
) -> Result<TraceReport, BesovError> {
    if c_ellipticity(op, 12).verdict != Verdict::CElliptic {
        return Err(BesovError::NotCElliptic);
    }
    trace_rows(op, family, n_tangential, width, depth, false)
}

/// The same ratios without the ℂ-ellipticity guard, for falsification runs.
pub fn halfspace_trace_exploratory(
    op: &DiffOperator,
    family: &[TraceTestFunction],
    n_tangential: usize,
    width: f64,
    depth: f64,
) -> Result<TraceReport, BesovError> {
    trace_rows(op, family, n_tangential, width, depth, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlowupParams {
    pub j_min: u32,
    pub j_max: u32,
    pub p: f64,
    pub q: f64,
    /// Spike scale λ_j = base^j.
    pub base: f64,
    /// Amplitude λ^{1/p − eps} of h^{(k−1)}.
    pub eps: f64,
}

impl Default for BlowupParams {
    fn default() -> Self {
        BlowupParams { j_min: 2, j_max: 6, p: 2.0, q: 4.0, base: 8.0, eps: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupRow {
    pub j: u32,
    pub lambda: f64,
    /// Σ_{ℓ<k} ‖D^ℓ u‖_{L^p(Ω)}.
    pub sobolev_norm: f64,
    /// ‖𝔸u‖_{L^p(Ω)}.
    pub a_norm: f64,
    /// ‖∂^α u‖_{L^q(Γ)}.
    pub boundary_norm: f64,
}

impl BlowupRow {
    pub fn interior_norm(&self) -> f64 {
        self.sobolev_norm + self.a_norm
    }
}

/// Polynomial in one variable, ascending coefficients.
#[derive(Clone, Debug)]
struct Poly1(Vec<f64>);

impl Poly1 {
    fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Antiderivative vanishing at `from`, times `scale`, plus `offset`.
    fn integrate(&self, from: f64, scale: f64, offset: f64) -> Poly1 {
        let mut c = vec![0.0];
        c.extend(self.0.iter().enumerate().map(|(i, a)| scale * a / (i + 1) as f64));
        let mut p = Poly1(c);
        let at = p.eval(from);
        p.0[0] = offset - at;
        p
    }
}

/// ∫_a^b |P|^p with composite Gauss–Legendre.
fn lp_integral(p: &Poly1, a: f64, b: f64, exp: f64, nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = 16;
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|i| gl_integrate(nodes, a + i as f64 * w, a + (i + 1) as f64 * w, |x| p.eval(x).abs().powf(exp)))
        .sum()
}

/// u_j(x) = h_j(x·ξ̂)v on Ω = (−2,2)ξ̂ × (0,2)^{n−1}, where h_j^{(k−1)} = λ^{1/p−ε}χ(λ(t−½))
/// and lower derivatives integrate from t = −2. Γ = (0,1)ξ̂ × (0,1)^{n−2} × {0} ⊂ ∂Ω.
/// Because u is constant across ξ̂, every norm is a 1-D integral of a piecewise polynomial.
pub fn nonelliptic_blowup_family(
    op: &DiffOperator,
    xi: &[f64],
    v: &[f64],
    params: &BlowupParams,
) -> Result<Vec<BlowupRow>, BesovError> {
    if xi.len() != op.n || v.len() != op.dim_v {
        return Err(BesovError::InvalidBlowup("witness dimensions do not match the operator".into()));
    }
    let xi_norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let v_norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if xi_norm == 0.0 || v_norm == 0.0 {
        return Err(BesovError::InvalidBlowup("witness must be nonzero".into()));
    }
    if !(params.q > params.p && params.p >= 1.0) || params.base <= 2.0 || params.j_min > params.j_max {
        return Err(BesovError::InvalidBlowup("need 1 <= p < q, base > 2, j_min <= j_max".into()));
    }
    let cx = |a: &[f64]| a.iter().map(|&r| Complex64::new(r, 0.0)).collect::<Vec<_>>();
    let residual = exact_residual(op, &cx(xi), &cx(v));
    if residual != 0.0 {
        return Err(BesovError::WitnessInvalid(residual));
    }
    let k = op.k as usize;
    let unit: Vec<f64> = xi.iter().map(|x| x / xi_norm).collect();
    let xi_alpha = homogeneous_indices(op.n, op.k - 1)
        .into_iter()
        .map(|a| a.eval_f64(&unit).abs())
        .fold(0.0, f64::max);
    let nodes = gauss_legendre(24);
    let transverse = 2f64.powi(op.n as i32 - 1);
    let (p, q) = (params.p, params.q);
    let chi_poly = Poly1(vec![1.0, 0.0, -4.0, 0.0, 6.0, 0.0, -4.0, 0.0, 1.0]);
    let center = 0.5;
    let mut rows = Vec::new();
    for j in params.j_min..=params.j_max {
        let lambda = params.base.powi(j as i32);
        let amp = lambda.powf(1.0 / p - params.eps);
        let tail_len = 2.0 - center - 1.0 / lambda;
        // Spike piece in s = λ(t − ½) ∈ (−1,1); tail piece in τ = t − ½ − 1/λ.
        let mut spike = vec![Poly1(chi_poly.0.iter().map(|c| c * amp).collect())];
        let mut tail = vec![Poly1(vec![0.0])];
        for _ in 1..k {
            let s = spike.last().expect("nonempty").integrate(-1.0, 1.0 / lambda, 0.0);
            let end = s.eval(1.0);
            let t = tail.last().expect("nonempty").integrate(0.0, 1.0, end);
            spike.push(s);
            tail.push(t);
        }
        // spike[i] is h^{(k−1−i)}.
        let lp = |i: usize, exp: f64, tail_end: f64| -> f64 {
            lp_integral(&spike[i], -1.0, 1.0, exp, &nodes) / lambda + lp_integral(&tail[i], 0.0, tail_end, exp, &nodes)
        };
        let sobolev_norm = (0..k).map(|i| (lp(i, p, tail_len) * transverse).powf(1.0 / p) * v_norm).sum();
        // 𝔸u = 𝔸[ξ̂]v · h^{(k)}; the residual vanishes exactly.
        let hk = Poly1(
            spike[0].0.iter().enumerate().skip(1).map(|(i, c)| c * i as f64 * lambda).collect::<Vec<_>>(),
        );
        let a_norm = residual * v_norm * (lp_integral(&hk, -1.0, 1.0, p, &nodes) / lambda * transverse).powf(1.0 / p);
        let gamma_tail = (1.0 - center - 1.0 / lambda).max(0.0);
        let boundary_norm = xi_alpha * v_norm * lp(0, q, gamma_tail).powf(1.0 / q);
        rows.push(BlowupRow { j, lambda, sobolev_norm, a_norm, boundary_norm });
    }
    Ok(rows)
}

//! Korn ratios over finite field families in weighted Lebesgue, Lorentz and Orlicz norms.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::KornError;
use crate::decomposition::MomentSubspace;
use crate::domains::{GridDomain, GridFunction};
use crate::fd;
use crate::maximal_weights::{best_approximation, Weight};
use crate::numerics::Ratio;
use crate::poly_core::DiffOperator;
use crate::projection::{apply_projection_grid, poincare_ratio, sample};
use crate::projection::ProjectionOperator;
use crate::rng;

/// The function space in which a Korn ratio is measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    Lp { p: f64 },
    Lorentz { p: f64, q: f64 },
    /// Modular ∫ φ(|f|) with φ(t) = t^p (1 + ln(1 + t))^β.
    Orlicz { p: f64, beta: f64 },
}

impl NormKind {
    pub fn validate(&self) -> Result<(), KornError> {
        match *self {
            NormKind::Lp { p } if p >= 1.0 && p.is_finite() => Ok(()),
            NormKind::Lorentz { p, q } if p > 1.0 && p.is_finite() && q >= 1.0 && q.is_finite() => Ok(()),
            NormKind::Orlicz { p, beta } => orlicz_check(p, beta).map(|_| ()),
            other => Err(KornError::InvalidParams(format!("{other:?}"))),
        }
    }
}

fn phi(p: f64, beta: f64, t: f64) -> f64 {
    t.powf(p) * (1.0 + t.ln_1p()).powf(beta)
}

/// Doubling bounds of φ(t) = t^p(1 + ln(1 + t))^β sampled at t = 2^j, |j| ≤ 40.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrliczIndices {
    /// max φ(2t)/φ(t), an estimate of the Δ₂ constant.
    pub delta2: f64,
    /// min log₂(φ(2t)/φ(t)); ∇₂ needs it to exceed 1.
    pub lower_index: f64,
}

/// Checks Δ₂ and ∇₂ on dyadic doubling ratios.
pub fn orlicz_check(p: f64, beta: f64) -> Result<OrliczIndices, KornError> {
    if !(p.is_finite() && beta.is_finite() && (0.0..=1.0).contains(&beta)) {
        return Err(KornError::InvalidOrlicz(format!("p = {p}, beta = {beta}")));
    }
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for j in -40..=40 {
        let t = 2f64.powi(j);
        let r = phi(p, beta, 2.0 * t) / phi(p, beta, t);
        hi = hi.max(r);
        lo = lo.min(r.log2());
    }
    if !(hi.is_finite() && hi <= 64.0) {
        return Err(KornError::InvalidOrlicz(format!("doubling ratio {hi} fails the Delta_2 test")));
    }
    if lo <= 1.0 + 1e-6 {
        return Err(KornError::InvalidOrlicz(format!("lower index {lo} fails the nabla_2 test")));
    }
    Ok(OrliczIndices { delta2: hi, lower_index: lo })
}

/// Norm (or modular, for Orlicz) of the cell magnitudes with cell measure area·w.
pub fn norm_of(magnitudes: &[f64], measures: &[f64], kind: NormKind) -> f64 {
    match kind {
        NormKind::Lp { p } => magnitudes.iter().zip(measures).map(|(f, m)| f.powf(p) * m).sum::<f64>().powf(1.0 / p),
        NormKind::Orlicz { p, beta } => magnitudes.iter().zip(measures).map(|(f, m)| phi(p, beta, *f) * m).sum(),
        NormKind::Lorentz { p, q } => {
            // f* is a step function: value g_i on [cum_i, cum_{i+1}).
            let mut order: Vec<usize> = (0..magnitudes.len()).collect();
            order.sort_by(|&a, &b| magnitudes[b].total_cmp(&magnitudes[a]).then(a.cmp(&b)));
            let e = q / p;
            let mut cum = 0.0f64;
            let mut s = 0.0;
            for i in order {
                let next = cum + measures[i];
                s += magnitudes[i].powf(q) * (next.powf(e) - cum.powf(e));
                cum = next;
            }
            (s * p / q).powf(1.0 / q)
        }
    }
}

fn magnitudes(f: &GridFunction, cells: &[usize]) -> Vec<f64> {
    cells.iter().map(|&c| f.abs_at(c)).collect()
}

fn measures(domain: &GridDomain, cells: &[usize], weight: Option<&Weight>) -> Vec<f64> {
    let a = domain.grid.cell_area();
    cells.iter().map(|&c| a * weight.map_or(1.0, |w| w.values[c])).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SampledKorn {
    /// Largest finite ratio over the family.
    pub c: f64,
    pub ratios: Vec<Ratio>,
    pub worst: Option<usize>,
    pub kind: NormKind,
}

/// max over the family of ‖D^k(u − Πu)‖_X / ‖𝔸u‖_X, finite differences on stencil-valid cells.
pub fn korn_constant_sampled(
    op: &DiffOperator,
    proj: &ProjectionOperator,
    domain: &GridDomain,
    family: &[GridFunction],
    kind: NormKind,
    weight: Option<&Weight>,
) -> Result<SampledKorn, KornError> {
    kind.validate()?;
    let grad_alphas: Vec<_> = fd::gradient_indices(2, op.k).into_iter().map(|e| e.0).collect();
    let grad_cells = fd::valid_cells(domain, &grad_alphas);
    let a_cells = fd::operator_cells(op, domain);
    if grad_cells.is_empty() || a_cells.is_empty() {
        return Err(KornError::DomainTooThin);
    }
    let mg = measures(domain, &grad_cells, weight);
    let ma = measures(domain, &a_cells, weight);
    let all = domain.cells();
    let ratios = family
        .par_iter()
        .map(|u| {
            let pr = apply_projection_grid(proj, u, Some(domain))?;
            let diff = u.sub(&sample(domain, &pr.poly));
            let g = fd::apply_gradient(&diff, op.k, domain, &grad_cells);
            let num = norm_of(&magnitudes(&g, &grad_cells), &mg, kind);
            let au = fd::apply_operator(op, u, domain, &a_cells);
            let den = norm_of(&magnitudes(&au, &a_cells), &ma, kind);
            let scale = norm_of(&magnitudes(u, &all), &measures(domain, &all, weight), kind);
            Ok(Ratio::new(num, den, scale, 1e-10))
        })
        .collect::<Result<Vec<Ratio>, KornError>>()?;
    let worst = ratios
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.value().map(|v| (i, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|e| e.0);
    let c = worst.map_or(0.0, |i| ratios[i].value().unwrap_or(0.0));
    Ok(SampledKorn { c, ratios, worst, kind })
}

/// `count` fields Σ a cos(2π κ·x + φ) with four waves per component and |κ| in [0.5, 2.5].
pub fn random_smooth_fields(domain: &GridDomain, dim: usize, count: usize, seed: u64) -> Vec<GridFunction> {
    (0..count)
        .map(|i| {
            let mut r = rng::substream(seed, i as u64);
            let waves: Vec<Vec<(f64, [f64; 2], f64)>> = (0..dim)
                .map(|_| {
                    (0..4)
                        .map(|_| {
                            let k = r.random_range(0.5..2.5) * std::f64::consts::TAU;
                            let th = r.random_range(0.0..std::f64::consts::TAU);
                            (r.random_range(-1.0..1.0), [k * th.cos(), k * th.sin()], r.random_range(0.0..std::f64::consts::TAU))
                        })
                        .collect()
                })
                .collect();
            GridFunction::from_fn_masked(domain, dim, |x| {
                waves.iter().map(|ws| ws.iter().map(|(a, k, ph)| a * (k[0] * x[0] + k[1] * x[1] + ph).cos()).sum()).collect()
            })
        })
        .collect()
}

/// Random kernel elements plus `noise` times a random smooth field.
pub fn kernel_perturbed_fields(kernel: &MomentSubspace, domain: &GridDomain, count: usize, noise: f64, seed: u64) -> Vec<GridFunction> {
    let smooth = random_smooth_fields(domain, kernel.dim, count, seed ^ 0x9e37_79b9);
    smooth
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut r = rng::substream(seed, 1000 + i as u64);
            let coef: Vec<f64> = kernel.basis.iter().map(|_| r.random_range(-1.0..1.0)).collect();
            let k = GridFunction::from_fn_masked(domain, kernel.dim, |x| {
                let mut v = vec![0.0; kernel.dim];
                for (c, b) in coef.iter().zip(&kernel.basis) {
                    v.iter_mut().zip(b.eval(&x)).for_each(|(o, y)| *o += c * y);
                }
                v
            });
            k.add(&s.scale(noise))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoincareBestApprox {
    /// ‖D^ℓ(u − Πu)‖ / (diam^{k−ℓ}‖𝔸u‖).
    pub poincare: Ratio,
    /// ‖D^ℓ(u − Πu)‖ / inf over q ∈ ker 𝔸 of ‖D^ℓ(u − q)‖.
    pub bestapprox: Ratio,
}

/// Both ratios in L^p_w; the infimum is a weighted least-p fit over D^ℓ of the kernel basis.
pub fn poincare_and_bestapprox(
    op: &DiffOperator,
    proj: &ProjectionOperator,
    domain: &GridDomain,
    u: &GridFunction,
    l: u32,
    p: f64,
    weight: Option<&Weight>,
) -> Result<PoincareBestApprox, KornError> {
    if l > op.k {
        return Err(KornError::InvalidParams(format!("derivative order {l} exceeds {}", op.k)));
    }
    let wv = weight.map(|w| w.values.as_slice());
    let poincare = poincare_ratio(op, proj, u, l, p, domain, wv)?;
    let pr = apply_projection_grid(proj, u, Some(domain))?;
    let diff = u.sub(&sample(domain, &pr.poly));
    let alphas: Vec<_> = fd::gradient_indices(2, l).into_iter().map(|e| e.0).collect();
    let cells = fd::valid_cells(domain, &alphas);
    if cells.is_empty() {
        return Err(KornError::DomainTooThin);
    }
    let num = fd::apply_gradient(&diff, l, domain, &cells).lp_norm(&cells, p, wv);
    let du = fd::apply_gradient(u, l, domain, &cells);
    let space = MomentSubspace::kernel_derivatives(op, l)?;
    let fit = if space.basis.is_empty() {
        du.lp_norm(&cells, p, wv)
    } else {
        best_approximation(&du, &cells, &space, p, weight).1
    };
    // The fit is near-best for p ≠ 2; Πu itself is a competitor.
    let inf = fit.min(num);
    let scale = u.lp_norm(&domain.cells(), p, wv).max(1e-300);
    Ok(PoincareBestApprox { poincare, bestapprox: Ratio::new(num, inf, scale, 1e-10) })
}

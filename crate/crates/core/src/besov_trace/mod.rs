//! Local polynomial oscillations, homogeneous Besov norms on the line, and the
//! half-space trace experiments.
//!
//! Boundary data live on a 1-D lattice (`LineFunction`): sample i sits at
//! origin + (i+½)h. Two routes compute Ḃ^s_{p,q}: an oscillation integral over
//! geometric scales and a Littlewood–Paley sum through the DFT.

mod trace;


pub use trace::{
    halfspace_trace_experiment, halfspace_trace_exploratory, nonelliptic_blowup_family, trace_bump_family,
    trace_harmonic_family, BlowupParams, BlowupRow, TraceReport, TraceRow, TraceTestFunction,
};

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::Serialize;
use thiserror::Error;

use crate::domains::{GridDomain, GridFunction};
use crate::poly_core::{indices_up_to, MultiIndex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BesovError {
    #[error("ball holds {got} lattice points, fitting needs {needed}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("grid size {0} is not a power of two")]
    NonPowerOfTwoGrid(usize),
    #[error("invalid Besov parameters: {0}")]
    InvalidParams(String),
    #[error("operator is not C-elliptic")]
    NotCElliptic,
    #[error("operator order {0} is below 2")]
    OrderTooLow(u32),
    #[error("symbol does not annihilate the witness (residual {0:e})")]
    WitnessInvalid(f64),
    #[error("invalid blow-up parameters: {0}")]
    InvalidBlowup(String),
}

/// Samples of a V-valued function on a 1-D lattice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineFunction {
    pub h: f64,
    pub origin: f64,
    pub dim: usize,
    pub values: Vec<f64>,
    /// Periodic lattices wrap; otherwise the function is extended by zero.
    pub periodic: bool,
}

impl LineFunction {
    pub fn from_fn(n: usize, h: f64, origin: f64, dim: usize, periodic: bool, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(n * dim);
        for i in 0..n {
            let v = f(origin + (i as f64 + 0.5) * h);
            debug_assert_eq!(v.len(), dim);
            values.extend(v);
        }
        LineFunction { h, origin, dim, values, periodic }
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: i64) -> f64 {
        self.origin + (i as f64 + 0.5) * self.h
    }

    /// Value at signed index i (wrapped or zero-extended).
    fn at(&self, i: i64) -> Option<&[f64]> {
        let n = self.len() as i64;
        let i = if self.periodic { i.rem_euclid(n) } else { i };
        if i < 0 || i >= n {
            return None;
        }
        let i = i as usize;
        Some(&self.values[i * self.dim..(i + 1) * self.dim])
    }

    pub fn scale(&self, s: f64) -> LineFunction {
        LineFunction { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &LineFunction) -> LineFunction {
        LineFunction { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(), ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    /// Fitting degree of the oscillations.
    pub m: u32,
    pub t_min: f64,
    pub t_max: f64,
    pub ratio: f64,
}

impl BesovParams {
    /// M = ⌊s⌋+1, scales from h to `t_max` at ratio 2^{1/4}.
    pub fn new(s: f64, p: f64, q: f64, h: f64, t_max: f64) -> Self {
        BesovParams { s, p, q, m: s.floor() as u32 + 1, t_min: h, t_max, ratio: 2f64.powf(0.25) }
    }

    pub fn validate(&self, h: f64) -> Result<(), BesovError> {
        let bad = |m: &str| Err(BesovError::InvalidParams(m.into()));
        if !(self.s > 0.0) {
            return bad("s must be positive");
        }
        if !(self.p >= 1.0 && self.q >= 1.0) || !self.p.is_finite() || !self.q.is_finite() {
            return bad("p and q must lie in [1, inf)");
        }
        if (self.m as f64) <= self.s.floor() {
            return bad("M must exceed floor(s)");
        }
        if self.t_min < h * (1.0 - 1e-12) || self.t_max < self.t_min {
            return bad("scale range must satisfy h <= t_min <= t_max");
        }
        if !(self.ratio > 1.0 && self.ratio <= 2.0) {
            return bad("scale ratio must lie in (1, 2]");
        }
        Ok(())
    }
}

/// Weighted least squares with shared weights for every component: returns the
/// coefficient matrix (basis × dim).
fn weighted_fit(design: &DMatrix<f64>, rhs: &DMatrix<f64>, w: &[f64]) -> Option<DMatrix<f64>> {
    let (rows, cols) = design.shape();
    let mut g = DMatrix::<f64>::zeros(cols, cols);
    let mut b = DMatrix::<f64>::zeros(cols, rhs.ncols());
    for r in 0..rows {
        let wr = w[r];
        for a in 0..cols {
            let da = design[(r, a)] * wr;
            for c in a..cols {
                g[(a, c)] += da * design[(r, c)];
            }
            for d in 0..rhs.ncols() {
                b[(a, d)] += da * rhs[(r, d)];
            }
        }
    }
    for a in 0..cols {
        for c in 0..a {
            g[(a, c)] = g[(c, a)];
        }
    }
    g.cholesky().map(|ch| ch.solve(&b))
}

fn residual_norms(design: &DMatrix<f64>, rhs: &DMatrix<f64>, coef: &DMatrix<f64>) -> Vec<f64> {
    let res = rhs - design * coef;
    res.row_iter().map(|r| r.norm()).collect()
}

fn p_mean(res: &[f64], p: f64) -> f64 {
    if res.is_empty() {
        return 0.0;
    }
    (res.iter().map(|r| r.powf(p)).sum::<f64>() / res.len() as f64).powf(1.0 / p)
}

/// A local polynomial fit in the coordinates z = (x − center)/radius.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalFit {
    pub center: Vec<f64>,
    pub radius: f64,
    pub exponents: Vec<MultiIndex>,
    /// Row per basis monomial, column per component.
    pub coeffs: Vec<Vec<f64>>,
    /// p-mean of |f − π| on the ball.
    pub value: f64,
}

impl LocalFit {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| (a - c) / self.radius).collect();
        let dim = self.coeffs.first().map_or(0, |r| r.len());
        let mut out = vec![0.0; dim];
        for (e, row) in self.exponents.iter().zip(&self.coeffs) {
            let m = e.eval_f64(&z);
            for (o, c) in out.iter_mut().zip(row) {
                *o += m * c;
            }
        }
        out
    }
}

/// Infimum over 𝒫_M of the p-mean of |f − π| over the given sample points.
/// p = 2 is a least-squares solve; other p use iteratively reweighted fits started
/// from it, and the best iterate is kept.
fn fit_points(points: &[Vec<f64>], values: &[&[f64]], center: &[f64], r: f64, m: u32, p: f64) -> Result<LocalFit, BesovError> {
    let n = center.len();
    let exponents = indices_up_to(n, m);
    if points.len() < exponents.len() {
        return Err(BesovError::TooFewPoints { needed: exponents.len(), got: points.len() });
    }
    let dim = values.first().map_or(1, |v| v.len());
    let design = DMatrix::from_fn(points.len(), exponents.len(), |i, a| {
        let z: Vec<f64> = points[i].iter().zip(center).map(|(x, c)| (x - c) / r).collect();
        exponents[a].eval_f64(&z)
    });
    // Fitting f/max|f| keeps the reweighting path independent of the amplitude.
    let amp = values.iter().flat_map(|v| v.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    if amp == 0.0 {
        let coeffs = vec![vec![0.0; dim]; exponents.len()];
        return Ok(LocalFit { center: center.to_vec(), radius: r, exponents, coeffs, value: 0.0 });
    }
    let rhs = DMatrix::from_fn(points.len(), dim, |i, d| values[i][d] / amp);
    let pack = |coef: &DMatrix<f64>, value: f64| LocalFit {
        center: center.to_vec(),
        radius: r,
        exponents: exponents.clone(),
        coeffs: coef.row_iter().map(|row| row.iter().map(|c| c * amp).collect()).collect(),
        value: value * amp,
    };
    let ones = vec![1.0; points.len()];
    let Some(mut coef) = weighted_fit(&design, &rhs, &ones) else {
        // Degenerate configuration: fall back to an SVD solve.
        let svd = design.clone().svd(true, true);
        let coef = svd.solve(&rhs, 1e-13).map_err(|_| BesovError::TooFewPoints { needed: exponents.len(), got: points.len() })?;
        let value = p_mean(&residual_norms(&design, &rhs, &coef), p);
        return Ok(pack(&coef, value));
    };
    let mut res = residual_norms(&design, &rhs, &coef);
    let mut best = (p_mean(&res, p), coef.clone());
    if p != 2.0 {
        // ε-continuation: iterate to a stall at each residual floor, then shrink it.
        let mut floor = 1e-2;
        let mut last = best.0;
        let mut at_level = 0;
        for _ in 0..600 {
            let w: Vec<f64> = res.iter().map(|&e| e.max(floor).powf(p - 2.0)).collect();
            let Some(c) = weighted_fit(&design, &rhs, &w) else { break };
            coef = c;
            res = residual_norms(&design, &rhs, &coef);
            let v = p_mean(&res, p);
            if v < best.0 {
                best = (v, coef.clone());
            }
            at_level += 1;
            if (last - v).abs() <= 1e-10 * last.max(f64::MIN_POSITIVE) || at_level >= 60 {
                if floor <= 1e-13 {
                    break;
                }
                floor *= 0.1;
                at_level = 0;
            }
            last = v;
        }
    }
    Ok(pack(&best.1, best.0))
}

fn line_ball(f: &LineFunction, x: f64, r: f64) -> (Vec<Vec<f64>>, Vec<&[f64]>, usize) {
    // One extra index each side; the distance test below decides ties.
    let lo = ((x - r - f.origin) / f.h - 0.5).ceil() as i64 - 1;
    let hi = ((x + r - f.origin) / f.h - 0.5).floor() as i64 + 1;
    let zero: &[f64] = &[];
    let mut pts = Vec::new();
    let mut vals = Vec::new();
    let mut nonzero = 0;
    for i in lo..=hi {
        let xi = f.point(i);
        if (xi - x).abs() > r * (1.0 + 1e-12) {
            continue;
        }
        pts.push(vec![xi]);
        match f.at(i) {
            Some(v) => {
                if v.iter().any(|c| *c != 0.0) {
                    nonzero += 1;
                }
                vals.push(v);
            }
            None => vals.push(zero),
        }
    }
    (pts, vals, nonzero)
}

/// Best (p, M) fit of f on B(x, r).
pub fn fit_polynomial(f: &LineFunction, x: f64, r: f64, m: u32, p: f64) -> Result<LocalFit, BesovError> {
    let (pts, vals, _) = line_ball(f, x, r);
    let zeros = vec![0.0; f.dim];
    let vals: Vec<&[f64]> = vals.into_iter().map(|v| if v.is_empty() { &zeros[..] } else { v }).collect();
    fit_points(&pts, &vals, &[x], r, m, p)
}

/// The (p, M)-oscillation of f at (x, r).
pub fn oscillation(f: &LineFunction, x: f64, r: f64, m: u32, p: f64) -> Result<f64, BesovError> {
    let (pts, _, nonzero) = line_ball(f, x, r);
    let needed = m as usize + 1;
    if pts.len() < needed {
        return Err(BesovError::TooFewPoints { needed, got: pts.len() });
    }
    if nonzero == 0 {
        return Ok(0.0);
    }
    fit_polynomial(f, x, r, m, p).map(|fit| fit.value)
}

/// p-mean of |f − π| on B(x, r) for a given fit π.
pub fn residual_mean(f: &LineFunction, fit: &LocalFit, x: f64, r: f64, p: f64) -> f64 {
    let (pts, vals, _) = line_ball(f, x, r);
    let res: Vec<f64> = pts
        .iter()
        .zip(vals)
        .map(|(pt, v)| {
            let q = fit.eval(pt);
            q.iter().enumerate().map(|(d, qd)| (v.get(d).copied().unwrap_or(0.0) - qd).powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    p_mean(&res, p)
}

/// The (p, M)-oscillation of a planar grid function on B(x, r) ∩ Ω.
pub fn oscillation_2d(f: &GridFunction, domain: &GridDomain, x: [f64; 2], r: f64, m: u32, p: f64) -> Result<f64, BesovError> {
    let g = &domain.grid;
    let rc = (r / g.h).ceil() as i64 + 1;
    let ci = ((x[0] - g.origin[0]) / g.h).floor() as i64;
    let cj = ((x[1] - g.origin[1]) / g.h).floor() as i64;
    let mut pts = Vec::new();
    let mut vals = Vec::new();
    for dj in -rc..=rc {
        for di in -rc..=rc {
            let Some((a, b)) = domain.wrap(ci + di, cj + dj) else { continue };
            let idx = g.index(a, b);
            if !domain.mask[idx] {
                continue;
            }
            let c = g.center(a, b);
            // Periodic images keep the offset of the unwrapped index.
            let pt = [g.origin[0] + ((ci + di) as f64 + 0.5) * g.h, c[1]];
            if (pt[0] - x[0]).hypot(pt[1] - x[1]) <= r * (1.0 + 1e-12) {
                pts.push(pt.to_vec());
                vals.push(f.at(idx));
            }
        }
    }
    fit_points(&pts, &vals, &x, r, m, p).map(|fit| fit.value)
}

/// Oscillation-route Besov norm with its quadrature diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BesovOsc {
    pub value: f64,
    pub scales: Vec<f64>,
    /// ‖osc(·, t)‖_{L^p} per used scale.
    pub profile: Vec<f64>,
    /// Scales dropped because the ball held too few lattice points.
    pub skipped: Vec<f64>,
    /// Relative change when every other scale is dropped (ratio squared).
    pub coarse_quadrature_change: f64,
}

fn osc_profile(f: &LineFunction, t: f64, m: u32, p: f64) -> Result<f64, BesovError> {
    let n = f.len() as i64;
    let reach = (t / f.h).ceil() as i64 + 1;
    let range: Vec<i64> = if f.periodic { (0..n).collect() } else { (-reach..n + reach).collect() };
    let vals: Vec<Result<f64, BesovError>> =
        range.par_iter().map(|&i| oscillation(f, f.point(i), t, m, p).map(|o| o.powf(p))).collect();
    let mut acc = 0.0;
    for v in vals {
        acc += v?;
    }
    Ok((acc * f.h).powf(1.0 / p))
}

/// (∫ ‖osc_p^M f(·,t)‖_p^q t^{−1−sq} dt)^{1/q} over [t_min, t_max], trapezoid in log t.
pub fn besov_norm_osc(f: &LineFunction, params: &BesovParams) -> Result<BesovOsc, BesovError> {
    params.validate(f.h)?;
    let mut scales = Vec::new();
    let mut k = 0;
    while params.t_min * params.ratio.powi(k) <= params.t_max * (1.0 + 1e-12) {
        scales.push(params.t_min * params.ratio.powi(k));
        k += 1;
    }
    let mut used = Vec::new();
    let mut profile = Vec::new();
    let mut skipped = Vec::new();
    for &t in &scales {
        match osc_profile(f, t, params.m, params.p) {
            Ok(v) => {
                used.push(t);
                profile.push(v);
            }
            Err(BesovError::TooFewPoints { .. }) => skipped.push(t),
            Err(e) => return Err(e),
        }
    }
    let integrand: Vec<f64> = used.iter().zip(&profile).map(|(t, v)| v.powf(params.q) * t.powf(-params.s * params.q)).collect();
    let trapezoid = |step: usize| -> f64 {
        let idx: Vec<usize> = (0..integrand.len()).step_by(step).collect();
        let dl = params.ratio.ln() * step as f64;
        idx.windows(2).map(|w| 0.5 * (integrand[w[0]] + integrand[w[1]]) * dl).sum::<f64>()
    };
    let fine = trapezoid(1);
    let coarse = trapezoid(2);
    let value = fine.powf(1.0 / params.q);
    let coarse_quadrature_change = if fine > 0.0 { (coarse.powf(1.0 / params.q) - value).abs() / value } else { 0.0 };
    Ok(BesovOsc { value, scales: used, profile, skipped, coarse_quadrature_change })
}

/// Smooth radial profile: 1 on [0,1], 0 on [2,∞).
fn lp_profile(r: f64) -> f64 {
    let t = r - 1.0;
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    b / (a + b)
}

fn lp_piece(j: i32, xi: f64) -> f64 {
    let r = xi.abs();
    lp_profile(r * 2f64.powi(-j)) - lp_profile(r * 2f64.powi(1 - j))
}

/// Angular frequencies 2πk/(nh) in FFT order.
fn frequencies(n: usize, h: f64) -> Vec<f64> {
    let w = n as f64 * h;
    (0..n)
        .map(|k| {
            let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            2.0 * std::f64::consts::PI * k / w
        })
        .collect()
}

/// Range of dyadic pieces needed for the frequencies of an n-point lattice.
fn lp_range(n: usize, h: f64) -> (i32, i32) {
    let w = n as f64 * h;
    let lo = 2.0 * std::f64::consts::PI / w;
    let hi = std::f64::consts::PI / h;
    (lo.log2().floor() as i32, hi.log2().ceil() as i32 + 1)
}

/// max |Σ_j φ_j(ξ) − 1| over the nonzero lattice frequencies.
pub fn lp_partition_defect(n: usize, h: f64) -> f64 {
    let (jl, jh) = lp_range(n, h);
    frequencies(n, h)
        .into_iter()
        .filter(|x| *x != 0.0)
        .map(|x| ((jl..=jh).map(|j| lp_piece(j, x)).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BesovLp {
    pub value: f64,
    pub j_min: i32,
    pub j_max: i32,
    /// 2^{js}‖(φ_j f̂)^∨‖_p per j.
    pub pieces: Vec<f64>,
}

/// (Σ_j 2^{jsq}‖(φ_j f̂)^∨‖_p^q)^{1/q} on a periodic power-of-two lattice; the mean is dropped.
pub fn besov_norm_lp(f: &LineFunction, params: &BesovParams) -> Result<BesovLp, BesovError> {
    let n = f.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(BesovError::NonPowerOfTwoGrid(n));
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let spectra: Vec<Vec<Complex64>> = (0..f.dim)
        .map(|d| {
            let mut buf: Vec<Complex64> = (0..n).map(|i| Complex64::new(f.values[i * f.dim + d], 0.0)).collect();
            fwd.process(&mut buf);
            buf
        })
        .collect();
    let xi = frequencies(n, f.h);
    let (j_min, j_max) = lp_range(n, f.h);
    let mut pieces = Vec::new();
    for j in j_min..=j_max {
        let mult: Vec<f64> = xi.iter().map(|&x| if x == 0.0 { 0.0 } else { lp_piece(j, x) }).collect();
        let mut mag = vec![0.0; n];
        for spec in &spectra {
            let mut buf: Vec<Complex64> = spec.iter().zip(&mult).map(|(s, m)| s * m).collect();
            inv.process(&mut buf);
            for (m, b) in mag.iter_mut().zip(&buf) {
                let v = b.re / n as f64;
                *m += v * v;
            }
        }
        let lp = (mag.iter().map(|m| m.sqrt().powf(params.p)).sum::<f64>() * f.h).powf(1.0 / params.p);
        pieces.push(2f64.powf(j as f64 * params.s) * lp);
    }
    let value = pieces.iter().map(|v| v.powf(params.q)).sum::<f64>().powf(1.0 / params.q);
    Ok(BesovLp { value, j_min, j_max, pieces })
}

//! The replacement sequence on a tangentially periodic half-space strip.
//!
//! At scale s = 2^{−j} the boundary layer {y < s} is covered by balls B_{j,i}
//! of radius ≈ s sitting on ∂ℍ, with tangential partition of unity ρ_{j,i}
//! given by cardinal B-splines. Each B_{j,i} is paired with the lifted mirror
//! ball B♯_{j,i} = B((x_i, 2s), s), on which the projection Π_{j,i} is computed.

use serde::Serialize;

use super::DecompositionError;
use crate::domains::{DomainKind, GridDomain, GridFunction};
use crate::ellipticity::{c_ellipticity, Verdict};
use crate::fd;
use crate::poly_core::{DiffOperator, VPolyF64};
use crate::projection::{apply_projection_grid, build_projection, BallSpec, ProjectionOperator};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReplacementParams {
    pub j: u32,
    /// Smallest admissible ball radius, in cells.
    pub min_radius_cells: f64,
}

impl ReplacementParams {
    pub fn new(j: u32) -> Self {
        ReplacementParams { j, min_radius_cells: 2.0 }
    }
}

#[derive(Clone, Debug)]
pub struct ReplacementStep {
    pub j: u32,
    pub t_j: GridFunction,
    pub t_next: GridFunction,
    pub i_j: GridFunction,
    pub ii_j: GridFunction,
}

/// Cardinal B-spline of order r (degree r−1) supported on [0, r].
fn bspline(r: u32, t: f64) -> f64 {
    if t <= 0.0 || t >= r as f64 {
        return 0.0;
    }
    let mut binom = 1.0;
    let mut fact = 1.0;
    for i in 1..r {
        fact *= i as f64;
    }
    let mut acc = 0.0;
    for k in 0..=r {
        if k > 0 {
            binom *= (r - k + 1) as f64 / k as f64;
        }
        let d = t - k as f64;
        if d > 0.0 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * d.powi(r as i32 - 1);
        }
    }
    acc / fact
}

/// C^k smoothstep on [0,1], clamped outside.
fn smoothstep(k: u32, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let binom = |n: u32, r: u32| -> f64 { (0..r).fold(1.0, |a, i| a * (n - i) as f64 / (i + 1) as f64) };
    let mut acc = 0.0;
    for n in 0..=k {
        acc += binom(k + n, n) * binom(2 * k + 1, k - n) * (-t).powi(n as i32);
    }
    acc * t.powi(k as i32 + 1)
}

/// One scale of the construction.
struct Scale {
    s: f64,
    count: usize,
    order: u32,
    k: u32,
    centers: Vec<f64>,
    projections: Vec<VPolyF64>,
    width: f64,
}

impl Scale {
    fn build(
        u: &GridFunction,
        base: &ProjectionOperator,
        domain: &GridDomain,
        j: u32,
        params: &ReplacementParams,
    ) -> Result<Scale, DecompositionError> {
        let (width, depth) = match domain.kind {
            DomainKind::HalfspaceStrip { width, depth } if domain.periodic_x => (width, depth),
            _ => return Err(DecompositionError::NotAStrip),
        };
        let s = 0.5f64.powi(j as i32);
        let k = base.op.k;
        let order = k + 2;
        let count = (width / s).round() as usize;
        if s < params.min_radius_cells * domain.h() {
            return Err(DecompositionError::ScaleTooFine(j));
        }
        if (count as f64 * s - width).abs() > 1e-12 || count < order as usize || 3.0 * s > depth {
            return Err(DecompositionError::ScaleTooCoarse(j));
        }
        let mut centers = Vec::with_capacity(count);
        let mut projections = Vec::with_capacity(count);
        for i in 0..count {
            let cx = ((i as f64 + order as f64 / 2.0) * s).rem_euclid(width);
            let p = base.with_ball(vec![cx, 2.0 * s], s);
            projections.push(apply_projection_grid(&p, u, Some(domain))?.poly);
            centers.push(cx);
        }
        Ok(Scale { s, count, order, k, centers, projections, width })
    }

    /// ρ_j(y): 1 on {y ≤ s/2}, 0 on {y ≥ s}.
    fn rho(&self, y: f64) -> f64 {
        smoothstep(self.k, (self.s - y) / (0.5 * self.s))
    }

    /// Nonzero (i, ρ_{j,i}(x)) at tangential position x.
    fn partition(&self, x: f64) -> Vec<(usize, f64)> {
        let t = x / self.s;
        let base = t.floor() as i64;
        (0..self.order as i64)
            .map(|d| {
                let i = (base - d).rem_euclid(self.count as i64) as usize;
                (i, bspline(self.order, t - (base - d) as f64))
            })
            .filter(|(_, v)| *v != 0.0)
            .collect()
    }

    /// Π_{j,i}u at x, using the periodic image of x nearest to the ball.
    fn eval(&self, i: usize, x: [f64; 2]) -> Vec<f64> {
        let mut dx = x[0] - self.centers[i];
        dx -= self.width * (dx / self.width).round();
        self.projections[i].eval(&[self.centers[i] + dx, x[1]])
    }

    fn apply(&self, u: &GridFunction, domain: &GridDomain) -> GridFunction {
        let mut out = u.clone();
        for c in domain.cells() {
            let x = domain.grid.center_of(c);
            let r = self.rho(x[1]);
            if r == 0.0 {
                continue;
            }
            let mut acc = vec![0.0; u.dim];
            for (i, w) in self.partition(x[0]) {
                for (a, p) in acc.iter_mut().zip(self.eval(i, x)) {
                    *a += w * p;
                }
            }
            for (o, (uv, a)) in out.at_mut(c).iter_mut().zip(u.at(c).iter().zip(acc)) {
                *o = (1.0 - r) * uv + r * a;
            }
        }
        out
    }
}

/// T_j u, T_{j+1} u and the split T_{j+1}u − T_j u = I_j[u] + II_j[u].
pub fn replacement_sequence(
    u: &GridFunction,
    op: &DiffOperator,
    domain: &GridDomain,
    params: &ReplacementParams,
) -> Result<ReplacementStep, DecompositionError> {
    let profile = c_ellipticity(op, 12);
    if profile.verdict != Verdict::CElliptic || op.n != 2 {
        return Err(DecompositionError::NotCElliptic);
    }
    let m = profile.deg_p.unwrap_or(1).max(1);
    let base = build_projection(op, &BallSpec::new(vec![0.0, 0.0], 1.0, m), &profile, None)?;
    let j = params.j;
    let a = Scale::build(u, &base, domain, j, params)?;
    let b = Scale::build(u, &base, domain, j + 1, params)?;
    let t_j = a.apply(u, domain);
    let t_next = b.apply(u, domain);
    let mut i_j = GridFunction::zeros(&u.grid, u.dim);
    let mut ii_j = GridFunction::zeros(&u.grid, u.dim);
    for c in domain.cells() {
        let x = domain.grid.center_of(c);
        let (ra, rb) = (a.rho(x[1]), b.rho(x[1]));
        let pa = a.partition(x[0]);
        if ra != rb {
            let out = i_j.at_mut(c);
            for &(m, w) in &pa {
                for (o, (uv, p)) in out.iter_mut().zip(u.at(c).iter().zip(a.eval(m, x))) {
                    *o += (ra - rb) * w * (uv - p);
                }
            }
        }
        if rb != 0.0 {
            let pb = b.partition(x[0]);
            let out = ii_j.at_mut(c);
            for &(m, wm) in &pa {
                let pm = a.eval(m, x);
                for &(i, wi) in &pb {
                    for (o, (q, p)) in out.iter_mut().zip(b.eval(i, x).iter().zip(&pm)) {
                        *o += rb * wm * wi * (q - p);
                    }
                }
            }
        }
    }
    Ok(ReplacementStep { j, t_j, t_next, i_j, ii_j })
}

/// Cells of Ω_{j−i₀} \ Ω_{j+i₀} = {2^{−j−i₀} ≤ y < 2^{−j+i₀}}.
pub fn strip_band_cells(domain: &GridDomain, j: u32, i0: u32) -> Vec<usize> {
    let lo = 0.5f64.powi((j + i0) as i32);
    let hi = 2f64.powi(i0 as i32 - j as i32);
    domain
        .cells()
        .into_iter()
        .filter(|&c| {
            let y = domain.grid.center_of(c)[1];
            y >= lo && y < hi
        })
        .collect()
}

/// Σ_{ℓ ≤ k} ‖D^ℓ g‖_{L¹} with finite differences on stencil-valid cells.
pub fn wk1_norm(g: &GridFunction, k: u32, domain: &GridDomain) -> f64 {
    (0..=k)
        .map(|l| {
            let alphas: Vec<_> = fd::gradient_indices(2, l).into_iter().map(|e| e.0).collect();
            let cells = fd::valid_cells(domain, &alphas);
            fd::apply_gradient(g, l, domain, &cells).lp_norm(&cells, 1.0, None)
        })
        .sum()
}

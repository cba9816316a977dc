//! Averaged Taylor polynomials and Π_𝔸^B on grid samples.
//!
//! The functionals u ↦ ∫ u q_β are approximated by midpoint sums over the cells
//! whose centers lie in the ball, then corrected by the inverse of their values on
//! monomials, so that every polynomial of degree ≤ m is reproduced exactly.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;

use super::{taylor_kernels, BallSpec, ProjectionError, ProjectionOperator};
use crate::domains::{GridDomain, GridFunction};
use crate::fd;
use crate::numerics::Ratio;
use crate::poly_core::moments::unit_moment_ratio;
use crate::poly_core::{indices_up_to, to_f64, unit_ball_volume, BallWeight, DiffOperator, MultiIndex, VPolyF64, VPolynomial};

/// 𝕋_m^B of grid data: coordinates in local monomials of 𝒫_m, and the global polynomial.
#[derive(Clone, Debug)]
pub struct GridTaylor {
    pub local_coords: Vec<f64>,
    pub poly: VPolyF64,
}

#[derive(Clone, Debug)]
pub struct GridProjection {
    pub local_coords: Vec<f64>,
    pub poly: VPolyF64,
}

/// Cells whose centers lie in the open ball, as (cell index, local coordinates).
fn ball_cells(u: &GridFunction, ball: &BallSpec, domain: Option<&GridDomain>) -> Result<Vec<(usize, [f64; 2])>, ProjectionError> {
    let g = &u.grid;
    let (c, r) = (&ball.center, ball.radius);
    if ball.center.len() != 2 {
        return Err(ProjectionError::DimensionMismatch { expected: 2, got: ball.center.len() });
    }
    let lo = [g.origin[0], g.origin[1]];
    let hi = [g.origin[0] + g.nx as f64 * g.h, g.origin[1] + g.ny as f64 * g.h];
    // On tangentially periodic domains the ball may wrap around in x.
    let period = domain.filter(|d| d.periodic_x).map(|_| hi[0] - lo[0]);
    let x_out = match period {
        Some(w) => 2.0 * r >= w,
        None => c[0] - r < lo[0] - 1e-12 || c[0] + r > hi[0] + 1e-12,
    };
    if x_out || c[1] - r < lo[1] - 1e-12 || c[1] + r > hi[1] + 1e-12 {
        return Err(ProjectionError::BallOutsideGrid);
    }
    let mut out = Vec::new();
    for idx in 0..g.len() {
        let x = g.center_of(idx);
        let mut dx = x[0] - c[0];
        if let Some(w) = period {
            dx -= w * (dx / w).round();
        }
        let z = [dx / r, (x[1] - c[1]) / r];
        if z[0] * z[0] + z[1] * z[1] < 1.0 {
            if let Some(d) = domain {
                if !d.mask[idx] {
                    return Err(ProjectionError::BallOutsideGrid);
                }
            }
            out.push((idx, z));
        }
    }
    if out.is_empty() {
        return Err(ProjectionError::BallOutsideGrid);
    }
    Ok(out)
}

fn local_taylor_coords(u: &GridFunction, m: u32, ball: &BallSpec, domain: Option<&GridDomain>) -> Result<Vec<f64>, ProjectionError> {
    if ball.rho < m {
        return Err(ProjectionError::WeightTooRough { rho: ball.rho, m });
    }
    let cells = ball_cells(u, ball, domain)?;
    let n = 2;
    let kernels = taylor_kernels(n, m, ball.rho);
    let idx = indices_up_to(n, m);
    let mass = unit_ball_volume(n) * to_f64(&unit_moment_ratio(&MultiIndex::zero(n), BallWeight::Bump(ball.rho)));
    let dv = (u.grid.h / ball.radius).powi(2) / mass;
    // Kernel values at the cells, one row per β.
    let kv: Vec<Vec<f64>> = kernels
        .iter()
        .map(|(_, q)| cells.iter().map(|(_, z)| q.eval_f64(z) * dv).collect())
        .collect();
    let nb = idx.len();
    let r = DMatrix::from_fn(nb, nb, |b, b2| {
        cells.iter().zip(&kv[b]).map(|((_, z), w)| w * idx[b2].eval_f64(z)).sum::<f64>()
    });
    let lu = r.lu();
    let mut coords = vec![0.0; nb * u.dim];
    for comp in 0..u.dim {
        let raw = DVector::from_fn(nb, |b, _| {
            cells.iter().zip(&kv[b]).map(|((c, _), w)| w * u.at(*c)[comp]).sum::<f64>()
        });
        let corrected = lu.solve(&raw).ok_or(ProjectionError::SingularGram)?;
        for b in 0..nb {
            coords[b * u.dim + comp] = corrected[b];
        }
    }
    Ok(coords)
}

fn local_to_global(ball: &BallSpec, indices: &[MultiIndex], dim: usize, coords: &[f64]) -> VPolyF64 {
    let exact: Vec<BigRational> = coords
        .iter()
        .map(|&c| BigRational::from_float(c).unwrap_or_default())
        .collect();
    let local = VPolynomial::from_coordinates(2, dim, indices, &exact);
    ball.to_global(&local).to_f64()
}

/// 𝕋_m^B u for grid data.
pub fn averaged_taylor_grid(u: &GridFunction, m: u32, ball: &BallSpec, domain: Option<&GridDomain>) -> Result<GridTaylor, ProjectionError> {
    let local_coords = local_taylor_coords(u, m, ball, domain)?;
    let poly = local_to_global(ball, &indices_up_to(2, m), u.dim, &local_coords);
    Ok(GridTaylor { local_coords, poly })
}

/// Π_𝔸^B u for grid data.
pub fn apply_projection_grid(p: &ProjectionOperator, u: &GridFunction, domain: Option<&GridDomain>) -> Result<GridProjection, ProjectionError> {
    if u.dim != p.op.dim_v {
        return Err(ProjectionError::DimensionMismatch { expected: p.op.dim_v, got: u.dim });
    }
    let t = local_taylor_coords(u, p.m - 1, &p.ball, domain)?;
    let local_coords = p.apply_local_coords_f64(&t);
    let poly = local_to_global(&p.ball, &p.indices, u.dim, &local_coords);
    Ok(GridProjection { local_coords, poly })
}

/// ‖Π u‖_{L^∞(Ω)} / avg_B |u|.
pub fn stability_ratio(p: &ProjectionOperator, u: &GridFunction, domain: &GridDomain) -> Result<f64, ProjectionError> {
    let proj = apply_projection_grid(p, u, Some(domain))?;
    let cells = ball_cells(u, &p.ball, Some(domain))?;
    let avg = cells.iter().map(|(c, _)| u.abs_at(*c)).sum::<f64>() / cells.len() as f64;
    let sup = domain
        .cells()
        .into_iter()
        .map(|c| {
            let v = proj.poly.eval(&domain.grid.center_of(c));
            v.iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);
    Ok(sup / avg)
}

/// Samples a polynomial on the masked cells.
pub fn sample(domain: &GridDomain, p: &VPolyF64) -> GridFunction {
    GridFunction::from_fn_masked(domain, p.dim, |x| p.eval(&x))
}

/// ‖D^ℓ(u − Πu)‖_p / (diam^{k−ℓ} ‖𝔸u‖_p) with finite differences on stencil-valid cells.
pub fn poincare_ratio(
    op: &DiffOperator,
    p: &ProjectionOperator,
    u: &GridFunction,
    l: u32,
    q: f64,
    domain: &GridDomain,
    weight: Option<&[f64]>,
) -> Result<Ratio, ProjectionError> {
    let proj = apply_projection_grid(p, u, Some(domain))?;
    let diff = u.sub(&sample(domain, &proj.poly));
    let grad_cells = fd::valid_cells(domain, &fd::gradient_indices(2, l).into_iter().map(|e| e.0).collect::<Vec<_>>());
    let num = fd::apply_gradient(&diff, l, domain, &grad_cells).lp_norm(&grad_cells, q, weight);
    let a_cells = fd::operator_cells(op, domain);
    let au = fd::apply_operator(op, u, domain, &a_cells).lp_norm(&a_cells, q, weight);
    let den = domain.diam.powi((op.k - l.min(op.k)) as i32) * au;
    let scale = u.lp_norm(&domain.cells(), q, weight).max(1e-300);
    Ok(Ratio::new(num, den, scale, 1e-10))
}

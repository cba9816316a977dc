//! Reconstruction of ∂^α u from 𝔸u by a degree-zero Fourier multiplier, and the
//! intermediate-derivative inequality in L¹.

use nalgebra::{DMatrix, DVector};
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::Serialize;

use super::KornError;
use crate::domains::{Grid, GridDomain, GridFunction};
use crate::ellipticity::{c_ellipticity, Verdict};
use crate::fd;
use crate::numerics::Ratio;
use crate::poly_core::{DiffOperator, MultiIndex};

/// Row-major 2-D transform on a grid indexed j·nx + i.
fn fft2(data: &mut [Complex64], nx: usize, ny: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let (px, py) = if inverse {
        (planner.plan_fft_inverse(nx), planner.plan_fft_inverse(ny))
    } else {
        (planner.plan_fft_forward(nx), planner.plan_fft_forward(ny))
    };
    for row in data.chunks_mut(nx) {
        px.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = data[j * nx + i];
        }
        py.process(&mut col);
        for j in 0..ny {
            data[j * nx + i] = col[j];
        }
    }
    if inverse {
        let s = 1.0 / (nx * ny) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

fn angular(k: usize, n: usize, h: f64) -> f64 {
    let s = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    std::f64::consts::TAU * s / (n as f64 * h)
}

fn check_box(grid: &Grid) -> Result<(), KornError> {
    if grid.nx.is_power_of_two() && grid.ny.is_power_of_two() && grid.nx >= 2 && grid.ny >= 2 {
        Ok(())
    } else {
        Err(KornError::NonPowerOfTwoGrid(grid.nx, grid.ny))
    }
}

fn spectra(f: &GridFunction) -> Vec<Vec<Complex64>> {
    let (nx, ny) = (f.grid.nx, f.grid.ny);
    (0..f.dim)
        .map(|d| {
            let mut buf: Vec<Complex64> = (0..nx * ny).map(|c| Complex64::new(f.values[c * f.dim + d], 0.0)).collect();
            fft2(&mut buf, nx, ny, false);
            buf
        })
        .collect()
}

fn assemble(grid: &Grid, specs: Vec<Vec<Complex64>>) -> GridFunction {
    let dim = specs.len();
    let mut out = GridFunction::zeros(grid, dim);
    for (d, mut s) in specs.into_iter().enumerate() {
        fft2(&mut s, grid.nx, grid.ny, true);
        for (c, v) in s.iter().enumerate() {
            out.values[c * dim + d] = v.re;
        }
    }
    out
}

fn i_pow(k: u32) -> Complex64 {
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)][(k % 4) as usize]
}

/// Φ_α(g) = F⁻¹[i^{|α|−k} ξ^α (𝔸[ξ]ᵀ𝔸[ξ])⁻¹ 𝔸[ξ]ᵀ F g] on the periodic box, zero mode
/// dropped. For |α| = k the multiplier is homogeneous of degree zero.
pub fn multiplier_reconstruction_from(op: &DiffOperator, au: &GridFunction, alpha: &MultiIndex) -> Result<GridFunction, KornError> {
    check_box(&au.grid)?;
    if op.n != 2 || alpha.n() != 2 || alpha.order() < op.k || au.dim != op.dim_w {
        return Err(KornError::InvalidParams("need a planar operator, |alpha| >= k and W-valued data".into()));
    }
    let excess = alpha.order() - op.k;
    let phase = i_pow(excess);
    let g = &au.grid;
    let spec = spectra(au);
    let mut out = vec![vec![Complex64::new(0.0, 0.0); g.len()]; op.dim_v];
    for j in 0..g.ny {
        for i in 0..g.nx {
            if i == 0 && j == 0 {
                continue;
            }
            let xi = [angular(i, g.nx, g.h), angular(j, g.ny, g.h)];
            let r = xi[0].hypot(xi[1]);
            let unit = [xi[0] / r, xi[1] / r];
            let a = op.symbol_real(&unit);
            let ata = a.transpose() * &a;
            let smin = ata.symmetric_eigenvalues().min();
            if !(smin > 1e-10 * ata.norm().max(1e-300)) {
                return Err(KornError::NotElliptic);
            }
            let c = j * g.nx + i;
            // With ξ = r·ω: ξ^α (A(ξ)ᵀA(ξ))⁻¹A(ξ)ᵀ = r^{|α|−k} ω^α (A(ω)ᵀA(ω))⁻¹A(ω)ᵀ.
            let scale = alpha.eval_f64(&unit) * r.powi(excess as i32);
            let m: DMatrix<f64> = ata.cholesky().ok_or(KornError::NotElliptic)?.inverse() * a.transpose() * scale;
            let re = DVector::from_iterator(op.dim_w, spec.iter().map(|s| s[c].re));
            let im = DVector::from_iterator(op.dim_w, spec.iter().map(|s| s[c].im));
            let (mr, mi) = (&m * re, &m * im);
            for d in 0..op.dim_v {
                out[d][c] = phase * Complex64::new(mr[d], mi[d]);
            }
        }
    }
    Ok(assemble(g, out))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiplierResult {
    /// ‖Φ_α(𝔸u) − ∂^α u‖₂ / ‖∂^α u‖₂.
    pub rel_error: f64,
    pub max_error: f64,
    pub target_norm: f64,
}

/// Computes 𝔸u and ∂^α u spectrally and compares Φ_α(𝔸u) with ∂^α u.
pub fn multiplier_reconstruction(op: &DiffOperator, u: &GridFunction, alpha: &MultiIndex) -> Result<MultiplierResult, KornError> {
    check_box(&u.grid)?;
    if u.dim != op.dim_v {
        return Err(KornError::InvalidParams(format!("field has {} components, operator expects {}", u.dim, op.dim_v)));
    }
    let g = &u.grid;
    let spec = spectra(u);
    let mut au = vec![vec![Complex64::new(0.0, 0.0); g.len()]; op.dim_w];
    let mut target = vec![vec![Complex64::new(0.0, 0.0); g.len()]; op.dim_v];
    let ik = i_pow(op.k);
    let ia = i_pow(alpha.order());
    for j in 0..g.ny {
        for i in 0..g.nx {
            let xi = [angular(i, g.nx, g.h), angular(j, g.ny, g.h)];
            let a = op.symbol_real(&xi);
            let c = j * g.nx + i;
            let da = ia * alpha.eval_f64(&xi);
            for d in 0..op.dim_v {
                target[d][c] = spec[d][c] * da;
            }
            for r in 0..op.dim_w {
                let s: Complex64 = (0..op.dim_v).map(|d| spec[d][c] * a[(r, d)]).sum();
                au[r][c] = s * ik;
            }
        }
    }
    let au = assemble(g, au);
    let target = assemble(g, target);
    let recon = multiplier_reconstruction_from(op, &au, alpha)?;
    let diff = recon.sub(&target);
    let all: Vec<usize> = (0..g.len()).collect();
    let target_norm = target.lp_norm(&all, 2.0, None);
    if target_norm == 0.0 {
        return Err(KornError::ZeroDenominator);
    }
    Ok(MultiplierResult {
        rel_error: diff.lp_norm(&all, 2.0, None) / target_norm,
        max_error: diff.max_abs(&all),
        target_norm,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterpolationResult {
    /// ‖D^ℓu‖₁ / (‖u‖₁^{1−ℓ/k} ‖𝔸u‖₁^{ℓ/k}).
    pub ratio: Ratio,
    pub grad_l1: f64,
    pub u_l1: f64,
    pub a_l1: f64,
}

/// Finite-difference L¹ norms; u must vanish within the stencil reach of the boundary.
pub fn interpolation_check(op: &DiffOperator, u: &GridFunction, l: u32, domain: &GridDomain) -> Result<InterpolationResult, KornError> {
    if l == 0 || l >= op.k {
        return Err(KornError::InvalidParams(format!("need 1 <= l <= k - 1, got l = {l}, k = {}", op.k)));
    }
    if c_ellipticity(op, 12).verdict != Verdict::CElliptic {
        return Err(KornError::NotCElliptic);
    }
    let all = domain.cells();
    let sup = u.max_abs(&all);
    if sup == 0.0 {
        return Err(KornError::ZeroDenominator);
    }
    let reach = op.k.div_ceil(2) + 1;
    let dist = domain.distance_transform();
    let edge = all.iter().filter(|&&c| dist[c] <= reach).map(|&c| u.abs_at(c)).fold(0.0, f64::max);
    if edge > 1e-12 * sup {
        return Err(KornError::InvalidParams("u does not vanish near the boundary".into()));
    }
    let alphas: Vec<_> = fd::gradient_indices(2, l).into_iter().map(|e| e.0).collect();
    let gcells = fd::valid_cells(domain, &alphas);
    let acells = fd::operator_cells(op, domain);
    let grad_l1 = fd::apply_gradient(u, l, domain, &gcells).lp_norm(&gcells, 1.0, None);
    let a_l1 = fd::apply_operator(op, u, domain, &acells).lp_norm(&acells, 1.0, None);
    let u_l1 = u.lp_norm(&all, 1.0, None);
    let t = l as f64 / op.k as f64;
    let den = u_l1.powf(1.0 - t) * a_l1.powf(t);
    Ok(InterpolationResult { ratio: Ratio::new(grad_l1, den, u_l1, 1e-12), grad_l1, u_l1, a_l1 })
}

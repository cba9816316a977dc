//! Seeded test-function families shared by the subcommands and the acceptance suite.

use ellikorn::domains::{Grid, GridDomain, GridFunction};
use ellikorn::poly_core::{indices_up_to, rat, VPolynomial};
use ellikorn::rng::substream;
use rand::Rng;
use std::f64::consts::TAU;

/// Polynomial of degree ≤ `deg` with coefficients c/d, |c| ≤ 4, 1 ≤ d ≤ 3.
pub fn random_poly(n: usize, dim: usize, deg: u32, seed: u64) -> VPolynomial {
    let mut r = substream(seed, 7);
    let mut p = VPolynomial::zero(n, dim);
    for a in indices_up_to(n, deg) {
        for i in 0..dim {
            let c: i64 = r.random_range(-4..=4);
            p.add_term(a.clone(), i, rat(c, r.random_range(1..=3)));
        }
    }
    p
}

/// Four plane waves per component with frequencies up to 6 rad per unit length.
pub fn wave_field(dim: usize, seed: u64) -> impl Fn([f64; 2]) -> Vec<f64> {
    let mut r = substream(seed, 11);
    let modes: Vec<[f64; 4]> = (0..4 * dim)
        .map(|_| [r.random_range(-6.0..6.0), r.random_range(-6.0..6.0), r.random_range(0.0..TAU), r.random_range(-1.0..1.0)])
        .collect();
    move |x| {
        (0..dim)
            .map(|c| modes[4 * c..4 * c + 4].iter().map(|m| m[3] * (m[0] * x[0] + m[1] * x[1] + m[2]).sin()).sum())
            .collect()
    }
}

/// Six plane waves per component with wavelengths between 1/band.1 and 1/band.0.
pub fn band_field(domain: &GridDomain, dim: usize, seed: u64, band: (f64, f64)) -> GridFunction {
    let mut r = substream(seed, 13);
    let waves: Vec<[f64; 4]> = (0..6 * dim)
        .map(|_| {
            let k = TAU * r.random_range(band.0..band.1);
            let t = r.random_range(0.0..TAU);
            [k * t.cos(), k * t.sin(), r.random_range(0.0..TAU), r.random_range(0.5..1.0)]
        })
        .collect();
    GridFunction::from_fn_masked(domain, dim, |x| {
        (0..dim)
            .map(|c| waves[6 * c..6 * c + 6].iter().map(|w| w[3] * (w[0] * x[0] + w[1] * x[1] + w[2]).sin()).sum())
            .collect()
    })
}

/// Plane waves plus an affine part on the whole grid box.
pub fn affine_wave_field(grid: &Grid, dim: usize, seed: u64) -> GridFunction {
    let mut r = substream(seed, 17);
    let waves: Vec<[f64; 4]> = (0..4 * dim)
        .map(|_| [r.random_range(1.0..5.0), r.random_range(1.0..5.0), r.random_range(0.0..TAU), r.random_range(-1.0..1.0)])
        .collect();
    let aff: Vec<f64> = (0..3 * dim).map(|_| r.random_range(-1.0..1.0)).collect();
    GridFunction::from_fn(grid, dim, |x| {
        (0..dim)
            .map(|c| {
                let lin = aff[3 * c] + aff[3 * c + 1] * x[0] + aff[3 * c + 2] * x[1];
                lin + waves[4 * c..4 * c + 4].iter().map(|w| w[3] * (w[0] * x[0] + w[1] * x[1] + w[2]).sin()).sum::<f64>()
            })
            .collect()
    })
}

/// Zero outside the domain mask.
pub fn restrict(mut f: GridFunction, domain: &GridDomain) -> GridFunction {
    for c in 0..domain.grid.len() {
        if !domain.mask[c] {
            f.at_mut(c).fill(0.0);
        }
    }
    f
}

/// Scalar noise in [−1, 1] with a tenth of the cells raised to [−20, 20].
pub fn rough_field(grid: &Grid, seed: u64) -> GridFunction {
    let mut r = substream(seed, 19);
    let mut f = GridFunction::zeros(grid, 1);
    for v in f.values.iter_mut() {
        let u: f64 = r.random_range(0.0..1.0);
        *v = if u < 0.1 { r.random_range(-20.0..20.0) } else { r.random_range(-1.0..1.0) };
    }
    f
}

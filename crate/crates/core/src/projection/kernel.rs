//! The Maz'ya kernel, the representation formula and discrete Riesz potentials.

use super::{averaged_taylor, BallSpec, ProjectionError, ProjectionOperator};
use crate::domains::{GridDomain, GridFunction};
use crate::fd;
use crate::numerics::{gauss_legendre, gl_integrate};
use crate::poly_core::{homogeneous_indices, to_f64, MultiIndex, VPolynomial};

/// Chord {t : |x + tθ − c| < r} of the ray through the ball, if any.
fn chord(ball: &BallSpec, x: &[f64], theta: &[f64]) -> Option<(f64, f64)> {
    let d: Vec<f64> = x.iter().zip(&ball.center).map(|(a, c)| a - c).collect();
    let b: f64 = d.iter().zip(theta).map(|(a, t)| a * t).sum();
    let cc: f64 = d.iter().map(|a| a * a).sum::<f64>() - ball.radius * ball.radius;
    let disc = b * b - cc;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some((-b - s, -b + s))
}

/// ∫_s^∞ ω(x + tθ) t^{n−1} dt; the integrand is a polynomial on the chord.
fn ray_integral(ball: &BallSpec, x: &[f64], theta: &[f64], s: f64, nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
    let Some((t0, t1)) = chord(ball, x, theta) else { return 0.0 };
    let lo = s.max(t0);
    if t1 <= lo {
        return 0.0;
    }
    let n = x.len();
    gl_integrate(nodes, lo, t1, |t| {
        let p: Vec<f64> = x.iter().zip(theta).map(|(a, th)| a + t * th).collect();
        ball.omega(&p) * t.powi(n as i32 - 1)
    })
}

fn ray_nodes(ball: &BallSpec, n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_legendre(ball.rho as usize + n + 1)
}

fn inv_factorial(alpha: &MultiIndex) -> f64 {
    1.0 / to_f64(&num_rational::BigRational::from_integer(alpha.factorial()))
}

/// K_{α,B}(x,y) = ((−1)^m m/α!) (y−x)^α/|x−y|^n ∫_{|x−y|}^∞ ω(x + tθ) t^{n−1} dt.
pub fn maz_kernel(alpha: &MultiIndex, ball: &BallSpec, x: &[f64], y: &[f64]) -> Result<f64, ProjectionError> {
    let n = x.len();
    let diff: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let s = crate::numerics::norm(&diff);
    if s == 0.0 {
        return Err(ProjectionError::CoincidentPoints);
    }
    let theta: Vec<f64> = diff.iter().map(|d| d / s).collect();
    let m = alpha.order();
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let f = ray_integral(ball, x, &theta, s, &ray_nodes(ball, n));
    Ok(sign * m as f64 * inv_factorial(alpha) * alpha.eval_f64(&diff) / s.powi(n as i32) * f)
}

/// Both sides of u(x) = 𝕋_{m−1}^B u(x) + Σ_{|α|=m} ∫ K_{α,B}(x,y) ∂^α u(y) dy in the plane.
///
/// The integral is evaluated in polar coordinates around x: in the radius the
/// integrand is a polynomial on each piece of the chord, and in the angle it is
/// smooth (periodic when x ∈ B), so Gauss–Legendre and trapezoid rules converge fast.
pub fn maz_representation(u: &VPolynomial, m: u32, ball: &BallSpec, x: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
    let lhs = u.eval_f64(&x);
    let mut rhs = averaged_taylor(u, m - 1, ball).eval_f64(&x);
    let derivs: Vec<(MultiIndex, VPolynomial)> = homogeneous_indices(2, m)
        .into_iter()
        .map(|a| {
            let d = u.derivative_multi(&a);
            (a, d)
        })
        .filter(|(_, d)| !d.is_zero())
        .collect();
    if derivs.is_empty() {
        return (lhs, rhs);
    }
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let rn = ray_nodes(ball, 2);
    let sn = gauss_legendre(24);
    let dx = [x[0] - ball.center[0], x[1] - ball.center[1]];
    let dist = (dx[0] * dx[0] + dx[1] * dx[1]).sqrt();
    let radial = |phi: f64| -> Vec<f64> {
        let theta = [phi.cos(), phi.sin()];
        let mut acc = vec![0.0; u.dim];
        let Some((t0, t1)) = chord(ball, &x, &theta) else { return acc };
        let a = t0.max(0.0);
        for (lo, hi) in [(0.0, a), (a, t1)] {
            if hi <= lo {
                continue;
            }
            for (node, w) in sn.0.iter().zip(&sn.1) {
                let s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * node;
                let wt = 0.5 * (hi - lo) * w;
                let f = ray_integral(ball, &x, &theta, s, &rn);
                let y = [x[0] + s * theta[0], x[1] + s * theta[1]];
                for (alpha, d) in &derivs {
                    let c = sign * m as f64 * inv_factorial(alpha) * alpha.eval_f64(&theta) * s.powi(m as i32 - 1) * f;
                    for (acc_i, di) in acc.iter_mut().zip(d.eval_f64(&y)) {
                        *acc_i += wt * c * di;
                    }
                }
            }
        }
        acc
    };
    let mut integral = vec![0.0; u.dim];
    if dist < ball.radius {
        let np = 720;
        for k in 0..np {
            let phi = std::f64::consts::TAU * k as f64 / np as f64;
            for (i, v) in radial(phi).into_iter().enumerate() {
                integral[i] += v * std::f64::consts::TAU / np as f64;
            }
        }
    } else {
        let phic = (-dx[1]).atan2(-dx[0]);
        let beta = (ball.radius / dist).asin();
        let pn = gauss_legendre(160);
        for (lo, hi) in [(phic - beta, phic), (phic, phic + beta)] {
            for (node, w) in pn.0.iter().zip(&pn.1) {
                let phi = 0.5 * (lo + hi) + 0.5 * (hi - lo) * node;
                for (i, v) in radial(phi).into_iter().enumerate() {
                    integral[i] += 0.5 * (hi - lo) * w * v;
                }
            }
        }
    }
    for (r, v) in rhs.iter_mut().zip(integral) {
        *r += v;
    }
    (lhs, rhs)
}

/// Mean of |z|^{β−2} over a cell of side h centered at 0.
fn self_cell_average(beta: f64, h: f64) -> f64 {
    // ∫_{[0,a]²} |z|^γ = (2/(γ+2)) a^{γ+2} ∫_0^{π/4} cos^{−(γ+2)} θ dθ with γ + 2 = β.
    let a = h / 2.0;
    let nodes = gauss_legendre(20);
    let ang = gl_integrate(&nodes, 0.0, std::f64::consts::FRAC_PI_4, |t| t.cos().powf(-beta));
    4.0 * 2.0 / beta * a.powf(beta) * ang / (h * h)
}

/// (I_β g)(x) = Σ_y g(y) |x−y|^{β−2} h² at the target cells.
pub fn riesz_potential(g: &[f64], sources: &[usize], targets: &[usize], domain: &GridDomain, beta: f64) -> Vec<f64> {
    let grid = &domain.grid;
    let h = grid.h;
    let area = h * h;
    let self_k = self_cell_average(beta, h);
    targets
        .iter()
        .map(|&t| {
            let xt = grid.center_of(t);
            sources
                .iter()
                .map(|&s| {
                    let k = if s == t {
                        self_k
                    } else {
                        let xs = grid.center_of(s);
                        let r = ((xt[0] - xs[0]).powi(2) + (xt[1] - xs[1]).powi(2)).sqrt();
                        r.powf(beta - 2.0)
                    };
                    g[s] * k * area
                })
                .sum()
        })
        .collect()
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct RieszCheck {
    /// max_x |D^ℓ(u − Πu)(x)| / I_{k−ℓ}|𝔸u|(x).
    pub constant: f64,
    pub points: usize,
}

/// Empirical constant in |D^ℓ(u − Πu)| ≤ C I_{k−ℓ}|𝔸u| on a domain star-shaped with respect to the ball.
pub fn riesz_bound_check(p: &ProjectionOperator, u: &GridFunction, l: u32, domain: &GridDomain) -> Result<RieszCheck, ProjectionError> {
    let op = &p.op;
    let proj = super::apply_projection_grid(p, u, Some(domain))?;
    let diff = u.sub(&super::grid::sample(domain, &proj.poly));
    let targets = fd::valid_cells(domain, &fd::gradient_indices(2, l).into_iter().map(|e| e.0).collect::<Vec<_>>());
    let num = fd::apply_gradient(&diff, l, domain, &targets);
    let sources = fd::operator_cells(op, domain);
    let au = fd::apply_operator(op, u, domain, &sources);
    let g: Vec<f64> = (0..domain.grid.len()).map(|c| au.abs_at(c)).collect();
    let scale = u.max_abs(&domain.cells()).max(1e-300);
    let num_max = num.max_abs(&targets);
    if au.max_abs(&sources) <= 1e-10 * scale {
        if num_max <= 1e-9 * scale {
            return Ok(RieszCheck { constant: 0.0, points: targets.len() });
        }
        return Err(ProjectionError::DegenerateDenominator);
    }
    let pot = riesz_potential(&g, &sources, &targets, domain, (op.k - l) as f64);
    let constant = targets
        .iter()
        .zip(&pot)
        .filter(|(_, d)| **d > 0.0)
        .map(|(&t, d)| num.abs_at(t) / d)
        .fold(0.0, f64::max);
    Ok(RieszCheck { constant, points: targets.len() })
}

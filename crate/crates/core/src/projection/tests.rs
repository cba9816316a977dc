use rand::Rng as _;

use super::*;
use crate::domains::{make_domain, DomainKind, GridDomain, GridFunction};
use crate::ellipticity::c_ellipticity;
use crate::poly_core::gallery::{gradient, grad_sym_grad_dev, laplacian, sym_grad, sym_grad_dev};
use crate::poly_core::{rat, rint, to_f64};
use crate::rng::substream;

fn random_poly(n: usize, dim: usize, deg: u32, seed: u64) -> VPolynomial {
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

fn random_field(dim: usize, seed: u64) -> impl Fn([f64; 2]) -> Vec<f64> {
    let mut r = substream(seed, 11);
    let modes: Vec<(f64, f64, f64, f64)> = (0..4 * dim)
        .map(|_| (r.random_range(-6.0..6.0), r.random_range(-6.0..6.0), r.random_range(0.0..6.3), r.random_range(-1.0..1.0)))
        .collect();
    move |x| {
        (0..dim)
            .map(|c| modes[4 * c..4 * c + 4].iter().map(|(a, b, ph, amp)| amp * (a * x[0] + b * x[1] + ph).sin()).sum())
            .collect()
    }
}

fn ball() -> BallSpec {
    BallSpec::new(vec![0.25, -0.5], 0.75, 2)
}

fn projection(op: &DiffOperator, b: &BallSpec) -> ProjectionOperator {
    build_projection(op, b, &c_ellipticity(op, 8), None).unwrap()
}

#[test]
fn averaged_taylor_reproduces_low_degree() {
    for seed in 0..5 {
        let u = random_poly(2, 2, 3, seed);
        assert_eq!(averaged_taylor(&u, 3, &ball()), u);
        assert_eq!(averaged_taylor(&u, 5, &ball()), u);
    }
}

#[test]
fn order_zero_is_weighted_mean() {
    let mut u = VPolynomial::zero(2, 1);
    u.add_term(MultiIndex::new(vec![2, 0]), 0, rint(1));
    let t = averaged_taylor_unit(&u, 0, 1);
    // ∫ z₁² ω with ω ∝ (1−|z|²) on the unit disk: 1/6.
    assert_eq!(t.coeffs.len(), 1);
    assert_eq!(t.coeffs[&MultiIndex::zero(2)][0], rat(1, 6));
}

#[test]
fn kernel_route_matches_moment_route() {
    for m in 0..4 {
        for seed in 0..4 {
            let u = random_poly(2, 1, 4, seed);
            for rho in m..m + 3 {
                assert_eq!(averaged_taylor_unit_kernel(&u, m, rho), averaged_taylor_unit(&u, m, rho), "rho {rho} m {m}");
            }
        }
    }
}

#[test]
fn commutation_on_random_cubics() {
    let b = ball();
    for op in [sym_grad(2), laplacian(2), gradient(2, 1, 2)] {
        let m = 3;
        for seed in 0..20 {
            let u = random_poly(2, op.dim_v, 3, 100 + seed);
            let lhs = op.apply_to_polynomial(&averaged_taylor(&u, m, &b)).unwrap();
            let rhs = averaged_taylor(&op.apply_to_polynomial(&u).unwrap(), m - op.k, &b);
            assert_eq!(lhs, rhs);
        }
    }
}

#[test]
fn symmetric_gradient_projection_is_exact() {
    let p = projection(&sym_grad(2), &ball());
    assert_eq!(p.m, 2);
    assert_eq!(p.kernel_count, 3);
    assert!(p.is_idempotent());
    assert!(p.dual_is_exact());
    assert_eq!(p.pi_matrix, p.pi_matrix_coordinate_route());
}

#[test]
fn corrector_identity_holds() {
    for op in [sym_grad(2), gradient(2, 1, 2), sym_grad_dev(3)] {
        let p = projection(&op, &BallSpec::new(vec![0.0; op.n], 1.0, 1));
        let wk = p.kernel_count;
        for q in &p.psi_basis {
            let aq = op.apply_to_polynomial(q).unwrap();
            for (l, xi) in p.xi_polys.iter().enumerate() {
                let lhs = mean_inner(q, &p.dual_poly(wk + l));
                let rhs = mean_inner(&aq, &op.apply_to_polynomial(xi).unwrap());
                assert_eq!(lhs, rhs);
            }
            // Π̃q + (I − Π̃)q = q with the complement computed through the correctors.
            let c = p.apply_local_coords(&q.coordinates(&p.indices));
            let proj = VPolynomial::from_coordinates(op.n, op.dim_v, &p.indices, &c);
            assert_eq!(proj.add(&p.complement_via_correctors(q)), *q);
        }
    }
}

#[test]
fn degree_is_not_increased() {
    let b = BallSpec::new(vec![0.5, 0.25], 0.5, 1);
    for op in [sym_grad(2), gradient(2, 2, 1), gradient(2, 1, 3), grad_sym_grad_dev(2)] {
        let prof = c_ellipticity(&op, 8);
        if prof.verdict != Verdict::CElliptic {
            continue;
        }
        let p = build_projection(&op, &b, &prof, None).unwrap();
        for l in 0..p.m {
            for a in homogeneous_indices(2, l) {
                for i in 0..op.dim_v {
                    let u = VPolynomial::monomial(op.dim_v, a.clone(), i, rint(1));
                    let pu = p.apply(&u).unwrap();
                    assert!(pu.degree().at_most(l), "{:?} deg {l}", pu.degree());
                    assert!(op.apply_to_polynomial(&pu).unwrap().is_zero());
                }
            }
        }
    }
}

#[test]
fn kernel_elements_are_fixed() {
    let b = ball();
    let op = sym_grad(2);
    let p = projection(&op, &b);
    // Rigid motion a + Bx with B skew.
    let mut q = VPolynomial::zero(2, 2);
    q.add_term(MultiIndex::zero(2), 0, rat(3, 2));
    q.add_term(MultiIndex::zero(2), 1, rint(-2));
    q.add_term(MultiIndex::new(vec![0, 1]), 0, rint(5));
    q.add_term(MultiIndex::new(vec![1, 0]), 1, rint(-5));
    assert_eq!(p.apply(&q).unwrap(), q);
    let u = random_poly(2, 2, 4, 3);
    let pu = p.apply(&u).unwrap();
    assert_eq!(p.apply(&pu).unwrap(), pu);
}

#[test]
fn gradient_projection_is_weighted_average() {
    let b = ball();
    let op = gradient(2, 1, 1);
    let p = projection(&op, &b);
    assert_eq!(p.m, 1);
    for seed in 0..3 {
        let u = random_poly(2, 1, 4, seed);
        let pu = p.apply(&u).unwrap();
        assert!(pu.degree().at_most(0));
        // Oracle: ∫ u ω over the ball by tensor Gauss–Legendre in polar coordinates.
        let (nr, na) = (crate::numerics::gauss_legendre(12), 64);
        let uf = u.to_f64();
        let mut s = 0.0;
        for (t, w) in nr.0.iter().zip(&nr.1) {
            let rr = 0.5 * (t + 1.0) * b.radius;
            for k in 0..na {
                let phi = std::f64::consts::TAU * k as f64 / na as f64;
                let x = [b.center[0] + rr * phi.cos(), b.center[1] + rr * phi.sin()];
                s += 0.5 * b.radius * w * std::f64::consts::TAU / na as f64 * rr * uf.eval(&x)[0] * b.omega(&x);
            }
        }
        let got = pu.coeffs.get(&MultiIndex::zero(2)).map_or(0.0, |v| to_f64(&v[0]));
        assert!((got - s).abs() < 1e-12 * (1.0 + s.abs()), "{got} vs {s}");
    }
}

#[test]
fn rejects_non_c_elliptic() {
    let op = sym_grad_dev(2);
    let err = build_projection(&op, &ball(), &c_ellipticity(&op, 6), None).unwrap_err();
    assert_eq!(err, ProjectionError::NotCElliptic);
}

#[test]
fn json_roundtrip() {
    let p = projection(&sym_grad(2), &ball());
    let text = serde_json::to_string(&p.to_json()).unwrap();
    let q = ProjectionOperator::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(q.pi_matrix, p.pi_matrix);
    assert_eq!(q.psi_basis, p.psi_basis);
    assert_eq!(q.xi_polys, p.xi_polys);
    let mut bad = p.to_json();
    bad["pi_matrix"][0][0] = serde_json::json!("7/3");
    assert!(ProjectionOperator::from_json(&bad).is_err());
}

fn square(h: f64) -> GridDomain {
    make_domain(DomainKind::Square { side: 1.0 }, h).unwrap()
}

fn center_ball() -> BallSpec {
    BallSpec::new(vec![0.5, 0.5], 0.25, 1)
}

#[test]
fn grid_taylor_reproduces_polynomials() {
    let d = square(1.0 / 32.0);
    let u = random_poly(2, 2, 2, 9);
    let uf = u.to_f64();
    let g = GridFunction::from_fn_masked(&d, 2, |x| uf.eval(&x));
    let b = BallSpec::new(vec![0.5, 0.5], 0.25, 2);
    assert_eq!(
        averaged_taylor_grid(&g, 2, &center_ball(), Some(&d)).unwrap_err(),
        ProjectionError::WeightTooRough { rho: 1, m: 2 }
    );
    let t = averaged_taylor_grid(&g, 2, &b, Some(&d)).unwrap();
    for x in [[0.1, 0.2], [0.7, 0.9], [0.5, 0.5]] {
        let (a, b) = (t.poly.eval(&x), uf.eval(&x));
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-10, "{p} vs {q}");
        }
    }
}

#[test]
fn grid_projection_is_idempotent_and_fixes_constants() {
    let d = square(1.0 / 32.0);
    let op = sym_grad(2);
    let p = projection(&op, &center_ball());
    let c = GridFunction::from_fn_masked(&d, 2, |_| vec![1.5, -0.25]);
    let pc = apply_projection_grid(&p, &c, Some(&d)).unwrap();
    let v = pc.poly.eval(&[0.3, 0.8]);
    assert!((v[0] - 1.5).abs() < 1e-12 && (v[1] + 0.25).abs() < 1e-12);
    for seed in 0..5 {
        let u = GridFunction::from_fn_masked(&d, 2, random_field(2, seed));
        let once = apply_projection_grid(&p, &u, Some(&d)).unwrap();
        let twice = apply_projection_grid(&p, &grid::sample(&d, &once.poly), Some(&d)).unwrap();
        let scale = once.local_coords.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
        for (a, b) in once.local_coords.iter().zip(&twice.local_coords) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn ball_outside_grid_is_rejected() {
    let d = square(1.0 / 16.0);
    let p = projection(&sym_grad(2), &BallSpec::new(vec![0.9, 0.5], 0.25, 1));
    let u = GridFunction::from_fn_masked(&d, 2, |_| vec![1.0, 0.0]);
    assert_eq!(apply_projection_grid(&p, &u, Some(&d)).unwrap_err(), ProjectionError::BallOutsideGrid);
}

#[test]
fn stability_ratios_are_bounded() {
    let d = square(1.0 / 32.0);
    let p = projection(&sym_grad(2), &center_ball());
    let ratios: Vec<f64> = (0..50)
        .map(|s| stability_ratio(&p, &GridFunction::from_fn_masked(&d, 2, random_field(2, 200 + s)), &d).unwrap())
        .collect();
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(max.is_finite() && max < 50.0, "max stability ratio {max}");
}

#[test]
fn kernel_vanishes_off_the_ray_and_rejects_coincident_points() {
    let b = BallSpec::new(vec![0.0, 0.0], 1.0, 1);
    let a = MultiIndex::new(vec![1, 0]);
    // The ray from (2,0) through (3,0) points away from the ball.
    assert_eq!(maz_kernel(&a, &b, &[2.0, 0.0], &[3.0, 0.0]).unwrap(), 0.0);
    assert_eq!(maz_kernel(&a, &b, &[0.1, 0.1], &[0.1, 0.1]).unwrap_err(), ProjectionError::CoincidentPoints);
    assert!(maz_kernel(&a, &b, &[2.0, 0.0], &[1.0, 0.0]).unwrap() != 0.0);
}

#[test]
fn kernel_scales_like_distance_power() {
    let b = BallSpec::new(vec![0.5, 0.5], 0.25, 2);
    let x = [0.55, 0.45];
    let th = [0.6f64, 0.8];
    for (a, m) in [(MultiIndex::new(vec![1, 0]), 1i32), (MultiIndex::new(vec![1, 1]), 2), (MultiIndex::new(vec![2, 1]), 3)] {
        let pts: Vec<(f64, f64)> = (0..9)
            .map(|i| {
                let s = 10f64.powf(-5.0 + 0.375 * i as f64);
                let y = [x[0] + s * th[0], x[1] + s * th[1]];
                (s.ln(), maz_kernel(&a, &b, &x, &y).unwrap().abs().ln())
            })
            .collect();
        let (mx, my) = pts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / 9.0, acc.1 + p.1 / 9.0));
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope - (m - 2) as f64).abs() < 0.01, "m {m} slope {slope}");
    }
}

#[test]
fn representation_formula_on_random_quadratics() {
    let b = BallSpec::new(vec![0.5, 0.5], 0.25, 1);
    let h = 1.0 / 256.0;
    // Lattice points: three inside B, one on the far side of Ω, one near a corner.
    let pts = [(128, 128), (150, 100), (100, 170), (230, 40), (20, 240)];
    for seed in 0..3 {
        let u = random_poly(2, 2, 2, 300 + seed);
        for m in 1..=2 {
            for (i, j) in pts {
                let (lhs, rhs) = maz_representation(&u, m, &b, [i as f64 * h, j as f64 * h]);
                for (a, c) in lhs.iter().zip(&rhs) {
                    assert!((a - c).abs() <= 1e-6, "m {m} at ({i},{j}): {a} vs {c}");
                }
            }
        }
    }
}

#[test]
fn riesz_check_vanishes_on_the_kernel() {
    let d = square(1.0 / 32.0);
    let op = sym_grad(2);
    let p = projection(&op, &center_ball());
    let u = GridFunction::from_fn_masked(&d, 2, |x| vec![1.0 + 2.0 * x[1], -0.5 - 2.0 * x[0]]);
    assert_eq!(riesz_bound_check(&p, &u, 0, &d).unwrap().constant, 0.0);
}

fn riesz_constant(d: &GridDomain, b: &BallSpec, seed: u64) -> f64 {
    let op = sym_grad(2);
    let p = projection(&op, b);
    let uf = random_poly(2, 2, 3, seed).to_f64();
    let u = GridFunction::from_fn_masked(d, 2, |x| uf.eval(&x));
    riesz_bound_check(&p, &u, 0, d).unwrap().constant
}

#[test]
fn riesz_constant_is_resolution_stable_on_square() {
    for seed in 0..2 {
        let c1 = riesz_constant(&square(1.0 / 32.0), &center_ball(), 400 + seed);
        let c2 = riesz_constant(&square(1.0 / 64.0), &center_ball(), 400 + seed);
        assert!(c1.is_finite() && c1 > 0.0);
        assert!((c1 / c2 - 1.0).abs() <= 0.2, "{c1} vs {c2}");
    }
}

#[test]
fn riesz_constant_finite_on_lshape() {
    let d = make_domain(DomainKind::Lshape, 1.0 / 32.0).unwrap();
    let c = riesz_constant(&d, &BallSpec::new(vec![0.25, 0.25], 0.2, 1), 500);
    assert!(c.is_finite() && c > 0.0);
}

#[test]
fn poincare_ratio_is_uniform() {
    let op = sym_grad(2);
    let lshape_ball = BallSpec::new(vec![0.25, 0.25], 0.2, 1);
    let mut maxima = Vec::new();
    for h in [1.0 / 32.0, 1.0 / 64.0] {
        let mut max = 0.0f64;
        for (d, b) in [(square(h), center_ball()), (make_domain(DomainKind::Lshape, h).unwrap(), lshape_ball.clone())] {
            let p = projection(&op, &b);
            for s in 0..50 {
                let u = GridFunction::from_fn_masked(&d, 2, random_field(2, 600 + s));
                let r = poincare_ratio(&op, &p, &u, 0, 2.0, &d, None).unwrap();
                let v = r.value().expect("εu ≠ 0 for generic fields");
                max = max.max(v);
            }
        }
        maxima.push(max);
    }
    assert!(maxima[0].is_finite());
    assert!((maxima[0] / maxima[1] - 1.0).abs() <= 0.25, "{maxima:?}");
}

#[test]
fn bump_weight_has_unit_mass() {
    let b = BallSpec::new(vec![0.1, 0.2], 0.3, 3);
    let nr = crate::numerics::gauss_legendre(16);
    let mut s = 0.0;
    for (t, w) in nr.0.iter().zip(&nr.1) {
        let r = 0.5 * (t + 1.0) * b.radius;
        s += 0.5 * b.radius * w * std::f64::consts::TAU * r * b.omega(&[b.center[0] + r, b.center[1]]);
    }
    assert!((s - 1.0).abs() < 1e-12);
}

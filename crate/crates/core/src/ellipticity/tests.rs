use super::*;
use crate::poly_core::gallery::{self, gradient, laplacian, partial, sym_grad, sym_grad_dev};
use crate::poly_core::multi_index::homogeneous_dim;
use proptest::prelude::*;

#[test]
fn gradient_is_elliptic_with_unit_minimum() {
    let r = is_elliptic(&gradient(2, 1, 1), 200, 1e-6);
    assert!(r.elliptic);
    assert!((r.min_singular_value - 1.0).abs() < 1e-10);
}

#[test]
fn partial_is_not_elliptic() {
    let r = is_elliptic(&partial(2, 0), 200, 1e-6);
    assert!(!r.elliptic);
    assert!(r.argmin[0].abs() < 1e-6);
    assert!((r.argmin[1].abs() - 1.0).abs() < 1e-6);
}

#[test]
fn sym_grad_real_minimum_matches_dense_sampling() {
    let op = sym_grad(2);
    let r = is_elliptic(&op, 200, 1e-6);
    let dense = (0..100_000)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / 100_000.0;
            sigma_min_real(&op, &[t.cos(), t.sin()])
        })
        .fold(f64::INFINITY, f64::min);
    assert!(dense >= std::f64::consts::FRAC_1_SQRT_2 - 1e-12);
    assert!((r.min_singular_value - dense).abs() < 1e-8);
}

#[test]
fn constants_are_always_in_the_kernel() {
    for e in gallery::gallery() {
        assert_eq!(kernel_homogeneous(&e.op, 0).len(), e.op.dim_v, "{}", e.name);
    }
}

#[test]
fn laplace_quadratic_kernel_has_dim_two() {
    assert_eq!(kernel_homogeneous(&laplacian(2), 2).len(), 2);
}

#[test]
fn sym_grad_profile() {
    let p = c_ellipticity(&sym_grad(2), 20);
    assert_eq!(p.verdict, Verdict::CElliptic);
    assert_eq!(p.deg_p, Some(2));
    assert_eq!(p.total_kernel_dim(), 3);
    assert!(kernel_homogeneous(&sym_grad(2), 2).is_empty());
    let op = sym_grad(2);
    for q in p.kernel_basis() {
        assert!(op.apply_to_polynomial(&q).unwrap().is_zero());
    }
}

#[test]
fn gradients_have_deg_p_equal_to_order() {
    for (n, dim_v, k) in [(1, 1, 1), (2, 1, 2), (2, 2, 2), (3, 1, 2), (2, 1, 3)] {
        let p = c_ellipticity(&gradient(n, dim_v, k), 20);
        assert_eq!(p.verdict, Verdict::CElliptic);
        assert_eq!(p.deg_p, Some(k));
        let expected: usize = (0..k).map(|l| homogeneous_dim(n, l) * dim_v).sum();
        assert_eq!(p.total_kernel_dim(), expected);
    }
}

#[test]
fn gallery_verdicts() {
    for e in gallery::gallery() {
        let p = c_ellipticity(&e.op, 6);
        let want = match e.expected {
            gallery::Expected::CElliptic => Verdict::CElliptic,
            gallery::Expected::NotCElliptic => Verdict::NotCElliptic,
        };
        assert_eq!(p.verdict, want, "{}", e.name);
    }
}

#[test]
fn eps_dev_witness_is_exact() {
    let op = sym_grad_dev(2);
    let p = c_ellipticity(&op, 6);
    assert_eq!(p.verdict, Verdict::NotCElliptic);
    let w = p.witness.expect("witness");
    assert!(w.residual <= 1e-10);
    let xi = witness_to_complex(&w.xi);
    // ξ is a multiple of (1, ±i).
    assert!((xi[0] * xi[0] + xi[1] * xi[1]).norm() < 1e-10);
}

#[test]
fn laplace_witness_has_zero_residual() {
    let s = complex_witness_search(&laplacian(2), 4, 1e-8, 7);
    let w = s.witness.expect("witness");
    assert!(w.residual < 1e-14, "{}", w.residual);
}

#[test]
fn hessian_has_no_witness() {
    let s = complex_witness_search(&gradient(2, 1, 2), 8, 1e-8, 0);
    assert!(s.witness.is_none());
    assert!(s.best_sigma >= 0.1);
    // Dense grid over the complex sphere as an independent oracle.
    let mut dense = f64::INFINITY;
    let op = gradient(2, 1, 2);
    let steps = 40;
    for a in 0..=steps {
        let t = std::f64::consts::FRAC_PI_2 * a as f64 / steps as f64;
        for b in 0..steps {
            let ph = std::f64::consts::TAU * b as f64 / steps as f64;
            let xi = [Complex64::new(t.cos(), 0.0), Complex64::from_polar(t.sin(), ph)];
            dense = dense.min(sigma_min(&op.symbol(&xi).unwrap().value).0);
        }
    }
    assert!(dense >= 0.1);
    assert!(s.best_sigma <= dense + 1e-9);
}

#[test]
fn image_intersection_examples() {
    assert_eq!(cancellation_image_intersection(&laplacian(2), 50).unwrap().dimension, 1);
    assert_eq!(cancellation_image_intersection(&gradient(2, 1, 1), 50).unwrap().dimension, 0);
    assert_eq!(cancellation_image_intersection(&sym_grad(2), 50).unwrap().dimension, 0);
    assert!(matches!(
        cancellation_image_intersection(&partial(2, 0), 50),
        Err(EllipticityError::NotElliptic(_))
    ));
}

#[test]
fn verdict_block_serializes() {
    let v = c_ellipticity(&sym_grad(2), 20).verdict_block();
    assert_eq!(v["verdict"], "c_elliptic");
    assert_eq!(v["deg_p"], 2);
    assert_eq!(v["kernel_dims"], serde_json::json!([2, 1]));
    assert!(v["witness"].is_null());
}

#[test]
fn monotone_vanishing_and_low_degrees() {
    for e in gallery::gallery() {
        let dims: Vec<usize> = (0..6).map(|l| kernel_homogeneous(&e.op, l).len()).collect();
        if let Some(z) = dims.iter().position(|&d| d == 0) {
            assert!(dims[z..].iter().all(|&d| d == 0), "{}", e.name);
        }
        for l in 0..e.op.k {
            assert_eq!(dims[l as usize], homogeneous_dim(e.op.n, l) * e.op.dim_v);
        }
    }
}

#[test]
fn verdict_consistency_with_ellipticity() {
    let op = partial(2, 0);
    assert!(!is_elliptic(&op, 100, 1e-6).elliptic);
    assert_ne!(c_ellipticity(&op, 4).verdict, Verdict::CElliptic);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn real_minimum_is_homogeneous(t in 0.0f64..6.28, lam in 0.2f64..5.0) {
        let op = sym_grad(2);
        let xi = [t.cos(), t.sin()];
        let s1 = sigma_min_real(&op, &xi);
        let s2 = sigma_min_real(&op, &[lam * xi[0], lam * xi[1]]);
        prop_assert!((s2 - lam * s1).abs() <= 1e-12 * (1.0 + s2));
    }
}

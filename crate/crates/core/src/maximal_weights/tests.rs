use super::*;
use crate::domains::{make_domain, DomainKind};
use crate::poly_core::gallery::sym_grad;
use crate::rng::seeded;
use proptest::prelude::*;
use rand::Rng;

fn box_grid(n: usize) -> Grid {
    Grid::new(n, n, 1.0 / n as f64, [0.0, 0.0])
}

/// Scalar or vector field made of a few random plane waves plus a random affine part.
fn random_field(grid: &Grid, dim: usize, seed: u64) -> GridFunction {
    let mut r = seeded(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..4 * dim)
        .map(|_| {
            (
                r.random_range(1.0..5.0),
                r.random_range(1.0..5.0),
                r.random_range(0.0..std::f64::consts::TAU),
                r.random_range(-1.0..1.0),
            )
        })
        .collect();
    let aff: Vec<f64> = (0..3 * dim).map(|_| r.random_range(-1.0..1.0)).collect();
    GridFunction::from_fn(grid, dim, |x| {
        (0..dim)
            .map(|c| {
                let mut v = aff[3 * c] + aff[3 * c + 1] * x[0] + aff[3 * c + 2] * x[1];
                for (a, b, ph, amp) in &waves[4 * c..4 * c + 4] {
                    v += amp * (a * x[0] + b * x[1] + ph).sin();
                }
                v
            })
            .collect()
    })
}

fn restrict(mut f: GridFunction, d: &GridDomain) -> GridFunction {
    for c in 0..d.grid.len() {
        if !d.mask[c] {
            f.at_mut(c).fill(0.0);
        }
    }
    f
}

fn rough_field(grid: &Grid, seed: u64) -> GridFunction {
    let mut r = seeded(seed);
    let mut f = GridFunction::zeros(grid, 1);
    for v in f.values.iter_mut() {
        let u: f64 = r.random_range(0.0..1.0);
        *v = if u < 0.1 { r.random_range(-20.0..20.0) } else { r.random_range(-1.0..1.0) };
    }
    f
}

#[test]
fn family_counts() {
    let g = box_grid(8);
    let fam = cube_family(&g);
    // side 1: 64, side 2: 7², side 4: 3², side 8: 1.
    assert_eq!(fam.len(), 64 + 49 + 9 + 1);
    assert_eq!(dyadic_family(&g).len(), 64 + 16 + 4 + 1);
}

#[test]
fn constant_field_has_constant_maximal_function() {
    let g = box_grid(16);
    let f = GridFunction::from_fn(&g, 1, |_| vec![-2.5]);
    let m = maximal(&f, &Variant::Hl);
    assert!(m.values.iter().all(|&v| v == 2.5));
}

#[test]
fn restricted_is_zero_outside_and_flags_uncovered_points() {
    let d = make_domain(DomainKind::Lshape, 1.0 / 16.0).unwrap();
    let f = GridFunction::from_fn_masked(&d, 1, |_| vec![1.0]);
    let m = maximal(&f, &Variant::Restricted { domain: &d, sigma: 3.0, p: 1.0 });
    for c in 0..d.grid.len() {
        if !d.mask[c] {
            assert_eq!(m.values[c], 0.0);
        }
    }
    // Points next to the boundary have no cube whose 3-dilate stays inside.
    assert!(!m.no_eligible.is_empty());
    for &c in &m.no_eligible {
        assert_eq!(m.values[c], 0.0);
    }
}

#[test]
fn sharp_vanishes_on_the_subspace() {
    let d = make_domain(DomainKind::Square { side: 1.0 }, 1.0 / 16.0).unwrap();
    let space = MomentSubspace::kernel(&sym_grad(2)).unwrap();
    let f = GridFunction::from_fn(&d.grid, 2, |x| vec![0.3 - 1.2 * x[1], -0.7 + 1.2 * x[0]]);
    for p in [1.0, 2.0] {
        let m = maximal(&f, &Variant::Sharp { domain: &d, sigma: 1.0, p, space: &space });
        assert!(m.values.iter().all(|&v| v < 1e-12), "p = {p}");
    }
}

#[test]
fn sharp_is_dominated_by_restricted() {
    let d = make_domain(DomainKind::Lshape, 1.0 / 32.0).unwrap();
    let space = MomentSubspace::kernel(&sym_grad(2)).unwrap();
    for seed in 0..4 {
        let f = restrict(random_field(&d.grid, 2, seed), &d);
        for p in [1.0, 2.0] {
            let r = maximal(&f, &Variant::Restricted { domain: &d, sigma: 1.25, p });
            let s = maximal(&f, &Variant::Sharp { domain: &d, sigma: 1.25, p, space: &space });
            assert!(s.values.iter().zip(&r.values).all(|(a, b)| a <= b));
            assert_eq!(r.no_eligible, s.no_eligible);
        }
    }
}

#[test]
fn unit_weight_has_constant_one() {
    let g = box_grid(32);
    let w = Weight::unit(&g);
    let fam = cube_family(&g);
    for q in [1.0, 1.5, 2.0, 3.0, 7.0] {
        assert_eq!(muckenhoupt_constant(&w, q, &g, &fam), 1.0);
    }
}

#[test]
fn power_weight_constant_converges_inside_the_range() {
    let c5 = power_weight_constant(0.5, 2.0, 5);
    let c6 = power_weight_constant(0.5, 2.0, 6);
    assert!(c5.is_finite() && c5 > 1.0);
    assert!((c6 / c5 - 1.0).abs() <= 0.10, "{c5} {c6}");
}

#[test]
fn power_weight_constant_diverges_outside_the_range() {
    let c: Vec<f64> = (3..=6).map(|d| power_weight_constant(3.0, 2.0, d)).collect();
    for w in c.windows(2) {
        assert!(w[1] >= 2.0 * w[0], "{c:?}");
    }
}

#[test]
fn power_weight_at_a_cell_center_is_rejected() {
    let g = box_grid(8);
    assert_eq!(Weight::power(&g, 0.5, [0.5 / 8.0, 0.5 / 8.0]).unwrap_err(), MaximalError::SingularWeight);
}

#[test]
fn weight_specs_parse() {
    let g = box_grid(8);
    assert_eq!(Weight::parse("unit", &g).unwrap().kind, WeightKind::Unit);
    let w = Weight::parse("power:a=0.5,cx=0.5,cy=0.5", &g).unwrap();
    assert_eq!(w.kind, WeightKind::Power { a: 0.5, center: [0.5, 0.5] });
    assert!(Weight::parse("power:cx=1", &g).is_err());
    assert!(Weight::parse("gaussian", &g).is_err());
    assert!(matches!(Weight::custom(vec![1.0, 0.0]), Err(MaximalError::NonPositiveWeight(1))));
}

#[test]
fn cz_below_threshold_is_empty() {
    let g = box_grid(16);
    let f = GridFunction::from_fn(&g, 1, |x| vec![x[0] - x[1]]);
    assert!(cz_decomposition(&f, 1.0).unwrap().is_empty());
    let rep = check_cz_properties(&f, &[1.0]).unwrap();
    assert!(rep.all_pass());
}

#[test]
fn cz_threshold_and_box_errors() {
    let g = box_grid(16);
    let f = GridFunction::from_fn(&g, 1, |_| vec![2.0]);
    assert!(matches!(cz_decomposition(&f, 1.0), Err(MaximalError::ThresholdTooSmall { .. })));
    let g2 = Grid::new(12, 12, 1.0 / 12.0, [0.0, 0.0]);
    let f2 = GridFunction::zeros(&g2, 1);
    assert_eq!(cz_decomposition(&f2, 1.0).unwrap_err(), MaximalError::NotDyadicBox(12, 12));
}

#[test]
fn cz_single_spike() {
    let g = box_grid(8);
    let mut f = GridFunction::zeros(&g, 1);
    f.values[g.index(5, 2)] = 64.0;
    // Average over the box is 1; at α = 1 the 4×4 quadrant has average 4 > 1.
    let cubes = cz_decomposition(&f, 1.0).unwrap();
    assert_eq!(cubes, vec![CzCube { level: 1, corner: [4, 0], side: 4 }]);
    let cubes = cz_decomposition(&f, 10.0).unwrap();
    assert_eq!(cubes, vec![CzCube { level: 2, corner: [4, 2], side: 2 }]);
    let cubes = cz_decomposition(&f, 20.0).unwrap();
    assert_eq!(cubes, vec![CzCube { level: 3, corner: [5, 2], side: 1 }]);
}

#[test]
fn cz_properties_on_random_fields() {
    let g = box_grid(64);
    for seed in 0..10 {
        let f = rough_field(&g, seed);
        let avg = box_average(&f).unwrap();
        let alphas: Vec<f64> = [1.0, 1.5, 2.0, 4.0, 9.0].iter().map(|s| s * avg).collect();
        let rep = check_cz_properties(&f, &alphas).unwrap();
        assert!(rep.all_pass(), "seed {seed}: {rep:?}");
        assert!(rep.cubes.iter().any(|&n| n > 0));
    }
}

#[test]
fn best_approximation_is_exact_for_l2() {
    let d = make_domain(DomainKind::Lshape, 1.0 / 16.0).unwrap();
    let space = MomentSubspace::kernel(&sym_grad(2)).unwrap();
    let f = GridFunction::from_fn_masked(&d, 2, |x| vec![1.0 - 0.5 * x[1], 2.0 + 0.5 * x[0]]);
    let (coef, err) = best_approximation(&f, &d.cells(), &space, 2.0, None);
    assert!(err < 1e-12);
    let recon = space.combine(&coef, &[0.3, 0.2]);
    assert!((recon[0] - 0.9).abs() < 1e-12 && (recon[1] - 2.15).abs() < 1e-12);
}

#[test]
fn fefferman_stein_subspace_is_exact() {
    let d = make_domain(DomainKind::Lshape, 1.0 / 16.0).unwrap();
    let space = MomentSubspace::kernel(&sym_grad(2)).unwrap();
    let f = GridFunction::from_fn_masked(&d, 2, |x| vec![1.0 - 0.5 * x[1], 2.0 + 0.5 * x[0]]);
    let fs = fefferman_stein_check(&f, &d, 1.25, 2.0, &Weight::unit(&d.grid), &space);
    assert_eq!(fs.ratio, Ratio::Exact);
}

#[test]
fn fefferman_stein_ratios_are_bounded() {
    let d = make_domain(DomainKind::Lshape, 1.0 / 32.0).unwrap();
    let space = MomentSubspace::kernel(&sym_grad(2)).unwrap();
    let unit = Weight::unit(&d.grid);
    let ratios: Vec<Ratio> = (0..30)
        .map(|s| {
            let f = restrict(random_field(&d.grid, 2, 100 + s), &d);
            fefferman_stein_check(&f, &d, 1.25, 2.0, &unit, &space).ratio
        })
        .collect();
    assert!(ratios.iter().all(|r| r.value().is_some()));
    let sp = crate::numerics::spread(&ratios);
    assert!(sp <= 4.0, "spread {sp}");
    let w = Weight::power(&d.grid, 0.5, [0.5, 0.5]).unwrap();
    let f = restrict(random_field(&d.grid, 2, 7), &d);
    let r = fefferman_stein_check(&f, &d, 1.25, 2.0, &w, &space).ratio;
    assert!(r.value().is_some_and(f64::is_finite));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn maximal_is_sublinear(s1 in 0u64..1000, s2 in 0u64..1000) {
        let g = box_grid(16);
        let f = rough_field(&g, s1);
        let h = rough_field(&g, s2 + 1000);
        let mf = maximal(&f, &Variant::Hl).values;
        let mh = maximal(&h, &Variant::Hl).values;
        let ms = maximal(&f.add(&h), &Variant::Hl).values;
        for c in 0..g.len() {
            prop_assert!(ms[c] <= (mf[c] + mh[c]) * (1.0 + 1e-13));
        }
    }

    #[test]
    fn muckenhoupt_is_at_least_one_and_monotone(a in -1.5f64..1.5, cx in 0.1f64..0.9, cy in 0.1f64..0.9) {
        let g = box_grid(16);
        // Keep the singularity off the lattice points.
        let w = Weight::power(&g, a, [cx + 1e-3, cy + 1e-3]).unwrap();
        let fam = cube_family(&g);
        let qs = [1.0, 1.5, 2.0, 3.0, 5.0];
        let c: Vec<f64> = qs.iter().map(|&q| muckenhoupt_constant(&w, q, &g, &fam)).collect();
        for v in &c {
            prop_assert!(*v >= 1.0 - 1e-12);
        }
        for p in c.windows(2) {
            prop_assert!(p[1] <= p[0] * (1.0 + 1e-12));
        }
    }
}

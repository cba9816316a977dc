use ellikorn::domains::GridFunction;
use ellikorn::ellipticity::{c_ellipticity, Verdict};
use ellikorn::poly_core::{homogeneous_indices, rint, VPolynomial};
use ellikorn::projection::{
    apply_projection_grid, averaged_taylor, build_projection, mean_inner, sample, stability_ratio, BallSpec,
};
use serde_json::json;

use super::{build_domain, deepest_ball, domain_kind, echo_domains, load_operator, parse_list, single_mesh};
use crate::fields::{random_poly, wave_field};
use crate::report::{fmt_f64, Basis, Check, Report, Table};
use crate::{CliError, Outcome, ProjectArgs};

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

pub fn run(a: &ProjectArgs) -> Result<Outcome, CliError> {
    let loaded = load_operator(&a.op)?;
    let op = &loaded.op;
    if op.n != 2 {
        return Err(CliError::Usage("grid projections need a planar operator (n = 2)".into()));
    }
    let kind = domain_kind(&a.domain)?;
    let h = single_mesh(&a.h)?;
    let domain = build_domain(&kind, h)?;
    let mut report = Report::new("project");
    report.inputs.op = Some(loaded.echo.clone());
    report.inputs.seeds = vec![a.seed];
    echo_domains(&mut report, &kind, &[&domain]);
    report.param("trials", a.trials);
    report.param("cubics", a.cubics);

    let prof = c_ellipticity(op, a.max_degree);
    match prof.verdict {
        Verdict::Undecided => return Ok(Outcome { report, table: None, undecided: true }),
        Verdict::NotCElliptic => return Err(CliError::Usage("the operator is not C-elliptic; no finite-dimensional nullspace to project on".into())),
        Verdict::CElliptic => {}
    }
    let m = prof.deg_p.expect("C-elliptic profiles carry deg_p");
    let (center, radius) = match (&a.center, a.radius) {
        (Some(c), Some(r)) => {
            let c = parse_list(c)?;
            if c.len() != 2 {
                return Err(CliError::Usage("--center takes x,y".into()));
            }
            (c, r)
        }
        (None, None) => deepest_ball(&domain),
        _ => return Err(CliError::Usage("--center and --radius go together".into())),
    };
    // The grid route integrates by parts against the weight, which needs ρ ≥ m.
    let ball = BallSpec::new(center.clone(), radius, m.max(1));
    report.param("ball", json!({ "center": center, "radius": radius, "rho": ball.rho }));
    let p = build_projection(op, &ball, &prof, None).map_err(compute)?;

    report.checks.push(Check::exact("dual_basis_exactness", p.dual_is_exact()));
    report.checks.push(Check::exact("idempotence", p.is_idempotent()));

    let mut corrector = true;
    let wk = p.kernel_count;
    for q in &p.psi_basis {
        let aq = op.apply_to_polynomial(q).map_err(compute)?;
        for (l, xi) in p.xi_polys.iter().enumerate() {
            let rhs = mean_inner(&aq, &op.apply_to_polynomial(xi).map_err(compute)?);
            corrector &= mean_inner(q, &p.dual_poly(wk + l)) == rhs;
        }
    }
    report.checks.push(Check::exact("corrector_identity", corrector));

    let mut degree_ok = true;
    for l in 0..p.m {
        for alpha in homogeneous_indices(2, l) {
            for i in 0..op.dim_v {
                let pu = p.apply(&VPolynomial::monomial(op.dim_v, alpha.clone(), i, rint(1))).map_err(compute)?;
                degree_ok &= pu.degree().at_most(l) && op.apply_to_polynomial(&pu).map_err(compute)?.is_zero();
            }
        }
    }
    report.checks.push(Check::exact("degree_preservation", degree_ok));

    let mt = 3.max(op.k);
    let mut commutes = true;
    for s in 0..a.cubics {
        let u = random_poly(2, op.dim_v, 3, a.seed.wrapping_add(s as u64));
        let lhs = op.apply_to_polynomial(&averaged_taylor(&u, mt, &ball)).map_err(compute)?;
        let rhs = averaged_taylor(&op.apply_to_polynomial(&u).map_err(compute)?, mt - op.k, &ball);
        commutes &= lhs == rhs;
    }
    report.checks.push(Check::exact("taylor_commutation", commutes));

    let mut table = Table::new(&["field_id", "stability_ratio"]);
    let mut ratios = Vec::with_capacity(a.trials);
    let mut idem = 0.0f64;
    for s in 0..a.trials {
        let u = GridFunction::from_fn_masked(&domain, op.dim_v, wave_field(op.dim_v, a.seed.wrapping_add(1000 + s as u64)));
        let r = stability_ratio(&p, &u, &domain).map_err(compute)?;
        table.push(vec![s.to_string(), fmt_f64(r)]);
        ratios.push(r);
        if s < 5 {
            let once = apply_projection_grid(&p, &u, Some(&domain)).map_err(compute)?;
            let twice = apply_projection_grid(&p, &sample(&domain, &once.poly), Some(&domain)).map_err(compute)?;
            let scale = once.local_coords.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            let gap = once.local_coords.iter().zip(&twice.local_coords).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            idem = idem.max(gap / scale);
        }
    }
    if a.trials > 0 {
        report.checks.push(Check::at_most("grid_idempotence", idem, 1e-10, Basis::Numeric));
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        report.checks.push(Check::at_most("stability_ratio_finite", max, f64::MAX, Basis::Numeric));
        report.metric("stability_max", max);
        report.metric("stability_mean", ratios.iter().sum::<f64>() / ratios.len() as f64);
    }
    report.metric("m", p.m as f64);
    report.metric("kernel_count", p.kernel_count as f64);
    report.result = json!({ "projection": p.to_json(), "stability_ratios": ratios });
    Ok(Outcome { report, table: Some(table), undecided: false })
}

use ellikorn::domains::GridDomain;
use ellikorn::ellipticity::{c_ellipticity, Verdict};
use ellikorn::korn_bench::{
    holomorphic_quotients, korn_constant_p2, korn_constant_sampled, orlicz_check, random_smooth_fields, EigenMethod, KornConstant,
    KornOptions, NormKind, Scheme, DENSE_LIMIT,
};
use ellikorn::maximal_weights::Weight;
use ellikorn::projection::{build_projection, BallSpec};
use serde_json::{json, Value};

use super::{build_domain, deepest_ball, domain_kind, echo_domains, load_operator, parse_mesh};
use crate::report::{fmt_f64, Basis, Check, Report, Table};
use crate::{CliError, KornArgs, Method, Outcome};

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

fn method_of(m: Method) -> EigenMethod {
    match m {
        Method::Auto => EigenMethod::Auto,
        Method::Dense => EigenMethod::Dense,
        Method::Lanczos => EigenMethod::Lanczos,
    }
}

fn norm_kind(a: &KornArgs) -> Result<NormKind, CliError> {
    let kind = match (a.lorentz, a.orlicz) {
        (Some(_), Some(_)) => return Err(CliError::Usage("--lorentz and --orlicz are exclusive".into())),
        (Some(q), None) => NormKind::Lorentz { p: a.p, q },
        (None, Some(beta)) => NormKind::Orlicz { p: a.p, beta },
        (None, None) => NormKind::Lp { p: a.p },
    };
    kind.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(kind)
}

/// Relative spread (max − min)/min of the constants.
fn drift(cs: &[f64]) -> f64 {
    let max = cs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = cs.iter().cloned().fold(f64::INFINITY, f64::min);
    (max - min) / min
}

fn refining(hs: &[f64]) -> bool {
    hs.windows(2).all(|w| w[1] < w[0])
}

pub fn run(a: &KornArgs) -> Result<Outcome, CliError> {
    let loaded = load_operator(&a.op)?;
    let op = &loaded.op;
    if op.n != 2 {
        return Err(CliError::Usage("Korn constants are computed on planar grids (n = 2)".into()));
    }
    let kind = domain_kind(&a.domain)?;
    let hs = parse_mesh(&a.h)?;
    let domains: Vec<GridDomain> = hs.iter().map(|&h| build_domain(&kind, h)).collect::<Result<_, _>>()?;
    let norm = norm_kind(a)?;
    let sampled = a.p != 2.0 || a.weight.is_some() || a.lorentz.is_some() || a.orlicz.is_some();
    if sampled && a.dirichlet {
        return Err(CliError::Usage("--dirichlet applies to the p = 2 eigenvalue route only".into()));
    }
    let prof = c_ellipticity(op, a.max_degree);

    let mut report = Report::new("korn");
    report.inputs.op = Some(loaded.echo.clone());
    report.inputs.seeds = vec![a.seed];
    echo_domains(&mut report, &kind, &domains.iter().collect::<Vec<_>>());
    report.param("h", &hs);
    report.param("p", a.p);
    report.param("norm", norm);
    report.param("weight", a.weight.as_deref().unwrap_or("unit"));
    report.param("route", if sampled { "sampled" } else { "eigen" });
    report.param("dirichlet", a.dirichlet);
    report.param("verdict", prof.verdict);
    let undecided = prof.verdict == Verdict::Undecided;

    let (constants, table) = if sampled {
        sampled_route(a, op, &prof, &domains, norm, &mut report)?
    } else {
        eigen_route(a, op, &prof, &domains, &mut report)?
    };
    report.result = json!({
        "domain": kind,
        "op": loaded.echo,
        "h": hs,
        "p": a.p,
        "weight": a.weight.as_deref().unwrap_or("unit"),
        "norm": norm,
        "normalization": format!("diam^-{}", op.k),
        "constants": constants,
        "kernel_family": report.result.clone(),
    });
    Ok(Outcome { report, table: Some(table), undecided })
}

fn eigen_route(
    a: &KornArgs,
    op: &ellikorn::poly_core::DiffOperator,
    prof: &ellikorn::ellipticity::NullspaceProfile,
    domains: &[GridDomain],
    report: &mut Report,
) -> Result<(Vec<Value>, Table), CliError> {
    let opts = KornOptions { dirichlet: a.dirichlet, method: method_of(a.method), scheme: Scheme::Closed, seed: a.seed };
    let ks: Vec<KornConstant> = domains.iter().map(|d| korn_constant_p2(op, d, &opts)).collect::<Result<_, _>>().map_err(compute)?;
    let cs: Vec<f64> = ks.iter().map(|k| k.c).collect();
    let hs: Vec<f64> = ks.iter().map(|k| k.h).collect();

    report.checks.push(Check::exact("constants_nonnegative", cs.iter().all(|c| *c >= 0.0)));
    let wq = ks.iter().map(|k| (k.witness_quotient - k.c).abs() / k.c.max(1e-300)).fold(0.0, f64::max);
    report.checks.push(Check::at_most("witness_attains_constant", wq, 1e-6, Basis::Numeric));

    // Cross-validate the eigen routes on the coarsest mesh.
    let first = &ks[0];
    if first.dofs * op.dim_v <= DENSE_LIMIT {
        let other = if first.method == EigenMethod::Dense { EigenMethod::Lanczos } else { EigenMethod::Dense };
        let alt = korn_constant_p2(op, &domains[0], &KornOptions { method: other, ..opts }).map_err(compute)?;
        let gap = (alt.c - first.c).abs() / first.c.max(1e-300);
        report.checks.push(Check::at_most("eigen_cross_validation", gap, 1e-6, Basis::Numeric));
        report.metric("eigen_cross_validation_gap", gap);
    }

    if cs.len() >= 2 && refining(&hs) {
        match prof.verdict {
            Verdict::CElliptic => {
                let d = drift(&cs);
                report.checks.push(Check::at_most("korn_dichotomy_refinement_stable", d, 0.1, Basis::Empirical));
                report.metric("drift", d);
            }
            Verdict::NotCElliptic => {
                let g = cs.windows(2).map(|w| w[1] / w[0]).fold(f64::INFINITY, f64::min);
                report.checks.push(Check::at_least("korn_dichotomy_growth", g, 1.5, Basis::Empirical));
                report.metric("growth_min", g);
            }
            Verdict::Undecided => {}
        }
    }

    // Planar kernels containing the holomorphic fields explain the growth.
    report.result = Value::Null;
    if prof.verdict == Verdict::NotCElliptic && op.dim_v == 2 {
        let d = domains.last().expect("at least one mesh");
        let g = &d.grid;
        let denom = (2.0 / g.h).round() as i64;
        let mid = [g.origin[0] + 0.5 * g.nx as f64 * g.h, g.origin[1] + 0.5 * g.ny as f64 * g.h];
        let center = [(mid[0] * denom as f64).round() as i64, (mid[1] * denom as f64).round() as i64];
        let ms: Vec<u32> = (2..=8).collect();
        let rows = holomorphic_quotients(op, d, &ms, center, denom).map_err(compute)?;
        let residual = rows.iter().map(|r| r.a_residual).fold(0.0, f64::max);
        if residual <= 1e-10 {
            report.checks.push(Check::at_most("kernel_family_annihilated", residual, 1e-10, Basis::Numeric));
            let step = rows.windows(2).map(|w| w[1].quotient / w[0].quotient).fold(f64::INFINITY, f64::min);
            report.checks.push(Check::at_least("kernel_family_quotient_increasing", step, 1.0 + f64::EPSILON, Basis::Exact));
            report.result = serde_json::to_value(&rows).unwrap_or(Value::Null);
        }
    }

    let mut table = Table::new(&["h", "C", "witness_quotient", "witness_unscaled", "dofs", "method", "l2", "grad_k", "a"]);
    let mut constants = Vec::new();
    for (i, k) in ks.iter().enumerate() {
        report.metric(&format!("C_{i}"), k.c);
        let method = serde_json::to_value(k.method).unwrap_or(Value::Null);
        table.push(vec![
            fmt_f64(k.h),
            fmt_f64(k.c),
            fmt_f64(k.witness_quotient),
            fmt_f64(k.witness_unscaled),
            k.dofs.to_string(),
            method.as_str().unwrap_or("").to_string(),
            fmt_f64(k.witness_norms.l2),
            fmt_f64(k.witness_norms.grad_k),
            fmt_f64(k.witness_norms.a),
        ]);
        constants.push(json!({
            "h": k.h,
            "C": k.c,
            "witness_norms": k.witness_norms,
            "witness_quotient": k.witness_quotient,
            "witness_unscaled": k.witness_unscaled,
            "dofs": k.dofs,
            "method": k.method,
        }));
    }
    Ok((constants, table))
}

fn sampled_route(
    a: &KornArgs,
    op: &ellikorn::poly_core::DiffOperator,
    prof: &ellikorn::ellipticity::NullspaceProfile,
    domains: &[GridDomain],
    norm: NormKind,
    report: &mut Report,
) -> Result<(Vec<Value>, Table), CliError> {
    if prof.verdict != Verdict::CElliptic {
        return Err(CliError::Usage("sampled norms subtract the nullspace projection, which needs a C-elliptic operator".into()));
    }
    if let NormKind::Orlicz { p, beta } = norm {
        let idx = orlicz_check(p, beta).map_err(|e| CliError::Usage(e.to_string()))?;
        report.metric("orlicz_delta2", idx.delta2);
        report.metric("orlicz_lower_index", idx.lower_index);
    }
    let m = prof.deg_p.expect("C-elliptic profiles carry deg_p");
    let (center, radius) = deepest_ball(&domains[0]);
    let ball = BallSpec::new(center.clone(), radius, m.max(1));
    report.param("ball", json!({ "center": center, "radius": radius, "rho": ball.rho }));
    report.param("trials", a.trials);
    let proj = build_projection(op, &ball, prof, None).map_err(compute)?;

    let mut table = Table::new(&["h", "C", "worst_field"]);
    let mut constants = Vec::new();
    let mut cs = Vec::new();
    let mut finite = true;
    for (i, d) in domains.iter().enumerate() {
        let w = a.weight.as_deref().map(|s| Weight::parse(s, &d.grid)).transpose().map_err(|e| CliError::Usage(e.to_string()))?;
        let family = random_smooth_fields(d, op.dim_v, a.trials, a.seed);
        let sk = korn_constant_sampled(op, &proj, d, &family, norm, w.as_ref()).map_err(compute)?;
        finite &= sk.ratios.iter().all(|r| r.is_finite());
        report.metric(&format!("C_{i}"), sk.c);
        table.push(vec![fmt_f64(d.h()), fmt_f64(sk.c), sk.worst.map_or_else(String::new, |w| w.to_string())]);
        constants.push(json!({ "h": d.h(), "C": sk.c, "worst_field": sk.worst, "ratios": sk.ratios }));
        cs.push(sk.c);
    }
    report.checks.push(Check::exact("constants_nonnegative", cs.iter().all(|c| *c >= 0.0)));
    report.checks.push(Check::exact("ratios_finite", finite));
    let hs: Vec<f64> = domains.iter().map(|d| d.h()).collect();
    if cs.len() >= 2 && refining(&hs) {
        let d = drift(&cs);
        report.checks.push(Check::at_most("refinement_stability", d, 0.25, Basis::Empirical));
        report.metric("drift", d);
    }
    report.result = Value::Null;
    Ok((constants, table))
}

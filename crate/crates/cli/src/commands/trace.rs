use ellikorn::besov_trace::{
    halfspace_trace_experiment, halfspace_trace_exploratory, nonelliptic_blowup_family, trace_bump_family, trace_harmonic_family,
    BlowupParams,
};
use ellikorn::ellipticity::{exact_residual, is_elliptic, sigma_min};
use ellikorn::numerics::{spread, Ratio};
use num_complex::Complex64;
use serde_json::json;

use super::{load_operator, parse_list};
use crate::report::{fmt_f64, Basis, Check, Report, Table};
use crate::{CliError, Outcome, TraceArgs, TraceFamily};

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

fn ratio_cell(r: &Ratio) -> String {
    r.value().map_or_else(|| format!("{r:?}").to_lowercase(), fmt_f64)
}

/// Rescales so the largest entry is ±1 and rounds entries within 1e−6 of an integer.
fn snap(x: &[f64]) -> Vec<f64> {
    let m = x.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    let s = if x.iter().find(|v| v.abs() == m).is_some_and(|v| *v < 0.0) { -m } else { m };
    x.iter()
        .map(|v| {
            let t = v / s;
            if (t - t.round()).abs() < 1e-6 {
                t.round()
            } else {
                t
            }
        })
        .collect()
}

/// Real (ξ, v) with 𝔸[ξ]v = 0 exactly, from the flags or from the real symbol minimum.
fn kernel_direction(a: &TraceArgs, op: &ellikorn::poly_core::DiffOperator) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let (xi, v) = match (&a.xi, &a.v) {
        (Some(x), Some(v)) => (parse_list(x)?, parse_list(v)?),
        (None, None) => {
            let r = is_elliptic(op, 400, 1e-6);
            if r.elliptic {
                return Err(CliError::Usage("the operator is elliptic; the blow-up family needs a real kernel direction".into()));
            }
            let xi = snap(&r.argmin);
            let cx: Vec<Complex64> = xi.iter().map(|&t| Complex64::new(t, 0.0)).collect();
            let sym = op.symbol(&cx).map_err(compute)?.value;
            let (_, vec) = sigma_min(&sym);
            (xi, snap(&vec.iter().map(|z| z.re).collect::<Vec<_>>()))
        }
        _ => return Err(CliError::Usage("--xi and --v go together".into())),
    };
    let cx = |a: &[f64]| a.iter().map(|&t| Complex64::new(t, 0.0)).collect::<Vec<_>>();
    if xi.len() != op.n || v.len() != op.dim_v || exact_residual(op, &cx(&xi), &cx(&v)) != 0.0 {
        return Err(CliError::Usage(format!("no exact real kernel direction found (xi = {xi:?}, v = {v:?}); pass --xi and --v")));
    }
    Ok((xi, v))
}

pub fn run(a: &TraceArgs) -> Result<Outcome, CliError> {
    let loaded = load_operator(&a.op)?;
    let op = &loaded.op;
    let mut report = Report::new("trace");
    report.inputs.op = Some(loaded.echo.clone());
    report.param("family", format!("{:?}", a.family).to_lowercase());
    report.param("width", a.width);
    report.param("depth", a.depth);
    if a.family == TraceFamily::Blowup {
        let (xi, v) = kernel_direction(a, op)?;
        let params = BlowupParams { p: a.p, q: a.q, ..BlowupParams::default() };
        report.param("blowup", params);
        report.param("xi", &xi);
        report.param("v", &v);
        let rows = nonelliptic_blowup_family(op, &xi, &v, &params).map_err(compute)?;
        let mut table = Table::new(&["j", "lambda", "sobolev_norm", "a_norm", "boundary_norm"]);
        for r in &rows {
            table.push(vec![r.j.to_string(), fmt_f64(r.lambda), fmt_f64(r.sobolev_norm), fmt_f64(r.a_norm), fmt_f64(r.boundary_norm)]);
        }
        let first = rows[0].interior_norm();
        let drift = rows.iter().map(|r| (r.interior_norm() - first).abs() / first).fold(0.0, f64::max);
        let growth = rows.windows(2).map(|w| w[1].boundary_norm / w[0].boundary_norm).fold(f64::INFINITY, f64::min);
        report.checks.push(Check::at_most("blowup_interior_bounded", drift, 0.1, Basis::Empirical));
        report.checks.push(Check::at_least("blowup_boundary_growth", growth, 1.5, Basis::Empirical));
        report.metric("interior_drift", drift);
        report.metric("boundary_growth_min", growth);
        report.result = json!({ "rows": rows });
        return Ok(Outcome { report, table: Some(table), undecided: false });
    }

    let grids: Vec<usize> = parse_list(&a.grid)?
        .into_iter()
        .map(|g| if g >= 8.0 && g.fract() == 0.0 && (g as usize).is_power_of_two() { Ok(g as usize) } else { Err(CliError::Usage(format!("grid {g} is not a power of two ≥ 8"))) })
        .collect::<Result<_, _>>()?;
    report.inputs.grid = grids.iter().map(|&n| json!({ "n_tangential": n, "h": a.width / n as f64 })).collect();
    let mut table = Table::new(&["n_tangential", "function_id", "ratio", "numerator", "denominator"]);
    let mut reports = Vec::new();
    for &n in &grids {
        let rep = if a.family == TraceFamily::Harmonic {
            let mut fam = trace_bump_family(a.width);
            fam.extend(trace_harmonic_family(&[3, 5, 7]));
            halfspace_trace_exploratory(op, &fam, n, a.width, a.depth)
        } else {
            halfspace_trace_experiment(op, &trace_bump_family(a.width), n, a.width, a.depth)
        }
        .map_err(compute)?;
        for r in &rep.rows {
            table.push(vec![n.to_string(), r.id.clone(), ratio_cell(&r.ratio), fmt_f64(r.numerator), fmt_f64(r.denominator)]);
        }
        reports.push(rep);
    }
    if a.family == TraceFamily::Harmonic {
        for rep in &reports {
            let nb = rep.rows.len() - 3;
            let generic = rep.rows[..nb].iter().filter_map(|r| r.ratio.value()).fold(0.0, f64::max);
            let top = rep.rows.last().and_then(|r| r.ratio.value()).unwrap_or(0.0);
            let name = format!("harmonic_excess_n{}", rep.n_tangential);
            report.checks.push(Check::at_least(&name, top / generic, 3.0, Basis::Empirical));
            report.metric(&name, top / generic);
        }
    } else {
        for rep in &reports {
            let ratios: Vec<Ratio> = rep.rows.iter().map(|r| r.ratio).collect();
            let sp = spread(&ratios);
            report.checks.push(Check::exact(&format!("ratios_bounded_n{}", rep.n_tangential), ratios.iter().all(|r| r.is_finite())));
            report.checks.push(Check::at_most(&format!("ratio_spread_n{}", rep.n_tangential), sp, 5.0, Basis::Empirical));
            report.metric(&format!("max_ratio_n{}", rep.n_tangential), rep.max_ratio());
            report.metric(&format!("spread_n{}", rep.n_tangential), sp);
        }
        for w in reports.windows(2) {
            let (x, y) = (w[0].max_ratio(), w[1].max_ratio());
            let change = (x - y).abs() / x.min(y);
            report.checks.push(Check::at_most(&format!("max_ratio_stable_n{}_n{}", w[0].n_tangential, w[1].n_tangential), change, 0.3, Basis::Empirical));
        }
    }
    report.result = json!({ "reports": reports });
    Ok(Outcome { report, table: Some(table), undecided: false })
}

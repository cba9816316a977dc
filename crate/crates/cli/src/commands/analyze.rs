use ellikorn::ellipticity::{c_ellipticity_with, is_elliptic, CEllipticityOptions, Verdict};
use ellikorn::poly_core::homogeneous_dim;
use serde_json::Value;

use super::load_operator;
use crate::report::{Basis, Check, Report};
use crate::{AnalyzeArgs, CliError, Outcome};

pub fn run(a: &AnalyzeArgs) -> Result<Outcome, CliError> {
    let loaded = load_operator(&a.op)?;
    let op = &loaded.op;
    let opts = CEllipticityOptions { max_degree: a.max_degree, seed: a.seed, ..Default::default() };
    let prof = c_ellipticity_with(op, &opts);
    let real = is_elliptic(op, 400, 1e-6);

    let mut report = Report::new("analyze");
    report.inputs.op = Some(loaded.echo.clone());
    report.inputs.seeds = vec![a.seed];
    report.param("max_degree", a.max_degree);
    report.param("restarts", opts.restarts);

    let dims = prof.kernel_dims();
    let first_zero = dims.iter().position(|&d| d == 0);
    let monotone = first_zero.is_none_or(|z| dims[z..].iter().all(|&d| d == 0));
    report.checks.push(Check::exact("monotone_vanishing", monotone));
    let low = prof
        .per_degree
        .iter()
        .filter(|(l, _)| *l < op.k)
        .all(|(l, b)| b.len() == homogeneous_dim(op.n, *l) * op.dim_v);
    report.checks.push(Check::exact("low_degree_kernel_dimensions", low));
    if let Some(w) = &prof.witness {
        report.checks.push(Check::at_most("witness_soundness", w.residual, 1e-8, Basis::Numeric));
    }
    let consistent = !(prof.verdict == Verdict::NotCElliptic && dims.contains(&0))
        && !(prof.verdict == Verdict::CElliptic && prof.witness.is_some());
    report.checks.push(Check::exact("verdict_consistency", consistent));
    report.checks.push(Check::exact("c_ellipticity_implies_ellipticity", real.elliptic || prof.verdict != Verdict::CElliptic));
    if let Some(exp) = &loaded.expected {
        if prof.verdict != Verdict::Undecided {
            let got = serde_json::to_value(prof.verdict).unwrap_or(Value::Null);
            report.checks.push(Check::exact("documented_verdict", got.as_str() == Some(exp.as_str())));
        }
    }

    report.metric("min_real_singular_value", real.min_singular_value);
    report.metric("total_kernel_dim", prof.total_kernel_dim() as f64);
    if let Some(d) = prof.deg_p {
        report.metric("deg_p", d as f64);
    }
    if let Some(inf) = prof.witness_infimum {
        report.metric("witness_infimum", inf);
    }
    let mut block = prof.verdict_block();
    block["elliptic"] = Value::Bool(real.elliptic);
    report.result = block;
    Ok(Outcome { report, table: None, undecided: prof.verdict == Verdict::Undecided })
}

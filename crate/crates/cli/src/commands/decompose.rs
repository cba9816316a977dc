use ellikorn::decomposition::{decompose, remove_moments, verify_decomposition, MomentSubspace};
use ellikorn::domains::{emanating_chains, whitney_cover};
use ellikorn::maximal_weights::Weight;
use ellikorn::numerics::{spread, Ratio};
use serde_json::json;

use super::{build_domain, domain_kind, echo_domains, load_operator, parse_list, single_mesh};
use crate::fields::band_field;
use crate::report::{fmt_f64, Basis, Check, Report, Table};
use crate::{CliError, DecomposeArgs, Outcome};

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

pub fn run(a: &DecomposeArgs) -> Result<Outcome, CliError> {
    let loaded = load_operator(&a.op)?;
    let kind = domain_kind(&a.domain)?;
    let domain = build_domain(&kind, single_mesh(&a.h)?)?;
    if !(a.q >= 1.0 && a.q.is_finite()) {
        return Err(CliError::Usage(format!("q = {} must lie in [1, ∞)", a.q)));
    }
    let band = match parse_list(&a.band)?.as_slice() {
        [lo, hi] if 0.0 < *lo && lo < hi => (*lo, *hi),
        _ => return Err(CliError::Usage("--band takes lo,hi with 0 < lo < hi".into())),
    };
    let space = if a.ell == 0 { MomentSubspace::kernel(&loaded.op) } else { MomentSubspace::kernel_derivatives(&loaded.op, a.ell) }
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let weight = Weight::parse(&a.weight, &domain.grid).map_err(|e| CliError::Usage(e.to_string()))?;
    let cc = emanating_chains(&whitney_cover(&domain), &domain).map_err(compute)?;

    let mut report = Report::new("decompose");
    report.inputs.op = Some(loaded.echo.clone());
    report.inputs.seeds = vec![a.seed];
    echo_domains(&mut report, &kind, &[&domain]);
    report.param("q", a.q);
    report.param("weight", &weight.kind);
    report.param("moment_space", &space.label);
    report.param("band", [band.0, band.1]);
    report.param("trials", a.trials);

    let mut table = Table::new(&["field_id", "reconstruction", "max_piece_moment", "lower_ratio", "upper_ratio", "majorant"]);
    let (mut recon, mut moment, mut majorant) = (0.0f64, 0.0f64, 0.0f64);
    let mut lower = Vec::new();
    let mut support = true;
    for s in 0..a.trials {
        let f = remove_moments(&band_field(&domain, space.dim, a.seed.wrapping_add(s as u64), band), &domain, &space);
        let dec = decompose(&f, &cc, &domain, &space).map_err(compute)?;
        let chk = verify_decomposition(&dec, &f, &domain, &space, a.q, Some(&weight.values));
        for p in &dec.pieces {
            let w = cc.cubes[p.cube];
            support &= p.cells.iter().all(|&c| {
                let (i, j) = domain.grid.coords(c);
                w.contains_point(i as f64 + 0.5, j as f64 + 0.5)
            });
        }
        recon = recon.max(chk.reconstruction);
        moment = moment.max(chk.max_piece_moment);
        majorant = majorant.max(chk.majorant_constant);
        lower.push(if chk.lower_ratio.is_finite() { Ratio::Value(chk.lower_ratio) } else { Ratio::Infinite });
        table.push(vec![
            s.to_string(),
            fmt_f64(chk.reconstruction),
            fmt_f64(chk.max_piece_moment),
            fmt_f64(chk.lower_ratio),
            fmt_f64(chk.upper_ratio),
            fmt_f64(chk.majorant_constant),
        ]);
    }
    report.checks.push(Check::at_most("reconstruction", recon, 1e-8, Basis::Numeric));
    report.checks.push(Check::at_most("piece_moment_orthogonality", moment, 1e-9, Basis::Numeric));
    report.checks.push(Check::exact("piece_support", support));
    report.checks.push(Check::at_most("maximal_majorant_finite", majorant, f64::MAX, Basis::Numeric));
    report.checks.push(Check::exact("norm_ratios_finite", lower.iter().all(|r| r.value().is_some())));
    let sp = spread(&lower);
    report.checks.push(Check::at_most("norm_ratio_spread", sp, 2.0, Basis::Empirical));

    report.metric("pieces", cc.cubes.len() as f64);
    report.metric("reconstruction_max", recon);
    report.metric("piece_moment_max", moment);
    report.metric("majorant_max", majorant);
    report.metric("lower_ratio_spread", sp);
    report.result = json!({ "sigma1": cc.sigma1, "sigma2": cc.sigma2, "lower_ratios": lower });
    Ok(Outcome { report, table: Some(table), undecided: false })
}

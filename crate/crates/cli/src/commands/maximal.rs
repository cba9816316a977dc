use ellikorn::decomposition::MomentSubspace;
use ellikorn::domains::Grid;
use ellikorn::maximal_weights::{
    box_average, check_cz_properties, cube_family, fefferman_stein_check, maximal, muckenhoupt_constant, power_weight_constant,
    Variant, Weight, WeightKind,
};
use ellikorn::numerics::spread;
use serde_json::json;

use super::{build_domain, domain_kind, echo_domains, load_operator, single_mesh};
use crate::fields::{affine_wave_field, restrict, rough_field};
use crate::report::{fmt_f64, Basis, Check, Report, Table};
use crate::{CliError, MaximalArgs, Outcome};

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

pub fn run(a: &MaximalArgs) -> Result<Outcome, CliError> {
    let loaded = load_operator(&a.op)?;
    let kind = domain_kind(&a.domain)?;
    let domain = build_domain(&kind, single_mesh(&a.h)?)?;
    if !(a.q > 1.0 && a.q.is_finite()) {
        return Err(CliError::Usage(format!("q = {} must lie in (1, ∞)", a.q)));
    }
    if !a.cz_grid.is_power_of_two() {
        return Err(CliError::Usage(format!("--cz-grid {} is not a power of two", a.cz_grid)));
    }
    let space = MomentSubspace::kernel(&loaded.op).map_err(|e| CliError::Usage(e.to_string()))?;
    let weight = Weight::parse(&a.weight, &domain.grid).map_err(|e| CliError::Usage(e.to_string()))?;

    let mut report = Report::new("maximal");
    report.inputs.op = Some(loaded.echo.clone());
    report.inputs.seeds = vec![a.seed];
    echo_domains(&mut report, &kind, &[&domain]);
    report.param("q", a.q);
    report.param("sigma", a.sigma);
    report.param("weight", &weight.kind);
    report.param("trials", a.trials);
    report.param("cz_grid", a.cz_grid);
    report.param("cz_trials", a.cz_trials);

    // Calderón–Zygmund cubes on a dyadic box.
    let boxg = Grid::new(a.cz_grid, a.cz_grid, 1.0 / a.cz_grid as f64, [0.0, 0.0]);
    let mut cz_ok = true;
    for s in 0..a.cz_trials {
        let f = rough_field(&boxg, a.seed.wrapping_add(500 + s as u64));
        let avg = box_average(&f).map_err(compute)?;
        let alphas: Vec<f64> = [1.0, 1.5, 2.0, 4.0, 9.0].iter().map(|t| t * avg).collect();
        cz_ok &= check_cz_properties(&f, &alphas).map_err(compute)?.all_pass();
    }
    if a.cz_trials > 0 {
        report.checks.push(Check::exact("cz_properties", cz_ok));
    }

    // Muckenhoupt constants on the lattice family of the domain's grid.
    let fam = cube_family(&domain.grid);
    let qs = [a.q, a.q + 0.5, a.q + 1.0];
    let consts: Vec<f64> = qs.iter().map(|&q| muckenhoupt_constant(&weight, q, &domain.grid, &fam)).collect();
    report.checks.push(Check::at_least("muckenhoupt_lower_bound", consts[0], 1.0, Basis::Exact));
    let drop = consts.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    report.checks.push(Check::at_most("muckenhoupt_monotone_in_q", drop, 1.0 + 1e-12, Basis::Numeric));
    report.metric("muckenhoupt_constant", consts[0]);
    if let WeightKind::Power { a: exp, .. } = weight.kind {
        let (c5, c6) = (power_weight_constant(exp, a.q, 5), power_weight_constant(exp, a.q, 6));
        report.metric("power_weight_constant_depth5", c5);
        report.metric("power_weight_constant_depth6", c6);
        if -2.0 < exp && exp < 2.0 * (a.q - 1.0) {
            report.checks.push(Check::at_most("power_weight_in_range_stable", (c6 / c5 - 1.0).abs(), 0.1, Basis::Empirical));
        } else {
            report.checks.push(Check::at_least("power_weight_out_of_range_divergent", c6 / c5, 2.0, Basis::Empirical));
        }
    }

    // Fefferman–Stein ratios over a field family.
    let mut table = Table::new(&["field_id", "ratio", "best_error", "sharp_norm"]);
    let mut ratios = Vec::with_capacity(a.trials);
    for s in 0..a.trials {
        let f = restrict(affine_wave_field(&domain.grid, space.dim, a.seed.wrapping_add(s as u64)), &domain);
        if s == 0 {
            let sharp = maximal(&f, &Variant::Sharp { domain: &domain, sigma: a.sigma, p: 1.0, space: &space }).values;
            let res = maximal(&f, &Variant::Restricted { domain: &domain, sigma: a.sigma, p: 1.0 }).values;
            let excess = sharp.iter().zip(&res).map(|(s, r)| s - r).fold(f64::NEG_INFINITY, f64::max);
            report.checks.push(Check::at_most("sharp_below_restricted", excess, 0.0, Basis::Exact));
        }
        let fs = fefferman_stein_check(&f, &domain, a.sigma, a.q, &weight, &space);
        table.push(vec![
            s.to_string(),
            fs.ratio.value().map_or_else(|| format!("{:?}", fs.ratio), fmt_f64),
            fmt_f64(fs.best_error),
            fmt_f64(fs.sharp_norm),
        ]);
        ratios.push(fs.ratio);
    }
    if a.trials > 0 {
        report.checks.push(Check::exact("fefferman_stein_finite", ratios.iter().all(|r| r.is_finite())));
        let sp = spread(&ratios);
        report.checks.push(Check::at_most("fefferman_stein_spread", sp, 4.0, Basis::Empirical));
        report.metric("fefferman_stein_spread", sp);
        report.metric("fefferman_stein_max", ratios.iter().filter_map(|r| r.value()).fold(0.0, f64::max));
    }
    report.result = json!({ "muckenhoupt": qs.iter().zip(&consts).map(|(q, c)| json!({ "q": q, "constant": c })).collect::<Vec<_>>(), "fefferman_stein": ratios });
    Ok(Outcome { report, table: Some(table), undecided: false })
}

use ellikorn::domains::{check_chain_properties, emanating_chains, whitney_cover, GridDomain};
use serde_json::json;

use super::{build_domain, domain_kind, echo_domains, parse_mesh};
use crate::report::{fmt_f64, Check, Report, Table};
use crate::{CliError, DomainsArgs, Outcome};

pub fn run(a: &DomainsArgs) -> Result<Outcome, CliError> {
    let kind = domain_kind(&a.domain)?;
    let domains: Vec<GridDomain> = parse_mesh(&a.h)?.iter().map(|&h| build_domain(&kind, h)).collect::<Result<_, _>>()?;
    let mut report = Report::new("domains");
    echo_domains(&mut report, &kind, &domains.iter().collect::<Vec<_>>());
    let mut table = Table::new(&["h", "cubes", "sigma1", "sigma2", "overlap", "containment", "ball_ratio", "ball_overlap"]);
    let mut results = Vec::new();
    for d in &domains {
        let cc = emanating_chains(&whitney_cover(d), d).map_err(|e| CliError::Compute(e.to_string()))?;
        let rep = check_chain_properties(&cc, d);
        let tag = |name: &str| format!("{name}_h{}", d.grid.nx);
        report.checks.push(Check::exact(&tag("dilation_inside_bounded_overlap"), rep.c1));
        report.checks.push(Check::exact(&tag("chain_transitivity"), rep.c2));
        report.checks.push(Check::exact(&tag("local_finiteness"), rep.c3));
        report.checks.push(Check::exact(&tag("overlap_balls"), rep.balls_ok));
        report.checks.push(Check::exact(&tag("diameter_bound"), rep.diam_ok));
        report.checks.push(Check::exact(&tag("cover_complete"), rep.uncovered == 0));
        report.metric(&tag("cubes"), rep.num_cubes as f64);
        report.metric(&tag("sigma2"), rep.sigma2);
        table.push(vec![
            fmt_f64(d.h()),
            rep.num_cubes.to_string(),
            fmt_f64(rep.sigma1),
            fmt_f64(rep.sigma2),
            fmt_f64(rep.achieved.overlap),
            fmt_f64(rep.achieved.containment),
            fmt_f64(rep.achieved.ball_ratio),
            fmt_f64(rep.achieved.ball_overlap),
        ]);
        results.push(json!({ "h": d.h(), "check": rep }));
    }
    report.result = json!({ "covers": results });
    Ok(Outcome { report, table: Some(table), undecided: false })
}

//! Subcommand implementations and the input parsing they share.

use std::str::FromStr;

use ellikorn::domains::{make_domain, DomainKind, GridDomain};
use ellikorn::poly_core::gallery::{by_name, gallery, Expected};
use ellikorn::poly_core::{make_operator, DiffOperator, OperatorSpec};
use num_rational::Ratio;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::report::{OpEcho, Report};
use crate::CliError;

pub mod analyze;
pub mod decompose;
pub mod domains;
pub mod gallery;
pub mod korn;
pub mod maximal;
pub mod project;
pub mod trace;

/// A loaded operator with its report echo and documented verdict, if any.
pub struct LoadedOp {
    pub op: DiffOperator,
    pub echo: OpEcho,
    pub expected: Option<String>,
}

pub fn expected_name(e: &Expected) -> &'static str {
    match e {
        Expected::CElliptic => "c_elliptic",
        Expected::NotCElliptic => "not_c_elliptic",
    }
}

pub fn spec_hash(op: &DiffOperator) -> String {
    let canonical = serde_json::to_string(&op.spec()).expect("operator spec serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Reads an operator spec file, or a built-in operator written as `gallery:<name>`.
pub fn load_operator(source: &str) -> Result<LoadedOp, CliError> {
    let (op, expected) = if let Some(name) = source.strip_prefix("gallery:") {
        let op = by_name(name).ok_or_else(|| CliError::Usage(format!("no gallery operator named {name}")))?;
        let expected = gallery().into_iter().find(|e| e.name == name).map(|e| expected_name(&e.expected).to_string());
        (op, expected)
    } else {
        let text = std::fs::read_to_string(source).map_err(|e| CliError::File(format!("{source}: {e}")))?;
        let raw: Value = serde_json::from_str(&text).map_err(|e| CliError::File(format!("{source}: {e}")))?;
        let spec: OperatorSpec = serde_json::from_value(raw.clone()).map_err(|e| CliError::File(format!("{source}: {e}")))?;
        let op = make_operator(&spec).map_err(|e| CliError::Usage(format!("{source}: {e}")))?;
        (op, raw.get("expected_verdict").and_then(Value::as_str).map(str::to_string))
    };
    let echo = OpEcho { source: source.to_string(), sha256: spec_hash(&op) };
    Ok(LoadedOp { op, echo, expected })
}

/// One rational or decimal number, e.g. `1/32` or `0.03125`.
pub fn parse_number(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    if let Ok(r) = Ratio::<i64>::from_str(s) {
        if *r.denom() != 0 {
            return Ok(*r.numer() as f64 / *r.denom() as f64);
        }
    }
    s.parse::<f64>().map_err(|_| CliError::Usage(format!("cannot parse number {s:?}")))
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = s.split(',').filter(|t| !t.trim().is_empty()).map(parse_number).collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err(CliError::Usage(format!("empty list {s:?}")));
    }
    Ok(v)
}

pub fn parse_mesh(s: &str) -> Result<Vec<f64>, CliError> {
    let hs = parse_list(s)?;
    if let Some(h) = hs.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(CliError::Usage(format!("mesh size {h} must be positive")));
    }
    Ok(hs)
}

pub fn single_mesh(s: &str) -> Result<f64, CliError> {
    match parse_mesh(s)?.as_slice() {
        [h] => Ok(*h),
        _ => Err(CliError::Usage(format!("expected a single mesh size, got {s:?}"))),
    }
}

pub fn parse_params(s: &str) -> Result<Vec<(String, f64)>, CliError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("parameter {kv:?} is not k=v")))?;
            Ok((k.trim().to_string(), parse_number(v)?))
        })
        .collect()
}

pub fn domain_kind(args: &crate::DomainArgs) -> Result<DomainKind, CliError> {
    DomainKind::parse(&args.domain, &parse_params(&args.param)?).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn build_domain(kind: &DomainKind, h: f64) -> Result<GridDomain, CliError> {
    make_domain(kind.clone(), h).map_err(|e| CliError::Usage(e.to_string()))
}

/// Records the domain kind and the grids of every mesh in the report inputs.
pub fn echo_domains(report: &mut Report, kind: &DomainKind, domains: &[&GridDomain]) {
    report.inputs.domain = Some(serde_json::to_value(kind).unwrap_or(Value::Null));
    report.inputs.grid = domains
        .iter()
        .map(|d| json!({ "nx": d.grid.nx, "ny": d.grid.ny, "h": d.grid.h, "origin": d.grid.origin, "cells": d.num_cells() }))
        .collect();
}

/// Centre and radius of a ball around the deepest cell, half its distance to the boundary.
pub fn deepest_ball(domain: &GridDomain) -> (Vec<f64>, f64) {
    let dist = domain.distance_transform();
    let best = domain.cells().into_iter().max_by(|&a, &b| dist[a].cmp(&dist[b]).then(b.cmp(&a))).expect("domains are nonempty");
    let c = domain.grid.center_of(best);
    (c.to_vec(), 0.5 * dist[best] as f64 * domain.grid.h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_lists() {
        assert_eq!(parse_number("1/32").unwrap(), 0.03125);
        assert_eq!(parse_number("0.25").unwrap(), 0.25);
        assert_eq!(parse_number("3").unwrap(), 3.0);
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("x").is_err());
        assert_eq!(parse_mesh("1/16, 1/32").unwrap(), vec![0.0625, 0.03125]);
        assert!(parse_mesh("-1/16").is_err());
        assert!(single_mesh("1/16,1/32").is_err());
        assert_eq!(parse_params("radius=0.4,iter=2").unwrap(), vec![("radius".into(), 0.4), ("iter".into(), 2.0)]);
        assert!(parse_params("radius").is_err());
    }

    #[test]
    fn gallery_operators_load_by_name() {
        let l = load_operator("gallery:sym_grad_2d").unwrap();
        assert_eq!(l.expected.as_deref(), Some("c_elliptic"));
        assert_eq!(l.echo.sha256.len(), 64);
        assert!(matches!(load_operator("gallery:nope"), Err(CliError::Usage(_))));
        assert!(matches!(load_operator("/nonexistent/op.json"), Err(CliError::File(_))));
    }

    #[test]
    fn deepest_ball_is_inside_the_square() {
        let d = make_domain(DomainKind::Square { side: 1.0 }, 1.0 / 32.0).unwrap();
        let (c, r) = deepest_ball(&d);
        assert!(c[0] - r >= 0.0 && c[0] + r <= 1.0 && c[1] - r >= 0.0 && c[1] + r <= 1.0);
        assert!(r >= 0.2);
    }
}

//! Machine-readable run reports with bit-reproducible float output.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

/// How a check's tolerance was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Rational arithmetic or a structural property; the tolerance is zero.
    Exact,
    /// Floating-point comparison against a fixed numerical tolerance.
    Numeric,
    /// Threshold chosen from desk-scale experiments rather than from a proof.
    Empirical,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
    pub basis: Basis,
}

impl Check {
    pub fn exact(name: &str, pass: bool) -> Check {
        Check { name: name.into(), pass, value: if pass { 0.0 } else { 1.0 }, tolerance: 0.0, basis: Basis::Exact }
    }

    /// Passes when `value <= tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64, basis: Basis) -> Check {
        Check { name: name.into(), pass: value <= tolerance, value, tolerance, basis }
    }

    /// Passes when `value >= tolerance`.
    pub fn at_least(name: &str, value: f64, tolerance: f64, basis: Basis) -> Check {
        Check { name: name.into(), pass: value >= tolerance, value, tolerance, basis }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct OpEcho {
    pub source: String,
    /// SHA-256 of the canonical operator spec JSON.
    pub sha256: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Inputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op: Option<OpEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<Value>,
    pub seeds: Vec<u64>,
    /// Remaining numeric and string parameters of the run.
    pub params: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool_version: String,
    pub subcommand: String,
    pub inputs: Inputs,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
    /// Subcommand-specific structured output.
    pub result: Value,
}

impl Report {
    pub fn new(subcommand: &str) -> Report {
        Report {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            inputs: Inputs::default(),
            checks: Vec::new(),
            metrics: BTreeMap::new(),
            result: Value::Null,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    pub fn param(&mut self, name: &str, value: impl Serialize) {
        self.inputs.params.insert(name.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }
}

/// Pretty JSON in which every float carries 17 significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("report values serialize");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

/// Scientific notation with 16 digits after the point, parseable as JSON.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Rows of a plotting table; floats use the report's 17-digit format.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write_to(&self, path: &std::path::Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_significant_digits() {
        let mut r = Report::new("analyze");
        r.metric("third", 1.0 / 3.0);
        r.metric("tenth", 0.1);
        r.metric("nan", f64::NAN);
        let s = r.to_json();
        assert!(s.contains("\"third\": 3.3333333333333331e-1"), "{s}");
        assert!(s.contains("\"tenth\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"nan\": null"), "{s}");
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["metrics"]["third"].as_f64().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn check_constructors() {
        assert!(Check::at_most("x", 1.0, 1.0, Basis::Numeric).pass);
        assert!(!Check::at_least("x", 0.5, 1.0, Basis::Empirical).pass);
        assert!(!Check::exact("x", false).pass);
    }
}

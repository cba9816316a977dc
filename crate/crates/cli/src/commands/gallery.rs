use ellikorn::poly_core::gallery::gallery;
use ellikorn::poly_core::{make_operator, OperatorSpec};
use serde_json::{json, Value};

use super::{expected_name, spec_hash};
use crate::report::{to_json_string, Check, Report, Table};
use crate::{CliError, GalleryArgs, Outcome};

/// Writes `<name>.json` per built-in operator: the spec fields plus name,
/// documented verdict and a note. Each file is read back through `make_operator`.
pub fn run(a: &GalleryArgs) -> Result<Outcome, CliError> {
    let file_err = |e: std::io::Error| CliError::File(format!("{}: {e}", a.dir.display()));
    std::fs::create_dir_all(&a.dir).map_err(file_err)?;
    let mut report = Report::new("gallery");
    report.param("dir", a.dir.display().to_string());
    let mut table = Table::new(&["name", "expected_verdict", "sha256"]);
    let mut files = Vec::new();
    for e in gallery() {
        let mut doc = serde_json::to_value(e.op.spec()).expect("operator spec serializes");
        doc["name"] = Value::String(e.name.into());
        doc["expected_verdict"] = Value::String(expected_name(&e.expected).into());
        doc["note"] = Value::String(e.note.into());
        let path = a.dir.join(format!("{}.json", e.name));
        std::fs::write(&path, to_json_string(&doc)).map_err(file_err)?;
        let text = std::fs::read_to_string(&path).map_err(file_err)?;
        let back = serde_json::from_str::<OperatorSpec>(&text).ok().and_then(|s| make_operator(&s).ok());
        report.checks.push(Check::exact(&format!("round_trip_{}", e.name), back.as_ref() == Some(&e.op)));
        let hash = spec_hash(&e.op);
        table.push(vec![e.name.into(), expected_name(&e.expected).into(), hash.clone()]);
        files.push(json!({ "name": e.name, "file": format!("{}.json", e.name), "expected_verdict": expected_name(&e.expected), "sha256": hash }));
    }
    report.result = json!({ "files": files });
    Ok(Outcome { report, table: Some(table), undecided: false })
}

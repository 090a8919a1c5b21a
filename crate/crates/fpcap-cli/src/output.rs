use std::path::Path;

use serde_json::{json, Value};

use crate::args::OutputFormat;

/// One command's report in both shapes; `emit` picks the requested one.
pub struct Report {
    pub json: Value,
    pub csv: String,
}

/// Rounds to 12 significant digits so JSON and CSV carry the same value and
/// reruns are byte-stable; non-finite values become null.
pub fn sig12(x: f64) -> Value {
    match sig12_f(x) {
        Some(v) => json!(v),
        None => Value::Null,
    }
}

pub fn sig12_f(x: f64) -> Option<f64> {
    if !x.is_finite() {
        return None;
    }
    Some(format!("{x:.11e}").parse().expect("rounded float reparses"))
}

/// CSV cell for a float: the same rounded value, empty when non-finite.
pub fn csv_num(x: f64) -> String {
    match sig12_f(x) {
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

pub fn envelope(
    command: &str,
    inputs: Value,
    master_seed: Option<u64>,
    results: Value,
    units: Value,
) -> Value {
    json!({
        "schema_version": "1",
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "inputs": inputs,
        "master_seed": master_seed,
        "results": results,
        "units": units,
    })
}

pub fn emit(report: &Report, format: OutputFormat, out: Option<&Path>) -> fpcap::Result<()> {
    let text = match format {
        OutputFormat::Json => format!("{:#}\n", report.json),
        OutputFormat::Csv => report.csv.clone(),
    };
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

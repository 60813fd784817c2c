//! Flat CSV series from a finished report, for external plotting.

use std::path::{Path, PathBuf};

use mglab::Error;
use serde_json::Value;

use crate::commands::{CliResult, Failure};
use crate::output::{num, Table};

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) => n.as_f64().map(num).unwrap_or_else(|| n.to_string()),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn items<'a>(v: &'a Value, key: &str) -> &'a [Value] {
    v.get(key)
        .and_then(Value::as_array)
        .map(Vec::as_slice)
        .unwrap_or(&[])
}

fn field(v: &Value, key: &str) -> String {
    v.get(key).map(cell).unwrap_or_default()
}

fn push_pairs(t: &mut Table, prefix: &[String], series: &[Value]) {
    for point in series {
        let mut row = prefix.to_vec();
        if let Some(xy) = point.as_array() {
            row.extend(xy.iter().map(cell));
        }
        t.push(row);
    }
}

fn zscore_row(prefix: &[String], c: &Value) -> Vec<String> {
    let mut row = prefix.to_vec();
    row.extend(["s", "t", "instrument", "mean", "sd", "z", "p"].map(|k| field(c, k)));
    row
}

/// Writes the series of one report file into `out`; returns the paths written.
pub fn emit_plot_data(report: &Path, out: &Path) -> CliResult<Vec<PathBuf>> {
    let text = std::fs::read_to_string(report)?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Core(Error::Config(format!("{}: {e}", report.display()))))?;
    let stem = report
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Failure::Core(Error::Config("report path has no file name".into())))?;
    let kind = doc.get("kind").and_then(Value::as_str).unwrap_or_default();
    let results = items(&doc, "results");
    let mut tables: Vec<(String, Table)> = Vec::new();
    match kind {
        "martingale" => {
            let mut t = Table::new(&[
                "candidate",
                "s",
                "t",
                "instrument",
                "mean",
                "sd",
                "z",
                "p",
                "critical_value",
            ]);
            for e in results {
                let r = &e["result"];
                for c in items(r, "pairs") {
                    let mut row = zscore_row(&[field(e, "candidate")], c);
                    row.push(field(r, "critical_value"));
                    t.push(row);
                }
            }
            tables.push(("zscores".into(), t));
        }
        "bernstein" => {
            let mut t = Table::new(&["candidate", "cell", "correlation", "z", "critical_value"]);
            for e in results {
                let stats = &e["result"]["report"]["statistics"];
                for c in ["z_v", "z2_v", "z_v2", "z2_v2"] {
                    t.push(vec![
                        field(e, "candidate"),
                        c.to_string(),
                        field(stats, &format!("corr_{c}")),
                        field(stats, &format!("zscore_{c}")),
                        field(stats, "critical_value"),
                    ]);
                }
            }
            tables.push(("zscores".into(), t));
        }
        "kolmogorov" | "derivative" => {
            let (key, value) = if kind == "kolmogorov" {
                ("profile", "defect")
            } else {
                ("series", "derivative")
            };
            let mut t = Table::new(&["candidate", "x", value]);
            for e in results {
                push_pairs(&mut t, &[field(e, "candidate")], items(&e["result"], key));
            }
            tables.push(("curves".into(), t));
        }
        "residual" => {
            let mut t = Table::new(&["candidate", "equation", "sup_abs_residual", "mean_abs_residual"]);
            for e in results {
                let r = &e["result"];
                t.push(vec![
                    field(e, "candidate"),
                    field(r, "equation"),
                    field(r, "sup_abs_residual"),
                    field(r, "mean_abs_residual"),
                ]);
            }
            tables.push(("residuals".into(), t));
        }
        "theorem" => {
            let r = &doc["report"];
            let mut z = Table::new(&[
                "role",
                "candidate",
                "check",
                "s",
                "t",
                "instrument",
                "mean",
                "sd",
                "z",
                "p",
            ]);
            let mut curves = Table::new(&["role", "candidate", "check", "x", "value"]);
            for (role, key) in [("forward", "forward"), ("falsifier", "falsification")] {
                for o in items(r, key) {
                    let prefix = [role.to_string(), field(o, "candidate"), field(o, "check")];
                    for c in items(o, "cells") {
                        z.push(zscore_row(&prefix, c));
                    }
                    push_pairs(&mut curves, &prefix, items(o, "series"));
                }
            }
            tables.push(("zscores".into(), z));
            tables.push(("curves".into(), curves));
        }
        other => {
            return Err(Failure::Core(Error::Config(format!(
                "{}: unrecognized report kind `{other}`",
                report.display()
            ))));
        }
    }
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for (suffix, t) in tables {
        let path = out.join(format!("{stem}_{suffix}.csv"));
        t.write(&path)?;
        written.push(path);
    }
    Ok(written)
}

//! Artifact rendering. Everything except `runtime.json` is a pure function
//! of the configuration, so reruns and thread counts give identical bytes.

use std::path::Path;

use serde_json::json;
use setsum::diagnostics::{overall_verdict, TestReport};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::runner::{num, Outcome, Table};

pub const SUMMARY: &str = "summary.json";
pub const REPORTS: &str = "reports.csv";
pub const MANIFEST: &str = "manifest.txt";
pub const RUNTIME: &str = "runtime.json";

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Csv(e.into_error().into()))
}

fn reports_table(reports: &[TestReport]) -> Table {
    let header = [
        "statistic",
        "observed",
        "target",
        "criterion",
        "tolerance",
        "se",
        "verdict",
        "seed",
    ];
    Table {
        name: "reports".into(),
        header: header.iter().map(|h| h.to_string()).collect(),
        rows: reports
            .iter()
            .map(|r| {
                vec![
                    r.statistic.clone(),
                    num(r.observed),
                    num(r.target),
                    r.criterion.to_string(),
                    num(r.tolerance),
                    r.se.map(num).unwrap_or_default(),
                    r.verdict.to_string(),
                    r.seed.to_string(),
                ]
            })
            .collect(),
    }
}

/// (file name, bytes) for every reproducible artifact, manifest last.
pub fn render(outcome: &Outcome) -> Result<Vec<(String, Vec<u8>)>, CliError> {
    let summary = json!({
        "tool": "setsum",
        "version": env!("CARGO_PKG_VERSION"),
        "kind": outcome.config.kind().name(),
        "config": outcome.config,
        "verdict": overall_verdict(&outcome.reports),
        "reports": outcome.reports,
        "results": outcome.extras,
    });
    let mut files = vec![(SUMMARY.to_string(), {
        let mut b = serde_json::to_vec_pretty(&summary).expect("summary serializes");
        b.push(b'\n');
        b
    })];
    let reports = reports_table(&outcome.reports);
    files.push((
        REPORTS.to_string(),
        csv_bytes(&reports.header, &reports.rows)?,
    ));
    for t in &outcome.tables {
        files.push((format!("{}.csv", t.name), csv_bytes(&t.header, &t.rows)?));
    }
    let mut manifest = String::new();
    for (name, bytes) in &files {
        let digest = Sha256::digest(bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        manifest.push_str(&format!("{hex}  {name}\n"));
    }
    files.push((MANIFEST.to_string(), manifest.into_bytes()));
    Ok(files)
}

/// Writes the rendered artifacts plus `runtime.json` into `dir`.
pub fn write(outcome: &Outcome, dir: &Path) -> Result<Vec<String>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut names = Vec::new();
    for (name, bytes) in render(outcome)? {
        let path = dir.join(&name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        names.push(name);
    }
    let runtime = json!({
        "total_secs": outcome.runtime_secs,
        "reports": outcome.reports.iter().map(|r| json!({ "statistic": r.statistic, "secs": r.runtime_secs })).collect::<Vec<_>>(),
    });
    let path = dir.join(RUNTIME);
    let mut bytes = serde_json::to_vec_pretty(&runtime).expect("runtime serializes");
    bytes.push(b'\n');
    std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    names.push(RUNTIME.to_string());
    Ok(names)
}

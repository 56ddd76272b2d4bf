//! CSV and JSON emission.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

use super::plan::{ExperimentPlan, OutputFormat};
use super::sweep::SCHEMA_VERSION;

#[derive(Serialize)]
struct JsonDocument<'a, R: Serialize> {
    schema_version: u32,
    command: &'a str,
    plan: &'a ExperimentPlan,
    results: &'a [R],
}

/// One CSV row per record, header first.
pub fn write_csv<R: Serialize, W: Write>(out: W, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::Io { path: "<csv>".into(), source: e })
}

/// Plan echo plus results. Non-finite numbers become `null`.
pub fn write_json<R: Serialize, W: Write>(mut out: W, command: &str, plan: &ExperimentPlan, rows: &[R]) -> Result<()> {
    // The output location is not part of the experiment.
    let mut echo = plan.clone();
    echo.output.path = None;
    let doc = JsonDocument { schema_version: SCHEMA_VERSION, command, plan: &echo, results: rows };
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| Error::Parse(format!("json: {e}")))?;
    out.write_all(b"\n").map_err(|e| Error::Io { path: "<json>".into(), source: e })
}

pub fn render<R: Serialize, W: Write>(
    out: W,
    format: OutputFormat,
    command: &str,
    plan: &ExperimentPlan,
    rows: &[R],
) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(out, rows),
        OutputFormat::Json => write_json(out, command, plan, rows),
    }
}

/// Writes to `path`, or stdout when `None`.
pub fn emit<R: Serialize>(
    path: Option<&Path>,
    format: OutputFormat,
    command: &str,
    plan: &ExperimentPlan,
    rows: &[R],
) -> Result<()> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p).map_err(|e| Error::Io { path: p.to_path_buf(), source: e })?;
            let mut buf = std::io::BufWriter::new(file);
            render(&mut buf, format, command, plan, rows).map_err(|e| with_path(e, p))?;
            buf.flush().map_err(|e| Error::Io { path: p.to_path_buf(), source: e })
        }
        None => render(std::io::stdout().lock(), format, command, plan, rows),
    }
}

fn with_path(e: Error, p: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::Io { path: p.to_path_buf(), source },
        other => other,
    }
}

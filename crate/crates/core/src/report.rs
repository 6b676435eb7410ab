//! CSV and JSON output for sweep results.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiment::{ResultRow, SweepSpec};

pub const CSV_HEADER: [&str; 10] = [
    "design", "param", "value", "se_cf", "se_mc", "se_err", "he_bound", "he_mc", "he_err", "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// JSON document: the sweep that produced the rows, then the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub spec: SweepSpec,
    pub rows: Vec<ResultRow>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Feasible rows under the fixed header. Wall-clock time is left out so
/// that identical runs give identical bytes.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows.iter().filter(|r| r.feasible) {
        w.write_record([
            r.design.as_str().to_string(),
            r.param.as_str().to_string(),
            r.value.to_string(),
            cell(r.se_cf),
            cell(r.se_mc),
            cell(r.se_err),
            cell(r.he_bound),
            cell(r.he_mc),
            cell(r.he_err),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[ResultRow], spec: &SweepSpec, out: W) -> Result<()> {
    let doc = ReportDocument {
        spec: spec.clone(),
        rows: rows.to_vec(),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<ReportDocument> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Writes `rows` to `path` in `format`.
pub fn emit_report(rows: &[ResultRow], format: ReportFormat, path: &Path, spec: &SweepSpec) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        ReportFormat::Csv => write_csv(rows, &mut out)?,
        ReportFormat::Json => write_json(rows, spec, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

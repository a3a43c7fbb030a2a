//! CSV and JSON persistence of ratio reports.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing an
//! emitted file gives back the same bits.

use std::fs;
use std::io::Write;
use std::path::Path;

use relstable::verify::{RatioRecord, RatioReport, RatioSummary, ReportConfig, Verdict};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CSV_HEADER: [&str; 10] = ["d", "alpha", "m", "t", "x", "y", "comparator", "estimate", "std_err", "ratio"];

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn coords(v: &[f64]) -> String {
    v.iter().map(|&c| num(c)).collect::<Vec<_>>().join(";")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .terminator(csv::Terminator::CRLF)
        .from_writer(w)
}

pub fn write_records<W: Write>(records: &[RatioRecord], w: W) -> Result<(), CliError> {
    let mut out = writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.write_record([
            r.d.to_string(),
            num(r.alpha),
            num(r.m),
            r.t.map(num).unwrap_or_default(),
            coords(&r.x),
            coords(&r.y),
            num(r.comparator),
            num(r.estimate),
            num(r.std_err),
            num(r.ratio),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn records_to_csv(records: &[RatioRecord]) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write_records(records, &mut buf)?;
    String::from_utf8(buf).map_err(|e| CliError::Csv(e.to_string()))
}

/// Writes the retained records of `report`.
pub fn emit_csv(report: &RatioReport, path: &Path) -> Result<(), CliError> {
    write_file(path, records_to_csv(&report.records)?.as_bytes())
}

fn field<'a>(row: &'a csv::StringRecord, i: usize, line: usize) -> Result<&'a str, CliError> {
    row.get(i)
        .ok_or_else(|| CliError::Csv(format!("line {line}: missing column `{}`", CSV_HEADER[i])))
}

fn parse_f64(s: &str, col: &str, line: usize) -> Result<f64, CliError> {
    s.parse()
        .map_err(|_| CliError::Csv(format!("line {line}: `{col}` = {s:?} is not a number")))
}

pub fn parse_csv(text: &str) -> Result<Vec<RatioRecord>, CliError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rd.headers()?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(CliError::Csv(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (k, row) in rd.records().enumerate() {
        let row = row?;
        let line = k + 2;
        let f = |i: usize| field(&row, i, line);
        let n = |i: usize| parse_f64(f(i)?, CSV_HEADER[i], line);
        let pt = |i: usize| -> Result<Vec<f64>, CliError> {
            f(i)?.split(';').map(|c| parse_f64(c, CSV_HEADER[i], line)).collect()
        };
        out.push(RatioRecord {
            d: f(0)?
                .parse()
                .map_err(|_| CliError::Csv(format!("line {line}: bad `d`")))?,
            alpha: n(1)?,
            m: n(2)?,
            t: match f(3)? {
                "" => None,
                s => Some(parse_f64(s, "t", line)?),
            },
            x: pt(4)?,
            y: pt(5)?,
            comparator: n(6)?,
            estimate: n(7)?,
            std_err: n(8)?,
            ratio: n(9)?,
        });
    }
    Ok(out)
}

/// On-disk JSON layout, fields in schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub config: ReportConfig,
    pub summary: RatioSummary,
    pub verdict: Verdict,
    pub dropped_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl ReportJson {
    pub fn of(report: &RatioReport) -> Self {
        Self {
            config: report.config.clone(),
            summary: report.summary,
            verdict: report.verdict,
            dropped_points: report.dropped_points(),
            reason: report.reason.clone(),
        }
    }
}

pub fn report_to_json(report: &RatioReport) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(&ReportJson::of(report)).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn emit_report_json(report: &RatioReport, path: &Path) -> Result<(), CliError> {
    write_file(path, report_to_json(report)?.as_bytes())
}

pub fn parse_report_json(text: &str) -> Result<ReportJson, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("report JSON: {e}")))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

//! Long-format result tables: one row per (operation, parameter, dataset, network).

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Operation label of unattacked evaluation rows.
pub const CLEAN: &str = "Clean";
pub const CSV_HEADER: [&str; 5] = ["operation", "parameter", "dataset", "network", "accuracy"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub operation: String,
    pub parameter: String,
    pub dataset: String,
    pub network: String,
    /// Fraction in [0, 1]; written as a percentage with 2 decimals.
    pub accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Config(format!("report format {s:?} (expected csv or json)"))),
        }
    }
}

impl ReportFormat {
    /// Format implied by a file extension; CSV unless it ends in `.json`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

/// Accuracy in hundredths of a percent, rounded half away from zero.
fn hundredths(accuracy: f64) -> i64 {
    (accuracy * 10_000.0).round() as i64
}

/// `0.9625` becomes `"96.25"`.
pub fn format_percent(accuracy: f64) -> String {
    let h = hundredths(accuracy);
    format!("{}{}.{:02}", if h < 0 { "-" } else { "" }, h.abs() / 100, h.abs() % 100)
}

#[derive(Serialize)]
struct JsonRow<'a> {
    operation: &'a str,
    parameter: &'a str,
    dataset: &'a str,
    network: &'a str,
    accuracy: f64,
}

impl Report {
    pub fn new(rows: Vec<ReportRow>) -> Self {
        Report { rows }
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let err = |e: csv::Error| Error::Config(e.to_string());
        w.write_record(CSV_HEADER).map_err(err)?;
        for r in &self.rows {
            let acc = format_percent(r.accuracy);
            w.write_record([&r.operation, &r.parameter, &r.dataset, &r.network, &acc]).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
    }

    /// Array of row objects; `accuracy` is the same 2-decimal percentage as in CSV.
    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<JsonRow> = self
            .rows
            .iter()
            .map(|r| JsonRow {
                operation: &r.operation,
                parameter: &r.parameter,
                dataset: &r.dataset,
                network: &r.network,
                accuracy: hundredths(r.accuracy) as f64 / 100.0,
            })
            .collect();
        serde_json::to_string_pretty(&rows).map(|s| s + "\n").map_err(|e| Error::Config(e.to_string()))
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => self.to_json(),
        }
    }

    /// Parses CSV written by [`Report::to_csv`]; accuracy is rounded to 2 decimals of a percent.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let err = |e: csv::Error| Error::Config(format!("report csv: {e}"));
        let header = r.headers().map_err(err)?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::Config(format!("report csv header {:?}", header.iter().collect::<Vec<_>>())));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(err)?;
            let pct: f64 = rec[4].parse().map_err(|_| Error::Config(format!("accuracy {:?}", &rec[4])))?;
            rows.push(ReportRow {
                operation: rec[0].into(),
                parameter: rec[1].into(),
                dataset: rec[2].into(),
                network: rec[3].into(),
                accuracy: pct / 100.0,
            });
        }
        Ok(Report { rows })
    }
}

pub fn emit_report(report: &Report, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, report.render(format)?)?;
    Ok(())
}

/// Unattacked accuracy rows: one per (dataset, network), in input order.
pub fn clean_rows(results: &[(&str, &str, f64)]) -> Report {
    Report::new(
        results
            .iter()
            .map(|&(dataset, network, accuracy)| ReportRow {
                operation: CLEAN.into(),
                parameter: "-".into(),
                dataset: dataset.into(),
                network: network.into(),
                accuracy,
            })
            .collect(),
    )
}

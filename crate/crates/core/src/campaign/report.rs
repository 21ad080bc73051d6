use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version of the CSV layout below; bump when columns change.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Column order of the estimates CSV.
pub const CSV_COLUMNS: [&str; 10] = [
    "experiment",
    "n",
    "p",
    "trials",
    "estimate",
    "ci_halfwidth",
    "baseline_exact",
    "baseline_formula",
    "seed",
    "wall_ms",
];

/// One estimate of a campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub experiment: String,
    pub n: usize,
    /// Empty for experiments without a Bernoulli parameter.
    pub p: Option<f64>,
    pub trials: u64,
    pub estimate: f64,
    pub ci_halfwidth: f64,
    pub baseline_exact: Option<f64>,
    pub baseline_formula: Option<f64>,
    pub seed: u64,
    /// Zero unless timing was requested, so that reruns compare byte for byte.
    pub wall_ms: u64,
}

/// An exact reference value attached to a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub name: String,
    pub n: usize,
    pub p: Option<String>,
    pub value: f64,
    /// The exact rational `a/b`, when known.
    pub exact: Option<String>,
}

/// Per-item rows written with `--detail-out`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetailTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl DetailTable {
    pub fn new(columns: &[&str]) -> Self {
        DetailTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        finish(w)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub experiment: String,
    /// The full configuration that produced the report.
    pub params: serde_json::Value,
    pub estimates: Vec<EstimateRow>,
    pub baselines: Vec<Baseline>,
    /// Experiment-specific summary values.
    pub summary: serde_json::Map<String, serde_json::Value>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<DetailTable>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    /// Pretty-printed JSON of the whole report.
    Text,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// The estimates as CSV with a header row; an empty report gives just the header.
pub fn estimates_to_csv(rows: &[EstimateRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    finish(w)
}

pub fn estimates_from_csv(text: &str) -> Result<Vec<EstimateRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

impl CampaignReport {
    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Csv => estimates_to_csv(&self.estimates),
            ReportFormat::Text => {
                let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Writes the rendered report to `path`, or to stdout when `path` is `None`.
    pub fn emit(&self, format: ReportFormat, path: Option<&Path>) -> Result<()> {
        let text = self.render(format)?;
        match path {
            Some(p) => std::fs::write(p, text)?,
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use percolab::estimators::{PairedCurve, SweepFamily};
use percolab::lattice::GraphInfo;
use serde::{Deserialize, Serialize};

use crate::config::{Kind, RunConfig};
use crate::error::{CliError, CliResult};

pub const SCHEMA_ID: &str = "percolab/1";
pub const CSV_HEADER: [&str; 6] = ["n", "mean", "stderr", "ci_low", "ci_high", "samples"];

/// Envelope shared by every subcommand; `kind` says how to read `result`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub kind: Kind,
    pub config: RunConfig,
    pub graph: Option<GraphInfo>,
    pub notes: Vec<String>,
    pub result: serde_json::Value,
    /// Outside the determinism contract.
    pub timestamp_unix: u64,
}

impl Report {
    pub fn new(
        config: RunConfig,
        graph: Option<GraphInfo>,
        notes: Vec<String>,
        result: serde_json::Value,
    ) -> Self {
        let timestamp_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Report {
            schema: SCHEMA_ID.to_string(),
            kind: config.subcommand,
            config,
            graph,
            notes,
            result,
            timestamp_unix,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Rows for the CSV export; sweep rows carry a leading `p` column.
#[derive(Debug, Clone, PartialEq)]
pub enum CsvTable {
    Curve(PairedCurve),
    Sweep(SweepFamily),
}

pub fn write_csv(path: &Path, table: &CsvTable) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::io(path, e);
    let csv_err = |e: csv::Error| CliError::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let row = |n: u32, e: &percolab::estimators::Estimate| {
        [
            n.to_string(),
            e.mean.to_string(),
            e.stderr.to_string(),
            e.ci_low.to_string(),
            e.ci_high.to_string(),
            e.samples.to_string(),
        ]
    };
    match table {
        CsvTable::Curve(curve) => {
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for e in &curve.entries {
                w.write_record(row(e.n, &e.estimate)).map_err(csv_err)?;
            }
        }
        CsvTable::Sweep(fam) => {
            w.write_record(std::iter::once("p").chain(CSV_HEADER))
                .map_err(csv_err)?;
            for c in &fam.curves {
                for e in &c.entries {
                    let r = row(e.n, &e.estimate);
                    w.write_record(std::iter::once(c.p.to_string()).chain(r))
                        .map_err(csv_err)?;
                }
            }
        }
    }
    w.flush().map_err(io)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| CliError::io(path, e))
}

/// Reads the curve stored in an earlier report.
pub fn read_curve(path: &Path) -> CliResult<(PairedCurve, Option<GraphInfo>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parse = |reason: String| CliError::Parse {
        path: path.to_path_buf(),
        reason,
    };
    let report: Report = serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?;
    if report.schema != SCHEMA_ID {
        return Err(parse(format!("unsupported schema `{}`", report.schema)));
    }
    let curve = report.result.get("curve").ok_or_else(|| {
        parse(format!(
            "a `{}` report carries no curve",
            report.kind.as_str()
        ))
    })?;
    let curve: PairedCurve =
        serde_json::from_value(curve.clone()).map_err(|e| parse(e.to_string()))?;
    Ok((curve, report.graph))
}

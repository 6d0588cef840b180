//! Config-driven experiments: a JSON document names one experiment, the
//! runner executes it and returns a [`ResultTable`] that can be written as a
//! CSV table plus a JSON provenance sidecar.

mod config;
mod run;

pub use config::{ExperimentConfig, ExperimentKind, FbmCheck, KernelCase, OutputSpec, Process, StableSection, Tolerances};
pub use run::{run_experiment, run_with_threads};

use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// One line of a result table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    /// What `estimate` measures, e.g. "ks", "cdf", "sup_distance".
    pub metric: String,
    /// `key=value` pairs separated by semicolons.
    pub params: String,
    pub estimate: f64,
    /// Standard error, KS critical value or similar companion statistic.
    pub stat: f64,
    pub reference: Option<f64>,
    pub tolerance: Option<f64>,
    /// `None` for informational rows.
    pub pass: Option<bool>,
    /// Stream path of randomized rows.
    pub stream: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultTable {
    pub experiment: ExperimentKind,
    pub label: Option<String>,
    pub seed: u64,
    pub rows: Vec<ResultRow>,
    /// Wall-clock seconds per row, in row order. Not part of the CSV.
    pub row_seconds: Vec<f64>,
    pub runtime_seconds: f64,
    /// Experiment-specific provenance (sampler levels, truncation, ...).
    pub diagnostics: serde_json::Value,
    pub config: ExperimentConfig,
}

const HEADER: &str = "row,metric,params,estimate,stat,reference,tolerance,pass,stream";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

impl ResultTable {
    /// True when every row with a declared tolerance passes.
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn failures(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(|r| r.pass == Some(false))
    }

    /// Deterministic CSV; floats carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
            let pass = match r.pass {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "",
            };
            let _ = writeln!(
                out,
                "{i},{},{},{},{},{},{},{pass},{}",
                r.metric,
                r.params,
                num(r.estimate),
                num(r.stat),
                opt(r.reference),
                opt(r.tolerance),
                r.stream.as_deref().unwrap_or("")
            );
        }
        out
    }

    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "experiment": self.experiment,
            "label": self.label,
            "seed": self.seed,
            "pass": self.pass(),
            "rows": self.rows.len(),
            "runtime_seconds": self.runtime_seconds,
            "row_seconds": self.row_seconds,
            "diagnostics": self.diagnostics,
            "config": self.config,
            "crate_version": env!("CARGO_PKG_VERSION"),
        })
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`, creating it if needed.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let stem = self.config.stem();
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&csv, self.to_csv())?;
        crate::empirical::write_sidecar(&json, &self.sidecar())?;
        Ok((csv, json))
    }
}

//! JSON run reports and CSV tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use torus_psido::Complex64;

use crate::config::{Format, RunConfig};
use crate::error::Result;

pub const RESOLVENT_HEADER: [&str; 5] = ["lambda_modulus", "residual_norm", "resolvent_norm", "product", "slope_estimate"];
pub const HEAT_HEADER: [&str; 6] = ["t", "operator_trace", "symbol_leading", "symbol_corrected", "discrepancy_leading", "discrepancy_corrected"];
pub const ZETA_HEADER: [&str; 5] = ["z_re", "z_im", "operator_zeta", "contour_zeta", "symbol_zeta"];
pub const CONVERGENCE_HEADER: [&str; 3] = ["nodes_per_ray", "nodes_on_circle", "relative_error"];

pub fn version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

/// Non-finite values serialize as `null`, so reports stay valid JSON and
/// round-trip exactly.
pub fn num(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operation {
    pub name: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, Option<f64>>,
    pub notes: Vec<String>,
    pub wall_ms: f64,
}

impl Operation {
    pub fn new(name: impl Into<String>) -> Self {
        Operation { name: name.into(), passed: true, metrics: BTreeMap::new(), notes: Vec::new(), wall_ms: 0.0 }
    }

    pub fn metric(&mut self, key: impl Into<String>, v: f64) -> &mut Self {
        self.metrics.insert(key.into(), num(v));
        self
    }

    pub fn complex(&mut self, key: &str, v: Complex64) -> &mut Self {
        self.metric(format!("{key}_re"), v.re);
        self.metric(format!("{key}_im"), v.im)
    }

    /// Records `value <= bound` under `key`, failing the operation otherwise.
    pub fn gate_le(&mut self, key: &str, value: f64, bound: f64) -> bool {
        self.metric(key, value);
        let ok = value <= bound;
        if !ok {
            self.passed = false;
            self.notes.push(format!("{key} = {value:e} exceeds {bound:e}"));
        }
        ok
    }

    pub fn fail(&mut self, note: impl Into<String>) {
        self.passed = false;
        self.notes.push(note.into());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub passed: bool,
    pub config: RunConfig,
    pub operations: Vec<Operation>,
}

impl RunReport {
    pub fn new(command: &str, config: &RunConfig, operations: Vec<Operation>) -> Self {
        let passed = operations.iter().all(|o| o.passed);
        RunReport { version: version(), command: command.into(), seed: config.seed, passed, config: config.clone(), operations }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem of the CSV.
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Table { name: name.into(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            // Display gives the shortest string that parses back to the same f64
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub tables: Vec<Table>,
}

impl Outcome {
    /// Writes `<command>.json` and one CSV per table; returns the paths written.
    pub fn write(&self, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        if formats.contains(&Format::Json) {
            let p = dir.join(format!("{}.json", self.report.command));
            std::fs::write(&p, self.report.to_json()?)?;
            out.push(p);
        }
        if formats.contains(&Format::Csv) {
            for t in &self.tables {
                let p = dir.join(format!("{}.csv", t.name));
                std::fs::write(&p, t.to_csv()?)?;
                out.push(p);
            }
        }
        Ok(out)
    }
}

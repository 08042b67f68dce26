//! Tabular outputs, run manifests and the canned figure pipelines.
//!
//! Every CSV header names its unit in brackets: `t[tau]`, `theta[rad]`, `[1]` for dimensionless
//! columns. Numbers use the shortest round-trip form (exponent notation for very small or large
//! magnitudes), so equal data gives equal bytes.

pub mod figures;
pub mod tables;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use figures::{
    fig3, fig4, fig5, fig6, figure_grape, horizon_table, perturbed_schedule, speedup, speedup_table, Fig3Config,
    Fig4Config, Fig5Config, Fig6Config, SpeedupConfig, SpeedupRow,
};
pub use tables::*;

pub const MANIFEST_FILE: &str = "manifest.json";

/// A numeric table with a unit-annotated header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// Panics if the row width differs from the header.
    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }

    /// Column index by name, with or without the bracketed unit.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name || strip_unit(h) == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.index_of(name).map(|i| self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| format!("{x:?}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut table = Self::new(header);
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| Error::Csv(format!("row {}: '{f}' is not a number", i + 1))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != table.header.len() {
                return Err(Error::Csv(format!(
                    "row {} has {} fields, header has {}",
                    i + 1,
                    row.len(),
                    table.header.len()
                )));
            }
            table.rows.push(row);
        }
        Ok(table)
    }
}

fn strip_unit(h: &str) -> &str {
    h.split_once('[').map_or(h, |(n, _)| n)
}

/// Everything one command produced, before it is written to disk.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub tables: BTreeMap<String, Table>,
    pub documents: BTreeMap<String, serde_json::Value>,
    /// Headline numbers echoed into the manifest.
    pub summary: BTreeMap<String, f64>,
    /// Wall-clock seconds per stage; excluded from the determinism contract.
    pub timings: BTreeMap<String, f64>,
}

impl RunOutput {
    pub fn table(&mut self, name: impl Into<String>, t: Table) {
        self.tables.insert(name.into(), t);
    }

    pub fn document(&mut self, name: impl Into<String>, v: &impl Serialize) -> Result<()> {
        self.documents.insert(name.into(), serde_json::to_value(v)?);
        Ok(())
    }

    pub fn merge(&mut self, prefix: &str, other: RunOutput) {
        self.tables.extend(other.tables);
        self.documents.extend(other.documents);
        self.summary.extend(other.summary.into_iter().map(|(k, v)| (format!("{prefix}{k}"), v)));
        self.timings.extend(other.timings.into_iter().map(|(k, v)| (format!("{prefix}{k}"), v)));
    }

    /// Writes every table and document into `dir` plus the manifest, and returns the manifest.
    pub fn write(&self, dir: &Path, command: &str, config: serde_json::Value, seed: u64) -> Result<RunManifest> {
        std::fs::create_dir_all(dir)?;
        let mut outputs = Vec::new();
        for (name, t) in &self.tables {
            std::fs::write(dir.join(name), t.to_csv()?)?;
            outputs.push(name.clone());
        }
        for (name, v) in &self.documents {
            std::fs::write(dir.join(name), serde_json::to_string_pretty(v)? + "\n")?;
            outputs.push(name.clone());
        }
        let manifest = RunManifest {
            command: command.to_string(),
            config,
            seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            timings: self.timings.clone(),
            outputs,
            summary: self.summary.clone(),
        };
        manifest.write(&dir.join(MANIFEST_FILE))?;
        Ok(manifest)
    }
}

/// Config echo plus provenance; `command` and `config` alone re-run the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub code_version: String,
    pub timings: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub summary: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn output_paths(&self, dir: &Path) -> Vec<PathBuf> {
        self.outputs.iter().map(|o| dir.join(o)).collect()
    }
}

/// Runs `f`, recording its wall time under `key`.
pub(crate) fn timed<T>(timings: &mut BTreeMap<String, f64>, key: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t0 = std::time::Instant::now();
    let out = f()?;
    timings.insert(key.to_string(), t0.elapsed().as_secs_f64());
    Ok(out)
}

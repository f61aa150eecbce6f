//! Experiment reports: a fixed-column table (CSV) and the full record (JSON).

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, Kind};

#[derive(Clone, Debug, Serialize)]
pub struct VerdictEntry {
    pub check: String,
    /// Acceptance criterion this verdict reproduces.
    pub criterion: u8,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub kind: Kind,
    pub seed: Option<u64>,
    pub params: toml::Table,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub fits: BTreeMap<String, f64>,
    pub verdicts: Vec<VerdictEntry>,
    /// Run-specific extras (stage reports, labels).
    pub extra: BTreeMap<String, serde_json::Value>,
    pub wall_clock_s: f64,
}

impl ExperimentReport {
    pub fn new(cfg: &ExperimentConfig, columns: &[&'static str]) -> Self {
        Self {
            kind: cfg.kind,
            seed: cfg.seed,
            params: cfg.params.clone(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            fits: BTreeMap::new(),
            verdicts: Vec::new(),
            extra: BTreeMap::new(),
            wall_clock_s: 0.0,
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values.to_vec());
    }

    pub fn fit(&mut self, name: &str, value: f64) {
        self.fits.insert(name.to_string(), value);
    }

    pub fn verdict(&mut self, check: &str, criterion: u8, pass: bool, detail: impl Into<String>) {
        self.verdicts.push(VerdictEntry {
            check: check.to_string(),
            criterion,
            pass,
            detail: detail.into(),
        });
    }

    pub fn extra(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.extra.insert(key.to_string(), v);
    }

    pub fn passed(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.pass)
    }

    /// Sorts rows by their parameter tuple so the table does not depend on
    /// evaluation order.
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| format!("{x:e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<kind>.csv` and `<kind>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.kind));
        let json_path = dir.join(format!("{}.json", self.kind));
        self.write_csv(std::fs::File::create(&csv_path)?).map_err(io::Error::other)?;
        let json = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        std::fs::write(&json_path, json + "\n")?;
        Ok((csv_path, json_path))
    }
}

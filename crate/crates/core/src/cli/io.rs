use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::ObservableStats;
use crate::error::{Error, Result};

/// 17 significant digits; parses back to the identical `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Identifies one simulated cell in the output tables.
#[derive(Clone, Debug, PartialEq)]
pub struct CellKey {
    pub variant: String,
    pub l: usize,
    pub p_ctrl: f64,
    pub p_proj: f64,
    pub p_global: f64,
    pub steps: usize,
    pub n_traj: usize,
}

impl CellKey {
    fn fields(&self) -> Vec<String> {
        vec![
            self.variant.clone(),
            self.l.to_string(),
            fmt_f64(self.p_ctrl),
            fmt_f64(self.p_proj),
            fmt_f64(self.p_global),
            self.steps.to_string(),
            self.n_traj.to_string(),
        ]
    }
}

const KEY_HEADER: [&str; 7] = ["variant", "L", "p_ctrl", "p_proj", "p_global", "steps", "n_traj"];

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub key: CellKey,
    pub stats: Vec<ObservableStats>,
}

/// `time, mean, sem` rows of one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSeries {
    pub key: CellKey,
    pub times: Vec<usize>,
    pub mean: Vec<f64>,
    pub sem: Vec<f64>,
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

/// One row per cell and observable.
pub fn write_summary(path: &Path, cells: &[CellResult]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(KEY_HEADER.iter().chain(&["observable", "mean", "sem"]))?;
    for cell in cells {
        for s in &cell.stats {
            let mut row = cell.key.fields();
            row.extend([s.observable.name(), fmt_f64(s.mean), fmt_f64(s.sem)]);
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per cell, observable and trajectory.
pub fn write_raw(path: &Path, cells: &[CellResult]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(KEY_HEADER.iter().chain(&["observable", "traj_index", "value"]))?;
    for cell in cells {
        let key = cell.key.fields();
        for s in &cell.stats {
            let name = s.observable.name();
            for (j, v) in s.samples.iter().enumerate() {
                let mut row = key.clone();
                row.extend([name.clone(), j.to_string(), fmt_f64(*v)]);
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_timeseries(path: &Path, series: &[CellSeries]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(KEY_HEADER.iter().chain(&["t", "mean", "sem"]))?;
    for s in series {
        let key = s.key.fields();
        for k in 0..s.times.len() {
            let mut row = key.clone();
            row.extend([s.times[k].to_string(), fmt_f64(s.mean[k]), fmt_f64(s.sem[k])]);
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct SummaryRow {
    pub variant: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub p_ctrl: f64,
    pub p_proj: f64,
    pub p_global: f64,
    pub steps: usize,
    pub n_traj: usize,
    pub observable: String,
    pub mean: f64,
    pub sem: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct RawRow {
    pub variant: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub p_ctrl: f64,
    pub p_proj: f64,
    pub p_global: f64,
    pub steps: usize,
    pub n_traj: usize,
    pub observable: String,
    pub traj_index: usize,
    pub value: f64,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Config(format!("malformed row in {}: {e}", path.display()))))
        .collect()
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    read_rows(path)
}

pub fn read_raw(path: &Path) -> Result<Vec<RawRow>> {
    read_rows(path)
}

/// Provenance record written next to every data file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Resolved configuration, after command-line overrides.
    pub config: serde_json::Value,
    /// Every simulated cell with all of its parameters.
    pub cells: Vec<serde_json::Value>,
    pub seed: u64,
    pub observables: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<PathBuf>,
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

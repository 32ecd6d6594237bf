//! Run directories: one CSV per snapshot plus `manifest.json`.
//!
//! Schema version 1. Each snapshot file has the header
//! `x,rho,u,T,q,h,knudsen,beta4` and one row per interior cell; floats are
//! written in shortest round-trip form. The manifest echoes the scenario and
//! run configuration, lists the snapshot files with their global diagnostics,
//! and ends with the run summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::runner::{RunConfig, RunSummary, Snapshot};
use super::scenario::Scenario;

pub const SCHEMA_VERSION: u32 = 1;
pub const COLUMNS: [&str; 8] = ["x", "rho", "u", "T", "q", "h", "knudsen", "beta4"];
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub x: f64,
    pub rho: f64,
    pub u: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub q: f64,
    pub h: f64,
    pub knudsen: f64,
    pub beta4: f64,
}

impl CellRow {
    /// Value of a named column.
    pub fn get(&self, column: &str) -> Option<f64> {
        Some(match column {
            "x" => self.x,
            "rho" => self.rho,
            "u" => self.u,
            "T" => self.temperature,
            "q" => self.q,
            "h" => self.h,
            "knudsen" => self.knudsen,
            "beta4" => self.beta4,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub file: String,
    pub time: f64,
    pub step: usize,
    pub totals: [f64; 3],
    pub active_fraction: f64,
    pub wall_per_step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub columns: Vec<String>,
    pub scenario: Scenario,
    pub config: RunConfig,
    pub snapshots: Vec<SnapshotEntry>,
    pub summary: Option<RunSummary>,
}

/// Streams snapshots of one run into a directory.
pub struct RunWriter {
    dir: PathBuf,
    manifest: Manifest,
}

impl RunWriter {
    pub fn create(dir: impl AsRef<Path>, scenario: &Scenario, config: &RunConfig) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            manifest: Manifest {
                schema_version: SCHEMA_VERSION,
                columns: COLUMNS.iter().map(|c| c.to_string()).collect(),
                scenario: scenario.clone(),
                config: *config,
                snapshots: Vec::new(),
                summary: None,
            },
        })
    }

    pub fn write(&mut self, snap: &Snapshot) -> Result<()> {
        let file = format!("snapshot_{:04}.csv", self.manifest.snapshots.len());
        let mut w = csv::Writer::from_path(self.dir.join(&file))?;
        for i in 0..snap.x.len() {
            w.serialize(CellRow {
                x: snap.x[i],
                rho: snap.rho[i],
                u: snap.u[i],
                temperature: snap.temperature[i],
                q: snap.q[i],
                h: snap.h[i],
                knudsen: snap.knudsen[i],
                beta4: snap.beta4[i],
            })?;
        }
        w.flush()?;
        self.manifest.snapshots.push(SnapshotEntry {
            file,
            time: snap.time,
            step: snap.step,
            totals: snap.totals,
            active_fraction: snap.active_fraction,
            wall_per_step: snap.wall_per_step,
        });
        Ok(())
    }

    /// Writes the manifest and returns it.
    pub fn finish(mut self, summary: &RunSummary) -> Result<Manifest> {
        self.manifest.summary = Some(summary.clone());
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(self.dir.join(MANIFEST), text)?;
        Ok(self.manifest)
    }
}

/// Runs `scenario` and stores everything under `dir`.
pub fn run_to_dir(scenario: &Scenario, config: &RunConfig, dir: impl AsRef<Path>) -> Result<Manifest> {
    let mut w = RunWriter::create(dir, scenario, config)?;
    let summary = super::runner::run(scenario, config, &mut |s| w.write(s))?;
    w.finish(&summary)
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let text = fs::read_to_string(dir.as_ref().join(MANIFEST))?;
    let m: Manifest = serde_json::from_str(&text)?;
    if m.schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidConfig(format!("unsupported schema version {}", m.schema_version)));
    }
    Ok(m)
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Vec<CellRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != COLUMNS {
        return Err(Error::InvalidConfig(format!("unexpected columns {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Difference of one column between matching snapshots of two runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub index: usize,
    pub time: f64,
    pub column: String,
    /// `sum |a - b| / sum |a|`; absolute sum when `a` vanishes.
    pub l1: f64,
    pub linf: f64,
}

/// Compares the snapshots two run directories have in common, pairing
/// them by position. Times must agree to 1e-12 relative.
pub fn compare_runs(a: impl AsRef<Path>, b: impl AsRef<Path>) -> Result<Vec<CompareRow>> {
    let (a, b) = (a.as_ref(), b.as_ref());
    let (ma, mb) = (read_manifest(a)?, read_manifest(b)?);
    let mut rows = Vec::new();
    for (k, (ea, eb)) in ma.snapshots.iter().zip(&mb.snapshots).enumerate() {
        if (ea.time - eb.time).abs() > 1e-12 * ea.time.abs().max(eb.time.abs()) {
            return Err(Error::InvalidConfig(format!("snapshot {k}: times {} and {} differ", ea.time, eb.time)));
        }
        let (ra, rb) = (read_snapshot(a.join(&ea.file))?, read_snapshot(b.join(&eb.file))?);
        if ra.len() != rb.len() {
            return Err(Error::ShapeMismatch { expected: ra.len(), found: rb.len() });
        }
        for col in &COLUMNS[1..] {
            let (mut diff, mut norm, mut linf) = (0.0, 0.0, 0.0_f64);
            for (x, y) in ra.iter().zip(&rb) {
                let (x, y) = (x.get(col).unwrap_or(0.0), y.get(col).unwrap_or(0.0));
                diff += (x - y).abs();
                norm += x.abs();
                linf = linf.max((x - y).abs());
            }
            rows.push(CompareRow {
                index: k,
                time: ea.time,
                column: col.to_string(),
                l1: if norm > 0.0 { diff / norm } else { diff },
                linf,
            });
        }
    }
    Ok(rows)
}

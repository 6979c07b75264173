//! JSON run manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use snmesh_core::analysis::GatedReference;
use snmesh_core::integrate::IntegrationStats;

use crate::config::Problem;
use crate::csvio::write_atomic;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Default, Serialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl From<IntegrationStats> for Stats {
    fn from(s: IntegrationStats) -> Self {
        Stats {
            accepted: s.accepted,
            rejected: s.rejected,
            evaluations: s.evaluations,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Gate {
    pub gate: f64,
    pub self_check: f64,
    pub passed: bool,
    pub reference_order: usize,
    pub reference_cells: usize,
    pub reference_angles: usize,
}

impl From<&GatedReference> for Gate {
    fn from(r: &GatedReference) -> Self {
        Gate {
            gate: r.gate,
            self_check: r.self_check,
            passed: r.gate == 0.0 || r.passed(),
            reference_order: r.config.order,
            reference_cells: r.config.cells,
            reference_angles: r.config.angles,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub problem: String,
    pub config: BTreeMap<String, String>,
    pub wall_seconds: f64,
    pub stats: Option<Stats>,
    pub gate: Option<Gate>,
    pub outputs: Vec<PathBuf>,
    pub summary: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, problem: &Problem) -> Self {
        RunManifest {
            command: command.to_string(),
            version: VERSION.to_string(),
            problem: problem.kind.to_string(),
            config: problem.pairs().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            wall_seconds: 0.0,
            stats: None,
            gate: None,
            outputs: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    /// Writes the manifest as `<dir>/<command>.json` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.json", self.command));
        let mut text = serde_json::to_string_pretty(self).context("serializing manifest")?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

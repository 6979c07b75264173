//! Problem presets and the flat `key = value` configuration format.
//!
//! Keys mirror the columns of the problem table: `c`, `x0`, `t0`, `sigma`,
//! `N`, `M`, `K`, `mesh`, `source_mode`, `t_final`, plus the integrator
//! tolerances `rtol` and `atol`. Blank lines and `#` comments are ignored.

use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use snmesh_core::analytic::{SourceKind, SourceSpec};
use snmesh_core::dgcore::{MeshKind, RunConfig, SourceMode};
use snmesh_core::integrate::IntegratorConfig;

pub const KEYS: [&str; 12] = [
    "c",
    "x0",
    "t0",
    "sigma",
    "N",
    "M",
    "K",
    "mesh",
    "source_mode",
    "t_final",
    "rtol",
    "atol",
];

/// A fully specified problem and discretization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Problem {
    pub kind: SourceKind,
    pub c: f64,
    pub x0: f64,
    pub t0: f64,
    pub sigma: f64,
    pub angles: usize,
    pub order: usize,
    pub cells: usize,
    pub mesh: MeshKind,
    pub mode: SourceMode,
    pub t_final: f64,
    pub rtol: f64,
    pub atol: f64,
}

pub fn parse_mesh(s: &str) -> Result<MeshKind> {
    match s {
        "moving" => Ok(MeshKind::Moving),
        "static" => Ok(MeshKind::Static),
        _ => bail!("unknown mesh `{s}` (expected moving or static)"),
    }
}

pub fn parse_mode(s: &str) -> Result<SourceMode> {
    match s {
        "uncollided" => Ok(SourceMode::Uncollided),
        "standard" => Ok(SourceMode::Standard),
        _ => bail!("unknown source mode `{s}` (expected uncollided or standard)"),
    }
}

pub fn parse_kind(s: &str) -> Result<SourceKind> {
    s.parse().map_err(|_| {
        let names: Vec<_> = SourceKind::ALL.iter().map(|k| k.name()).collect();
        anyhow!("unknown preset `{s}` (expected one of {})", names.join(", "))
    })
}

impl Problem {
    /// Table parameters for `kind` with a default discretization.
    pub fn preset(kind: SourceKind) -> Self {
        let integ = IntegratorConfig::default();
        let mut p = Problem {
            kind,
            c: 1.0,
            x0: 0.5,
            t0: 0.0,
            sigma: 0.0,
            angles: 16,
            order: 6,
            cells: 4,
            mesh: MeshKind::Moving,
            mode: SourceMode::Uncollided,
            t_final: 1.0,
            rtol: integ.rtol,
            atol: integ.atol,
        };
        match kind {
            SourceKind::SquareSource | SourceKind::GaussianSource => p.t0 = 5.0,
            SourceKind::Mms => {
                p.x0 = 0.1;
                p.angles = 32;
                p.mode = SourceMode::Standard;
            }
            _ => {}
        }
        if kind.is_gaussian() {
            p.sigma = 0.5;
        }
        p
    }

    pub fn from_preset_name(name: &str) -> Result<Self> {
        Ok(Self::preset(parse_kind(name)?))
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let real = || -> Result<f64> {
            value
                .parse::<f64>()
                .with_context(|| format!("`{key}` expects a number, got `{value}`"))
        };
        let count = || -> Result<usize> {
            value
                .parse::<usize>()
                .with_context(|| format!("`{key}` expects a non-negative integer, got `{value}`"))
        };
        match key {
            "c" => self.c = real()?,
            "x0" => self.x0 = real()?,
            "t0" => self.t0 = real()?,
            "sigma" => self.sigma = real()?,
            "N" => self.angles = count()?,
            "M" => self.order = count()?,
            "K" => self.cells = count()?,
            "mesh" => self.mesh = parse_mesh(value)?,
            "source_mode" => self.mode = parse_mode(value)?,
            "t_final" => self.t_final = real()?,
            "rtol" => self.rtol = real()?,
            "atol" => self.atol = real()?,
            _ => bail!("unknown configuration key `{key}`"),
        }
        Ok(())
    }

    /// Applies every pair of a configuration text in order.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (key, value) in parse_pairs(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.apply_text(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn spec(&self) -> Result<SourceSpec> {
        Ok(SourceSpec::new(self.kind, self.c, self.x0, self.t0, self.sigma)?)
    }

    /// The solver configuration, validated.
    pub fn run_config(&self) -> Result<RunConfig> {
        let cfg = self.raw_config()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The solver configuration with only the source parameters checked.
    pub fn raw_config(&self) -> Result<RunConfig> {
        Ok(RunConfig {
            spec: self.spec()?,
            angles: self.angles,
            order: self.order,
            cells: self.cells,
            mesh: self.mesh,
            mode: self.mode,
            t_final: self.t_final,
            integrator: IntegratorConfig {
                rtol: self.rtol,
                atol: self.atol,
                ..IntegratorConfig::default()
            },
        })
    }

    /// (key, value) pairs in `KEYS` order, numbers with 17 significant digits.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        use crate::csvio::fmt17;
        vec![
            ("c", fmt17(self.c)),
            ("x0", fmt17(self.x0)),
            ("t0", fmt17(self.t0)),
            ("sigma", fmt17(self.sigma)),
            ("N", self.angles.to_string()),
            ("M", self.order.to_string()),
            ("K", self.cells.to_string()),
            ("mesh", self.mesh.name().to_string()),
            ("source_mode", self.mode.name().to_string()),
            ("t_final", fmt17(self.t_final)),
            ("rtol", fmt17(self.rtol)),
            ("atol", fmt17(self.atol)),
        ]
    }
}

impl From<RunConfig> for Problem {
    fn from(cfg: RunConfig) -> Self {
        Problem {
            kind: cfg.spec.kind,
            c: cfg.spec.c,
            x0: cfg.spec.x0,
            t0: cfg.spec.t0,
            sigma: cfg.spec.sigma,
            angles: cfg.angles,
            order: cfg.order,
            cells: cfg.cells,
            mesh: cfg.mesh,
            mode: cfg.mode,
            t_final: cfg.t_final,
            rtol: cfg.integrator.rtol,
            atol: cfg.integrator.atol,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "problem = {}", self.kind)?;
        for (k, v) in self.pairs() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Splits `key = value` lines. Later duplicates are kept; they override
/// earlier ones when applied in order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`", n + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            bail!("line {}: empty key or value", n + 1);
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

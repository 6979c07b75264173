//! File cache for gated reference solutions.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};
use snmesh_core::analysis::{self, GatedReference, MAX_GATE_DOUBLINGS};
use snmesh_core::analytic::SourceKind;
use snmesh_core::dgcore::RunConfig;

use crate::config::Problem;
use crate::csvio::{fmt17, parse_table, table, write_atomic};

pub const CACHE_ENV: &str = "SNMESH_CACHE_DIR";
const FORMAT_TAG: &str = "snmesh-oracle-2";

/// `SNMESH_CACHE_DIR` if set, otherwise `fallback`.
pub fn cache_dir(fallback: &Path) -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| fallback.to_path_buf())
}

fn canonical(cfg: &RunConfig, xs: &[f64]) -> String {
    let mut s = format!("{FORMAT_TAG}\nproblem = {}\n", cfg.spec.kind);
    for (k, v) in Problem::from(*cfg).pairs() {
        s.push_str(&format!("{k} = {v}\n"));
    }
    s.push_str(&format!("max_doublings = {MAX_GATE_DOUBLINGS}\n"));
    for x in xs {
        s.push_str(&fmt17(*x));
        s.push('\n');
    }
    s
}

/// Hex digest identifying an oracle request.
pub fn fingerprint(cfg: &RunConfig, xs: &[f64]) -> String {
    let digest = Sha256::digest(canonical(cfg, xs).as_bytes());
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cache_path(dir: &Path, cfg: &RunConfig, xs: &[f64]) -> PathBuf {
    dir.join(format!("oracle-{}-{}.csv", cfg.spec.kind, fingerprint(cfg, xs)))
}

fn render(r: &GatedReference, requested: &RunConfig, xs: &[f64]) -> String {
    let mut s = format!(
        "# {FORMAT_TAG}\n# fingerprint = {}\n# problem = {}\n",
        fingerprint(requested, xs),
        requested.spec.kind
    );
    for (k, v) in Problem::from(*requested).pairs() {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s.push_str(&format!("# cells_used = {}\n", r.config.cells));
    s.push_str(&format!("# gate = {}\n", fmt17(r.gate)));
    s.push_str(&format!("# self_check = {}\n", fmt17(r.self_check)));
    let rows: Vec<Vec<f64>> = xs.iter().zip(&r.values).map(|(&x, &v)| vec![x, v]).collect();
    s.push_str(&table(&["x", "phi"], &rows));
    s
}

fn header_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once(" = "))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}

fn parse(text: &str, requested: &RunConfig, xs: &[f64]) -> Result<GatedReference> {
    if header_value(text, "fingerprint") != Some(fingerprint(requested, xs).as_str()) {
        bail!("fingerprint mismatch");
    }
    let number = |key: &str| -> Result<f64> {
        header_value(text, key)
            .with_context(|| format!("missing `{key}`"))?
            .parse::<f64>()
            .context(key.to_string())
    };
    let cells: usize = header_value(text, "cells_used")
        .context("missing `cells_used`")?
        .parse()?;
    let rows = parse_table(text, &["x", "phi"])?;
    if rows.len() != xs.len() || rows.iter().zip(xs).any(|(r, &x)| r[0] != x) {
        bail!("grid mismatch");
    }
    Ok(GatedReference {
        config: RunConfig { cells, ..*requested },
        values: rows.iter().map(|r| r[1]).collect(),
        self_check: number("self_check")?,
        gate: number("gate")?,
    })
}

/// Reference values at `xs` for the oracle configuration `cfg`: exact for the
/// manufactured problem, otherwise loaded from `dir` or computed and stored.
/// A missed gate is returned, not raised; callers decide.
pub fn reference(cfg: &RunConfig, xs: &[f64], dir: &Path) -> Result<GatedReference> {
    if cfg.spec.kind == SourceKind::Mms {
        return Ok(analysis::gated_reference(*cfg, xs, 0)?);
    }
    let path = cache_path(dir, cfg, xs);
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(r) = parse(&text, cfg, xs) {
            return Ok(r);
        }
    }
    let r = analysis::gated_reference(*cfg, xs, MAX_GATE_DOUBLINGS)
        .with_context(|| format!("oracle solve for {}", cfg.spec.kind))?;
    write_atomic(&path, render(&r, cfg, xs).as_bytes())?;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use snmesh_core::analysis::evaluation_grid;

    fn oracle_cfg() -> RunConfig {
        let mut p = Problem::preset(SourceKind::GaussianPulse);
        p.order = 10;
        p.cells = 8;
        p.angles = 8;
        p.run_config().unwrap()
    }

    #[test]
    fn fingerprint_tracks_inputs() {
        let cfg = oracle_cfg();
        let xs = evaluation_grid(cfg.spec.kind, cfg.spec.x0, cfg.spec.sigma, 1.0);
        let a = fingerprint(&cfg, &xs);
        assert_eq!(a.len(), 32);
        assert_eq!(a, fingerprint(&cfg, &xs));
        assert_ne!(a, fingerprint(&RunConfig { cells: 16, ..cfg }, &xs));
        assert_ne!(a, fingerprint(&cfg, &xs[1..]));
    }

    #[test]
    fn cache_is_reused_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = oracle_cfg();
        let xs = evaluation_grid(cfg.spec.kind, cfg.spec.x0, cfg.spec.sigma, 1.0);
        let first = reference(&cfg, &xs, dir.path()).unwrap();
        let path = cache_path(dir.path(), &cfg, &xs);
        let bytes = std::fs::read(&path).unwrap();
        let again = reference(&cfg, &xs, dir.path()).unwrap();
        assert_eq!(first, again);
        // recomputing from scratch writes identical bytes
        std::fs::remove_file(&path).unwrap();
        reference(&cfg, &xs, dir.path()).unwrap();
        assert_eq!(bytes, std::fs::read(&path).unwrap());
        // a corrupt file is replaced
        std::fs::write(&path, "garbage").unwrap();
        assert_eq!(reference(&cfg, &xs, dir.path()).unwrap(), first);
    }

    #[test]
    fn manufactured_reference_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Problem::preset(SourceKind::Mms).run_config().unwrap();
        let xs = [0.0, 0.5];
        let r = reference(&cfg, &xs, dir.path()).unwrap();
        assert_eq!(r.values[0], 0.5);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}

//! Wall-time benchmarks: five timed solves per configuration.

use std::path::Path;
use std::time::Instant;

use anyhow::{ensure, Result};
use snmesh_core::analysis;

use crate::config::Problem;
use crate::csvio::fmt17;
use crate::oracle;
use crate::study::{grid, reference_config, Sweep, Variant};

pub const RUNS: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub variant: Variant,
    pub order: usize,
    pub cells: usize,
    pub mean_seconds: f64,
    pub rmse: f64,
}

/// Times every supported (variant, entry) pair. Unsupported pairs are
/// skipped; a missed oracle gate aborts.
pub fn run(problem: &Problem, sweep: &Sweep, variants: &[Variant], cache: &Path) -> Result<Vec<BenchRow>> {
    let xs = grid(problem);
    let reference = oracle::reference(&reference_config(problem, sweep)?, &xs, cache)?;
    ensure!(
        reference.gate == 0.0 || reference.passed(),
        "oracle gate missed: self-check RMSE {:e} >= gate {:e}",
        reference.self_check,
        reference.gate
    );
    let mut rows = Vec::new();
    for &variant in variants {
        for &value in sweep.values() {
            let (m, k) = sweep.entry(value);
            let p = Problem {
                order: m,
                cells: k,
                ..variant.apply(problem)
            };
            let Ok(cfg) = p.run_config() else { continue };
            let mut total = 0.0;
            let mut phi = Vec::new();
            for _ in 0..RUNS {
                let start = Instant::now();
                phi = analysis::solve_scalar_flux(cfg, &xs)?;
                total += start.elapsed().as_secs_f64();
            }
            let rmse = analysis::rmse(&phi, &reference.values)?;
            rows.push(BenchRow {
                variant,
                order: m,
                cells: k,
                mean_seconds: total / RUNS as f64,
                rmse,
            });
        }
    }
    Ok(rows)
}

pub fn csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("variant,M,K,mean_seconds,rmse\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.variant,
            r.order,
            r.cells,
            fmt17(r.mean_seconds),
            fmt17(r.rmse)
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use snmesh_core::analytic::SourceKind;

    #[test]
    fn mms_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = Problem::preset(SourceKind::Mms);
        let sweep = Sweep::Order {
            cells: 4,
            values: vec![2, 4],
        };
        let rows = run(&p, &sweep, &Variant::ALL, dir.path()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].rmse < rows[0].rmse);
        assert!(rows
            .iter()
            .all(|r| r.mean_seconds > 0.0 && r.variant == Variant::STANDARD_MOVING));
        let again = run(&p, &sweep, &Variant::ALL, dir.path()).unwrap();
        assert_eq!(rows[0].rmse.to_bits(), again[0].rmse.to_bits());
        assert!(csv(&rows).starts_with("variant,M,K,mean_seconds,rmse\nstandard-moving,2,4,"));
    }
}

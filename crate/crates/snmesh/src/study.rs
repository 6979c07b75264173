//! Convergence sweeps over the four method variants.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use snmesh_core::analysis::{self, ConvergenceRecord, GatedReference, SweepVariable};
use snmesh_core::dgcore::{MeshKind, RunConfig, SourceMode};
use snmesh_core::Error as CoreError;

use crate::config::Problem;
use crate::csvio::fmt17;
use crate::oracle;

/// A source treatment paired with a mesh law.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Variant {
    pub mode: SourceMode,
    pub mesh: MeshKind,
}

impl Variant {
    pub const UNCOLLIDED_MOVING: Variant = Variant {
        mode: SourceMode::Uncollided,
        mesh: MeshKind::Moving,
    };
    pub const UNCOLLIDED_STATIC: Variant = Variant {
        mode: SourceMode::Uncollided,
        mesh: MeshKind::Static,
    };
    pub const STANDARD_MOVING: Variant = Variant {
        mode: SourceMode::Standard,
        mesh: MeshKind::Moving,
    };
    /// The standard DG method, which improvements are measured against.
    pub const BASELINE: Variant = Variant {
        mode: SourceMode::Standard,
        mesh: MeshKind::Static,
    };
    pub const ALL: [Variant; 4] = [
        Self::UNCOLLIDED_MOVING,
        Self::UNCOLLIDED_STATIC,
        Self::STANDARD_MOVING,
        Self::BASELINE,
    ];

    pub fn name(self) -> String {
        format!("{}-{}", self.mode.name(), self.mesh.name())
    }

    pub fn apply(self, p: &Problem) -> Problem {
        Problem {
            mode: self.mode,
            mesh: self.mesh,
            ..*p
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Variant {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| anyhow!("unknown variant `{s}` (expected e.g. uncollided-moving, standard-static)"))
    }
}

/// Cell sweep at fixed order, or order sweep at fixed cell count.
#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    Cells { order: usize, values: Vec<usize> },
    Order { cells: usize, values: Vec<usize> },
}

impl Sweep {
    pub fn variable(&self) -> SweepVariable {
        match self {
            Sweep::Cells { .. } => SweepVariable::Cells,
            Sweep::Order { .. } => SweepVariable::Order,
        }
    }

    pub fn values(&self) -> &[usize] {
        match self {
            Sweep::Cells { values, .. } | Sweep::Order { values, .. } => values,
        }
    }

    /// (M, K) of one sweep entry.
    pub fn entry(&self, value: usize) -> (usize, usize) {
        match self {
            Sweep::Cells { order, .. } => (*order, value),
            Sweep::Order { cells, .. } => (value, *cells),
        }
    }

    pub fn max_cells(&self) -> usize {
        match self {
            Sweep::Cells { values, .. } => values.iter().copied().max().unwrap_or(0),
            Sweep::Order { cells, .. } => *cells,
        }
    }

    fn validate(&self) -> Result<()> {
        let v = self.values();
        if v.is_empty() || v[0] == 0 || v.windows(2).any(|w| w[0] >= w[1]) {
            bail!("sweep values must be positive and strictly increasing");
        }
        Ok(())
    }
}

/// Outcome for one variant.
#[derive(Clone, Debug)]
pub struct VariantResult {
    pub variant: Variant,
    /// `None` when no sweep entry is supported by the variant.
    pub record: Option<ConvergenceRecord>,
    /// Entries the variant cannot run, with the reason.
    pub skipped: Vec<(usize, String)>,
    /// Baseline intercept over this variant's intercept.
    pub improvement: Option<f64>,
}

impl VariantResult {
    pub fn rate(&self) -> Option<f64> {
        self.record.as_ref()?.fit.map(|f| f.rate)
    }

    pub fn intercept(&self) -> Option<f64> {
        self.record.as_ref()?.fit.map(|f| f.constant)
    }
}

#[derive(Clone, Debug)]
pub struct Study {
    pub problem: Problem,
    pub sweep: Sweep,
    pub grid: Vec<f64>,
    pub reference: GatedReference,
    pub results: Vec<VariantResult>,
}

impl Study {
    pub fn result(&self, v: Variant) -> Option<&VariantResult> {
        self.results.iter().find(|r| r.variant == v)
    }

    /// Rows of the convergence CSV.
    pub fn csv(&self) -> String {
        let mut s = String::from("variant,sweep,value,rmse,fit_A_or_c1,fit_C\n");
        for r in &self.results {
            let Some(rec) = &r.record else { continue };
            let (a, c) = match rec.fit {
                Some(f) => (fmt17(f.rate), fmt17(f.constant)),
                None => (String::new(), String::new()),
            };
            for &(v, e) in &rec.points {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.variant,
                    rec.sweep.name(),
                    v,
                    fmt17(e),
                    a,
                    c
                ));
            }
        }
        s
    }
}

/// The evaluation grid of a problem at its final time.
pub fn grid(p: &Problem) -> Vec<f64> {
    analysis::evaluation_grid(p.kind, p.x0, p.sigma, p.t_final)
}

/// Oracle configuration for a sweep of `problem`.
pub fn reference_config(problem: &Problem, sweep: &Sweep) -> Result<RunConfig> {
    let base = problem.raw_config()?;
    Ok(analysis::reference_config(&base, sweep.max_cells(), problem.angles))
}

fn unsupported(e: &CoreError) -> bool {
    matches!(e, CoreError::Configuration(_) | CoreError::InvalidArgument(_))
}

/// Solves every supported (variant, entry) pair and scores it against the
/// gated oracle. Aborts when the oracle misses its gate.
pub fn run(problem: &Problem, sweep: &Sweep, variants: &[Variant], cache: &Path) -> Result<Study> {
    sweep.validate()?;
    let xs = grid(problem);
    let reference = oracle::reference(&reference_config(problem, sweep)?, &xs, cache)?;
    if !reference.passed() && reference.gate > 0.0 {
        bail!(
            "oracle gate missed: self-check RMSE {:e} >= gate {:e} (M = {}, K = {}, N = {})",
            reference.self_check,
            reference.gate,
            reference.config.order,
            reference.config.cells,
            reference.config.angles
        );
    }
    let mut results = Vec::new();
    for &variant in variants {
        let mut points = Vec::new();
        let mut skipped = Vec::new();
        for &value in sweep.values() {
            let (m, k) = sweep.entry(value);
            let p = Problem {
                order: m,
                cells: k,
                ..variant.apply(problem)
            };
            let cfg = p.raw_config()?;
            if let Err(e) = cfg.validate() {
                if unsupported(&e) {
                    skipped.push((value, e.to_string()));
                    continue;
                }
                return Err(e.into());
            }
            let phi = analysis::solve_scalar_flux(cfg, &xs)?;
            points.push((value as f64, analysis::rmse(&phi, &reference.values)?));
        }
        let record = if points.is_empty() {
            None
        } else {
            Some(ConvergenceRecord::new(sweep.variable(), points, reference.gate)?)
        };
        results.push(VariantResult {
            variant,
            record,
            skipped,
            improvement: None,
        });
    }
    let baseline = results
        .iter()
        .find(|r| r.variant == Variant::BASELINE)
        .and_then(|r| r.record.clone());
    if let Some(base) = baseline {
        for r in &mut results {
            if let Some(rec) = &r.record {
                r.improvement = analysis::intercept_improvement(&base, rec).ok();
            }
        }
    }
    Ok(Study {
        problem: *problem,
        sweep: sweep.clone(),
        grid: xs,
        reference,
        results,
    })
}

/// Solution table of one solve at the problem's grid.
pub fn solution_csv(problem: &Problem) -> Result<(String, snmesh_core::integrate::IntegrationStats)> {
    let cfg = problem.run_config()?;
    let xs = grid(problem);
    let mut solver = snmesh_core::dgcore::Solver::new(cfg)?;
    let (state, stats) = solver.solve()?;
    let phi = solver.scalar_flux(&state, &xs)?;
    let phi_u = xs
        .iter()
        .map(|&x| cfg.spec.uncollided(x, state.t))
        .collect::<Result<Vec<f64>, _>>()?;
    let phi_u: Vec<f64> = if cfg.mode == SourceMode::Uncollided {
        phi_u
    } else {
        vec![0.0; xs.len()]
    };
    Ok((crate::csvio::solution_table(&xs, &phi, &phi_u), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use snmesh_core::analytic::SourceKind;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!(Variant::BASELINE.name(), "standard-static");
        assert!("fast-moving".parse::<Variant>().is_err());
    }

    #[test]
    fn mms_order_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let p = Problem::preset(SourceKind::Mms);
        let sweep = Sweep::Order {
            cells: 4,
            values: vec![2, 4, 6],
        };
        let s = run(&p, &sweep, &Variant::ALL, dir.path()).unwrap();
        let um = s.result(Variant::STANDARD_MOVING).unwrap();
        let rec = um.record.as_ref().unwrap();
        assert_eq!(rec.points.len(), 3);
        assert!(rec.points.windows(2).all(|w| w[1].1 < w[0].1 / 50.0));
        // the other variants cannot run the manufactured problem
        for v in [
            Variant::UNCOLLIDED_MOVING,
            Variant::UNCOLLIDED_STATIC,
            Variant::BASELINE,
        ] {
            let r = s.result(v).unwrap();
            assert!(r.record.is_none() && r.skipped.len() == 3);
        }
        let csv = s.csv();
        assert!(csv.starts_with("variant,sweep,value,rmse,fit_A_or_c1,fit_C\n"));
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().starts_with("standard-moving,M,2,"));
    }

    #[test]
    fn bad_sweeps_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = Problem::preset(SourceKind::Mms);
        assert!(run(
            &p,
            &Sweep::Order {
                cells: 4,
                values: vec![4, 2]
            },
            &Variant::ALL,
            dir.path()
        )
        .is_err());
        assert!(run(
            &p,
            &Sweep::Order {
                cells: 4,
                values: vec![]
            },
            &Variant::ALL,
            dir.path()
        )
        .is_err());
    }
}

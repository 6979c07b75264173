//! Scattering-ratio scaling check for initial-value problems.
//!
//! The problem's `x0`, `sigma` and `t_final` are read as the c = 1 benchmark
//! parameters. The ratio-c problem is solved directly with `x0/c`, `sigma/c`
//! and `t_final/c`, and compared with the transformed c = 1 solve.

use anyhow::{bail, Result};
use snmesh_core::analytic::{scaled_parameters, SourceKind};
use snmesh_core::dgcore::Solver;

use crate::config::Problem;
use crate::study::grid;

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleReport {
    pub c: f64,
    /// Final time of the direct ratio-c solve.
    pub t_direct: f64,
    /// Final time of the c = 1 solve.
    pub t_reference: f64,
    pub xs: Vec<f64>,
    pub direct: Vec<f64>,
    pub scaled: Vec<f64>,
    pub max_diff: f64,
}

/// The ratio-c problem equivalent to `problem` taken at c = 1.
pub fn direct_problem(problem: &Problem) -> Result<Problem> {
    let sp = scaled_parameters(problem.c, problem.x0, problem.sigma, problem.t_final)?;
    Ok(Problem {
        x0: sp.x0,
        sigma: sp.sigma,
        t_final: sp.t_final,
        ..*problem
    })
}

pub fn run(problem: &Problem) -> Result<ScaleReport> {
    if !problem.kind.is_pulse() {
        bail!(
            "scaling check rejects `{}`: the scaling holds for initial value problems with no source term",
            problem.kind
        );
    }
    let c = problem.c;
    let direct = direct_problem(problem)?;
    let reference = Problem { c: 1.0, ..*problem };

    let xs = grid(&direct);
    let mut solver = Solver::new(direct.run_config()?)?;
    let (state, _) = solver.solve()?;
    let phi_direct = solver.scalar_flux(&state, &xs)?;

    let mut solver = Solver::new(reference.run_config()?)?;
    let (state, _) = solver.solve()?;
    let cx: Vec<f64> = xs.iter().map(|&x| c * x).collect();
    let phi1 = solver.scalar_flux(&state, &cx)?;

    // c·δ(cx) = δ(x), so only the plane pulse keeps the amplitude factor
    let amp = if problem.kind == SourceKind::PlanePulse { c } else { 1.0 };
    let decay = amp * (-(1.0 - c) * direct.t_final).exp();
    let scaled: Vec<f64> = phi1.iter().map(|v| decay * v).collect();
    let max_diff = phi_direct
        .iter()
        .zip(&scaled)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(ScaleReport {
        c,
        t_direct: direct.t_final,
        t_reference: reference.t_final,
        xs,
        direct: phi_direct,
        scaled,
        max_diff,
    })
}

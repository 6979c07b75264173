//! Error metrics, convergence fits and the self-convergence oracle.

use alloc::vec::Vec;

use libm::{exp, log, sqrt};

use crate::analytic::{self, SourceKind};
use crate::dgcore::{MeshKind, RunConfig, Solver, SourceMode};
use crate::error::{Error, Result};

/// Number of evaluation points for RMSE.
pub const GRID_POINTS: usize = 201;
/// Polynomial degree of oracle solves.
pub const REFERENCE_ORDER: usize = 10;
/// Oracle cells and directions are this multiple of the study's largest values.
pub const REFERENCE_REFINEMENT: usize = 4;
/// Points whose RMSE is below this multiple of the gate are left out of fits.
pub const SATURATION_FACTOR: f64 = 10.0;

const FRONT_SLACK: f64 = 1e-12;

/// Root mean squared difference.
pub fn rmse(computed: &[f64], reference: &[f64]) -> Result<f64> {
    if computed.is_empty() || computed.len() != reference.len() {
        return Err(Error::InvalidArgument(
            "rmse needs two non-empty arrays of equal length",
        ));
    }
    let sum: f64 = computed.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sqrt(sum / computed.len() as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitKind {
    /// RMSE = C K^-A
    Algebraic,
    /// RMSE = C exp(-c1 M)
    Spectral,
}

/// Fitted model parameters. `rate` is A or c1, `constant` is C, `residual`
/// is the RMS deviation of log RMSE from the fitted line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fit {
    pub kind: FitKind,
    pub rate: f64,
    pub constant: f64,
    pub residual: f64,
}

fn line_fit(points: &[(f64, f64)], kind: FitKind) -> Result<Fit> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("a fit needs at least two points"));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(v, e) in points {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::OutOfDomain {
                value: e,
                lower: 0.0,
                upper: f64::INFINITY,
            });
        }
        let x = match kind {
            FitKind::Algebraic => {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::OutOfDomain {
                        value: v,
                        lower: 0.0,
                        upper: f64::INFINITY,
                    });
                }
                log(v)
            }
            FitKind::Spectral => {
                if !v.is_finite() {
                    return Err(Error::InvalidArgument("sweep values must be finite"));
                }
                v
            }
        };
        xs.push(x);
        ys.push(log(e));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("sweep values must not all coincide"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x) * (y - intercept - slope * x))
        .sum();
    Ok(Fit {
        kind,
        rate: -slope,
        constant: exp(intercept),
        residual: sqrt(ss / n),
    })
}

/// Least-squares fit of log RMSE against log K.
pub fn fit_algebraic(points: &[(f64, f64)]) -> Result<Fit> {
    line_fit(points, FitKind::Algebraic)
}

/// Least-squares fit of log RMSE against M.
pub fn fit_spectral(points: &[(f64, f64)]) -> Result<Fit> {
    line_fit(points, FitKind::Spectral)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVariable {
    Cells,
    Order,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Cells => "K",
            SweepVariable::Order => "M",
        }
    }
}

/// (value, RMSE) pairs of one sweep and the model fitted to them.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub sweep: SweepVariable,
    pub points: Vec<(f64, f64)>,
    /// Points used by the fit, after saturated ones are dropped.
    pub fitted_points: Vec<(f64, f64)>,
    pub fit: Option<Fit>,
}

impl ConvergenceRecord {
    /// Builds a record and fits it. Cell sweeps get the algebraic model,
    /// order sweeps the spectral one. Points with RMSE below
    /// `SATURATION_FACTOR * gate` are excluded from the fit. The fit is
    /// `None` when too few points remain (for the algebraic model: fewer
    /// than three, or spanning less than a factor 4).
    pub fn new(sweep: SweepVariable, points: Vec<(f64, f64)>, gate: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("a convergence record needs points"));
        }
        if points.windows(2).any(|p| !(p[0].0 < p[1].0)) {
            return Err(Error::InvalidArgument("sweep values must be strictly increasing"));
        }
        if points.iter().any(|p| !(p.1 > 0.0)) {
            return Err(Error::InvalidArgument("RMSE values must be positive"));
        }
        let floor = SATURATION_FACTOR * gate;
        let fitted_points: Vec<(f64, f64)> = points.iter().copied().filter(|p| !(p.1 < floor)).collect();
        let fit = match sweep {
            SweepVariable::Cells => {
                let span_ok =
                    fitted_points.len() >= 3 && fitted_points[fitted_points.len() - 1].0 >= 4.0 * fitted_points[0].0;
                if span_ok {
                    Some(fit_algebraic(&fitted_points)?)
                } else {
                    None
                }
            }
            SweepVariable::Order => {
                if fitted_points.len() >= 2 {
                    Some(fit_spectral(&fitted_points)?)
                } else {
                    None
                }
            }
        };
        Ok(Self {
            sweep,
            points,
            fitted_points,
            fit,
        })
    }

    pub fn rmse_at(&self, value: f64) -> Option<f64> {
        self.points.iter().find(|p| p.0 == value).map(|p| p.1)
    }
}

/// Ratio of the baseline intercept to the candidate intercept.
pub fn intercept_improvement(baseline: &ConvergenceRecord, candidate: &ConvergenceRecord) -> Result<f64> {
    let (b, c) = match (baseline.fit, candidate.fit) {
        (Some(b), Some(c)) if b.kind == FitKind::Algebraic && c.kind == FitKind::Algebraic => (b, c),
        _ => return Err(Error::InvalidArgument("both records need an algebraic fit")),
    };
    if c.constant == 0.0 {
        return Err(Error::Degenerate("candidate intercept is zero"));
    }
    Ok(b.constant / c.constant)
}

/// Half-width of the RMSE evaluation interval at time `t`.
pub fn grid_half_width(kind: SourceKind, x0: f64, sigma: f64, t: f64) -> f64 {
    match kind {
        SourceKind::GaussianPulse | SourceKind::GaussianSource => t + 3.0 * sigma,
        SourceKind::PlanePulse => t,
        _ => t + x0,
    }
}

/// `GRID_POINTS` uniformly spaced points on [-w, w], mirror-symmetric
/// bit for bit.
pub fn evaluation_grid(kind: SourceKind, x0: f64, sigma: f64, t: f64) -> Vec<f64> {
    let w = grid_half_width(kind, x0, sigma, t);
    let half = ((GRID_POINTS - 1) / 2) as f64;
    (0..GRID_POINTS).map(|i| w * (i as f64 - half) / half).collect()
}

/// Exact manufactured scalar flux with the support closed at the front, so
/// grid points on |x| = t + x0 take the interior value.
pub fn mms_reference(xs: &[f64], t: f64, x0: f64) -> Vec<f64> {
    let front = (t + x0) * (1.0 + FRONT_SLACK);
    xs.iter()
        .map(|&x| {
            if x.abs() <= front {
                analytic::mms_solution(0.0, t, x0).1 * exp(-0.5 * x * x)
            } else {
                0.0
            }
        })
        .collect()
}

/// Gate applied to the oracle self-check for a problem kind.
pub fn reference_gate(kind: SourceKind) -> f64 {
    match kind {
        SourceKind::Mms => 0.0,
        SourceKind::GaussianPulse | SourceKind::GaussianSource => 1e-9,
        _ => 1e-6,
    }
}

/// Oracle configuration for a study whose largest cell count and direction
/// count are `k_max` and `n_study`.
pub fn reference_config(study: &RunConfig, k_max: usize, n_study: usize) -> RunConfig {
    RunConfig {
        order: REFERENCE_ORDER,
        cells: REFERENCE_REFINEMENT * k_max,
        angles: REFERENCE_REFINEMENT * n_study,
        mesh: MeshKind::Moving,
        mode: SourceMode::Uncollided,
        ..*study
    }
}

/// Solves `cfg` and returns the total scalar flux at `xs`.
pub fn solve_scalar_flux(cfg: RunConfig, xs: &[f64]) -> Result<Vec<f64>> {
    let mut solver = Solver::new(cfg)?;
    let (state, _) = solver.solve()?;
    solver.scalar_flux(&state, xs)
}

/// Oracle values at `xs` together with the RMSE between the oracle and the
/// same solve with half the cells.
#[derive(Clone, Debug, PartialEq)]
pub struct GatedReference {
    pub config: RunConfig,
    pub values: Vec<f64>,
    pub self_check: f64,
    pub gate: f64,
}

impl GatedReference {
    pub fn passed(&self) -> bool {
        self.self_check < self.gate
    }
}

/// Cell-count doublings tried when the oracle misses its gate.
pub const MAX_GATE_DOUBLINGS: usize = 2;

/// Runs the oracle and its half-resolution companion. When the self-check
/// misses the gate, the cell count is doubled (at most `max_doublings`
/// times) and the previous oracle becomes the companion. A gate that is
/// still missed is reported through `passed`, not as an error.
pub fn gated_reference(cfg: RunConfig, xs: &[f64], max_doublings: usize) -> Result<GatedReference> {
    if cfg.spec.kind == SourceKind::Mms {
        return Ok(GatedReference {
            config: cfg,
            values: mms_reference(xs, cfg.t_final, cfg.spec.x0),
            self_check: 0.0,
            gate: 0.0,
        });
    }
    let gate = reference_gate(cfg.spec.kind);
    let mut coarse = solve_scalar_flux(
        RunConfig {
            cells: cfg.cells / 2,
            ..cfg
        },
        xs,
    )?;
    let mut config = cfg;
    let mut doublings = 0;
    loop {
        let values = solve_scalar_flux(config, xs)?;
        let self_check = rmse(&values, &coarse)?;
        if self_check < gate || doublings == max_doublings {
            return Ok(GatedReference {
                config,
                values,
                self_check,
                gate,
            });
        }
        coarse = values;
        config.cells *= 2;
        doublings += 1;
    }
}

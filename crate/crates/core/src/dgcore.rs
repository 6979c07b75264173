//! Semidiscrete moving-mesh DG S_N system: state layout, right-hand side,
//! source and initial-condition projection, and time advance.
//!
//! Per angle l and cell k the moments obey
//!
//! du/dt = G u + mu_l L u - u - surf + (c/2) sum_l' w_l' u_l' + s
//!
//! where G carries the basis time derivative on the moving cell, L the
//! spatial derivative, and surf the upwinded edge fluxes relative to the edge
//! velocities.

use alloc::vec::Vec;

use libm::{exp, sqrt};

use crate::analytic::{self, SourceKind, SourceSpec};
use crate::basis::{legendre_values, norm_factor};
use crate::error::{Error, Result};
use crate::integrate::{Dop853, IntegrationStats, IntegratorConfig};
use crate::mesh::{self, Mesh, MeshLaw, MeshState};
use crate::quadrature::{gauss_legendre, gauss_lobatto, QuadratureSet};

/// Start time for problems whose source is singular at t = 0 or whose mesh
/// has zero-width cells at t = 0.
pub const DEFERRED_START: f64 = 1e-10;
/// Half-width standing in for zero in the plane-pulse meshes and box
/// initial condition.
pub const PLANE_HALF_WIDTH: f64 = 1e-10;
/// Gaussian profiles are treated as zero beyond the width where they fall
/// below this value.
pub const GAUSSIAN_FLOOR: f64 = 1e-16;
/// Extra Gauss-Legendre points beyond M + 1 used for projections.
pub const EXTRA_PROJECTION_POINTS: usize = 6;

/// Relative distance within which an evaluation point counts as lying on
/// an interior edge.
pub const EDGE_SNAP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceMode {
    /// Solve for the collided flux driven by (c/2) phi_u.
    Uncollided,
    /// Solve the full equation with the physical source and initial condition.
    Standard,
}

impl SourceMode {
    pub fn name(self) -> &'static str {
        match self {
            SourceMode::Uncollided => "uncollided",
            SourceMode::Standard => "standard",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeshKind {
    Static,
    Moving,
}

impl MeshKind {
    pub fn name(self) -> &'static str {
        match self {
            MeshKind::Static => "static",
            MeshKind::Moving => "moving",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub spec: SourceSpec,
    /// Number of Gauss-Lobatto directions N.
    pub angles: usize,
    /// Polynomial degree M.
    pub order: usize,
    /// Cell count K.
    pub cells: usize,
    pub mesh: MeshKind,
    pub mode: SourceMode,
    pub t_final: f64,
    pub integrator: IntegratorConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.integrator.validate()?;
        if self.angles < 2 {
            return Err(Error::InvalidArgument("at least two directions are required"));
        }
        if self.cells == 0 {
            return Err(Error::InvalidArgument("at least one cell is required"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument("t_final must be positive"));
        }
        let kind = self.spec.kind;
        if kind == SourceKind::Mms {
            if self.mode != SourceMode::Standard {
                return Err(Error::Configuration(
                    "the manufactured problem has no uncollided source",
                ));
            }
            if self.mesh != MeshKind::Moving {
                return Err(Error::Configuration(
                    "the manufactured problem needs the wavefront-tracking mesh",
                ));
            }
            if self.spec.c != 1.0 {
                return Err(Error::Configuration("the manufactured source assumes c = 1"));
            }
            if !(self.spec.x0 > 0.0) {
                return Err(Error::InvalidArgument("the manufactured problem needs x0 > 0"));
            }
        }
        if kind == SourceKind::PlanePulse && self.mesh == MeshKind::Moving && self.mode == SourceMode::Standard {
            return Err(Error::Configuration(
                "a delta initial condition cannot be represented on the moving mesh",
            ));
        }
        if kind.is_square() && self.mesh == MeshKind::Moving && (self.cells < 4 || self.cells % 4 != 0) {
            return Err(Error::InvalidArgument(
                "the moving square mesh needs a multiple of 4 cells",
            ));
        }
        Ok(())
    }

    /// Time at which integration begins.
    pub fn start_time(&self) -> f64 {
        let singular = self.spec.kind == SourceKind::PlanePulse;
        let zero_width = self.mesh == MeshKind::Moving && self.spec.kind.is_square();
        if singular || zero_width {
            DEFERRED_START
        } else {
            0.0
        }
    }

    /// Builds the mesh prescribed for this problem.
    pub fn build_mesh(&self) -> Result<Mesh> {
        let spec = &self.spec;
        let k = self.cells;
        match (self.mesh, spec.kind) {
            (MeshKind::Moving, kind) if kind.is_square() => Mesh::hybrid_square(k, spec.x0),
            (MeshKind::Moving, kind) if kind.is_gaussian() => {
                let w = mesh::initial_width_for_gaussian(spec.sigma, GAUSSIAN_FLOOR)?;
                Mesh::radial(mesh::uniform_edges(k, w)?)
            }
            (MeshKind::Moving, SourceKind::PlanePulse) => Mesh::radial(mesh::uniform_edges(k, PLANE_HALF_WIDTH)?),
            (MeshKind::Moving, _) => Mesh::radial(mesh::uniform_edges(k, spec.x0)?),
            (MeshKind::Static, kind) if kind.is_square() => {
                Mesh::fixed(mesh::square_static_edges(k, spec.x0, self.t_final + spec.x0)?)
            }
            (MeshKind::Static, kind) if kind.is_gaussian() => {
                let w = mesh::initial_width_for_gaussian(spec.sigma, GAUSSIAN_FLOOR)?;
                Mesh::fixed(mesh::uniform_edges(k, self.t_final + w)?)
            }
            (MeshKind::Static, SourceKind::PlanePulse) => Mesh::fixed(mesh::uniform_edges(k, self.t_final)?),
            (MeshKind::Static, _) => Err(Error::Configuration(
                "the manufactured problem needs the wavefront-tracking mesh",
            )),
        }
    }
}

/// Moment coefficients u[l][k][j], stored flat with l outermost.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionState {
    pub u: Vec<f64>,
    pub t: f64,
    pub angles: usize,
    pub cells: usize,
    pub order: usize,
}

impl SolutionState {
    pub fn zeros(angles: usize, cells: usize, order: usize, t: f64) -> Self {
        SolutionState {
            u: alloc::vec![0.0; angles * cells * (order + 1)],
            t,
            angles,
            cells,
            order,
        }
    }

    #[inline]
    pub fn index(&self, l: usize, k: usize, j: usize) -> usize {
        (l * self.cells + k) * (self.order + 1) + j
    }

    pub fn get(&self, l: usize, k: usize, j: usize) -> f64 {
        self.u[self.index(l, k, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|v| v.is_finite())
    }
}

/// Inflow value imposed at the wavefront edge of the manufactured problem.
pub fn mms_boundary_closure(spec: &SourceSpec, edge: f64, t: f64) -> Result<f64> {
    if spec.kind != SourceKind::Mms {
        return Err(Error::Configuration(
            "the wavefront closure applies only to the manufactured problem",
        ));
    }
    // limit from inside the support: the outer edge rides the front, where
    // the indicator would flip on rounding
    Ok(exp(-0.5 * edge * edge) / (2.0 * (1.0 + t)))
}

// Right and left traces of cell (l, k) given its moments.
#[inline]
fn traces(u: &[f64], h: f64) -> (f64, f64) {
    let mut right = 0.0;
    let mut left = 0.0;
    for (j, &v) in u.iter().enumerate() {
        let a = norm_factor(j) * v;
        right += a;
        left += if j % 2 == 0 { a } else { -a };
    }
    let scale = 1.0 / sqrt(h);
    (left * scale, right * scale)
}

/// Gauss-Legendre projection of `f(x) = (a, b)` onto B_0..B_M of the cell
/// [xl, xr], splitting at any of the +-`kinks` strictly inside the cell.
/// Moments of `a` go to `iso`, of `b` to `aniso`.
fn project_cell<F>(
    rule: &QuadratureSet,
    xl: f64,
    xr: f64,
    kinks: &[f64],
    iso: &mut [f64],
    aniso: &mut [f64],
    pvals: &mut [f64],
    mut f: F,
) -> Result<()>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    iso.fill(0.0);
    aniso.fill(0.0);
    let mut cuts: [f64; 16] = [0.0; 16];
    let mut n = 0;
    cuts[n] = xl;
    n += 1;
    for &k in kinks {
        for c in [-k, k] {
            if c > xl && c < xr && n < cuts.len() - 1 {
                cuts[n] = c;
                n += 1;
            }
        }
    }
    cuts[n] = xr;
    n += 1;
    cuts[..n].sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let h = xr - xl;
    let scale = 1.0 / sqrt(h);
    let order = iso.len() - 1;
    for w in cuts[..n].windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (z, wq) in rule.iter() {
            let x = mid + half * z;
            let (fa, fb) = f(x)?;
            if fa == 0.0 && fb == 0.0 {
                continue;
            }
            legendre_values((2.0 * x - xl - xr) / h, &mut pvals[..=order]);
            for i in 0..=order {
                let bi = norm_factor(i) * scale * pvals[i] * wq * half;
                iso[i] += bi * fa;
                aniso[i] += bi * fb;
            }
        }
    }
    Ok(())
}

/// Assembled discretization for one run.
pub struct Solver {
    cfg: RunConfig,
    mesh: Mesh,
    angles: QuadratureSet,
    projection: QuadratureSet,
    scratch_mesh: MeshState,
    iso: Vec<f64>,
    aniso: Vec<f64>,
    scatter: Vec<f64>,
    pvals: Vec<f64>,
    norms: Vec<f64>,
    inv_h: Vec<f64>,
    inv_sqrt_h: Vec<f64>,
    trace_left: Vec<f64>,
    trace_right: Vec<f64>,
    // the source is treated as on at exactly t = t0 while integrating up to t0
    closing_emission: bool,
}

impl Solver {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let mesh = cfg.build_mesh()?;
        let angles = gauss_lobatto(cfg.angles)?;
        Self::with_parts(cfg, mesh, angles)
    }

    /// Builds a solver on an explicit mesh and direction set. Only the
    /// consistency of sizes is checked.
    pub fn with_parts(cfg: RunConfig, mesh: Mesh, angles: QuadratureSet) -> Result<Self> {
        cfg.spec.validate()?;
        if mesh.cells() != cfg.cells || angles.len() != cfg.angles {
            return Err(Error::InvalidArgument(
                "mesh or direction set does not match the configuration",
            ));
        }
        let m1 = cfg.order + 1;
        let projection = gauss_legendre(m1 + EXTRA_PROJECTION_POINTS)?;
        let scratch_mesh = mesh.at(0.0);
        Ok(Solver {
            cfg,
            mesh,
            angles,
            projection,
            scratch_mesh,
            iso: alloc::vec![0.0; cfg.cells * m1],
            aniso: alloc::vec![0.0; cfg.cells * m1],
            scatter: alloc::vec![0.0; cfg.cells * m1],
            pvals: alloc::vec![0.0; m1],
            norms: (0..m1).map(norm_factor).collect(),
            inv_h: alloc::vec![0.0; cfg.cells],
            inv_sqrt_h: alloc::vec![0.0; cfg.cells],
            trace_left: alloc::vec![0.0; cfg.cells],
            trace_right: alloc::vec![0.0; cfg.cells],
            closing_emission: false,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn directions(&self) -> &QuadratureSet {
        &self.angles
    }

    pub fn state_len(&self) -> usize {
        self.cfg.angles * self.cfg.cells * (self.cfg.order + 1)
    }

    fn emitting(&self, t: f64) -> bool {
        let t0 = self.cfg.spec.t0;
        t < t0 || (self.closing_emission && t <= t0)
    }

    // Kinks (as positive abscissas) of the driving source at time t.
    fn source_kinks(&self, t: f64) -> ([f64; 5], usize) {
        let s = &self.cfg.spec;
        let mut k = [0.0; 5];
        let n = match (self.cfg.mode, s.kind) {
            (SourceMode::Uncollided, SourceKind::PlanePulse) => {
                k[0] = t;
                1
            }
            (SourceMode::Uncollided, SourceKind::SquarePulse) => {
                k[0] = (t - s.x0).abs();
                k[1] = t + s.x0;
                2
            }
            (SourceMode::Uncollided, SourceKind::SquareSource) => {
                k[0] = s.x0;
                k[1] = (t - s.x0).abs();
                k[2] = t + s.x0;
                k[3] = (t - s.t0 - s.x0).abs();
                k[4] = (t - s.t0 + s.x0).abs();
                if t > s.t0 {
                    5
                } else {
                    3
                }
            }
            (SourceMode::Standard, SourceKind::SquareSource) => {
                k[0] = s.x0;
                1
            }
            (SourceMode::Standard, SourceKind::Mms) => {
                k[0] = t + s.x0;
                1
            }
            _ => 0,
        };
        (k, n)
    }

    // Per-angle driving source a(x) + mu b(x) at time t.
    fn source_density(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        let s = &self.cfg.spec;
        match self.cfg.mode {
            SourceMode::Uncollided => Ok((0.5 * s.c * s.uncollided(x, t)?, 0.0)),
            SourceMode::Standard => match s.kind {
                SourceKind::SquareSource => {
                    let on = self.emitting(t) && x.abs() <= s.x0;
                    Ok((if on { 0.5 } else { 0.0 }, 0.0))
                }
                SourceKind::GaussianSource => {
                    let v = if self.emitting(t) {
                        0.5 * exp(-x * x / (s.sigma * s.sigma))
                    } else {
                        0.0
                    };
                    Ok((v, 0.0))
                }
                SourceKind::Mms => {
                    let (a, b) = analytic::mms_source_parts(x, t, s.x0);
                    Ok((0.5 * a, 0.5 * b))
                }
                _ => Ok((0.0, 0.0)),
            },
        }
    }

    fn has_source(&self) -> bool {
        match self.cfg.mode {
            SourceMode::Uncollided => self.cfg.spec.kind != SourceKind::Mms,
            SourceMode::Standard => !self.cfg.spec.kind.is_pulse(),
        }
    }

    /// Moments of the driving source on cell `k` of `ms` at time `t`: the
    /// isotropic part into `iso` and the coefficient of mu into `aniso`.
    pub fn project_source(
        &mut self,
        ms: &MeshState,
        k: usize,
        t: f64,
        iso: &mut [f64],
        aniso: &mut [f64],
    ) -> Result<()> {
        let (xl, xr) = ms.cell(k);
        let s = self.cfg.spec;
        if !self.has_source() {
            iso.fill(0.0);
            aniso.fill(0.0);
            return Ok(());
        }
        if s.kind == SourceKind::PlanePulse
            && self.cfg.mode == SourceMode::Uncollided
            && self.mesh.law() != MeshLaw::Static
        {
            // every cell lies inside the light cone, where phi_u is flat
            if !(t > 0.0) {
                return Err(Error::OutOfDomain {
                    value: t,
                    lower: 0.0,
                    upper: f64::INFINITY,
                });
            }
            iso.fill(0.0);
            aniso.fill(0.0);
            iso[0] = 0.5 * s.c * sqrt(xr - xl) * exp(-t) / (2.0 * t);
            return Ok(());
        }
        let (kinks, nk) = self.source_kinks(t);
        let mut pvals = core::mem::take(&mut self.pvals);
        let r = project_cell(&self.projection, xl, xr, &kinks[..nk], iso, aniso, &mut pvals, |x| {
            self.source_density(x, t)
        });
        self.pvals = pvals;
        r
    }

    /// Projection of the initial angular flux onto the mesh at the start time.
    pub fn project_initial_condition(&mut self) -> Result<SolutionState> {
        let t = self.cfg.start_time();
        let cfg = self.cfg;
        let m1 = cfg.order + 1;
        let mut state = SolutionState::zeros(cfg.angles, cfg.cells, cfg.order, t);
        if cfg.mode == SourceMode::Uncollided {
            return Ok(state);
        }
        let ms = self.mesh.at(t);
        let s = cfg.spec;
        let sigma2 = s.sigma * s.sigma;
        let (profile_kink, has_kink) = match s.kind {
            SourceKind::SquarePulse | SourceKind::Mms => (s.x0, true),
            SourceKind::PlanePulse => (PLANE_HALF_WIDTH, true),
            _ => (0.0, false),
        };
        let profile = |x: f64| -> f64 {
            match s.kind {
                SourceKind::SquarePulse => {
                    if x.abs() < s.x0 {
                        0.5
                    } else {
                        0.0
                    }
                }
                SourceKind::PlanePulse => {
                    if x.abs() < PLANE_HALF_WIDTH {
                        0.25 / PLANE_HALF_WIDTH
                    } else {
                        0.0
                    }
                }
                SourceKind::GaussianPulse => 0.5 * exp(-x * x / sigma2),
                SourceKind::Mms => analytic::mms_solution(x, 0.0, s.x0).0,
                _ => 0.0,
            }
        };
        if matches!(s.kind, SourceKind::SquareSource | SourceKind::GaussianSource) {
            return Ok(state);
        }
        let kinks = [profile_kink];
        let kinks: &[f64] = if has_kink { &kinks } else { &[] };
        let mut moments = alloc::vec![0.0; m1];
        let mut unused = alloc::vec![0.0; m1];
        let mut pvals = alloc::vec![0.0; m1];
        for k in 0..cfg.cells {
            let (xl, xr) = ms.cell(k);
            if !(xr > xl) {
                continue;
            }
            project_cell(
                &self.projection,
                xl,
                xr,
                kinks,
                &mut moments,
                &mut unused,
                &mut pvals,
                |x| Ok((profile(x), 0.0)),
            )?;
            for l in 0..cfg.angles {
                let base = state.index(l, k, 0);
                state.u[base..base + m1].copy_from_slice(&moments);
            }
        }
        Ok(state)
    }

    /// Upwinded surface term of angle `l`, cell `k` into `out`, from the
    /// moments `u` on mesh `ms` at time `t`.
    pub fn surface_flux(&self, l: usize, k: usize, u: &[f64], ms: &MeshState, out: &mut [f64]) -> Result<()> {
        let cfg = &self.cfg;
        let m1 = cfg.order + 1;
        let cells = cfg.cells;
        let mu = self.angles.nodes()[l];
        let at = |kk: usize| (l * cells + kk) * m1;
        let (xl, xr) = ms.cell(k);
        let h = xr - xl;
        let (own_left, own_right) = traces(&u[at(k)..at(k) + m1], h);
        let rel_right = mu - ms.velocities[k + 1];
        let rel_left = mu - ms.velocities[k];
        let boundary = |x: f64| -> Result<f64> {
            if cfg.spec.kind == SourceKind::Mms {
                mms_boundary_closure(&cfg.spec, x, ms.t)
            } else {
                Ok(0.0)
            }
        };
        let psi_plus = if rel_right >= 0.0 {
            own_right
        } else if k + 1 < cells {
            let (nl, nr) = ms.cell(k + 1);
            traces(&u[at(k + 1)..at(k + 1) + m1], nr - nl).0
        } else {
            boundary(xr)?
        };
        let psi_minus = if rel_left <= 0.0 {
            own_left
        } else if k > 0 {
            let (nl, nr) = ms.cell(k - 1);
            traces(&u[at(k - 1)..at(k - 1) + m1], nr - nl).1
        } else {
            boundary(xl)?
        };
        let scale = 1.0 / sqrt(h);
        let right = rel_right * psi_plus * scale;
        let left = rel_left * psi_minus * scale;
        for (i, o) in out.iter_mut().enumerate().take(m1) {
            let s = norm_factor(i);
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            *o = s * (right - sign * left);
        }
        Ok(())
    }

    /// Time derivative of the flat state `u` at time `t`.
    pub fn rhs(&mut self, t: f64, u: &[f64], du: &mut [f64]) -> Result<()> {
        let cfg = self.cfg;
        let m1 = cfg.order + 1;
        let cells = cfg.cells;
        let mut ms = core::mem::replace(
            &mut self.scratch_mesh,
            MeshState {
                edges: Vec::new(),
                velocities: Vec::new(),
                t: 0.0,
            },
        );
        self.mesh.update(t, &mut ms);
        let result = self.rhs_on(&ms, t, u, du, m1, cells);
        self.scratch_mesh = ms;
        result
    }

    fn rhs_on(&mut self, ms: &MeshState, t: f64, u: &[f64], du: &mut [f64], m1: usize, cells: usize) -> Result<()> {
        ms.validate()?;
        let cfg = self.cfg;
        let half_c = 0.5 * cfg.spec.c;

        let mut iso = core::mem::take(&mut self.iso);
        let mut aniso = core::mem::take(&mut self.aniso);
        let mut result = Ok(());
        for k in 0..cells {
            let r = self.project_source(
                ms,
                k,
                t,
                &mut iso[k * m1..(k + 1) * m1],
                &mut aniso[k * m1..(k + 1) * m1],
            );
            if r.is_err() {
                result = r;
                break;
            }
        }
        self.iso = iso;
        self.aniso = aniso;
        result?;

        // scattering moments, summed over angles in ascending order
        self.scatter.fill(0.0);
        for (l, &w) in self.angles.weights().iter().enumerate() {
            let block = &u[l * cells * m1..(l + 1) * cells * m1];
            for (acc, &v) in self.scatter.iter_mut().zip(block) {
                *acc += w * v;
            }
        }

        let boundary = |x: f64| -> Result<f64> {
            if cfg.spec.kind == SourceKind::Mms {
                mms_boundary_closure(&cfg.spec, x, t)
            } else {
                Ok(0.0)
            }
        };
        let inflow_left = boundary(ms.edges[0])?;
        let inflow_right = boundary(ms.edges[cells])?;

        let norms = &self.norms;
        let mut inv_h = core::mem::take(&mut self.inv_h);
        let mut inv_sqrt_h = core::mem::take(&mut self.inv_sqrt_h);
        let mut left = core::mem::take(&mut self.trace_left);
        let mut right = core::mem::take(&mut self.trace_right);
        for k in 0..cells {
            let (xl, xr) = ms.cell(k);
            inv_h[k] = 1.0 / (xr - xl);
            inv_sqrt_h[k] = sqrt(inv_h[k]);
        }
        for l in 0..cfg.angles {
            let mu = self.angles.nodes()[l];
            let block = &u[l * cells * m1..(l + 1) * cells * m1];
            for k in 0..cells {
                let (mut r, mut lt) = (0.0, 0.0);
                for (j, &v) in block[k * m1..(k + 1) * m1].iter().enumerate() {
                    let a = norms[j] * v;
                    r += a;
                    lt += if j % 2 == 0 { a } else { -a };
                }
                right[k] = r * inv_sqrt_h[k];
                left[k] = lt * inv_sqrt_h[k];
            }
            for k in 0..cells {
                let base = (l * cells + k) * m1;
                let uk = &u[base..base + m1];
                let (vl, vr) = (ms.velocities[k], ms.velocities[k + 1]);
                let rel_right = mu - vr;
                let rel_left = mu - vl;
                let psi_plus = if rel_right >= 0.0 {
                    right[k]
                } else if k + 1 < cells {
                    left[k + 1]
                } else {
                    inflow_right
                };
                let psi_minus = if rel_left <= 0.0 {
                    left[k]
                } else if k > 0 {
                    right[k - 1]
                } else {
                    inflow_left
                };
                let flux_right = rel_right * psi_plus * inv_sqrt_h[k];
                let flux_left = rel_left * psi_minus * inv_sqrt_h[k];
                let cross = (2.0 * mu - vl - vr) * inv_h[k];
                let stretch = (vr - vl) * inv_h[k];
                let src = k * m1;
                let sc = &self.scatter[src..src + m1];
                let iso = &self.iso[src..src + m1];
                let aniso = &self.aniso[src..src + m1];
                let norms = &norms[..m1];
                let out = &mut du[base..base + m1];
                let surf_even = flux_right - flux_left;
                let surf_odd = flux_right + flux_left;
                // (G + mu L) u via parity-split prefix sums of s_j u_j
                let (mut even, mut odd) = (0.0f64, 0.0f64);
                let mut i = 0;
                while i < m1 {
                    let si = norms[i];
                    let transport = si * (cross * odd - stretch * even) - (i as f64 + 0.5) * stretch * uk[i];
                    out[i] = transport - uk[i] - si * surf_even + half_c * sc[i] + iso[i] + mu * aniso[i];
                    even += si * uk[i];
                    let j = i + 1;
                    if j < m1 {
                        let sj = norms[j];
                        let transport = sj * (cross * even - stretch * odd) - (j as f64 + 0.5) * stretch * uk[j];
                        out[j] = transport - uk[j] - sj * surf_odd + half_c * sc[j] + iso[j] + mu * aniso[j];
                        odd += sj * uk[j];
                    }
                    i += 2;
                }
            }
        }
        self.inv_h = inv_h;
        self.inv_sqrt_h = inv_sqrt_h;
        self.trace_left = left;
        self.trace_right = right;
        Ok(())
    }

    /// Advances `state` to `t_target`, splitting the integration where the
    /// source switches off.
    pub fn advance(&mut self, state: &mut SolutionState, t_target: f64) -> Result<IntegrationStats> {
        if !(t_target > state.t) {
            return Err(Error::InvalidArgument("target time must follow the current time"));
        }
        if state.u.len() != self.state_len() {
            return Err(Error::InvalidArgument("state does not match the configuration"));
        }
        let mut total = IntegrationStats::default();
        let t0 = self.cfg.spec.t0;
        let switches = matches!(
            self.cfg.spec.kind,
            SourceKind::SquareSource | SourceKind::GaussianSource
        );
        let mut stops: [f64; 2] = [t_target, t_target];
        let mut nstops = 1;
        if switches && t0 > state.t && t0 < t_target {
            stops[0] = t0;
            nstops = 2;
        }
        let mut integrator = Dop853::new(self.cfg.integrator)?;
        for &stop in &stops[..nstops] {
            self.closing_emission = switches && stop == t0;
            let from = state.t;
            let r = integrator.integrate(|t, y, dy| self.rhs(t, y, dy), &mut state.u, from, stop);
            self.closing_emission = false;
            let stats = match r {
                Ok(s) => s,
                Err(e) => {
                    if let Error::Integration { t, .. } = e {
                        state.t = t;
                    }
                    return Err(e);
                }
            };
            total.accepted += stats.accepted;
            total.rejected += stats.rejected;
            total.evaluations += stats.evaluations;
            state.t = stop;
        }
        if !state.is_finite() {
            return Err(Error::Integration {
                reason: crate::error::IntegrationFailure::NonFinite,
                t: state.t,
                steps: total.accepted,
            });
        }
        Ok(total)
    }

    /// Projects the initial condition and integrates to `t_final`.
    pub fn solve(&mut self) -> Result<(SolutionState, IntegrationStats)> {
        let mut state = self.project_initial_condition()?;
        let t_final = self.cfg.t_final;
        let stats = self.advance(&mut state, t_final)?;
        Ok((state, stats))
    }

    /// Scalar flux of the DG solution alone, sum_l w_l psi_l, at `xs`.
    ///
    /// The DG solution jumps across cell edges; a point within rounding of an
    /// interior edge takes the mean of the two one-sided traces.
    pub fn discrete_scalar_flux(&self, state: &SolutionState, xs: &[f64]) -> Result<Vec<f64>> {
        let m1 = self.cfg.order + 1;
        let cells = self.cfg.cells;
        let ms = self.mesh.at(state.t);
        let mut moments = alloc::vec![0.0; cells * m1];
        for (l, &w) in self.angles.weights().iter().enumerate() {
            let block = &state.u[l * cells * m1..(l + 1) * cells * m1];
            for (acc, &v) in moments.iter_mut().zip(block) {
                *acc += w * v;
            }
        }
        let (lo, hi) = ms.extent();
        let snap = EDGE_SNAP * lo.abs().max(hi.abs()).max(1.0);
        let mut p = alloc::vec![0.0; m1];
        let mut eval = |k: usize, z: f64| -> f64 {
            let (xl, xr) = ms.cell(k);
            legendre_values(z, &mut p);
            let scale = 1.0 / sqrt(xr - xl);
            (0..m1)
                .map(|j| norm_factor(j) * scale * p[j] * moments[k * m1 + j])
                .sum()
        };
        xs.iter()
            .map(|&x| {
                let k = ms.locate(x)?;
                let (xl, xr) = ms.cell(k);
                let near = |e: f64, h: f64| (x - e).abs() <= snap.min(1e-3 * h);
                if k + 1 < cells && near(xr, (xr - xl).min(ms.cell(k + 1).1 - xr)) {
                    return Ok(0.5 * (eval(k, 1.0) + eval(k + 1, -1.0)));
                }
                if k > 0 && near(xl, (xr - xl).min(xl - ms.cell(k - 1).0)) {
                    return Ok(0.5 * (eval(k - 1, 1.0) + eval(k, -1.0)));
                }
                let z = ((2.0 * x - xl - xr) / (xr - xl)).clamp(-1.0, 1.0);
                Ok(eval(k, z))
            })
            .collect()
    }

    /// Total scalar flux at `xs`; in uncollided mode phi_u is added to the
    /// collided DG flux.
    pub fn scalar_flux(&self, state: &SolutionState, xs: &[f64]) -> Result<Vec<f64>> {
        let mut phi = self.discrete_scalar_flux(state, xs)?;
        if self.cfg.mode == SourceMode::Uncollided {
            for (v, &x) in phi.iter_mut().zip(xs) {
                *v += self.cfg.spec.uncollided(x, state.t)?;
            }
        }
        Ok(phi)
    }

    /// Integral over the mesh of the discrete scalar flux.
    pub fn particle_count(&self, state: &SolutionState) -> Result<f64> {
        let m1 = self.cfg.order + 1;
        let cells = self.cfg.cells;
        let ms = self.mesh.at(state.t);
        let mut total = 0.0;
        for (l, &w) in self.angles.weights().iter().enumerate() {
            for k in 0..cells {
                let (xl, xr) = ms.cell(k);
                total += w * state.u[(l * cells + k) * m1] * sqrt(xr - xl);
            }
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::CellBasis;
    use core::f64::consts::SQRT_2;

    fn spec(kind: SourceKind) -> SourceSpec {
        SourceSpec::new(kind, 1.0, 0.5, 5.0, 0.5).unwrap()
    }

    fn config(kind: SourceKind, mesh: MeshKind, mode: SourceMode, n: usize, m: usize, k: usize) -> RunConfig {
        let mut s = spec(kind);
        if kind == SourceKind::Mms {
            s.x0 = 0.1;
        }
        RunConfig {
            spec: s,
            angles: n,
            order: m,
            cells: k,
            mesh,
            mode,
            t_final: 1.0,
            integrator: IntegratorConfig::default(),
        }
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn zero_state_without_source_stays_zero() {
        let cfg = config(
            SourceKind::GaussianPulse,
            MeshKind::Moving,
            SourceMode::Standard,
            4,
            2,
            4,
        );
        let mut solver = Solver::new(cfg).unwrap();
        let u = alloc::vec![0.0; solver.state_len()];
        let mut du = alloc::vec![1.0; solver.state_len()];
        solver.rhs(0.3, &u, &mut du).unwrap();
        assert!(du.iter().all(|&v| v == 0.0));
        let mut state = SolutionState::zeros(4, 4, 2, 0.0);
        solver.advance(&mut state, 0.5).unwrap();
        assert!(state.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_cell_hand_assembled() {
        // one direction mu = 1, w = 2, c = 0 approximated by a tiny c
        let mut cfg = config(SourceKind::SquarePulse, MeshKind::Static, SourceMode::Standard, 1, 1, 1);
        cfg.spec.c = 1e-300;
        let mesh = Mesh::fixed(alloc::vec![-1.0, 1.0]).unwrap();
        let dirs = QuadratureSet::from_parts(alloc::vec![1.0], alloc::vec![2.0]).unwrap();
        let mut solver = Solver::with_parts(cfg, mesh, dirs).unwrap();
        let u = [1.0 / SQRT_2, 0.0];
        let mut du = [0.0; 2];
        solver.rhs(0.0, &u, &mut du).unwrap();
        assert!((du[0] + 1.5 / SQRT_2).abs() < 1e-15);
        assert!((du[1] - 0.5 * sqrt(3.0) / SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn rhs_matches_dense_matrices() {
        let cfg = config(
            SourceKind::GaussianPulse,
            MeshKind::Moving,
            SourceMode::Standard,
            4,
            5,
            3,
        );
        let mut solver = Solver::new(cfg).unwrap();
        let n = solver.state_len();
        let mut seed = 7u64;
        let u: Vec<f64> = (0..n).map(|_| lcg(&mut seed) - 0.5).collect();
        let mut du = alloc::vec![0.0; n];
        let t = 0.4;
        solver.rhs(t, &u, &mut du).unwrap();
        let ms = solver.mesh().at(t);
        let m1 = 6;
        let mut scatter = alloc::vec![0.0; 3 * m1];
        for l in 0..4 {
            for i in 0..3 * m1 {
                scatter[i] += solver.directions().weights()[l] * u[l * 3 * m1 + i];
            }
        }
        let mut surf = alloc::vec![0.0; m1];
        for l in 0..4 {
            let mu = solver.directions().nodes()[l];
            for k in 0..3 {
                let (xl, xr) = ms.cell(k);
                let b = CellBasis::new(5, xl, xr, ms.velocities[k], ms.velocities[k + 1]).unwrap();
                let g = b.motion_matrix();
                let lm = b.gradient_matrix();
                solver.surface_flux(l, k, &u, &ms, &mut surf).unwrap();
                let base = (l * 3 + k) * m1;
                for i in 0..m1 {
                    let mut v = -u[base + i] - surf[i] + 0.5 * scatter[k * m1 + i];
                    for j in 0..m1 {
                        v += (g[(i, j)] + mu * lm[(i, j)]) * u[base + j];
                    }
                    assert!((v - du[base + i]).abs() < 1e-12 * (1.0 + v.abs()), "l={l} k={k} i={i}");
                }
            }
        }
    }

    #[test]
    fn surface_examples() {
        let cfg = config(
            SourceKind::GaussianPulse,
            MeshKind::Static,
            SourceMode::Standard,
            2,
            1,
            2,
        );
        let mesh = Mesh::fixed(alloc::vec![-1.0, 0.0, 1.0]).unwrap();
        let dirs = QuadratureSet::from_parts(alloc::vec![-1.0, 0.5], alloc::vec![1.0, 1.0]).unwrap();
        let solver = Solver::with_parts(cfg, mesh.clone(), dirs).unwrap();
        let u = [0.3, 0.1, 0.2, -0.4, 0.7, 0.2, 0.5, 0.1];
        let mut out = [0.0; 2];
        // last cell, mu = -1 on a static mesh: vacuum inflow from the right
        let ms = mesh.at(0.0);
        solver.surface_flux(0, 1, &u, &ms, &mut out).unwrap();
        let (own_left, _) = traces(&u[2..4], 1.0);
        let expect0 = -(-1.0) * own_left;
        assert!((out[0] - expect0).abs() < 1e-15);
        // mu = 0.5 with the right edge moving at 1 takes the neighbour trace
        let mut moving = ms.clone();
        moving.velocities[1] = 1.0;
        solver.surface_flux(1, 0, &u, &moving, &mut out).unwrap();
        let (neigh_left, _) = traces(&u[6..8], 1.0);
        assert!((out[0] + 0.5 * neigh_left).abs() < 1e-15, "{} {}", out[0], neigh_left);
        // zero relative speed: that edge contributes nothing
        moving.velocities[1] = 0.5;
        solver.surface_flux(1, 0, &u, &moving, &mut out).unwrap();
        assert!(out[0].abs() < 1e-15);
    }

    #[test]
    fn static_upwinding_matches_reference_formula() {
        let cfg = config(
            SourceKind::GaussianPulse,
            MeshKind::Static,
            SourceMode::Standard,
            6,
            3,
            5,
        );
        let solver = Solver::new(cfg).unwrap();
        let ms = solver.mesh().at(0.7);
        let m1 = 4;
        let mut seed = 99u64;
        for _ in 0..20 {
            let u: Vec<f64> = (0..solver.state_len()).map(|_| lcg(&mut seed) - 0.5).collect();
            let mut out = [0.0; 4];
            for l in 0..6 {
                let mu = solver.directions().nodes()[l];
                for k in 0..5 {
                    solver.surface_flux(l, k, &u, &ms, &mut out).unwrap();
                    // classic upwind on a fixed mesh
                    let cell = |kk: usize| &u[(l * 5 + kk) * m1..(l * 5 + kk + 1) * m1];
                    let width = |kk: usize| ms.cell(kk).1 - ms.cell(kk).0;
                    let h = width(k);
                    let (own_l, own_r) = traces(cell(k), h);
                    let (psi_r, psi_l) = if mu > 0.0 {
                        (
                            own_r,
                            if k == 0 {
                                0.0
                            } else {
                                traces(cell(k - 1), width(k - 1)).1
                            },
                        )
                    } else {
                        (
                            if k == 4 {
                                0.0
                            } else {
                                traces(cell(k + 1), width(k + 1)).0
                            },
                            own_l,
                        )
                    };
                    let scale = 1.0 / sqrt(h);
                    let right = mu * psi_r * scale;
                    let left = mu * psi_l * scale;
                    for i in 0..m1 {
                        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                        let expect = norm_factor(i) * (right - sign * left);
                        assert_eq!(out[i], expect, "l={l} k={k} i={i}");
                    }
                }
            }
        }
    }

    #[test]
    fn comoving_cell_has_no_surface_exchange() {
        let cfg = config(
            SourceKind::GaussianPulse,
            MeshKind::Static,
            SourceMode::Standard,
            1,
            3,
            1,
        );
        let mesh = Mesh::fixed(alloc::vec![-1.0, 1.0]).unwrap();
        let dirs = QuadratureSet::from_parts(alloc::vec![0.6], alloc::vec![2.0]).unwrap();
        let solver = Solver::with_parts(cfg, mesh, dirs).unwrap();
        let ms = MeshState {
            edges: alloc::vec![-0.4, 1.6],
            velocities: alloc::vec![0.6, 0.6],
            t: 1.0,
        };
        let u = [0.3, -0.2, 0.1, 0.05];
        let mut out = [1.0; 4];
        solver.surface_flux(0, 0, &u, &ms, &mut out).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn plane_moving_source_closed_form() {
        let cfg = config(
            SourceKind::PlanePulse,
            MeshKind::Moving,
            SourceMode::Uncollided,
            4,
            3,
            4,
        );
        let mut solver = Solver::new(cfg).unwrap();
        let ms = solver.mesh().at(1.0);
        let mut iso = [0.0; 4];
        let mut aniso = [0.0; 4];
        solver.project_source(&ms, 1, 1.0, &mut iso, &mut aniso).unwrap();
        let (xl, xr) = ms.cell(1);
        let h = xr - xl;
        // quadrature of (c/2) phi_u against B_0
        let q = gauss_legendre(8).unwrap();
        let direct = q.integrate_on(xl, xr, |x| 0.5 * analytic::phi_u_plane(x, 1.0).unwrap() / sqrt(h));
        assert!((iso[0] - direct).abs() < 1e-13);
        assert!((iso[0] - sqrt(h) * exp(-1.0) / 4.0).abs() < 1e-15);
        assert!(iso[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn square_source_standard_projection() {
        let cfg = config(
            SourceKind::SquareSource,
            MeshKind::Static,
            SourceMode::Standard,
            2,
            1,
            8,
        );
        let mut solver = Solver::new(cfg).unwrap();
        let ms = solver.mesh().at(1.0);
        let k = 4; // inside |x| < x0
        let (xl, xr) = ms.cell(k);
        assert!(xl >= -0.5 && xr <= 0.5);
        let mut iso = [0.0; 2];
        let mut aniso = [0.0; 2];
        solver.project_source(&ms, k, 1.0, &mut iso, &mut aniso).unwrap();
        assert!((iso[0] - 0.5 * sqrt(xr - xl)).abs() < 1e-15);
        assert!(iso[1].abs() < 1e-15);
        // pulses have no source in standard mode
        let cfg = config(SourceKind::SquarePulse, MeshKind::Static, SourceMode::Standard, 2, 1, 8);
        let mut solver = Solver::new(cfg).unwrap();
        solver.project_source(&ms, k, 1.0, &mut iso, &mut aniso).unwrap();
        assert_eq!(iso, [0.0, 0.0]);
    }

    #[test]
    fn initial_condition_examples() {
        let cfg = config(
            SourceKind::SquarePulse,
            MeshKind::Moving,
            SourceMode::Uncollided,
            4,
            2,
            4,
        );
        let mut solver = Solver::new(cfg).unwrap();
        let s = solver.project_initial_condition().unwrap();
        assert!(s.u.iter().all(|&v| v == 0.0));

        let cfg = config(
            SourceKind::GaussianPulse,
            MeshKind::Static,
            SourceMode::Standard,
            2,
            0,
            1,
        );
        let mesh = Mesh::fixed(alloc::vec![-0.25, 0.25]).unwrap();
        let dirs = gauss_lobatto(2).unwrap();
        let mut solver = Solver::with_parts(cfg, mesh, dirs).unwrap();
        let s = solver.project_initial_condition().unwrap();
        let oracle =
            crate::analytic::adaptive::integrate(|x| 0.5 * exp(-4.0 * x * x) / sqrt(0.5), -0.25, 0.25, 1e-15).unwrap();
        assert!((s.u[0] - oracle).abs() < 1e-12, "{}", s.u[0] - oracle);
        assert!((s.u[0] - 0.326175).abs() < 1e-6);
    }

    #[test]
    fn mms_initial_projection_is_spectral() {
        let cfg = config(SourceKind::Mms, MeshKind::Moving, SourceMode::Standard, 2, 8, 4);
        let mut solver = Solver::new(cfg).unwrap();
        let s = solver.project_initial_condition().unwrap();
        let xs: Vec<f64> = (0..41).map(|i| -0.099 + i as f64 * 0.198 / 40.0).collect();
        let phi = solver.scalar_flux(&s, &xs).unwrap();
        for (x, p) in xs.iter().zip(phi) {
            assert!((p - analytic::mms_solution(*x, 0.0, 0.1).1).abs() < 1e-8);
        }
    }

    #[test]
    fn mms_boundary_values() {
        let s = SourceSpec::new(SourceKind::Mms, 1.0, 0.1, 0.0, 0.0).unwrap();
        let v = mms_boundary_closure(&s, 0.1, 0.0).unwrap();
        assert!((v - 0.497506).abs() < 1e-6);
        let t = 0.7;
        let v = mms_boundary_closure(&s, t + 0.1, t).unwrap();
        assert!((v - exp(-(t + 0.1) * (t + 0.1) / 2.0) / (2.0 * (1.0 + t))).abs() < 1e-15);
        assert!(mms_boundary_closure(&spec(SourceKind::SquarePulse), 1.0, 0.0).is_err());
    }

    #[test]
    fn invalid_configurations() {
        let bad = [
            config(SourceKind::Mms, MeshKind::Static, SourceMode::Standard, 4, 2, 4),
            config(SourceKind::Mms, MeshKind::Moving, SourceMode::Uncollided, 4, 2, 4),
            config(SourceKind::PlanePulse, MeshKind::Moving, SourceMode::Standard, 4, 2, 4),
            config(
                SourceKind::SquarePulse,
                MeshKind::Moving,
                SourceMode::Uncollided,
                4,
                2,
                2,
            ),
            config(
                SourceKind::SquarePulse,
                MeshKind::Moving,
                SourceMode::Uncollided,
                1,
                2,
                4,
            ),
        ];
        for cfg in bad {
            assert!(Solver::new(cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn scalar_flux_conventions() {
        let cfg = config(
            SourceKind::GaussianPulse,
            MeshKind::Static,
            SourceMode::Standard,
            2,
            1,
            2,
        );
        let solver = Solver::new(cfg).unwrap();
        let mut s = SolutionState::zeros(2, 2, 1, 0.0);
        for (l, k, j, v) in [
            (0, 0, 0, 0.4),
            (1, 0, 0, 0.4),
            (0, 1, 0, 0.4),
            (1, 1, 0, 0.4),
            (0, 0, 1, 0.1),
            (1, 0, 1, 0.1),
        ] {
            let i = s.index(l, k, j);
            s.u[i] = v;
        }
        let ms = solver.mesh().at(0.0);
        let (xl, xr) = ms.cell(0);
        let h = xr - xl;
        let phi = solver.scalar_flux(&s, &[0.0, -1e-9, 1e-9]).unwrap();
        // x = 0 is a shared edge: mean of the two one-sided traces
        let left = (0.4 + sqrt(3.0) * 0.1) / sqrt(h);
        let right = 0.4 / sqrt(h);
        assert!((phi[0] - (left + right)).abs() < 1e-14);
        assert!((phi[1] - 2.0 * left).abs() < 1e-8);
        assert!((phi[2] - 2.0 * right).abs() < 1e-14);
        assert!(solver.scalar_flux(&s, &[100.0]).is_err());
    }

    #[test]
    fn uncollided_flux_dominates_early() {
        let mut cfg = config(
            SourceKind::GaussianPulse,
            MeshKind::Moving,
            SourceMode::Uncollided,
            4,
            2,
            4,
        );
        cfg.t_final = 1e-3;
        let mut solver = Solver::new(cfg).unwrap();
        let (s, _) = solver.solve().unwrap();
        let phi = solver.scalar_flux(&s, &[0.0, 0.3]).unwrap();
        for (p, x) in phi.iter().zip([0.0, 0.3]) {
            let u = analytic::phi_u_gaussian_pulse(x, 1e-3, 0.5);
            assert!((p - u).abs() < 2e-3 * u);
        }
    }

    #[test]
    fn pure_absorber_decay() {
        // both edges of the only cell carry the matching inflow: use mu = 0
        let mut cfg = config(
            SourceKind::GaussianPulse,
            MeshKind::Static,
            SourceMode::Standard,
            1,
            0,
            1,
        );
        cfg.spec.c = 1e-300;
        let mesh = Mesh::fixed(alloc::vec![-1.0, 1.0]).unwrap();
        let dirs = QuadratureSet::from_parts(alloc::vec![0.0], alloc::vec![2.0]).unwrap();
        let mut solver = Solver::with_parts(cfg, mesh, dirs).unwrap();
        let mut s = SolutionState::zeros(1, 1, 0, 0.0);
        s.u[0] = 0.8;
        solver.advance(&mut s, 2.0).unwrap();
        assert!((s.u[0] - 0.8 * exp(-2.0)).abs() < 1e-12);
    }

    #[test]
    fn pulse_balance_moving_square() {
        let mut cfg = config(SourceKind::SquarePulse, MeshKind::Moving, SourceMode::Standard, 8, 2, 8);
        cfg.t_final = 1.0;
        let mut solver = Solver::new(cfg).unwrap();
        let mut s = solver.project_initial_condition().unwrap();
        let n0 = solver.particle_count(&s).unwrap();
        assert!((n0 - 1.0).abs() < 1e-12);
        for t in [0.25, 0.5, 1.0] {
            solver.advance(&mut s, t).unwrap();
            let n = solver.particle_count(&s).unwrap();
            assert!((n - n0).abs() < 1e-8 * n0, "t={t} n={n}");
        }
    }

    #[test]
    fn mms_residual_decays_spectrally() {
        let t = 0.5;
        let mut norms = Vec::new();
        for m in [2usize, 4, 6, 8] {
            let cfg = config(SourceKind::Mms, MeshKind::Moving, SourceMode::Standard, 4, m, 4);
            let mut solver = Solver::new(cfg).unwrap();
            let ms = solver.mesh().at(t);
            let m1 = m + 1;
            let rule = gauss_legendre(m1 + 12).unwrap();
            let mut u = alloc::vec![0.0; solver.state_len()];
            let mut exact_rate = alloc::vec![0.0; solver.state_len()];
            for k in 0..4 {
                let (xl, xr) = ms.cell(k);
                let b = CellBasis::new(m, xl, xr, ms.velocities[k], ms.velocities[k + 1]).unwrap();
                let h = xr - xl;
                let g = b.motion_matrix();
                let (bl, br) = b.edge_traces();
                let mut moments = alloc::vec![0.0; m1];
                let mut p = alloc::vec![0.0; m1];
                for (z, w) in rule.iter() {
                    let x = b.to_physical(z);
                    legendre_values(z, &mut p);
                    let psi = analytic::mms_solution(x, t, 0.1).0;
                    for i in 0..m1 {
                        moments[i] += 0.5 * h * w * norm_factor(i) * p[i] / sqrt(h) * psi;
                    }
                }
                let psi_r = analytic::mms_solution(xr, t, 0.1).0;
                let psi_l = analytic::mms_solution(xl, t, 0.1).0;
                for l in 0..4 {
                    let base = (l * 4 + k) * m1;
                    u[base..base + m1].copy_from_slice(&moments);
                    for i in 0..m1 {
                        // d/dt of the exact projection on the moving cell
                        let mut v = -moments[i] / (1.0 + t);
                        for j in 0..m1 {
                            v += g[(i, j)] * moments[j];
                        }
                        v += br[i] * psi_r * ms.velocities[k + 1] - bl[i] * psi_l * ms.velocities[k];
                        exact_rate[base + i] = v;
                    }
                }
            }
            let mut du = alloc::vec![0.0; solver.state_len()];
            solver.rhs(t, &u, &mut du).unwrap();
            let norm = sqrt(du.iter().zip(&exact_rate).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
            norms.push(norm);
        }
        for w in norms.windows(2) {
            assert!(w[1] * 10.0 <= w[0], "{norms:?}");
        }
    }
}

//! Closed-form and semi-analytic kernels: uncollided scalar fluxes, the
//! manufactured solution, special functions and the scattering-ratio scaling.

pub mod adaptive;
pub mod special;

use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use libm::{exp, sqrt};

use crate::error::{Error, Result};
pub use special::{erf, erfc, exp_integral_ei, EULER_GAMMA};

/// Absolute tolerance of the Gaussian-source time convolution.
pub const CONVOLUTION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceKind {
    PlanePulse,
    SquarePulse,
    SquareSource,
    GaussianPulse,
    GaussianSource,
    Mms,
}

impl SourceKind {
    pub const ALL: [SourceKind; 6] = [
        SourceKind::PlanePulse,
        SourceKind::SquarePulse,
        SourceKind::SquareSource,
        SourceKind::GaussianPulse,
        SourceKind::GaussianSource,
        SourceKind::Mms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SourceKind::PlanePulse => "plane-pulse",
            SourceKind::SquarePulse => "square-pulse",
            SourceKind::SquareSource => "square-source",
            SourceKind::GaussianPulse => "gaussian-pulse",
            SourceKind::GaussianSource => "gaussian-source",
            SourceKind::Mms => "mms",
        }
    }

    /// Initial-condition problems, as opposed to sources with a duration.
    pub fn is_pulse(self) -> bool {
        matches!(
            self,
            SourceKind::PlanePulse | SourceKind::SquarePulse | SourceKind::GaussianPulse
        )
    }

    pub fn is_gaussian(self) -> bool {
        matches!(self, SourceKind::GaussianPulse | SourceKind::GaussianSource)
    }

    pub fn is_square(self) -> bool {
        matches!(self, SourceKind::SquarePulse | SourceKind::SquareSource)
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SourceKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or(Error::InvalidArgument("unknown source kind"))
    }
}

/// Physical parameters of one test problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub c: f64,
    pub x0: f64,
    pub t0: f64,
    pub sigma: f64,
}

impl SourceSpec {
    pub fn new(kind: SourceKind, c: f64, x0: f64, t0: f64, sigma: f64) -> Result<Self> {
        let spec = SourceSpec { kind, c, x0, t0, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument("scattering ratio c must be positive"));
        }
        if !(self.x0 >= 0.0 && self.x0.is_finite()) {
            return Err(Error::InvalidArgument("x0 must be non-negative"));
        }
        if self.kind.is_gaussian() && !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument("sigma must be positive"));
        }
        if matches!(self.kind, SourceKind::SquareSource | SourceKind::GaussianSource) && !(self.t0 > 0.0) {
            return Err(Error::InvalidArgument("t0 must be positive"));
        }
        if matches!(self.kind, SourceKind::SquarePulse | SourceKind::SquareSource) && self.x0 <= 0.0 {
            return Err(Error::InvalidArgument("square sources need x0 > 0"));
        }
        Ok(())
    }

    /// Uncollided scalar flux phi_u(x, t). Zero for the manufactured problem,
    /// which has no uncollided part.
    pub fn uncollided(&self, x: f64, t: f64) -> Result<f64> {
        match self.kind {
            SourceKind::PlanePulse => phi_u_plane(x, t),
            SourceKind::SquarePulse => Ok(phi_u_square_pulse(x, t, self.x0)),
            SourceKind::SquareSource => phi_u_square_source(x, t, self.x0, self.t0),
            SourceKind::GaussianPulse => Ok(phi_u_gaussian_pulse(x, t, self.sigma)),
            SourceKind::GaussianSource => phi_u_gaussian_source(x, t, self.sigma, self.t0),
            SourceKind::Mms => Ok(0.0),
        }
    }
}

/// Uncollided flux of a unit plane pulse at the origin.
pub fn phi_u_plane(x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::OutOfDomain {
            value: t,
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }
    if x.abs() < t {
        Ok(exp(-t) / (2.0 * t))
    } else {
        Ok(0.0)
    }
}

/// Uncollided flux of a square pulse of half-width x0.
pub fn phi_u_square_pulse(x: f64, t: f64, x0: f64) -> f64 {
    let ax = x.abs();
    if t <= 0.0 {
        return if ax <= x0 { 1.0 } else { 0.0 };
    }
    if ax >= t + x0 {
        0.0
    } else if t > x0 && ax <= t - x0 {
        x0 * exp(-t) / t
    } else if t <= x0 && ax <= x0 - t {
        exp(-t)
    } else {
        exp(-t) * (t - ax + x0) / (2.0 * t)
    }
}

// [erf(a + d) - erf(a - d)] / (2 d), a >= 0, d >= 0, evaluated without
// cancellation for small d.
fn erf_difference_quotient(a: f64, d: f64) -> f64 {
    let g = 2.0 / sqrt(PI) * exp(-a * a);
    if d < 1e-3 {
        let a2 = a * a;
        let d2 = d * d;
        let third = (4.0 * a2 - 2.0) / 6.0;
        let fifth = (16.0 * a2 * a2 - 48.0 * a2 + 12.0) / 120.0;
        return g * (1.0 + d2 * (third + d2 * fifth));
    }
    let diff = if a - d > 0.0 {
        erfc(a - d) - erfc(a + d)
    } else {
        erf(a + d) - erf(a - d)
    };
    diff / (2.0 * d)
}

/// Uncollided flux of a Gaussian pulse exp(-x^2/sigma^2).
pub fn phi_u_gaussian_pulse(x: f64, t: f64, sigma: f64) -> f64 {
    let t = t.max(0.0);
    0.5 * sqrt(PI) * exp(-t) * erf_difference_quotient(x.abs() / sigma, t / sigma)
}

/// Uncollided flux of a Gaussian source switched on for t0: the time
/// convolution of the pulse kernel over the elapsed emission window.
pub fn phi_u_gaussian_source(x: f64, t: f64, sigma: f64, t0: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::OutOfDomain {
            value: t,
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }
    // substitute s = t - tau; s runs over [t - min(t, t0), t]
    let lower = t - t.min(t0);
    adaptive::integrate(|s| phi_u_gaussian_pulse(x, s, sigma), lower, t, CONVOLUTION_TOL)
}

/// Uncollided flux of a square source of half-width x0 switched on for t0.
pub fn phi_u_square_source(x: f64, t: f64, x0: f64, t0: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::OutOfDomain {
            value: t,
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }
    let ax = x.abs();
    let d = t0.min(t).min(t - ax + x0).max(0.0);
    if d <= 0.0 {
        return Ok(0.0);
    }
    let b = (t - ax - x0).min(d).max(0.0);
    let c = (t + ax - x0).min(d).max(b);
    let ei = |tau: f64| exp_integral_ei(tau - t);
    let mut total = 0.0;
    // tau in [0, b]: plateau region, integrand x0 e^{-(t-tau)}/(t-tau)
    if b > 0.0 {
        total += x0 * (ei(0.0)? - ei(b)?);
    }
    // tau in [b, c]: one edge of the pulse has passed x
    if c > b {
        let lin = |tau: f64| -> Result<f64> {
            let s = t - tau;
            let log_part = if ax == x0 { 0.0 } else { 0.5 * (ax - x0) * ei(tau)? };
            Ok(0.5 * exp(-s) + log_part)
        };
        // integrand e^{-s}(s - ax + x0)/(2s)
        total += lin(c)? - lin(b)?;
    }
    // tau in [c, d]: inside the flat top (t - tau <= x0 - ax)
    if d > c {
        total += exp(-(t - d)) - exp(-(t - c));
    }
    Ok(total)
}

/// Manufactured angular and scalar flux.
pub fn mms_solution(x: f64, t: f64, x0: f64) -> (f64, f64) {
    if t - x.abs() + x0 < 0.0 {
        return (0.0, 0.0);
    }
    let psi = exp(-0.5 * x * x) / (2.0 * (1.0 + t));
    (psi, 2.0 * psi)
}

/// Manufactured source that drives `mms_solution` at c = 1. It is linear in
/// mu; see `mms_source_parts`.
pub fn mms_source(x: f64, t: f64, mu: f64, x0: f64) -> f64 {
    let (a, b) = mms_source_parts(x, t, x0);
    a + mu * b
}

/// (isotropic part, coefficient of mu) of the manufactured source.
pub fn mms_source_parts(x: f64, t: f64, x0: f64) -> (f64, f64) {
    if t - x.abs() + x0 < 0.0 {
        return (0.0, 0.0);
    }
    let g = exp(-0.5 * x * x);
    let tp = t + 1.0;
    (-g / (tp * tp), -g * x / tp)
}

/// c e^{-(1-c)t} psi1(cx, mu, ct): maps a c = 1 solution to ratio c.
pub fn scale_solution<F: FnOnce(f64, f64, f64) -> f64>(psi1: F, c: f64, x: f64, mu: f64, t: f64) -> f64 {
    c * exp(-(1.0 - c) * t) * psi1(c * x, mu, c * t)
}

/// Parameters of the ratio-c problem equivalent to a c = 1 benchmark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledParameters {
    pub x0: f64,
    pub sigma: f64,
    pub t_final: f64,
}

pub fn scaled_parameters(c: f64, x0: f64, sigma: f64, t: f64) -> Result<ScaledParameters> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument("scattering ratio c must be positive"));
    }
    Ok(ScaledParameters {
        x0: x0 / c,
        sigma: sigma / c,
        t_final: t / c,
    })
}

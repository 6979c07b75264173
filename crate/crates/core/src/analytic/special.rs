//! Error function and exponential integral.

use libm::{exp, log};

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;

/// erf(x), delegated to the portable libm implementation.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// erfc(x) = 1 - erf(x) without cancellation for large positive x.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Principal-value exponential integral Ei(y).
///
/// Power series for 0 < y <= 40 (all terms positive) and for -1 <= y < 0;
/// continued fraction for E1 when y < -1; asymptotic series when y > 40.
pub fn exp_integral_ei(y: f64) -> Result<f64> {
    if y == 0.0 {
        return Err(Error::Singularity("Ei(0)"));
    }
    if y.is_nan() {
        return Err(Error::InvalidArgument("Ei of NaN"));
    }
    if y < -1.0 {
        return Ok(-e1_continued_fraction(-y));
    }
    if y <= 40.0 {
        return Ok(EULER_GAMMA + log(y.abs()) + ei_series_tail(y));
    }
    Ok(ei_asymptotic(y))
}

// sum_{k>=1} y^k / (k k!)
fn ei_series_tail(y: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..500 {
        let kf = k as f64;
        term *= y / kf;
        let add = term / kf;
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

// Modified Lentz evaluation of E1(x), x > 1.
fn e1_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * exp(-x)
}

fn ei_asymptotic(y: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let next = term * k as f64 / y;
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum {
            break;
        }
    }
    exp(y) / y * sum
}

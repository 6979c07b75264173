//! Adaptive Gauss-Kronrod (7, 15) integration.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_INTERVALS: usize = 4000;

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

#[derive(Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Integrates `f` over [a, b] to absolute tolerance `abs_tol` by repeatedly
/// bisecting the subinterval with the largest error estimate.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (value, error) = kronrod(&mut f, a, b);
    let mut pieces: Vec<Piece> = alloc::vec![Piece { a, b, value, error }];
    let mut total_err = error;
    while !(total_err <= abs_tol) {
        if pieces.len() >= MAX_INTERVALS || !total_err.is_finite() {
            let estimate = pieces.iter().map(|p| p.value).sum();
            return Err(Error::Quadrature {
                lower: a,
                upper: b,
                estimate,
                error: total_err,
            });
        }
        let (worst, _) = pieces.iter().enumerate().fold(
            (0, -1.0),
            |(bi, be), (i, p)| if p.error > be { (i, p.error) } else { (bi, be) },
        );
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // interval exhausted at machine resolution
            let estimate = pieces.iter().map(|q| q.value).sum::<f64>() + p.value;
            return Err(Error::Quadrature {
                lower: a,
                upper: b,
                estimate,
                error: total_err,
            });
        }
        let (v1, e1) = kronrod(&mut f, p.a, mid);
        let (v2, e2) = kronrod(&mut f, mid, p.b);
        pieces.push(Piece {
            a: p.a,
            b: mid,
            value: v1,
            error: e1,
        });
        pieces.push(Piece {
            a: mid,
            b: p.b,
            value: v2,
            error: e2,
        });
        total_err = pieces.iter().map(|q| q.error).sum();
    }
    let value: f64 = pieces.iter().map(|p| p.value).sum();
    if !value.is_finite() {
        return Err(Error::Quadrature {
            lower: a,
            upper: b,
            estimate: value,
            error: total_err,
        });
    }
    Ok(value)
}

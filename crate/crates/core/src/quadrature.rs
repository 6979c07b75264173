//! Gauss-Lobatto and Gauss-Legendre rules on [-1, 1].
//!
//! Lobatto rules supply the discrete ordinates (they contain mu = -1 and
//! mu = +1, so particles travelling with the wavefront are represented).
//! Legendre rules are used for spatial projections of sources and initial
//! conditions. Nodes come from Newton iteration on the three-term Legendre
//! recurrence seeded with Chebyshev-type guesses.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::cos;

use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// A symmetric quadrature rule on [-1, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSet {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureSet {
    /// A rule from explicit nodes and weights, e.g. a single direction.
    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::InvalidArgument(
                "nodes and weights must be non-empty and equal in length",
            ));
        }
        if nodes.iter().any(|x| !(x.abs() <= 1.0)) {
            return Err(Error::InvalidArgument("quadrature nodes must lie in [-1, 1]"));
        }
        Ok(QuadratureSet { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Approximates the integral of `f` over [-1, 1].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Approximates the integral of `f` over [a, b] by affine mapping.
    pub fn integrate_on<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        half * self.integrate(|z| f(mid + half * z))
    }
}

/// Returns (P_n(x), P_{n-1}(x)) from the three-term recurrence. For n = 0 the
/// second entry is 0.
pub(crate) fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0;
    for k in 1..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// n-point Gauss-Lobatto rule (endpoints included), exact through degree 2n - 3.
pub fn gauss_lobatto(n_points: usize) -> Result<QuadratureSet> {
    if n_points < 2 {
        return Err(Error::InvalidArgument("Gauss-Lobatto rule needs at least 2 points"));
    }
    let n = n_points - 1; // interior nodes are roots of P_n'
    let nf = n as f64;
    let mut nodes = alloc::vec![0.0; n_points];
    let mut weights = alloc::vec![0.0; n_points];
    let weight_of = |x: f64| {
        let (p, _) = legendre_pair(n, x);
        2.0 / (nf * (nf + 1.0) * p * p)
    };

    nodes[0] = -1.0;
    nodes[n] = 1.0;
    weights[0] = 2.0 / (nf * (nf + 1.0));
    weights[n] = weights[0];

    // Interior nodes in the upper half, mirrored to the lower half.
    for j in (1..n).take_while(|&j| 2 * j < n) {
        let mut x = cos(PI * j as f64 / nf);
        for _ in 0..NEWTON_MAX_ITER {
            let (p, p_prev) = legendre_pair(n, x);
            let dp = nf * (x * p - p_prev) / (x * x - 1.0);
            // (1 - x^2) P'' = 2x P' - n(n+1) P
            let d2p = (2.0 * x * dp - nf * (nf + 1.0) * p) / (1.0 - x * x);
            let dx = dp / d2p;
            x -= dx;
            if dx.abs() <= NEWTON_TOL * x.abs().max(1.0) {
                break;
            }
        }
        let w = weight_of(x);
        nodes[n - j] = x;
        nodes[j] = -x;
        weights[n - j] = w;
        weights[j] = w;
    }
    if n % 2 == 0 {
        // odd point count: centre node
        nodes[n / 2] = 0.0;
        weights[n / 2] = weight_of(0.0);
    }
    Ok(QuadratureSet { nodes, weights })
}

/// n-point Gauss-Legendre rule, exact through degree 2n - 1.
pub fn gauss_legendre(n_points: usize) -> Result<QuadratureSet> {
    if n_points < 1 {
        return Err(Error::InvalidArgument("Gauss-Legendre rule needs at least 1 point"));
    }
    let n = n_points;
    let nf = n as f64;
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    for i in 0..n / 2 {
        // i-th largest root
        let mut x = cos(PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 1.0;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, p_prev) = legendre_pair(n, x);
            dp = nf * (x * p - p_prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= NEWTON_TOL * x.abs().max(1.0) {
                let (p, p_prev) = legendre_pair(n, x);
                dp = nf * (x * p - p_prev) / (x * x - 1.0);
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        let (_, p_prev) = legendre_pair(n, 0.0);
        // P_n'(0) = n P_{n-1}(0)
        let dp = nf * p_prev;
        nodes[n / 2] = 0.0;
        weights[n / 2] = 2.0 / (dp * dp);
    }
    Ok(QuadratureSet { nodes, weights })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum RuleKind {
    Lobatto,
    Legendre,
}

/// Memoizes rules by point count for the lifetime of a run.
#[derive(Clone, Debug, Default)]
pub struct QuadratureCache {
    rules: BTreeMap<(RuleKind, usize), QuadratureSet>,
}

impl QuadratureCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lobatto(&mut self, n_points: usize) -> Result<&QuadratureSet> {
        self.get(RuleKind::Lobatto, n_points)
    }

    pub fn legendre(&mut self, n_points: usize) -> Result<&QuadratureSet> {
        self.get(RuleKind::Legendre, n_points)
    }

    fn get(&mut self, kind: RuleKind, n: usize) -> Result<&QuadratureSet> {
        use alloc::collections::btree_map::Entry;
        match self.rules.entry((kind, n)) {
            Entry::Occupied(e) => Ok(e.into_mut()),
            Entry::Vacant(e) => {
                let rule = match kind {
                    RuleKind::Lobatto => gauss_lobatto(n)?,
                    RuleKind::Legendre => gauss_legendre(n)?,
                };
                Ok(e.insert(rule))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::sqrt;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lobatto_small_rules() {
        let q = gauss_lobatto(2).unwrap();
        assert_eq!(q.nodes(), &[-1.0, 1.0]);
        assert_eq!(q.weights(), &[1.0, 1.0]);

        let q = gauss_lobatto(3).unwrap();
        let expect = [(-1.0, 1.0 / 3.0), (0.0, 4.0 / 3.0), (1.0, 1.0 / 3.0)];
        for ((x, w), (ex, ew)) in q.iter().zip(expect) {
            assert!(close(x, ex, 1e-15) && close(w, ew, 1e-15));
        }

        let q = gauss_lobatto(4).unwrap();
        let r = 1.0 / sqrt(5.0);
        let expect = [(-1.0, 1.0 / 6.0), (-r, 5.0 / 6.0), (r, 5.0 / 6.0), (1.0, 1.0 / 6.0)];
        for ((x, w), (ex, ew)) in q.iter().zip(expect) {
            assert!(close(x, ex, 1e-14) && close(w, ew, 1e-14), "{x} {w}");
        }
    }

    #[test]
    fn legendre_small_rules() {
        let q = gauss_legendre(1).unwrap();
        assert_eq!(q.nodes(), &[0.0]);
        assert_eq!(q.weights(), &[2.0]);

        let q = gauss_legendre(2).unwrap();
        let r = 1.0 / sqrt(3.0);
        assert!(close(q.nodes()[0], -r, 1e-15) && close(q.nodes()[1], r, 1e-15));
        assert!(close(q.weights()[0], 1.0, 1e-15) && close(q.weights()[1], 1.0, 1e-15));

        let q = gauss_legendre(3).unwrap();
        assert!(close(q.integrate(|x| x * x * x * x), 0.4, 1e-15));
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(matches!(gauss_lobatto(1), Err(Error::InvalidArgument(_))));
        assert!(matches!(gauss_legendre(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn moment_exactness_and_symmetry() {
        for n in 2..=40 {
            for (rule, degree) in [
                (gauss_lobatto(n).unwrap(), 2 * n - 3),
                (gauss_legendre(n).unwrap(), 2 * n - 1),
            ] {
                let total: f64 = rule.weights().iter().sum();
                assert!(close(total, 2.0, 1e-13), "n={n} sum={total}");
                assert!(rule.weights().iter().all(|&w| w > 0.0));
                assert!(rule.nodes().windows(2).all(|p| p[0] < p[1]));
                for m in 1..=degree {
                    let s = rule.integrate(|x| legendre_pair(m, x).0);
                    assert!(s.abs() < 1e-12, "n={n} m={m} moment={s}");
                }
                let len = rule.len();
                for i in 0..len {
                    assert_eq!(rule.nodes()[i], -rule.nodes()[len - 1 - i]);
                    assert_eq!(rule.weights()[i], rule.weights()[len - 1 - i]);
                }
            }
        }
    }

    #[test]
    fn large_lobatto_rule_is_well_formed() {
        let q = gauss_lobatto(1024).unwrap();
        assert_eq!(q.nodes()[0], -1.0);
        assert_eq!(q.nodes()[1023], 1.0);
        assert!(q.nodes().windows(2).all(|p| p[0] < p[1]));
        let total: f64 = q.weights().iter().sum();
        assert!(close(total, 2.0, 1e-12));
        assert!(q.integrate(|x| legendre_pair(200, x).0).abs() < 1e-12);
    }

    #[test]
    fn cache_returns_same_rule() {
        let mut cache = QuadratureCache::new();
        let a = cache.lobatto(16).unwrap().clone();
        let b = cache.lobatto(16).unwrap().clone();
        assert_eq!(a, b);
        assert_eq!(cache.legendre(5).unwrap().len(), 5);
    }
}

//! Gauss–Legendre quadrature with node doubling.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule on [-1, 1] by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            // Tricomi initial guess
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared rule for `n` nodes; rules are cached since building costs O(n^2).
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(rule) = cache.lock().unwrap().get(&n) {
            return rule.clone();
        }
        let rule = Arc::new(GaussLegendre::new(n));
        cache.lock().unwrap().insert(n, rule.clone());
        rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrates with `nodes` and `2 * nodes` points and fails if the two
/// estimates differ by `tol` or more. Returns the finer estimate.
pub fn integrate_doubling<F: Fn(f64) -> f64>(a: f64, b: f64, nodes: usize, tol: f64, f: F) -> Result<f64> {
    let coarse = GaussLegendre::cached(nodes).integrate(a, b, &f);
    let fine = GaussLegendre::cached(2 * nodes).integrate(a, b, &f);
    let delta = (fine - coarse).abs();
    if !(delta < tol) {
        return Err(Error::NonConvergence {
            nodes: 2 * nodes,
            delta,
        });
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_for_polynomials() {
        let rule = GaussLegendre::new(5);
        // degree 9 is the highest exact degree for 5 nodes
        assert_abs_diff_eq!(rule.integrate(-1.0, 1.0, |x| x.powi(8)), 2.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rule.integrate(0.0, 2.0, |x| x * x * x), 4.0, epsilon = 1e-14);
        let s: f64 = rule.weights().iter().sum();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn large_rule_is_accurate() {
        let rule = GaussLegendre::new(1000);
        assert_abs_diff_eq!(rule.integrate(0.0, PI, f64::sin), 2.0, epsilon = 1e-13);
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn doubling_reports_nonconvergence() {
        let ok = integrate_doubling(0.0, PI, 16, 1e-12, f64::sin).unwrap();
        assert_abs_diff_eq!(ok, 2.0, epsilon = 1e-13);
        let err = integrate_doubling(-1.0, 1.0, 4, 1e-10, |x: f64| x.abs().sqrt());
        assert!(matches!(err, Err(Error::NonConvergence { .. })));
    }
}

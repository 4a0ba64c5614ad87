//! Gauss–Legendre rules with node doubling.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Smallest rule used by [`integrate`].
pub const BASE_NODES: usize = 16;
/// Largest rule used by [`integrate`].
pub const MAX_NODES: usize = 1 << 14;
const LEVELS: usize = 11;

/// Build the `n`-point rule by Newton iteration on the three-term recurrence.
pub fn gauss_legendre(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussRule { nodes, weights }
}

fn cached(level: usize) -> &'static GaussRule {
    static RULES: [OnceLock<GaussRule>; LEVELS] = [const { OnceLock::new() }; LEVELS];
    RULES[level].get_or_init(|| gauss_legendre(BASE_NODES << level))
}

/// Outcome of a node-doubling run.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub nodes: usize,
    /// Relative change between the last two levels.
    pub change: f64,
}

fn apply<F: Fn(f64) -> f64>(rule: &GaussRule, f: &F, a: f64, b: f64) -> (f64, f64) {
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    let (mut s, mut s_abs) = (0.0, 0.0);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let v = w * f(c + h * x);
        s += v;
        s_abs += v.abs();
    }
    (s * h, s_abs * h.abs())
}

/// Integrate `f` over `[a, b]`, doubling the rule until the change between
/// successive levels falls below `rel_tol` times the integral of `|f|`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Quadrature> {
    let (mut prev, _) = apply(cached(0), &f, a, b);
    let mut change = f64::INFINITY;
    for level in 1..LEVELS {
        let (value, scale) = apply(cached(level), &f, a, b);
        if !value.is_finite() {
            return Err(Error::NoConvergence { change: f64::NAN, nodes: BASE_NODES << level });
        }
        change = if scale > 0.0 { (value - prev).abs() / scale } else { 0.0 };
        if change < rel_tol {
            return Ok(Quadrature { value, nodes: BASE_NODES << level, change });
        }
        prev = value;
    }
    Err(Error::NoConvergence { change, nodes: MAX_NODES })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 64] {
            let r = gauss_legendre(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        let r = gauss_legendre(8);
        // x^14 integrates to 2/15 on [-1, 1]
        let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn doubling_converges_on_smooth_integrand() {
        let q = integrate(f64::exp, 0.0, 1.0, 1e-13).unwrap();
        assert!((q.value - (1f64.exp() - 1.0)).abs() < 1e-14);
        assert_eq!(q.nodes, 32);
    }
}

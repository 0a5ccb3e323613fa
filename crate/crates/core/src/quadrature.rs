//! Gauss-Legendre rules and panel integration.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Default per-panel order.
pub const DEFAULT_ORDER: usize = 20;

/// Bisection depth limit for the adaptive fallback.
const MAX_DEPTH: usize = 12;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared order-20 rule.
    pub fn standard() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(DEFAULT_ORDER))
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }

    /// Integrates several functions of the same variable at once.
    pub fn integrate_many<const K: usize>(
        &self,
        a: f64,
        b: f64,
        mut f: impl FnMut(f64) -> [f64; K],
    ) -> [f64; K] {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = [0.0; K];
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            for (s, vi) in acc.iter_mut().zip(v) {
                *s += w * vi;
            }
        }
        acc.map(|s| s * half)
    }

    /// Panel rule with bisection wherever a panel and its two halves disagree
    /// by more than `tol` (absolute, per panel).
    pub fn integrate_adaptive<const K: usize>(
        &self,
        a: f64,
        b: f64,
        tol: f64,
        f: &mut impl FnMut(f64) -> [f64; K],
    ) -> [f64; K] {
        self.adaptive_inner(a, b, tol, 0, self.integrate_many(a, b, &mut *f), f)
    }

    fn adaptive_inner<const K: usize>(
        &self,
        a: f64,
        b: f64,
        tol: f64,
        depth: usize,
        whole: [f64; K],
        f: &mut impl FnMut(f64) -> [f64; K],
    ) -> [f64; K] {
        let m = 0.5 * (a + b);
        let left = self.integrate_many(a, m, &mut *f);
        let right = self.integrate_many(m, b, &mut *f);
        let mut split = [0.0; K];
        let mut err: f64 = 0.0;
        for i in 0..K {
            split[i] = left[i] + right[i];
            err = err.max((split[i] - whole[i]).abs());
        }
        if err <= tol || depth >= MAX_DEPTH {
            return split;
        }
        let l = self.adaptive_inner(a, m, tol, depth + 1, left, f);
        let r = self.adaptive_inner(m, b, tol, depth + 1, right, f);
        let mut out = [0.0; K];
        for i in 0..K {
            out[i] = l[i] + r[i];
        }
        out
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_nodes_are_symmetric() {
        for order in [1, 2, 5, 20, 21, 40] {
            let r = GaussLegendre::new(order);
            let s: f64 = r.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "order {order}: {s}");
            for i in 0..order {
                assert!((r.nodes()[i] + r.nodes()[order - 1 - i]).abs() < 1e-15);
            }
            assert!(r.nodes().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let r = GaussLegendre::new(20);
        for deg in 0..40 {
            let exact = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            let q = r.integrate(-1.0, 1.0, |x| x.powi(deg));
            assert!((q - exact).abs() < 1e-14, "degree {deg}");
        }
        let q = r.integrate(0.0, 2.0, |x| x.powi(3));
        assert!((q - 4.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let r = GaussLegendre::standard();
        let q = r.integrate_adaptive(-1.0, 1.0, 1e-13, &mut |x: f64| [x.abs(), x.exp()]);
        assert!((q[0] - 1.0).abs() < 1e-12);
        assert!((q[1] - (1f64.exp() - (-1f64).exp())).abs() < 1e-13);
    }
}

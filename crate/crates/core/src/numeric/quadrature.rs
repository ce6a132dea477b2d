//! Gauss–Hermite rules for expectations over a standard normal variable.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights for `E[f(Z)]`, `Z ~ N(0, 1)`; the weights sum to one.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Rule with `n` nodes, built by Newton iteration on the orthonormal
    /// Hermite recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one node");
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        let pim4 = PI.powf(-0.25);
        let mut z = 0.0_f64;

        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let step = p1 / pp;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }

        // Physicists' rule (weight e^{-x^2}) to the standard normal measure.
        let nodes = x.iter().rev().map(|xi| xi * std::f64::consts::SQRT_2).collect();
        let weights = w.iter().rev().map(|wi| wi / PI.sqrt()).collect();
        GaussHermite { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E[f(Z)]` for a standard normal `Z`.
    pub fn expectation(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

pub const DEFAULT_NODES: usize = 96;

/// Shared 96-node rule.
pub fn gauss_hermite() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(DEFAULT_NODES))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one_and_nodes_sorted() {
        for n in [1, 2, 5, 20, 64, 96] {
            let rule = GaussHermite::new(n);
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-13, "n={n} total={total}");
            assert!(rule.nodes.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn reproduces_normal_moments() {
        let rule = gauss_hermite();
        // E[Z^2k] = (2k-1)!!
        let expected = [1.0, 1.0, 3.0, 15.0, 105.0, 945.0];
        for (k, want) in expected.iter().enumerate() {
            let got = rule.expectation(|z| z.powi(2 * k as i32));
            assert!((got - want).abs() < 1e-10 * want, "moment {} got {got}", 2 * k);
        }
        assert!(rule.expectation(|z| z.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn small_rule_is_exact() {
        // two nodes at ±1 with equal weight
        let rule = GaussHermite::new(2);
        assert!((rule.nodes[1] - 1.0).abs() < 1e-14);
        assert!((rule.weights[0] - 0.5).abs() < 1e-14);
    }
}

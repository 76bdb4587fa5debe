//! Gauss-Hermite nodes and weights (physicists' convention, weight e^{-x²}).
//!
//! Nodes are the roots of the order-n Hermite polynomial, located by Newton
//! iteration on the orthonormal recurrence with asymptotic initial guesses.
//! Rules are cached per order since the default order is reused heavily.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::NumericsError;

const PI_POW_MINUS_QUARTER: f64 = 0.751_125_544_464_942_5;
const NEWTON_EPS: f64 = 3e-14;
const NEWTON_MAX_ITER: usize = 32;

#[derive(Debug, Clone)]
pub(crate) struct HermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Σ weights; analytically √π, kept so integrals of constants are exact.
    pub weight_sum: f64,
}

/// Orthonormal Hermite value and (scaled) derivative carrier at z.
fn hermite_eval(order: usize, z: f64) -> (f64, f64) {
    let mut p1 = PI_POW_MINUS_QUARTER;
    let mut p2 = 0.0;
    for j in 1..=order {
        let j = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / j).sqrt() * p2 - ((j - 1.0) / j).sqrt() * p3;
    }
    (p1, p2)
}

fn compute_rule(order: usize) -> Result<HermiteRule, NumericsError> {
    let n = order;
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (p1, p2) = hermite_eval(n, z);
            pp = (2.0 * nf).sqrt() * p2;
            let step = p1 / pp;
            z -= step;
            if step.abs() <= NEWTON_EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(NumericsError::NonConvergence {
                what: "Gauss-Hermite node iteration",
            });
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let weight_sum = weights.iter().sum();
    Ok(HermiteRule {
        nodes,
        weights,
        weight_sum,
    })
}

pub(crate) fn rule(order: usize) -> Result<Arc<HermiteRule>, NumericsError> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<HermiteRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("hermite cache poisoned");
    if let Some(r) = map.get(&order) {
        return Ok(Arc::clone(r));
    }
    let r = Arc::new(compute_rule(order)?);
    map.insert(order, Arc::clone(&r));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for order in [2, 7, 32, 64, 101] {
            let r = rule(order).unwrap();
            let sum: f64 = r.weights.iter().sum();
            let sqrt_pi = std::f64::consts::PI.sqrt();
            assert!((sum - sqrt_pi).abs() < 1e-12, "order {order}: {sum}");
        }
    }

    #[test]
    fn second_moment_identity() {
        // ∫ x² e^{-x²} dx = √π / 2
        let r = rule(64).unwrap();
        let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x * x).sum();
        assert!((s - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn nodes_are_symmetric_and_sorted_roots() {
        let r = rule(64).unwrap();
        for i in 0..32 {
            assert_eq!(r.nodes[i], -r.nodes[63 - i]);
        }
        for i in 1..64 {
            assert!(r.nodes[i] < r.nodes[i - 1]);
        }
        // every node is a root of the order-64 orthonormal polynomial; the
        // raw value scales like e^{x²/2}, so check the Newton step instead
        for &x in &r.nodes {
            let (p, q) = hermite_eval(64, x);
            let step = p / ((2.0 * 64.0f64).sqrt() * q);
            assert!(step.abs() < 1e-13, "Newton step {step} at {x}");
        }
    }

    #[test]
    fn degree_127_polynomial_is_exact() {
        // order 64 integrates x^126 against e^{-x²} exactly:
        // ∫ x^{2k} e^{-x²} dx = √π (2k-1)!! / 2^k
        let r = rule(64).unwrap();
        let k = 20i32;
        let mut exact = std::f64::consts::PI.sqrt();
        for j in 1..=k as usize {
            exact *= (2.0 * j as f64 - 1.0) / 2.0;
        }
        let got: f64 = r
            .nodes
            .iter()
            .zip(&r.weights)
            .map(|(x, w)| w * x.powi(2 * k))
            .sum();
        assert!((got - exact).abs() / exact < 1e-11, "{got} vs {exact}");
    }
}

//! Monte Carlo oracle for the quadrature-based operating characteristics.
//!
//! Every replicate owns a counter-based substream keyed by (seed, replicate
//! index), so serial and parallel runs produce bit-identical estimates and
//! disjoint index ranges are independent. Normal variates come from the
//! inverse-CDF transform of uniform draws, which keeps results identical
//! across platforms.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::delta::{
    control_posterior_weight, delta_posterior, is_success, posterior_median_delta, TrialDesign,
};
use crate::numerics::std_normal_quantile;
use crate::oc::DriftScenario;

/// Replicate count and stream seed for one estimation run.
#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub n_reps: u64,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_reps: 1_000_000,
            seed: 0x5eed_0fc0_ffee,
        }
    }
}

/// Outcome of a single simulated trial.
#[derive(Debug, Clone, Copy)]
pub struct TrialReplicate {
    pub x_c: f64,
    pub x_t: f64,
    pub success: bool,
    pub delta_hat: f64,
}

/// A proportion estimate with its binomial standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub mean_posterior_weight: f64,
}

/// Uniform draw in the open unit interval from the replicate substream.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn draw_means(
    design: &TrialDesign,
    theta_c: f64,
    theta_t: f64,
    seed: u64,
    replicate: u64,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    let z_c = std_normal_quantile(open_unit(&mut rng)).expect("open-unit draw is interior");
    let z_t = std_normal_quantile(open_unit(&mut rng)).expect("open-unit draw is interior");
    (
        theta_c + design.sigma2_c().sqrt() * z_c,
        theta_t + design.sigma2_t().sqrt() * z_t,
    )
}

/// Simulate one trial: draw both arm means, apply the success rule and
/// compute the posterior-median estimate of δ.
pub fn simulate_trial(
    design: &TrialDesign,
    theta_c: f64,
    theta_t: f64,
    seed: u64,
    replicate: u64,
) -> TrialReplicate {
    let (x_c, x_t) = draw_means(design, theta_c, theta_t, seed, replicate);
    let dp = delta_posterior(design, x_c, x_t);
    TrialReplicate {
        x_c,
        x_t,
        success: is_success(design, x_c, x_t),
        delta_hat: posterior_median_delta(&dp),
    }
}

/// Success-probability estimate at drift `D` with true effect `delta_star`
/// (0 gives the type I error).
///
/// Replicates are dispatched in fixed chunks and reduced in chunk order, so
/// the estimate does not depend on thread count or scheduling.
pub fn mc_estimate(
    design: &TrialDesign,
    drift: f64,
    delta_star: f64,
    cfg: &McConfig,
) -> McEstimate {
    assert!(cfg.n_reps >= 1, "n_reps must be at least 1");
    let scenario = DriftScenario::with_effect(drift, delta_star);
    let theta_c = scenario.control_mean(design);
    let theta_t = scenario.treatment_mean(design);
    const CHUNK: u64 = 8_192;
    let n_chunks = cfg.n_reps.div_ceil(CHUNK);
    let partials: Vec<(u64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(cfg.n_reps);
            let mut successes = 0u64;
            let mut weight_sum = 0.0;
            for rep in lo..hi {
                let (x_c, x_t) = draw_means(design, theta_c, theta_t, cfg.seed, rep);
                if is_success(design, x_c, x_t) {
                    successes += 1;
                }
                weight_sum += control_posterior_weight(design, x_c);
            }
            (successes, weight_sum)
        })
        .collect();
    let mut successes = 0u64;
    let mut weight_sum = 0.0;
    for (s, w) in partials {
        successes += s;
        weight_sum += w;
    }
    let n = cfg.n_reps as f64;
    let p = successes as f64 / n;
    McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        mean_posterior_weight: weight_sum / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oc;
    use crate::rmp::{NormalComponent, RobustMixturePrior};
    use crate::QuadratureSpec;

    fn design(omega: f64, sigma2_rob: f64, n_c: f64) -> TrialDesign {
        let prior = RobustMixturePrior::new(
            omega,
            NormalComponent::new(0.0, 0.01).unwrap(),
            NormalComponent::new(0.0, sigma2_rob).unwrap(),
        )
        .unwrap();
        TrialDesign::new(n_c, 150.0, 1.0, 0.05, prior, None).unwrap()
    }

    #[test]
    fn deterministic_across_runs() {
        let d = design(0.5, 1.0, 50.0);
        let a = simulate_trial(&d, 0.0, 0.31, 42, 7);
        let b = simulate_trial(&d, 0.0, 0.31, 42, 7);
        assert_eq!(a.x_c.to_bits(), b.x_c.to_bits());
        assert_eq!(a.x_t.to_bits(), b.x_t.to_bits());
        assert_eq!(a.success, b.success);
        assert_eq!(a.delta_hat.to_bits(), b.delta_hat.to_bits());
        // different replicate index gives a different draw
        let c = simulate_trial(&d, 0.0, 0.31, 42, 8);
        assert_ne!(a.x_c.to_bits(), c.x_c.to_bits());
    }

    #[test]
    fn success_flag_matches_rule() {
        let d = design(0.5, 1.0, 50.0);
        for rep in 0..200 {
            let r = simulate_trial(&d, 0.0, 0.2, 9, rep);
            assert_eq!(r.success, is_success(&d, r.x_c, r.x_t));
        }
    }

    #[test]
    fn degenerate_sampling_variance_pins_the_draw() {
        let d = design(0.5, 1.0, 1e12);
        let r = simulate_trial(&d, 0.3, 0.3, 11, 0);
        assert!((r.x_c - 0.3).abs() < 1e-5, "{}", r.x_c);
    }

    #[test]
    fn flat_design_alpha_near_nominal() {
        let d = design(0.0, 1e100, 50.0);
        let cfg = McConfig {
            n_reps: 200_000,
            seed: 1234,
        };
        let est = mc_estimate(&d, 0.0, 0.0, &cfg);
        assert!(
            (est.estimate - 0.05).abs() <= 3.0 * est.std_error,
            "{} +- {}",
            est.estimate,
            est.std_error
        );
    }

    #[test]
    fn agrees_with_quadrature_at_moderate_reps() {
        let d = design(0.5, 1.0, 50.0);
        let quad = QuadratureSpec::default();
        let cfg = McConfig {
            n_reps: 100_000,
            seed: 77,
        };
        for (drift, delta) in [(0.0, 0.0), (0.0, 0.31), (2.0, 0.0)] {
            let exact =
                oc::success_probability(&d, &oc::DriftScenario::with_effect(drift, delta), &quad)
                    .unwrap();
            let est = mc_estimate(&d, drift, delta, &cfg);
            let slack = 3.0 * est.std_error.max(1e-4);
            assert!(
                (est.estimate - exact).abs() <= slack,
                "drift={drift}, delta={delta}: mc {} vs quad {exact}",
                est.estimate
            );
        }
    }

    #[test]
    fn mean_weight_against_quadrature() {
        let d = design(0.5, 1.0, 50.0);
        let cfg = McConfig {
            n_reps: 100_000,
            seed: 5,
        };
        let est = mc_estimate(&d, 0.0, 0.0, &cfg);
        let exact = oc::mean_posterior_weight(&d, 0.0, &QuadratureSpec::default()).unwrap();
        assert!((est.mean_posterior_weight - exact).abs() < 5e-3);
    }

    #[test]
    fn variance_halves_with_double_reps() {
        let d = design(0.5, 1.0, 50.0);
        let half = mc_estimate(
            &d,
            0.0,
            0.31,
            &McConfig {
                n_reps: 50_000,
                seed: 99,
            },
        );
        let full = mc_estimate(
            &d,
            0.0,
            0.31,
            &McConfig {
                n_reps: 100_000,
                seed: 99,
            },
        );
        let ratio = half.std_error / full.std_error;
        assert!((ratio - std::f64::consts::SQRT_2).abs() < 0.05, "{ratio}");
    }
}

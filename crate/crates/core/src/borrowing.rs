//! Borrowing strength, weight-variance level sets and prior-weight
//! elicitation.
//!
//! The borrowing strength `B` is the exact posterior odds of the informative
//! component when the observed control mean sits on the informative location
//! and the robustification component is centred there too. Pairs
//! (weight, robust variance) that share `B` share the whole posterior-weight
//! profile once the robust component is diffuse, so `B` is the natural
//! tuning knob. The reciprocal `1/B` is reported alongside because part of
//! the borrowing literature labels profiles by that quantity instead.

use thiserror::Error;

use crate::rmp::{
    log_prior_predictive, posterior_weight, NormalComponent, PredictiveSpec, RmpError,
    RobustMixturePrior, SamplingModel,
};

#[derive(Debug, Error)]
pub enum BorrowingError {
    #[error("borrowing strength is undefined for a degenerate weight {weight}")]
    DegenerateWeight { weight: f64 },
    #[error("{what} (got {value})")]
    Invalid { what: &'static str, value: f64 },
    #[error(transparent)]
    Rmp(#[from] RmpError),
}

/// Exact posterior odds at zero observed drift, B = Ω·R, together with its
/// reciprocal for cross-reference with conventions that report 1/B.
#[derive(Debug, Clone, Copy)]
pub struct BorrowingStrength {
    pub strength: f64,
    pub reciprocal: f64,
    /// The zero-drift anchor B = Ω·R is exact only when the robustification
    /// component is centred on the informative one.
    pub exact: bool,
}

/// B = Ω · v_rob / v_inf for an interior prior weight.
pub fn borrowing_strength(
    rmp: &RobustMixturePrior,
    sampling: &SamplingModel,
) -> Result<BorrowingStrength, BorrowingError> {
    let w = rmp.weight();
    if w == 0.0 || w == 1.0 {
        return Err(BorrowingError::DegenerateWeight { weight: w });
    }
    let odds = w / (1.0 - w);
    let ratio = PredictiveSpec::new(rmp, sampling).ratio();
    let strength = odds * ratio;
    Ok(BorrowingStrength {
        strength,
        reciprocal: 1.0 / strength,
        exact: rmp.robust().mean() == rmp.informative().mean(),
    })
}

/// The weight that puts an RMP with robustification variance `sigma2_rob`
/// on the level set of borrowing strength `strength`.
pub fn weight_for_strength(
    strength: f64,
    sigma2_rob: f64,
    informative: &NormalComponent,
    sampling: &SamplingModel,
) -> Result<f64, BorrowingError> {
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(BorrowingError::Invalid {
            what: "borrowing strength must be positive and finite",
            value: strength,
        });
    }
    if !(sigma2_rob > informative.variance()) {
        return Err(BorrowingError::Invalid {
            what: "robustification variance must exceed the informative variance",
            value: sigma2_rob,
        });
    }
    let v2_inf = informative.variance() + sampling.variance();
    let v2_rob = sigma2_rob + sampling.variance();
    let ratio = (v2_rob / v2_inf).sqrt();
    let odds = strength / ratio;
    Ok(odds / (1.0 + odds))
}

/// One point of a borrowing-strength level set.
#[derive(Debug, Clone, Copy)]
pub struct LevelSetPoint {
    pub n0: f64,
    pub sigma2_rob: f64,
    pub weight: f64,
}

/// Weights matching `strength` for each robustification effective sample
/// size in `n0_list` (robust variance s²/n₀).
pub fn level_set(
    strength: f64,
    n0_list: &[f64],
    s: f64,
    informative: &NormalComponent,
    sampling: &SamplingModel,
) -> Result<Vec<LevelSetPoint>, BorrowingError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(BorrowingError::Invalid {
            what: "endpoint SD must be positive and finite",
            value: s,
        });
    }
    n0_list
        .iter()
        .map(|&n0| {
            if !(n0 > 0.0) {
                return Err(BorrowingError::Invalid {
                    what: "effective sample size must be positive",
                    value: n0,
                });
            }
            let sigma2_rob = s * s / n0;
            let weight = weight_for_strength(strength, sigma2_rob, informative, sampling)?;
            Ok(LevelSetPoint {
                n0,
                sigma2_rob,
                weight,
            })
        })
        .collect()
}

/// Inputs of the equipoise-drift elicitation routine.
#[derive(Debug, Clone, Copy)]
pub struct ElicitationSpec {
    /// Observed control response (as an offset from the informative mean)
    /// at which the posterior weight should equal one half.
    pub d_star: f64,
    /// Robustification SD chosen up front; a common default is 1000 x the
    /// endpoint SD.
    pub sigma_rob: f64,
    /// Robustification location; defaults to the informative mean.
    pub mu_rob: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct ElicitationResult {
    pub weight: f64,
    pub prior_odds: f64,
    pub strength: BorrowingStrength,
    /// Posterior weight re-evaluated at the equipoise point; always 0.5 up
    /// to floating-point error.
    pub verification_weight: f64,
    /// Set when the chosen robustification SD is not clearly flatter than
    /// the informative predictive SD (ratio below 10).
    pub low_ratio_warning: bool,
}

/// Solve for the prior weight that makes the posterior weight equal 0.5 at
/// the equipoise drift.
///
/// Inverts the exact weight update: Ω = f(x*|robust) / f(x*|informative) at
/// x* = μ_inf + d*.
pub fn elicit_prior_weight(
    spec: &ElicitationSpec,
    informative: &NormalComponent,
    sampling: &SamplingModel,
) -> Result<ElicitationResult, BorrowingError> {
    if !spec.d_star.is_finite() {
        return Err(BorrowingError::Invalid {
            what: "equipoise drift must be finite",
            value: spec.d_star,
        });
    }
    if !(spec.sigma_rob > 0.0 && spec.sigma_rob.is_finite()) {
        return Err(BorrowingError::Invalid {
            what: "robustification SD must be positive and finite",
            value: spec.sigma_rob,
        });
    }
    let mu_rob = spec.mu_rob.unwrap_or_else(|| informative.mean());
    let robust = NormalComponent::new(mu_rob, spec.sigma_rob * spec.sigma_rob)?;
    let x_star = informative.mean() + spec.d_star;
    let log_odds = log_prior_predictive(&robust, x_star, sampling)
        - log_prior_predictive(informative, x_star, sampling);
    let prior_odds = log_odds.exp();
    let weight = crate::numerics::expit(log_odds);
    let rmp = RobustMixturePrior::new(weight, *informative, robust)?;
    let strength = borrowing_strength(&rmp, sampling)?;
    let verification_weight = posterior_weight(&rmp, x_star, sampling);
    Ok(ElicitationResult {
        weight,
        prior_odds,
        strength,
        verification_weight,
        low_ratio_warning: PredictiveSpec::new(&rmp, sampling).ratio() < 10.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmp::posterior_log_odds;

    fn informative() -> NormalComponent {
        NormalComponent::new(0.0, 0.01).unwrap()
    }

    fn sampling() -> SamplingModel {
        SamplingModel::new(0.02).unwrap()
    }

    fn rmp(weight: f64, sigma2_rob: f64) -> RobustMixturePrior {
        RobustMixturePrior::new(
            weight,
            informative(),
            NormalComponent::new(0.0, sigma2_rob).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn strength_of_unit_information_anchor() {
        let b = borrowing_strength(&rmp(0.5, 1.0), &sampling()).unwrap();
        assert!((b.strength - 5.8310).abs() < 1e-4);
        assert!((b.reciprocal - 0.1715).abs() < 1e-4);
        assert!(b.exact);
        // equals the exponentiated posterior log-odds at zero drift
        let lo = posterior_log_odds(&rmp(0.5, 1.0), 0.0, &sampling()).unwrap();
        assert!((b.strength - lo.exp()).abs() < 1e-10);
    }

    #[test]
    fn strength_degenerate_weight() {
        assert!(borrowing_strength(&rmp(0.0, 1.0), &sampling()).is_err());
        assert!(borrowing_strength(&rmp(1.0, 1.0), &sampling()).is_err());
    }

    #[test]
    fn strength_equal_components_is_prior_odds() {
        // hypothetical R = 1: informative and robust identical
        let eq = RobustMixturePrior::new(0.5, informative(), informative()).unwrap();
        let b = borrowing_strength(&eq, &sampling()).unwrap();
        assert!((b.strength - 1.0).abs() < 1e-14);
    }

    #[test]
    fn strength_quarter_ess_row() {
        // n0 = 0.25 -> sigma2_rob = 4: B = (0.335/0.665) sqrt(4.02/0.03)
        let b = borrowing_strength(&rmp(0.335, 4.0), &sampling()).unwrap();
        assert!((b.strength - 5.83).abs() < 0.01, "{}", b.strength);
    }

    #[test]
    fn weight_for_strength_reproduces_published_pairs() {
        let s = sampling();
        let inf = informative();
        for (n0, want) in [(1.0, 0.500), (0.5, 0.415), (1.0 / 64.0, 0.112)] {
            let w = weight_for_strength(5.8310, 1.0 / n0, &inf, &s).unwrap();
            assert!((w - want).abs() < 1e-3, "n0={n0}: {w}");
        }
    }

    #[test]
    fn weight_for_strength_rejects_informative_robust() {
        assert!(weight_for_strength(5.0, 0.001, &informative(), &sampling()).is_err());
    }

    #[test]
    fn roundtrip_strength_weight() {
        let s = sampling();
        let inf = informative();
        for w in [0.05, 0.3, 0.5, 0.77, 0.99] {
            for s2 in [0.5, 1.0, 64.0, 1e6] {
                let prior = rmp(w, s2);
                let b = borrowing_strength(&prior, &s).unwrap();
                let back = weight_for_strength(b.strength, s2, &inf, &s).unwrap();
                assert!((back - w).abs() < 1e-14, "w={w}, s2={s2}: {back}");
            }
        }
    }

    #[test]
    fn level_set_published_weights() {
        let n0: Vec<f64> = (0..7).map(|k| 0.5f64.powi(k)).collect();
        let pts = level_set(5.8310, &n0, 1.0, &informative(), &sampling()).unwrap();
        let want = [0.500, 0.415, 0.335, 0.263, 0.201, 0.151, 0.112];
        for (p, w) in pts.iter().zip(want) {
            assert!((p.weight - w).abs() <= 1e-3, "n0={}: {}", p.n0, p.weight);
        }
        // all points share the strength within 1e-12
        let s = sampling();
        for p in &pts {
            let b = borrowing_strength(&rmp(p.weight, p.sigma2_rob), &s).unwrap();
            assert!((b.strength - 5.8310).abs() < 1e-11);
        }
    }

    #[test]
    fn level_set_singleton() {
        let pts = level_set(2.0, &[0.1], 1.0, &informative(), &sampling()).unwrap();
        assert_eq!(pts.len(), 1);
        let direct = weight_for_strength(2.0, 10.0, &informative(), &sampling()).unwrap();
        assert_eq!(pts[0].weight, direct);
    }

    #[test]
    fn level_set_profiles_agree_for_diffuse_members() {
        // posterior-weight profiles of same-strength pairs with variance
        // >= 100 stay within 1e-3 of each other over x in [-5, 5]
        let s = sampling();
        let inf = informative();
        let b = 5.8310;
        let variances = [100.0, 1e4, 1e8];
        let priors: Vec<_> = variances
            .iter()
            .map(|&v| {
                let w = weight_for_strength(b, v, &inf, &s).unwrap();
                rmp(w, v)
            })
            .collect();
        let mut x = -5.0;
        while x <= 5.0 {
            let w0 = posterior_weight(&priors[0], x, &s);
            for p in &priors[1..] {
                let w = posterior_weight(p, x, &s);
                assert!((w - w0).abs() <= 1e-3, "x={x}: {w} vs {w0}");
            }
            x += 0.05;
        }
    }

    #[test]
    fn elicit_zero_drift_gives_one_over_one_plus_ratio() {
        let spec = ElicitationSpec {
            d_star: 0.0,
            sigma_rob: 1000.0,
            mu_rob: None,
        };
        let r = elicit_prior_weight(&spec, &informative(), &sampling()).unwrap();
        let ratio = ((1000.0f64 * 1000.0 + 0.02) / 0.03).sqrt();
        assert!((r.weight - 1.0 / (1.0 + ratio)).abs() < 1e-12);
        assert!(!r.low_ratio_warning);
    }

    #[test]
    fn elicit_roundtrip_half_weight() {
        let spec = ElicitationSpec {
            d_star: 0.5,
            sigma_rob: 1000.0,
            mu_rob: None,
        };
        let r = elicit_prior_weight(&spec, &informative(), &sampling()).unwrap();
        assert!((r.verification_weight - 0.5).abs() < 1e-10);
    }

    #[test]
    fn elicit_monotone_in_equipoise_drift() {
        let mut last = 0.0;
        for i in 1..=10 {
            let spec = ElicitationSpec {
                d_star: 0.1 * i as f64,
                sigma_rob: 1000.0,
                mu_rob: None,
            };
            let r = elicit_prior_weight(&spec, &informative(), &sampling()).unwrap();
            assert!(r.weight > last, "d*={}: {}", 0.1 * i as f64, r.weight);
            last = r.weight;
        }
    }

    #[test]
    fn elicit_symmetric_in_drift_sign() {
        let pos = elicit_prior_weight(
            &ElicitationSpec {
                d_star: 0.4,
                sigma_rob: 1000.0,
                mu_rob: None,
            },
            &informative(),
            &sampling(),
        )
        .unwrap();
        let neg = elicit_prior_weight(
            &ElicitationSpec {
                d_star: -0.4,
                sigma_rob: 1000.0,
                mu_rob: None,
            },
            &informative(),
            &sampling(),
        )
        .unwrap();
        assert!((pos.weight - neg.weight).abs() < 1e-13);
    }

    #[test]
    fn elicit_flags_low_ratio() {
        let spec = ElicitationSpec {
            d_star: 0.2,
            sigma_rob: 0.3,
            mu_rob: None,
        };
        let r = elicit_prior_weight(&spec, &informative(), &sampling()).unwrap();
        assert!(r.low_ratio_warning);
    }
}

//! Posterior inference for the treatment difference and the trial success
//! rule.
//!
//! The treatment difference δ = θ_t − θ_c inherits a two-component normal
//! mixture posterior from the control-side RMP: the mixture weight comes
//! from the control update alone, while each δ component is the difference
//! of independent normal posteriors. Success is declared when
//! P(δ > 0 | data) strictly exceeds 1 − η.

use thiserror::Error;

use crate::numerics::{self, std_normal_cdf};
use crate::rmp::{
    conjugate_update, posterior_weight, two_normal_mixture_quantile, update_posterior,
    NormalComponent, RmpError, RobustMixturePrior, SamplingModel,
};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("{what} (got {value})")]
    Invalid { what: &'static str, value: f64 },
    #[error(transparent)]
    Rmp(#[from] RmpError),
}

/// Complete configuration of a two-arm hybrid-control trial.
#[derive(Debug, Clone, Copy)]
pub struct TrialDesign {
    n_c: f64,
    n_t: f64,
    s: f64,
    eta: f64,
    control_prior: RobustMixturePrior,
    treatment_prior: NormalComponent,
}

impl TrialDesign {
    /// `treatment_prior = None` defaults to the control robustification
    /// component, which is the usual choice when nothing is known about the
    /// treatment arm. Pass an explicit component to decouple the two.
    pub fn new(
        n_c: f64,
        n_t: f64,
        s: f64,
        eta: f64,
        control_prior: RobustMixturePrior,
        treatment_prior: Option<NormalComponent>,
    ) -> Result<Self, DesignError> {
        if !(n_c >= 1.0 && n_c.is_finite()) {
            return Err(DesignError::Invalid {
                what: "control arm size must be at least 1",
                value: n_c,
            });
        }
        if !(n_t >= 1.0 && n_t.is_finite()) {
            return Err(DesignError::Invalid {
                what: "treatment arm size must be at least 1",
                value: n_t,
            });
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(DesignError::Invalid {
                what: "endpoint SD must be positive and finite",
                value: s,
            });
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(DesignError::Invalid {
                what: "significance budget eta must lie in (0, 1)",
                value: eta,
            });
        }
        let treatment_prior = treatment_prior.unwrap_or(*control_prior.robust());
        Ok(Self {
            n_c,
            n_t,
            s,
            eta,
            control_prior,
            treatment_prior,
        })
    }

    pub fn n_c(&self) -> f64 {
        self.n_c
    }

    pub fn n_t(&self) -> f64 {
        self.n_t
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn control_prior(&self) -> &RobustMixturePrior {
        &self.control_prior
    }

    pub fn treatment_prior(&self) -> &NormalComponent {
        &self.treatment_prior
    }

    pub fn sigma2_c(&self) -> f64 {
        self.s * self.s / self.n_c
    }

    pub fn sigma2_t(&self) -> f64 {
        self.s * self.s / self.n_t
    }

    /// K = σ²_t / σ²_c, the inverse randomization ratio.
    pub fn variance_ratio(&self) -> f64 {
        self.n_c / self.n_t
    }

    pub fn control_sampling(&self) -> SamplingModel {
        SamplingModel::new(self.sigma2_c()).expect("validated at construction")
    }

    pub fn treatment_sampling(&self) -> SamplingModel {
        SamplingModel::new(self.sigma2_t()).expect("validated at construction")
    }

    /// Shorthand: informative location of the control prior.
    pub fn mu_inf(&self) -> f64 {
        self.control_prior.informative().mean()
    }
}

/// Two-component normal mixture posterior for δ = θ_t − θ_c.
///
/// The weight equals the control-side posterior weight and does not depend
/// on the observed treatment mean.
#[derive(Debug, Clone, Copy)]
pub struct DeltaPosterior {
    pub weight: f64,
    pub informative: NormalComponent,
    pub robust: NormalComponent,
}

impl DeltaPosterior {
    pub fn cdf(&self, t: f64) -> f64 {
        crate::rmp::two_normal_mixture_cdf(self.weight, &self.informative, &self.robust, t)
    }
}

/// Posterior for δ given observed arm means.
pub fn delta_posterior(design: &TrialDesign, x_c: f64, x_t: f64) -> DeltaPosterior {
    let control = update_posterior(design.control_prior(), x_c, &design.control_sampling());
    let treatment = conjugate_update(design.treatment_prior(), x_t, &design.treatment_sampling());
    let diff = |c: &NormalComponent| {
        NormalComponent::new(
            treatment.mean() - c.mean(),
            treatment.variance() + c.variance(),
        )
        .expect("difference of valid posteriors is valid")
    };
    DeltaPosterior {
        weight: control.weight,
        informative: diff(&control.informative),
        robust: diff(&control.robust),
    }
}

/// P(δ > 0) under a δ posterior.
pub fn prob_delta_positive(dp: &DeltaPosterior) -> f64 {
    let p_inf = std_normal_cdf(dp.informative.mean() / dp.informative.sd());
    let p_rob = std_normal_cdf(dp.robust.mean() / dp.robust.sd());
    dp.weight * p_inf + (1.0 - dp.weight) * p_rob
}

/// The strict success rule: P(δ > 0 | x_c, x_t) > 1 − η.
pub fn is_success(design: &TrialDesign, x_c: f64, x_t: f64) -> bool {
    prob_delta_positive(&delta_posterior(design, x_c, x_t)) > 1.0 - design.eta()
}

/// The unique treatment mean at which the success probability hits 1 − η;
/// success holds exactly for x_t above it.
///
/// P(δ > 0) is strictly increasing in x_t (the mixture weight depends only
/// on x_c and both component means increase with x_t), so the bracket can be
/// expanded geometrically until it straddles the threshold.
pub fn critical_treatment_mean(design: &TrialDesign, x_c: f64) -> f64 {
    let target = 1.0 - design.eta();
    let g = |x_t: f64| prob_delta_positive(&delta_posterior(design, x_c, x_t)) - target;
    let mut width = 10.0 * design.s();
    let mut lo = x_c - width;
    let mut hi = x_c + width;
    for _ in 0..200 {
        if g(lo) > 0.0 {
            width *= 2.0;
            lo = x_c - width;
        } else {
            break;
        }
    }
    for _ in 0..200 {
        if g(hi) < 0.0 {
            width *= 2.0;
            hi = x_c + width;
        } else {
            break;
        }
    }
    assert!(
        g(lo) <= 0.0 && g(hi) >= 0.0,
        "success threshold bracket failed to expand"
    );
    numerics::find_root_bracketed(g, lo, hi, 1e-10)
        .expect("bracketed success threshold must have a root")
}

/// Posterior median of δ (mixture quantile at one half).
pub fn posterior_median_delta(dp: &DeltaPosterior) -> f64 {
    two_normal_mixture_quantile(dp.weight, &dp.informative, &dp.robust, 0.5)
        .expect("median of a valid mixture always exists")
}

/// Posterior weight of the informative component given the observed control
/// mean; convenience re-export at the design level.
pub fn control_posterior_weight(design: &TrialDesign, x_c: f64) -> f64 {
    posterior_weight(design.control_prior(), x_c, &design.control_sampling())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::std_normal_quantile;

    fn nc(mean: f64, variance: f64) -> NormalComponent {
        NormalComponent::new(mean, variance).unwrap()
    }

    /// 3:1 hybrid-control reference design: n_c = 50, n_t = 150, s = 1,
    /// eta = 0.05, informative N(0, 0.01).
    fn design(omega: f64, sigma2_rob: f64) -> TrialDesign {
        let prior = RobustMixturePrior::new(omega, nc(0.0, 0.01), nc(0.0, sigma2_rob)).unwrap();
        TrialDesign::new(50.0, 150.0, 1.0, 0.05, prior, None).unwrap()
    }

    fn flat_design() -> TrialDesign {
        design(0.0, 1e300)
    }

    #[test]
    fn design_validation() {
        let prior = RobustMixturePrior::new(0.5, nc(0.0, 0.01), nc(0.0, 1.0)).unwrap();
        assert!(TrialDesign::new(0.0, 150.0, 1.0, 0.05, prior, None).is_err());
        assert!(TrialDesign::new(50.0, 150.0, -1.0, 0.05, prior, None).is_err());
        assert!(TrialDesign::new(50.0, 150.0, 1.0, 1.0, prior, None).is_err());
        let d = TrialDesign::new(50.0, 150.0, 1.0, 0.05, prior, None).unwrap();
        assert!((d.sigma2_c() - 0.02).abs() < 1e-15);
        assert!((d.sigma2_t() - 1.0 / 150.0).abs() < 1e-15);
        assert!((d.variance_ratio() - 1.0 / 3.0).abs() < 1e-15);
        // treatment prior defaults to the robustification component
        assert_eq!(d.treatment_prior(), d.control_prior().robust());
    }

    #[test]
    fn delta_posterior_flat_limit() {
        let d = flat_design();
        let dp = delta_posterior(&d, 0.1, 0.4);
        assert_eq!(dp.weight, 0.0);
        assert!((dp.robust.mean() - 0.3).abs() < 1e-12);
        assert!((dp.robust.variance() - (0.02 + 1.0 / 150.0)).abs() < 1e-12);
    }

    #[test]
    fn delta_posterior_full_borrowing() {
        let d = design(1.0, 1.0);
        let dp = delta_posterior(&d, 0.0, 0.31);
        assert_eq!(dp.weight, 1.0);
        // control side fully informative: posterior variance 1/150
        let want_var = 1.0 / 150.0 + (1.0 * (1.0 / 150.0)) / (1.0 + 1.0 / 150.0);
        assert!((dp.informative.variance() - want_var).abs() < 1e-12);
    }

    #[test]
    fn delta_posterior_reference_weight() {
        let d = design(0.5, 1.0);
        let dp = delta_posterior(&d, 0.0, 0.31);
        assert!((dp.weight - 0.8536).abs() < 1e-4);
        // informative delta component: treatment post minus control post
        let t_post = conjugate_update(d.treatment_prior(), 0.31, &d.treatment_sampling());
        assert!((dp.informative.mean() - t_post.mean()).abs() < 1e-12);
    }

    #[test]
    fn prob_positive_symmetry_and_quantile() {
        let sym = DeltaPosterior {
            weight: 0.4,
            informative: nc(0.0, 0.3),
            robust: nc(0.0, 2.0),
        };
        assert!((prob_delta_positive(&sym) - 0.5).abs() < 1e-14);
        let sd = 0.7f64;
        let single = DeltaPosterior {
            weight: 1.0,
            informative: nc(1.6448536 * sd, sd * sd),
            robust: nc(0.0, 1.0),
        };
        assert!((prob_delta_positive(&single) - 0.95).abs() < 1e-7);
        let tail = DeltaPosterior {
            weight: 1.0,
            informative: nc(-5.0 * sd, sd * sd),
            robust: nc(0.0, 1.0),
        };
        assert!((prob_delta_positive(&tail) - 2.8665e-7).abs() < 1e-10);
    }

    #[test]
    fn success_rule_basics() {
        let d = flat_design();
        assert!(is_success(&d, 0.0, 10.0));
        assert!(!is_success(&d, 0.3, 0.3));
    }

    #[test]
    fn flat_prior_success_threshold_closed_form() {
        let d = flat_design();
        let want = std_normal_quantile(0.95).unwrap() * (0.02f64 + 1.0 / 150.0).sqrt();
        let got = critical_treatment_mean(&d, 0.0);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        assert!((got - 0.2687).abs() < 1e-4);
        // shifting x_c shifts the threshold equally
        let shifted = critical_treatment_mean(&d, 1.3);
        assert!((shifted - (1.3 + want)).abs() < 1e-9);
    }

    #[test]
    fn borrowing_lowers_threshold_at_the_anchor() {
        let flat = flat_design();
        let full = design(1.0, 1.0);
        let t_flat = critical_treatment_mean(&flat, 0.0);
        let t_full = critical_treatment_mean(&full, 0.0);
        assert!(
            t_full < t_flat,
            "borrowing shrinks the control posterior: {t_full} !< {t_flat}"
        );
    }

    #[test]
    fn threshold_definition_roundtrip() {
        let d = design(0.5, 1.0);
        for x_c in [-0.4, 0.0, 0.7, 2.0] {
            let t = critical_treatment_mean(&d, x_c);
            assert!(is_success(&d, x_c, t + 1e-6));
            assert!(!is_success(&d, x_c, t - 1e-6));
        }
    }

    #[test]
    fn monotone_in_treatment_mean() {
        let d = design(0.5, 1.0);
        let mut last = 0.0;
        for i in 0..60 {
            let x_t = -1.5 + 0.05 * i as f64;
            let p = prob_delta_positive(&delta_posterior(&d, 0.2, x_t));
            if i > 0 {
                assert!(p > last, "not increasing at x_t={x_t}");
            }
            last = p;
        }
    }

    #[test]
    fn translation_equivariance() {
        // shifting data, prior locations and the treatment prior together
        // leaves the success probability unchanged
        let shift = 0.83;
        let base = design(0.5, 1.0);
        let prior = RobustMixturePrior::new(0.5, nc(shift, 0.01), nc(shift, 1.0)).unwrap();
        let moved = TrialDesign::new(50.0, 150.0, 1.0, 0.05, prior, None).unwrap();
        for (x_c, x_t) in [(0.0, 0.3), (-0.5, 0.1), (1.0, 1.4)] {
            let a = prob_delta_positive(&delta_posterior(&base, x_c, x_t));
            let b = prob_delta_positive(&delta_posterior(&moved, x_c + shift, x_t + shift));
            assert!((a - b).abs() < 1e-12, "({x_c},{x_t}): {a} vs {b}");
        }
    }

    #[test]
    fn median_single_and_symmetric() {
        let single = DeltaPosterior {
            weight: 1.0,
            informative: nc(0.42, 0.09),
            robust: nc(9.0, 1.0),
        };
        assert!((posterior_median_delta(&single) - 0.42).abs() < 1e-10);
        let sym = DeltaPosterior {
            weight: 0.5,
            informative: nc(-0.8, 0.25),
            robust: nc(0.8, 0.25),
        };
        assert!(posterior_median_delta(&sym).abs() < 1e-10);
    }

    #[test]
    fn median_matches_grid_inversion() {
        let d = design(0.5, 1.0);
        let dp = delta_posterior(&d, 0.0, 0.31);
        let med = posterior_median_delta(&dp);
        let (mut lo, mut hi) = (-2.0, 2.0);
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            if dp.cdf(m) < 0.5 {
                lo = m;
            } else {
                hi = m;
            }
        }
        assert!((med - 0.5 * (lo + hi)).abs() < 1e-8);
    }
}

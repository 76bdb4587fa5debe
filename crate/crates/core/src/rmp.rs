//! Normal robust mixture priors and their exact conjugate updates.
//!
//! A robust mixture prior (RMP) on the control mean combines an informative
//! component fitted to historical data with a flatter robustification
//! component. Observing the control mean updates both components by normal
//! conjugacy and re-weights them through the ratio of their prior predictive
//! densities. All density work happens in log space: robustification
//! variances up to 1e300 are legal inputs.

use thiserror::Error;

use crate::numerics::{self, expit, log_normal_density, std_normal_cdf};

#[derive(Debug, Error)]
pub enum RmpError {
    #[error("{what} (got {value})")]
    Invalid { what: &'static str, value: f64 },
    #[error(
        "robustification variance {robust} must be at least the informative variance {informative}"
    )]
    RobustNotFlatter { informative: f64, robust: f64 },
    #[error("posterior log-odds are undefined for a degenerate weight {weight}")]
    DegenerateWeight { weight: f64 },
}

/// A normal density used as prior component, posterior component or design
/// prior. The variance must be positive and finite (1e100 is finite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalComponent {
    mean: f64,
    variance: f64,
}

impl NormalComponent {
    pub fn new(mean: f64, variance: f64) -> Result<Self, RmpError> {
        if !mean.is_finite() {
            return Err(RmpError::Invalid {
                what: "component mean must be finite",
                value: mean,
            });
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(RmpError::Invalid {
                what: "component variance must be positive and finite",
                value: variance,
            });
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Sampling distribution of an observed arm mean: known variance s²/n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingModel {
    variance: f64,
}

impl SamplingModel {
    pub fn new(variance: f64) -> Result<Self, RmpError> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(RmpError::Invalid {
                what: "sampling variance must be positive and finite",
                value: variance,
            });
        }
        Ok(Self { variance })
    }

    /// Sampling model for the mean of `n` responses with individual SD `s`.
    pub fn from_counts(s: f64, n: f64) -> Result<Self, RmpError> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(RmpError::Invalid {
                what: "endpoint SD must be positive and finite",
                value: s,
            });
        }
        if !(n >= 1.0 && n.is_finite()) {
            return Err(RmpError::Invalid {
                what: "sample size must be at least 1",
                value: n,
            });
        }
        Self::new(s * s / n)
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Two-component normal mixture prior on the control mean.
///
/// `weight` is the prior probability of the informative component. The
/// robustification component must not be more informative than the
/// informative one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustMixturePrior {
    weight: f64,
    informative: NormalComponent,
    robust: NormalComponent,
}

impl RobustMixturePrior {
    pub fn new(
        weight: f64,
        informative: NormalComponent,
        robust: NormalComponent,
    ) -> Result<Self, RmpError> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(RmpError::Invalid {
                what: "mixture weight must lie in [0, 1]",
                value: weight,
            });
        }
        if robust.variance < informative.variance {
            return Err(RmpError::RobustNotFlatter {
                informative: informative.variance,
                robust: robust.variance,
            });
        }
        Ok(Self {
            weight,
            informative,
            robust,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn informative(&self) -> &NormalComponent {
        &self.informative
    }

    pub fn robust(&self) -> &NormalComponent {
        &self.robust
    }

    /// Prior mixture density evaluated at `theta` (log scale).
    pub fn log_density(&self, theta: f64) -> f64 {
        match self.weight {
            0.0 => log_normal_density(theta, self.robust.mean, self.robust.variance),
            1.0 => log_normal_density(theta, self.informative.mean, self.informative.variance),
            w => numerics::log_sum_exp(&[
                w.ln()
                    + log_normal_density(theta, self.informative.mean, self.informative.variance),
                (1.0 - w).ln() + log_normal_density(theta, self.robust.mean, self.robust.variance),
            ]),
        }
    }
}

/// Posterior mixture for the control mean after observing `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorMixture {
    pub weight: f64,
    pub informative: NormalComponent,
    pub robust: NormalComponent,
}

impl PosteriorMixture {
    /// Mixture CDF at `t`.
    pub fn cdf(&self, t: f64) -> f64 {
        two_normal_mixture_cdf(self.weight, &self.informative, &self.robust, t)
    }

    /// Mixture quantile for `p` in (0, 1), by bracketed root search.
    pub fn quantile(&self, p: f64) -> Result<f64, RmpError> {
        two_normal_mixture_quantile(self.weight, &self.informative, &self.robust, p)
    }
}

pub(crate) fn two_normal_mixture_cdf(
    weight: f64,
    first: &NormalComponent,
    second: &NormalComponent,
    t: f64,
) -> f64 {
    let a = std_normal_cdf((t - first.mean) / first.sd());
    let b = std_normal_cdf((t - second.mean) / second.sd());
    weight * a + (1.0 - weight) * b
}

pub(crate) fn two_normal_mixture_quantile(
    weight: f64,
    first: &NormalComponent,
    second: &NormalComponent,
    p: f64,
) -> Result<f64, RmpError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(RmpError::Invalid {
            what: "quantile level must lie strictly inside (0, 1)",
            value: p,
        });
    }
    let max_sd = first.sd().max(second.sd());
    let lo = first.mean.min(second.mean) - 12.0 * max_sd;
    let hi = first.mean.max(second.mean) + 12.0 * max_sd;
    let f = |t: f64| two_normal_mixture_cdf(weight, first, second, t) - p;
    // cannot fail for a valid mixture: the CDF is continuous and spans p
    let root = numerics::find_root_bracketed(f, lo, hi, 1e-13 * (1.0 + max_sd))
        .expect("mixture quantile bracket must contain the root");
    Ok(root)
}

/// Normal-normal conjugate update of a single component.
///
/// Computed through the shrinkage factor k = σ²_prior / (σ²_prior + σ²_c) so
/// that near-flat priors (variance 1e300) stay free of overflow.
pub fn conjugate_update(
    prior: &NormalComponent,
    x: f64,
    sampling: &SamplingModel,
) -> NormalComponent {
    let k = prior.variance / (prior.variance + sampling.variance);
    let mean = k * x + (1.0 - k) * prior.mean;
    let variance = k * sampling.variance;
    NormalComponent { mean, variance }
}

/// Log prior predictive density of the observed mean under one component:
/// normal with the component mean and variance inflated by the sampling
/// variance.
pub fn log_prior_predictive(comp: &NormalComponent, x: f64, sampling: &SamplingModel) -> f64 {
    log_normal_density(x, comp.mean, comp.variance + sampling.variance)
}

/// Derived prior predictive variances and their SD ratio R = v_rob / v_inf.
#[derive(Debug, Clone, Copy)]
pub struct PredictiveSpec {
    pub v2_informative: f64,
    pub v2_robust: f64,
}

impl PredictiveSpec {
    pub fn new(rmp: &RobustMixturePrior, sampling: &SamplingModel) -> Self {
        Self {
            v2_informative: rmp.informative.variance + sampling.variance,
            v2_robust: rmp.robust.variance + sampling.variance,
        }
    }

    /// R = v_rob / v_inf > 1 whenever the robust component is flatter.
    pub fn ratio(&self) -> f64 {
        (self.v2_robust / self.v2_informative).sqrt()
    }
}

/// Posterior log-odds of the informative component,
/// log Ω̃ = log Ω + log f(x | informative) − log f(x | robust).
pub fn posterior_log_odds(
    rmp: &RobustMixturePrior,
    x: f64,
    sampling: &SamplingModel,
) -> Result<f64, RmpError> {
    if rmp.weight == 0.0 || rmp.weight == 1.0 {
        return Err(RmpError::DegenerateWeight { weight: rmp.weight });
    }
    let log_prior_odds = (rmp.weight / (1.0 - rmp.weight)).ln();
    Ok(log_prior_odds + log_predictive_gap(rmp, x, sampling))
}

fn log_predictive_gap(rmp: &RobustMixturePrior, x: f64, sampling: &SamplingModel) -> f64 {
    log_prior_predictive(&rmp.informative, x, sampling)
        - log_prior_predictive(&rmp.robust, x, sampling)
}

/// Posterior weight of the informative component. Degenerate prior weights
/// pass through exactly.
pub fn posterior_weight(rmp: &RobustMixturePrior, x: f64, sampling: &SamplingModel) -> f64 {
    match rmp.weight {
        0.0 => 0.0,
        1.0 => 1.0,
        _ => expit(
            posterior_log_odds(rmp, x, sampling).expect("interior weight has defined log-odds"),
        ),
    }
}

/// Full posterior mixture: conjugate component updates plus weight update.
pub fn update_posterior(
    rmp: &RobustMixturePrior,
    x: f64,
    sampling: &SamplingModel,
) -> PosteriorMixture {
    PosteriorMixture {
        weight: posterior_weight(rmp, x, sampling),
        informative: conjugate_update(&rmp.informative, x, sampling),
        robust: conjugate_update(&rmp.robust, x, sampling),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nc(mean: f64, variance: f64) -> NormalComponent {
        NormalComponent::new(mean, variance).unwrap()
    }

    /// Reference trial scale: s = 1, n_c = 50, n_inf = 100.
    fn sampling() -> SamplingModel {
        SamplingModel::new(0.02).unwrap()
    }

    fn uip_rmp(weight: f64) -> RobustMixturePrior {
        RobustMixturePrior::new(weight, nc(0.0, 0.01), nc(0.0, 1.0)).unwrap()
    }

    #[test]
    fn construction_guards() {
        assert!(NormalComponent::new(0.0, 0.0).is_err());
        assert!(NormalComponent::new(0.0, -1.0).is_err());
        assert!(NormalComponent::new(f64::NAN, 1.0).is_err());
        assert!(NormalComponent::new(0.0, 1e300).is_ok());
        assert!(RobustMixturePrior::new(0.5, nc(0.0, 1.0), nc(0.0, 0.5)).is_err());
        assert!(RobustMixturePrior::new(1.2, nc(0.0, 1.0), nc(0.0, 2.0)).is_err());
        assert!(SamplingModel::from_counts(1.0, 0.5).is_err());
    }

    #[test]
    fn conjugate_flat_prior_limit() {
        let post = conjugate_update(&nc(0.0, 1e300), 0.7, &sampling());
        assert!((post.mean() - 0.7).abs() < 1e-12);
        assert!((post.variance() - 0.02).abs() < 1e-14);
    }

    #[test]
    fn conjugate_equal_precision_average() {
        let post = conjugate_update(&nc(0.0, 0.02), 1.0, &sampling());
        assert!((post.mean() - 0.5).abs() < 1e-15);
        assert!((post.variance() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn conjugate_precision_weighted() {
        // prior N(0, 0.01), x = 0.3, sampling 0.02
        let post = conjugate_update(&nc(0.0, 0.01), 0.3, &sampling());
        assert!((post.mean() - 0.1).abs() < 1e-15);
        assert!((post.variance() - 1.0 / 150.0).abs() < 1e-15);
    }

    #[test]
    fn conjugate_precision_additivity() {
        let prior = nc(0.3, 0.07);
        let post = conjugate_update(&prior, -0.2, &sampling());
        let precision = 1.0 / prior.variance() + 1.0 / 0.02;
        assert!((1.0 / post.variance() - precision).abs() < 1e-9);
    }

    #[test]
    fn predictive_mode_value() {
        let comp = nc(0.4, 0.09);
        let v2 = 0.09 + 0.02;
        let at_mode = log_prior_predictive(&comp, 0.4, &sampling());
        assert!((at_mode - (-0.5 * (2.0 * std::f64::consts::PI * v2).ln())).abs() < 1e-14);
        // symmetric around the mean
        let a = log_prior_predictive(&comp, 0.4 + 0.37, &sampling());
        let b = log_prior_predictive(&comp, 0.4 - 0.37, &sampling());
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn predictive_direct_density() {
        let comp = nc(0.0, 1.0);
        let got = log_prior_predictive(&comp, 1.0, &sampling());
        let want = log_normal_density(1.0, 0.0, 1.02);
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn log_odds_zero_drift_anchor() {
        // R = sqrt(1.02 / 0.03) = sqrt(34); prior odds 1
        let rmp = uip_rmp(0.5);
        let lo = posterior_log_odds(&rmp, 0.0, &sampling()).unwrap();
        assert!((lo - 0.5 * 34.0f64.ln()).abs() < 1e-12);
        assert!((lo.exp() - 5.830951894845301).abs() < 1e-10);
    }

    #[test]
    fn log_odds_identical_components() {
        let rmp = RobustMixturePrior::new(0.3, nc(0.2, 0.5), nc(0.2, 0.5)).unwrap();
        for x in [-3.0, 0.0, 0.2, 7.0] {
            let lo = posterior_log_odds(&rmp, x, &sampling()).unwrap();
            assert!((lo - (0.3f64 / 0.7).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn log_odds_explicit_formula_at_large_drift() {
        let rmp = uip_rmp(0.5);
        let lo = posterior_log_odds(&rmp, 5.0, &sampling()).unwrap();
        let want = 0.5 * 34.0f64.ln() - 25.0 / (2.0 * 0.03) + 25.0 / (2.0 * 1.02);
        assert!((lo - want).abs() < 1e-9, "{lo} vs {want}");
    }

    #[test]
    fn log_odds_degenerate_weight_errors() {
        assert!(posterior_log_odds(&uip_rmp(0.0), 0.0, &sampling()).is_err());
        assert!(posterior_log_odds(&uip_rmp(1.0), 0.0, &sampling()).is_err());
    }

    #[test]
    fn weight_endpoints_exact() {
        for x in [-4.0, 0.0, 3.0, 60.0] {
            assert_eq!(posterior_weight(&uip_rmp(1.0), x, &sampling()), 1.0);
            assert_eq!(posterior_weight(&uip_rmp(0.0), x, &sampling()), 0.0);
        }
    }

    #[test]
    fn weight_zero_drift_value() {
        let w = posterior_weight(&uip_rmp(0.5), 0.0, &sampling());
        let r = 34.0f64.sqrt();
        assert!((w - r / (1.0 + r)).abs() < 1e-12);
        assert!((w - 0.8536).abs() < 1e-4);
    }

    #[test]
    fn weight_update_linear_space_consistency() {
        // where linear-space predictive densities are representable, the
        // direct weight formula must agree with the log-space path
        let s = sampling();
        let rmp = uip_rmp(0.35);
        for x in [-2.0, -0.3, 0.0, 0.4, 1.5, 3.0] {
            let fi = log_prior_predictive(rmp.informative(), x, &s).exp();
            let fr = log_prior_predictive(rmp.robust(), x, &s).exp();
            let direct = 0.35 * fi / (0.35 * fi + 0.65 * fr);
            let got = posterior_weight(&rmp, x, &s);
            assert!((got - direct).abs() < 1e-12, "x={x}: {got} vs {direct}");
        }
    }

    #[test]
    fn update_posterior_components() {
        // UIP, weight 0.5, x = 0
        let s = sampling();
        let post = update_posterior(&uip_rmp(0.5), 0.0, &s);
        assert!((post.weight - 0.8536).abs() < 1e-4);
        assert!((post.informative.mean() - 0.0).abs() < 1e-15);
        assert!((post.informative.variance() - 1.0 / 150.0).abs() < 1e-15);
        assert!((post.robust.mean() - 0.0).abs() < 1e-15);
        assert!((post.robust.variance() - 0.02 / 1.02).abs() < 1e-15);
    }

    #[test]
    fn update_posterior_degenerate_cases() {
        let s = sampling();
        // weight 1: informative conjugate posterior only
        let post = update_posterior(&uip_rmp(1.0), 0.3, &s);
        assert_eq!(post.weight, 1.0);
        let direct = conjugate_update(&nc(0.0, 0.01), 0.3, &s);
        assert_eq!(post.informative, direct);
        // weight 0 with near-flat robust component: posterior ~ N(x, sigma2_c)
        let flat = RobustMixturePrior::new(0.0, nc(0.0, 0.01), nc(0.0, 1e300)).unwrap();
        let post = update_posterior(&flat, 0.3, &s);
        assert_eq!(post.weight, 0.0);
        assert!((post.robust.mean() - 0.3).abs() < 1e-12);
        assert!((post.robust.variance() - 0.02).abs() < 1e-14);
    }

    #[test]
    fn posterior_component_variances_shrink() {
        let s = sampling();
        let rmp = uip_rmp(0.4);
        let post = update_posterior(&rmp, 0.8, &s);
        assert!(post.informative.variance() < rmp.informative().variance());
        assert!(post.robust.variance() < rmp.robust().variance());
    }

    #[test]
    fn mixture_cdf_limits_and_symmetry() {
        let pm = PosteriorMixture {
            weight: 0.5,
            informative: nc(0.0, 1.0),
            robust: nc(2.0, 1.0),
        };
        assert!(pm.cdf(-60.0) < 1e-15);
        assert!((pm.cdf(60.0) - 1.0).abs() < 1e-15);
        assert!((pm.cdf(1.0) - 0.5).abs() < 1e-14);
        // equal components collapse to a single normal CDF
        let single = PosteriorMixture {
            weight: 0.3,
            informative: nc(0.7, 0.2),
            robust: nc(0.7, 0.2),
        };
        assert!((single.cdf(1.0) - std_normal_cdf((1.0 - 0.7) / 0.2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn mixture_quantile_basics() {
        let single = PosteriorMixture {
            weight: 1.0,
            informative: nc(0.7, 0.2),
            robust: nc(-1.0, 0.4),
        };
        assert!((single.quantile(0.5).unwrap() - 0.7).abs() < 1e-10);
        let symmetric = PosteriorMixture {
            weight: 0.5,
            informative: nc(-1.3, 0.5),
            robust: nc(1.3, 0.5),
        };
        assert!(symmetric.quantile(0.5).unwrap().abs() < 1e-10);
        assert!(symmetric.quantile(0.0).is_err());
    }

    #[test]
    fn mixture_quantile_matches_grid_scan() {
        // reference posterior shape: weight 0.8536, N(0, 1/150), N(0.29, 0.0196)
        let pm = PosteriorMixture {
            weight: 0.8536,
            informative: nc(0.0, 1.0 / 150.0),
            robust: nc(0.29, 0.0196),
        };
        let q = pm.quantile(0.5).unwrap();
        // fine-grid CDF scan oracle
        let (mut lo, mut hi) = (-2.0, 2.0);
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            if pm.cdf(m) < 0.5 {
                lo = m;
            } else {
                hi = m;
            }
        }
        assert!((q - 0.5 * (lo + hi)).abs() < 1e-8);
        assert!((pm.cdf(q) - 0.5).abs() < 1e-10);
    }
}

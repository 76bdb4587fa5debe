//! Deterministic operating characteristics by quadrature.
//!
//! The success indicator makes the raw double integral over (x_c, x_t)
//! kinked, so every probability here is computed by first inverting the
//! success rule in the treatment direction: for each control value there is
//! a unique critical treatment mean, success is a normal tail probability
//! beyond it, and the remaining integral over the control mean is smooth.
//!
//! All internal arithmetic is carried out in *offset* coordinates
//! (a = x_c − θ_c, b = x_t − θ_t) with precomputed shrinkage differences, so
//! drifts and design-prior locations up to 1e150 and prior variances up to
//! 1e300 stay well-conditioned; absolute coordinates would lose the
//! sub-sigma structure to floating-point spacing long before that.

use rayon::prelude::*;
use thiserror::Error;

use crate::delta::TrialDesign;
use crate::numerics::{
    self, expit, integrate_against_normal, integrate_interval, log_normal_density, std_normal_cdf,
    NumericsError, QuadratureSpec,
};
use crate::rmp::{two_normal_mixture_quantile, NormalComponent, RobustMixturePrior};

/// Comparisons against nominal levels treat values this close to the level
/// as on the boundary, so exactly-nominal designs report an empty sweet
/// spot instead of sign noise.
const NOMINAL_MARGIN: f64 = 1e-8;

/// Tolerance floor for outer (design-prior) integrals; the inner quadrature
/// leaves ~1e-9 noise on each alpha value, and adaptive subdivision below
/// that floor would chase noise.
const OUTER_TOL_FLOOR: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum OcError {
    #[error("{what} (got {value})")]
    Invalid { what: &'static str, value: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A hypothesised truth: drift of the control mean from the informative
/// location, plus the true treatment effect.
#[derive(Debug, Clone, Copy)]
pub struct DriftScenario {
    pub drift: f64,
    pub delta_true: f64,
}

impl DriftScenario {
    pub fn null(drift: f64) -> Self {
        Self {
            drift,
            delta_true: 0.0,
        }
    }

    pub fn with_effect(drift: f64, delta_true: f64) -> Self {
        Self { drift, delta_true }
    }

    /// True control mean θ_c = μ_inf + D.
    pub fn control_mean(&self, design: &TrialDesign) -> f64 {
        design.mu_inf() + self.drift
    }

    /// True treatment mean θ_t = θ_c + δ_true.
    pub fn treatment_mean(&self, design: &TrialDesign) -> f64 {
        self.control_mean(design) + self.delta_true
    }
}

/// Design prior over the true common control mean used for averaging
/// operating characteristics.
#[derive(Debug, Clone)]
pub enum DesignPrior {
    PointMass(f64),
    Normal { mean: f64, variance: f64 },
    Rmp(RobustMixturePrior),
    TruncatedFlat { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SweetSpot {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

#[derive(Debug, Clone)]
pub struct SweetSpotResult {
    /// Widest qualifying interval; all-zero when none exists.
    pub widest: SweetSpot,
    /// Every disjoint qualifying interval, in drift order.
    pub all: Vec<SweetSpot>,
}

/// Aggregate operating characteristics of one design.
#[derive(Debug, Clone)]
pub struct OCResult {
    pub alpha: f64,
    pub power: f64,
    pub alpha_avg: f64,
    pub alpha_max: f64,
    pub sweet_spot: SweetSpot,
}

#[derive(Debug, Clone, Copy)]
pub struct EstimationMetrics {
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
}

/// One row of an operating-characteristics curve.
#[derive(Debug, Clone, Copy)]
pub struct OcPoint {
    pub drift: f64,
    pub alpha: f64,
    pub power: f64,
    pub mean_posterior_weight: f64,
}

enum WeightRule {
    Fixed(f64),
    LogOdds { log_prior_odds: f64 },
}

/// Success-probability kernel for one (design, scenario) pair, parametrised
/// by sampling offsets a = x_c − θ_c and b = x_t − θ_t.
struct Engine {
    target: f64,
    s: f64,
    sigma_c: f64,
    sigma_t: f64,
    drift: f64,
    /// μ_inf − μ_rob; x_c − μ_rob = (D + a) + this.
    mu_gap: f64,
    v2_inf: f64,
    v2_rob: f64,
    weight: WeightRule,
    k_t: f64,
    k_inf: f64,
    k_rob: f64,
    base_inf: f64,
    base_rob: f64,
    sd_inf: f64,
    sd_rob: f64,
}

impl Engine {
    fn new(design: &TrialDesign, scenario: &DriftScenario) -> Self {
        let s2c = design.sigma2_c();
        let s2t = design.sigma2_t();
        let cp = design.control_prior();
        let tp = design.treatment_prior();
        let s2_inf = cp.informative().variance();
        let s2_rob = cp.robust().variance();
        let s2_tp = tp.variance();

        let k_t = s2_tp / (s2_tp + s2t);
        let k_inf = s2_inf / (s2_inf + s2c);
        let k_rob = s2_rob / (s2_rob + s2c);
        // k_t − k_comp without subtracting near-equal shrinkages; divisions
        // are sequential so the double product cannot overflow
        let dk = |s2_prior: f64| (s2_tp * s2c - s2_prior * s2t) / (s2_tp + s2t) / (s2_prior + s2c);
        let theta_c = scenario.control_mean(design);
        let base = |prior: &NormalComponent| {
            theta_c * dk(prior.variance())
                + k_t * scenario.delta_true
                + (s2t / (s2_tp + s2t)) * tp.mean()
                - (s2c / (prior.variance() + s2c)) * prior.mean()
        };
        let weight = match cp.weight() {
            w @ (0.0 | 1.0) => WeightRule::Fixed(w),
            w => WeightRule::LogOdds {
                log_prior_odds: (w / (1.0 - w)).ln(),
            },
        };
        Self {
            target: 1.0 - design.eta(),
            s: design.s(),
            sigma_c: s2c.sqrt(),
            sigma_t: s2t.sqrt(),
            drift: scenario.drift,
            mu_gap: cp.informative().mean() - cp.robust().mean(),
            v2_inf: s2_inf + s2c,
            v2_rob: s2_rob + s2c,
            weight,
            k_t,
            k_inf,
            k_rob,
            base_inf: base(cp.informative()),
            base_rob: base(cp.robust()),
            sd_inf: (k_t * s2t + k_inf * s2c).sqrt(),
            sd_rob: (k_t * s2t + k_rob * s2c).sqrt(),
        }
    }

    /// Posterior weight of the informative component at control offset `a`.
    fn posterior_weight(&self, a: f64) -> f64 {
        match self.weight {
            WeightRule::Fixed(w) => w,
            WeightRule::LogOdds { log_prior_odds } => {
                let d = self.drift + a;
                let log_odds = log_prior_odds + log_normal_density(d, 0.0, self.v2_inf)
                    - log_normal_density(d + self.mu_gap, 0.0, self.v2_rob);
                expit(log_odds)
            }
        }
    }

    fn delta_means(&self, a: f64, b: f64) -> (f64, f64) {
        (
            self.base_inf + self.k_t * b - self.k_inf * a,
            self.base_rob + self.k_t * b - self.k_rob * a,
        )
    }

    /// P(δ > 0 | offsets).
    fn success_probability(&self, a: f64, b: f64) -> f64 {
        let w = self.posterior_weight(a);
        let (m_inf, m_rob) = self.delta_means(a, b);
        w * std_normal_cdf(m_inf / self.sd_inf) + (1.0 - w) * std_normal_cdf(m_rob / self.sd_rob)
    }

    /// Treatment offset at which the success probability hits the target;
    /// strictly increasing in b, so geometric bracket expansion always works.
    fn critical_offset(&self, a: f64) -> f64 {
        let g = |b: f64| self.success_probability(a, b) - self.target;
        let mut width = 10.0 * self.s;
        let mut lo = -width;
        let mut hi = width;
        for _ in 0..200 {
            if g(lo) > 0.0 {
                width *= 2.0;
                lo = -width;
            } else {
                break;
            }
        }
        for _ in 0..200 {
            if g(hi) < 0.0 {
                width *= 2.0;
                hi = width;
            } else {
                break;
            }
        }
        assert!(
            g(lo) <= 0.0 && g(hi) >= 0.0,
            "critical treatment offset bracket failed to expand"
        );
        numerics::find_root_bracketed(g, lo, hi, 1e-10)
            .expect("bracketed threshold must have a root")
    }

    /// P(success | control offset a) = tail probability of the treatment
    /// sampling noise beyond the critical offset.
    fn success_given_control(&self, a: f64) -> f64 {
        std_normal_cdf(-self.critical_offset(a) / self.sigma_t)
    }
}

/// Probability of trial success under the scenario's true means.
pub fn success_probability(
    design: &TrialDesign,
    scenario: &DriftScenario,
    quad: &QuadratureSpec,
) -> Result<f64, OcError> {
    let engine = Engine::new(design, scenario);
    let p = integrate_against_normal(
        |a| engine.success_given_control(a),
        0.0,
        engine.sigma_c,
        quad,
    )?;
    Ok(p.clamp(0.0, 1.0))
}

/// Type I error α(D): success probability when both true means equal
/// μ_inf + D.
pub fn type_one_error(
    design: &TrialDesign,
    drift: f64,
    quad: &QuadratureSpec,
) -> Result<f64, OcError> {
    success_probability(design, &DriftScenario::null(drift), quad)
}

/// Power at drift D under the target effect δ*.
pub fn power(
    design: &TrialDesign,
    drift: f64,
    delta_star: f64,
    quad: &QuadratureSpec,
) -> Result<f64, OcError> {
    if !(delta_star >= 0.0) {
        return Err(OcError::Invalid {
            what: "target treatment effect must be nonnegative",
            value: delta_star,
        });
    }
    success_probability(design, &DriftScenario::with_effect(drift, delta_star), quad)
}

/// Average posterior weight of the informative component over the control
/// sampling distribution at drift D.
pub fn mean_posterior_weight(
    design: &TrialDesign,
    drift: f64,
    quad: &QuadratureSpec,
) -> Result<f64, OcError> {
    let engine = Engine::new(design, &DriftScenario::null(drift));
    let w = integrate_against_normal(|a| engine.posterior_weight(a), 0.0, engine.sigma_c, quad)?;
    Ok(w.clamp(0.0, 1.0))
}

/// Type I error averaged over a design prior for the true common mean.
pub fn average_type_one_error(
    design: &TrialDesign,
    prior: &DesignPrior,
    quad: &QuadratureSpec,
) -> Result<f64, OcError> {
    let outer_tol = quad.abs_tol.max(OUTER_TOL_FLOOR);
    let avg = match prior {
        DesignPrior::PointMass(h) => type_one_error(design, h - design.mu_inf(), quad)?,
        DesignPrior::Normal { mean, variance } => {
            if !(*variance > 0.0 && variance.is_finite()) {
                return Err(OcError::Invalid {
                    what: "design-prior variance must be positive and finite",
                    value: *variance,
                });
            }
            average_over_normal(design, *mean, variance.sqrt(), outer_tol, quad)?
        }
        DesignPrior::Rmp(rmp) => {
            let w = rmp.weight();
            let inf = rmp.informative();
            let rob = rmp.robust();
            let a_inf = if w > 0.0 {
                average_over_normal(design, inf.mean(), inf.sd(), outer_tol, quad)?
            } else {
                0.0
            };
            let a_rob = if w < 1.0 {
                average_over_normal(design, rob.mean(), rob.sd(), outer_tol, quad)?
            } else {
                0.0
            };
            w * a_inf + (1.0 - w) * a_rob
        }
        DesignPrior::TruncatedFlat { lo, hi } => {
            if !(hi > lo) {
                return Err(OcError::Invalid {
                    what: "truncated-flat design prior requires lo < hi",
                    value: hi - lo,
                });
            }
            let f = fallible_alpha(design, quad);
            let integral = integrate_interval(
                &|h| f(h),
                *lo,
                *hi,
                outer_tol * (hi - lo),
                quad.max_subdivisions,
            )?;
            check_alpha_failures(integral)?;
            integral / (hi - lo)
        }
    };
    Ok(avg.clamp(0.0, 1.0))
}

fn average_over_normal(
    design: &TrialDesign,
    mean: f64,
    sd: f64,
    outer_tol: f64,
    quad: &QuadratureSpec,
) -> Result<f64, OcError> {
    let f = fallible_alpha(design, quad);
    let spec = QuadratureSpec {
        scheme: numerics::QuadScheme::Adaptive,
        abs_tol: outer_tol,
        max_subdivisions: quad.max_subdivisions,
    };
    let avg = integrate_against_normal(&f, mean, sd, &spec)?;
    check_alpha_failures(avg)?;
    Ok(avg)
}

/// Alpha as a plain closure for use inside integrators; inner failures
/// surface as NaN and are converted back to an error afterwards.
fn fallible_alpha<'a>(
    design: &'a TrialDesign,
    quad: &'a QuadratureSpec,
) -> impl Fn(f64) -> f64 + 'a {
    move |h: f64| type_one_error(design, h - design.mu_inf(), quad).unwrap_or(f64::NAN)
}

fn check_alpha_failures(value: f64) -> Result<(), OcError> {
    if value.is_nan() {
        return Err(OcError::Numerics(NumericsError::NonConvergence {
            what: "inner type-one-error quadrature inside a design-prior average",
        }));
    }
    Ok(())
}

/// Grid maximum of α over a drift range, refined by golden-section search
/// around the best grid point.
pub fn max_type_one_error(
    design: &TrialDesign,
    range: (f64, f64),
    step: f64,
    quad: &QuadratureSpec,
) -> Result<(f64, f64), OcError> {
    let (lo, hi) = range;
    if !(hi > lo) {
        return Err(OcError::Invalid {
            what: "drift range must satisfy lo < hi",
            value: hi - lo,
        });
    }
    if !(step > 0.0) {
        return Err(OcError::Invalid {
            what: "grid step must be positive",
            value: step,
        });
    }
    let grid = drift_grid(lo, hi, step);
    let values = grid
        .par_iter()
        .map(|&d| type_one_error(design, d, quad))
        .collect::<Result<Vec<_>, _>>()?;
    let (best, _) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is nonempty");
    let a = if best == 0 { lo } else { grid[best - 1] };
    let b = if best == grid.len() - 1 {
        hi
    } else {
        grid[best + 1]
    };
    let f = |d: f64| type_one_error(design, d, quad).unwrap_or(f64::NEG_INFINITY);
    let (arg, val) = golden_section_max(f, a, b, 1e-7);
    if val == f64::NEG_INFINITY {
        return Err(OcError::Numerics(NumericsError::NonConvergence {
            what: "type-one-error evaluation during golden-section refinement",
        }));
    }
    Ok((val, arg))
}

fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let m = 0.5 * (a + b);
    (m, f(m))
}

/// The drift interval(s) where α stays strictly below `nominal_alpha` while
/// power stays strictly above `nominal_power`.
///
/// Grid scan with bisection refinement of every boundary crossing. Values
/// within `1e-8` of a nominal level count as on the boundary, so an exactly
/// nominal design yields an empty result.
pub fn sweet_spot(
    design: &TrialDesign,
    delta_star: f64,
    nominal_alpha: f64,
    nominal_power: f64,
    range: (f64, f64),
    step: f64,
    quad: &QuadratureSpec,
) -> Result<SweetSpotResult, OcError> {
    for (what, v) in [
        ("nominal alpha must lie in (0, 1)", nominal_alpha),
        ("nominal power must lie in (0, 1)", nominal_power),
    ] {
        if !(v > 0.0 && v < 1.0) {
            return Err(OcError::Invalid { what, value: v });
        }
    }
    let (lo, hi) = range;
    if !(hi > lo && step > 0.0) {
        return Err(OcError::Invalid {
            what: "sweet-spot scan needs lo < hi and a positive step",
            value: step,
        });
    }
    let grid = drift_grid(lo, hi, step);
    let flags = grid
        .par_iter()
        .map(|&d| -> Result<bool, OcError> {
            let a = type_one_error(design, d, quad)?;
            let p = power(design, d, delta_star, quad)?;
            Ok(a < nominal_alpha - NOMINAL_MARGIN && p > nominal_power + NOMINAL_MARGIN)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let inside = |d: f64| -> Result<bool, OcError> {
        let a = type_one_error(design, d, quad)?;
        let p = power(design, d, delta_star, quad)?;
        Ok(a < nominal_alpha - NOMINAL_MARGIN && p > nominal_power + NOMINAL_MARGIN)
    };
    let mut all = Vec::new();
    let mut i = 0;
    while i < grid.len() {
        if !flags[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < grid.len() && flags[j + 1] {
            j += 1;
        }
        // refine the left edge between grid[i-1] (outside) and grid[i]
        let left = if i == 0 {
            grid[0]
        } else {
            bisect_boundary(&inside, grid[i - 1], grid[i])?
        };
        let right = if j == grid.len() - 1 {
            grid[j]
        } else {
            // inside at grid[j], outside at grid[j+1]
            let flipped = |d: f64| inside(d).map(|b| !b);
            bisect_boundary(&flipped, grid[j], grid[j + 1])?
        };
        all.push(SweetSpot {
            lo: left,
            hi: right,
            width: right - left,
        });
        i = j + 1;
    }
    let widest = all
        .iter()
        .cloned()
        .max_by(|a, b| a.width.total_cmp(&b.width))
        .unwrap_or_default();
    Ok(SweetSpotResult { widest, all })
}

/// Bisection on a boolean predicate that is false at `lo` and true at `hi`;
/// returns the transition point.
fn bisect_boundary<F>(pred: &F, lo: f64, hi: f64) -> Result<f64, OcError>
where
    F: Fn(f64) -> Result<bool, OcError>,
{
    let mut lo = lo;
    let mut hi = hi;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn drift_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    if let Some(last) = grid.last_mut() {
        if *last > hi {
            *last = hi;
        }
    }
    grid
}

/// Bias, variance and MSE of the posterior-median estimator of δ at a fixed
/// truth, by nested quadrature over both sampling distributions.
pub fn estimation_metrics(
    design: &TrialDesign,
    drift: f64,
    delta_true: f64,
    quad: &QuadratureSpec,
) -> Result<EstimationMetrics, OcError> {
    let scenario = DriftScenario::with_effect(drift, delta_true);
    let engine = Engine::new(design, &scenario);
    let sd_inf = NormalComponent::new(0.0, engine.sd_inf * engine.sd_inf)
        .expect("posterior delta variances are positive");
    let sd_rob = NormalComponent::new(0.0, engine.sd_rob * engine.sd_rob).expect("as above");
    // inner integral over the treatment offset for fixed control offset:
    // returns (E[δ̂], E[δ̂²]) conditional on a
    let conditional_moments = |a: f64| -> Result<(f64, f64), OcError> {
        let w = engine.posterior_weight(a);
        let median = |b: f64| {
            let (m_inf, m_rob) = engine.delta_means(a, b);
            let inf = NormalComponent::new(m_inf, sd_inf.variance()).expect("valid");
            let rob = NormalComponent::new(m_rob, sd_rob.variance()).expect("valid");
            two_normal_mixture_quantile(w, &inf, &rob, 0.5)
                .expect("median of a valid mixture always exists")
        };
        let m1 = integrate_against_normal(median, 0.0, engine.sigma_t, quad)?;
        let m2 = integrate_against_normal(
            |b| {
                let d = median(b);
                d * d
            },
            0.0,
            engine.sigma_t,
            quad,
        )?;
        Ok((m1, m2))
    };
    // the conditional moments are smooth in the control offset, so the outer
    // layer is always Gauss-Hermite; both moments accumulate in one sweep
    let order = match quad.scheme {
        numerics::QuadScheme::GaussHermite { order } => order,
        numerics::QuadScheme::Adaptive => 64,
    };
    let (mut e1, mut e2, mut wsum) = (0.0, 0.0, 0.0);
    for (node, weight) in numerics::gauss_hermite_nodes(order)? {
        let a = std::f64::consts::SQRT_2 * engine.sigma_c * node;
        let (m1, m2) = conditional_moments(a)?;
        e1 += weight * m1;
        e2 += weight * m2;
        wsum += weight;
    }
    e1 /= wsum;
    e2 /= wsum;
    let bias = e1 - delta_true;
    let variance = e2 - e1 * e1;
    let mse = e2 - 2.0 * delta_true * e1 + delta_true * delta_true;
    Ok(EstimationMetrics {
        bias,
        variance,
        mse,
    })
}

/// Per-drift operating characteristics over a grid, evaluated in parallel;
/// row order matches the input grid regardless of scheduling.
pub fn oc_curve(
    design: &TrialDesign,
    drift_grid: &[f64],
    delta_star: f64,
    quad: &QuadratureSpec,
) -> Result<Vec<OcPoint>, OcError> {
    if drift_grid.is_empty() {
        return Err(OcError::Invalid {
            what: "drift grid must be nonempty",
            value: 0.0,
        });
    }
    drift_grid
        .par_iter()
        .map(|&d| {
            Ok(OcPoint {
                drift: d,
                alpha: type_one_error(design, d, quad)?,
                power: power(design, d, delta_star, quad)?,
                mean_posterior_weight: mean_posterior_weight(design, d, quad)?,
            })
        })
        .collect()
}

/// Options for the aggregate summary in [`oc_summary`].
#[derive(Debug, Clone)]
pub struct OcSummaryOptions {
    /// Drift at which the headline α is reported.
    pub alpha_at_drift: f64,
    /// Target effect and drift for the headline power.
    pub delta_star: f64,
    pub power_at_drift: f64,
    pub design_prior: DesignPrior,
    pub drift_range: (f64, f64),
    pub grid_step: f64,
    pub nominal_alpha: f64,
    pub nominal_power: f64,
}

pub fn oc_summary(
    design: &TrialDesign,
    opts: &OcSummaryOptions,
    quad: &QuadratureSpec,
) -> Result<OCResult, OcError> {
    Ok(OCResult {
        alpha: type_one_error(design, opts.alpha_at_drift, quad)?,
        power: power(design, opts.power_at_drift, opts.delta_star, quad)?,
        alpha_avg: average_type_one_error(design, &opts.design_prior, quad)?,
        alpha_max: max_type_one_error(design, opts.drift_range, opts.grid_step, quad)?.0,
        sweet_spot: sweet_spot(
            design,
            opts.delta_star,
            opts.nominal_alpha,
            opts.nominal_power,
            opts.drift_range,
            opts.grid_step,
            quad,
        )?
        .widest,
    })
}

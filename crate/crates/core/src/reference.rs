//! Bundled reference trial: a 3:1 randomized hybrid-control design with unit
//! endpoint SD, 150 treated and 50 control patients, a success budget of
//! η = 0.05 and an informative control prior worth 100 patients centred at
//! zero. The borrowing pairs anchored at the unit-information prior with
//! weight one half are the scenarios shipped with the CLI and used by the
//! property suites.

use crate::borrowing::{level_set, LevelSetPoint};
use crate::delta::TrialDesign;
use crate::rmp::{NormalComponent, RobustMixturePrior, SamplingModel};

pub const N_C: f64 = 50.0;
pub const N_T: f64 = 150.0;
pub const S: f64 = 1.0;
pub const ETA: f64 = 0.05;
pub const DELTA_STAR: f64 = 0.31;
pub const N_INF: f64 = 100.0;
pub const MU_INF: f64 = 0.0;

pub fn informative() -> NormalComponent {
    NormalComponent::new(MU_INF, S * S / N_INF).expect("static parameters are valid")
}

pub fn control_sampling() -> SamplingModel {
    SamplingModel::from_counts(S, N_C).expect("static parameters are valid")
}

/// Reference design with the given mixture weight, robustification ESS and
/// robustification location. The treatment prior follows the
/// robustification component.
pub fn design(omega: f64, n0: f64, mu_rob: f64) -> TrialDesign {
    let robust =
        NormalComponent::new(mu_rob, S * S / n0).expect("positive ESS gives a valid component");
    let prior = RobustMixturePrior::new(omega, informative(), robust)
        .expect("robustification component is flatter");
    TrialDesign::new(N_C, N_T, S, ETA, prior, None).expect("static parameters are valid")
}

/// The no-borrowing baseline: zero weight on the informative component and
/// an essentially flat robustification component.
pub fn no_borrowing_design() -> TrialDesign {
    design(0.0, 1e-100, MU_INF)
}

/// Borrowing strength of the unit-information anchor (weight 0.5, ESS 1):
/// odds x predictive-SD ratio = sqrt(1.02 / 0.03).
pub fn anchor_strength() -> f64 {
    let v2_inf = S * S / N_INF + S * S / N_C;
    let v2_rob = S * S + S * S / N_C;
    (v2_rob / v2_inf).sqrt()
}

/// Robustification sample sizes of the bundled level set: 1, 1/2, ..., 1/64.
pub fn level_set_ess() -> Vec<f64> {
    (0..7).map(|k| 0.5f64.powi(k)).collect()
}

/// The (weight, ESS) pairs sharing the anchor strength.
pub fn level_set_pairs() -> Vec<LevelSetPoint> {
    level_set(
        anchor_strength(),
        &level_set_ess(),
        S,
        &informative(),
        &control_sampling(),
    )
    .expect("bundled level set is valid")
}

/// All bundled designs in presentation order: the no-borrowing baseline
/// followed by the level-set pairs, labelled by (weight, ESS).
pub fn bundled_designs() -> Vec<(f64, f64, TrialDesign)> {
    let mut out = vec![(0.0, 1e-100, no_borrowing_design())];
    for p in level_set_pairs() {
        out.push((p.weight, p.n0, design(p.weight, p.n0, MU_INF)));
    }
    out
}

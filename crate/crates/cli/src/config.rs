//! Scenario configuration: TOML schema, validation and conversion into core
//! designs. See `docs/config.md` for the documented schema.

use serde::{Deserialize, Serialize};

use rmp_core::borrowing::weight_for_strength;
use rmp_core::delta::TrialDesign;
use rmp_core::rmp::{NormalComponent, RobustMixturePrior, SamplingModel};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub trial: TrialBlock,
    #[serde(default)]
    pub scenarios: Vec<ScenarioBlock>,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub mc: McBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialBlock {
    pub n_c: f64,
    pub n_t: f64,
    pub s: f64,
    pub eta: f64,
    pub delta_star: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBlock {
    pub name: String,
    pub control_prior: ControlPriorBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub treatment_prior: Option<TreatmentPriorBlock>,
}

/// Exactly one of {omega, borrowing_strength}, one of {n0, sigma2_rob} and
/// one of {n_inf, sigma2_inf} must be set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlPriorBlock {
    pub mu_inf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_inf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2_inf: Option<f64>,
    pub mu_rob: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2_rob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub borrowing_strength: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentPriorBlock {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default)]
    pub d_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_range: Option<DRange>,
    #[serde(default)]
    pub mu_rob_values: Vec<f64>,
    #[serde(default)]
    pub levelset_n0: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    #[serde(default = "default_mc_drifts")]
    pub d_values: Vec<f64>,
}

fn default_mc_drifts() -> Vec<f64> {
    vec![0.0, 2.0, 50.0]
}

impl Default for McBlock {
    fn default() -> Self {
        Self {
            d_values: default_mc_drifts(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

/// A fully resolved scenario ready for evaluation.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub name: String,
    pub design: TrialDesign,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| CliError::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let t = &self.trial;
        if !(t.n_c >= 1.0 && t.n_t >= 1.0) {
            return Err(CliError::Config(
                "trial: n_c and n_t must be at least 1".into(),
            ));
        }
        if !(t.s > 0.0) {
            return Err(CliError::Config("trial: s must be positive".into()));
        }
        if !(t.eta > 0.0 && t.eta < 1.0) {
            return Err(CliError::Config("trial: eta must lie in (0, 1)".into()));
        }
        if !(t.delta_star >= 0.0) {
            return Err(CliError::Config(
                "trial: delta_star must be nonnegative".into(),
            ));
        }
        if self.scenarios.is_empty() {
            return Err(CliError::Config(
                "at least one [[scenarios]] block is required".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for sc in &self.scenarios {
            if sc.name.is_empty() {
                return Err(CliError::Config("scenario names must be nonempty".into()));
            }
            if !seen.insert(sc.name.clone()) {
                return Err(CliError::Config(format!(
                    "duplicate scenario name '{}'",
                    sc.name
                )));
            }
            let cp = &sc.control_prior;
            let one_of = |a: bool, b: bool, what: &str| -> Result<(), CliError> {
                if a == b {
                    Err(CliError::Config(format!(
                        "scenario '{}': exactly one of {what} must be set",
                        sc.name
                    )))
                } else {
                    Ok(())
                }
            };
            one_of(
                cp.n_inf.is_some(),
                cp.sigma2_inf.is_some(),
                "{n_inf, sigma2_inf}",
            )?;
            one_of(cp.n0.is_some(), cp.sigma2_rob.is_some(), "{n0, sigma2_rob}")?;
            one_of(
                cp.omega.is_some(),
                cp.borrowing_strength.is_some(),
                "{omega, borrowing_strength}",
            )?;
        }
        if self.sweep.d_values.is_empty() && self.sweep.d_range.is_none() {
            return Err(CliError::Config(
                "sweep: either d_values or d_range must define a nonempty drift grid".into(),
            ));
        }
        if let Some(r) = &self.sweep.d_range {
            if !(r.step > 0.0 && r.stop >= r.start) {
                return Err(CliError::Config(
                    "sweep.d_range: requires stop >= start and a positive step".into(),
                ));
            }
        }
        Ok(())
    }

    /// Drift grid: explicit values followed by the expanded range.
    pub fn drift_grid(&self) -> Vec<f64> {
        let mut grid = self.sweep.d_values.clone();
        if let Some(r) = &self.sweep.d_range {
            let n = ((r.stop - r.start) / r.step).round() as usize;
            grid.extend((0..=n).map(|i| r.start + i as f64 * r.step));
        }
        grid
    }

    /// Resolve every scenario, expanding the robustification-location sweep
    /// when one is configured.
    pub fn resolved_scenarios(&self) -> Result<Vec<ResolvedScenario>, CliError> {
        let mut out = Vec::new();
        for sc in &self.scenarios {
            if self.sweep.mu_rob_values.is_empty() {
                out.push(self.resolve(sc, None)?);
            } else {
                for &mu in &self.sweep.mu_rob_values {
                    out.push(self.resolve(sc, Some(mu))?);
                }
            }
        }
        Ok(out)
    }

    fn resolve(
        &self,
        sc: &ScenarioBlock,
        mu_rob_override: Option<f64>,
    ) -> Result<ResolvedScenario, CliError> {
        let t = &self.trial;
        let cp = &sc.control_prior;
        let bad = |msg: String| CliError::Config(format!("scenario '{}': {msg}", sc.name));
        let sigma2_inf = cp
            .sigma2_inf
            .unwrap_or_else(|| t.s * t.s / cp.n_inf.expect("validated"));
        let sigma2_rob = cp
            .sigma2_rob
            .unwrap_or_else(|| t.s * t.s / cp.n0.expect("validated"));
        let mu_rob = mu_rob_override.unwrap_or(cp.mu_rob);
        let informative = NormalComponent::new(cp.mu_inf, sigma2_inf)
            .map_err(|e| bad(format!("informative component: {e}")))?;
        let sampling = SamplingModel::from_counts(t.s, t.n_c)
            .map_err(|e| bad(format!("control sampling: {e}")))?;
        let omega = match (cp.omega, cp.borrowing_strength) {
            (Some(w), None) => w,
            (None, Some(b)) => weight_for_strength(b, sigma2_rob, &informative, &sampling)
                .map_err(|e| bad(format!("borrowing_strength: {e}")))?,
            _ => unreachable!("validated"),
        };
        let robust = NormalComponent::new(mu_rob, sigma2_rob)
            .map_err(|e| bad(format!("robustification component: {e}")))?;
        let prior =
            RobustMixturePrior::new(omega, informative, robust).map_err(|e| bad(format!("{e}")))?;
        let treatment = match &sc.treatment_prior {
            Some(tp) => Some(
                NormalComponent::new(tp.mean, tp.variance)
                    .map_err(|e| bad(format!("treatment prior: {e}")))?,
            ),
            None => None,
        };
        let design = TrialDesign::new(t.n_c, t.n_t, t.s, t.eta, prior, treatment)
            .map_err(|e| bad(format!("{e}")))?;
        let name = match mu_rob_override {
            Some(mu) if self.sweep.mu_rob_values.len() > 1 => {
                format!("{}/mu_rob={}", sc.name, crate::fmt::g10(mu))
            }
            _ => sc.name.clone(),
        };
        Ok(ResolvedScenario { name, design })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[trial]
n_c = 50
n_t = 150
s = 1.0
eta = 0.05
delta_star = 0.31

[[scenarios]]
name = "uip"
control_prior = { mu_inf = 0.0, n_inf = 100.0, mu_rob = 0.0, n0 = 1.0, omega = 0.5 }

[sweep]
d_values = [0.0, 2.0]
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = Config::parse(MINIMAL).unwrap();
        let scenarios = cfg.resolved_scenarios().unwrap();
        assert_eq!(scenarios.len(), 1);
        let d = &scenarios[0].design;
        assert!((d.control_prior().weight() - 0.5).abs() < 1e-15);
        assert!((d.control_prior().informative().variance() - 0.01).abs() < 1e-15);
        // treatment prior defaults to the robustification component
        assert_eq!(d.treatment_prior(), d.control_prior().robust());
    }

    #[test]
    fn strength_parameterisation_resolves_weight() {
        let text = MINIMAL.replace("omega = 0.5", "borrowing_strength = 5.8309518948453005");
        let cfg = Config::parse(&text).unwrap();
        let w = cfg.resolved_scenarios().unwrap()[0]
            .design
            .control_prior()
            .weight();
        assert!((w - 0.5).abs() < 1e-12, "{w}");
    }

    #[test]
    fn rejects_both_weight_parameterisations() {
        let text = MINIMAL.replace("omega = 0.5", "omega = 0.5, borrowing_strength = 5.0");
        let err = Config::parse(&text).unwrap_err();
        assert!(err.to_string().contains("exactly one of"), "{err}");
    }

    #[test]
    fn rejects_unknown_fields_and_empty_grid() {
        let text = MINIMAL.replace("d_values = [0.0, 2.0]", "d_values = []");
        assert!(Config::parse(&text).is_err());
        let text = MINIMAL.replace("eta = 0.05", "eta = 0.05\nbogus = 1");
        assert!(Config::parse(&text).is_err());
    }

    #[test]
    fn roundtrip_parse_serialize_parse() {
        let cfg = Config::parse(MINIMAL).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let again = Config::parse(&text).unwrap();
        let a = cfg.resolved_scenarios().unwrap();
        let b = again.resolved_scenarios().unwrap();
        assert_eq!(a.len(), b.len());
        assert_eq!(
            a[0].design.control_prior().weight(),
            b[0].design.control_prior().weight()
        );
    }

    #[test]
    fn mu_rob_sweep_expands_names() {
        let text = MINIMAL.replace(
            "d_values = [0.0, 2.0]",
            "d_values = [0.0]\nmu_rob_values = [-2.0, 2.0]",
        );
        let cfg = Config::parse(&text).unwrap();
        let scenarios = cfg.resolved_scenarios().unwrap();
        assert_eq!(scenarios.len(), 2);
        assert_eq!(scenarios[0].name, "uip/mu_rob=-2");
        assert!((scenarios[1].design.control_prior().robust().mean() - 2.0).abs() < 1e-15);
    }
}

//! Subcommand implementations. Every command assembles its entire output as
//! a string (CSV or plain text, LF line endings) so results are byte-stable
//! for fixed inputs.

use rayon::prelude::*;

use rmp_core::borrowing::{borrowing_strength, elicit_prior_weight, level_set, ElicitationSpec};
use rmp_core::mc::{mc_estimate, McConfig};
use rmp_core::oc::{
    average_type_one_error, max_type_one_error, oc_curve, power, sweet_spot, type_one_error,
    DesignPrior,
};
use rmp_core::reference;
use rmp_core::theorems;
use rmp_core::QuadratureSpec;

use crate::config::Config;
use crate::fmt::{g10, row};
use crate::CliError;

/// `oc`: one CSV row per (scenario, drift), in configuration order.
pub fn oc(cfg: &Config, quad: &QuadratureSpec) -> Result<String, CliError> {
    let grid = cfg.drift_grid();
    let scenarios = cfg.resolved_scenarios()?;
    let mut out = String::from("scenario,d,alpha,power,mean_posterior_weight\n");
    let delta_star = cfg.trial.delta_star;
    let blocks = scenarios
        .par_iter()
        .map(|sc| {
            let points = oc_curve(&sc.design, &grid, delta_star, quad)?;
            let mut block = String::new();
            for p in points {
                block.push_str(&row(&[
                    sc.name.clone(),
                    g10(p.drift),
                    g10(p.alpha),
                    g10(p.power),
                    g10(p.mean_posterior_weight),
                ]));
            }
            Ok::<_, CliError>(block)
        })
        .collect::<Result<Vec<_>, _>>()?;
    for b in blocks {
        out.push_str(&b);
    }
    Ok(out)
}

/// `table1`: the bundled reference designs with their headline operating
/// characteristics. The vague-average column depends on its truncation
/// range, so the range is spelled out in the header.
pub fn table1(
    vag_lo: f64,
    vag_hi: f64,
    rows: Option<&[usize]>,
    quad: &QuadratureSpec,
) -> Result<String, CliError> {
    if !(vag_hi > vag_lo) {
        return Err(CliError::Usage(
            "--vag-lo must be strictly below --vag-hi".into(),
        ));
    }
    let designs = reference::bundled_designs();
    let selected: Vec<usize> = match rows {
        Some(idx) => {
            for &i in idx {
                if i >= designs.len() {
                    return Err(CliError::Usage(format!(
                        "--rows index {i} out of range (0..={})",
                        designs.len() - 1
                    )));
                }
            }
            idx.to_vec()
        }
        None => (0..designs.len()).collect(),
    };
    let mut out = format!(
        "omega,n0,strength,alpha_max,alpha_50,alpha_avg_vag({}..{}),alpha_avg_inf,alpha_avg_rmp,pow_0,sweet_spot_width\n",
        g10(vag_lo),
        g10(vag_hi)
    );
    let inf_prior = DesignPrior::Normal {
        mean: reference::MU_INF,
        variance: reference::S * reference::S / reference::N_INF,
    };
    let lines = selected
        .par_iter()
        .map(|&i| {
            let (omega, n0, design) = &designs[i];
            let strength = borrowing_strength(design.control_prior(), &design.control_sampling())
                .map(|b| g10(b.strength))
                .unwrap_or_else(|_| "NA".to_string());
            let (alpha_max, _) = max_type_one_error(design, (-5.0, 5.0), 0.01, quad)?;
            let alpha_50 = type_one_error(design, 50.0, quad)?;
            let vag = average_type_one_error(
                design,
                &DesignPrior::TruncatedFlat {
                    lo: vag_lo,
                    hi: vag_hi,
                },
                quad,
            )?;
            let avg_inf = average_type_one_error(design, &inf_prior, quad)?;
            let avg_rmp =
                average_type_one_error(design, &DesignPrior::Rmp(*design.control_prior()), quad)?;
            let pow_0 = power(design, 0.0, reference::DELTA_STAR, quad)?;
            let ss = sweet_spot(
                design,
                reference::DELTA_STAR,
                0.05,
                0.60,
                (-5.0, 5.0),
                0.01,
                quad,
            )?;
            Ok::<_, CliError>(row(&[
                g10(*omega),
                g10(*n0),
                strength,
                g10(alpha_max),
                g10(alpha_50),
                g10(vag),
                g10(avg_inf),
                g10(avg_rmp),
                g10(pow_0),
                g10(ss.widest.width),
            ]))
        })
        .collect::<Result<Vec<_>, _>>()?;
    for l in lines {
        out.push_str(&l);
    }
    Ok(out)
}

/// `elicit`: prior weight from the equipoise drift; exit 1 when the
/// roundtrip verification misses 0.5 beyond tolerance.
pub fn elicit(
    cfg: &Config,
    d_star: f64,
    sigma_rob_multiple: f64,
) -> Result<(String, u8), CliError> {
    if !(sigma_rob_multiple > 0.0) {
        return Err(CliError::Usage(
            "--sigma-rob-multiple must be positive".into(),
        ));
    }
    if !d_star.is_finite() {
        return Err(CliError::Usage("--d-star must be finite".into()));
    }
    let scenarios = cfg.resolved_scenarios()?;
    let design = &scenarios[0].design;
    let informative = *design.control_prior().informative();
    let sampling = design.control_sampling();
    let spec = ElicitationSpec {
        d_star,
        sigma_rob: sigma_rob_multiple * cfg.trial.s,
        mu_rob: None,
    };
    let r = elicit_prior_weight(&spec, &informative, &sampling)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let verified = (r.verification_weight - 0.5).abs() <= 1e-10;
    let mut out = String::new();
    out.push_str(&format!("equipoise_drift: {}\n", g10(d_star)));
    out.push_str(&format!("sigma_rob: {}\n", g10(spec.sigma_rob)));
    out.push_str(&format!("omega: {}\n", g10(r.weight)));
    out.push_str(&format!("prior_odds: {}\n", g10(r.prior_odds)));
    out.push_str(&format!("strength: {}\n", g10(r.strength.strength)));
    out.push_str(&format!(
        "reciprocal_strength: {}\n",
        g10(r.strength.reciprocal)
    ));
    out.push_str(&format!(
        "verification: posterior weight at equipoise = {:.10} {}\n",
        r.verification_weight,
        if verified { "OK" } else { "OUT OF TOLERANCE" }
    ));
    if r.low_ratio_warning {
        out.push_str("warning: robustification SD is not clearly flatter than the informative predictive SD (ratio < 10)\n");
    }
    Ok((out, if verified { 0 } else { 1 }))
}

/// `theorem-check`: plain-text report, one property per line; exit 1 when
/// anything fails.
pub fn theorem_check(theorem: Option<u8>, quad: &QuadratureSpec) -> Result<(String, u8), CliError> {
    if let Some(t) = theorem {
        if !(1..=3).contains(&t) {
            return Err(CliError::Usage(format!(
                "--theorem must be 1, 2 or 3 (got {t})"
            )));
        }
    }
    let mut out = String::new();
    let mut failures = 0usize;
    for (number, checks) in theorems::all_checks(quad) {
        if theorem.is_some_and(|t| t != number) {
            continue;
        }
        for c in checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag} {}: {}\n", c.name, c.detail));
            if !c.passed {
                failures += 1;
            }
        }
    }
    out.push_str(&format!(
        "{}\n",
        if failures == 0 {
            "all properties passed".to_string()
        } else {
            format!("{failures} properties failed")
        }
    ));
    Ok((out, if failures == 0 { 0 } else { 1 }))
}

/// `mc-check`: quadrature vs Monte Carlo per (scenario, drift) cell; exit 1
/// when any |z| exceeds 3.
pub fn mc_check(
    cfg: &Config,
    reps: u64,
    seed: u64,
    quad: &QuadratureSpec,
) -> Result<(String, u8), CliError> {
    if reps < 10_000 {
        return Err(CliError::Usage(format!(
            "--reps must be at least 10000 (got {reps})"
        )));
    }
    let scenarios = cfg.resolved_scenarios()?;
    let mc_cfg = McConfig { n_reps: reps, seed };
    let cells: Vec<(usize, f64)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(i, _)| cfg.mc.d_values.iter().map(move |&d| (i, d)))
        .collect();
    let mut out = String::from("scenario,d,quadrature,mc_estimate,std_error,z,status\n");
    let mut exceeded = false;
    let lines = cells
        .par_iter()
        .map(|&(i, d)| {
            let sc = &scenarios[i];
            let exact = type_one_error(&sc.design, d, quad)?;
            let est = mc_estimate(&sc.design, d, 0.0, &mc_cfg);
            let z = (est.estimate - exact) / est.std_error.max(1e-12);
            Ok::<_, CliError>((
                z.abs() > 3.0,
                row(&[
                    sc.name.clone(),
                    g10(d),
                    g10(exact),
                    g10(est.estimate),
                    g10(est.std_error),
                    g10(z),
                    if z.abs() > 3.0 { "EXCEEDS" } else { "OK" }.to_string(),
                ]),
            ))
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (bad, line) in lines {
        exceeded |= bad;
        out.push_str(&line);
    }
    Ok((out, if exceeded { 1 } else { 0 }))
}

/// `levelset`: weights matching one borrowing strength across
/// robustification sizes.
pub fn levelset(
    cfg: &Config,
    strength: Option<f64>,
    n0: Option<&[f64]>,
) -> Result<String, CliError> {
    let scenarios = cfg.resolved_scenarios()?;
    let design = &scenarios[0].design;
    let informative = *design.control_prior().informative();
    let sampling = design.control_sampling();
    // default to the first configured scenario with an interior weight
    let strength = match strength {
        Some(b) => b,
        None => scenarios
            .iter()
            .find_map(|sc| {
                borrowing_strength(sc.design.control_prior(), &sampling)
                    .ok()
                    .map(|b| b.strength)
            })
            .ok_or_else(|| {
                CliError::Usage(
                    "--strength is required: every configured scenario has a degenerate weight"
                        .into(),
                )
            })?,
    };
    let default_n0 = if cfg.sweep.levelset_n0.is_empty() {
        (0..7).map(|k| 0.5f64.powi(k)).collect()
    } else {
        cfg.sweep.levelset_n0.clone()
    };
    let n0 = n0.map(|v| v.to_vec()).unwrap_or(default_n0);
    let points = level_set(strength, &n0, cfg.trial.s, &informative, &sampling)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut out = String::from("omega,n0,sigma2_rob,strength,reciprocal_strength\n");
    for p in points {
        out.push_str(&row(&[
            g10(p.weight),
            g10(p.n0),
            g10(p.sigma2_rob),
            g10(strength),
            g10(1.0 / strength),
        ]));
    }
    Ok(out)
}

//! Dense-network limit of the linear regimes of an experiment.

use std::fs;
use std::path::Path;

use densify_core::asymptotics::{self, LimitParams, OUTER_REL_TOL};
use densify_core::pathloss;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, Regime};
use crate::{HarnessError, TOOL_VERSION};

pub const REPORT_FILE: &str = "asymptote.json";
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteReport {
    pub tool_version: String,
    pub config_hash: String,
    pub entries: Vec<AsymptoteEntry>,
}

/// Limit quantities of one regime; lengths in km, densities per km².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteEntry {
    pub epsilon: f64,
    pub regime_hash: String,
    pub model: String,
    pub l0: f64,
    /// `∫ r L(r) dr` in km².
    pub gamma: f64,
    pub gamma_m2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub zeta: f64,
    pub mean_limit: f64,
    pub lower: f64,
    pub upper: f64,
    pub ase_lower: f64,
    pub ase_upper: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mc: Option<McCheck>,
}

/// Monte Carlo mean of the limiting SINR against `mean_limit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCheck {
    pub samples: usize,
    pub seed: u64,
    pub mean: f64,
    pub std_error: f64,
    pub z: f64,
}

impl AsymptoteReport {
    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn entry_for(&self, regime_hash: &str) -> Option<&AsymptoteEntry> {
        self.entries.iter().find(|e| e.regime_hash == regime_hash)
    }
}

pub fn limit_params(exp: &Experiment, regime: &Regime) -> Result<LimitParams, HarnessError> {
    Ok(LimitParams::from_scaling(
        exp.pathloss.clone(),
        &regime.scaling,
        exp.config.fading,
    )?)
}

pub fn entry(exp: &Experiment, regime: &Regime, mc_samples: Option<usize>) -> Result<AsymptoteEntry, HarnessError> {
    let params = limit_params(exp, regime)?;
    let mean_limit = asymptotics::evaluate_mean_limit(&params, OUTER_REL_TOL)?;
    let (lower, upper) = asymptotics::mean_sinr_bounds(&params);
    let (ase_lower, ase_upper) = asymptotics::ase_slope_bounds(&params);
    let mc = match mc_samples {
        Some(n) => {
            let seed = exp.config.sweep.master_seed;
            let s = asymptotics::monte_carlo_mean(&params, n, seed)?;
            Some(McCheck {
                samples: n,
                seed,
                mean: s.mean,
                std_error: s.std_error(),
                z: (s.mean - mean_limit) / s.std_error(),
            })
        }
        None => None,
    };
    Ok(AsymptoteEntry {
        epsilon: regime.epsilon,
        regime_hash: regime.hash.clone(),
        model: exp.pathloss.name(),
        l0: params.l0,
        gamma: params.gamma,
        gamma_m2: pathloss::gamma(&exp.pathloss, 1e-10)?,
        alpha: params.alpha,
        beta: params.beta,
        zeta: params.zeta,
        mean_limit,
        lower,
        upper,
        ase_lower,
        ase_upper,
        mc,
    })
}

/// One entry per `ε = 1` regime; other exponents have no finite limit to
/// report and are skipped.
pub fn report(exp: &Experiment, mc_samples: Option<usize>) -> Result<AsymptoteReport, HarnessError> {
    let linear: Vec<&Regime> = exp.regimes.iter().filter(|r| r.is_linear()).collect();
    if linear.is_empty() {
        return Err(HarnessError::Config(
            "asymptote: the limit exists for linear scaling only; add epsilon = 1 to [antenna]".into(),
        ));
    }
    let entries = linear
        .into_iter()
        .map(|r| entry(exp, r, mc_samples))
        .collect::<Result<_, _>>()?;
    Ok(AsymptoteReport {
        tool_version: TOOL_VERSION.into(),
        config_hash: exp.config_hash.clone(),
        entries,
    })
}

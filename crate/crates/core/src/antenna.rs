//! Step beam patterns, their scaling with antenna count, and the ULA
//! instantiation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// ULA beamwidth times antenna count.
pub const ULA_BEAMWIDTH_N: f64 = 1.782;
/// Numerator constant of the ULA side-lobe gain.
pub const ULA_SIDELOBE: f64 = 0.218;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AntennaError {
    #[error("antenna count must be at least 1")]
    ZeroAntennas,
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("invalid antenna scaling: {0}")]
    InvalidParameter(String),
}

/// Two-level sectored pattern: `g_max` over `beamwidth` radians, `g_min`
/// elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamPattern {
    pub g_max: f64,
    pub g_min: f64,
    pub beamwidth: f64,
}

impl BeamPattern {
    pub fn omnidirectional() -> Self {
        Self {
            g_max: 1.0,
            g_min: 1.0,
            beamwidth: 2.0 * PI,
        }
    }

    /// Probability that a uniformly oriented beam covers a given direction.
    #[inline]
    pub fn mainlobe_probability(&self) -> f64 {
        (self.beamwidth / (2.0 * PI)).min(1.0)
    }

    /// Mean gain toward a fixed direction over a uniform beam orientation.
    pub fn average_gain(&self) -> f64 {
        let p = self.mainlobe_probability();
        p * self.g_max + (1.0 - p) * self.g_min
    }
}

/// `g_max(N) = coefficient · N^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmaxRule {
    pub coefficient: f64,
    pub exponent: f64,
}

impl Default for GmaxRule {
    fn default() -> Self {
        Self {
            coefficient: 1.0,
            exponent: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum AntennaFamily {
    Ula,
    ParametricStep {
        alpha: f64,
        beta: f64,
        #[serde(default)]
        gmax: GmaxRule,
    },
}

/// How the side-lobe gain is fixed once `g_max` and the beamwidth are known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GminRule {
    /// ULA: `0.218 N / (π N − 1.782)`; parametric: `g_max / (α N)`.
    #[default]
    Nominal,
    /// Solve `p g_max + (1 − p) g_min = 1` with `p = B / 2π`.
    PowerConserving,
    /// `g_min = 0`.
    Suppressed,
}

/// Antenna family plus the density map `N(λ) = max(1, ⌈ζ λ^ε⌉)`, with `λ` in
/// BS per km².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaScaling {
    #[serde(flatten)]
    pub family: AntennaFamily,
    #[serde(default)]
    pub gmin_rule: GminRule,
    pub zeta: f64,
    pub epsilon: f64,
}

impl AntennaScaling {
    pub fn ula(zeta: f64, epsilon: f64) -> Self {
        Self {
            family: AntennaFamily::Ula,
            gmin_rule: GminRule::Nominal,
            zeta,
            epsilon,
        }
    }

    pub fn with_gmin_rule(mut self, rule: GminRule) -> Self {
        self.gmin_rule = rule;
        self
    }

    pub fn check(&self) -> Result<(), AntennaError> {
        let bad = |what: &str| Err(AntennaError::InvalidParameter(what.to_string()));
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return bad("zeta must be positive");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if let AntennaFamily::ParametricStep { alpha, beta, gmax } = self.family {
            if !(alpha > 0.0 && beta > 0.0) {
                return bad("alpha and beta must be positive");
            }
            if !(gmax.coefficient > 0.0 && gmax.exponent >= 0.0) {
                return bad("g_max rule needs a positive coefficient and nonnegative exponent");
            }
        }
        Ok(())
    }

    /// `(α, β)`: the limits of `g_max / (g_min N)` and `B N` as `N → ∞`.
    pub fn limit_slope(&self) -> Result<(f64, f64), AntennaError> {
        let (beta, nominal_alpha, gmax) = match self.family {
            AntennaFamily::Ula => (ULA_BEAMWIDTH_N, PI / ULA_SIDELOBE, GmaxRule::default()),
            AntennaFamily::ParametricStep { alpha, beta, gmax } => (beta, alpha, gmax),
        };
        match self.gmin_rule {
            GminRule::Nominal => Ok((nominal_alpha, beta)),
            GminRule::Suppressed => Ok((f64::INFINITY, beta)),
            GminRule::PowerConserving => {
                let mainlobe_power = gmax.coefficient * beta / (2.0 * PI);
                if gmax.exponent != 1.0 || mainlobe_power >= 1.0 {
                    return Err(AntennaError::InvalidParameter(
                        "power-conserving side lobes have no linear limit for this g_max rule".into(),
                    ));
                }
                Ok((gmax.coefficient / (1.0 - mainlobe_power), beta))
            }
        }
    }
}

pub fn pattern_for(scaling: &AntennaScaling, n: u64) -> Result<BeamPattern, AntennaError> {
    if n == 0 {
        return Err(AntennaError::ZeroAntennas);
    }
    scaling.check()?;
    let nf = n as f64;
    let (g_max, raw_beamwidth, nominal_gmin) = match scaling.family {
        AntennaFamily::Ula => (
            nf,
            ULA_BEAMWIDTH_N / nf,
            ULA_SIDELOBE * nf / (PI * nf - ULA_BEAMWIDTH_N),
        ),
        AntennaFamily::ParametricStep { alpha, beta, gmax } => {
            let g = gmax.coefficient * nf.powf(gmax.exponent);
            (g, beta / nf, g / (alpha * nf))
        }
    };
    let beamwidth = raw_beamwidth.min(2.0 * PI);
    let g_min = match scaling.gmin_rule {
        GminRule::Nominal => nominal_gmin,
        GminRule::Suppressed => 0.0,
        GminRule::PowerConserving => {
            let p = beamwidth / (2.0 * PI);
            if p >= 1.0 {
                g_max
            } else {
                (1.0 - p * g_max) / (1.0 - p)
            }
        }
    };
    if !(g_min >= 0.0 && g_min <= g_max) {
        return Err(AntennaError::InvalidParameter(format!(
            "side-lobe gain {g_min} outside [0, g_max = {g_max}] at N = {n}"
        )));
    }
    Ok(BeamPattern {
        g_max,
        g_min,
        beamwidth,
    })
}

/// `N(λ) = max(1, ⌈ζ λ^ε⌉)`.
pub fn antennas_for_density(scaling: &AntennaScaling, lambda: f64) -> Result<u64, AntennaError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(AntennaError::NonPositiveDensity(lambda));
    }
    scaling.check()?;
    let x = scaling.zeta * lambda.powf(scaling.epsilon);
    // pow rounding must not push an exact integer to the next one
    let nearest = x.round();
    let n = if (x - nearest).abs() <= 1e-12 * x { nearest } else { x.ceil() };
    if !(n < u64::MAX as f64) {
        return Err(AntennaError::InvalidParameter(format!("antenna count {x} overflows")));
    }
    Ok((n as u64).max(1))
}

/// Unit-norm ULA response: entry `k` is `exp(-j 2π k θ) / √n`.
pub fn ula_array_response(n: usize, theta: f64) -> Vec<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| Complex64::from_polar(scale, -2.0 * PI * k as f64 * theta))
        .collect()
}

/// Gain `n |a(θ₀)ᴴ a(θ)|²` of a beam steered to `θ₀`, seen from direction `θ`.
pub fn ula_beam_gain(n: usize, theta0: f64, theta: f64) -> f64 {
    let a0 = ula_array_response(n, theta0);
    let a = ula_array_response(n, theta);
    let inner: Complex64 = a0.iter().zip(&a).map(|(x, y)| x.conj() * y).sum();
    n as f64 * inner.norm_sqr()
}

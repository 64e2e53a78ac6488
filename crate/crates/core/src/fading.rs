//! Unit-mean power fading for the three link roles.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{self, Tolerance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FadingError {
    #[error("invalid fading parameter: {0}")]
    InvalidParameter(String),
    #[error("exponential-moment argument must be nonnegative, got {0}")]
    NegativeArgument(f64),
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] quadrature::QuadratureError),
}

/// Distribution of a unit-mean power gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FadingModel {
    /// Exponential with mean 1.
    #[serde(rename = "rayleigh")]
    RayleighPower,
    /// Gamma(m, 1/m).
    #[serde(rename = "nakagami")]
    NakagamiPower { m: f64 },
    /// `|Z|²` for a Rician `Z` with factor `k`, normalised to unit mean.
    #[serde(rename = "rician")]
    RicianPower { k: f64 },
    Deterministic,
}

impl FadingModel {
    pub fn check(&self) -> Result<(), FadingError> {
        match *self {
            FadingModel::NakagamiPower { m } if !(m >= 0.5 && m.is_finite()) => {
                Err(FadingError::InvalidParameter(format!("Nakagami m must be >= 0.5, got {m}")))
            }
            FadingModel::RicianPower { k } if !(k >= 0.0 && k.is_finite()) => {
                Err(FadingError::InvalidParameter(format!("Rician K must be >= 0, got {k}")))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        1.0
    }

    pub fn variance(&self) -> f64 {
        match *self {
            FadingModel::RayleighPower => 1.0,
            FadingModel::NakagamiPower { m } => 1.0 / m,
            FadingModel::RicianPower { k } => (1.0 + 2.0 * k) / ((1.0 + k) * (1.0 + k)),
            FadingModel::Deterministic => 0.0,
        }
    }

    pub fn sampler(&self) -> Result<FadingSampler, FadingError> {
        self.check()?;
        Ok(match *self {
            FadingModel::RayleighPower => FadingSampler::Exponential,
            FadingModel::NakagamiPower { m: 1.0 } => FadingSampler::Exponential,
            FadingModel::NakagamiPower { m } => {
                FadingSampler::Gamma(Gamma::new(m, 1.0 / m).map_err(|e| FadingError::InvalidParameter(e.to_string()))?)
            }
            FadingModel::RicianPower { k } => FadingSampler::Rician {
                los: (k / (k + 1.0)).sqrt(),
                sigma: (0.5 / (k + 1.0)).sqrt(),
            },
            FadingModel::Deterministic => FadingSampler::Constant,
        })
    }

    /// `E[1 - exp(-s X)]`.
    pub fn one_minus_exp_moment(&self, s: f64) -> Result<f64, FadingError> {
        if !(s >= 0.0) {
            return Err(FadingError::NegativeArgument(s));
        }
        self.check()?;
        if s == 0.0 {
            return Ok(0.0);
        }
        Ok(match *self {
            FadingModel::RayleighPower => s / (1.0 + s),
            FadingModel::NakagamiPower { m } => -(-m * (s / m).ln_1p()).exp_m1(),
            FadingModel::Deterministic => -(-s).exp_m1(),
            FadingModel::RicianPower { k } => rician_moment(k, s)?,
        })
    }
}

/// Prepared sampler for one fading model.
#[derive(Debug, Clone, Copy)]
pub enum FadingSampler {
    Exponential,
    Gamma(Gamma<f64>),
    Rician { los: f64, sigma: f64 },
    Constant,
}

impl FadingSampler {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingSampler::Exponential => Exp1.sample(rng),
            FadingSampler::Gamma(g) => g.sample(rng),
            FadingSampler::Rician { los, sigma } => {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                let re = los + sigma * x;
                let im = sigma * y;
                re * re + im * im
            }
            FadingSampler::Constant => 1.0,
        }
    }
}

/// One draw from `model`.
pub fn sample<R: Rng + ?Sized>(model: &FadingModel, rng: &mut R) -> Result<f64, FadingError> {
    Ok(model.sampler()?.sample(rng))
}

/// Exponentially scaled modified Bessel function `I0(z) e^-z`, `z >= 0`.
pub(crate) fn bessel_i0e(z: f64) -> f64 {
    if z <= 20.0 {
        let q = 0.25 * z * z;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-z).exp()
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let next = term * ((2 * k - 1) as f64).powi(2) / (k as f64 * 8.0 * z);
            if next > term || next < 1e-17 * sum {
                break;
            }
            term = next;
            sum += term;
        }
        sum / (2.0 * std::f64::consts::PI * z).sqrt()
    }
}

/// Density of the unit-mean Rician power.
pub(crate) fn rician_density(k: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let z = 2.0 * (k * (k + 1.0) * x).sqrt();
    (k + 1.0) * (-k - (k + 1.0) * x + z).exp() * bessel_i0e(z)
}

fn rician_moment(k: f64, s: f64) -> Result<f64, FadingError> {
    let sd = FadingModel::RicianPower { k }.variance().sqrt();
    let est = quadrature::integrate_to_infinity(
        |x| -(-s * x).exp_m1() * rician_density(k, x),
        0.0,
        sd.min(1.0),
        Tolerance::relative(1e-10).with_abs(1e-15),
        None,
    )?;
    Ok(est.value.clamp(0.0, 1.0))
}

/// Fading models for the serving link and both interferer classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkFadingConfig {
    pub desired: FadingModel,
    pub mainlobe_interf: FadingModel,
    pub sidelobe_interf: FadingModel,
}

impl Default for LinkFadingConfig {
    fn default() -> Self {
        Self {
            desired: FadingModel::NakagamiPower { m: 4.0 },
            mainlobe_interf: FadingModel::NakagamiPower { m: 4.0 },
            sidelobe_interf: FadingModel::RayleighPower,
        }
    }
}

impl LinkFadingConfig {
    pub fn uniform(model: FadingModel) -> Self {
        Self {
            desired: model,
            mainlobe_interf: model,
            sidelobe_interf: model,
        }
    }

    pub fn check(&self) -> Result<(), FadingError> {
        self.desired.check()?;
        self.mainlobe_interf.check()?;
        self.sidelobe_interf.check()
    }

    pub fn samplers(&self) -> Result<LinkSamplers, FadingError> {
        Ok(LinkSamplers {
            desired: self.desired.sampler()?,
            mainlobe: self.mainlobe_interf.sampler()?,
            sidelobe: self.sidelobe_interf.sampler()?,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LinkSamplers {
    pub desired: FadingSampler,
    pub mainlobe: FadingSampler,
    pub sidelobe: FadingSampler,
}

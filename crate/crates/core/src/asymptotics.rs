//! The dense-network limit under linear antenna scaling.
//!
//! With `N = ζλ` the SINR converges in distribution to
//! `L0 h̃ / (Σ_Ψ L(rᵢ) hᵢ + c)`, `c = 2πγ/(αζ)`, where `Ψ` is a PPP of
//! density `β/(2πζ)`. Lengths here are in units of `length_scale_m` (1 km by
//! default, matching densities per km²), so `γ` is in those units squared.

use std::cell::Cell;
use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::{AntennaError, AntennaScaling};
use crate::fading::{FadingError, LinkFadingConfig, LinkSamplers};
use crate::geometry::ADEQUACY_FRACTION;
use crate::pathloss::{self, PathLossError, PathLossModel};
use crate::quadrature::{self, QuadratureError, Tolerance};
use crate::rng::{Purpose, StreamKey};
use crate::stats::Summary;

/// Denominators below this are refused rather than divided by.
pub const DEGENERATE_FLOOR: f64 = 1e-12;
/// The disk carrying `Ψ` holds at least this many expected points.
pub const LIMIT_MIN_EXPECTED_POINTS: f64 = 50.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("invalid limit parameters: {0}")]
    InvalidParameter(String),
    #[error("gamma {given} disagrees with the model's {computed}")]
    GammaMismatch { given: f64, computed: f64 },
    #[error("degenerate limit: denominator {denominator:e} is below {DEGENERATE_FLOOR:e} (alpha*zeta too large for beta)")]
    Degenerate { denominator: f64 },
    #[error("inner integral diverges for {model}: {source}")]
    Divergent {
        model: String,
        #[source]
        source: QuadratureError,
    },
    #[error("mean-limit quadrature failed: {0}")]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    PathLoss(#[from] PathLossError),
    #[error(transparent)]
    Fading(#[from] FadingError),
    #[error(transparent)]
    Antenna(#[from] AntennaError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub l0: f64,
    /// `∫ r L(r) dr` in `length_scale_m²` units.
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub zeta: f64,
    pub model: PathLossModel,
    pub fading: LinkFadingConfig,
    pub length_scale_m: f64,
}

impl LimitParams {
    /// Takes `l0` and `γ` from the model.
    pub fn new(
        model: PathLossModel,
        alpha: f64,
        beta: f64,
        zeta: f64,
        fading: LinkFadingConfig,
        length_scale_m: f64,
    ) -> Result<Self, LimitError> {
        let gamma = pathloss::gamma(&model, 1e-10)? / (length_scale_m * length_scale_m);
        let params = Self {
            l0: model.l0(),
            gamma,
            alpha,
            beta,
            zeta,
            model,
            fading,
            length_scale_m,
        };
        params.check_ranges()?;
        Ok(params)
    }

    /// Limit parameters of a linear-scaling antenna family, densities per km².
    pub fn from_scaling(model: PathLossModel, scaling: &AntennaScaling, fading: LinkFadingConfig) -> Result<Self, LimitError> {
        let (alpha, beta) = scaling.limit_slope()?;
        Self::new(model, alpha, beta, scaling.zeta, fading, 1000.0)
    }

    fn check_ranges(&self) -> Result<(), LimitError> {
        let bad = |s: &str| Err(LimitError::InvalidParameter(s.to_string()));
        if !(self.l0 > 0.0 && self.l0.is_finite()) {
            return bad("l0 must be positive and finite");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be positive and finite");
        }
        if !(self.alpha > 0.0) {
            return bad("alpha must be positive");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be nonnegative and finite");
        }
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return bad("zeta must be positive and finite");
        }
        if !(self.length_scale_m > 0.0 && self.length_scale_m.is_finite()) {
            return bad("length scale must be positive");
        }
        self.fading.check()?;
        if self.beta == 0.0 && self.noise_floor() < DEGENERATE_FLOOR {
            return Err(LimitError::Degenerate {
                denominator: self.noise_floor(),
            });
        }
        Ok(())
    }

    /// Checks ranges and that `l0` and `γ` match the model.
    pub fn validate(&self) -> Result<(), LimitError> {
        self.check_ranges()?;
        if self.l0 != self.model.l0() {
            return Err(LimitError::InvalidParameter(format!(
                "l0 {} differs from the model's {}",
                self.l0,
                self.model.l0()
            )));
        }
        let computed = pathloss::gamma(&self.model, 1e-10)? / (self.length_scale_m * self.length_scale_m);
        if (computed - self.gamma).abs() > 1e-6 * computed {
            return Err(LimitError::GammaMismatch {
                given: self.gamma,
                computed,
            });
        }
        Ok(())
    }

    /// `c = 2πγ/(αζ)`, the deterministic part of the limiting denominator.
    pub fn noise_floor(&self) -> f64 {
        2.0 * PI * self.gamma / (self.alpha * self.zeta)
    }

    /// Density of `Ψ`, `β/(2πζ)`.
    pub fn interferer_density(&self) -> f64 {
        self.beta / (2.0 * PI * self.zeta)
    }

    #[inline]
    fn gain(&self, r: f64) -> f64 {
        self.model.gain(r * self.length_scale_m)
    }

    fn tail(&self, r: f64) -> Result<f64, PathLossError> {
        let s = self.length_scale_m;
        Ok(pathloss::tail_integral(&self.model, r * s, 1e-8)? / (s * s))
    }
}

/// Draws of the limiting SINR. The disk carrying `Ψ` is the smallest one
/// meeting the window adequacy rule, but holds at least
/// [`LIMIT_MIN_EXPECTED_POINTS`] expected points. Interference from beyond
/// the disk enters through its mean.
#[derive(Debug, Clone)]
pub struct LimitSampler<'a> {
    params: &'a LimitParams,
    radius: f64,
    outside: f64,
    poisson: Option<Poisson<f64>>,
    samplers: LinkSamplers,
}

impl<'a> LimitSampler<'a> {
    pub fn new(params: &'a LimitParams) -> Result<Self, LimitError> {
        params.check_ranges()?;
        let density = params.interferer_density();
        let c = params.noise_floor();
        let ok = |r: f64| -> Result<bool, LimitError> {
            let tail = params.tail(r)?.min(params.gamma);
            let scale = 2.0 * PI * density;
            Ok(scale * tail < ADEQUACY_FRACTION * (c + scale * (params.gamma - tail)))
        };
        let mut radius = 0.0;
        if density > 0.0 {
            let mut hi = params.model.characteristic_length_m() / params.length_scale_m;
            let mut steps = 0;
            while !ok(hi)? {
                hi *= 2.0;
                steps += 1;
                if steps > 200 {
                    return Err(LimitError::InvalidParameter("no adequate disk for the interferer process".into()));
                }
            }
            let mut lo = 0.0;
            while hi - lo > 1e-4 * hi {
                let mid = 0.5 * (lo + hi);
                if ok(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            radius = hi.max((LIMIT_MIN_EXPECTED_POINTS / (PI * density)).sqrt());
        }
        let outside = if density > 0.0 {
            2.0 * PI * density * params.fading.mainlobe_interf.mean() * params.tail(radius)?.min(params.gamma)
        } else {
            0.0
        };
        let mean = density * PI * radius * radius;
        let poisson = if mean > 0.0 {
            Some(Poisson::new(mean).map_err(|e| LimitError::InvalidParameter(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            params,
            radius,
            outside,
            poisson,
            samplers: params.fading.samplers()?,
        })
    }

    /// Radius of the disk carrying `Ψ`, in `length_scale_m` units.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Mean interference from `Ψ` beyond [`radius`](Self::radius).
    pub fn outside_mean(&self) -> f64 {
        self.outside
    }

    pub fn sample(&self, key: StreamKey) -> Result<f64, LimitError> {
        let p = self.params;
        let count = match &self.poisson {
            Some(d) => d.sample(&mut key.rng_for(Purpose::Count)) as usize,
            None => 0,
        };
        let mut radii = key.rng_for(Purpose::Radius);
        let mut fade = key.rng_for(Purpose::InterfererFading);
        let r2max = self.radius * self.radius;
        let mut sum = 0.0;
        for _ in 0..count {
            let r = (r2max * radii.random::<f64>()).sqrt();
            sum += p.gain(r) * self.samplers.mainlobe.sample(&mut fade);
        }
        let denominator = sum + self.outside + p.noise_floor();
        if !(denominator >= DEGENERATE_FLOOR) {
            return Err(LimitError::Degenerate { denominator });
        }
        let h0 = self.samplers.desired.sample(&mut key.rng_for(Purpose::DesiredFading));
        Ok(p.l0 * h0 / denominator)
    }
}

pub fn sample_limit_sinr(params: &LimitParams, key: StreamKey) -> Result<f64, LimitError> {
    LimitSampler::new(params)?.sample(key)
}

/// Mean of `samples` limit draws, keyed `StreamKey::new(seed).child(i)`.
pub fn monte_carlo_mean(params: &LimitParams, samples: usize, seed: u64) -> Result<Summary, LimitError> {
    let sampler = LimitSampler::new(params)?;
    let root = StreamKey::new(seed);
    let draws: Vec<Result<f64, LimitError>> = (0..samples)
        .into_par_iter()
        .map(|i| sampler.sample(root.child(i as u64)))
        .collect();
    let draws: Vec<f64> = draws.into_iter().collect::<Result<_, _>>()?;
    Ok(Summary::of(&draws))
}

/// `J(t) = ∫₀^∞ E[1 − exp(−t h L(r))] r dr` over the main-lobe fading.
fn inner_integral(params: &LimitParams, t: f64, rel_tol: f64) -> Result<f64, LimitError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let fading = params.fading.mainlobe_interf;
    let failure: Cell<Option<FadingError>> = Cell::new(None);
    let width = params.model.characteristic_length_m() / params.length_scale_m;
    let est = quadrature::integrate_to_infinity(
        |r| match fading.one_minus_exp_moment(t * params.gain(r)) {
            Ok(v) => v * r,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        },
        0.0,
        width,
        Tolerance::relative(rel_tol),
        None,
    );
    if let Some(e) = failure.take() {
        return Err(e.into());
    }
    est.map(|e| e.value).map_err(|source| LimitError::Divergent {
        model: params.model.name(),
        source,
    })
}

/// Outer and inner relative tolerances of [`evaluate_mean_limit`].
pub const OUTER_REL_TOL: f64 = 1e-6;
pub const INNER_REL_TOL: f64 = 1e-8;

/// `∫₀^∞ L0 exp(−c t − (β/ζ) J(t)) dt`, the mean of the limiting SINR.
pub fn evaluate_mean_limit(params: &LimitParams, rel_tol: f64) -> Result<f64, LimitError> {
    params.check_ranges()?;
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(LimitError::InvalidParameter(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    let c = params.noise_floor();
    if params.beta == 0.0 {
        return Ok(params.l0 / c);
    }
    let inner_tol = (rel_tol * 1e-2).clamp(1e-12, INNER_REL_TOL.max(rel_tol * 1e-2));
    let weight = params.beta / params.zeta;
    let failure: Cell<Option<LimitError>> = Cell::new(None);
    let integrand = |t: f64| match inner_integral(params, t, inner_tol) {
        Ok(j) => params.l0 * (-c * t - weight * j).exp(),
        Err(e) => {
            failure.set(Some(e));
            f64::NAN
        }
    };
    // The integrand is decreasing, so its value at T over c bounds the tail.
    let tail = |t: f64| -> Option<f64> { (c > 0.0).then(|| integrand(t) / c) };
    let width = 0.5 / (c + weight * params.gamma);
    let est = quadrature::integrate_to_infinity(
        integrand,
        0.0,
        width,
        Tolerance::relative(rel_tol),
        Some(&tail),
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(est?.value)
}

/// `(L0 αζ/(γ(2π + αβ)), L0 αζ/(2πγ))`.
pub fn mean_sinr_bounds(params: &LimitParams) -> (f64, f64) {
    let c = params.noise_floor();
    let spread = params.beta * params.gamma / params.zeta;
    (params.l0 / (c + spread), params.l0 / c)
}

/// Bounds on the limit of the mean spectral efficiency `E[ASE]/λ`, bps/Hz.
pub fn ase_slope_bounds(params: &LimitParams) -> (f64, f64) {
    let c = params.noise_floor();
    let spread = params.beta * params.gamma / params.zeta;
    let lower = params.l0 / ((spread + c + params.l0) * LN_2);
    (lower, params.l0 / (c * LN_2))
}

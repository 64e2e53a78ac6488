//! Monte Carlo estimates of SINR, spectral efficiency and ASE.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::{self, AntennaError, AntennaScaling, BeamPattern};
use crate::fading::{FadingError, LinkFadingConfig, LinkSamplers};
use crate::geometry::{
    self, AdequacyReport, GeometryError, NetworkRealization, SimulationWindow, WindowSpec, DEFAULT_CAPACITY,
    DEFAULT_MAX_RESAMPLES,
};
use crate::pathloss::{self, PathLossError, PathLossModel};
use crate::rng::{Purpose, StreamKey};
use crate::stats::{self, Summary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("at least 2 trials are needed, got {0}")]
    TooFewTrials(usize),
    #[error("noise power must be finite and nonnegative, got {0}")]
    InvalidNoise(f64),
    #[error("densities must be strictly increasing")]
    NotIncreasing,
    #[error("path-loss model is not feasible: {0}")]
    Infeasible(String),
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: GeometryError,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Antenna(#[from] AntennaError),
    #[error(transparent)]
    Fading(#[from] FadingError),
    #[error(transparent)]
    PathLoss(#[from] PathLossError),
}

/// SINR of one drop and its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrSample {
    pub sinr: f64,
    pub signal: f64,
    pub interference_main: f64,
    pub interference_side: f64,
    pub noise: f64,
    pub serving_distance_m: f64,
}

impl SinrSample {
    fn new(signal: f64, interference_main: f64, interference_side: f64, noise: f64, serving_distance_m: f64) -> Self {
        Self {
            sinr: signal / (interference_main + interference_side + noise),
            signal,
            interference_main,
            interference_side,
            noise,
            serving_distance_m,
        }
    }
}

/// Thermal noise power relative to the transmit power, as a linear ratio.
pub fn thermal_noise_power(bandwidth_hz: f64, noise_figure_db: f64, tx_power_dbm: f64) -> f64 {
    let noise_dbm = -174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db;
    10f64.powf((noise_dbm - tx_power_dbm) / 10.0)
}

/// Thermal noise over 100 MHz at a 9 dB noise figure, 30 dBm transmit power.
pub fn default_noise_power() -> f64 {
    thermal_noise_power(100e6, 9.0, 30.0)
}

pub fn sinr_of(realization: &NetworkRealization, model: &PathLossModel, pattern: &BeamPattern, sigma2: f64) -> SinrSample {
    let gain = |i: usize, r: f64| match &realization.blockage_draws {
        Some(u) => model.link_gain(r, u[i]),
        None => model.gain(r),
    };
    let s = realization.serving_index;
    let r0 = realization.bs_positions[s].distance_m();
    let signal = gain(s, r0) * pattern.g_max * realization.fading_draws[s];
    let (mut main, mut side) = (0.0, 0.0);
    for (i, p) in realization.bs_positions.iter().enumerate() {
        if i == s {
            continue;
        }
        let l = gain(i, p.distance_m()) * realization.fading_draws[i];
        if realization.mainlobe_flags[i] {
            main += pattern.g_max * l;
        } else {
            side += pattern.g_min * l;
        }
    }
    SinrSample::new(signal, main, side, sigma2, r0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub window: WindowSpec,
    pub pathloss: PathLossModel,
    pub scaling: AntennaScaling,
    pub fading: LinkFadingConfig,
    pub noise_power: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub max_resamples: u32,
    /// Largest expected BS count per drop.
    pub capacity: f64,
}

impl SimulationConfig {
    pub fn new(pathloss: PathLossModel, scaling: AntennaScaling, master_seed: u64) -> Self {
        Self {
            window: WindowSpec::default_square(),
            pathloss,
            scaling,
            fading: LinkFadingConfig::default(),
            noise_power: default_noise_power(),
            trials: 20_000,
            master_seed,
            max_resamples: DEFAULT_MAX_RESAMPLES,
            capacity: DEFAULT_CAPACITY,
        }
    }

    /// Key of point `point_index`; trial `t` uses `point_key(i).child(t)`.
    pub fn point_key(&self, point_index: usize) -> StreamKey {
        StreamKey::new(self.master_seed).child(point_index as u64)
    }
}

/// Everything one density point needs, resolved once.
#[derive(Debug, Clone)]
pub struct PointRunner<'a> {
    config: &'a SimulationConfig,
    lambda: f64,
    key: StreamKey,
    n_antennas: u64,
    pattern: BeamPattern,
    window: SimulationWindow,
    samplers: LinkSamplers,
    p_main: f64,
    blockage: bool,
}

impl<'a> PointRunner<'a> {
    pub fn new(lambda: f64, point_index: usize, config: &'a SimulationConfig) -> Result<Self, SimError> {
        geometry::check_density(lambda)?;
        if !(config.noise_power >= 0.0 && config.noise_power.is_finite()) {
            return Err(SimError::InvalidNoise(config.noise_power));
        }
        let n_antennas = antenna::antennas_for_density(&config.scaling, lambda)?;
        let pattern = antenna::pattern_for(&config.scaling, n_antennas)?;
        let window = config
            .window
            .resolve(lambda, &config.pathloss, &pattern, config.noise_power)?;
        Ok(Self {
            config,
            lambda,
            key: config.point_key(point_index),
            n_antennas,
            pattern,
            window,
            samplers: config.fading.samplers()?,
            p_main: pattern.mainlobe_probability(),
            blockage: config.pathloss.uses_blockage_draws(),
        })
    }

    pub fn window(&self) -> SimulationWindow {
        self.window
    }

    pub fn pattern(&self) -> BeamPattern {
        self.pattern
    }

    pub fn n_antennas(&self) -> u64 {
        self.n_antennas
    }

    pub fn trial_key(&self, trial: usize) -> StreamKey {
        self.key.child(trial as u64)
    }

    /// The drop of trial `trial`, materialised.
    pub fn realize(&self, trial: usize) -> Result<NetworkRealization, GeometryError> {
        let options = geometry::RealizeOptions {
            max_resamples: self.config.max_resamples,
            capacity: self.config.capacity,
            blockage_draws: self.blockage,
        };
        geometry::realize(
            self.lambda,
            &self.window,
            &self.config.scaling,
            &self.config.fading,
            self.trial_key(trial),
            &options,
        )
    }

    /// SINR of trial `trial` without building the realization; identical
    /// draws to [`realize`](Self::realize) followed by [`sinr_of`].
    pub fn trial(&self, trial: usize, r2: &mut Vec<f64>) -> Result<SinrSample, GeometryError> {
        let key = self.trial_key(trial);
        let mut attempt = 0;
        let (k, count) = loop {
            let k = geometry::attempt_key(key, attempt);
            let count = geometry::draw_count(self.lambda, &self.window, k, self.config.capacity)?;
            if count > 0 {
                break (k, count);
            }
            attempt += 1;
            if attempt > self.config.max_resamples {
                return Err(GeometryError::EmptyNetwork { attempts: attempt });
            }
        };
        geometry::fill_squared_radii(&self.window, count, k, r2);
        let serving = geometry::argmin(r2.iter().copied()).expect("nonempty");

        let model = &self.config.pathloss;
        let g = &self.pattern;
        let h0 = self.samplers.desired.sample(&mut k.rng_for(Purpose::DesiredFading));
        let mut beam = k.rng_for(Purpose::Beam);
        let mut fade = k.rng_for(Purpose::InterfererFading);
        let mut blockage = self.blockage.then(|| k.rng_for(Purpose::Blockage));

        let r0 = r2[serving].sqrt();
        let mut signal = 0.0;
        let (mut main, mut side) = (0.0, 0.0);
        for (i, &d2) in r2.iter().enumerate() {
            let r = d2.sqrt();
            let l = match blockage.as_mut() {
                Some(rng) => model.link_gain(r, rng.random::<f64>()),
                None => model.gain(r),
            };
            if i == serving {
                signal = l * g.g_max * h0;
                continue;
            }
            if beam.random::<f64>() < self.p_main {
                main += g.g_max * l * self.samplers.mainlobe.sample(&mut fade);
            } else {
                side += g.g_min * l * self.samplers.sidelobe.sample(&mut fade);
            }
        }
        Ok(SinrSample::new(signal, main, side, self.config.noise_power, r0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityPointEstimate {
    pub lambda: f64,
    pub n_antennas: u64,
    pub trials: usize,
    pub mean_sinr: f64,
    /// Half-width of the 95% interval of `mean_sinr`.
    pub sinr_ci: f64,
    pub median_sinr: f64,
    /// `E[log2(1 + SINR)]` in bps/Hz.
    pub mean_se: f64,
    pub se_ci: f64,
    /// `λ · mean_se` with `λ` per m², in bps/Hz/m².
    pub ase: f64,
    /// Raw key of the point; trial keys derive from it.
    pub seed: u64,
    pub window: SimulationWindow,
    pub adequacy: AdequacyReport,
}

/// Per-m² ASE from a per-km² density.
pub fn ase_per_m2(lambda_per_km2: f64, mean_se: f64) -> f64 {
    lambda_per_km2 * 1e-6 * mean_se
}

pub fn estimate_point(lambda: f64, config: &SimulationConfig) -> Result<DensityPointEstimate, SimError> {
    estimate_point_at(lambda, 0, config)
}

/// Estimate at sweep position `point_index`, which selects the point's
/// random streams.
pub fn estimate_point_at(
    lambda: f64,
    point_index: usize,
    config: &SimulationConfig,
) -> Result<DensityPointEstimate, SimError> {
    if config.trials < 2 {
        return Err(SimError::TooFewTrials(config.trials));
    }
    let report = pathloss::validate(&config.pathloss, 1e-8);
    if !report.is_feasible {
        let reasons: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(SimError::Infeasible(reasons.join("; ")));
    }
    let runner = PointRunner::new(lambda, point_index, config)?;
    let adequacy = geometry::check_adequacy(
        &runner.window,
        lambda,
        &config.pathloss,
        &runner.pattern,
        config.noise_power,
    )?;

    let outcomes: Vec<Result<f64, GeometryError>> = (0..config.trials)
        .into_par_iter()
        .map_init(Vec::new, |buf, t| runner.trial(t, buf).map(|s| s.sinr))
        .collect();
    let mut sinr = Vec::with_capacity(config.trials);
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        sinr.push(outcome.map_err(|source| SimError::Trial { trial, source })?);
    }

    let se: Vec<f64> = sinr.iter().map(|s| s.ln_1p() / std::f64::consts::LN_2).collect();
    let s_sum = Summary::of(&sinr);
    let se_sum = Summary::of(&se);
    Ok(DensityPointEstimate {
        lambda,
        n_antennas: runner.n_antennas,
        trials: config.trials,
        mean_sinr: s_sum.mean,
        sinr_ci: s_sum.ci95(),
        median_sinr: stats::median(&sinr),
        mean_se: se_sum.mean,
        se_ci: se_sum.ci95(),
        ase: ase_per_m2(lambda, se_sum.mean),
        seed: runner.key.raw(),
        window: runner.window,
        adequacy,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointOutcome {
    pub lambda: f64,
    pub result: Result<DensityPointEstimate, SimError>,
    pub elapsed: Duration,
}

/// One estimate per density; a failing point does not stop the others.
pub fn sweep(lambdas: &[f64], config: &SimulationConfig) -> Result<Vec<PointOutcome>, SimError> {
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SimError::NotIncreasing);
    }
    Ok(lambdas
        .par_iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let start = Instant::now();
            let result = estimate_point_at(lambda, i, config);
            PointOutcome {
                lambda,
                result,
                elapsed: start.elapsed(),
            }
        })
        .collect())
}

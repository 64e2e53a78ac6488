//! Poisson base-station drops around a tagged user at the origin.
//!
//! Densities are per km²; positions and distances are in metres.
//!
//! Draw order inside one trial, per stream (see [`Purpose`]):
//! `Count` gives the Poisson count; `Radius` and `Angle` give the positions
//! (squared radius and angle for a disk, `x` and `y` for a square);
//! `DesiredFading` gives `h̃`; `Beam` and `InterfererFading` give one flag and
//! one fading draw per interferer in index order; `Blockage` gives one
//! uniform per BS in index order, only when the path-loss model needs it. An
//! empty drop is retried with keys derived from `Attempt`.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::{self, AntennaError, AntennaScaling, BeamPattern};
use crate::fading::{FadingError, LinkFadingConfig};
use crate::pathloss::{self, PathLossError, PathLossModel};
use crate::rng::{Purpose, StreamKey};

/// Default bound on the expected number of BSs in one drop.
pub const DEFAULT_CAPACITY: f64 = 1e8;
/// Default number of redraws of an empty drop.
pub const DEFAULT_MAX_RESAMPLES: u32 = 100;
/// Below this many expected BSs a window is flagged as too small.
pub const MIN_EXPECTED_POINTS: f64 = 100.0;
/// Out-of-window interference must stay below this fraction of the noise plus
/// in-window interference.
pub const ADEQUACY_FRACTION: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("density must be positive and finite, got {0} per km²")]
    InvalidDensity(f64),
    #[error("window extent must be positive and finite")]
    InvalidWindow,
    #[error("expected {expected:.3e} BSs per drop exceeds the cap of {cap:.3e}; use a smaller window")]
    Capacity { expected: f64, cap: f64 },
    #[error("no base station in the window after {attempts} attempts")]
    EmptyNetwork { attempts: u32 },
    #[error("probability must lie in (0, 1), got {0}")]
    InvalidProbability(f64),
    #[error(transparent)]
    Antenna(#[from] AntennaError),
    #[error(transparent)]
    Fading(#[from] FadingError),
    #[error(transparent)]
    PathLoss(#[from] PathLossError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimulationWindow {
    Square { side_km: f64 },
    Disk { radius_km: f64 },
}

impl SimulationWindow {
    pub fn check(&self) -> Result<(), GeometryError> {
        let extent = match *self {
            SimulationWindow::Square { side_km } => side_km,
            SimulationWindow::Disk { radius_km } => radius_km,
        };
        if extent > 0.0 && extent.is_finite() {
            Ok(())
        } else {
            Err(GeometryError::InvalidWindow)
        }
    }

    pub fn area_km2(&self) -> f64 {
        match *self {
            SimulationWindow::Square { side_km } => side_km * side_km,
            SimulationWindow::Disk { radius_km } => PI * radius_km * radius_km,
        }
    }

    /// Radius of the largest disk around the origin inside the window.
    pub fn inscribed_radius_m(&self) -> f64 {
        match *self {
            SimulationWindow::Square { side_km } => 500.0 * side_km,
            SimulationWindow::Disk { radius_km } => 1000.0 * radius_km,
        }
    }

    pub fn expected_points(&self, lambda: f64) -> f64 {
        lambda * self.area_km2()
    }
}

/// A fixed window, or [`Auto`](WindowSpec::Auto): the smallest disk that
/// passes the adequacy rule and holds at least [`MIN_EXPECTED_POINTS`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowSpec {
    Square { side_km: f64 },
    Disk { radius_km: f64 },
    Auto,
}

impl From<SimulationWindow> for WindowSpec {
    fn from(w: SimulationWindow) -> Self {
        match w {
            SimulationWindow::Square { side_km } => WindowSpec::Square { side_km },
            SimulationWindow::Disk { radius_km } => WindowSpec::Disk { radius_km },
        }
    }
}

impl WindowSpec {
    pub fn default_square() -> Self {
        WindowSpec::Square { side_km: 20.0 }
    }

    pub fn resolve(
        &self,
        lambda: f64,
        model: &PathLossModel,
        pattern: &BeamPattern,
        noise_power: f64,
    ) -> Result<SimulationWindow, GeometryError> {
        let window = match *self {
            WindowSpec::Square { side_km } => SimulationWindow::Square { side_km },
            WindowSpec::Disk { radius_km } => SimulationWindow::Disk { radius_km },
            WindowSpec::Auto => SimulationWindow::Disk {
                radius_km: adequate_radius_m(lambda, model, pattern, noise_power)? / 1000.0,
            },
        };
        window.check()?;
        Ok(window)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x_m: f64,
    pub y_m: f64,
}

impl Point {
    pub fn distance_m(&self) -> f64 {
        self.x_m.hypot(self.y_m)
    }
}

pub(crate) fn check_density(lambda: f64) -> Result<(), GeometryError> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::InvalidDensity(lambda))
    }
}

/// Key of attempt `attempt` of one trial; attempt 0 is the trial key itself.
pub(crate) fn attempt_key(trial: StreamKey, attempt: u32) -> StreamKey {
    if attempt == 0 {
        trial
    } else {
        trial.purpose(Purpose::Attempt).child(attempt as u64)
    }
}

pub(crate) fn draw_count(lambda: f64, window: &SimulationWindow, key: StreamKey, cap: f64) -> Result<usize, GeometryError> {
    let expected = window.expected_points(lambda);
    if expected > cap {
        return Err(GeometryError::Capacity { expected, cap });
    }
    if expected == 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(expected).map_err(|_| GeometryError::InvalidDensity(lambda))?;
    Ok(poisson.sample(&mut key.rng_for(Purpose::Count)) as usize)
}

/// Squared distances of `count` uniform points, consuming the position
/// streams exactly as [`sample_ppp`] does.
pub(crate) fn fill_squared_radii(window: &SimulationWindow, count: usize, key: StreamKey, out: &mut Vec<f64>) {
    out.clear();
    out.reserve(count);
    let mut first = key.rng_for(Purpose::Radius);
    match *window {
        SimulationWindow::Disk { .. } => {
            let r2max = window.inscribed_radius_m().powi(2);
            out.extend((0..count).map(|_| r2max * first.random::<f64>()));
        }
        SimulationWindow::Square { side_km } => {
            let side = 1000.0 * side_km;
            let mut second = key.rng_for(Purpose::Angle);
            out.extend((0..count).map(|_| {
                let x = side * (first.random::<f64>() - 0.5);
                let y = side * (second.random::<f64>() - 0.5);
                x * x + y * y
            }));
        }
    }
}

fn positions(window: &SimulationWindow, count: usize, key: StreamKey) -> Vec<Point> {
    let mut first = key.rng_for(Purpose::Radius);
    let mut second = key.rng_for(Purpose::Angle);
    match *window {
        SimulationWindow::Disk { .. } => {
            let r2max = window.inscribed_radius_m().powi(2);
            (0..count)
                .map(|_| {
                    let r = (r2max * first.random::<f64>()).sqrt();
                    let (s, c) = (2.0 * PI * second.random::<f64>()).sin_cos();
                    Point { x_m: r * c, y_m: r * s }
                })
                .collect()
        }
        SimulationWindow::Square { side_km } => {
            let side = 1000.0 * side_km;
            (0..count)
                .map(|_| Point {
                    x_m: side * (first.random::<f64>() - 0.5),
                    y_m: side * (second.random::<f64>() - 0.5),
                })
                .collect()
        }
    }
}

/// Homogeneous PPP of density `lambda` (per km²) in `window`.
pub fn sample_ppp(lambda: f64, window: &SimulationWindow, key: StreamKey, cap: f64) -> Result<Vec<Point>, GeometryError> {
    check_density(lambda)?;
    window.check()?;
    let count = draw_count(lambda, window, key, cap)?;
    Ok(positions(window, count, key))
}

/// Knobs of [`realize`] beyond the physical model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizeOptions {
    pub max_resamples: u32,
    pub capacity: f64,
    /// Draw one blockage uniform per link.
    pub blockage_draws: bool,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        Self {
            max_resamples: DEFAULT_MAX_RESAMPLES,
            capacity: DEFAULT_CAPACITY,
            blockage_draws: false,
        }
    }
}

/// One drop. Per-BS vectors are index-aligned with `bs_positions`; the
/// serving entry has flag `true` and carries `h̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub bs_positions: Vec<Point>,
    pub serving_index: usize,
    pub mainlobe_flags: Vec<bool>,
    pub fading_draws: Vec<f64>,
    pub blockage_draws: Option<Vec<f64>>,
    pub lambda: f64,
    pub n_antennas: u64,
    pub pattern: BeamPattern,
    /// Raw key of the attempt that produced the drop.
    pub seed: u64,
    pub attempts: u32,
}

impl NetworkRealization {
    pub fn interferer_count(&self) -> usize {
        self.bs_positions.len() - 1
    }

    pub fn serving_distance_m(&self) -> f64 {
        self.bs_positions[self.serving_index].distance_m()
    }

    pub fn mainlobe_interferers(&self) -> usize {
        self.mainlobe_flags.iter().filter(|&&f| f).count() - 1
    }

    /// Writes `x_m,y_m,is_serving,mainlobe_flag,fading` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x_m", "y_m", "is_serving", "mainlobe_flag", "fading"])?;
        for (i, p) in self.bs_positions.iter().enumerate() {
            w.write_record([
                p.x_m.to_string(),
                p.y_m.to_string(),
                (i == self.serving_index).to_string(),
                self.mainlobe_flags[i].to_string(),
                self.fading_draws[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Index of the smallest entry; ties go to the lowest index.
pub(crate) fn argmin(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.map_or(true, |(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

pub fn realize(
    lambda: f64,
    window: &SimulationWindow,
    scaling: &AntennaScaling,
    fading: &LinkFadingConfig,
    key: StreamKey,
    options: &RealizeOptions,
) -> Result<NetworkRealization, GeometryError> {
    check_density(lambda)?;
    window.check()?;
    let n_antennas = antenna::antennas_for_density(scaling, lambda)?;
    let pattern = antenna::pattern_for(scaling, n_antennas)?;
    let samplers = fading.samplers()?;
    let p_main = pattern.mainlobe_probability();

    for attempt in 0..=options.max_resamples {
        let k = attempt_key(key, attempt);
        let count = draw_count(lambda, window, k, options.capacity)?;
        if count == 0 {
            continue;
        }
        let bs_positions = positions(window, count, k);
        let serving_index = argmin(bs_positions.iter().map(|p| p.x_m * p.x_m + p.y_m * p.y_m)).expect("nonempty");

        let mut flags = vec![true; count];
        let mut draws = vec![0.0; count];
        draws[serving_index] = samplers.desired.sample(&mut k.rng_for(Purpose::DesiredFading));
        let mut beam = k.rng_for(Purpose::Beam);
        let mut fade = k.rng_for(Purpose::InterfererFading);
        for i in (0..count).filter(|&i| i != serving_index) {
            flags[i] = beam.random::<f64>() < p_main;
            draws[i] = if flags[i] {
                samplers.mainlobe.sample(&mut fade)
            } else {
                samplers.sidelobe.sample(&mut fade)
            };
        }
        let blockage_draws = options.blockage_draws.then(|| {
            let mut rng = k.rng_for(Purpose::Blockage);
            (0..count).map(|_| rng.random::<f64>()).collect()
        });
        return Ok(NetworkRealization {
            bs_positions,
            serving_index,
            mainlobe_flags: flags,
            fading_draws: draws,
            blockage_draws,
            lambda,
            n_antennas,
            pattern,
            seed: k.raw(),
            attempts: attempt + 1,
        });
    }
    Err(GeometryError::EmptyNetwork {
        attempts: options.max_resamples + 1,
    })
}

/// Quantile of the nearest-BS distance, `√(−ln(1−p)/(πλ))`, in metres.
pub fn serving_distance_quantile(lambda: f64, p: f64) -> Result<f64, GeometryError> {
    check_density(lambda)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(GeometryError::InvalidProbability(p));
    }
    Ok(1000.0 * (-(-p).ln_1p() / (PI * lambda)).sqrt())
}

/// Outcome of the edge-truncation check for one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdequacyReport {
    /// Mean interference from beyond the inscribed radius.
    pub neglected: f64,
    /// Mean interference from inside the inscribed radius.
    pub in_window: f64,
    pub noise_power: f64,
    pub expected_points: f64,
    pub adequate: bool,
    pub enough_points: bool,
    /// Smallest inscribed radius that passes both checks, in km.
    pub suggested_radius_km: f64,
}

impl AdequacyReport {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.adequate {
            out.push(format!(
                "out-of-window interference {:.3e} is not below {} x (noise + in-window interference {:.3e}); \
                 suggest an inscribed radius of at least {:.3} km",
                self.neglected,
                ADEQUACY_FRACTION,
                self.noise_power + self.in_window,
                self.suggested_radius_km
            ));
        }
        if !self.enough_points {
            out.push(format!(
                "window holds {:.1} expected BSs, fewer than {MIN_EXPECTED_POINTS}",
                self.expected_points
            ));
        }
        out
    }
}

/// Mean gain seen from a uniformly oriented interferer.
fn interferer_gain(pattern: &BeamPattern) -> f64 {
    pattern.average_gain()
}

fn tail_terms(lambda: f64, model: &PathLossModel, pattern: &BeamPattern, radius_m: f64) -> Result<(f64, f64), PathLossError> {
    let density = 2.0 * PI * lambda * 1e-6 * interferer_gain(pattern);
    let gamma = pathloss::gamma(model, 1e-8)?;
    let tail = pathloss::tail_integral(model, radius_m, 1e-8)?.min(gamma);
    Ok((density * tail, density * (gamma - tail)))
}

fn passes(neglected: f64, in_window: f64, noise: f64) -> bool {
    neglected < ADEQUACY_FRACTION * (noise + in_window)
}

/// Smallest radius (m) that passes the adequacy rule and holds
/// [`MIN_EXPECTED_POINTS`] expected BSs.
pub fn adequate_radius_m(
    lambda: f64,
    model: &PathLossModel,
    pattern: &BeamPattern,
    noise_power: f64,
) -> Result<f64, GeometryError> {
    check_density(lambda)?;
    let points_radius = 1000.0 * (MIN_EXPECTED_POINTS / (PI * lambda)).sqrt();
    let ok = |r: f64| -> Result<bool, GeometryError> {
        let (neglected, in_window) = tail_terms(lambda, model, pattern, r)?;
        Ok(passes(neglected, in_window, noise_power))
    };
    let mut hi = model.characteristic_length_m().max(1.0);
    let mut steps = 0;
    while !ok(hi)? {
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(GeometryError::InvalidWindow);
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
    Ok(hi.max(points_radius))
}

pub fn check_adequacy(
    window: &SimulationWindow,
    lambda: f64,
    model: &PathLossModel,
    pattern: &BeamPattern,
    noise_power: f64,
) -> Result<AdequacyReport, GeometryError> {
    check_density(lambda)?;
    window.check()?;
    let (neglected, in_window) = tail_terms(lambda, model, pattern, window.inscribed_radius_m())?;
    let expected_points = window.expected_points(lambda);
    Ok(AdequacyReport {
        neglected,
        in_window,
        noise_power,
        expected_points,
        adequate: passes(neglected, in_window, noise_power),
        enough_points: expected_points >= MIN_EXPECTED_POINTS * (1.0 - 1e-9),
        suggested_radius_km: adequate_radius_m(lambda, model, pattern, noise_power)? / 1000.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::FadingModel;

    #[test]
    fn quantiles() {
        let median = serving_distance_quantile(1.0, 0.5).unwrap();
        assert!((median - 1000.0 * (2f64.ln() / PI).sqrt()).abs() < 1e-9);
        assert!((median - 469.7).abs() < 0.05);
        assert!(serving_distance_quantile(1.0, 1e-300).unwrap() < 1e-140);
        let q = serving_distance_quantile(3.0, 0.9).unwrap();
        assert!((serving_distance_quantile(12.0, 0.9).unwrap() - q / 2.0).abs() < 1e-12);
        assert!(serving_distance_quantile(1.0, 1.0).is_err());
        assert!(serving_distance_quantile(1.0, 0.0).is_err());
    }

    #[test]
    fn capacity_is_enforced() {
        let w = SimulationWindow::Square { side_km: 100.0 };
        let err = sample_ppp(1e5, &w, StreamKey::new(1), DEFAULT_CAPACITY).unwrap_err();
        assert!(matches!(err, GeometryError::Capacity { .. }));
        assert!(err.to_string().contains("smaller window"));
    }

    #[test]
    fn points_lie_in_window() {
        let key = StreamKey::new(5);
        let square = SimulationWindow::Square { side_km: 2.0 };
        for p in sample_ppp(50.0, &square, key, DEFAULT_CAPACITY).unwrap() {
            assert!(p.x_m.abs() <= 1000.0 && p.y_m.abs() <= 1000.0);
        }
        let disk = SimulationWindow::Disk { radius_km: 1.5 };
        let pts = sample_ppp(50.0, &disk, key, DEFAULT_CAPACITY).unwrap();
        assert!(!pts.is_empty());
        for p in pts {
            assert!(p.distance_m() <= 1500.0 + 1e-9);
        }
    }

    #[test]
    fn squared_radii_match_positions() {
        let key = StreamKey::new(9).child(4);
        for window in [SimulationWindow::Square { side_km: 3.0 }, SimulationWindow::Disk { radius_km: 2.0 }] {
            let pts = positions(&window, 500, key);
            let mut r2 = Vec::new();
            fill_squared_radii(&window, 500, key, &mut r2);
            for (p, r2) in pts.iter().zip(&r2) {
                let d2 = p.x_m * p.x_m + p.y_m * p.y_m;
                assert!((d2 - r2).abs() <= 1e-12 * r2.max(1.0));
            }
        }
    }

    #[test]
    fn omnidirectional_beams_are_all_mainlobe() {
        let scaling = AntennaScaling {
            family: crate::antenna::AntennaFamily::ParametricStep {
                alpha: 1.0,
                beta: 7.0,
                gmax: Default::default(),
            },
            gmin_rule: Default::default(),
            zeta: 1.0,
            epsilon: 1.0,
        };
        let w = SimulationWindow::Disk { radius_km: 5.0 };
        let r = realize(1.0, &w, &scaling, &LinkFadingConfig::default(), StreamKey::new(3), &RealizeOptions::default())
            .unwrap();
        assert!(r.mainlobe_flags.iter().all(|&f| f));
        assert_eq!(r.interferer_count(), r.bs_positions.len() - 1);
    }

    #[test]
    fn realization_invariants() {
        let w = SimulationWindow::Square { side_km: 4.0 };
        let scaling = AntennaScaling::ula(1.0, 1.0);
        let fading = LinkFadingConfig::uniform(FadingModel::Deterministic);
        let r = realize(20.0, &w, &scaling, &fading, StreamKey::new(8), &RealizeOptions::default()).unwrap();
        let d = r.serving_distance_m();
        assert!(r.bs_positions.iter().all(|p| p.distance_m() >= d));
        assert!(r.mainlobe_flags[r.serving_index]);
        assert!(r.fading_draws.iter().all(|&h| h == 1.0));
        assert_eq!(r.n_antennas, 20);
        assert!(r.blockage_draws.is_none());
        let again = realize(20.0, &w, &scaling, &fading, StreamKey::new(8), &RealizeOptions::default()).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn empty_windows_are_redrawn_or_reported() {
        let w = SimulationWindow::Square { side_km: 0.1 };
        let scaling = AntennaScaling::ula(1.0, 1.0);
        let opts = RealizeOptions {
            max_resamples: 3,
            ..Default::default()
        };
        let err = realize(1e-6, &w, &scaling, &LinkFadingConfig::default(), StreamKey::new(1), &opts).unwrap_err();
        assert_eq!(err, GeometryError::EmptyNetwork { attempts: 4 });
        // at λA = 1 roughly a third of keys start empty; all must succeed
        let w = SimulationWindow::Square { side_km: 1.0 };
        let mut retried = 0;
        for t in 0..200 {
            let r = realize(1.0, &w, &scaling, &LinkFadingConfig::default(), StreamKey::new(2).child(t), &RealizeOptions::default())
                .unwrap();
            retried += (r.attempts > 1) as usize;
        }
        assert!(retried > 30 && retried < 120, "{retried}");
    }

    #[test]
    fn csv_dump_has_one_row_per_bs() {
        let w = SimulationWindow::Disk { radius_km: 1.0 };
        let r = realize(30.0, &w, &AntennaScaling::ula(1.0, 1.0), &LinkFadingConfig::default(), StreamKey::new(4), &RealizeOptions::default())
            .unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x_m,y_m,is_serving,mainlobe_flag,fading"));
        assert_eq!(lines.count(), r.bs_positions.len());
        assert!(text.contains(",true,"));
    }

    #[test]
    fn auto_window_for_exponential_decay() {
        // σ² = 0: (1 + x) e^{-x} < 1e-3 (1 - (1 + x) e^{-x}) at x = R/ℓ ≈ 9.23
        let model = PathLossModel::stretched_exponential(200.0, 1.0).unwrap();
        let pattern = BeamPattern::omnidirectional();
        let r = adequate_radius_m(1e4, &model, &pattern, 0.0).unwrap();
        let x = r / 200.0;
        let t = (1.0 + x) * (-x).exp();
        assert!((t - 1e-3 * (1.0 - t)).abs() < 1e-6, "x = {x}");
        assert!((x - 9.23).abs() < 0.01);
        // sparse networks are sized by the point-count floor instead
        let r = adequate_radius_m(1.0, &model, &pattern, 0.0).unwrap();
        assert!((r - 1000.0 * (100.0 / PI).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn adequacy_flags_small_windows() {
        let model = PathLossModel::stretched_exponential(1000.0, 1.0).unwrap();
        let pattern = BeamPattern::omnidirectional();
        let small = SimulationWindow::Square { side_km: 4.0 };
        let report = check_adequacy(&small, 100.0, &model, &pattern, 0.0).unwrap();
        assert!(!report.adequate);
        assert!(report.warnings()[0].contains("suggest"));
        let big = SimulationWindow::Square { side_km: 20.0 };
        assert!(check_adequacy(&big, 100.0, &model, &pattern, 0.0).unwrap().adequate);
    }
}

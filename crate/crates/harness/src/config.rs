//! The experiment file: one TOML document with `pathloss`, `fading`,
//! `antenna`, `sweep` and `output` sections.

use std::fs;
use std::path::{Path, PathBuf};

use densify_core::antenna::{AntennaFamily, AntennaScaling, GmaxRule, GminRule};
use densify_core::fading::LinkFadingConfig;
use densify_core::geometry::{WindowSpec, DEFAULT_CAPACITY, DEFAULT_MAX_RESAMPLES};
use densify_core::pathloss::{GainTable, PathLossModel, UmaParams};
use densify_core::simulator::{self, SimulationConfig};
use serde::{Deserialize, Serialize};

use crate::{sha256_hex, HarnessError, TOOL_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pathloss: PathLossSection,
    #[serde(default)]
    pub fading: LinkFadingConfig,
    pub antenna: AntennaSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathLossSection {
    BoundedSingleSlope {
        exponent: f64,
        scale_m: f64,
        l0: Option<f64>,
    },
    StretchedExponential {
        scale_m: f64,
        #[serde(default = "one")]
        stretch: f64,
        l0: Option<f64>,
    },
    MultiSlope {
        breakpoints_m: Vec<f64>,
        exponents: Vec<f64>,
        l0: Option<f64>,
    },
    /// `r^-exponent` anchored at 1 m; singular at the origin.
    PowerLaw { exponent: f64 },
    Uma {
        #[serde(default)]
        params: UmaParams,
    },
    /// Two-column CSV (`r_m,gain`), path relative to the config file.
    Table { file: PathBuf, l0: Option<f64> },
}

impl PathLossSection {
    pub fn build(&self, base_dir: &Path) -> Result<PathLossModel, HarnessError> {
        let with_l0 = |m: PathLossModel, l0: Option<f64>| match l0 {
            Some(v) => m.with_l0(v),
            None => Ok(m),
        };
        let model = match self {
            Self::BoundedSingleSlope { exponent, scale_m, l0 } => {
                with_l0(PathLossModel::bounded_single_slope(*exponent, *scale_m)?, *l0)
            }
            Self::StretchedExponential { scale_m, stretch, l0 } => {
                with_l0(PathLossModel::stretched_exponential(*scale_m, *stretch)?, *l0)
            }
            Self::MultiSlope {
                breakpoints_m,
                exponents,
                l0,
            } => with_l0(PathLossModel::multi_slope(breakpoints_m.clone(), exponents.clone())?, *l0),
            Self::PowerLaw { exponent } => PathLossModel::multi_slope(vec![], vec![*exponent]),
            Self::Uma { params } => PathLossModel::uma(params.clone()),
            Self::Table { file, l0 } => {
                let path = base_dir.join(file);
                let bytes = fs::read(&path).map_err(|source| HarnessError::Io {
                    path: path.clone(),
                    source,
                })?;
                let table = GainTable::from_csv(bytes.as_slice())
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                with_l0(PathLossModel::user_defined(table), *l0)
            }
        };
        Ok(model?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    #[default]
    Ula,
    ParametricStep,
}

fn default_epsilons() -> Vec<f64> {
    vec![0.5, 1.0, 1.5]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaSection {
    #[serde(default)]
    pub family: FamilyName,
    /// Parametric family only.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gmax: Option<GmaxRule>,
    #[serde(default)]
    pub gmin_rule: GminRule,
    #[serde(default = "one")]
    pub zeta: f64,
    /// One scaling regime per entry.
    #[serde(default = "default_epsilons")]
    pub epsilon: Vec<f64>,
}

impl AntennaSection {
    pub fn scaling(&self, epsilon: f64) -> Result<AntennaScaling, HarnessError> {
        let family = match self.family {
            FamilyName::Ula => {
                if self.alpha.is_some() || self.beta.is_some() || self.gmax.is_some() {
                    return Err(HarnessError::Config(
                        "antenna: alpha, beta and gmax apply to family = \"parametric_step\" only".into(),
                    ));
                }
                AntennaFamily::Ula
            }
            FamilyName::ParametricStep => {
                let (Some(alpha), Some(beta)) = (self.alpha, self.beta) else {
                    return Err(HarnessError::Config(
                        "antenna: family = \"parametric_step\" needs alpha and beta".into(),
                    ));
                };
                AntennaFamily::ParametricStep {
                    alpha,
                    beta,
                    gmax: self.gmax.unwrap_or_default(),
                }
            }
        };
        let scaling = AntennaScaling {
            family,
            gmin_rule: self.gmin_rule,
            zeta: self.zeta,
            epsilon,
        };
        scaling.check()?;
        Ok(scaling)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            start: 1.0,
            stop: 1e4,
            points: 10,
        }
    }
}

impl GridSpec {
    /// Log-spaced, endpoints included.
    pub fn values(&self) -> Result<Vec<f64>, HarnessError> {
        if !(self.start > 0.0 && self.stop > self.start && self.stop.is_finite()) || self.points < 2 {
            return Err(HarnessError::Config(
                "sweep.grid needs 0 < start < stop and at least 2 points".into(),
            ));
        }
        let (a, b) = (self.start.log10(), self.stop.log10());
        let step = (b - a) / (self.points - 1) as f64;
        let mut v: Vec<f64> = (0..self.points).map(|k| 10f64.powf(a + step * k as f64)).collect();
        v[0] = self.start;
        v[self.points - 1] = self.stop;
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalNoise {
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub tx_power_dbm: f64,
}

impl Default for ThermalNoise {
    fn default() -> Self {
        Self {
            bandwidth_hz: 100e6,
            noise_figure_db: 9.0,
            tx_power_dbm: 30.0,
        }
    }
}

fn default_trials() -> usize {
    20_000
}

fn default_resamples() -> u32 {
    DEFAULT_MAX_RESAMPLES
}

fn default_capacity() -> f64 {
    DEFAULT_CAPACITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Explicit densities per km²; exclusive with `grid`.
    pub lambdas: Option<Vec<f64>>,
    pub grid: Option<GridSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "WindowSpec::default_square")]
    pub window: WindowSpec,
    /// Linear noise power; exclusive with `noise`. Absent both, thermal
    /// noise with the default link budget.
    pub noise_power: Option<f64>,
    pub noise: Option<ThermalNoise>,
    pub master_seed: u64,
    #[serde(default = "default_resamples")]
    pub max_resamples: u32,
    #[serde(default = "default_capacity")]
    pub capacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Gnuplot,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "OutputSection::default_directory")]
    pub directory: PathBuf,
    /// CSV is always written; `gnuplot` adds a plot script.
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl OutputSection {
    fn default_directory() -> PathBuf {
        PathBuf::from("results")
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: Self::default_directory(),
            formats: default_formats(),
        }
    }
}

/// Command-line values that replace config entries before hashing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

impl ExperimentConfig {
    /// Parses TOML; `origin` names the source in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| parse_error(text, origin, &e))
    }
}

fn parse_error(text: &str, origin: &str, e: &toml::de::Error) -> HarnessError {
    // errors about the root table carry an empty or whole-document span at 0
    let span = e
        .span()
        .filter(|s| !(s.start == 0 && (s.end == 0 || s.end >= text.trim_end().len())));
    let Some(span) = span else {
        return HarnessError::Parse {
            origin: origin.to_string(),
            location: None,
            section: None,
            message: e.message().to_string(),
        };
    };
    let offset = span.start.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    let line_end = text[offset..].find('\n').map_or(text.len(), |i| offset + i);
    let section = text[..line_end]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    HarnessError::Parse {
        origin: origin.to_string(),
        location: Some((line, column)),
        section,
        message: e.message().to_string(),
    }
}

/// One antenna scaling exponent of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub epsilon: f64,
    pub scaling: AntennaScaling,
    /// Hash of the physical model: path loss, fading and antenna scaling.
    pub hash: String,
}

impl Regime {
    pub fn file_name(&self) -> String {
        format!("sweep_eps{}.csv", self.epsilon)
    }

    pub fn is_linear(&self) -> bool {
        self.epsilon == 1.0
    }
}

/// A checked config with everything the commands need resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub pathloss: PathLossModel,
    pub lambdas: Vec<f64>,
    pub noise_power: f64,
    pub regimes: Vec<Regime>,
    pub config_hash: String,
    pub source: String,
}

#[derive(Serialize)]
struct HashedConfig<'a> {
    tool_version: &'a str,
    config: &'a ExperimentConfig,
    pathloss: &'a PathLossModel,
}

#[derive(Serialize)]
struct HashedRegime<'a> {
    pathloss: &'a PathLossModel,
    fading: &'a LinkFadingConfig,
    scaling: &'a AntennaScaling,
}

impl Experiment {
    pub fn load(path: &Path, overrides: Overrides) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config = ExperimentConfig::parse(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::resolve(config, base, overrides, path.display().to_string())
    }

    pub fn resolve(
        mut config: ExperimentConfig,
        base_dir: &Path,
        overrides: Overrides,
        source: String,
    ) -> Result<Self, HarnessError> {
        if let Some(seed) = overrides.seed {
            config.sweep.master_seed = seed;
        }
        if let Some(trials) = overrides.trials {
            config.sweep.trials = trials;
        }
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        let pathloss = config.pathloss.build(base_dir)?;
        config.fading.check()?;

        let sweep = &config.sweep;
        let lambdas = match (&sweep.lambdas, &sweep.grid) {
            (Some(_), Some(_)) => return bad("sweep: give either lambdas or grid, not both"),
            (Some(l), None) => l.clone(),
            (None, g) => g.unwrap_or_default().values()?,
        };
        if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return bad("sweep: densities must be positive and finite");
        }
        if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("sweep: densities must be strictly increasing");
        }
        if sweep.trials < 2 {
            return bad("sweep: trials must be at least 2");
        }
        let noise_power = match (sweep.noise_power, sweep.noise) {
            (Some(_), Some(_)) => return bad("sweep: give either noise_power or noise, not both"),
            (Some(p), None) => p,
            (None, n) => {
                let n = n.unwrap_or_default();
                simulator::thermal_noise_power(n.bandwidth_hz, n.noise_figure_db, n.tx_power_dbm)
            }
        };
        if !(noise_power >= 0.0 && noise_power.is_finite()) {
            return bad("sweep: noise power must be nonnegative and finite");
        }

        let eps = &config.antenna.epsilon;
        if eps.is_empty() {
            return bad("antenna: epsilon needs at least one value");
        }
        let mut regimes = Vec::with_capacity(eps.len());
        for (i, &e) in eps.iter().enumerate() {
            if eps[..i].contains(&e) {
                return bad("antenna: epsilon values must be distinct");
            }
            let scaling = config.antenna.scaling(e)?;
            let hash = sha256_hex(
                serde_json::to_string(&HashedRegime {
                    pathloss: &pathloss,
                    fading: &config.fading,
                    scaling: &scaling,
                })?
                .as_bytes(),
            );
            regimes.push(Regime {
                epsilon: e,
                scaling,
                hash,
            });
        }
        let config_hash = sha256_hex(
            serde_json::to_string(&HashedConfig {
                tool_version: TOOL_VERSION,
                config: &config,
                pathloss: &pathloss,
            })?
            .as_bytes(),
        );
        Ok(Self {
            config,
            pathloss,
            lambdas,
            noise_power,
            regimes,
            config_hash,
            source,
        })
    }

    /// Simulator settings for one regime.
    pub fn simulation(&self, regime: &Regime) -> SimulationConfig {
        let s = &self.config.sweep;
        SimulationConfig {
            window: s.window,
            pathloss: self.pathloss.clone(),
            scaling: regime.scaling,
            fading: self.config.fading,
            noise_power: self.noise_power,
            trials: s.trials,
            master_seed: s.master_seed,
            max_resamples: s.max_resamples,
            capacity: s.capacity,
        }
    }

    /// Grid shortfalls for scaling-law conclusions; not fatal.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.lambdas.len() < 3 {
            out.push(format!("density grid has {} points; scaling-law runs need at least 3", self.lambdas.len()));
        }
        let decades = (self.lambdas[self.lambdas.len() - 1] / self.lambdas[0]).log10();
        if decades < 2.0 - 1e-9 {
            out.push(format!("density grid spans {decades:.2} decades; scaling-law runs need at least 2"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[pathloss]
model = "stretched_exponential"
scale_m = 200.0

[antenna]
epsilon = [0.5, 1.0]

[sweep]
master_seed = 7
"#;

    fn resolve(text: &str) -> Result<Experiment, HarnessError> {
        let c = ExperimentConfig::parse(text, "test.toml")?;
        Experiment::resolve(c, Path::new("."), Overrides::default(), "test.toml".into())
    }

    #[test]
    fn defaults_fill_the_rest() {
        let e = resolve(MINIMAL).unwrap();
        assert_eq!(e.lambdas.len(), 10);
        assert_eq!((e.lambdas[0], e.lambdas[9]), (1.0, 1e4));
        assert!(e.lambdas.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(e.config.sweep.trials, 20_000);
        assert_eq!(e.config.sweep.window, WindowSpec::default_square());
        assert_eq!(e.noise_power, simulator::default_noise_power());
        assert_eq!(e.config.fading, LinkFadingConfig::default());
        assert_eq!(e.regimes.len(), 2);
        assert_eq!(e.regimes[1].file_name(), "sweep_eps1.csv");
        assert_eq!(e.regimes[0].file_name(), "sweep_eps0.5.csv");
        assert!(e.warnings().is_empty());
    }

    #[test]
    fn missing_seed_is_a_located_error() {
        let text = MINIMAL.replace("master_seed = 7", "trials = 10");
        let err = ExperimentConfig::parse(&text, "test.toml").unwrap_err();
        let HarnessError::Parse { location, section, message, .. } = &err else {
            panic!("{err:?}");
        };
        assert!(message.contains("master_seed"), "{message}");
        assert_eq!(section.as_deref(), Some("sweep"));
        assert_eq!(location.map(|l| l.0), Some(9));
        assert!(err.to_string().starts_with("test.toml:9:"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_line() {
        let text = MINIMAL.replace("scale_m = 200.0", "scale_m = 200.0\nscal = 1");
        let HarnessError::Parse { location, section, .. } = ExperimentConfig::parse(&text, "t").unwrap_err() else {
            panic!();
        };
        assert_eq!((location.map(|l| l.0), section.as_deref()), (Some(2), Some("pathloss")));
    }

    #[test]
    fn missing_sections_have_no_location() {
        let err = ExperimentConfig::parse("[sweep]\nmaster_seed = 1\n", "t.toml").unwrap_err();
        assert!(matches!(err, HarnessError::Parse { location: None, section: None, .. }), "{err:?}");
        assert!(err.to_string().starts_with("t.toml: missing field"), "{err}");
    }

    #[test]
    fn hashes_track_overrides_and_regimes() {
        let c = ExperimentConfig::parse(MINIMAL, "t").unwrap();
        let a = Experiment::resolve(c.clone(), Path::new("."), Overrides::default(), "t".into()).unwrap();
        let b = Experiment::resolve(
            c,
            Path::new("."),
            Overrides {
                seed: Some(8),
                trials: None,
            },
            "t".into(),
        )
        .unwrap();
        assert_ne!(a.config_hash, b.config_hash);
        assert_eq!(b.config.sweep.master_seed, 8);
        // the regime hash covers the physics only
        assert_eq!(a.regimes[1].hash, b.regimes[1].hash);
        assert_ne!(a.regimes[0].hash, a.regimes[1].hash);
        assert_eq!(resolve(MINIMAL).unwrap().config_hash, a.config_hash);
    }

    #[test]
    fn inconsistent_sections_are_rejected() {
        for (from, to) in [
            ("master_seed = 7", "master_seed = 7\nlambdas = [1.0, 1.0, 2.0]"),
            ("master_seed = 7", "master_seed = 7\nlambdas = [1.0]\ngrid = { start = 1.0, stop = 10.0, points = 3 }"),
            ("master_seed = 7", "master_seed = 7\nnoise_power = 1.0\nnoise = { bandwidth_hz = 1e8, noise_figure_db = 9.0, tx_power_dbm = 30.0 }"),
            ("master_seed = 7", "master_seed = 7\ntrials = 1"),
            ("epsilon = [0.5, 1.0]", "epsilon = [1.0, 1.0]"),
            ("epsilon = [0.5, 1.0]", "epsilon = []"),
            ("epsilon = [0.5, 1.0]", "family = \"parametric_step\"\nalpha = 3.0"),
            ("epsilon = [0.5, 1.0]", "alpha = 3.0"),
        ] {
            assert!(resolve(&MINIMAL.replace(from, to)).is_err(), "{to}");
        }
    }

    #[test]
    fn short_grids_warn() {
        let e = resolve(&MINIMAL.replace("master_seed = 7", "master_seed = 7\nlambdas = [10.0, 100.0]")).unwrap();
        assert_eq!(e.warnings().len(), 2);
    }

    #[test]
    fn every_path_loss_section_builds() {
        for body in [
            "model = \"bounded_single_slope\"\nexponent = 4.0\nscale_m = 1.0",
            "model = \"multi_slope\"\nbreakpoints_m = [10.0]\nexponents = [0.0, 3.5]\nl0 = 2.0",
            "model = \"power_law\"\nexponent = 4.0",
            "model = \"uma\"\n[pathloss.params]\ncarrier_ghz = 28.0",
        ] {
            let text = MINIMAL.replace("model = \"stretched_exponential\"\nscale_m = 200.0", body);
            let e = resolve(&text).unwrap_or_else(|err| panic!("{body}: {err}"));
            assert!(e.pathloss.l0() > 0.0);
        }
    }
}

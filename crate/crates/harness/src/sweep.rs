//! Sweep files: one CSV per scaling regime, a combined plot-data CSV, an
//! optional gnuplot script, and the manifest.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use densify_core::simulator::{self, DensityPointEstimate};
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, OutputFormat, Regime};
use crate::manifest::{FileEntry, PointEntry, RegimeEntry, RunManifest, MANIFEST_FILE};
use crate::{HarnessError, TOOL_NAME, TOOL_VERSION};

pub const SWEEP_COLUMNS: [&str; 10] = [
    "lambda_per_km2",
    "n_antennas",
    "trials",
    "mean_sinr",
    "sinr_ci",
    "median_sinr",
    "mean_se_bps_hz",
    "se_ci",
    "ase_bps_hz_m2",
    "seed",
];
pub const PLOT_COLUMNS: [&str; 4] = ["epsilon", "log10_lambda", "mean_sinr", "ase_bps_hz_m2"];
pub const PLOT_DATA_FILE: &str = "plot_data.csv";
pub const GNUPLOT_FILE: &str = "plot.gp";

/// One row of a sweep CSV; `*_ci` are 95% half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda_per_km2: f64,
    pub n_antennas: u64,
    pub trials: usize,
    pub mean_sinr: f64,
    pub sinr_ci: f64,
    pub median_sinr: f64,
    pub mean_se_bps_hz: f64,
    pub se_ci: f64,
    pub ase_bps_hz_m2: f64,
    pub seed: u64,
}

impl From<&DensityPointEstimate> for SweepRow {
    fn from(e: &DensityPointEstimate) -> Self {
        Self {
            lambda_per_km2: e.lambda,
            n_antennas: e.n_antennas,
            trials: e.trials,
            mean_sinr: e.mean_sinr,
            sinr_ci: e.sinr_ci,
            median_sinr: e.median_sinr,
            mean_se_bps_hz: e.mean_se,
            se_ci: e.se_ci,
            ase_bps_hz_m2: e.ase,
            seed: e.seed,
        }
    }
}

pub fn write_rows<W: Write>(rows: &[SweepRow], writer: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(SWEEP_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a sweep CSV, refusing any header other than [`SWEEP_COLUMNS`].
pub fn read_rows<R: Read>(reader: R) -> Result<Vec<SweepRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SWEEP_COLUMNS {
        return Err(HarnessError::Config(format!(
            "sweep CSV header {header:?} does not match the schema {SWEEP_COLUMNS:?}"
        )));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn read_rows_from(path: &Path) -> Result<Vec<SweepRow>, HarnessError> {
    let bytes = fs::read(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_rows(bytes.as_slice())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeResult {
    pub regime: Regime,
    pub rows: Vec<SweepRow>,
    pub points: Vec<PointEntry>,
    pub warnings: Vec<String>,
}

impl RegimeResult {
    pub fn failed(&self) -> usize {
        self.points.iter().filter(|p| !p.ok).count()
    }
}

pub fn run_regime(exp: &Experiment, regime: &Regime) -> Result<RegimeResult, HarnessError> {
    let config = exp.simulation(regime);
    let outcomes = simulator::sweep(&exp.lambdas, &config)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for o in &outcomes {
        let error = match &o.result {
            Ok(e) => {
                rows.push(SweepRow::from(e));
                warnings.extend(e.adequacy.warnings().into_iter().map(|w| format!("lambda = {}: {w}", o.lambda)));
                None
            }
            Err(err) => Some(err.to_string()),
        };
        points.push(PointEntry {
            epsilon: regime.epsilon,
            lambda_per_km2: o.lambda,
            runtime_s: o.elapsed.as_secs_f64(),
            ok: error.is_none(),
            error,
        });
    }
    Ok(RegimeResult {
        regime: regime.clone(),
        rows,
        points,
        warnings,
    })
}

/// Long-format plot data across regimes.
pub fn plot_data(results: &[RegimeResult]) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PLOT_COLUMNS)?;
    for res in results {
        for r in &res.rows {
            w.write_record([
                res.regime.epsilon.to_string(),
                r.lambda_per_km2.log10().to_string(),
                r.mean_sinr.to_string(),
                r.ase_bps_hz_m2.to_string(),
            ])?;
        }
    }
    w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))
}

pub fn gnuplot_script(results: &[RegimeResult]) -> String {
    let mut s = String::from(
        "set datafile separator ','\nset key top left\nset xlabel 'log10 BS density (per km^2)'\nset terminal pngcairo size 900,600\n",
    );
    for (out, col, label) in [("sinr.png", 4, "mean SINR"), ("ase.png", 9, "ASE (bps/Hz/m^2)")] {
        let _ = writeln!(s, "set output '{out}'\nset ylabel '{label}'\nset logscale y");
        let plots: Vec<String> = results
            .iter()
            .map(|r| {
                format!(
                    "'{}' every ::1 using (log10($1)):{col} with linespoints title 'epsilon = {}'",
                    r.regime.file_name(),
                    r.regime.epsilon
                )
            })
            .collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    }
    s
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub results: Vec<RegimeResult>,
    pub manifest: RunManifest,
}

impl SweepOutcome {
    pub fn failed_points(&self) -> usize {
        self.results.iter().map(RegimeResult::failed).sum()
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileEntry, HarnessError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|source| HarnessError::Io { path, source })?;
    Ok(FileEntry::of(name, bytes))
}

/// Runs every regime on the current thread pool and writes into `out_dir`.
pub fn run_sweep(exp: &Experiment, out_dir: &Path, log: &mut dyn Write) -> Result<SweepOutcome, HarnessError> {
    let start = Instant::now();
    fs::create_dir_all(out_dir).map_err(|source| HarnessError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    for w in exp.warnings() {
        let _ = writeln!(log, "warning: {w}");
    }
    let mut results = Vec::new();
    let mut files = Vec::new();
    for regime in &exp.regimes {
        let t = Instant::now();
        let res = run_regime(exp, regime)?;
        for w in &res.warnings {
            let _ = writeln!(log, "warning: epsilon = {}: {w}", regime.epsilon);
        }
        for p in res.points.iter().filter(|p| !p.ok) {
            let _ = writeln!(
                log,
                "error: epsilon = {}, lambda = {}: {}",
                regime.epsilon,
                p.lambda_per_km2,
                p.error.as_deref().unwrap_or("")
            );
        }
        let mut bytes = Vec::new();
        write_rows(&res.rows, &mut bytes)?;
        files.push(write_file(out_dir, &regime.file_name(), &bytes)?);
        let _ = writeln!(
            log,
            "epsilon = {}: {} of {} points in {:.1} s -> {}",
            regime.epsilon,
            res.rows.len(),
            res.points.len(),
            t.elapsed().as_secs_f64(),
            regime.file_name()
        );
        results.push(res);
    }
    files.push(write_file(out_dir, PLOT_DATA_FILE, &plot_data(&results)?)?);
    if exp.config.output.formats.contains(&OutputFormat::Gnuplot) {
        files.push(write_file(out_dir, GNUPLOT_FILE, gnuplot_script(&results).as_bytes())?);
    }
    let manifest = RunManifest {
        tool: TOOL_NAME.into(),
        tool_version: TOOL_VERSION.into(),
        config_path: exp.source.clone(),
        config_hash: exp.config_hash.clone(),
        master_seed: exp.config.sweep.master_seed,
        trials: exp.config.sweep.trials,
        threads: rayon::current_num_threads(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        regimes: results
            .iter()
            .map(|r| RegimeEntry {
                epsilon: r.regime.epsilon,
                regime_hash: r.regime.hash.clone(),
                file: r.regime.file_name(),
            })
            .collect(),
        files,
        points: results.iter().flat_map(|r| r.points.iter().cloned()).collect(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_toml()?).map_err(|source| HarnessError::Io { path, source })?;
    Ok(SweepOutcome { results, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(lambda: f64) -> SweepRow {
        SweepRow {
            lambda_per_km2: lambda,
            n_antennas: lambda.ceil() as u64,
            trials: 10,
            mean_sinr: 1.0 / 3.0,
            sinr_ci: 0.01,
            median_sinr: 0.3,
            mean_se_bps_hz: 0.4,
            se_ci: 0.02,
            ase_bps_hz_m2: lambda * 1e-6 * 0.4,
            seed: u64::MAX,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![row(1.0), row(31.622776601683793)];
        let mut bytes = Vec::new();
        write_rows(&rows, &mut bytes).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), SWEEP_COLUMNS.join(","));
        assert_eq!(read_rows(bytes.as_slice()).unwrap(), rows);
    }

    #[test]
    fn empty_sweep_still_has_a_header() {
        let mut bytes = Vec::new();
        write_rows(&[], &mut bytes).unwrap();
        assert!(read_rows(bytes.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn foreign_headers_are_refused() {
        assert!(read_rows("lambda,mean\n1,2\n".as_bytes()).is_err());
    }
}

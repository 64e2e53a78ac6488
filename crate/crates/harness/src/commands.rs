//! The four subcommands, writing human-readable output to `out` and
//! progress to `log`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use densify_core::antenna;
use densify_core::asymptotics;
use densify_core::pathloss;

use crate::asymptote::{self, AsymptoteReport, REPORT_FILE};
use crate::compare::{self, Verdict};
use crate::config::{Experiment, Overrides};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::sweep;
use crate::{sha256_hex, HarnessError};

/// How a command finished; errors are reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Infeasible model, failed points, or a FAIL verdict.
    Failure,
    Inconclusive,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Failure => 1,
            Outcome::Inconclusive => 3,
        }
    }
}

/// Exit code of a command that returned an error.
pub const ERROR_EXIT: u8 = 2;

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn validate(config: &Path, overrides: Overrides, out: &mut dyn Write) -> Result<Outcome, HarnessError> {
    let exp = Experiment::load(config, overrides)?;
    let report = pathloss::validate(&exp.pathloss, 1e-8);
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(io(Path::new("<stdout>")));
    w(out, format!("config = {}", exp.source))?;
    w(out, format!("config_hash = {}", exp.config_hash))?;
    w(out, format!("model = {}", exp.pathloss.name()))?;
    w(out, format!("feasible = {}", report.is_feasible))?;
    for v in &report.violations {
        w(out, format!("violation = {v}"))?;
    }
    if let Some(g) = report.gamma {
        w(out, format!("gamma_m2 = {g:e}"))?;
        w(out, format!("gamma_km2 = {:e}", g * 1e-6))?;
    }
    for warning in exp.warnings() {
        w(out, format!("warning = {warning}"))?;
    }
    for regime in &exp.regimes {
        let s = &regime.scaling;
        w(out, format!("[epsilon = {}]", regime.epsilon))?;
        w(out, format!("n_antennas = max(1, ceil({} * lambda^{}))", s.zeta, s.epsilon))?;
        let n = antenna::antennas_for_density(s, exp.lambdas[exp.lambdas.len() - 1])?;
        let p = antenna::pattern_for(s, n)?;
        w(
            out,
            format!(
                "pattern_at_lambda_max = {{ n = {n}, g_max = {}, g_min = {}, beamwidth = {} }}",
                p.g_max, p.g_min, p.beamwidth
            ),
        )?;
        if !regime.is_linear() {
            w(out, "limit_bounds = apply to epsilon = 1 only".into())?;
            continue;
        }
        if !report.is_feasible {
            continue;
        }
        let params = asymptote::limit_params(&exp, regime)?;
        let (lo, hi) = asymptotics::mean_sinr_bounds(&params);
        let (alo, ahi) = asymptotics::ase_slope_bounds(&params);
        w(out, format!("alpha = {}", params.alpha))?;
        w(out, format!("beta = {}", params.beta))?;
        w(out, format!("zeta = {}", params.zeta))?;
        w(out, format!("mean_sinr_bounds = [{lo}, {hi}]"))?;
        w(out, format!("ase_slope_bounds = [{alo}, {ahi}]"))?;
    }
    Ok(if report.is_feasible {
        Outcome::Success
    } else {
        Outcome::Failure
    })
}

pub fn sweep(
    config: &Path,
    overrides: Overrides,
    out_dir: Option<&Path>,
    threads: Option<usize>,
    out: &mut dyn Write,
    log: &mut (dyn Write + Send),
) -> Result<Outcome, HarnessError> {
    let exp = Experiment::load(config, overrides)?;
    let report = pathloss::validate(&exp.pathloss, 1e-8);
    if !report.is_feasible {
        let reasons: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        writeln!(out, "infeasible path loss {}: {}", exp.pathloss.name(), reasons.join("; ")).map_err(io(Path::new("<stdout>")))?;
        return Ok(Outcome::Failure);
    }
    let dir: PathBuf = out_dir.map_or_else(|| exp.config.output.directory.clone(), Path::to_path_buf);
    let outcome = crate::with_threads(threads, || sweep::run_sweep(&exp, &dir, log))??;
    for f in &outcome.manifest.files {
        writeln!(out, "{}  {}", f.sha256, dir.join(&f.path).display()).map_err(io(Path::new("<stdout>")))?;
    }
    writeln!(out, "manifest: {}", dir.join(MANIFEST_FILE).display()).map_err(io(Path::new("<stdout>")))?;
    Ok(if outcome.failed_points() == 0 {
        Outcome::Success
    } else {
        Outcome::Failure
    })
}

pub fn asymptote(
    config: &Path,
    overrides: Overrides,
    mc_samples: Option<usize>,
    out_dir: Option<&Path>,
    threads: Option<usize>,
    out: &mut dyn Write,
) -> Result<Outcome, HarnessError> {
    let exp = Experiment::load(config, overrides)?;
    let report = crate::with_threads(threads, || asymptote::report(&exp, mc_samples))??;
    let json = report.to_json()?;
    out.write_all(json.as_bytes()).map_err(io(Path::new("<stdout>")))?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(io(dir))?;
        let path = dir.join(REPORT_FILE);
        fs::write(&path, &json).map_err(io(&path))?;
    }
    let mc_ok = report.entries.iter().all(|e| e.mc.as_ref().map_or(true, |m| m.z.abs() < 3.0));
    Ok(if mc_ok { Outcome::Success } else { Outcome::Failure })
}

/// Refuses unless the sweep's manifest checksum matches the CSV and its
/// regime hash matches an entry of the report.
pub fn compare(
    sweep_csv: &Path,
    report: &Path,
    manifest: Option<&Path>,
    out: &mut dyn Write,
) -> Result<Outcome, HarnessError> {
    let dir = sweep_csv.parent().unwrap_or(Path::new("."));
    let manifest_path = manifest.map_or_else(|| dir.join(MANIFEST_FILE), Path::to_path_buf);
    let manifest = RunManifest::read(&manifest_path)?;
    let name = sweep_csv
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| HarnessError::Config(format!("bad sweep path {}", sweep_csv.display())))?;
    let regime = manifest
        .regime_for_file(name)
        .ok_or_else(|| HarnessError::Manifest(format!("{name} is not listed in {}", manifest_path.display())))?;
    let bytes = fs::read(sweep_csv).map_err(io(sweep_csv))?;
    let recorded = manifest.files.iter().find(|f| f.path == name);
    if recorded.map(|f| f.sha256.as_str()) != Some(sha256_hex(&bytes).as_str()) {
        return Err(HarnessError::Manifest(format!("{name} does not match its recorded checksum")));
    }
    let report = AsymptoteReport::read(report)?;
    let Some(entry) = report.entry_for(&regime.regime_hash) else {
        let known: Vec<&str> = report.entries.iter().map(|e| e.regime_hash.as_str()).collect();
        return Err(HarnessError::HashMismatch {
            sweep: regime.regime_hash.clone(),
            report: known.join(", "),
        });
    };
    let rows = sweep::read_rows(bytes.as_slice())?;
    let c = compare::compare(&rows, entry);

    let o = io(Path::new("<stdout>"));
    let mut text = String::new();
    text.push_str(&format!("limit = {}\n", c.limit));
    text.push_str("lambda_per_km2,mean_sinr,sinr_ci,gap,relative_gap,in_sandwich,se_in_bounds\n");
    for p in &c.points {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.lambda_per_km2, p.mean_sinr, p.sinr_ci, p.gap, p.relative_gap, p.in_sandwich, p.se_in_bounds
        ));
    }
    text.push_str(&format!("top_decade_monotone = {}\n", c.top_decade_monotone));
    if let Some(v) = c.slope_variation {
        text.push_str(&format!("slope_variation = {v}\n"));
    }
    for r in &c.reasons {
        text.push_str(&format!("reason = {r}\n"));
    }
    text.push_str(&format!("verdict = {}\n", c.verdict));
    out.write_all(text.as_bytes()).map_err(o)?;
    Ok(match c.verdict {
        Verdict::Pass => Outcome::Success,
        Verdict::Fail => Outcome::Failure,
        Verdict::Inconclusive => Outcome::Inconclusive,
    })
}

//! Convergence verdict of a linear-regime sweep against its asymptote.
//!
//! PASS needs all of: the gap `|mean_sinr − limit|` shrinks between the two
//! largest densities; the final gap is within `max(3 CI, 10%)` of the limit;
//! `ase/λ` varies by less than 15% over the top decade; and the mean
//! spectral efficiency at the largest density lies in the slope bounds
//! widened by its CI. A grid with fewer than 3 points, less than 2 decades,
//! or a top decade holding a single point is INCONCLUSIVE.

use std::fmt;

use serde::Serialize;

use crate::asymptote::AsymptoteEntry;
use crate::sweep::SweepRow;

pub const MIN_POINTS: usize = 3;
pub const MIN_DECADES: f64 = 2.0;
pub const CI_MULTIPLE: f64 = 3.0;
pub const REL_TOLERANCE: f64 = 0.10;
pub const MAX_SLOPE_VARIATION: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointGap {
    pub lambda_per_km2: f64,
    pub mean_sinr: f64,
    pub sinr_ci: f64,
    pub gap: f64,
    pub relative_gap: f64,
    /// `lower ≤ mean_sinr ≤ upper` of the mean-SINR sandwich.
    pub in_sandwich: bool,
    /// Mean spectral efficiency inside the slope bounds widened by its CI.
    pub se_in_bounds: bool,
    pub in_top_decade: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub verdict: Verdict,
    pub limit: f64,
    pub points: Vec<PointGap>,
    /// Gap non-increasing along the whole top decade.
    pub top_decade_monotone: bool,
    pub final_gap_decreasing: Option<bool>,
    pub final_within_tolerance: Option<bool>,
    /// `max(ase/λ) / min(ase/λ) − 1` over the top decade.
    pub slope_variation: Option<f64>,
    pub reasons: Vec<String>,
}

fn inconclusive(limit: f64, points: Vec<PointGap>, reason: String) -> Comparison {
    Comparison {
        verdict: Verdict::Inconclusive,
        limit,
        points,
        top_decade_monotone: false,
        final_gap_decreasing: None,
        final_within_tolerance: None,
        slope_variation: None,
        reasons: vec![reason],
    }
}

pub fn compare(rows: &[SweepRow], limit: &AsymptoteEntry) -> Comparison {
    let mut rows: Vec<SweepRow> = rows.to_vec();
    rows.sort_by(|a, b| a.lambda_per_km2.total_cmp(&b.lambda_per_km2));
    let m = limit.mean_limit;
    let top = rows.last().map_or(f64::NAN, |r| r.lambda_per_km2);
    let points: Vec<PointGap> = rows
        .iter()
        .map(|r| {
            let gap = (r.mean_sinr - m).abs();
            PointGap {
                lambda_per_km2: r.lambda_per_km2,
                mean_sinr: r.mean_sinr,
                sinr_ci: r.sinr_ci,
                gap,
                relative_gap: gap / m,
                in_sandwich: limit.lower <= r.mean_sinr && r.mean_sinr <= limit.upper,
                se_in_bounds: limit.ase_lower - r.se_ci <= r.mean_se_bps_hz
                    && r.mean_se_bps_hz <= limit.ase_upper + r.se_ci,
                in_top_decade: r.lambda_per_km2 >= top / 10.0 * (1.0 - 1e-9),
            }
        })
        .collect();

    if rows.len() < MIN_POINTS {
        return inconclusive(m, points, format!("{} densities, need at least {MIN_POINTS}", rows.len()));
    }
    let decades = (top / rows[0].lambda_per_km2).log10();
    if decades < MIN_DECADES - 1e-9 {
        return inconclusive(m, points, format!("grid spans {decades:.2} decades, need {MIN_DECADES}"));
    }
    let top_rows: Vec<&SweepRow> = rows.iter().zip(&points).filter(|(_, p)| p.in_top_decade).map(|(r, _)| r).collect();
    if top_rows.len() < 2 {
        return inconclusive(m, points, "top decade holds a single density".into());
    }

    let top_gaps: Vec<&PointGap> = points.iter().filter(|p| p.in_top_decade).collect();
    let top_decade_monotone = top_gaps.windows(2).all(|w| w[1].gap <= w[0].gap);
    let (prev, last) = (&points[points.len() - 2], &points[points.len() - 1]);
    let decreasing = last.gap < prev.gap;
    let within = last.gap <= (CI_MULTIPLE * last.sinr_ci).max(REL_TOLERANCE * m);

    let slopes: Vec<f64> = top_rows.iter().map(|r| r.ase_bps_hz_m2 / r.lambda_per_km2).collect();
    let (lo, hi) = slopes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    let variation = hi / lo - 1.0;

    let mut reasons = Vec::new();
    if !decreasing {
        reasons.push(format!(
            "gap grew from {:.4e} at lambda = {} to {:.4e} at lambda = {}",
            prev.gap, prev.lambda_per_km2, last.gap, last.lambda_per_km2
        ));
    }
    if !within {
        reasons.push(format!(
            "final gap {:.4e} exceeds max({CI_MULTIPLE} CI = {:.4e}, {REL_TOLERANCE} x limit = {:.4e})",
            last.gap,
            CI_MULTIPLE * last.sinr_ci,
            REL_TOLERANCE * m
        ));
    }
    if !(variation < MAX_SLOPE_VARIATION) {
        reasons.push(format!("ase/lambda varies by {:.1}% over the top decade", 100.0 * variation));
    }
    if !last.se_in_bounds {
        reasons.push(format!(
            "mean spectral efficiency {:.4} outside [{:.4}, {:.4}] widened by {:.4}",
            rows[rows.len() - 1].mean_se_bps_hz,
            limit.ase_lower,
            limit.ase_upper,
            rows[rows.len() - 1].se_ci
        ));
    }
    Comparison {
        verdict: if reasons.is_empty() { Verdict::Pass } else { Verdict::Fail },
        limit: m,
        points,
        top_decade_monotone,
        final_gap_decreasing: Some(decreasing),
        final_within_tolerance: Some(within),
        slope_variation: Some(variation),
        reasons,
    }
}

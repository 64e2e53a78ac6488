//! Physically feasible large-scale gain functions `L(r)`.
//!
//! A model is feasible when it is bounded by its value at the origin,
//! nonincreasing in distance, and has a finite `γ = ∫₀^∞ r L(r) dr`. Every
//! model is `l0 × shape(r)` with `shape(0) = 1`, so rescaling `l0` rescales
//! both `L` and `γ`.

mod table;
mod uma;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{self, QuadratureError, Tolerance};

pub use table::GainTable;
pub use uma::{db_to_linear, Blockage, UmaParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathLossError {
    #[error("distance must be nonnegative, got {0} m")]
    NegativeDistance(f64),
    #[error("invalid {model} parameters: {reason}")]
    InvalidParameter { model: String, reason: String },
    #[error("gamma integral diverges for {model}: {reason}")]
    Divergent { model: String, reason: String },
    #[error("quadrature failed for {model}: {source}")]
    Quadrature {
        model: String,
        #[source]
        source: QuadratureError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PathLossKind {
    /// `(1 + r/scale)^-exponent`.
    BoundedSingleSlope { exponent: f64, scale_m: f64 },
    /// Piecewise power law with slope `exponents[k]` on `[R_k, R_{k+1})`,
    /// `R_0 = 0`, continuous at each breakpoint. A zero first exponent caps
    /// the gain near the origin.
    MultiSlope { breakpoints_m: Vec<f64>, exponents: Vec<f64> },
    /// `exp(-(r/scale)^stretch)`.
    StretchedExponential { scale_m: f64, stretch: f64 },
    Uma3gpp(UmaParams),
    UserDefined(GainTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    kind: PathLossKind,
    l0: f64,
}

impl PathLossModel {
    pub fn new(kind: PathLossKind, l0: f64) -> Result<Self, PathLossError> {
        let model = Self { kind, l0 };
        model.check_parameters()?;
        Ok(model)
    }

    pub fn bounded_single_slope(exponent: f64, scale_m: f64) -> Result<Self, PathLossError> {
        Self::new(PathLossKind::BoundedSingleSlope { exponent, scale_m }, 1.0)
    }

    pub fn stretched_exponential(scale_m: f64, stretch: f64) -> Result<Self, PathLossError> {
        Self::new(PathLossKind::StretchedExponential { scale_m, stretch }, 1.0)
    }

    pub fn multi_slope(breakpoints_m: Vec<f64>, exponents: Vec<f64>) -> Result<Self, PathLossError> {
        Self::new(
            PathLossKind::MultiSlope {
                breakpoints_m,
                exponents,
            },
            1.0,
        )
    }

    /// UMa model with `l0` set to its LoS gain at zero ground distance.
    pub fn uma(params: UmaParams) -> Result<Self, PathLossError> {
        let l0 = params.origin_gain();
        Self::new(PathLossKind::Uma3gpp(params), l0)
    }

    /// Table model; `l0` is the table's own origin gain.
    pub fn user_defined(table: GainTable) -> Self {
        let l0 = table.origin_gain();
        Self {
            kind: PathLossKind::UserDefined(table),
            l0,
        }
    }

    pub fn kind(&self) -> &PathLossKind {
        &self.kind
    }

    /// Gain at the origin, `L(0)`.
    pub fn l0(&self) -> f64 {
        self.l0
    }

    /// The same shape with `l0` replaced.
    pub fn with_l0(mut self, l0: f64) -> Result<Self, PathLossError> {
        self.l0 = l0;
        self.check_parameters()?;
        Ok(self)
    }

    pub fn name(&self) -> String {
        match &self.kind {
            PathLossKind::BoundedSingleSlope { exponent, scale_m } => {
                format!("bounded single-slope (1 + r/{scale_m} m)^-{exponent}")
            }
            PathLossKind::MultiSlope { exponents, .. } => format!("multi-slope {exponents:?}"),
            PathLossKind::StretchedExponential { scale_m, stretch } => {
                format!("stretched exponential exp(-(r/{scale_m} m)^{stretch})")
            }
            PathLossKind::Uma3gpp(p) => format!("3GPP UMa {} GHz", p.carrier_ghz),
            PathLossKind::UserDefined(t) => format!("user-defined table ({} rows)", t.radii_m().len()),
        }
    }

    fn invalid(&self, reason: impl Into<String>) -> PathLossError {
        PathLossError::InvalidParameter {
            model: self.name(),
            reason: reason.into(),
        }
    }

    fn check_parameters(&self) -> Result<(), PathLossError> {
        // User tables carry their own scale, which may be singular.
        let table = matches!(self.kind, PathLossKind::UserDefined(_));
        if !(self.l0 > 0.0) || (!table && !self.l0.is_finite()) {
            return Err(self.invalid("l0 must be positive and finite"));
        }
        match &self.kind {
            PathLossKind::BoundedSingleSlope { exponent, scale_m } => {
                if !(*exponent > 0.0 && *scale_m > 0.0) {
                    return Err(self.invalid("exponent and scale must be positive"));
                }
            }
            PathLossKind::StretchedExponential { scale_m, stretch } => {
                if !(*scale_m > 0.0 && *stretch > 0.0) {
                    return Err(self.invalid("scale and stretch must be positive"));
                }
            }
            PathLossKind::MultiSlope {
                breakpoints_m,
                exponents,
            } => {
                if exponents.len() != breakpoints_m.len() + 1 {
                    return Err(self.invalid("need one more exponent than breakpoints"));
                }
                if exponents.iter().any(|e| !(*e >= 0.0)) {
                    return Err(self.invalid("exponents must be nonnegative"));
                }
                if breakpoints_m.first().is_some_and(|b| !(*b > 0.0)) || breakpoints_m.windows(2).any(|w| w[1] <= w[0])
                {
                    return Err(self.invalid("breakpoints must be positive and increasing"));
                }
            }
            PathLossKind::Uma3gpp(p) => p.check().map_err(|e| self.invalid(e))?,
            PathLossKind::UserDefined(_) => {}
        }
        Ok(())
    }

    /// `L(r)` for `r` in metres.
    pub fn evaluate(&self, r: f64) -> Result<f64, PathLossError> {
        if !(r >= 0.0) {
            return Err(PathLossError::NegativeDistance(r));
        }
        Ok(self.gain(r))
    }

    /// Unchecked `L(r)`; `r` must be nonnegative.
    #[inline]
    pub fn gain(&self, r: f64) -> f64 {
        match &self.kind {
            PathLossKind::StretchedExponential { scale_m, stretch } => {
                let x = r / scale_m;
                let e = if *stretch == 1.0 {
                    x
                } else if *stretch == 2.0 {
                    x * x
                } else {
                    x.powf(*stretch)
                };
                self.l0 * (-e).exp()
            }
            PathLossKind::BoundedSingleSlope { exponent, scale_m } => {
                let base = 1.0 + r / scale_m;
                let e = *exponent;
                if e == e.trunc() && e <= 16.0 {
                    self.l0 / base.powi(e as i32)
                } else {
                    self.l0 * base.powf(-e)
                }
            }
            PathLossKind::MultiSlope {
                breakpoints_m,
                exponents,
            } => self.l0 * multi_slope_shape(breakpoints_m, exponents, r),
            PathLossKind::Uma3gpp(p) => self.l0 * p.mean_shape(r),
            PathLossKind::UserDefined(t) => self.l0 / t.origin_gain_finite() * t.evaluate(r),
        }
    }

    /// Gain of one link whose blockage state is drawn from the uniform `u`.
    /// Only UMa with sampled blockage depends on `u`.
    #[inline]
    pub fn link_gain(&self, r: f64, u: f64) -> f64 {
        match &self.kind {
            PathLossKind::Uma3gpp(p) if p.blockage == Blockage::Sampled => self.l0 * p.sampled_shape(r, u),
            _ => self.gain(r),
        }
    }

    /// Whether [`link_gain`](Self::link_gain) consumes a blockage draw.
    pub fn uses_blockage_draws(&self) -> bool {
        matches!(&self.kind, PathLossKind::Uma3gpp(p) if p.blockage == Blockage::Sampled)
    }

    /// A length over which the gain changes appreciably; seeds quadrature
    /// panel widths and validation grids.
    pub fn characteristic_length_m(&self) -> f64 {
        match &self.kind {
            PathLossKind::BoundedSingleSlope { scale_m, .. } => *scale_m,
            PathLossKind::StretchedExponential { scale_m, .. } => *scale_m,
            PathLossKind::MultiSlope { breakpoints_m, .. } => breakpoints_m.last().copied().unwrap_or(1.0),
            PathLossKind::Uma3gpp(p) => (p.bs_height_m - p.ue_height_m).abs().max(p.los_prob_near_m),
            PathLossKind::UserDefined(t) => t.half_gain_radius_m(),
        }
    }

    /// Analytic bound on `∫_R^∞ r L(r) dr` where one is available. `Some(∞)`
    /// means the tail is known to diverge.
    fn analytic_tail(&self, r: f64) -> Option<f64> {
        match &self.kind {
            PathLossKind::BoundedSingleSlope { exponent, scale_m } => {
                let e = *exponent;
                if e <= 2.0 {
                    return Some(f64::INFINITY);
                }
                let u = 1.0 + r / scale_m;
                let d2 = scale_m * scale_m;
                // d² [u^(2-e)/(e-2) - u^(1-e)/(e-1)], computed stably as a
                // sum of positives: u^(1-e) [u/(e-2) - 1/(e-1)].
                Some(self.l0 * d2 * u.powf(1.0 - e) * (u / (e - 2.0) - 1.0 / (e - 1.0)))
            }
            PathLossKind::MultiSlope {
                breakpoints_m,
                exponents,
            } => {
                let last_start = breakpoints_m.last().copied().unwrap_or(0.0);
                if r < last_start || r == 0.0 {
                    return None;
                }
                let e = *exponents.last().expect("at least one exponent");
                if e <= 2.0 {
                    return Some(f64::INFINITY);
                }
                Some(self.gain(r) * r * r / (e - 2.0))
            }
            PathLossKind::UserDefined(t) => {
                if r < t.last_radius_m() {
                    return None;
                }
                let k = t.tail_rate();
                if k <= 0.0 {
                    return Some(f64::INFINITY);
                }
                Some(self.gain(r) * (r / k + 1.0 / (k * k)))
            }
            _ => None,
        }
    }
}

impl fmt::Display for PathLossModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (l0 = {:e})", self.name(), self.l0)
    }
}

impl GainTable {
    fn origin_gain_finite(&self) -> f64 {
        let g = self.origin_gain();
        if g.is_finite() {
            g
        } else {
            1.0
        }
    }
}

fn multi_slope_shape(breakpoints: &[f64], exponents: &[f64], r: f64) -> f64 {
    let anchor = breakpoints.first().copied().unwrap_or(1.0);
    let first = exponents[0];
    let seg = breakpoints.partition_point(|&b| b <= r);
    if seg == 0 {
        return if first == 0.0 { 1.0 } else { (r / anchor).powf(-first) };
    }
    // Gain at R_1 is 1 by construction; walk forward through the segments.
    let mut g = 1.0;
    for k in 1..seg {
        g *= (breakpoints[k] / breakpoints[k - 1]).powf(-exponents[k]);
    }
    g * (r / breakpoints[seg - 1]).powf(-exponents[seg])
}

/// A named failure of one feasibility condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    InvalidParameter,
    UnboundedAtOrigin,
    ExceedsOriginGain,
    Increasing,
    NonFinite,
    DivergentGamma,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::InvalidParameter => "invalid parameter",
            Condition::UnboundedAtOrigin => "unbounded at origin",
            Condition::ExceedsOriginGain => "exceeds gain at origin",
            Condition::Increasing => "increasing in distance",
            Condition::NonFinite => "non-finite gain",
            Condition::DivergentGamma => "gamma integral diverges",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    pub radius_m: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (r = {} m)", self.condition, self.radius_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub is_feasible: bool,
    /// `γ` in m², present when the integral converged.
    pub gamma: Option<f64>,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn has(&self, condition: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }
}

fn validation_grid(model: &PathLossModel) -> Vec<f64> {
    let ell = model.characteristic_length_m();
    let (lo, hi, n) = (ell * 1e-4, ell * 1e5, 3000);
    let step = (hi / lo).ln() / (n - 1) as f64;
    std::iter::once(0.0)
        .chain((0..n).map(|k| lo * (step * k as f64).exp()))
        .collect()
}

/// Checks boundedness, monotonicity and convergence of `γ`.
///
/// Failures are collected into the report; at most one violation per
/// condition is listed, at the first offending radius.
pub fn validate(model: &PathLossModel, tol: f64) -> FeasibilityReport {
    let mut violations = Vec::new();
    let push = |v: &mut Vec<Violation>, condition, radius_m| {
        if !v.iter().any(|x: &Violation| x.condition == condition) {
            v.push(Violation { condition, radius_m });
        }
    };

    if let Err(PathLossError::InvalidParameter { .. }) = model.check_parameters() {
        push(&mut violations, Condition::InvalidParameter, 0.0);
        return FeasibilityReport {
            is_feasible: false,
            gamma: None,
            violations,
        };
    }

    let singular_origin = match &model.kind {
        PathLossKind::MultiSlope { exponents, .. } => exponents[0] > 0.0,
        PathLossKind::UserDefined(t) => !t.origin_gain().is_finite(),
        _ => false,
    } || !model.gain(0.0).is_finite();
    if singular_origin {
        push(&mut violations, Condition::UnboundedAtOrigin, 0.0);
    }

    let l0 = model.l0();
    let slack = 1.0 + 1e-12;
    let mut branches: Vec<Box<dyn Fn(f64) -> f64 + '_>> = vec![Box::new(|r| model.gain(r))];
    if let PathLossKind::Uma3gpp(p) = &model.kind {
        branches.push(Box::new(move |r| l0 * p.los_shape(r)));
        branches.push(Box::new(move |r| l0 * p.nlos_shape(r)));
    }
    let grid = validation_grid(model);
    for branch in &branches {
        let mut prev: Option<f64> = None;
        for &r in &grid {
            let g = branch(r);
            if r == 0.0 && singular_origin {
                continue;
            }
            if !g.is_finite() || g < 0.0 {
                push(&mut violations, Condition::NonFinite, r);
                break;
            }
            if !singular_origin && g > l0 * slack {
                push(&mut violations, Condition::ExceedsOriginGain, r);
            }
            if let Some(p) = prev {
                if g > p * slack {
                    push(&mut violations, Condition::Increasing, r);
                }
            }
            prev = Some(g);
        }
    }

    let gamma = match gamma(model, tol) {
        Ok(g) => Some(g),
        Err(_) => {
            push(&mut violations, Condition::DivergentGamma, f64::INFINITY);
            None
        }
    };

    FeasibilityReport {
        is_feasible: violations.is_empty(),
        gamma: if violations.is_empty() { gamma } else { gamma.filter(|g| g.is_finite()) },
        violations,
    }
}

/// `γ = ∫₀^∞ r L(r) dr` in m², to relative accuracy `rel_tol`.
pub fn gamma(model: &PathLossModel, rel_tol: f64) -> Result<f64, PathLossError> {
    tail_integral(model, 0.0, rel_tol)
}

/// `∫_R^∞ r L(r) dr` in m².
pub fn tail_integral(model: &PathLossModel, radius_m: f64, rel_tol: f64) -> Result<f64, PathLossError> {
    if !(radius_m >= 0.0) {
        return Err(PathLossError::NegativeDistance(radius_m));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(model.invalid(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    let at_origin = match &model.kind {
        PathLossKind::MultiSlope { exponents, .. } => exponents[0] > 0.0,
        _ => !model.gain(0.0).is_finite(),
    };
    let first_segment_end = match &model.kind {
        PathLossKind::MultiSlope { breakpoints_m, .. } => breakpoints_m.first().copied().unwrap_or(f64::INFINITY),
        PathLossKind::UserDefined(t) => t.radii_m().get(1).copied().unwrap_or(f64::INFINITY),
        _ => f64::INFINITY,
    };
    if at_origin && radius_m < first_segment_end {
        return Err(PathLossError::Divergent {
            model: model.name(),
            reason: "unbounded at origin".into(),
        });
    }
    let tail = |r: f64| model.analytic_tail(r);
    let width = model.characteristic_length_m().max(radius_m * 0.5).max(1e-9);
    let est = quadrature::integrate_to_infinity(
        |r| r * model.gain(r),
        radius_m,
        width,
        Tolerance::relative(rel_tol),
        Some(&tail),
    )
    .map_err(|source| match source {
        QuadratureError::Divergent { cutoff } => PathLossError::Divergent {
            model: model.name(),
            reason: format!("tail not shrinking beyond {cutoff} m"),
        },
        source => PathLossError::Quadrature {
            model: model.name(),
            source,
        },
    })?;
    Ok(est.value)
}

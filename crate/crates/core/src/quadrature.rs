//! Adaptive Gauss–Kronrod integration.
//!
//! The finite-interval integrator is a global-subdivision scheme on the 7/15
//! point Gauss–Kronrod pair: the interval with the largest error estimate is
//! bisected until the summed error meets the tolerance. Semi-infinite ranges
//! are covered by panels of doubling width; the loop stops once the tail is
//! below `rel_tol` of the running estimate, either by a supplied analytic tail
//! bound or by geometric extrapolation of successive panel contributions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Default cap on the number of subintervals of one finite integral.
pub const DEFAULT_MAX_INTERVALS: usize = 1_000_000;

const MAX_PANELS: usize = 512;

// Abscissae of the 15-point Kronrod rule on [-1, 1]; odd entries are the
// 7-point Gauss nodes, the last entry is the centre.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("subdivision cap of {cap} intervals reached (estimate {estimate}, error {error})")]
    SubdivisionCap {
        cap: usize,
        estimate: f64,
        error: f64,
    },
    #[error("integral diverges: tail contributions are not shrinking beyond x = {cutoff}")]
    Divergent { cutoff: f64 },
}

/// Requested accuracy of an integral. The target is `max(abs, rel * |I|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self {
            abs: 0.0,
            rel,
            max_intervals: DEFAULT_MAX_INTERVALS,
        }
    }

    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = abs;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// `∫|f|` over the segment; sets the roundoff floor.
    magnitude: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

fn finite<F: FnMut(f64) -> f64>(f: &mut F, x: f64) -> Result<f64, QuadratureError> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(QuadratureError::NonFinite { x })
    }
}

/// One application of the 15-point Kronrod rule with its embedded Gauss
/// error estimate.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Segment, QuadratureError> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_centre = finite(f, centre)?;

    let mut res_g = f_centre * WG[3];
    let mut res_k = f_centre * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = finite(f, centre - dx)?;
        let f2 = finite(f, centre + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (f_centre - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let h = half.abs();
    Ok(Segment {
        a,
        b,
        value: res_k * half,
        error: rescale_error((res_k - res_g) * half, res_abs * h, res_asc * h),
        magnitude: res_abs * h,
    })
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate, QuadratureError>
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        });
    }
    let first = gk15(&mut f, a, b)?;
    let mut total = first.value;
    let mut error = first.error;
    let mut magnitude = first.magnitude;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    loop {
        // Errors cannot drop below the per-segment roundoff floor.
        let floor = 100.0 * f64::EPSILON * magnitude;
        let target = tol.abs.max(tol.rel * total.abs()).max(floor);
        if error <= target {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(QuadratureError::SubdivisionCap {
                cap: tol.max_intervals,
                estimate: total,
                error,
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        // Interval can no longer be split in floating point.
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            error -= worst.error;
            continue;
        }
        let left = gk15(&mut f, worst.a, mid)?;
        let right = gk15(&mut f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        magnitude += left.magnitude + right.magnitude - worst.magnitude;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the drift of incremental updates.
    let (value, abs_error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Ok(Estimate {
        value,
        abs_error,
        intervals: heap.len(),
    })
}

/// Integrates `f` over `[a, ∞)`.
///
/// Panels `[a, a + w]`, `[a + w, a + 3w]`, ... of doubling width are added
/// until the tail beyond the current cutoff is below `tol.rel` times the
/// estimate. `tail_bound(R)`, when it returns `Some`, must bound `∫_R^∞ |f|`
/// (`Some(inf)` declares divergence); otherwise the tail is extrapolated from
/// the ratio of the last two panels.
pub fn integrate_to_infinity<F>(
    mut f: F,
    a: f64,
    initial_width: f64,
    tol: Tolerance,
    tail_bound: Option<&dyn Fn(f64) -> Option<f64>>,
) -> Result<Estimate, QuadratureError>
where
    F: FnMut(f64) -> f64,
{
    assert!(initial_width > 0.0, "panel width must be positive");
    let mut lo = a;
    let mut width = initial_width;
    let mut total: f64 = 0.0;
    let mut abs_error = 0.0;
    let mut intervals = 0;
    let mut previous: Option<f64> = None;
    let mut non_shrinking = 0;

    for _ in 0..MAX_PANELS {
        let hi = lo + width;
        // Far panels only need to be accurate relative to the running total.
        let panel_tol = Tolerance {
            abs: 0.25 * tol.abs.max(tol.rel * total.abs()),
            rel: 0.25 * tol.rel,
            ..tol
        };
        let panel = integrate(&mut f, lo, hi, panel_tol)?;
        total += panel.value;
        abs_error += panel.abs_error;
        intervals += panel.intervals;
        let contribution = panel.value.abs();

        let analytic = tail_bound.and_then(|bound| bound(hi));
        let tail = match (analytic, previous) {
            (Some(t), _) => Some(t),
            (None, Some(prev)) if prev > 0.0 => {
                let ratio = contribution / prev;
                if ratio < 1.0 {
                    non_shrinking = 0;
                    Some(contribution * ratio / (1.0 - ratio))
                } else {
                    non_shrinking += 1;
                    None
                }
            }
            (None, Some(_)) if contribution == 0.0 => Some(0.0),
            _ => None,
        };

        if let Some(t) = tail {
            if !t.is_finite() {
                return Err(QuadratureError::Divergent { cutoff: hi });
            }
            let target = tol.abs.max(tol.rel * total.abs());
            if t <= target {
                return Ok(Estimate {
                    value: total,
                    abs_error: abs_error + t,
                    intervals,
                });
            }
        }
        if non_shrinking >= 12 || !total.is_finite() {
            return Err(QuadratureError::Divergent { cutoff: hi });
        }

        previous = Some(contribution);
        lo = hi;
        width *= 2.0;
    }
    Err(QuadratureError::Divergent { cutoff: lo })
}

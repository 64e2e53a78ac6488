//! Tabulated gain curves with log-linear interpolation.

use std::io::Read;

use serde::{Deserialize, Serialize};

/// A piecewise gain table `(r_i, g_i)` with strictly increasing radii.
///
/// Between rows `ln g` is linear in `r`. Below the first radius the first gain
/// is held; beyond the last radius the final segment's exponential trend is
/// continued. A gain of `inf` at `r = 0` marks a curve that is singular at the
/// origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainTable {
    radii_m: Vec<f64>,
    gains: Vec<f64>,
}

impl GainTable {
    pub fn new(radii_m: Vec<f64>, gains: Vec<f64>) -> Result<Self, String> {
        if radii_m.len() != gains.len() {
            return Err("radius and gain columns differ in length".into());
        }
        if radii_m.is_empty() {
            return Err("gain table is empty".into());
        }
        if radii_m[0] < 0.0 || !radii_m.iter().all(|r| r.is_finite()) {
            return Err("radii must be finite and nonnegative".into());
        }
        if radii_m.windows(2).any(|w| w[1] <= w[0]) {
            return Err("radii must be strictly increasing".into());
        }
        for (i, (&r, &g)) in radii_m.iter().zip(&gains).enumerate() {
            let singular_origin = i == 0 && r == 0.0 && g == f64::INFINITY;
            if !(singular_origin || (g.is_finite() && g > 0.0)) {
                return Err(format!("gain at r = {r} m must be finite and positive"));
            }
        }
        Ok(Self { radii_m, gains })
    }

    /// Reads a two-column CSV `(r_meters, linear_gain)` with a header row.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, String> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
        if headers.len() != 2 {
            return Err(format!("expected 2 columns, header has {}", headers.len()));
        }
        let mut radii = Vec::new();
        let mut gains = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| e.to_string())?;
            let parse = |i: usize| -> Result<f64, String> {
                record
                    .get(i)
                    .ok_or_else(|| format!("row {}: missing column {}", line + 2, i + 1))?
                    .parse::<f64>()
                    .map_err(|e| format!("row {}: {e}", line + 2))
            };
            radii.push(parse(0)?);
            gains.push(parse(1)?);
        }
        Self::new(radii, gains)
    }

    pub fn radii_m(&self) -> &[f64] {
        &self.radii_m
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn origin_gain(&self) -> f64 {
        self.gains[0]
    }

    /// Decay rate (per metre) of the exponential continuation past the last
    /// row; zero for a single-row table or a flat final segment.
    pub fn tail_rate(&self) -> f64 {
        let n = self.radii_m.len();
        if n < 2 || !self.gains[n - 2].is_finite() {
            return 0.0;
        }
        let slope = (self.gains[n - 1].ln() - self.gains[n - 2].ln()) / (self.radii_m[n - 1] - self.radii_m[n - 2]);
        (-slope).max(0.0)
    }

    pub fn last_radius_m(&self) -> f64 {
        *self.radii_m.last().expect("table is nonempty")
    }

    pub fn evaluate(&self, r: f64) -> f64 {
        let radii = &self.radii_m;
        let gains = &self.gains;
        let n = radii.len();
        if r <= radii[0] {
            return gains[0];
        }
        if r >= radii[n - 1] {
            return gains[n - 1] * (-self.tail_rate() * (r - radii[n - 1])).exp();
        }
        let k = radii.partition_point(|&x| x <= r) - 1;
        let (r0, r1) = (radii[k], radii[k + 1]);
        let (g0, g1) = (gains[k], gains[k + 1]);
        if !g0.is_finite() {
            return g0;
        }
        let w = (r - r0) / (r1 - r0);
        (g0.ln() * (1.0 - w) + g1.ln() * w).exp()
    }

    /// Radius where the gain first halves; a natural length for quadrature.
    pub fn half_gain_radius_m(&self) -> f64 {
        let g0 = self.gains.iter().copied().find(|g| g.is_finite()).unwrap_or(1.0);
        self.radii_m
            .iter()
            .zip(&self.gains)
            .find(|(_, &g)| g <= 0.5 * g0)
            .map(|(&r, _)| r)
            .unwrap_or_else(|| self.last_radius_m())
            .max(1e-6)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_linear_between_rows() {
        let t = GainTable::new(vec![0.0, 10.0], vec![1.0, 0.01]).unwrap();
        assert!((t.evaluate(5.0) - 0.1).abs() < 1e-15);
        assert_eq!(t.evaluate(0.0), 1.0);
    }

    #[test]
    fn tail_continues_final_trend() {
        let t = GainTable::new(vec![0.0, 10.0], vec![1.0, 0.01]).unwrap();
        assert!((t.evaluate(20.0) - 1e-4).abs() < 1e-17);
        assert!((t.tail_rate() - 100f64.ln() / 10.0).abs() < 1e-15);
    }

    #[test]
    fn flat_below_first_row() {
        let t = GainTable::new(vec![2.0, 4.0], vec![0.5, 0.25]).unwrap();
        assert_eq!(t.evaluate(0.0), 0.5);
        assert_eq!(t.evaluate(1.9), 0.5);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(GainTable::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(GainTable::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(GainTable::new(vec![1.0, 2.0], vec![f64::INFINITY, 1.0]).is_err());
        assert!(GainTable::new(vec![], vec![]).is_err());
    }

    #[test]
    fn csv_requires_two_columns() {
        let ok = GainTable::from_csv("r_m,gain\n0,1\n100,0.001\n".as_bytes()).unwrap();
        assert_eq!(ok.radii_m(), &[0.0, 100.0]);
        let singular = GainTable::from_csv("r_m,gain\n0,inf\n1,1\n".as_bytes()).unwrap();
        assert_eq!(singular.origin_gain(), f64::INFINITY);
        assert!(GainTable::from_csv("r_m\n0\n".as_bytes()).is_err());
        assert!(GainTable::from_csv("r_m,gain\n0,abc\n".as_bytes()).is_err());
    }
}

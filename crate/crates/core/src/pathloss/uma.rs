//! Urban-macro (UMa) log-distance model with distance-dependent line of sight.
//!
//! Default constants follow the 3GPP TR 38.901 UMa table: a dual-slope LoS
//! branch with a height-dependent breakpoint, an NLoS branch floored by the
//! LoS loss, and the UMa LoS-probability curve. Gains are linear, relative to
//! unit transmit power.

use serde::{Deserialize, Serialize};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// How the LoS/NLoS state of a link enters the gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Blockage {
    /// Each link draws LoS with the LoS probability; the gain is that branch.
    #[default]
    Sampled,
    /// Each link uses the LoS-probability-weighted mean gain.
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UmaParams {
    pub carrier_ghz: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    /// Effective environment height subtracted from both antenna heights when
    /// computing the breakpoint distance.
    pub env_height_m: f64,
    pub los_intercept_db: f64,
    pub los_near_slope_db: f64,
    pub los_far_slope_db: f64,
    pub los_breakpoint_db: f64,
    pub nlos_intercept_db: f64,
    pub nlos_slope_db: f64,
    pub nlos_ue_height_db: f64,
    pub frequency_slope_db: f64,
    pub los_prob_near_m: f64,
    pub los_prob_decay_m: f64,
    pub blockage: Blockage,
}

impl Default for UmaParams {
    fn default() -> Self {
        Self {
            carrier_ghz: 28.0,
            bs_height_m: 25.0,
            ue_height_m: 1.5,
            env_height_m: 1.0,
            los_intercept_db: 28.0,
            los_near_slope_db: 22.0,
            los_far_slope_db: 40.0,
            los_breakpoint_db: 9.0,
            nlos_intercept_db: 13.54,
            nlos_slope_db: 39.08,
            nlos_ue_height_db: 0.6,
            frequency_slope_db: 20.0,
            los_prob_near_m: 18.0,
            los_prob_decay_m: 63.0,
            blockage: Blockage::Sampled,
        }
    }
}

impl UmaParams {
    pub(crate) fn check(&self) -> Result<(), String> {
        if !(self.carrier_ghz > 0.0) {
            return Err("carrier frequency must be positive".into());
        }
        if !(self.bs_height_m > self.env_height_m && self.ue_height_m > self.env_height_m) {
            return Err("antenna heights must exceed the environment height".into());
        }
        if self.bs_height_m == self.ue_height_m {
            return Err("BS and UE heights must differ".into());
        }
        if !(self.los_prob_near_m >= 0.0 && self.los_prob_decay_m > 0.0) {
            return Err("LoS-probability distances must be positive".into());
        }
        Ok(())
    }

    fn height_gap(&self) -> f64 {
        self.bs_height_m - self.ue_height_m
    }

    pub fn breakpoint_m(&self) -> f64 {
        4.0 * (self.bs_height_m - self.env_height_m)
            * (self.ue_height_m - self.env_height_m)
            * self.carrier_ghz
            * 1e9
            / SPEED_OF_LIGHT
    }

    fn distance_3d(&self, d2d: f64) -> f64 {
        d2d.hypot(self.height_gap())
    }

    pub fn los_loss_db(&self, d2d: f64) -> f64 {
        let d3d = self.distance_3d(d2d);
        let freq = self.frequency_slope_db * self.carrier_ghz.log10();
        let bp = self.breakpoint_m();
        if d2d <= bp {
            self.los_intercept_db + self.los_near_slope_db * d3d.log10() + freq
        } else {
            let gap = self.height_gap();
            self.los_intercept_db + self.los_far_slope_db * d3d.log10() + freq
                - self.los_breakpoint_db * (bp * bp + gap * gap).log10()
        }
    }

    pub fn nlos_loss_db(&self, d2d: f64) -> f64 {
        let d3d = self.distance_3d(d2d);
        let nlos = self.nlos_intercept_db
            + self.nlos_slope_db * d3d.log10()
            + self.frequency_slope_db * self.carrier_ghz.log10()
            - self.nlos_ue_height_db * (self.ue_height_m - 1.5);
        nlos.max(self.los_loss_db(d2d))
    }

    pub fn los_probability(&self, d2d: f64) -> f64 {
        let near = self.los_prob_near_m;
        if d2d <= near {
            return 1.0;
        }
        let base = near / d2d + (-d2d / self.los_prob_decay_m).exp() * (1.0 - near / d2d);
        let c = if self.ue_height_m <= 13.0 {
            0.0
        } else {
            ((self.ue_height_m - 13.0) / 10.0).powf(1.5)
        };
        let boost = 1.0 + c * 1.25 * (d2d / 100.0).powi(3) * (-d2d / 150.0).exp();
        (base * boost).min(1.0)
    }

    /// Linear LoS gain at zero ground distance; the model's natural `l0`.
    pub fn origin_gain(&self) -> f64 {
        db_to_linear(-self.los_loss_db(0.0))
    }

    pub(crate) fn los_shape(&self, d2d: f64) -> f64 {
        db_to_linear(self.los_loss_db(0.0) - self.los_loss_db(d2d))
    }

    pub(crate) fn nlos_shape(&self, d2d: f64) -> f64 {
        db_to_linear(self.los_loss_db(0.0) - self.nlos_loss_db(d2d))
    }

    pub(crate) fn mean_shape(&self, d2d: f64) -> f64 {
        let p = self.los_probability(d2d);
        p * self.los_shape(d2d) + (1.0 - p) * self.nlos_shape(d2d)
    }

    /// Shape of a link whose LoS state is decided by the uniform draw `u`.
    pub(crate) fn sampled_shape(&self, d2d: f64, u: f64) -> f64 {
        if u < self.los_probability(d2d) {
            self.los_shape(d2d)
        } else {
            self.nlos_shape(d2d)
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathLossConfig {
    /// Received power at the reference distance, dBm.
    pub p0_dbm: f64,
    pub d0_m: f64,
    pub exponent_n: f64,
    /// Standard deviation of log-normal shadowing, dB.
    pub noise_sigma_dbm: f64,
    pub clamp_min_dbm: i32,
    pub clamp_max_dbm: i32,
}

impl Default for PathLossConfig {
    fn default() -> Self {
        Self {
            p0_dbm: -40.0,
            d0_m: 1.0,
            exponent_n: 2.5,
            noise_sigma_dbm: 2.0,
            clamp_min_dbm: -100,
            clamp_max_dbm: -20,
        }
    }
}

impl PathLossConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Configuration(m.to_string()));
        if !(self.d0_m > 0.0) {
            return bad("d0_m must be positive");
        }
        if !(self.exponent_n > 0.0) {
            return bad("exponent_n must be positive");
        }
        if !(self.noise_sigma_dbm >= 0.0) {
            return bad("noise_sigma_dbm must be non-negative");
        }
        if !self.p0_dbm.is_finite() {
            return bad("p0_dbm must be finite");
        }
        if self.clamp_min_dbm >= self.clamp_max_dbm {
            return bad("clamp_min_dbm must be below clamp_max_dbm");
        }
        if self.clamp_max_dbm > 0 {
            return bad("clamp_max_dbm must not be positive");
        }
        Ok(())
    }

    /// Noise-free received power at `distance_m`.
    pub fn mean_rssi(&self, distance_m: f64) -> f64 {
        self.p0_dbm - 10.0 * self.exponent_n * (distance_m / self.d0_m).log10()
    }
}

/// `round(p0 - 10 n log10(d / d0) + N(0, sigma))`, clamped.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn rssi_at_distance<R: Rng + ?Sized>(
    cfg: &PathLossConfig,
    distance_m: f64,
    rng: &mut R,
) -> Result<i32, SimError> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(SimError::NonPositiveDistance(distance_m));
    }
    let mut value = cfg.mean_rssi(distance_m);
    if cfg.noise_sigma_dbm > 0.0 {
        let noise = Normal::new(0.0, cfg.noise_sigma_dbm)
            .map_err(|e| SimError::Configuration(e.to_string()))?;
        value += noise.sample(rng);
    }
    let rounded = value.round().clamp(f64::from(cfg.clamp_min_dbm), f64::from(cfg.clamp_max_dbm));
    Ok(rounded as i32)
}

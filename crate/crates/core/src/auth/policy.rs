use serde::{Deserialize, Serialize};

use super::AuthError;

/// How observations from the two devices are matched to the same AP.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKey {
    /// BSSID when both sides carry one and they agree, otherwise SSID.
    #[default]
    BssidThenSsid,
    SsidOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    /// Largest allowed gap between the two scans' timestamps.
    pub pairing_window_ms: i64,
    /// Minimum share of `Authentic` predictions needed to grant.
    pub vote_threshold_tau: f64,
    /// Minimum number of APs heard by both devices.
    pub min_overlap_aps: usize,
    pub match_key: MatchKey,
    /// A session still missing a scan this long after it began is denied.
    pub scan_timeout_ms: i64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            pairing_window_ms: 10_000,
            vote_threshold_tau: 0.6,
            min_overlap_aps: 1,
            match_key: MatchKey::BssidThenSsid,
            scan_timeout_ms: 60_000,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), AuthError> {
        if !(self.vote_threshold_tau > 0.0 && self.vote_threshold_tau <= 1.0) {
            return Err(AuthError::InvalidPolicy("vote_threshold_tau must be in (0, 1]".into()));
        }
        if self.min_overlap_aps < 1 {
            return Err(AuthError::InvalidPolicy("min_overlap_aps must be at least 1".into()));
        }
        if self.pairing_window_ms < 0 || self.scan_timeout_ms <= 0 {
            return Err(AuthError::InvalidPolicy("time windows must be positive".into()));
        }
        Ok(())
    }
}

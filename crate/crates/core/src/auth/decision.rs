use serde::{Deserialize, Serialize};

use super::{overlap_observations, PolicyConfig};
use crate::beacon::{FeatureEncoder, Label, ScanSnapshot};
use crate::ml::Classifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Grant,
    Deny,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reason {
    ClassifierAuthentic,
    ClassifierUnauthorized,
    NoOverlap,
    StaleScans,
    MissingScan,
    FirstFactorFailed,
}

impl Reason {
    pub const ALL: [Reason; 6] = [
        Reason::ClassifierAuthentic,
        Reason::ClassifierUnauthorized,
        Reason::NoOverlap,
        Reason::StaleScans,
        Reason::MissingScan,
        Reason::FirstFactorFailed,
    ];
}

/// What the classifier step concluded, before it is stamped onto a session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub reason: Reason,
    pub authentic_fraction: Option<f64>,
    /// Number of shared observations that were classified.
    pub classified: usize,
}

impl Verdict {
    pub fn deny(reason: Reason) -> Self {
        Self {
            outcome: Outcome::Deny,
            reason,
            authentic_fraction: None,
            classified: 0,
        }
    }
}

/// Final, immutable result of one session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuthDecision {
    pub outcome: Outcome,
    pub reason: Reason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub authentic_fraction: Option<f64>,
    pub decided_at: i64,
}

impl AuthDecision {
    pub fn new(verdict: &Verdict, decided_at: i64) -> Self {
        Self {
            outcome: verdict.outcome,
            reason: verdict.reason,
            authentic_fraction: verdict.authentic_fraction,
            decided_at,
        }
    }

    pub fn deny(reason: Reason, decided_at: i64) -> Self {
        Self::new(&Verdict::deny(reason), decided_at)
    }

    pub fn is_grant(&self) -> bool {
        self.outcome == Outcome::Grant
    }
}

/// Checks run in order: scan freshness, shared access points, then the
/// classifier vote. Grants only when the share of `Authentic` predictions
/// over all shared observations reaches `vote_threshold_tau`.
pub fn decide<C: Classifier + ?Sized>(
    mobile: &ScanSnapshot,
    login: &ScanSnapshot,
    model: &C,
    encoder: &FeatureEncoder,
    policy: &PolicyConfig,
) -> Verdict {
    let gap = (i128::from(mobile.timestamp_ms()) - i128::from(login.timestamp_ms())).abs();
    if gap > i128::from(policy.pairing_window_ms) {
        return Verdict::deny(Reason::StaleScans);
    }
    let shared = overlap_observations(mobile, login, policy);
    if shared.is_empty() || shared.len() < policy.min_overlap_aps.saturating_mul(2) {
        return Verdict::deny(Reason::NoOverlap);
    }
    let authentic = shared
        .iter()
        .filter(|(role, obs)| model.predict(&encoder.encode(*role, obs)) == Label::Authentic)
        .count();
    let fraction = authentic as f64 / shared.len() as f64;
    let granted = fraction >= policy.vote_threshold_tau;
    Verdict {
        outcome: if granted { Outcome::Grant } else { Outcome::Deny },
        reason: if granted {
            Reason::ClassifierAuthentic
        } else {
            Reason::ClassifierUnauthorized
        },
        authentic_fraction: Some(fraction),
        classified: shared.len(),
    }
}

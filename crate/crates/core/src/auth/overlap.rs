use super::{MatchKey, PolicyConfig};
use crate::beacon::{BeaconObservation, DeviceRole, ScanSnapshot};

fn same_bssid(a: &BeaconObservation, b: &BeaconObservation) -> bool {
    matches!((a.bssid(), b.bssid()), (Some(x), Some(y)) if x == y)
}

/// Observations of access points heard by both devices.
///
/// Each mobile observation is paired with at most one login observation:
/// first one with the same BSSID (under [`MatchKey::BssidThenSsid`]), else
/// one with the same SSID. The result lists, per matched AP in mobile-scan
/// order, the mobile observation followed by the login observation.
pub fn overlap_observations(
    mobile: &ScanSnapshot,
    login: &ScanSnapshot,
    policy: &PolicyConfig,
) -> Vec<(DeviceRole, BeaconObservation)> {
    let login_obs = login.observations();
    let mut taken = vec![false; login_obs.len()];
    let mut out = Vec::new();

    for m in mobile.observations() {
        let free = |pred: &dyn Fn(&BeaconObservation) -> bool| {
            login_obs
                .iter()
                .enumerate()
                .position(|(i, l)| !taken[i] && pred(l))
        };
        let by_bssid = match policy.match_key {
            MatchKey::BssidThenSsid => free(&|l| same_bssid(m, l)),
            MatchKey::SsidOnly => None,
        };
        let Some(i) = by_bssid.or_else(|| free(&|l| l.ssid() == m.ssid())) else {
            continue;
        };
        taken[i] = true;
        out.push((DeviceRole::Mobile, m.clone()));
        out.push((DeviceRole::Login, login_obs[i].clone()));
    }
    out
}

//! Beacon observations, device scans and the labeled dataset they feed.

mod dataset;
mod encoder;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dataset::{
    parse_dataset_csv, parse_dataset_csv_with, write_dataset_csv, Dataset, DatasetError,
    LabelCounts, LabeledSample, Provenance, RoleRule, CSV_HEADER,
};
pub use encoder::{FeatureEncoder, FeatureVector, FEATURE_COUNT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BeaconError {
    #[error("ssid must not be empty")]
    EmptySsid,
    #[error("frequency must be positive")]
    NonPositiveFrequency,
    #[error("rssi {0} dBm is positive")]
    PositiveRssi(i32),
    #[error("invalid bssid {0:?}")]
    InvalidBssid(String),
    #[error("duplicate observation of ssid {ssid:?} in one scan")]
    DuplicateObservation { ssid: String },
    #[error("unknown device role {0:?}")]
    UnknownRole(String),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
}

/// 48-bit radio MAC of an access point, rendered as `aa:bb:cc:dd:ee:ff`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bssid(pub [u8; 6]);

impl fmt::Display for Bssid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d, e, g] = self.0;
        write!(f, "{a:02x}:{b:02x}:{c:02x}:{d:02x}:{e:02x}:{g:02x}")
    }
}

impl FromStr for Bssid {
    type Err = BeaconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || BeaconError::InvalidBssid(s.to_string());
        let mut octets = [0u8; 6];
        let mut parts = s.split(':');
        for octet in octets.iter_mut() {
            let part = parts.next().ok_or_else(invalid)?;
            if part.len() != 2 {
                return Err(invalid());
            }
            *octet = u8::from_str_radix(part, 16).map_err(|_| invalid())?;
        }
        if parts.next().is_some() {
            return Err(invalid());
        }
        Ok(Bssid(octets))
    }
}

impl Serialize for Bssid {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bssid {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One device's reading of one access point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawObservation")]
pub struct BeaconObservation {
    ssid: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    bssid: Option<Bssid>,
    /// Hz.
    frequency: u64,
    /// dBm.
    rssi: i32,
}

#[derive(Deserialize)]
struct RawObservation {
    ssid: String,
    #[serde(default)]
    bssid: Option<Bssid>,
    frequency: u64,
    rssi: i32,
}

impl TryFrom<RawObservation> for BeaconObservation {
    type Error = BeaconError;

    fn try_from(raw: RawObservation) -> Result<Self, Self::Error> {
        BeaconObservation::new(raw.ssid, raw.bssid, raw.frequency, raw.rssi)
    }
}

impl BeaconObservation {
    pub fn new(
        ssid: impl Into<String>,
        bssid: Option<Bssid>,
        frequency_hz: u64,
        rssi_dbm: i32,
    ) -> Result<Self, BeaconError> {
        let ssid = ssid.into();
        if ssid.is_empty() {
            return Err(BeaconError::EmptySsid);
        }
        if frequency_hz == 0 {
            return Err(BeaconError::NonPositiveFrequency);
        }
        if rssi_dbm > 0 {
            return Err(BeaconError::PositiveRssi(rssi_dbm));
        }
        Ok(Self {
            ssid,
            bssid,
            frequency: frequency_hz,
            rssi: rssi_dbm,
        })
    }

    pub fn ssid(&self) -> &str {
        &self.ssid
    }

    pub fn bssid(&self) -> Option<Bssid> {
        self.bssid
    }

    pub fn frequency_hz(&self) -> u64 {
        self.frequency
    }

    pub fn rssi_dbm(&self) -> i32 {
        self.rssi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceRole {
    Mobile,
    Login,
}

impl DeviceRole {
    pub const ALL: [DeviceRole; 2] = [DeviceRole::Mobile, DeviceRole::Login];

    /// Numeric code used in feature vectors.
    pub fn code(self) -> u8 {
        match self {
            DeviceRole::Mobile => 0,
            DeviceRole::Login => 1,
        }
    }
}

impl fmt::Display for DeviceRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeviceRole::Mobile => "mobile",
            DeviceRole::Login => "login",
        })
    }
}

impl FromStr for DeviceRole {
    type Err = BeaconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mobile" => Ok(DeviceRole::Mobile),
            "login" => Ok(DeviceRole::Login),
            _ => Err(BeaconError::UnknownRole(s.to_string())),
        }
    }
}

/// Ground truth for one dataset row. `Authentic` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Authentic,
    Unauthorized,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Authentic => "authentic",
            Label::Unauthorized => "unauthorized",
        })
    }
}

impl FromStr for Label {
    type Err = BeaconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "authentic" => Ok(Label::Authentic),
            "unauthorized" => Ok(Label::Unauthorized),
            _ => Err(BeaconError::UnknownLabel(s.to_string())),
        }
    }
}

/// Everything one device saw during one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSnapshot")]
pub struct ScanSnapshot {
    device_id: String,
    role: DeviceRole,
    /// Milliseconds since the Unix epoch.
    timestamp: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    location_tag: Option<String>,
    observations: Vec<BeaconObservation>,
}

#[derive(Deserialize)]
struct RawSnapshot {
    device_id: String,
    role: DeviceRole,
    timestamp: i64,
    #[serde(default)]
    location_tag: Option<String>,
    #[serde(default)]
    observations: Vec<BeaconObservation>,
}

impl TryFrom<RawSnapshot> for ScanSnapshot {
    type Error = BeaconError;

    fn try_from(raw: RawSnapshot) -> Result<Self, Self::Error> {
        ScanSnapshot::new(
            raw.device_id,
            raw.role,
            raw.timestamp,
            raw.location_tag,
            raw.observations,
        )
    }
}

impl ScanSnapshot {
    /// Rejects scans that list the same (ssid, bssid) pair twice.
    pub fn new(
        device_id: impl Into<String>,
        role: DeviceRole,
        timestamp_ms: i64,
        location_tag: Option<String>,
        observations: Vec<BeaconObservation>,
    ) -> Result<Self, BeaconError> {
        let mut seen = HashSet::with_capacity(observations.len());
        for obs in &observations {
            if !seen.insert((obs.ssid(), obs.bssid())) {
                return Err(BeaconError::DuplicateObservation {
                    ssid: obs.ssid().to_string(),
                });
            }
        }
        Ok(Self {
            device_id: device_id.into(),
            role,
            timestamp: timestamp_ms,
            location_tag,
            observations,
        })
    }

    pub fn device_id(&self) -> &str {
        &self.device_id
    }

    pub fn role(&self) -> DeviceRole {
        self.role
    }

    pub fn timestamp_ms(&self) -> i64 {
        self.timestamp
    }

    pub fn location_tag(&self) -> Option<&str> {
        self.location_tag.as_deref()
    }

    pub fn observations(&self) -> &[BeaconObservation] {
        &self.observations
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

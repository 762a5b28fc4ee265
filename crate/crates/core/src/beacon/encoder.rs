use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{BeaconObservation, Dataset, DatasetError, DeviceRole};

pub const FEATURE_COUNT: usize = 4;

/// `[role_code, ssid_index, frequency_normalized, rssi_dbm]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub const ROLE: usize = 0;
    pub const SSID: usize = 1;
    pub const FREQUENCY: usize = 2;
    pub const RSSI: usize = 3;

    pub const NAMES: [&'static str; FEATURE_COUNT] = ["role", "ssid_index", "frequency", "rssi_dbm"];

    pub fn get(&self, feature: usize) -> f64 {
        self.0[feature]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Turns observations into model inputs. Fitted once on training data.
///
/// SSIDs map to dense indices `1..=len` in first-appearance order; index 0 is
/// reserved for SSIDs never seen during fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "EncoderDoc", into = "EncoderDoc")]
pub struct FeatureEncoder {
    vocabulary: Vec<String>,
    index: HashMap<String, u32>,
    frequency_min_hz: u64,
    frequency_max_hz: u64,
}

#[derive(Serialize, Deserialize)]
struct EncoderDoc {
    ssid_vocabulary: Vec<String>,
    frequency_scale: (u64, u64),
}

impl From<EncoderDoc> for FeatureEncoder {
    fn from(doc: EncoderDoc) -> Self {
        FeatureEncoder::from_parts(doc.ssid_vocabulary, doc.frequency_scale)
    }
}

impl From<FeatureEncoder> for EncoderDoc {
    fn from(enc: FeatureEncoder) -> Self {
        EncoderDoc {
            frequency_scale: enc.frequency_scale(),
            ssid_vocabulary: enc.vocabulary,
        }
    }
}

impl FeatureEncoder {
    pub fn fit(dataset: &Dataset) -> Result<Self, DatasetError> {
        Self::fit_observations(dataset.samples.iter().map(|s| &s.observation))
    }

    pub fn fit_observations<'a>(
        observations: impl IntoIterator<Item = &'a BeaconObservation>,
    ) -> Result<Self, DatasetError> {
        let mut vocabulary = Vec::new();
        let mut index = HashMap::new();
        let mut range: Option<(u64, u64)> = None;
        for obs in observations {
            if !index.contains_key(obs.ssid()) {
                vocabulary.push(obs.ssid().to_string());
                index.insert(obs.ssid().to_string(), vocabulary.len() as u32);
            }
            let f = obs.frequency_hz();
            range = Some(match range {
                None => (f, f),
                Some((lo, hi)) => (lo.min(f), hi.max(f)),
            });
        }
        let (frequency_min_hz, frequency_max_hz) = range.ok_or(DatasetError::EmptyDataset)?;
        Ok(Self {
            vocabulary,
            index,
            frequency_min_hz,
            frequency_max_hz,
        })
    }

    fn from_parts(vocabulary: Vec<String>, (lo, hi): (u64, u64)) -> Self {
        let index = vocabulary
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32 + 1))
            .collect();
        Self {
            vocabulary,
            index,
            frequency_min_hz: lo,
            frequency_max_hz: hi,
        }
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn vocabulary_len(&self) -> usize {
        self.vocabulary.len()
    }

    /// 0 for SSIDs outside the vocabulary.
    pub fn ssid_index(&self, ssid: &str) -> u32 {
        self.index.get(ssid).copied().unwrap_or(0)
    }

    pub fn frequency_scale(&self) -> (u64, u64) {
        (self.frequency_min_hz, self.frequency_max_hz)
    }

    /// Min-max scaled into `[0, 1]`; 0.5 everywhere when the fitted range is a single value.
    pub fn normalize_frequency(&self, frequency_hz: u64) -> f64 {
        let (lo, hi) = self.frequency_scale();
        if hi <= lo {
            return 0.5;
        }
        let x = (frequency_hz as f64 - lo as f64) / (hi as f64 - lo as f64);
        x.clamp(0.0, 1.0)
    }

    pub fn encode(&self, role: DeviceRole, obs: &BeaconObservation) -> FeatureVector {
        FeatureVector([
            f64::from(role.code()),
            f64::from(self.ssid_index(obs.ssid())),
            self.normalize_frequency(obs.frequency_hz()),
            f64::from(obs.rssi_dbm()),
        ])
    }
}

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BeaconObservation, DeviceRole, Label};

/// Header row written by [`write_dataset_csv`].
pub const CSV_HEADER: [&str; 6] = [
    "RPI",
    "SSID",
    "Frequency (Hz)",
    "RSSI (dBm)",
    "Location",
    "Label",
];

const COL_RPI: usize = 0;
const COL_SSID: usize = 1;
const COL_FREQUENCY: usize = 2;
const COL_RSSI: usize = 3;
const COL_LOCATION: usize = 4;
const COL_LABEL: usize = 5;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("row {row}: cannot parse column {column:?}")]
    RowParseError { row: u64, column: &'static str },
    #[error("dataset has no data rows")]
    EmptyDataset,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl DatasetError {
    pub fn code(&self) -> &'static str {
        match self {
            DatasetError::MalformedHeader(_) => "MalformedHeader",
            DatasetError::RowParseError { .. } => "RowParseError",
            DatasetError::EmptyDataset => "EmptyDataset",
            DatasetError::Csv(_) => "CsvError",
            DatasetError::Io(_) => "IoError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    RealCsv,
    Simulated,
}

/// Exactly one row of the dataset CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub role: DeviceRole,
    pub observation: BeaconObservation,
    pub location_tag: String,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub authentic: usize,
    pub unauthorized: usize,
}

impl LabelCounts {
    pub fn total(&self) -> usize {
        self.authentic + self.unauthorized
    }

    pub fn get(&self, label: Label) -> usize {
        match label {
            Label::Authentic => self.authentic,
            Label::Unauthorized => self.unauthorized,
        }
    }

    pub fn add(&mut self, label: Label) {
        match label {
            Label::Authentic => self.authentic += 1,
            Label::Unauthorized => self.unauthorized += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(samples: Vec<LabeledSample>, provenance: Provenance) -> Self {
        Self {
            samples,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn label_counts(&self) -> LabelCounts {
        let mut counts = LabelCounts::default();
        for s in &self.samples {
            counts.add(s.label);
        }
        counts
    }

    /// Minority/majority class ratio is at least 0.9.
    pub fn is_balanced(&self) -> bool {
        let c = self.label_counts();
        let (lo, hi) = (c.authentic.min(c.unauthorized), c.authentic.max(c.unauthorized));
        hi > 0 && lo as f64 / hi as f64 >= 0.9
    }
}

/// Maps the free-form "RPI" column onto a device role.
///
/// A value containing `mobile_token` is the mobile device, otherwise one
/// containing `login_token` is the login device.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleRule {
    pub mobile_token: String,
    pub login_token: String,
}

impl Default for RoleRule {
    fn default() -> Self {
        Self {
            mobile_token: "1".into(),
            login_token: "2".into(),
        }
    }
}

impl RoleRule {
    pub fn classify(&self, value: &str) -> Option<DeviceRole> {
        if value.contains(&self.mobile_token) {
            Some(DeviceRole::Mobile)
        } else if value.contains(&self.login_token) {
            Some(DeviceRole::Login)
        } else {
            None
        }
    }

    /// Column value written for `role`; parses back to `role` under this rule.
    pub fn render(&self, role: DeviceRole) -> String {
        match role {
            DeviceRole::Mobile => format!("RPI{}", self.mobile_token),
            DeviceRole::Login => format!("RPI{}", self.login_token),
        }
    }
}

/// Column name with surrounding quotes and any unit parenthetical removed.
fn canonical_column(name: &str) -> String {
    let name = name.trim_start_matches('\u{feff}').trim().trim_matches('"').trim();
    let base = match name.find('(') {
        Some(i) if name.ends_with(')') => &name[..i],
        _ => name,
    };
    base.trim().to_ascii_lowercase()
}

fn header_layout(header: &csv::StringRecord) -> Result<[usize; 6], DatasetError> {
    const NAMES: [&str; 6] = ["rpi", "ssid", "frequency", "rssi", "location", "label"];
    if header.len() != NAMES.len() {
        return Err(DatasetError::MalformedHeader(format!(
            "expected 6 columns, found {}",
            header.len()
        )));
    }
    let mut layout = [usize::MAX; 6];
    for (pos, raw) in header.iter().enumerate() {
        let name = canonical_column(raw);
        let slot = NAMES
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| DatasetError::MalformedHeader(format!("unexpected column {raw:?}")))?;
        if layout[slot] != usize::MAX {
            return Err(DatasetError::MalformedHeader(format!("duplicate column {raw:?}")));
        }
        layout[slot] = pos;
    }
    Ok(layout)
}

pub fn parse_dataset_csv<R: Read>(source: R) -> Result<Dataset, DatasetError> {
    parse_dataset_csv_with(source, &RoleRule::default())
}

pub fn parse_dataset_csv_with<R: Read>(source: R, rule: &RoleRule) -> Result<Dataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let layout = header_layout(reader.headers()?)?;

    let mut samples = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut row = 1u64;
    while reader.read_record(&mut record)? {
        row += 1;
        let field = |col: usize| -> Result<&str, DatasetError> {
            record
                .get(layout[col])
                .ok_or(DatasetError::RowParseError {
                    row,
                    column: CSV_HEADER[col],
                })
        };
        let err = |col: usize| DatasetError::RowParseError {
            row,
            column: CSV_HEADER[col],
        };

        let role = rule.classify(field(COL_RPI)?).ok_or_else(|| err(COL_RPI))?;
        let ssid = field(COL_SSID)?;
        let frequency: u64 = field(COL_FREQUENCY)?
            .trim()
            .parse()
            .map_err(|_| err(COL_FREQUENCY))?;
        let rssi: i32 = field(COL_RSSI)?.trim().parse().map_err(|_| err(COL_RSSI))?;
        let location_tag = field(COL_LOCATION)?.to_string();
        let label: Label = field(COL_LABEL)?.parse().map_err(|_| err(COL_LABEL))?;

        let observation = BeaconObservation::new(ssid, None, frequency, rssi).map_err(|e| {
            use super::BeaconError::*;
            match e {
                EmptySsid => err(COL_SSID),
                NonPositiveFrequency => err(COL_FREQUENCY),
                _ => err(COL_RSSI),
            }
        })?;
        samples.push(LabeledSample {
            role,
            observation,
            location_tag,
            label,
        });
    }

    if samples.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    Ok(Dataset::new(samples, Provenance::RealCsv))
}

/// Writes `dataset` with the canonical header and LF line endings.
pub fn write_dataset_csv<W: Write>(dataset: &Dataset, sink: W) -> Result<(), DatasetError> {
    let rule = RoleRule::default();
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    writer.write_record(CSV_HEADER)?;
    for s in &dataset.samples {
        writer.write_record([
            rule.render(s.role).as_str(),
            s.observation.ssid(),
            &s.observation.frequency_hz().to_string(),
            &s.observation.rssi_dbm().to_string(),
            &s.location_tag,
            &s.label.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

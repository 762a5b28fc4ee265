//! Zero-effort second factor built on shared Wi-Fi surroundings.
//!
//! Two devices belonging to one user (a phone and the machine being logged
//! into) each scan nearby access points. A server encodes the observations
//! that both devices share, classifies each with a tree model trained on
//! labeled co-location data, and grants access only when enough of them look
//! like the devices are together.
//!
//! * [`beacon`]: observations, scans, the labeled CSV dataset and feature encoding.
//! * [`ml`]: stratified split, CART decision tree, random forest and metrics.
//! * [`sim`]: log-distance path-loss simulator that produces labeled datasets and scans.
//! * [`auth`]: enrollment store, session state machine and the grant/deny decision.
//! * [`protocol`]: the JSON request/response documents spoken by the service.

pub mod auth;
pub mod beacon;
pub mod ml;
pub mod protocol;
pub mod sim;

pub use beacon::{
    BeaconObservation, Bssid, Dataset, DeviceRole, FeatureEncoder, FeatureVector, Label,
    LabeledSample, Provenance, ScanSnapshot,
};
pub use ml::{Classifier, ConfusionMatrix, MetricsReport, Model};

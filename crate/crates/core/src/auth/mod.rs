//! Server side of the second factor: enrollment, sessions and decisions.
//!
//! A session starts with a first-factor check ([`AuthEngine::begin`]), then
//! waits for one scan from each of the user's two devices. Once both are in,
//! the engine decides: scans too far apart in time, too few access points
//! seen by both devices, or too small a share of `Authentic` predictions over
//! the shared observations all deny. Nothing else grants.

mod credential;
mod decision;
mod engine;
mod overlap;
mod policy;
mod store;

use thiserror::Error;

pub use credential::CredentialHash;
pub use decision::{decide, AuthDecision, Outcome, Reason, Verdict};
pub use engine::{AuthEngine, AuthSession, Clock, ManualClock, SessionState, SystemClock};
pub use overlap::overlap_observations;
pub use policy::{MatchKey, PolicyConfig};
pub use store::{AuditEntry, AuditLog, UserRecord, UserStore};

pub const MIN_SECRET_LEN: usize = 8;

#[derive(Debug, Error)]
pub enum AuthError {
    #[error("user {0:?} already enrolled")]
    DuplicateUser(String),
    #[error("device id {0:?} is already in use")]
    DuplicateDeviceId(String),
    #[error("secret shorter than {MIN_SECRET_LEN} characters")]
    WeakSecret,
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("device {0:?} is not enrolled to this session's user")]
    ForeignDevice(String),
    #[error("a {0} scan was already submitted for this session")]
    DuplicateRoleSubmission(crate::beacon::DeviceRole),
    #[error("session is still waiting for a scan")]
    MissingScan,
    #[error("session already decided")]
    SessionDecided,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("storage: {0}")]
    Storage(String),
}

impl AuthError {
    /// Stable code carried in protocol responses.
    pub fn code(&self) -> &'static str {
        match self {
            AuthError::DuplicateUser(_) => "DuplicateUser",
            AuthError::DuplicateDeviceId(_) => "DuplicateDeviceId",
            AuthError::WeakSecret => "WeakSecret",
            AuthError::UnknownUser(_) => "UnknownUser",
            AuthError::UnknownSession(_) => "UnknownSession",
            AuthError::ForeignDevice(_) => "ForeignDevice",
            AuthError::DuplicateRoleSubmission(_) => "DuplicateRoleSubmission",
            AuthError::MissingScan => "MissingScan",
            AuthError::SessionDecided => "SessionDecided",
            AuthError::InvalidRequest(_) => "InvalidRequest",
            AuthError::InvalidPolicy(_) => "InvalidPolicy",
            AuthError::Storage(_) => "StorageError",
        }
    }
}

impl From<std::io::Error> for AuthError {
    fn from(e: std::io::Error) -> Self {
        AuthError::Storage(e.to_string())
    }
}

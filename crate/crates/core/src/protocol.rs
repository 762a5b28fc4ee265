//! Request and response documents exchanged with the authentication service.
//!
//! Each request is one JSON object tagged by `op`
//! (`enroll`, `begin`, `submit_scan`, `status`). Each response carries
//! `ok`, and on failure an `error` code naming the failed check.

use serde::{Deserialize, Serialize};

use crate::auth::{AuthDecision, AuthError, AuthSession, Outcome, Reason, SessionState, UserRecord};
use crate::beacon::ScanSnapshot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Request {
    Enroll {
        username: String,
        secret: String,
        mobile_device_id: String,
        login_device_id: String,
    },
    Begin {
        username: String,
        secret: String,
    },
    SubmitScan {
        session_id: String,
        device_id: String,
        snapshot: ScanSnapshot,
    },
    Status {
        session_id: String,
    },
}

impl Request {
    pub fn op(&self) -> &'static str {
        match self {
            Request::Enroll { .. } => "enroll",
            Request::Begin { .. } => "begin",
            Request::SubmitScan { .. } => "submit_scan",
            Request::Status { .. } => "status",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub username: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<SessionState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<Reason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub authentic_fraction: Option<f64>,
}

impl Response {
    pub fn error(code: &str, message: impl Into<String>) -> Self {
        Self {
            ok: false,
            error: Some(code.to_string()),
            message: Some(message.into()),
            ..Self::default()
        }
    }

    pub fn enrolled(user: &UserRecord) -> Self {
        Self {
            ok: true,
            username: Some(user.username.clone()),
            ..Self::default()
        }
    }

    pub fn session(session: &AuthSession) -> Self {
        let mut r = Self {
            ok: true,
            username: Some(session.username.clone()),
            session_id: Some(session.session_id.clone()),
            state: Some(session.state),
            ..Self::default()
        };
        if let Some(d) = &session.decision {
            r.apply_decision(d);
        }
        r
    }

    fn apply_decision(&mut self, d: &AuthDecision) {
        self.outcome = Some(d.outcome);
        self.reason = Some(d.reason);
        self.authentic_fraction = d.authentic_fraction;
    }

    pub fn decision(&self) -> Option<(Outcome, Reason, Option<f64>)> {
        Some((self.outcome?, self.reason?, self.authentic_fraction))
    }
}

impl From<&AuthError> for Response {
    fn from(e: &AuthError) -> Self {
        Response::error(e.code(), e.to_string())
    }
}

//! Thin HTTP client for the proxauth service, plus a simulated login attempt
//! that drives a whole session from two synthetic devices.

use std::time::{SystemTime, UNIX_EPOCH};

use proxauth_core::auth::{Outcome, Reason};
use proxauth_core::beacon::ScanSnapshot;
use proxauth_core::protocol::{Request, Response};
use proxauth_core::sim::{generate_session, DeviceIds, PathLossConfig, Scenario, SimError, World};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub const RPC_PATH: &str = "/v1/rpc";

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("server rejected {op}: {code}: {message}")]
    Server {
        op: &'static str,
        code: String,
        message: String,
    },
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("simulation: {0}")]
    Simulation(#[from] SimError),
}

impl ClientError {
    /// The server's error code, when the server answered with one.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Server { code, .. } => Some(code),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProxAuthClient {
    base_url: String,
    http: reqwest::Client,
}

impl ProxAuthClient {
    /// `base_url` like `http://127.0.0.1:8080`.
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// Sends one request document. Error responses become [`ClientError::Server`].
    pub async fn call(&self, request: &Request) -> Result<Response, ClientError> {
        let op = request.op();
        let reply = self
            .http
            .post(format!("{}{RPC_PATH}", self.base_url))
            .json(request)
            .send()
            .await?;
        let status = reply.status();
        let body = reply.bytes().await?;
        let response: Response = serde_json::from_slice(&body)
            .map_err(|e| ClientError::Protocol(format!("HTTP {status}: {e}")))?;
        if response.ok {
            Ok(response)
        } else {
            Err(ClientError::Server {
                op,
                code: response.error.unwrap_or_else(|| format!("HTTP {status}")),
                message: response.message.unwrap_or_default(),
            })
        }
    }

    pub async fn enroll(
        &self,
        username: &str,
        secret: &str,
        mobile_device_id: &str,
        login_device_id: &str,
    ) -> Result<Response, ClientError> {
        self.call(&Request::Enroll {
            username: username.into(),
            secret: secret.into(),
            mobile_device_id: mobile_device_id.into(),
            login_device_id: login_device_id.into(),
        })
        .await
    }

    pub async fn begin(&self, username: &str, secret: &str) -> Result<Response, ClientError> {
        self.call(&Request::Begin {
            username: username.into(),
            secret: secret.into(),
        })
        .await
    }

    pub async fn submit_scan(
        &self,
        session_id: &str,
        device_id: &str,
        snapshot: ScanSnapshot,
    ) -> Result<Response, ClientError> {
        self.call(&Request::SubmitScan {
            session_id: session_id.into(),
            device_id: device_id.into(),
            snapshot,
        })
        .await
    }

    pub async fn status(&self, session_id: &str) -> Result<Response, ClientError> {
        self.call(&Request::Status {
            session_id: session_id.into(),
        })
        .await
    }
}

pub fn device_ids(username: &str) -> DeviceIds {
    DeviceIds {
        mobile: format!("{username}-mobile"),
        login: format!("{username}-login"),
    }
}

fn now_ms() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

#[derive(Debug, Clone)]
pub struct AttemptSpec {
    pub username: String,
    pub secret: String,
    pub scenario: Scenario,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptReport {
    pub username: String,
    pub session_id: String,
    pub scenario: Scenario,
    pub location: String,
    pub separation_m: f64,
    pub outcome: Outcome,
    pub reason: Reason,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub authentic_fraction: Option<f64>,
}

fn decision_of(response: &Response) -> Result<(Outcome, Reason, Option<f64>), ClientError> {
    response
        .decision()
        .ok_or_else(|| ClientError::Protocol("session has no decision".into()))
}

/// Makes sure the user exists with the conventional device ids.
/// An already enrolled user is accepted as is.
pub async fn ensure_enrolled(client: &ProxAuthClient, username: &str, secret: &str) -> Result<(), ClientError> {
    let ids = device_ids(username);
    match client.enroll(username, secret, &ids.mobile, &ids.login).await {
        Ok(_) => Ok(()),
        Err(e) if e.code() == Some("DuplicateUser") => Ok(()),
        Err(e) => Err(e),
    }
}

/// Places a device pair for `spec.scenario` in a location of `world`, then
/// enrolls (if needed), begins a session and submits both scans.
pub async fn run_attempt(
    client: &ProxAuthClient,
    world: &World,
    loss: &PathLossConfig,
    spec: &AttemptSpec,
) -> Result<AttemptReport, ClientError> {
    if world.locations.is_empty() {
        return Err(SimError::Configuration("world has no locations".into()).into());
    }
    ensure_enrolled(client, &spec.username, &spec.secret).await?;
    let ids = device_ids(&spec.username);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let location = rng.random_range(0..world.locations.len());
    let session = generate_session(world, location, loss, spec.scenario, &ids, now_ms(), &mut rng)?;

    let begun = client.begin(&spec.username, &spec.secret).await?;
    let session_id = begun
        .session_id
        .clone()
        .ok_or_else(|| ClientError::Protocol("begin returned no session_id".into()))?;
    let last = if begun.decision().is_some() {
        begun
    } else {
        client.submit_scan(&session_id, &ids.mobile, session.mobile.clone()).await?;
        client.submit_scan(&session_id, &ids.login, session.login.clone()).await?
    };
    let (outcome, reason, authentic_fraction) = decision_of(&last)?;
    Ok(AttemptReport {
        username: spec.username.clone(),
        session_id,
        scenario: spec.scenario,
        location: world.locations[location].tag.clone(),
        separation_m: session.separation_m,
        outcome,
        reason,
        authentic_fraction,
    })
}

//! HTTP front end for [`proxauth_core::auth::AuthEngine`].
//!
//! `POST /v1/rpc` takes one request document (see [`proxauth_core::protocol`])
//! and answers with one response document. `GET /healthz` reports liveness
//! and the loaded model kind.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use proxauth_core::auth::{AuditLog, AuthEngine, AuthError, Clock, PolicyConfig, SystemClock, UserStore};
use proxauth_core::ml::{MlError, ModelDocument, ModelKind};
use proxauth_core::protocol::{Request, Response};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

pub const RPC_PATH: &str = "/v1/rpc";
pub const HEALTH_PATH: &str = "/healthz";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("model: {0}")]
    Model(#[from] MlError),
    #[error("policy {path}: {message}")]
    Policy { path: PathBuf, message: String },
    #[error(transparent)]
    Auth(#[from] AuthError),
    #[error("listener: {0}")]
    Listen(std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub model_path: PathBuf,
    pub policy_path: Option<PathBuf>,
    pub listen: SocketAddr,
    /// Holds `users.json` and `audit.jsonl`; `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, ServiceError> {
    fs::read_to_string(path).map_err(|source| ServiceError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<ModelDocument, ServiceError> {
    Ok(ModelDocument::from_json(&read(path)?)?)
}

pub fn load_policy(path: &Path) -> Result<PolicyConfig, ServiceError> {
    let policy: PolicyConfig = serde_json::from_str(&read(path)?).map_err(|e| ServiceError::Policy {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    policy.validate().map_err(|e| ServiceError::Policy {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(policy)
}

/// Assembles an engine around an already loaded model.
pub fn build_engine(
    doc: ModelDocument,
    policy: PolicyConfig,
    data_dir: Option<&Path>,
    clock: Arc<dyn Clock>,
) -> Result<AuthEngine, ServiceError> {
    let (users, audit) = match data_dir {
        Some(dir) => (UserStore::open(dir)?, AuditLog::open(dir)?),
        None => (UserStore::in_memory(), AuditLog::in_memory()),
    };
    Ok(AuthEngine::new(
        Arc::new(doc.model),
        doc.encoder,
        policy,
        users,
        audit,
        clock,
    )?)
}

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<AuthEngine>,
    pub model_kind: ModelKind,
}

/// HTTP status for a failed request.
pub fn status_for(err: &AuthError) -> StatusCode {
    match err {
        AuthError::InvalidRequest(_) | AuthError::WeakSecret => StatusCode::BAD_REQUEST,
        AuthError::ForeignDevice(_) => StatusCode::FORBIDDEN,
        AuthError::UnknownUser(_) | AuthError::UnknownSession(_) => StatusCode::NOT_FOUND,
        AuthError::DuplicateUser(_)
        | AuthError::DuplicateDeviceId(_)
        | AuthError::DuplicateRoleSubmission(_)
        | AuthError::MissingScan
        | AuthError::SessionDecided => StatusCode::CONFLICT,
        AuthError::InvalidPolicy(_) | AuthError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

/// Runs one request against the engine.
pub fn dispatch(engine: &AuthEngine, request: Request) -> Result<Response, AuthError> {
    match request {
        Request::Enroll {
            username,
            secret,
            mobile_device_id,
            login_device_id,
        } => engine
            .enroll(&username, &secret, &mobile_device_id, &login_device_id)
            .map(|u| Response::enrolled(&u)),
        Request::Begin { username, secret } => engine.begin(&username, &secret).map(|s| Response::session(&s)),
        Request::SubmitScan {
            session_id,
            device_id,
            snapshot,
        } => engine
            .submit_scan(&session_id, &device_id, snapshot)
            .map(|s| Response::session(&s)),
        Request::Status { session_id } => engine.status(&session_id).map(|s| Response::session(&s)),
    }
}

async fn rpc(State(state): State<AppState>, body: Bytes) -> impl IntoResponse {
    let request: Request = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => {
            let err = AuthError::InvalidRequest(e.to_string());
            return (status_for(&err), Json(Response::from(&err)));
        }
    };
    let op = request.op();
    let engine = state.engine.clone();
    let result = tokio::task::spawn_blocking(move || dispatch(&engine, request)).await;
    match result {
        Ok(Ok(response)) => {
            tracing::debug!(op, outcome = ?response.outcome, "handled");
            (StatusCode::OK, Json(response))
        }
        Ok(Err(err)) => {
            tracing::debug!(op, error = err.code(), "rejected");
            (status_for(&err), Json(Response::from(&err)))
        }
        Err(join) => {
            tracing::error!(op, "handler panicked: {join}");
            let err = AuthError::Storage("internal error".into());
            (StatusCode::INTERNAL_SERVER_ERROR, Json(Response::from(&err)))
        }
    }
}

async fn health(State(state): State<AppState>) -> impl IntoResponse {
    Json(serde_json::json!({ "ok": true, "model": state.model_kind.to_string() }))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route(RPC_PATH, post(rpc))
        .route(HEALTH_PATH, get(health))
        .with_state(state)
}

/// A server running on a background task.
pub struct RunningServer {
    pub addr: SocketAddr,
    pub engine: Arc<AuthEngine>,
    handle: JoinHandle<()>,
}

impl RunningServer {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(self) {
        self.handle.abort();
    }
}

/// Binds `addr` (port 0 picks a free one) and serves in the background.
pub async fn spawn(
    engine: AuthEngine,
    model_kind: ModelKind,
    addr: SocketAddr,
) -> Result<RunningServer, ServiceError> {
    let listener = TcpListener::bind(addr).await.map_err(ServiceError::Listen)?;
    let addr = listener.local_addr().map_err(ServiceError::Listen)?;
    let engine = Arc::new(engine);
    let app = router(AppState {
        engine: engine.clone(),
        model_kind,
    });
    let handle = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            tracing::error!("server stopped: {e}");
        }
    });
    Ok(RunningServer { addr, engine, handle })
}

/// Loads the model and policy, then serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let doc = load_model(&config.model_path)?;
    let policy = match &config.policy_path {
        Some(p) => load_policy(p)?,
        None => PolicyConfig::default(),
    };
    let model_kind = doc.model.kind();
    let engine = build_engine(doc, policy, config.data_dir.as_deref(), Arc::new(SystemClock))?;
    let listener = TcpListener::bind(config.listen).await.map_err(ServiceError::Listen)?;
    let addr = listener.local_addr().map_err(ServiceError::Listen)?;
    tracing::info!(%addr, model = %model_kind, "listening");
    let app = router(AppState {
        engine: Arc::new(engine),
        model_kind,
    });
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServiceError::Listen)
}

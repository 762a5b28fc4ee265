use std::sync::Arc;

use proxauth_client::{device_ids, ensure_enrolled, run_attempt, AttemptSpec, ClientError, ProxAuthClient};
use proxauth_core::auth::{Outcome, PolicyConfig, Reason, SystemClock};
use proxauth_core::ml::{train_model, ModelKind, TrainConfig};
use proxauth_core::sim::{generate_dataset, EnvironmentConfig, PathLossConfig, Scenario, World};
use proxauth_service::{build_engine, spawn, RunningServer};

async fn server() -> RunningServer {
    let data = generate_dataset(&EnvironmentConfig::default(), &PathLossConfig::default(), 60, 2, 3).unwrap();
    let (doc, _) = train_model(&data, &TrainConfig::new(ModelKind::DecisionTree, 3)).unwrap();
    let engine = build_engine(doc, PolicyConfig::default(), None, Arc::new(SystemClock)).unwrap();
    spawn(engine, ModelKind::DecisionTree, "127.0.0.1:0".parse().unwrap()).await.unwrap()
}

#[test]
fn conventional_device_ids() {
    let ids = device_ids("dana");
    assert_eq!((ids.mobile.as_str(), ids.login.as_str()), ("dana-mobile", "dana-login"));
}

#[tokio::test]
async fn unreachable_server_is_a_transport_error() {
    let client = ProxAuthClient::new("http://127.0.0.1:9/");
    assert_eq!(client.base_url(), "http://127.0.0.1:9");
    let err = client.status("x").await.unwrap_err();
    assert!(matches!(err, ClientError::Transport(_)));
    assert_eq!(err.code(), None);
}

#[tokio::test]
async fn server_errors_carry_code_and_op() {
    let s = server().await;
    let client = ProxAuthClient::new(s.base_url());
    match client.begin("ghost", "whatever1").await.unwrap_err() {
        ClientError::Server { op, code, .. } => assert_eq!((op, code.as_str()), ("begin", "UnknownUser")),
        other => panic!("unexpected {other}"),
    }
}

#[tokio::test]
async fn enrollment_is_idempotent_for_attempts() {
    let s = server().await;
    let client = ProxAuthClient::new(s.base_url());
    ensure_enrolled(&client, "erin", "erin secret").await.unwrap();
    ensure_enrolled(&client, "erin", "erin secret").await.unwrap();
    assert_eq!(s.engine.users().len(), 1);
}

#[tokio::test]
async fn attempt_with_wrong_secret_fails_first_factor() {
    let s = server().await;
    let client = ProxAuthClient::new(s.base_url());
    ensure_enrolled(&client, "finn", "finn secret").await.unwrap();
    let world = World::generate(&EnvironmentConfig::default(), 2, 3).unwrap();
    let spec = AttemptSpec {
        username: "finn".into(),
        secret: "guessed wrong".into(),
        scenario: Scenario::Authentic,
        seed: 4,
    };
    let report = run_attempt(&client, &world, &PathLossConfig::default(), &spec).await.unwrap();
    assert_eq!((report.outcome, report.reason), (Outcome::Deny, Reason::FirstFactorFailed));
    assert!(report.location.starts_with("loc"));
}

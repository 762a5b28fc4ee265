//! End-to-end acceptance run. Prints one PASS/FAIL/SKIP line per criterion
//! and exits nonzero when any criterion fails.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use proxauth_client::{device_ids, ensure_enrolled, run_attempt, AttemptSpec, ProxAuthClient};
use proxauth_core::auth::{
    AuditLog, AuthEngine, AuthError, Clock, ManualClock, Outcome, PolicyConfig, Reason, SystemClock, UserStore,
};
use proxauth_core::beacon::{
    parse_dataset_csv, BeaconObservation, Bssid, DeviceRole, FeatureEncoder, FeatureVector, Label, ScanSnapshot,
};
use proxauth_core::ml::{
    best_split, compute_metrics, evaluate_document, gini_impurity, train_model, ClassCounts, Classifier,
    ConfusionMatrix, DecisionTree, Example, ForestParams, MetricsReport, ModelKind, Node, RandomForest, TrainConfig,
    TreeParams,
};
use proxauth_core::sim::{
    generate_dataset_rows, generate_session, rssi_at_distance, DeviceIds, EnvironmentConfig, PathLossConfig,
    Scenario, World,
};
use proxauth_service::{build_engine, spawn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PAPER_ROWS: usize = 4825;
const PAPER_AUTHENTIC: usize = 2442;
const PAPER_UNAUTHORIZED: usize = 2383;
const PAPER_RF_ACCURACY: f64 = 0.922;
const LOCATIONS: usize = 3;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

// ---- 1: metric oracle -------------------------------------------------------

struct OracleMetrics([Option<f64>; 5]);

/// Expands the matrix into (actual, predicted) pairs and recounts them.
fn oracle_metrics(cm: &ConfusionMatrix) -> OracleMetrics {
    let mut pairs = Vec::new();
    let groups = [
        (cm.tp, Label::Authentic, Label::Authentic),
        (cm.tn, Label::Unauthorized, Label::Unauthorized),
        (cm.fp, Label::Unauthorized, Label::Authentic),
        (cm.fn_, Label::Authentic, Label::Unauthorized),
    ];
    for (n, actual, predicted) in groups {
        pairs.extend(std::iter::repeat_n((actual, predicted), n as usize));
    }
    let count = |f: &dyn Fn(&(Label, Label)) -> bool| pairs.iter().filter(|p| f(p)).count() as f64;
    let correct = count(&|(a, p)| a == p);
    let actual_pos = count(&|(a, _)| *a == Label::Authentic);
    let actual_neg = count(&|(a, _)| *a == Label::Unauthorized);
    let pred_pos = count(&|(_, p)| *p == Label::Authentic);
    let tp = count(&|(a, p)| *a == Label::Authentic && *p == Label::Authentic);
    let tn = count(&|(a, p)| *a == Label::Unauthorized && *p == Label::Unauthorized);
    let wrong = pairs.len() as f64 - correct;
    let div = |a: f64, b: f64| (b > 0.0).then(|| a / b);
    let f1 = if actual_pos > 0.0 && pred_pos > 0.0 {
        Some(2.0 * tp / (2.0 * tp + wrong))
    } else {
        None
    };
    OracleMetrics([
        div(correct, pairs.len() as f64),
        div(tp, actual_pos),
        div(tn, actual_neg),
        div(tp, pred_pos),
        f1,
    ])
}

fn metric_oracle() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    let mut checked = 0;
    while checked < 20 {
        let cm = ConfusionMatrix {
            tp: rng.random_range(0..=1000),
            tn: rng.random_range(0..=1000),
            fp: rng.random_range(0..=1000),
            fn_: rng.random_range(0..=1000),
        };
        if cm.total() == 0 {
            continue;
        }
        checked += 1;
        let got = compute_metrics(&cm).expect("non-empty matrix");
        let want = oracle_metrics(&cm);
        for ((_, g), w) in got.named().iter().zip(want.0) {
            match (g, w) {
                (Some(g), Some(w)) => worst = worst.max((g - w).abs()),
                (None, None) => {}
                _ => mismatches += 1,
            }
        }
    }
    let elapsed = started.elapsed();
    check(
        worst <= 1e-9 && mismatches == 0 && within(elapsed, 1.0),
        format!("20 matrices, max |diff| {worst:.1e}, definedness mismatches {mismatches}, {:.3}s", elapsed.as_secs_f64()),
    )
}

// ---- 2: simulated accuracy band ----------------------------------------------

fn band_failures(name: &str, m: &MetricsReport) -> Vec<String> {
    let mut bad = Vec::new();
    for (metric, value) in m.named() {
        let floor = if metric == "accuracy" { 0.85 } else { 0.80 };
        match value {
            Some(v) if v >= floor => {}
            other => bad.push(format!("{name} {metric}={other:?}")),
        }
    }
    bad
}

fn simulated_band() -> Verdict {
    let env = EnvironmentConfig::default();
    let loss = PathLossConfig::default();
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    let mut slowest = 0.0f64;
    for seed in 0..5u64 {
        let started = Instant::now();
        let data = generate_dataset_rows(&env, &loss, PAPER_ROWS, LOCATIONS, seed).expect("simulate");
        let counts = data.label_counts();
        let rows_ok = (data.len() as f64 - PAPER_ROWS as f64).abs() <= 0.1 * PAPER_ROWS as f64;
        if !rows_ok || !data.is_balanced() {
            failures.push(format!("seed {seed} shape {}/{}", counts.authentic, counts.unauthorized));
        }
        let mut accs = Vec::new();
        for kind in [ModelKind::DecisionTree, ModelKind::RandomForest] {
            let (doc, _) = train_model(&data, &TrainConfig::new(kind, seed)).expect("train");
            let report = evaluate_document(&doc, &data, doc.split).expect("evaluate");
            failures.extend(band_failures(&format!("seed {seed} {kind}"), &report.metrics));
            accs.push(report.metrics.accuracy.unwrap_or(f64::NAN));
        }
        let secs = started.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        lines.push(format!(
            "s{seed}: {} rows {}/{} dt {:.3} rf {:.3}",
            data.len(),
            counts.authentic,
            counts.unauthorized,
            accs[0],
            accs[1]
        ));
    }
    if slowest >= 60.0 {
        failures.push(format!("slowest seed {slowest:.1}s"));
    }
    let detail = format!("{}; slowest seed {slowest:.2}s", lines.join("; "));
    if failures.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; failing: {}", failures.join(", ")))
    }
}

// ---- 3: real dataset ---------------------------------------------------------

fn real_dataset_path() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("PROXAUTH_REAL_DATASET") {
        return Some(PathBuf::from(p));
    }
    let default = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/real_dataset.csv");
    default.exists().then_some(default)
}

fn real_dataset() -> Verdict {
    let Some(path) = real_dataset_path() else {
        return Verdict::Skip("no real dataset (set PROXAUTH_REAL_DATASET or add data/real_dataset.csv)".into());
    };
    let file = match std::fs::File::open(&path) {
        Ok(f) => f,
        Err(e) => return Verdict::Fail(format!("{}: {e}", path.display())),
    };
    let data = match parse_dataset_csv(std::io::BufReader::new(file)) {
        Ok(d) => d,
        Err(e) => return Verdict::Fail(format!("{}: {e}", path.display())),
    };
    let counts = data.label_counts();
    let shape_ok =
        data.len() == PAPER_ROWS && counts.authentic == PAPER_AUTHENTIC && counts.unauthorized == PAPER_UNAUTHORIZED;
    let accuracy = train_model(&data, &TrainConfig::new(ModelKind::RandomForest, 0))
        .and_then(|(doc, _)| evaluate_document(&doc, &data, doc.split))
        .ok()
        .and_then(|r| r.metrics.accuracy);
    let acc_ok = accuracy.is_some_and(|a| (a - PAPER_RF_ACCURACY).abs() <= 0.05);
    check(
        shape_ok && acc_ok,
        format!(
            "{} rows {}/{} (want {PAPER_ROWS} {PAPER_AUTHENTIC}/{PAPER_UNAUTHORIZED}), rf accuracy {accuracy:?} (want {PAPER_RF_ACCURACY} +/- 0.05)",
            data.len(),
            counts.authentic,
            counts.unauthorized
        ),
    )
}

// ---- 4: classifier properties -----------------------------------------------

fn random_consistent(rng: &mut ChaCha8Rng) -> Vec<Example> {
    let n = rng.random_range(2..=200);
    let mut labels: HashMap<[i64; 4], Label> = HashMap::new();
    (0..n)
        .map(|_| {
            let key = [
                rng.random_range(0..2),
                rng.random_range(0..6),
                rng.random_range(0..3),
                rng.random_range(-90..=-30),
            ];
            let label = *labels
                .entry(key)
                .or_insert_with(|| if rng.random_bool(0.5) { Label::Authentic } else { Label::Unauthorized });
            let x = FeatureVector([key[0] as f64, key[1] as f64, key[2] as f64 / 2.0, key[3] as f64]);
            Example::new(x, label)
        })
        .collect()
}

fn counts_of(rows: &[Example]) -> ClassCounts {
    let mut c = ClassCounts::default();
    for r in rows {
        c.add(r.label);
    }
    c
}

/// Walks the tree with the training rows; returns (monotone violations, replay mismatches).
fn audit_tree(tree: &DecisionTree, rows: &[Example]) -> (usize, usize) {
    let all_features = [0, 1, 2, 3];
    let mut violations = 0;
    let mut mismatches = 0;
    let mut stack = vec![(0usize, rows.to_vec())];
    while let Some((idx, here)) = stack.pop() {
        if let Node::Split { feature, threshold, left, right } = tree.nodes()[idx] {
            let (l, r): (Vec<Example>, Vec<Example>) =
                here.iter().partition(|e| e.features.get(feature) <= threshold);
            let parent = gini_impurity(counts_of(&here)).unwrap();
            let n = here.len() as f64;
            let children = l.len() as f64 / n * gini_impurity(counts_of(&l)).unwrap_or(0.0)
                + r.len() as f64 / n * gini_impurity(counts_of(&r)).unwrap_or(0.0);
            if children > parent + 1e-12 || l.is_empty() || r.is_empty() {
                violations += 1;
            }
            match best_split(&here, &all_features) {
                Some(c) if c.feature_index == feature && c.threshold == threshold => {}
                _ => mismatches += 1,
            }
            stack.push((left, l));
            stack.push((right, r));
        }
    }
    (violations, mismatches)
}

fn classifier_properties() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let params = TreeParams::unbounded();
    let degenerate = ForestParams {
        n_trees: 1,
        bootstrap: false,
        features_per_split: 4,
        tree_params: params,
        seed: 99,
    };
    let (mut imperfect, mut violations, mut mismatches, mut disagreements, mut probes) = (0, 0, 0, 0, 0);
    for _ in 0..100 {
        let rows = random_consistent(&mut rng);
        let tree = DecisionTree::fit(&rows, &params).expect("fit tree");
        if rows.iter().any(|e| tree.predict(&e.features) != e.label) {
            imperfect += 1;
        }
        let (v, m) = audit_tree(&tree, &rows);
        violations += v;
        mismatches += m;
        let forest = RandomForest::fit(&rows, &degenerate).expect("fit forest");
        for _ in 0..10 {
            let x = FeatureVector([
                rng.random_range(0..2) as f64,
                rng.random_range(-1.0..7.0),
                rng.random_range(0.0..1.0),
                rng.random_range(-100.0..-20.0),
            ]);
            probes += 1;
            if forest.predict(&x) != tree.predict(&x) {
                disagreements += 1;
            }
        }
    }
    let data = generate_dataset_rows(&EnvironmentConfig::default(), &PathLossConfig::default(), PAPER_ROWS, LOCATIONS, 8)
        .expect("simulate");
    let identical = [ModelKind::DecisionTree, ModelKind::RandomForest].iter().all(|&kind| {
        let a = train_model(&data, &TrainConfig::new(kind, 21)).unwrap().0.to_json();
        let b = train_model(&data, &TrainConfig::new(kind, 21)).unwrap().0.to_json();
        a == b
    });
    let elapsed = started.elapsed();
    check(
        imperfect == 0 && violations == 0 && mismatches == 0 && disagreements == 0 && identical && within(elapsed, 30.0),
        format!(
            "100 datasets: imperfect {imperfect}, impurity violations {violations}, replay mismatches {mismatches}; \
             degenerate forest disagreements {disagreements}/{probes}; byte-identical models {identical}; {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---- 5: simulator physics ----------------------------------------------------

fn simulator_physics() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noisy = PathLossConfig::default();
    let quiet = PathLossConfig {
        noise_sigma_dbm: 0.0,
        ..noisy
    };
    let mut non_monotone = 0;
    for _ in 0..1000 {
        let a = rng.random_range(0.05..200.0);
        let b = rng.random_range(0.05..200.0);
        let (near, far) = if a <= b { (a, b) } else { (b, a) };
        let rn = rssi_at_distance(&quiet, near, &mut rng).unwrap();
        let rf = rssi_at_distance(&quiet, far, &mut rng).unwrap();
        if rn < rf {
            non_monotone += 1;
        }
    }
    let at_d0 = rssi_at_distance(&quiet, quiet.d0_m, &mut rng).unwrap();
    let d0_ok = f64::from(at_d0) == quiet.p0_dbm;
    let distance = 5.0;
    let draws: Vec<f64> = (0..10_000)
        .map(|_| f64::from(rssi_at_distance(&noisy, distance, &mut rng).unwrap()))
        .collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
    let std = var.sqrt();
    let expected = noisy.mean_rssi(distance);
    let stats_ok = (mean - expected).abs() <= 0.2 && (1.6..=2.4).contains(&std);
    let elapsed = started.elapsed();
    check(
        non_monotone == 0 && d0_ok && stats_ok && within(elapsed, 5.0),
        format!(
            "monotonicity violations {non_monotone}/1000; rssi(d0) {at_d0} vs p0 {}; 10k draws at {distance} m: mean {mean:.3} (expected {expected:.3}), std {std:.3}; {:.3}s",
            quiet.p0_dbm,
            elapsed.as_secs_f64()
        ),
    )
}

// ---- 6: end-to-end protocol --------------------------------------------------

fn with_timestamp(snap: &ScanSnapshot, ts: i64) -> ScanSnapshot {
    ScanSnapshot::new(
        snap.device_id(),
        snap.role(),
        ts,
        snap.location_tag().map(str::to_string),
        snap.observations().to_vec(),
    )
    .unwrap()
}

async fn end_to_end() -> Verdict {
    let started = Instant::now();
    let seed = 11;
    let env = EnvironmentConfig::default();
    let loss = PathLossConfig::default();
    let data = generate_dataset_rows(&env, &loss, PAPER_ROWS, LOCATIONS, seed).expect("simulate");
    let (doc, _) = train_model(&data, &TrainConfig::new(ModelKind::RandomForest, seed)).expect("train");
    let world = World::generate(&env, LOCATIONS, seed).expect("world");
    let engine = build_engine(doc, PolicyConfig::default(), None, Arc::new(SystemClock)).expect("engine");
    let server = spawn(engine, ModelKind::RandomForest, "127.0.0.1:0".parse().unwrap()).await.expect("spawn");
    let client = ProxAuthClient::new(server.base_url());
    let (user, secret) = ("alice", "alice's long secret");
    ensure_enrolled(&client, user, secret).await.expect("enroll");

    let mut near_grants = 0;
    let mut far_denies = 0;
    let mut bad_grants = 0;
    let mut errors = 0;
    for (scenario, seeds) in [(Scenario::Authentic, 0..100u64), (Scenario::Unauthorized, 1000..1100u64)] {
        for s in seeds {
            let spec = AttemptSpec {
                username: user.into(),
                secret: secret.into(),
                scenario,
                seed: s,
            };
            match run_attempt(&client, &world, &loss, &spec).await {
                Ok(r) => {
                    if r.outcome == Outcome::Grant && r.reason != Reason::ClassifierAuthentic {
                        bad_grants += 1;
                    }
                    match (scenario, r.outcome) {
                        (Scenario::Authentic, Outcome::Grant) => near_grants += 1,
                        (Scenario::Unauthorized, Outcome::Deny) => far_denies += 1,
                        _ => {}
                    }
                }
                Err(_) => errors += 1,
            }
        }
    }

    let ids: DeviceIds = device_ids(user);
    let window = PolicyConfig::default().pairing_window_ms;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut stale_ok, mut overlap_ok, mut injections) = (0, 0, 0);
    for k in 0..20i64 {
        let loc = rng.random_range(0..LOCATIONS);
        let now = SystemClock.now_ms();
        let pair = generate_session(&world, loc, &loss, Scenario::Authentic, &ids, now, &mut rng).unwrap();
        let other = generate_session(&world, (loc + 1) % LOCATIONS, &loss, Scenario::Authentic, &ids, now, &mut rng)
            .unwrap();
        let injected = [
            (with_timestamp(&pair.login, now + window + 1 + k * 997), Reason::StaleScans),
            (with_timestamp(&pair.login, now - window - 1 - k), Reason::StaleScans),
            (other.login.clone(), Reason::NoOverlap),
            (ScanSnapshot::new(&ids.login, DeviceRole::Login, now, None, vec![]).unwrap(), Reason::NoOverlap),
        ];
        for (login, want) in injected {
            injections += 1;
            let begun = client.begin(user, secret).await.expect("begin");
            let id = begun.session_id.unwrap();
            client.submit_scan(&id, &ids.mobile, pair.mobile.clone()).await.expect("mobile");
            let resp = client.submit_scan(&id, &ids.login, login).await.expect("login");
            let hit = resp.outcome == Some(Outcome::Deny) && resp.reason == Some(want);
            match (want, hit) {
                (Reason::StaleScans, true) => stale_ok += 1,
                (Reason::NoOverlap, true) => overlap_ok += 1,
                _ => {}
            }
        }
    }
    server.shutdown();
    let elapsed = started.elapsed();
    check(
        near_grants >= 90
            && far_denies >= 90
            && bad_grants == 0
            && errors == 0
            && stale_ok + overlap_ok == injections
            && within(elapsed, 60.0),
        format!(
            "near grants {near_grants}/100, far denies {far_denies}/100, grants without ClassifierAuthentic {bad_grants}, \
             transport errors {errors}; injections: stale {stale_ok}/40, no-overlap {overlap_ok}/40; {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---- 7: fail-closed state machine --------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
enum LoginKind {
    Fresh,
    Stale,
    Disjoint,
}

#[derive(Clone, Copy, Debug)]
enum Event {
    Mobile,
    Login(LoginKind),
    Foreign,
    Timeout,
    Status,
}

const EVENTS: [Event; 7] = [
    Event::Mobile,
    Event::Login(LoginKind::Fresh),
    Event::Login(LoginKind::Stale),
    Event::Login(LoginKind::Disjoint),
    Event::Foreign,
    Event::Timeout,
    Event::Status,
];

struct Always(Label);

impl Classifier for Always {
    fn predict(&self, _: &FeatureVector) -> Label {
        self.0
    }
}

/// Reference model of one session.
#[derive(Default)]
struct Expected {
    decided: Option<(Outcome, Reason)>,
    mobile: bool,
    login: Option<LoginKind>,
    timed_out: bool,
}

impl Expected {
    fn touch(&mut self) {
        if self.decided.is_none() && self.timed_out {
            self.decided = Some((Outcome::Deny, Reason::MissingScan));
        }
    }

    fn settle(&mut self, model: Label) {
        if let (true, Some(kind)) = (self.mobile, self.login) {
            self.decided = Some(match (kind, model) {
                (LoginKind::Stale, _) => (Outcome::Deny, Reason::StaleScans),
                (LoginKind::Disjoint, _) => (Outcome::Deny, Reason::NoOverlap),
                (LoginKind::Fresh, Label::Authentic) => (Outcome::Grant, Reason::ClassifierAuthentic),
                (LoginKind::Fresh, Label::Unauthorized) => (Outcome::Deny, Reason::ClassifierUnauthorized),
            });
        }
    }

    /// Applies one event; returns the error code the engine should answer with.
    fn apply(&mut self, event: Event, model: Label) -> Option<&'static str> {
        if let Event::Timeout = event {
            self.timed_out = true;
            return None;
        }
        self.touch();
        if let Event::Status = event {
            return None;
        }
        if self.decided.is_some() {
            return Some("SessionDecided");
        }
        match event {
            Event::Foreign => Some("ForeignDevice"),
            Event::Mobile if self.mobile => Some("DuplicateRoleSubmission"),
            Event::Login(_) if self.login.is_some() => Some("DuplicateRoleSubmission"),
            Event::Mobile => {
                self.mobile = true;
                self.settle(model);
                None
            }
            Event::Login(kind) => {
                self.login = Some(kind);
                self.settle(model);
                None
            }
            Event::Timeout | Event::Status => unreachable!(),
        }
    }
}

fn scan(device: &str, role: DeviceRole, ts: i64, aps: &[u8]) -> ScanSnapshot {
    let obs = aps
        .iter()
        .map(|&b| BeaconObservation::new(format!("ap{b}"), Some(Bssid([2, 0, 0, 0, 0, b])), 2_437_000_000, -55).unwrap())
        .collect();
    ScanSnapshot::new(device, role, ts, None, obs).unwrap()
}

fn sequences(max_len: usize) -> Vec<Vec<Event>> {
    let mut all = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for e in EVENTS {
                let mut s: Vec<Event> = seq.clone();
                s.push(e);
                next.push(s);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

fn fail_closed() -> Verdict {
    let started = Instant::now();
    let policy = PolicyConfig::default();
    let vocab: Vec<_> = (0..4).map(|b| BeaconObservation::new(format!("ap{b}"), None, 2_437_000_000, -55).unwrap()).collect();
    let encoder = FeatureEncoder::fit_observations(&vocab).unwrap();
    let seqs = sequences(4);
    let (mut sessions, mut steps, mut failures) = (0usize, 0usize, Vec::new());
    let mut reasons_seen = std::collections::BTreeSet::new();

    for model in [Label::Authentic, Label::Unauthorized] {
        let clock = Arc::new(ManualClock::new(1_000_000_000));
        let engine = AuthEngine::new(
            Arc::new(Always(model)),
            encoder.clone(),
            policy,
            UserStore::in_memory(),
            AuditLog::in_memory(),
            clock.clone(),
        )
        .unwrap()
        .with_credential_iterations(1);
        engine.enroll("u", "correct secret", "u-mobile", "u-login").unwrap();

        for right_secret in [true, false] {
            for seq in &seqs {
                sessions += 1;
                let t0 = clock.now_ms();
                let begun = engine.begin("u", if right_secret { "correct secret" } else { "wrong secret" }).unwrap();
                let id = begun.session_id.clone();
                let mut expected = Expected::default();
                if !right_secret {
                    expected.decided = Some((Outcome::Deny, Reason::FirstFactorFailed));
                }
                let mut first_decision = begun.decision;
                for &event in seq {
                    steps += 1;
                    let want_err = expected.apply(event, model);
                    let got = match event {
                        Event::Timeout => {
                            clock.advance(policy.scan_timeout_ms + 1);
                            Ok(())
                        }
                        Event::Status => engine.status(&id).map(|_| ()),
                        Event::Mobile => engine.submit_scan(&id, "u-mobile", scan("u-mobile", DeviceRole::Mobile, t0, &[0, 1])).map(|_| ()),
                        Event::Login(kind) => {
                            let (ts, aps): (i64, &[u8]) = match kind {
                                LoginKind::Fresh => (t0 + 100, &[0, 1]),
                                LoginKind::Stale => (t0 + policy.pairing_window_ms + 1, &[0, 1]),
                                LoginKind::Disjoint => (t0 + 100, &[2, 3]),
                            };
                            engine.submit_scan(&id, "u-login", scan("u-login", DeviceRole::Login, ts, aps)).map(|_| ())
                        }
                        Event::Foreign => engine.submit_scan(&id, "intruder", scan("intruder", DeviceRole::Mobile, t0, &[0])).map(|_| ()),
                    };
                    let got_err = got.err().map(|e: AuthError| e.code());
                    if got_err != want_err {
                        failures.push(format!("{seq:?} step {event:?}: got {got_err:?}, want {want_err:?}"));
                        break;
                    }
                    let observed = engine.status(&id).unwrap();
                    expected.touch();
                    let decision = observed.decision.map(|d| (d.outcome, d.reason));
                    if decision != expected.decided {
                        failures.push(format!("{seq:?} after {event:?}: got {decision:?}, want {:?}", expected.decided));
                        break;
                    }
                    if let Some(d) = observed.decision {
                        reasons_seen.insert(format!("{:?}", d.reason));
                        if d.outcome == Outcome::Grant && d.reason != Reason::ClassifierAuthentic {
                            failures.push(format!("{seq:?}: grant via {:?}", d.reason));
                        }
                        if d.outcome == Outcome::Deny && d.reason == Reason::ClassifierAuthentic {
                            failures.push(format!("{seq:?}: deny with ClassifierAuthentic"));
                        }
                        match first_decision {
                            Some(prev) if prev != d => failures.push(format!("{seq:?}: decision changed {prev:?} -> {d:?}")),
                            None => first_decision = Some(d),
                            _ => {}
                        }
                    }
                }
                clock.advance(1);
            }
        }
    }
    let elapsed = started.elapsed();
    let all_reasons = Reason::ALL.iter().all(|r| reasons_seen.contains(&format!("{r:?}")));
    failures.truncate(3);
    check(
        failures.is_empty() && all_reasons,
        format!(
            "{sessions} sessions, {steps} transitions, reasons reached {}/6, violations: {}; {:.2}s",
            reasons_seen.len(),
            if failures.is_empty() { "none".to_string() } else { failures.join(" | ") },
            elapsed.as_secs_f64()
        ),
    )
}

type Criterion = (&'static str, Box<dyn FnOnce() -> Verdict>);

fn main() -> ExitCode {
    let runtime = tokio::runtime::Runtime::new().expect("runtime");
    let criteria: Vec<Criterion> = vec![
        ("metric oracle equivalence", Box::new(metric_oracle)),
        ("simulated accuracy band", Box::new(simulated_band)),
        ("real dataset check", Box::new(real_dataset)),
        ("classifier properties", Box::new(classifier_properties)),
        ("simulator physics", Box::new(simulator_physics)),
        ("end-to-end protocol soundness", Box::new(move || runtime.block_on(end_to_end()))),
        ("fail-closed state machine", Box::new(fail_closed)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let (tag, detail) = match run() {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Skip(d) => ("SKIP", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} {tag} {name}: {detail}", i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}

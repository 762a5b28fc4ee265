use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{rssi_at_distance, EnvironmentConfig, PathLossConfig, Point, SimError, SiteLayout, World};
use crate::beacon::{
    BeaconObservation, Dataset, DeviceRole, Label, LabelCounts, LabeledSample, Provenance,
    ScanSnapshot,
};

/// 7 ft in meters.
pub const NEAR_LIMIT_M: f64 = 2.1336;
/// 7.5 ft in meters.
pub const FAR_LIMIT_M: f64 = 2.286;

const MAX_ANCHOR_ATTEMPTS: usize = 100;
/// Devices never get closer than this to an access point.
const MIN_AP_DISTANCE_M: f64 = 0.1;
const BASE_TIMESTAMP_MS: i64 = 1_700_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Devices together.
    Authentic,
    /// Devices apart.
    Unauthorized,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::Authentic, Scenario::Unauthorized];

    pub fn label(self) -> Label {
        match self {
            Scenario::Authentic => Label::Authentic,
            Scenario::Unauthorized => Label::Unauthorized,
        }
    }
}

/// Inter-device distance ranges. Authentic pairs fall in `(near_min, near_max]`,
/// unauthorized ones in `[far_min, far_max]`; nothing is generated in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioBounds {
    pub near_min_m: f64,
    pub near_max_m: f64,
    pub far_min_m: f64,
    pub far_max_m: f64,
}

impl Default for ScenarioBounds {
    fn default() -> Self {
        Self {
            near_min_m: 0.1,
            near_max_m: NEAR_LIMIT_M,
            far_min_m: FAR_LIMIT_M,
            far_max_m: 10.0,
        }
    }
}

impl ScenarioBounds {
    pub fn validate(&self) -> Result<(), SimError> {
        let ordered = 0.0 <= self.near_min_m
            && self.near_min_m < self.near_max_m
            && self.near_max_m <= self.far_min_m
            && self.far_min_m <= self.far_max_m
            && self.far_max_m.is_finite();
        if ordered {
            Ok(())
        } else {
            Err(SimError::Configuration("separation bounds must be ordered near < far".into()))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, scenario: Scenario, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match scenario {
            // 1 - u lies in (0, 1], keeping the lower bound open
            Scenario::Authentic => self.near_min_m + (self.near_max_m - self.near_min_m) * (1.0 - u),
            Scenario::Unauthorized => self.far_min_m + (self.far_max_m - self.far_min_m) * u,
        }
    }

    pub fn contains(&self, scenario: Scenario, separation_m: f64) -> bool {
        match scenario {
            Scenario::Authentic => separation_m > self.near_min_m && separation_m <= self.near_max_m,
            Scenario::Unauthorized => separation_m >= self.far_min_m && separation_m <= self.far_max_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceIds {
    pub mobile: String,
    pub login: String,
}

impl Default for DeviceIds {
    fn default() -> Self {
        Self {
            mobile: "sim-mobile".into(),
            login: "sim-login".into(),
        }
    }
}

/// A device pair's simultaneous scans.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub mobile: ScanSnapshot,
    pub login: ScanSnapshot,
    pub label: Label,
    pub separation_m: f64,
    pub mobile_position: Point,
    pub login_position: Point,
}

fn scan<R: Rng + ?Sized>(
    layout: &SiteLayout,
    env: &EnvironmentConfig,
    loss: &PathLossConfig,
    at: Point,
    rng: &mut R,
) -> Result<Vec<BeaconObservation>, SimError> {
    let mut seen = Vec::new();
    for ap in &layout.access_points {
        let d = ap.position.distance(&at);
        if d > env.detection_radius_m {
            continue;
        }
        let rssi = rssi_at_distance(loss, d.max(MIN_AP_DISTANCE_M), rng)?;
        let obs = BeaconObservation::new(ap.ssid.clone(), Some(ap.bssid), ap.frequency_hz, rssi)
            .map_err(|e| SimError::Configuration(e.to_string()))?;
        seen.push(obs);
    }
    Ok(seen)
}

/// One placement attempt; `NoVisibleAp` when either device hears nothing.
///
/// The anchor falls uniformly in the site-jitter disc around the scenario's
/// collection site; the pair straddles it at a uniform bearing.
#[allow(clippy::too_many_arguments)]
pub fn try_generate_session<R: Rng + ?Sized>(
    world: &World,
    location: usize,
    loss: &PathLossConfig,
    scenario: Scenario,
    ids: &DeviceIds,
    timestamp_ms: i64,
    rng: &mut R,
) -> Result<Session, SimError> {
    let env = &world.env;
    let layout = world
        .locations
        .get(location)
        .ok_or_else(|| SimError::Configuration(format!("no location {location}")))?;
    let site = match scenario {
        Scenario::Authentic => layout.authentic_site,
        Scenario::Unauthorized => layout.unauthorized_site,
    };
    let tau = std::f64::consts::TAU;
    let anchor = site.offset(
        env.site_jitter_m * rng.random::<f64>().sqrt(),
        rng.random::<f64>() * tau,
    );
    let separation_m = env.separation.sample(scenario, rng);
    let bearing = rng.random::<f64>() * tau;
    let mobile_position = anchor.offset(separation_m / 2.0, bearing + std::f64::consts::PI);
    let login_position = anchor.offset(separation_m / 2.0, bearing);

    let mobile_obs = scan(layout, env, loss, mobile_position, rng)?;
    let login_obs = scan(layout, env, loss, login_position, rng)?;
    if mobile_obs.is_empty() || login_obs.is_empty() {
        return Err(SimError::NoVisibleAp);
    }
    let login_ts = timestamp_ms + rng.random_range(0..1000);
    let tag = Some(layout.tag.clone());
    let snapshot = |id: &str, role, ts, obs| {
        ScanSnapshot::new(id, role, ts, tag.clone(), obs).map_err(|e| SimError::Configuration(e.to_string()))
    };
    Ok(Session {
        mobile: snapshot(&ids.mobile, DeviceRole::Mobile, timestamp_ms, mobile_obs)?,
        login: snapshot(&ids.login, DeviceRole::Login, login_ts, login_obs)?,
        label: scenario.label(),
        separation_m,
        mobile_position,
        login_position,
    })
}

/// Retries fresh anchors until both devices hear something; gives up with a
/// configuration error after 100 attempts.
pub fn generate_session<R: Rng + ?Sized>(
    world: &World,
    location: usize,
    loss: &PathLossConfig,
    scenario: Scenario,
    ids: &DeviceIds,
    timestamp_ms: i64,
    rng: &mut R,
) -> Result<Session, SimError> {
    for _ in 0..MAX_ANCHOR_ATTEMPTS {
        match try_generate_session(world, location, loss, scenario, ids, timestamp_ms, rng) {
            Err(SimError::NoVisibleAp) => continue,
            other => return other,
        }
    }
    Err(SimError::Configuration(format!(
        "no access point visible after {MAX_ANCHOR_ATTEMPTS} placements at location {location}"
    )))
}

fn flatten(session: &Session, rows: &mut Vec<LabeledSample>) {
    for snap in [&session.mobile, &session.login] {
        for obs in snap.observations() {
            // the dataset format has no BSSID column
            let observation =
                BeaconObservation::new(obs.ssid(), None, obs.frequency_hz(), obs.rssi_dbm())
                    .expect("observation already validated");
            rows.push(LabeledSample {
                role: snap.role(),
                observation,
                location_tag: snap.location_tag().unwrap_or_default().to_string(),
                label: session.label,
            });
        }
    }
}

struct Generator<'a> {
    world: World,
    loss: &'a PathLossConfig,
    rng: ChaCha8Rng,
    ids: DeviceIds,
    rows: Vec<LabeledSample>,
    counts: LabelCounts,
    sessions: [usize; 2],
}

impl<'a> Generator<'a> {
    fn new(env: &EnvironmentConfig, loss: &'a PathLossConfig, locations: usize, seed: u64) -> Result<Self, SimError> {
        loss.validate()?;
        let world = World::generate(env, locations, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Ok(Self {
            world,
            loss,
            rng,
            ids: DeviceIds::default(),
            rows: Vec::new(),
            counts: LabelCounts::default(),
            sessions: [0, 0],
        })
    }

    /// The next session of `scenario`, at that scenario's next location in rotation.
    fn session(&mut self, scenario: Scenario) -> Result<(), SimError> {
        let slot = scenario as usize;
        let i = self.sessions[slot];
        let location = i % self.world.locations.len();
        let ts = BASE_TIMESTAMP_MS + i as i64 * 60_000;
        let s = generate_session(&self.world, location, self.loss, scenario, &self.ids, ts, &mut self.rng)?;
        let before = self.rows.len();
        flatten(&s, &mut self.rows);
        for _ in before..self.rows.len() {
            self.counts.add(s.label);
        }
        self.sessions[slot] += 1;
        Ok(())
    }

    fn finish(self) -> Dataset {
        Dataset::new(self.rows, Provenance::Simulated)
    }
}

/// `n_sessions_per_class` sessions of each scenario, rotating over
/// `locations` synthetic locations, flattened to one row per device per heard AP.
pub fn generate_dataset(
    env: &EnvironmentConfig,
    loss: &PathLossConfig,
    n_sessions_per_class: usize,
    locations: usize,
    seed: u64,
) -> Result<Dataset, SimError> {
    if n_sessions_per_class == 0 {
        return Err(SimError::Configuration("n_sessions_per_class must be at least 1".into()));
    }
    let mut g = Generator::new(env, loss, locations, seed)?;
    for _ in 0..n_sessions_per_class {
        for scenario in Scenario::ALL {
            g.session(scenario)?;
        }
    }
    Ok(g.finish())
}

/// Adds sessions to whichever class has fewer rows until both classes hold
/// at least half of `rows_target`. Keeps the labels balanced even when the
/// two collection sites hear different numbers of access points.
pub fn generate_dataset_rows(
    env: &EnvironmentConfig,
    loss: &PathLossConfig,
    rows_target: usize,
    locations: usize,
    seed: u64,
) -> Result<Dataset, SimError> {
    if rows_target == 0 {
        return Err(SimError::Configuration("rows_target must be at least 1".into()));
    }
    let per_class = rows_target.div_ceil(2);
    let mut g = Generator::new(env, loss, locations, seed)?;
    while g.counts.authentic < per_class || g.counts.unauthorized < per_class {
        let scenario = if g.counts.authentic <= g.counts.unauthorized {
            Scenario::Authentic
        } else {
            Scenario::Unauthorized
        };
        g.session(scenario)?;
    }
    Ok(g.finish())
}

pub const MANIFEST_FORMAT: &str = "proxauth-simulation";

/// How a simulated dataset's size was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSize {
    SessionsPerClass(usize),
    RowsTarget(usize),
}

/// Sidecar written next to a simulated CSV: enough to regenerate it and the
/// world it was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationManifest {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub locations: usize,
    pub size: DatasetSize,
    pub rows: usize,
    pub label_counts: LabelCounts,
    pub env: EnvironmentConfig,
    pub loss: PathLossConfig,
}

impl SimulationManifest {
    pub fn new(
        env: &EnvironmentConfig,
        loss: &PathLossConfig,
        locations: usize,
        seed: u64,
        size: DatasetSize,
        dataset: &Dataset,
    ) -> Self {
        Self {
            format: MANIFEST_FORMAT.into(),
            version: 1,
            seed,
            locations,
            size,
            rows: dataset.len(),
            label_counts: dataset.label_counts(),
            env: env.clone(),
            loss: *loss,
        }
    }

    pub fn world(&self) -> Result<World, SimError> {
        World::generate(&self.env, self.locations, self.seed)
    }

    pub fn regenerate(&self) -> Result<Dataset, SimError> {
        match self.size {
            DatasetSize::SessionsPerClass(n) => generate_dataset(&self.env, &self.loss, n, self.locations, self.seed),
            DatasetSize::RowsTarget(n) => generate_dataset_rows(&self.env, &self.loss, n, self.locations, self.seed),
        }
    }
}

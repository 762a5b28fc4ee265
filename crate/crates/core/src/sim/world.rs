use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ScenarioBounds, SimError};
use crate::beacon::Bssid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn offset(&self, distance: f64, bearing: f64) -> Point {
        Point::new(self.x + distance * bearing.cos(), self.y + distance * bearing.sin())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvironmentConfig {
    pub n_aps: usize,
    /// Side of the square floor, meters.
    pub area_m: f64,
    /// `{location}` and `{index}` are substituted.
    pub ssid_pattern: String,
    /// Assigned round-robin to access points, Hz.
    pub frequency_set: Vec<u64>,
    pub detection_radius_m: f64,
    /// Minimum distance between a location's two collection sites.
    pub site_separation_m: f64,
    /// Radius of the disc around a site in which session anchors fall.
    pub site_jitter_m: f64,
    pub separation: ScenarioBounds,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            n_aps: 10,
            area_m: 30.0,
            ssid_pattern: "loc{location}-ap{index}".into(),
            frequency_set: vec![2_412_000_000, 2_437_000_000, 2_462_000_000, 5_180_000_000, 5_240_000_000],
            detection_radius_m: 15.0,
            site_separation_m: 15.0,
            site_jitter_m: 1.0,
            separation: ScenarioBounds::default(),
        }
    }
}

impl EnvironmentConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Configuration(m.to_string()));
        if self.n_aps == 0 {
            return bad("n_aps must be at least 1");
        }
        if !(self.area_m > 0.0) {
            return bad("area_m must be positive");
        }
        if self.frequency_set.is_empty() || self.frequency_set.contains(&0) {
            return bad("frequency_set must hold positive frequencies");
        }
        if !(self.detection_radius_m > 0.0) {
            return bad("detection_radius_m must be positive");
        }
        if !(self.site_separation_m >= 0.0) || !(self.site_jitter_m >= 0.0) {
            return bad("site distances must be non-negative");
        }
        if self.site_separation_m > self.area_m * std::f64::consts::SQRT_2 {
            return bad("site_separation_m does not fit in the area");
        }
        if self.ssid_pattern.is_empty() {
            return bad("ssid_pattern must not be empty");
        }
        self.separation.validate()
    }

    pub fn ssid(&self, location: usize, index: usize) -> String {
        self.ssid_pattern
            .replace("{location}", &location.to_string())
            .replace("{index}", &index.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessPoint {
    pub ssid: String,
    pub bssid: Bssid,
    pub frequency_hz: u64,
    pub position: Point,
}

/// One synthetic location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteLayout {
    pub tag: String,
    pub access_points: Vec<AccessPoint>,
    /// Where co-located pairs are scanned.
    pub authentic_site: Point,
    /// Where separated pairs are scanned.
    pub unauthorized_site: Point,
}

/// Every location's layout. A pure function of the config and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub env: EnvironmentConfig,
    pub locations: Vec<SiteLayout>,
}

fn random_bssid(rng: &mut impl Rng) -> Bssid {
    let mut octets: [u8; 6] = rng.random();
    // locally administered, unicast
    octets[0] = (octets[0] & 0xfc) | 0x02;
    Bssid(octets)
}

impl World {
    pub fn generate(env: &EnvironmentConfig, locations: usize, seed: u64) -> Result<Self, SimError> {
        env.validate()?;
        if locations == 0 {
            return Err(SimError::Configuration("locations must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        let side = env.area_m;
        let point = |rng: &mut ChaCha8Rng| Point::new(rng.random_range(0.0..side), rng.random_range(0.0..side));

        let mut layouts = Vec::with_capacity(locations);
        for location in 0..locations {
            let access_points = (0..env.n_aps)
                .map(|index| AccessPoint {
                    ssid: env.ssid(location, index),
                    bssid: random_bssid(&mut rng),
                    frequency_hz: env.frequency_set[index % env.frequency_set.len()],
                    position: point(&mut rng),
                })
                .collect();
            let authentic_site = point(&mut rng);
            let mut unauthorized_site = None;
            for _ in 0..10_000 {
                let candidate = point(&mut rng);
                if candidate.distance(&authentic_site) >= env.site_separation_m {
                    unauthorized_site = Some(candidate);
                    break;
                }
            }
            let unauthorized_site = unauthorized_site.ok_or_else(|| {
                SimError::Configuration("cannot place collection sites far enough apart".into())
            })?;
            layouts.push(SiteLayout {
                tag: format!("loc{location}"),
                access_points,
                authentic_site,
                unauthorized_site,
            });
        }
        Ok(Self {
            env: env.clone(),
            locations: layouts,
        })
    }
}

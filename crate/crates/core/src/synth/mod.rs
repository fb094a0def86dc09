//! Synthetic construction sites with known road graphs, and noisy trips
//! driven over them.

mod simulate;
mod site;

use serde::{Deserialize, Serialize};

pub use simulate::simulate_trips;
pub use site::{generate_site, SiteParams, SITE_SPACING};

use crate::error::{Error, Result};
use crate::eval::Labels;
use crate::geo::{GeoCoord, LocalCoord};
use crate::roads::RoadGraph;

/// Default site origin, used to turn the site frame into lat/lon.
pub const DEFAULT_ORIGIN: GeoCoord = GeoCoord { lat: 59.85, lon: 10.35 };

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeedModel {
    pub median_kmh: f64,
    /// Log-space standard deviation. 0.483 puts the mean near 9.4 km/h.
    pub sigma: f64,
    pub cap_kmh: f64,
    /// Lag-one correlation of log speed between fixes.
    pub persistence: f64,
}

impl Default for SpeedModel {
    fn default() -> Self {
        SpeedModel {
            median_kmh: 8.33,
            sigma: 0.483,
            cap_kmh: 25.93,
            persistence: 0.9,
        }
    }
}

/// A disc in which affected trips emit no fixes at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tunnel {
    pub center: LocalCoord,
    pub radius_m: f64,
    /// Share of trips that lose signal here.
    pub trip_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Standard deviation of the position error on each axis.
    pub jitter_sigma_m: f64,
    /// Lag-one correlation of the position error between fixes. Receiver
    /// error drifts rather than jumping independently at every fix.
    pub jitter_correlation: f64,
    pub dropout_prob: f64,
    pub tunnels: Vec<Tunnel>,
    /// Scatter of the fix that carries a load or drop-off event.
    pub endpoint_noise_m: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            jitter_sigma_m: 1.0,
            jitter_correlation: 0.9,
            dropout_prob: 0.0,
            tunnels: Vec::new(),
            endpoint_noise_m: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TripModel {
    pub n_trips: usize,
    pub speed: SpeedModel,
    pub cadence_median_s: f64,
    pub cadence_sigma: f64,
    /// Zero-speed fixes logged while loading or dumping.
    pub stationary_fixes: usize,
    /// Each edge length is multiplied by a factor in [1, 1 + spread] per leg
    /// before routing, so trips do not all take the same shortest path.
    pub route_spread: f64,
    /// Chance that a leg is forced through a randomly chosen road, so that
    /// roads off every shortest path still see traffic.
    pub detour_prob: f64,
    pub fleet_size: usize,
    pub start_time: f64,
    pub trip_interval_s: f64,
    pub noise: NoiseModel,
}

impl Default for TripModel {
    fn default() -> Self {
        TripModel {
            n_trips: 300,
            speed: SpeedModel::default(),
            cadence_median_s: 2.0,
            cadence_sigma: 0.3,
            stationary_fixes: 5,
            route_spread: 3.0,
            detour_prob: 0.3,
            fleet_size: 12,
            start_time: 1_700_000_000.0,
            trip_interval_s: 3600.0,
            noise: NoiseModel::default(),
        }
    }
}

impl TripModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synth: {m}")));
        let s = &self.speed;
        if !(s.median_kmh > 0.0 && s.cap_kmh >= s.median_kmh && s.sigma >= 0.0) {
            return bad("speed needs median > 0, cap >= median and sigma >= 0");
        }
        if !(0.0..1.0).contains(&s.persistence) {
            return bad("speed persistence must be in [0, 1)");
        }
        if !(self.cadence_median_s > 0.0 && self.cadence_sigma >= 0.0) {
            return bad("cadence needs a positive median and non-negative sigma");
        }
        if self.stationary_fixes == 0 || self.fleet_size == 0 {
            return bad("stationary_fixes and fleet_size must be positive");
        }
        if self.route_spread < 0.0 || self.trip_interval_s <= 0.0 {
            return bad("route_spread must be non-negative and trip_interval_s positive");
        }
        let n = &self.noise;
        if n.jitter_sigma_m < 0.0 || n.endpoint_noise_m < 0.0 {
            return bad("noise scales must be non-negative");
        }
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !(0.0..1.0).contains(&n.jitter_correlation) {
            return bad("jitter_correlation must be in [0, 1)");
        }
        if !prob(self.detour_prob) {
            return bad("detour_prob must be in [0, 1]");
        }
        if !prob(n.dropout_prob) || !n.tunnels.iter().all(|t| prob(t.trip_fraction) && t.radius_m > 0.0) {
            return bad("probabilities must be in [0, 1] and tunnel radii positive");
        }
        Ok(())
    }
}

/// A known road graph plus the model for trips driven over it.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteScenario {
    pub seed: u64,
    /// Geographic position of the site frame's (0, 0).
    pub origin: GeoCoord,
    pub ground_truth: RoadGraph,
    pub model: TripModel,
}

impl SiteScenario {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.ground_truth.check(SITE_SPACING, 1e-6)
    }
}

/// Intersection positions of a ground-truth graph, as lat/lon labels.
pub fn intersection_labels(graph: &RoadGraph, origin: GeoCoord) -> Labels {
    Labels::Geo(
        graph
            .intersections()
            .map(|n| n.geo.unwrap_or_else(|| crate::geo::to_geo(n.position, origin)))
            .collect(),
    )
}

#[cfg(test)]
mod tests;

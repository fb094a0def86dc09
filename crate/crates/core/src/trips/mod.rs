//! GPS trip records and the preprocessing that turns raw logs into evenly
//! spaced trajectories: projection, cleaning, gap splitting, interpolation.

mod clean;
mod interp;
mod io;

pub use clean::{clean_trip, split_trip, CleanOutcome, Rejection};
pub use interp::interpolate_trip;
pub use io::{parse_updates, write_csv, write_jsonl, InputFormat, MalformedRow, ParseReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{to_local, GeoCoord, LocalCoord};

/// One position fix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpsUpdate {
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: f64,
    pub geo: GeoCoord,
    /// Filled by [`project_trips`]; zero until then.
    pub local: LocalCoord,
    pub speed_kmh: f64,
    pub raw_heading_deg: Option<f64>,
}

impl GpsUpdate {
    pub fn new(timestamp: f64, geo: GeoCoord, speed_kmh: f64) -> Self {
        GpsUpdate {
            timestamp,
            geo,
            local: LocalCoord::default(),
            speed_kmh,
            raw_heading_deg: None,
        }
    }

    /// Zero latitude or longitude marks an uncalibrated receiver.
    pub fn has_valid_position(&self) -> bool {
        self.geo.lat != 0.0 && self.geo.lon != 0.0 && self.geo.is_in_range()
    }
}

/// A reported load or drop-off moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripEvent {
    pub timestamp: f64,
    pub geo: GeoCoord,
    pub local: LocalCoord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Load,
    Dropoff,
}

/// One transport cycle: from a loading to the next loading of the same truck.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trip {
    pub trip_id: String,
    pub machine_id: String,
    pub driver_id: String,
    pub task_id: String,
    pub excavator_id: Option<String>,
    /// Sorted by timestamp.
    pub updates: Vec<GpsUpdate>,
    /// Zero-speed fixes set aside by cleaning.
    pub stationary: Vec<GpsUpdate>,
    pub load_event: Option<TripEvent>,
    pub dropoff_event: Option<TripEvent>,
    /// Set once the trailing endpoint segment has been removed.
    pub endpoints_trimmed: bool,
}

impl Trip {
    pub fn new(trip_id: impl Into<String>) -> Self {
        Trip {
            trip_id: trip_id.into(),
            ..Default::default()
        }
    }

    pub fn local_points(&self) -> Vec<LocalCoord> {
        self.updates.iter().map(|u| u.local).collect()
    }

    pub fn sort_updates(&mut self) {
        self.updates.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    }
}

/// Preprocessing thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessParams {
    /// Driven distance trimmed from the end of each trip, metres.
    pub endpoint_trim_m: f64,
    pub spline_degree: usize,
    /// Resampling resolution, metres.
    pub interp_spacing_m: f64,
    pub min_points: usize,
    pub gap_time_s: f64,
    pub gap_distance_m: f64,
    /// Turn angle in radians above which trips are split; zero disables.
    pub gap_turn_rad: f64,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        PreprocessParams {
            endpoint_trim_m: 100.0,
            spline_degree: 1,
            interp_spacing_m: 5.0,
            min_points: 10,
            gap_time_s: 300.0,
            gap_distance_m: 2000.0,
            gap_turn_rad: 0.0,
        }
    }
}

impl PreprocessParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("endpoint_trim_m", self.endpoint_trim_m),
            ("interp_spacing_m", self.interp_spacing_m),
            ("gap_time_s", self.gap_time_s),
            ("gap_distance_m", self.gap_distance_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("preprocess.{name} must be positive, got {v}")));
            }
        }
        if self.spline_degree == 0 {
            return Err(Error::Config("preprocess.spline_degree must be at least 1".into()));
        }
        if self.min_points < 2 {
            return Err(Error::Config("preprocess.min_points must be at least 2".into()));
        }
        if !(self.gap_turn_rad >= 0.0) {
            return Err(Error::Config("preprocess.gap_turn_deg must be non-negative".into()));
        }
        Ok(())
    }
}

/// Component-wise minimum of all valid coordinates, including event positions.
pub fn dataset_origin(trips: &[Trip]) -> Option<GeoCoord> {
    let mut lat = f64::INFINITY;
    let mut lon = f64::INFINITY;
    let events = trips
        .iter()
        .flat_map(|t| t.load_event.iter().chain(t.dropoff_event.iter()))
        .map(|e| e.geo);
    let fixes = trips
        .iter()
        .flat_map(|t| t.updates.iter().chain(t.stationary.iter()))
        .filter(|u| u.has_valid_position())
        .map(|u| u.geo);
    for g in fixes.chain(events.filter(|g| g.lat != 0.0 && g.lon != 0.0)) {
        lat = lat.min(g.lat);
        lon = lon.min(g.lon);
    }
    (lat.is_finite() && lon.is_finite()).then(|| GeoCoord::new(lat, lon))
}

/// Fills the local coordinates of every fix and event.
pub fn project_trips(trips: &mut [Trip], origin: GeoCoord) {
    for trip in trips {
        for u in trip.updates.iter_mut().chain(trip.stationary.iter_mut()) {
            u.local = to_local(u.geo, origin);
        }
        for e in trip.load_event.iter_mut().chain(trip.dropoff_event.iter_mut()) {
            e.local = to_local(e.geo, origin);
        }
    }
}

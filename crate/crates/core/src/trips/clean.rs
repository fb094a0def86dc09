use std::f64::consts::PI;

use super::{GpsUpdate, PreprocessParams, Trip};
use crate::geo::{haversine_distance, heading_between};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    /// Fewer than the minimum number of updates survived.
    TooShort,
    /// No usable update at all.
    AllInvalid,
}

impl Rejection {
    pub fn code(self) -> &'static str {
        match self {
            Rejection::TooShort => "too_short",
            Rejection::AllInvalid => "all_invalid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CleanOutcome {
    Kept(Trip),
    Rejected { trip_id: String, reason: Rejection },
}

impl CleanOutcome {
    pub fn kept(self) -> Option<Trip> {
        match self {
            CleanOutcome::Kept(t) => Some(t),
            CleanOutcome::Rejected { .. } => None,
        }
    }
}

/// Drops unusable fixes, in this order: zero latitude/longitude, zero speed
/// (moved to [`Trip::stationary`]), consecutive duplicates, then the trailing
/// stretch whose driven distance to the final fix is within the endpoint trim.
pub fn clean_trip(mut trip: Trip, p: &PreprocessParams) -> CleanOutcome {
    let updates = std::mem::take(&mut trip.updates);
    let mut kept: Vec<GpsUpdate> = Vec::with_capacity(updates.len());
    for u in updates {
        if !u.has_valid_position() {
            continue;
        }
        if u.speed_kmh == 0.0 {
            trip.stationary.push(u);
            continue;
        }
        if kept.last().is_some_and(|prev| prev.geo == u.geo) {
            continue;
        }
        kept.push(u);
    }
    trip.stationary.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));

    if kept.is_empty() {
        return CleanOutcome::Rejected {
            trip_id: trip.trip_id,
            reason: Rejection::AllInvalid,
        };
    }

    if !trip.endpoints_trimmed {
        let mut from_end = 0.0;
        let mut cut = kept.len();
        for i in (0..kept.len()).rev() {
            if i + 1 < kept.len() {
                from_end += haversine_distance(kept[i].geo, kept[i + 1].geo);
            }
            // tolerance keeps a fix sitting exactly at the trim distance inside it
            if from_end > p.endpoint_trim_m + 1e-6 {
                break;
            }
            cut = i;
        }
        kept.truncate(cut);
        trip.endpoints_trimmed = true;
    }

    if kept.len() < p.min_points {
        return CleanOutcome::Rejected {
            trip_id: trip.trip_id,
            reason: Rejection::TooShort,
        };
    }
    trip.updates = kept;
    CleanOutcome::Kept(trip)
}

/// Absolute turn between the steps `a -> b` and `b -> c`, in `[0, π]`.
fn turn_angle(a: &GpsUpdate, b: &GpsUpdate, c: &GpsUpdate) -> Option<f64> {
    let h1 = heading_between(a.local, b.local).ok()?.radians();
    let h2 = heading_between(b.local, c.local).ok()?.radians();
    let d = (h2 - h1).rem_euclid(2.0 * PI);
    Some(d.min(2.0 * PI - d))
}

/// Cuts a cleaned trip wherever consecutive fixes are too far apart in time or
/// space, or (when enabled) where the path turns sharper than the threshold.
///
/// Requires projected local coordinates for the turn test.
pub fn split_trip(trip: Trip, p: &PreprocessParams) -> Vec<Trip> {
    let n = trip.updates.len();
    let mut cuts = Vec::new(); // cut before index i
    for i in 1..n {
        let (a, b) = (&trip.updates[i - 1], &trip.updates[i]);
        let dt = b.timestamp - a.timestamp;
        let dd = haversine_distance(a.geo, b.geo);
        if dt > p.gap_time_s || dd > p.gap_distance_m {
            cuts.push(i);
        } else if p.gap_turn_rad > 0.0 && i + 1 < n {
            if let Some(turn) = turn_angle(a, b, &trip.updates[i + 1]) {
                // cut after the vertex where the path turns
                if turn > p.gap_turn_rad {
                    cuts.push(i + 1);
                }
            }
        }
    }
    cuts.sort_unstable();
    cuts.dedup();
    if cuts.is_empty() {
        return if n >= p.min_points { vec![trip] } else { Vec::new() };
    }

    let mut bounds = vec![0];
    bounds.extend(cuts.iter().copied().filter(|&c| c > 0 && c < n));
    bounds.push(n);
    bounds.dedup();

    let Trip {
        trip_id,
        machine_id,
        driver_id,
        task_id,
        excavator_id,
        updates,
        stationary,
        load_event,
        dropoff_event,
        endpoints_trimmed,
    } = trip;
    let pieces: Vec<(f64, f64)> = bounds
        .windows(2)
        .map(|w| (updates[w[0]].timestamp, updates[w[1] - 1].timestamp))
        .collect();
    // index of the piece that owns a timestamp: the last one starting at or before it
    let owner = |t: f64| pieces.iter().rposition(|&(start, _)| start <= t).unwrap_or(0);

    let mut out = Vec::new();
    for (k, w) in bounds.windows(2).enumerate() {
        if w[1] - w[0] < p.min_points {
            continue;
        }
        let mut sub = Trip {
            trip_id: format!("{trip_id}-{k}"),
            machine_id: machine_id.clone(),
            driver_id: driver_id.clone(),
            task_id: task_id.clone(),
            excavator_id: excavator_id.clone(),
            updates: updates[w[0]..w[1]].to_vec(),
            stationary: stationary
                .iter()
                .filter(|u| owner(u.timestamp) == k)
                .cloned()
                .collect(),
            load_event: None,
            dropoff_event: None,
            endpoints_trimmed,
        };
        if k == 0 {
            sub.load_event = load_event;
        }
        if dropoff_event.is_some_and(|e| owner(e.timestamp) == k) {
            sub.dropoff_event = dropoff_event;
        }
        out.push(sub);
    }
    out
}

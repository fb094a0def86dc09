//! Load and drop-off locations from the events reported with each trip.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::{dbscan, merge_until_separated};
use crate::error::{Error, Result};
use crate::geo::LocalCoord;
use crate::trips::Trip;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Load,
    Dropoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionNode {
    pub kind: ActionKind,
    pub position: LocalCoord,
    /// Number of events that went into the node.
    pub support: usize,
    /// Event groups (excavator/task pairs or drop-off clusters) merged here.
    pub source_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionParams {
    /// Same-kind nodes closer than this are merged.
    pub merge_distance: f64,
    pub dropoff_eps: f64,
    pub dropoff_min_samples: usize,
    /// Share of values dropped from each tail, per axis, in the load mean.
    pub trim_fraction: f64,
}

impl Default for ActionParams {
    fn default() -> Self {
        ActionParams {
            merge_distance: 100.0,
            dropoff_eps: 15.0,
            dropoff_min_samples: 5,
            trim_fraction: 0.1,
        }
    }
}

impl ActionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.merge_distance > 0.0 && self.merge_distance.is_finite()) {
            return Err(Error::Config("action_nodes.merge_distance_m must be positive".into()));
        }
        if !(self.dropoff_eps > 0.0 && self.dropoff_eps.is_finite()) {
            return Err(Error::Config("action_nodes.dropoff_eps_m must be positive".into()));
        }
        if self.dropoff_min_samples < 1 {
            return Err(Error::Config("action_nodes.dropoff_min_samples must be at least 1".into()));
        }
        if !(0.0..0.5).contains(&self.trim_fraction) {
            return Err(Error::Config(format!(
                "action_nodes.trim_fraction must lie in [0, 0.5), got {}",
                self.trim_fraction
            )));
        }
        Ok(())
    }
}

/// Mean after discarding `floor(n * fraction)` values from each end.
pub fn trimmed_mean(values: &mut [f64], fraction: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let k = ((n as f64) * fraction).floor() as usize;
    let kept = if 2 * k < n { &values[k..n - k] } else { &values[..] };
    kept.iter().sum::<f64>() / kept.len() as f64
}

/// One node per (excavator, task) group at the trimmed mean of its load
/// events, then merged until same-kind nodes are `merge_distance` apart.
pub fn load_nodes(trips: &[Trip], p: &ActionParams) -> Vec<ActionNode> {
    let mut groups: BTreeMap<(Option<&str>, &str), Vec<LocalCoord>> = BTreeMap::new();
    let mut missing_excavator = 0usize;
    for t in trips {
        let Some(e) = t.load_event else { continue };
        if t.excavator_id.is_none() {
            missing_excavator += 1;
        }
        groups
            .entry((t.excavator_id.as_deref(), t.task_id.as_str()))
            .or_default()
            .push(e.local);
    }
    if missing_excavator > 0 {
        log::warn!("{missing_excavator} load events have no excavator id; grouped by task id only");
    }
    let nodes = groups
        .into_iter()
        .map(|((exc, task), pts)| {
            let mut xs: Vec<f64> = pts.iter().map(|q| q.x).collect();
            let mut ys: Vec<f64> = pts.iter().map(|q| q.y).collect();
            ActionNode {
                kind: ActionKind::Load,
                position: LocalCoord::new(trimmed_mean(&mut xs, p.trim_fraction), trimmed_mean(&mut ys, p.trim_fraction)),
                support: pts.len(),
                source_ids: vec![format!("{}/{}", exc.unwrap_or("-"), task)],
            }
        })
        .collect();
    merge_nodes(nodes, p.merge_distance)
}

/// Drop-off events clustered with DBSCAN; each cluster's mean is a node.
pub fn dropoff_nodes(trips: &[Trip], p: &ActionParams) -> Vec<ActionNode> {
    let mut events: Vec<LocalCoord> = trips.iter().filter_map(|t| t.dropoff_event).map(|e| e.local).collect();
    // canonical order so ids and summation do not depend on trip order
    events.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let labels = dbscan(&events, p.dropoff_eps, p.dropoff_min_samples);
    let mut clusters: BTreeMap<usize, Vec<LocalCoord>> = BTreeMap::new();
    for (q, l) in events.iter().zip(&labels) {
        if let Some(c) = l.cluster() {
            clusters.entry(c).or_default().push(*q);
        }
    }
    let noise = labels.iter().filter(|l| l.is_noise()).count();
    if noise > 0 {
        log::debug!("{noise} drop-off events left out as noise");
    }
    let nodes = clusters
        .into_iter()
        .map(|(c, pts)| {
            let n = pts.len() as f64;
            let (sx, sy) = pts.iter().fold((0.0, 0.0), |(sx, sy), q| (sx + q.x, sy + q.y));
            ActionNode {
                kind: ActionKind::Dropoff,
                position: LocalCoord::new(sx / n, sy / n),
                support: pts.len(),
                source_ids: vec![format!("cluster-{c}")],
            }
        })
        .collect();
    merge_nodes(nodes, p.merge_distance)
}

fn merge_nodes(nodes: Vec<ActionNode>, threshold: f64) -> Vec<ActionNode> {
    if nodes.len() < 2 {
        return nodes;
    }
    let positions: Vec<LocalCoord> = nodes.iter().map(|n| n.position).collect();
    let weights: Vec<f64> = nodes.iter().map(|n| n.support as f64).collect();
    merge_until_separated(&positions, &weights, threshold)
        .into_iter()
        .map(|m| ActionNode {
            kind: nodes[m.members[0]].kind,
            position: m.position,
            support: m.members.iter().map(|&i| nodes[i].support).sum(),
            source_ids: m.members.iter().flat_map(|&i| nodes[i].source_ids.clone()).collect(),
        })
        .collect()
}

/// Smallest distance between two nodes of the same kind, if any pair exists.
pub fn min_same_kind_distance(nodes: &[ActionNode]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            if a.kind == b.kind {
                let d = a.position.distance(&b.position);
                best = Some(best.map_or(d, |m: f64| m.min(d)));
            }
        }
    }
    best
}

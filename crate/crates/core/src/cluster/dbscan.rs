//! Density-based clustering (DBSCAN) over local coordinates.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::kdtree::KdTree;
use crate::geo::LocalCoord;

/// Cluster membership of one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClusterLabel {
    Cluster(usize),
    Noise,
}

impl ClusterLabel {
    pub fn cluster(self) -> Option<usize> {
        match self {
            ClusterLabel::Cluster(c) => Some(c),
            ClusterLabel::Noise => None,
        }
    }

    pub fn is_noise(self) -> bool {
        self == ClusterLabel::Noise
    }
}

/// Labels every point as a member of a dense cluster or as noise.
///
/// A point is core when its closed `eps`-disc, itself included, holds at least
/// `min_samples` points. Cores within `eps` of each other share a cluster.
/// A non-core point within `eps` of some core joins the cluster of its nearest
/// core (ties go to the lexicographically smaller core coordinate), which
/// makes the resulting partition independent of input order. Cluster ids are
/// numbered by the first core, in input order, of each cluster.
pub fn dbscan(points: &[LocalCoord], eps: f64, min_samples: usize) -> Vec<ClusterLabel> {
    let tree = KdTree::build(points);
    dbscan_with_index(&tree, eps, min_samples)
}

/// Same as [`dbscan`] over the points already held by `tree`.
pub fn dbscan_with_index(tree: &KdTree, eps: f64, min_samples: usize) -> Vec<ClusterLabel> {
    let points = tree.points();
    let n = points.len();
    let min_samples = min_samples.max(1);
    let is_core: Vec<bool> = points
        .iter()
        .map(|&p| tree.count_in_range(p, eps, min_samples) >= min_samples)
        .collect();

    let mut labels = vec![ClusterLabel::Noise; n];
    let mut next = 0usize;
    let mut stack = Vec::new();
    for seed in 0..n {
        if !is_core[seed] || labels[seed] != ClusterLabel::Noise {
            continue;
        }
        let label = ClusterLabel::Cluster(next);
        next += 1;
        labels[seed] = label;
        stack.push(seed);
        while let Some(q) = stack.pop() {
            tree.for_each_in_range(points[q], eps, |j| {
                if is_core[j] && labels[j] == ClusterLabel::Noise {
                    labels[j] = label;
                    stack.push(j);
                }
            });
        }
    }

    for i in 0..n {
        if is_core[i] {
            continue;
        }
        let p = points[i];
        let mut best: Option<usize> = None;
        tree.for_each_in_range(p, eps, |j| {
            if !is_core[j] {
                return;
            }
            best = match best {
                None => Some(j),
                Some(b) => {
                    if closer_core(points, p, j, b) == Ordering::Less {
                        Some(j)
                    } else {
                        Some(b)
                    }
                }
            };
        });
        if let Some(b) = best {
            labels[i] = labels[b];
        }
    }
    labels
}

fn closer_core(points: &[LocalCoord], p: LocalCoord, a: usize, b: usize) -> Ordering {
    let (pa, pb) = (points[a], points[b]);
    pa.distance_sq(&p)
        .total_cmp(&pb.distance_sq(&p))
        .then(pa.x.total_cmp(&pb.x))
        .then(pa.y.total_cmp(&pb.y))
        .then(a.cmp(&b))
}

/// Number of distinct clusters in a labeling.
pub fn cluster_count(labels: &[ClusterLabel]) -> usize {
    labels
        .iter()
        .filter_map(|l| l.cluster())
        .max()
        .map_or(0, |m| m + 1)
}

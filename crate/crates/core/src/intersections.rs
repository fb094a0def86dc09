//! Intersection candidates from the dissimilarity field and their validation
//! by counting the roads that leave an annulus around each candidate.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{centroid, dbscan, single_linkage_groups, KdTree};
use crate::error::{Error, Result};
use crate::geo::LocalCoord;
use crate::heading_grid::{DissimilarityField, HeadingGrid};
use crate::rng;

/// Unit of the candidate threshold as written in a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdUnit {
    /// Compared directly against the field values.
    #[default]
    Native,
    /// Degrees, converted to radians before comparison.
    Deg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateParams {
    /// Field value at or above which a cell is flagged, in field units.
    pub delta_phi_thr: f64,
    pub neighbor_radius: f64,
    pub merge_distance: f64,
}

impl Default for CandidateParams {
    fn default() -> Self {
        CandidateParams {
            delta_phi_thr: 1.4,
            neighbor_radius: 20.0,
            merge_distance: 15.0,
        }
    }
}

impl CandidateParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta_phi_thr", self.delta_phi_thr),
            ("neighbor_radius_m", self.neighbor_radius),
            ("merge_distance_m", self.merge_distance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("candidates.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Inner radius and width of one extremity annulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub radius: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationParams {
    pub radii: Vec<Annulus>,
    pub eps_passing: f64,
    pub min_passing: usize,
    pub d_passing: f64,
    pub d_ext_clust: f64,
    pub n_ext_clust: usize,
    pub n_max_val: usize,
    pub seed: u64,
}

impl Default for ValidationParams {
    fn default() -> Self {
        ValidationParams {
            radii: vec![
                Annulus {
                    radius: 30.0,
                    width: 25.0,
                },
                Annulus {
                    radius: 100.0,
                    width: 25.0,
                },
            ],
            eps_passing: 12.0,
            min_passing: 5,
            d_passing: 15.0,
            d_ext_clust: 20.0,
            n_ext_clust: 5,
            n_max_val: 1000,
            seed: 0,
        }
    }
}

impl ValidationParams {
    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::Config("validation.radii must not be empty".into()));
        }
        for a in &self.radii {
            if !(a.radius > 0.0 && a.width > 0.0 && a.radius.is_finite() && a.width.is_finite()) {
                return Err(Error::Config(format!(
                    "validation.radii entries need positive radius and width, got ({}, {})",
                    a.radius, a.width
                )));
            }
        }
        for (name, v) in [
            ("eps_passing_m", self.eps_passing),
            ("d_passing_m", self.d_passing),
            ("d_ext_clust_m", self.d_ext_clust),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("validation.{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("min_passing", self.min_passing),
            ("n_ext_clust", self.n_ext_clust),
            ("n_max_val", self.n_max_val),
        ] {
            if v < 1 {
                return Err(Error::Config(format!("validation.{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub position: LocalCoord,
    pub outgoing_roads: usize,
    /// Inner radii of the annuli at which the candidate was accepted.
    pub validated_at: Vec<f64>,
}

/// Outcome of one annulus test, kept for debugging output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusCheck {
    pub radius: f64,
    pub width: f64,
    pub points_in_disc: usize,
    pub points_used: usize,
    pub valid_points: usize,
    pub annulus_points: usize,
    /// Sizes of the groups found in the annulus, largest first.
    pub group_sizes: Vec<usize>,
    pub road_count: usize,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub position: LocalCoord,
    pub checks: Vec<AnnulusCheck>,
    pub accepted: bool,
}

/// Cells whose field value reaches the threshold, grouped by single linkage
/// at `merge_distance`; lone cells are dropped and each group becomes one
/// candidate at its centroid.
pub fn find_candidates(field: &DissimilarityField, grid: &HeadingGrid, p: &CandidateParams) -> Vec<LocalCoord> {
    let flagged = flagged_cells(field, grid, p.delta_phi_thr);
    single_linkage_groups(&flagged, p.merge_distance)
        .into_iter()
        .filter(|g| g.len() > 1)
        .map(|g| centroid(&flagged, &g))
        .collect()
}

/// Centres of the cells whose field value reaches `threshold`.
pub fn flagged_cells(field: &DissimilarityField, grid: &HeadingGrid, threshold: f64) -> Vec<LocalCoord> {
    field
        .values
        .iter()
        .filter(|&(_, &v)| v >= threshold)
        .map(|(&cell, _)| grid.cell_center(cell))
        .collect()
}

/// Counts the roads leaving `candidate` through the annulus `a`.
///
/// `rng_stream` selects the random stream used when the disc holds more than
/// `n_max_val` points.
pub fn validate_candidate(
    candidate: LocalCoord,
    index: &KdTree,
    p: &ValidationParams,
    a: Annulus,
    rng_stream: &[u64],
) -> AnnulusCheck {
    let outer = a.radius + a.width;
    let in_disc = index.range_query(candidate, outer);
    let mut check = AnnulusCheck {
        radius: a.radius,
        width: a.width,
        points_in_disc: in_disc.len(),
        points_used: 0,
        valid_points: 0,
        annulus_points: 0,
        group_sizes: Vec::new(),
        road_count: 0,
        valid: false,
    };
    let used: Vec<usize> = if in_disc.len() > p.n_max_val {
        let mut r = rng::stream(p.seed, rng_stream);
        let mut picked: Vec<usize> = sample(&mut r, in_disc.len(), p.n_max_val)
            .into_iter()
            .map(|k| in_disc[k])
            .collect();
        picked.sort_unstable();
        picked
    } else {
        in_disc
    };
    check.points_used = used.len();
    if used.is_empty() {
        return check;
    }
    let pts: Vec<LocalCoord> = used.iter().map(|&i| index.point(i)).collect();

    let labels = dbscan(&pts, p.eps_passing, p.min_passing);
    let n_clusters = labels.iter().filter_map(|l| l.cluster()).max().map_or(0, |m| m + 1);
    let mut touches = vec![false; n_clusters];
    let d2 = p.d_passing * p.d_passing;
    for (q, l) in pts.iter().zip(&labels) {
        if let Some(c) = l.cluster() {
            if q.distance_sq(&candidate) <= d2 {
                touches[c] = true;
            }
        }
    }
    let valid: Vec<LocalCoord> = pts
        .iter()
        .zip(&labels)
        .filter(|(_, l)| l.cluster().is_some_and(|c| touches[c]))
        .map(|(q, _)| *q)
        .collect();
    check.valid_points = valid.len();

    let ring: Vec<LocalCoord> = valid
        .into_iter()
        .filter(|q| {
            let d = q.distance(&candidate);
            d >= a.radius && d <= outer
        })
        .collect();
    check.annulus_points = ring.len();

    let mut sizes: Vec<usize> = single_linkage_groups(&ring, p.d_ext_clust).iter().map(Vec::len).collect();
    sizes.sort_unstable_by(|x, y| y.cmp(x));
    check.road_count = sizes.iter().filter(|&&s| s > p.n_ext_clust).count();
    check.valid = check.road_count >= 3;
    check.group_sizes = sizes;
    check
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationResult {
    pub intersections: Vec<Intersection>,
    pub reports: Vec<CandidateReport>,
}

/// Accepts a candidate when any configured annulus finds at least three
/// roads; accepted positions closer than `merge_distance` are fused.
pub fn validate_all(
    candidates: &[LocalCoord],
    index: &KdTree,
    p: &ValidationParams,
    merge_distance: f64,
) -> ValidationResult {
    let reports: Vec<CandidateReport> = candidates
        .par_iter()
        .enumerate()
        .map(|(ci, &c)| {
            let checks: Vec<AnnulusCheck> = p
                .radii
                .iter()
                .enumerate()
                .map(|(ri, &a)| validate_candidate(c, index, p, a, &[ci as u64, ri as u64]))
                .collect();
            let accepted = checks.iter().any(|k| k.valid);
            CandidateReport {
                position: c,
                checks,
                accepted,
            }
        })
        .collect();

    let accepted: Vec<&CandidateReport> = reports.iter().filter(|r| r.accepted).collect();
    let positions: Vec<LocalCoord> = accepted.iter().map(|r| r.position).collect();
    let intersections = single_linkage_groups(&positions, merge_distance)
        .into_iter()
        .map(|group| {
            let mut validated_at: Vec<f64> = group
                .iter()
                .flat_map(|&k| accepted[k].checks.iter().filter(|c| c.valid).map(|c| c.radius))
                .collect();
            validated_at.sort_by(f64::total_cmp);
            validated_at.dedup();
            let outgoing_roads = group
                .iter()
                .flat_map(|&k| accepted[k].checks.iter().filter(|c| c.valid).map(|c| c.road_count))
                .max()
                .unwrap_or(0);
            Intersection {
                position: centroid(&positions, &group),
                outgoing_roads,
                validated_at,
            }
        })
        .collect();
    ValidationResult { intersections, reports }
}

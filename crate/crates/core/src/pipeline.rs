//! The full inference run: preprocessing, heading grid, candidate detection
//! and validation, action nodes, road edges.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::action_nodes::{dropoff_nodes, load_nodes, ActionNode};
use crate::cluster::KdTree;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::geo::{GeoCoord, LocalCoord};
use crate::heading_grid::{build_grid, dissimilarity, DissimilarityField, HeadingGrid};
use crate::intersections::{find_candidates, flagged_cells, validate_all, ValidationResult};
use crate::roads::{build_graph, NodeKind, RoadGraph};
use crate::trips::{clean_trip, dataset_origin, interpolate_trip, project_trips, split_trip, CleanOutcome, Trip};

/// Counts describing a run. Contains nothing time-dependent, so identical
/// inputs give identical reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub origin: GeoCoord,
    pub input_trips: usize,
    pub rejected: BTreeMap<String, usize>,
    pub kept_trips: usize,
    pub trip_pieces: usize,
    pub interpolated_points: usize,
    pub grid_cells: usize,
    pub flagged_cells: usize,
    pub candidates: usize,
    pub intersections: usize,
    pub load_nodes: usize,
    pub dropoff_nodes: usize,
    pub edges: usize,
    pub dead_end_edges: usize,
    pub config: Config,
}

/// Wall time per stage, in milliseconds, in execution order.
pub type Timings = Vec<(&'static str, f64)>;

#[derive(Debug)]
pub struct Inference {
    pub graph: RoadGraph,
    pub origin: GeoCoord,
    pub report: RunReport,
    pub timings: Timings,
    pub grid: HeadingGrid,
    pub field: DissimilarityField,
    pub candidates: Vec<LocalCoord>,
    pub validation: ValidationResult,
    pub action_nodes: Vec<ActionNode>,
    /// Preprocessed, resampled trips.
    pub trips: Vec<Trip>,
}

struct Clock {
    last: Instant,
    timings: Timings,
}

impl Clock {
    fn new() -> Self {
        Clock {
            last: Instant::now(),
            timings: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        let ms = (now - self.last).as_secs_f64() * 1e3;
        log::info!("{stage}: {ms:.1} ms");
        self.timings.push((stage, ms));
        self.last = now;
    }
}

/// Runs every stage on raw trips (lat/lon filled, local frame not yet set).
pub fn infer(mut trips: Vec<Trip>, config: &Config) -> Result<Inference> {
    config.validate()?;
    let mut clock = Clock::new();
    let input_trips = trips.len();
    let origin = dataset_origin(&trips).ok_or(Error::NoTrips)?;
    project_trips(&mut trips, origin);

    let ap = config.action_nodes();
    let mut action_nodes = load_nodes(&trips, &ap);
    action_nodes.extend(dropoff_nodes(&trips, &ap));
    clock.lap("action nodes");

    let pp = config.preprocess();
    let outcomes: Vec<CleanOutcome> = trips.into_par_iter().map(|t| clean_trip(t, &pp)).collect();
    let mut rejected: BTreeMap<String, usize> = BTreeMap::new();
    let mut kept = Vec::new();
    for o in outcomes {
        match o {
            CleanOutcome::Kept(t) => kept.push(t),
            CleanOutcome::Rejected { trip_id, reason } => {
                log::debug!("trip {trip_id} rejected: {}", reason.code());
                *rejected.entry(reason.code().to_string()).or_default() += 1;
            }
        }
    }
    let kept_trips = kept.len();
    let trips: Vec<Trip> = kept
        .into_par_iter()
        .flat_map_iter(|t| split_trip(t, &pp))
        .map(|t| interpolate_trip(t, &pp))
        .collect();
    if trips.is_empty() {
        return Err(Error::NoTrips);
    }
    let interpolated_points = trips.iter().map(|t| t.updates.len()).sum();
    clock.lap("preprocess");

    let grid = build_grid(&trips, config.heading_grid.cell_size_m, config.heading_grid.heading_fold);
    let cp = config.candidates();
    let field = dissimilarity(&grid, cp.neighbor_radius);
    clock.lap("heading grid");

    let candidates = find_candidates(&field, &grid, &cp);
    let n_flagged = flagged_cells(&field, &grid, cp.delta_phi_thr).len();
    let all_points: Vec<LocalCoord> = trips.iter().flat_map(|t| t.updates.iter().map(|u| u.local)).collect();
    let index = KdTree::build(&all_points);
    let validation = validate_all(&candidates, &index, &config.validation(), cp.merge_distance);
    clock.lap("intersections");

    let graph = build_graph(&trips, &validation.intersections, &action_nodes, &config.roads(), Some(origin))?;
    clock.lap("roads");

    let count = |k: NodeKind| graph.nodes.iter().filter(|n| n.kind == k).count();
    let report = RunReport {
        origin,
        input_trips,
        rejected,
        kept_trips,
        trip_pieces: trips.len(),
        interpolated_points,
        grid_cells: grid.len(),
        flagged_cells: n_flagged,
        candidates: candidates.len(),
        intersections: count(NodeKind::Intersection),
        load_nodes: count(NodeKind::Load),
        dropoff_nodes: count(NodeKind::Dropoff),
        edges: graph.edges.len(),
        dead_end_edges: graph.edges.iter().filter(|e| e.to.is_none()).count(),
        config: config.clone(),
    };
    log::info!(
        "{} intersections, {} action nodes, {} edges from {} trip pieces",
        report.intersections,
        report.load_nodes + report.dropoff_nodes,
        report.edges,
        report.trip_pieces
    );
    Ok(Inference {
        graph,
        origin,
        report,
        timings: clock.timings,
        grid,
        field,
        candidates,
        validation,
        action_nodes,
        trips,
    })
}

/// Runs `f` on a pool of `workers` threads; 0 means one per core.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

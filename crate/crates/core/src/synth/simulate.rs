//! Truck trips driven over a ground-truth layout.

use petgraph::algo::astar;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geo::{to_geo, LocalCoord};
use crate::polyline::length;
use crate::rng;
use crate::roads::{NodeKind, RoadGraph};
use crate::trips::{GpsUpdate, Trip, TripEvent};

use super::{SiteScenario, TripModel};

/// Simulates `scenario.model.n_trips` trips. Trip `k` starts at a random load node,
/// drives to a random dump node, turns and returns empty to a random load
/// node. Each leg follows a shortest path under randomly inflated edge
/// lengths, sometimes detouring through a random road.
pub fn simulate_trips(scenario: &SiteScenario) -> Result<Vec<Trip>> {
    scenario.validate()?;
    let routes = Router::new(&scenario.ground_truth)?;
    let loads = routes.of_kind(NodeKind::Load);
    let dumps = routes.of_kind(NodeKind::Dropoff);
    if scenario.model.n_trips > 0 && (loads.is_empty() || dumps.is_empty()) {
        return Err(Error::InvalidInput("the site needs at least one load and one dump node".into()));
    }
    (0..scenario.model.n_trips)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(scenario.seed, &[0x7219, k as u64]);
            simulate_one(scenario, &routes, &loads, &dumps, k, &mut r)
        })
        .collect()
}

fn simulate_one(
    s: &SiteScenario,
    routes: &Router,
    loads: &[usize],
    dumps: &[usize],
    k: usize,
    r: &mut ChaCha8Rng,
) -> Result<Trip> {
    let li = r.random_range(0..loads.len());
    let load = loads[li];
    let dump = dumps[r.random_range(0..dumps.len())];
    let next = loads[r.random_range(0..loads.len())];
    let outbound = routes.path(load, dump, &s.model, r)?;
    let inbound = routes.path(dump, next, &s.model, r)?;
    let tunnel_hit: Vec<bool> = s.model.noise.tunnels.iter().map(|t| r.random::<f64>() < t.trip_fraction).collect();

    let mut trip = Trip::new(format!("trip-{k:05}"));
    trip.machine_id = format!("truck-{:02}", k % s.model.fleet_size);
    trip.driver_id = format!("driver-{:02}", k % s.model.fleet_size);
    trip.task_id = format!("task-{li}");
    trip.excavator_id = Some(format!("excavator-{li}"));

    let mut w = Walker::new(s, r, s.model.start_time + k as f64 * s.model.trip_interval_s);
    let load_pos = s.ground_truth.nodes[load].position;
    let dump_pos = s.ground_truth.nodes[dump].position;

    trip.load_event = Some(w.stay(&mut trip, load_pos, r));
    w.drive(&mut trip, &outbound, &tunnel_hit, r);
    trip.dropoff_event = Some(w.stay(&mut trip, dump_pos, r));
    w.drive(&mut trip, &inbound, &tunnel_hit, r);
    trip.sort_updates();
    Ok(trip)
}

/// Walks along polylines emitting fixes at log-normal intervals with a
/// slowly varying log-normal speed.
struct Walker<'a> {
    s: &'a SiteScenario,
    t: f64,
    log_speed: f64,
    /// Current receiver error.
    error: (f64, f64),
    cadence: LogNormal<f64>,
    unit: Normal<f64>,
}

impl<'a> Walker<'a> {
    fn new(s: &'a SiteScenario, r: &mut ChaCha8Rng, t0: f64) -> Walker<'a> {
        let speed = LogNormal::new(s.model.speed.median_kmh.ln(), s.model.speed.sigma).unwrap();
        let cadence = LogNormal::new(s.model.cadence_median_s.ln(), s.model.cadence_sigma).unwrap();
        let log_speed = speed.sample(r).ln();
        let unit = Normal::new(0.0, 1.0).unwrap();
        let sigma = s.model.noise.jitter_sigma_m;
        let error = (sigma * unit.sample(r), sigma * unit.sample(r));
        Walker {
            s,
            t: t0,
            log_speed,
            error,
            cadence,
            unit,
        }
    }

    fn tick(&mut self, r: &mut ChaCha8Rng) -> f64 {
        let dt = (self.cadence.sample(r) * 100.0).round().max(10.0) / 100.0;
        self.t += dt;
        dt
    }

    fn next_speed(&mut self, r: &mut ChaCha8Rng) -> f64 {
        let m = &self.s.model.speed;
        let rho = m.persistence;
        let mu = m.median_kmh.ln();
        self.log_speed = mu + rho * (self.log_speed - mu) + (1.0 - rho * rho).sqrt() * m.sigma * self.unit.sample(r);
        self.log_speed.exp().min(m.cap_kmh)
    }

    fn jitter(&self, p: LocalCoord, sigma: f64, r: &mut ChaCha8Rng) -> LocalCoord {
        if sigma <= 0.0 {
            return p;
        }
        LocalCoord::new(p.x + sigma * self.unit.sample(r), p.y + sigma * self.unit.sample(r))
    }

    /// Advances the receiver error and applies it to `p`.
    fn receiver_error(&mut self, p: LocalCoord, r: &mut ChaCha8Rng) -> LocalCoord {
        let n = &self.s.model.noise;
        if n.jitter_sigma_m <= 0.0 {
            return p;
        }
        let rho = n.jitter_correlation;
        let k = (1.0 - rho * rho).sqrt() * n.jitter_sigma_m;
        self.error = (
            rho * self.error.0 + k * self.unit.sample(r),
            rho * self.error.1 + k * self.unit.sample(r),
        );
        LocalCoord::new(p.x + self.error.0, p.y + self.error.1)
    }

    fn fix(&self, p: LocalCoord, speed: f64) -> GpsUpdate {
        GpsUpdate::new(self.t, to_geo(p, self.s.origin), speed)
    }

    /// Stationary fixes at a node; the first carries the event.
    fn stay(&mut self, trip: &mut Trip, at: LocalCoord, r: &mut ChaCha8Rng) -> TripEvent {
        self.tick(r);
        let first = self.fix(self.jitter(at, self.s.model.noise.endpoint_noise_m, r), 0.0);
        let event = TripEvent {
            timestamp: first.timestamp,
            geo: first.geo,
            local: LocalCoord::default(),
        };
        trip.updates.push(first);
        for _ in 1..self.s.model.stationary_fixes {
            self.tick(r);
            let at = self.receiver_error(at, r);
            let u = self.fix(at, 0.0);
            trip.updates.push(u);
        }
        event
    }

    fn drive(&mut self, trip: &mut Trip, path: &[LocalCoord], tunnel_hit: &[bool], r: &mut ChaCha8Rng) {
        let total = length(path);
        let mut cursor = Cursor::new(path);
        let mut s = 0.0;
        loop {
            let v = self.next_speed(r);
            let truth = cursor.at(s);
            let in_tunnel = self
                .s
                .model
                .noise
                .tunnels
                .iter()
                .zip(tunnel_hit)
                .any(|(t, &hit)| hit && t.center.distance(&truth) <= t.radius_m);
            let dropped = r.random::<f64>() < self.s.model.noise.dropout_prob;
            let pos = self.receiver_error(truth, r);
            if !in_tunnel && !dropped {
                trip.updates.push(self.fix(pos, (v * 100.0).round() / 100.0));
            }
            if s >= total {
                break;
            }
            let dt = self.tick(r);
            s = (s + v / 3.6 * dt).min(total);
        }
    }
}

/// Arc-length lookup along a polyline; queries must be non-decreasing.
struct Cursor<'a> {
    line: &'a [LocalCoord],
    seg: usize,
    seg_start: f64,
}

impl<'a> Cursor<'a> {
    fn new(line: &'a [LocalCoord]) -> Self {
        Cursor { line, seg: 0, seg_start: 0.0 }
    }

    fn at(&mut self, s: f64) -> LocalCoord {
        while self.seg + 2 < self.line.len() {
            let len = self.line[self.seg].distance(&self.line[self.seg + 1]);
            if self.seg_start + len >= s {
                break;
            }
            self.seg_start += len;
            self.seg += 1;
        }
        let (a, b) = (self.line[self.seg], self.line[self.seg + 1]);
        let len = a.distance(&b);
        let t = if len > 0.0 { ((s - self.seg_start) / len).clamp(0.0, 1.0) } else { 0.0 };
        a.lerp(&b, t)
    }
}

struct Router<'g> {
    gt: &'g RoadGraph,
    graph: UnGraph<usize, usize>,
    index: Vec<NodeIndex>,
    lengths: Vec<f64>,
}

impl<'g> Router<'g> {
    fn new(gt: &'g RoadGraph) -> Result<Self> {
        let mut graph = UnGraph::new_undirected();
        let index: Vec<NodeIndex> = (0..gt.nodes.len()).map(|i| graph.add_node(i)).collect();
        for (ei, e) in gt.edges.iter().enumerate() {
            let Some(to) = e.to else {
                return Err(Error::InvalidInput(format!("ground-truth edge {} is a dead end", e.edge_id)));
            };
            let (a, b) = (slot(gt, e.from)?, slot(gt, to)?);
            graph.add_edge(index[a], index[b], ei);
        }
        let lengths = gt.edges.iter().map(|e| length(&e.polyline)).collect();
        Ok(Router { gt, graph, index, lengths })
    }

    fn of_kind(&self, kind: NodeKind) -> Vec<usize> {
        (0..self.gt.nodes.len()).filter(|&i| self.gt.nodes[i].kind == kind).collect()
    }

    /// Polyline of one leg. Edge lengths are inflated by random factors; with
    /// probability `detour_prob` the leg is also forced through a random edge,
    /// as long as the resulting path visits no node twice.
    fn path(&self, from: usize, to: usize, m: &TripModel, r: &mut ChaCha8Rng) -> Result<Vec<LocalCoord>> {
        let factor: Vec<f64> = self.lengths.iter().map(|_| 1.0 + m.route_spread * r.random::<f64>()).collect();
        let cost = |e: usize| self.lengths[e] * factor[e];
        let shortest = |a: NodeIndex, b: NodeIndex| {
            astar(&self.graph, a, |n| n == b, |e| cost(*e.weight()), |_| 0.0).map(|(_, nodes)| nodes)
        };
        let (start, goal) = (self.index[from], self.index[to]);
        let mut nodes = shortest(start, goal).ok_or(Error::Disconnected {
            from: self.gt.nodes[from].node_id,
            to: self.gt.nodes[to].node_id,
        })?;
        if !self.lengths.is_empty() && r.random::<f64>() < m.detour_prob {
            for _ in 0..8 {
                let e = self.graph.edge_indices().nth(r.random_range(0..self.lengths.len())).unwrap();
                let (mut a, mut b) = self.graph.edge_endpoints(e).unwrap();
                if r.random::<bool>() {
                    std::mem::swap(&mut a, &mut b);
                }
                let (Some(head), Some(tail)) = (shortest(start, a), shortest(b, goal)) else {
                    continue;
                };
                let candidate: Vec<NodeIndex> = head.into_iter().chain(tail).collect();
                let mut seen = candidate.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() == candidate.len() {
                    nodes = candidate;
                    break;
                }
            }
        }

        let mut line: Vec<LocalCoord> = vec![self.gt.nodes[from].position];
        for w in nodes.windows(2) {
            let (a, b) = (self.graph[w[0]], self.graph[w[1]]);
            let ei = self
                .graph
                .edges_connecting(w[0], w[1])
                .map(|e| *e.weight())
                .min_by(|&x, &y| cost(x).total_cmp(&cost(y)))
                .expect("consecutive path nodes are adjacent");
            let e = &self.gt.edges[ei];
            let forward = e.from == self.gt.nodes[a].node_id && e.to == Some(self.gt.nodes[b].node_id);
            let mut pts = e.polyline.clone();
            if !forward {
                pts.reverse();
            }
            for p in pts {
                if line.last().is_none_or(|q| q.distance(&p) > 1e-9) {
                    line.push(p);
                }
            }
        }
        Ok(line)
    }
}

fn slot(gt: &RoadGraph, id: usize) -> Result<usize> {
    gt.nodes
        .iter()
        .position(|n| n.node_id == id)
        .ok_or_else(|| Error::InvalidInput(format!("ground-truth edge references missing node {id}")))
}

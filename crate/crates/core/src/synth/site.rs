//! Random planar site layouts.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{to_geo, GeoCoord, LocalCoord};
use crate::polyline::{point_segment_distance, resample_equidistant};
use crate::rng;
use crate::roads::{Edge, Node, NodeKind, RoadGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SiteParams {
    pub n_intersections: usize,
    pub n_load: usize,
    pub n_dump: usize,
    pub width_m: f64,
    pub height_m: f64,
    /// Minimum distance between any two nodes.
    pub min_spacing_m: f64,
    pub max_edge_length_m: f64,
    /// Smallest angle between roads leaving the same intersection.
    pub min_angle_deg: f64,
    /// Minimum distance between roads that share no node, and between a road
    /// and any node it does not end at.
    pub clearance_m: f64,
    pub spur_length_m: (f64, f64),
    /// Control-point offset of the quadratic curve, as a fraction of chord length.
    pub max_bend: f64,
    pub attempts: usize,
}

impl Default for SiteParams {
    fn default() -> Self {
        SiteParams {
            n_intersections: 6,
            n_load: 3,
            n_dump: 2,
            width_m: 1800.0,
            height_m: 1400.0,
            min_spacing_m: 180.0,
            max_edge_length_m: 650.0,
            min_angle_deg: 55.0,
            clearance_m: 60.0,
            spur_length_m: (180.0, 260.0),
            max_bend: 0.08,
            attempts: 500,
        }
    }
}

impl SiteParams {
    pub fn validate(&self, min_node_spacing: f64) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synth: {m}")));
        if !(self.width_m > 0.0 && self.height_m > 0.0) {
            return bad("area must be positive");
        }
        if self.min_spacing_m < min_node_spacing {
            return bad("min_spacing_m must be at least twice the candidate merge distance");
        }
        let (lo, hi) = self.spur_length_m;
        if !(lo > 0.0 && hi >= lo) {
            return bad("spur_length_m must be an increasing positive pair");
        }
        if !(0.0..0.5).contains(&self.max_bend) {
            return bad("max_bend must be in [0, 0.5)");
        }
        if !(0.0..120.0).contains(&self.min_angle_deg) {
            return bad("min_angle_deg must be in [0, 120)");
        }
        if self.attempts == 0 {
            return bad("attempts must be positive");
        }
        Ok(())
    }
}

/// Ground-truth polylines are sampled at this spacing.
pub const SITE_SPACING: f64 = 5.0;

/// Builds a connected planar layout: intersections joined by gently curved
/// roads, each load and dump node at the end of a spur from an intersection.
/// Every intersection ends up with 3 or 4 roads.
pub fn generate_site(seed: u64, p: &SiteParams, origin: GeoCoord) -> Result<RoadGraph> {
    if p.n_intersections == 0 {
        return single_road(seed, p, origin);
    }
    for attempt in 0..p.attempts {
        let mut r = rng::stream(seed, &[0x517e, attempt as u64]);
        if let Some(layout) = try_layout(&mut r, p) {
            return Ok(layout.into_graph(origin));
        }
    }
    Err(Error::Infeasible(format!(
        "no layout with {} intersections, {} load and {} dump nodes fits {}x{} m after {} attempts",
        p.n_intersections, p.n_load, p.n_dump, p.width_m, p.height_m, p.attempts
    )))
}

fn single_road(seed: u64, p: &SiteParams, origin: GeoCoord) -> Result<RoadGraph> {
    if p.n_load != 1 || p.n_dump != 1 {
        return Err(Error::Infeasible(
            "without intersections the site holds exactly one load and one dump node".into(),
        ));
    }
    let margin = 0.1 * p.width_m;
    let y = p.height_m / 2.0;
    let a = LocalCoord::new(margin, y);
    let b = LocalCoord::new(p.width_m - margin, y);
    if a.distance(&b) < p.min_spacing_m {
        return Err(Error::Infeasible("area too narrow for a single road".into()));
    }
    let mut r = rng::stream(seed, &[0x517e]);
    let bend = r.random_range(-p.max_bend..=p.max_bend);
    let layout = Layout {
        nodes: vec![(NodeKind::Load, a), (NodeKind::Dropoff, b)],
        roads: vec![Road::new(0, 1, a, b, bend)],
    };
    Ok(layout.into_graph(origin))
}

#[derive(Debug, Clone)]
struct Road {
    a: usize,
    b: usize,
    /// Dense points from `a` to `b`.
    line: Vec<LocalCoord>,
}

impl Road {
    fn new(a: usize, b: usize, pa: LocalCoord, pb: LocalCoord, bend: f64) -> Road {
        let (dx, dy) = (pb.x - pa.x, pb.y - pa.y);
        let c = LocalCoord::new((pa.x + pb.x) / 2.0 - bend * dy, (pa.y + pb.y) / 2.0 + bend * dx);
        let steps = ((dx.hypot(dy) / 2.0).ceil() as usize).max(2);
        let line = (0..=steps)
            .map(|k| {
                let t = k as f64 / steps as f64;
                let (u, v, w) = ((1.0 - t) * (1.0 - t), 2.0 * t * (1.0 - t), t * t);
                LocalCoord::new(u * pa.x + v * c.x + w * pb.x, u * pa.y + v * c.y + w * pb.y)
            })
            .collect();
        Road { a, b, line }
    }

    /// Direction in which the road leaves node `n`.
    fn leaving_angle(&self, n: usize) -> f64 {
        let (p, q) = if n == self.a {
            (self.line[0], self.line[4.min(self.line.len() - 1)])
        } else {
            let m = self.line.len() - 1;
            (self.line[m], self.line[m.saturating_sub(4)])
        };
        (q.y - p.y).atan2(q.x - p.x)
    }

    fn touches(&self, n: usize) -> bool {
        self.a == n || self.b == n
    }
}

struct Layout {
    nodes: Vec<(NodeKind, LocalCoord)>,
    roads: Vec<Road>,
}

impl Layout {
    fn degree(&self, n: usize) -> usize {
        self.roads.iter().filter(|r| r.touches(n)).count()
    }

    fn angles_at(&self, n: usize) -> Vec<f64> {
        self.roads.iter().filter(|r| r.touches(n)).map(|r| r.leaving_angle(n)).collect()
    }

    fn fits(&self, road: &Road, p: &SiteParams) -> bool {
        let min_angle = p.min_angle_deg.to_radians();
        for n in [road.a, road.b] {
            let here = road.leaving_angle(n);
            if self.angles_at(n).iter().any(|&a| angle_between(a, here) < min_angle) {
                return false;
            }
        }
        let mine = coarse(&road.line);
        for (i, (_, pos)) in self.nodes.iter().enumerate() {
            if !road.touches(i) && polyline_distance(*pos, &mine) < p.clearance_m {
                return false;
            }
        }
        for other in &self.roads {
            let shares = other.touches(road.a) || other.touches(road.b);
            let other_coarse = coarse(&other.line);
            if crosses(&mine, &other_coarse) || (!shares && lines_closer_than(&mine, &other_coarse, p.clearance_m)) {
                return false;
            }
        }
        true
    }

    fn connected(&self) -> bool {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for r in &self.roads {
                let v = if r.a == u {
                    r.b
                } else if r.b == u {
                    r.a
                } else {
                    continue;
                };
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn into_graph(self, origin: GeoCoord) -> RoadGraph {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &(kind, position))| Node {
                node_id: i,
                kind,
                position,
                geo: Some(to_geo(position, origin)),
                altitude: None,
            })
            .collect();
        let edges = self
            .roads
            .into_iter()
            .enumerate()
            .map(|(i, r)| Edge {
                edge_id: i,
                from: r.a,
                to: Some(r.b),
                polyline: resample_equidistant(&r.line, SITE_SPACING),
                support: 0,
            })
            .collect();
        RoadGraph { nodes, edges }
    }
}

fn try_layout(r: &mut ChaCha8Rng, p: &SiteParams) -> Option<Layout> {
    let n = p.n_intersections;
    let margin = p.clearance_m.max(0.1 * p.width_m.min(p.height_m));
    let hi = |m: f64, len: f64| (len - m).max(m + 1e-9);
    let inside = |c: &LocalCoord| (margin..=hi(margin, p.width_m)).contains(&c.x) && (margin..=hi(margin, p.height_m)).contains(&c.y);
    // Each new intersection lands within road reach of an earlier one, so
    // the layout stays compact enough to connect.
    let mut points: Vec<LocalCoord> = vec![LocalCoord::new(
        r.random_range(margin..hi(margin, p.width_m)),
        r.random_range(margin..hi(margin, p.height_m)),
    )];
    let reach = (p.min_spacing_m, p.max_edge_length_m.max(p.min_spacing_m) * 0.85);
    let mut tries = 0;
    while points.len() < n {
        tries += 1;
        if tries > 200 * n {
            return None;
        }
        let from = points[r.random_range(0..points.len())];
        let d = r.random_range(reach.0..=reach.1);
        let a = r.random_range(0.0..TAU);
        let c = LocalCoord::new(from.x + d * a.cos(), from.y + d * a.sin());
        if inside(&c) && points.iter().all(|q| q.distance(&c) >= p.min_spacing_m) {
            points.push(c);
        }
    }
    let mut layout = Layout {
        nodes: points.iter().map(|&c| (NodeKind::Intersection, c)).collect(),
        roads: Vec::new(),
    };

    // Shortest connections first; one slot per intersection is kept free for
    // a spur while spurs remain to be placed.
    let n_spurs = p.n_load + p.n_dump;
    let cap = if n_spurs > 0 { 3 } else { 4 };
    let mut pairs: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| (points[i].distance(&points[j]), i, j))
        .filter(|&(d, _, _)| d <= p.max_edge_length_m)
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (_, i, j) in pairs {
        if layout.degree(i) >= cap || layout.degree(j) >= cap {
            continue;
        }
        let road = Road::new(i, j, points[i], points[j], r.random_range(-p.max_bend..=p.max_bend));
        if layout.fits(&road, p) {
            layout.roads.push(road);
        }
    }

    let mut kinds: Vec<NodeKind> = std::iter::repeat_n(NodeKind::Load, p.n_load)
        .chain(std::iter::repeat_n(NodeKind::Dropoff, p.n_dump))
        .collect();
    // Spurs go to the neediest intersections first.
    kinds.sort();
    for kind in kinds {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (layout.degree(i), r.random_range(0..u32::MAX)));
        let placed = order.into_iter().any(|i| place_spur(&mut layout, r, p, i, kind));
        if !placed {
            return None;
        }
    }

    let ok_degrees = (0..n).all(|i| (3..=4).contains(&layout.degree(i)));
    (ok_degrees && layout.connected()).then_some(layout)
}

fn place_spur(layout: &mut Layout, r: &mut ChaCha8Rng, p: &SiteParams, at: usize, kind: NodeKind) -> bool {
    if layout.degree(at) >= 4 {
        return false;
    }
    let base = layout.nodes[at].1;
    let mut angles = layout.angles_at(at);
    let (gap, mid) = largest_gap(&mut angles);
    if gap < 2.0 * p.min_angle_deg.to_radians() {
        return false;
    }
    let jitter = (gap / 2.0 - p.min_angle_deg.to_radians()).min(10f64.to_radians());
    let dir = mid + r.random_range(-jitter..=jitter);
    let len = r.random_range(p.spur_length_m.0..=p.spur_length_m.1);
    let end = LocalCoord::new(base.x + len * dir.cos(), base.y + len * dir.sin());
    if layout.nodes.iter().any(|(_, q)| q.distance(&end) < p.min_spacing_m.min(len)) {
        return false;
    }
    let id = layout.nodes.len();
    let road = Road::new(at, id, base, end, r.random_range(-p.max_bend..=p.max_bend) / 2.0);
    layout.nodes.push((kind, end));
    if layout.fits(&road, p) {
        layout.roads.push(road);
        true
    } else {
        layout.nodes.pop();
        false
    }
}

/// Largest empty angular sector around a node, and the direction bisecting it.
fn largest_gap(angles: &mut [f64]) -> (f64, f64) {
    if angles.is_empty() {
        return (TAU, 0.0);
    }
    for a in angles.iter_mut() {
        *a = a.rem_euclid(TAU);
    }
    angles.sort_by(f64::total_cmp);
    let mut best = (0.0, 0.0);
    for (k, &a) in angles.iter().enumerate() {
        let next = if k + 1 < angles.len() { angles[k + 1] } else { angles[0] + TAU };
        let gap = next - a;
        if gap > best.0 {
            best = (gap, a + gap / 2.0);
        }
    }
    best
}

fn angle_between(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn coarse(line: &[LocalCoord]) -> Vec<LocalCoord> {
    let step = (line.len() / 24).max(1);
    let mut out: Vec<LocalCoord> = line.iter().step_by(step).copied().collect();
    if out.last() != line.last() {
        out.push(*line.last().unwrap());
    }
    out
}

fn polyline_distance(p: LocalCoord, line: &[LocalCoord]) -> f64 {
    line.windows(2)
        .map(|w| point_segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

fn lines_closer_than(a: &[LocalCoord], b: &[LocalCoord], d: f64) -> bool {
    a.iter().any(|&p| polyline_distance(p, b) < d) || b.iter().any(|&p| polyline_distance(p, a) < d)
}

/// Whether two polylines cross. Touching at a shared endpoint does not count.
fn crosses(a: &[LocalCoord], b: &[LocalCoord]) -> bool {
    a.windows(2)
        .any(|s| b.windows(2).any(|t| segments_intersect(s[0], s[1], t[0], t[1])))
}

fn segments_intersect(p1: LocalCoord, p2: LocalCoord, q1: LocalCoord, q2: LocalCoord) -> bool {
    let orient = |a: LocalCoord, b: LocalCoord, c: LocalCoord| (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

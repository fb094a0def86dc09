//! Road edges between nodes and the final graph.
//!
//! Trips are cut where they pass closest to a node, the pieces grouped by the
//! nodes that bound them, and each group clustered; every dense cluster
//! becomes one edge drawn along a representative trip piece.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action_nodes::{ActionKind, ActionNode};
use crate::cluster::{dbscan, KdTree};
use crate::error::{Error, Result};
use crate::geo::{to_geo, GeoCoord, LocalCoord};
use crate::intersections::Intersection;
use crate::polyline::{distance_to_polyline, resample_equidistant};
use crate::rng;
use crate::trips::Trip;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Intersection,
    Load,
    Dropoff,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Intersection => "intersection",
            NodeKind::Load => "load",
            NodeKind::Dropoff => "dropoff",
        }
    }
}

impl From<ActionKind> for NodeKind {
    fn from(k: ActionKind) -> Self {
        match k {
            ActionKind::Load => NodeKind::Load,
            ActionKind::Dropoff => NodeKind::Dropoff,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub node_id: usize,
    pub kind: NodeKind,
    pub position: LocalCoord,
    pub geo: Option<GeoCoord>,
    pub altitude: Option<f64>,
}

/// A road. `to` is `None` for a dead end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub edge_id: usize,
    pub from: usize,
    pub to: Option<usize>,
    pub polyline: Vec<LocalCoord>,
    /// Trip pieces whose dominant cluster produced this edge.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RoadGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl RoadGraph {
    pub fn node(&self, id: usize) -> Option<&Node> {
        self.nodes.iter().find(|n| n.node_id == id)
    }

    pub fn intersections(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Intersection)
    }

    /// Checks structural invariants: unique ids, existing endpoints, at least
    /// two points per edge, interior spacing within 10% of `spacing`, and
    /// edge ends within `d_node` of their nodes.
    pub fn check(&self, spacing: f64, d_node: f64) -> Result<()> {
        let mut ids: Vec<usize> = self.nodes.iter().map(|n| n.node_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::GraphInvariant("duplicate node id".into()));
        }
        let slack = 1e-6 * d_node.max(1.0);
        for e in &self.edges {
            if e.polyline.len() < 2 {
                return Err(Error::GraphInvariant(format!("edge {} has fewer than two points", e.edge_id)));
            }
            let n = e.polyline.len();
            for (k, w) in e.polyline.windows(2).enumerate() {
                let d = w[0].distance(&w[1]);
                let last = k == n - 2;
                if (!last && (d - spacing).abs() > 0.1 * spacing) || (last && d > spacing * 1.1) {
                    return Err(Error::GraphInvariant(format!(
                        "edge {} step {k} is {d:.3} m, expected {spacing} m",
                        e.edge_id
                    )));
                }
            }
            let ends = [(Some(e.from), e.polyline[0]), (e.to, e.polyline[n - 1])];
            for (id, end) in ends {
                let Some(id) = id else { continue };
                let node = self
                    .node(id)
                    .ok_or_else(|| Error::GraphInvariant(format!("edge {} references missing node {id}", e.edge_id)))?;
                let d = node.position.distance(&end);
                if d > d_node + slack {
                    return Err(Error::GraphInvariant(format!(
                        "edge {} ends {d:.2} m from node {id}, limit {d_node} m",
                        e.edge_id
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentativeMode {
    /// Among pieces with the median point count, the smallest trip id.
    #[default]
    SmallestTripId,
    /// Among pieces with the median point count, a seeded random one.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadParams {
    pub d_node: f64,
    pub eps_road: f64,
    pub min_road: usize,
    /// Extra distance trimmed around nodes beyond `d_node`.
    pub trim_margin: f64,
    pub representative: RepresentativeMode,
    /// Drop dead ends that only retrace a road already joining their node to
    /// another node.
    pub prune_covered_dead_ends: bool,
    /// Vertex spacing of the output polylines.
    pub spacing: f64,
    pub seed: u64,
}

impl Default for RoadParams {
    fn default() -> Self {
        RoadParams {
            d_node: 30.0,
            eps_road: 15.0,
            min_road: 5,
            trim_margin: 0.0,
            representative: RepresentativeMode::SmallestTripId,
            prune_covered_dead_ends: true,
            spacing: 5.0,
            seed: 0,
        }
    }
}

impl RoadParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d_node_m", self.d_node),
            ("eps_road_m", self.eps_road),
            ("spacing", self.spacing),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("roads.{name} must be positive, got {v}")));
            }
        }
        if !(self.trim_margin >= 0.0 && self.trim_margin.is_finite()) {
            return Err(Error::Config("roads.trim_margin_m must be non-negative".into()));
        }
        if self.min_road < 1 {
            return Err(Error::Config("roads.min_road must be at least 1".into()));
        }
        Ok(())
    }
}

/// A piece of one trip between two cuts. `None` ends are open.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub trip_id: String,
    pub start: Option<usize>,
    pub end: Option<usize>,
    pub points: Vec<LocalCoord>,
}

/// Cuts a trip at the closest point of every maximal run of points that stay
/// within `d_node` of a node. Node ids are positions in `nodes`.
pub fn split_at_nodes(trip_id: &str, points: &[LocalCoord], nodes: &[LocalCoord], d_node: f64) -> Vec<Segment> {
    if points.is_empty() {
        return Vec::new();
    }
    let index = KdTree::build(nodes);
    // (point index, node, distance) for every run's closest point
    let mut cuts: Vec<(usize, usize, f64)> = Vec::new();
    let mut open_runs: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    let mut near = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        near.clear();
        index.for_each_in_range(p, d_node, |k| near.push(k));
        // close runs of nodes no longer in range
        let ended: Vec<usize> = open_runs.keys().copied().filter(|k| !near.contains(k)).collect();
        for k in ended {
            let (at, d) = open_runs.remove(&k).unwrap();
            cuts.push((at, k, d));
        }
        for &k in &near {
            let d = p.distance(&nodes[k]);
            let entry = open_runs.entry(k).or_insert((i, d));
            if d < entry.1 {
                *entry = (i, d);
            }
        }
    }
    for (k, (at, d)) in open_runs {
        cuts.push((at, k, d));
    }
    // one node per cut point: the closest, then the lowest id
    cuts.sort_by(|a, b| a.0.cmp(&b.0).then(a.2.total_cmp(&b.2)).then(a.1.cmp(&b.1)));
    cuts.dedup_by_key(|c| c.0);

    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut from = 0usize;
    let mut from_node = None;
    for &(at, node, _) in &cuts {
        out.push(Segment {
            trip_id: trip_id.to_string(),
            start: from_node,
            end: Some(node),
            points: points[from..=at].to_vec(),
        });
        from = at;
        from_node = Some(node);
    }
    out.push(Segment {
        trip_id: trip_id.to_string(),
        start: from_node,
        end: None,
        points: points[from..].to_vec(),
    });
    out
}

/// Node pair bounding a segment, ignoring direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupKey {
    Pair(usize, usize),
    Single(usize),
}

impl GroupKey {
    pub fn of(start: Option<usize>, end: Option<usize>) -> Option<GroupKey> {
        match (start, end) {
            (Some(a), Some(b)) => Some(GroupKey::Pair(a.min(b), a.max(b))),
            (Some(a), None) | (None, Some(a)) => Some(GroupKey::Single(a)),
            (None, None) => None,
        }
    }

    pub fn nodes(self) -> (usize, Option<usize>) {
        match self {
            GroupKey::Pair(a, b) => (a, Some(b)),
            GroupKey::Single(a) => (a, None),
        }
    }
}

pub fn group_segments(segments: Vec<Segment>) -> BTreeMap<GroupKey, Vec<Segment>> {
    let mut groups: BTreeMap<GroupKey, Vec<Segment>> = BTreeMap::new();
    for s in segments {
        if let Some(key) = GroupKey::of(s.start, s.end) {
            groups.entry(key).or_default().push(s);
        }
    }
    groups
}

/// An edge before ids are assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct InferredEdge {
    pub from: usize,
    pub to: Option<usize>,
    pub polyline: Vec<LocalCoord>,
    pub support: usize,
}

/// Clusters the trimmed points of one group and returns one edge per dominant
/// cluster.
pub fn infer_edges(key: GroupKey, segments: &[Segment], nodes: &[LocalCoord], p: &RoadParams) -> Vec<InferredEdge> {
    let (a, b) = key.nodes();
    let trim = p.d_node + p.trim_margin;
    let t2 = trim * trim;
    let bounds: Vec<LocalCoord> = std::iter::once(nodes[a]).chain(b.map(|b| nodes[b])).collect();

    let mut pooled = Vec::new();
    let mut owner = Vec::new();
    for (si, s) in segments.iter().enumerate() {
        for q in &s.points {
            if bounds.iter().all(|n| q.distance_sq(n) > t2) {
                pooled.push(*q);
                owner.push(si);
            }
        }
    }
    if pooled.is_empty() {
        return Vec::new();
    }
    let labels = dbscan(&pooled, p.eps_road, p.min_road);
    let n_clusters = labels.iter().filter_map(|l| l.cluster()).max().map_or(0, |m| m + 1);
    if n_clusters == 0 {
        log::debug!("group {key:?}: all {} trimmed points are noise", pooled.len());
        return Vec::new();
    }

    // per segment: count of points in each cluster
    let mut counts = vec![vec![0usize; n_clusters]; segments.len()];
    for (l, &si) in labels.iter().zip(&owner) {
        if let Some(c) = l.cluster() {
            counts[si][c] += 1;
        }
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    for (si, row) in counts.iter().enumerate() {
        let best = row.iter().enumerate().filter(|(_, &n)| n > 0).max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(&x.0)));
        if let Some((c, _)) = best {
            members[c].push(si);
        }
    }

    let mut out = Vec::new();
    for (c, segs) in members.iter().enumerate() {
        if segs.is_empty() {
            continue;
        }
        let mut sizes: Vec<usize> = segs.iter().map(|&si| counts[si][c]).collect();
        sizes.sort_unstable();
        let median = sizes[(sizes.len() - 1) / 2];
        let mut tied: Vec<usize> = segs.iter().copied().filter(|&si| counts[si][c] == median).collect();
        tied.sort_by(|&x, &y| segments[x].trip_id.cmp(&segments[y].trip_id).then(x.cmp(&y)));
        let rep = match p.representative {
            RepresentativeMode::SmallestTripId => tied[0],
            RepresentativeMode::Random => {
                let key_parts = match key {
                    GroupKey::Pair(x, y) => [x as u64, y as u64, c as u64],
                    GroupKey::Single(x) => [x as u64, u64::MAX, c as u64],
                };
                *tied.choose(&mut rng::stream(p.seed, &key_parts)).unwrap()
            }
        };
        let s = &segments[rep];
        let mut line = s.points.clone();
        // orient from the first node of the key
        let forward = match key {
            GroupKey::Pair(..) => s.start == Some(a),
            GroupKey::Single(_) => s.start == Some(a),
        };
        if !forward {
            line.reverse();
        }
        let polyline = resample_equidistant(&line, p.spacing);
        if polyline.len() < 2 {
            continue;
        }
        out.push(InferredEdge {
            from: a,
            to: b,
            polyline,
            support: segs.len(),
        });
    }
    out
}

/// Share of a dead end's points, beyond `d_node` of its node, lying within
/// `eps` of some other polyline.
fn covered_fraction(dead_end: &InferredEdge, others: &[&InferredEdge], node: LocalCoord, d_node: f64, eps: f64) -> f64 {
    let far: Vec<&LocalCoord> = dead_end.polyline.iter().filter(|q| q.distance(&node) > d_node).collect();
    if far.is_empty() {
        return 1.0;
    }
    let covered = far
        .iter()
        .filter(|q| others.iter().any(|o| distance_to_polyline(***q, &o.polyline) <= eps))
        .count();
    covered as f64 / far.len() as f64
}

/// Fraction of a dead end that must retrace another road for it to be pruned.
const DEAD_END_COVERAGE: f64 = 0.9;

/// Assembles the graph: intersections first, then load and drop-off nodes;
/// edges ordered by node pair.
pub fn build_graph(
    trips: &[Trip],
    intersections: &[Intersection],
    action_nodes: &[ActionNode],
    p: &RoadParams,
    origin: Option<GeoCoord>,
) -> Result<RoadGraph> {
    let mut nodes: Vec<Node> = intersections
        .iter()
        .map(|i| (NodeKind::Intersection, i.position))
        .chain(action_nodes.iter().map(|a| (NodeKind::from(a.kind), a.position)))
        .enumerate()
        .map(|(id, (kind, position))| Node {
            node_id: id,
            kind,
            position,
            geo: None,
            altitude: None,
        })
        .collect();
    if let Some(o) = origin {
        for n in &mut nodes {
            n.geo = Some(to_geo(n.position, o));
        }
    }
    let positions: Vec<LocalCoord> = nodes.iter().map(|n| n.position).collect();

    let per_trip: Vec<Vec<Segment>> = trips
        .par_iter()
        .map(|t| split_at_nodes(&t.trip_id, &t.local_points(), &positions, p.d_node))
        .collect();
    let groups = group_segments(per_trip.into_iter().flatten().collect());
    let groups: Vec<(GroupKey, Vec<Segment>)> = groups.into_iter().collect();
    let inferred: Vec<Vec<InferredEdge>> = groups
        .par_iter()
        .map(|(key, segs)| infer_edges(*key, segs, &positions, p))
        .collect();
    let mut inferred: Vec<InferredEdge> = inferred.into_iter().flatten().collect();

    if p.prune_covered_dead_ends {
        let keep: Vec<bool> = inferred
            .iter()
            .map(|e| {
                if e.to.is_some() {
                    return true;
                }
                let others: Vec<&InferredEdge> = inferred
                    .iter()
                    .filter(|o| o.to.is_some() && (o.from == e.from || o.to == Some(e.from)))
                    .collect();
                others.is_empty()
                    || covered_fraction(e, &others, positions[e.from], p.d_node, p.eps_road) < DEAD_END_COVERAGE
            })
            .collect();
        let before = inferred.len();
        let mut k = keep.iter();
        inferred.retain(|_| *k.next().unwrap());
        if inferred.len() < before {
            log::debug!("pruned {} dead ends retracing other roads", before - inferred.len());
        }
    }

    let edges = inferred
        .into_iter()
        .enumerate()
        .map(|(edge_id, e)| Edge {
            edge_id,
            from: e.from,
            to: e.to,
            polyline: e.polyline,
            support: e.support,
        })
        .collect();
    let graph = RoadGraph { nodes, edges };
    graph.check(p.spacing, p.d_node)?;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trips::GpsUpdate;

    fn line(from: LocalCoord, to: LocalCoord, step: f64) -> Vec<LocalCoord> {
        let n = (from.distance(&to) / step).round().max(1.0) as usize;
        (0..=n).map(|k| from.lerp(&to, k as f64 / n as f64)).collect()
    }

    fn path(vertices: &[LocalCoord]) -> Vec<LocalCoord> {
        let mut out = vec![vertices[0]];
        for w in vertices.windows(2) {
            out.extend(line(w[0], w[1], 5.0).into_iter().skip(1));
        }
        out
    }

    fn trip(id: &str, pts: &[LocalCoord]) -> Trip {
        let mut t = Trip::new(id);
        for (k, &q) in pts.iter().enumerate() {
            let mut u = GpsUpdate::new(k as f64, GeoCoord::new(60.0, 10.0), 10.0);
            u.local = q;
            t.updates.push(u);
        }
        t
    }

    #[test]
    fn one_pass_two_segments() {
        let pts = path(&[LocalCoord::new(-200.0, 0.0), LocalCoord::new(200.0, 0.0)]);
        let segs = split_at_nodes("t", &pts, &[LocalCoord::new(0.0, 3.0)], 30.0);
        assert_eq!(segs.len(), 2);
        assert_eq!((segs[0].start, segs[0].end), (None, Some(0)));
        assert_eq!((segs[1].start, segs[1].end), (Some(0), None));
        assert_eq!(segs[0].points.last(), segs[1].points.first());
        assert_eq!(segs[0].points.last(), Some(&LocalCoord::new(0.0, 0.0)));
        // every point in exactly one segment, cut points once per side
        assert_eq!(segs[0].points.len() + segs[1].points.len(), pts.len() + 1);
    }

    #[test]
    fn no_node_nearby() {
        let pts = path(&[LocalCoord::new(-200.0, 0.0), LocalCoord::new(200.0, 0.0)]);
        let segs = split_at_nodes("t", &pts, &[LocalCoord::new(0.0, 300.0)], 30.0);
        assert_eq!(segs.len(), 1);
        assert_eq!((segs[0].start, segs[0].end), (None, None));
        assert_eq!(segs[0].points, pts);
    }

    #[test]
    fn two_nodes_three_segments() {
        let pts = path(&[LocalCoord::new(-200.0, 0.0), LocalCoord::new(200.0, 0.0)]);
        let nodes = [LocalCoord::new(100.0, 0.0), LocalCoord::new(-100.0, 0.0)];
        let segs = split_at_nodes("t", &pts, &nodes, 30.0);
        let bounds: Vec<_> = segs.iter().map(|s| (s.start, s.end)).collect();
        assert_eq!(bounds, vec![(None, Some(1)), (Some(1), Some(0)), (Some(0), None)]);
    }

    #[test]
    fn grouping() {
        let seg = |s, e| Segment {
            trip_id: "t".into(),
            start: s,
            end: e,
            points: vec![LocalCoord::default(); 2],
        };
        let groups = group_segments(vec![seg(Some(0), Some(1)), seg(Some(1), Some(0)), seg(Some(2), None), seg(None, None)]);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[&GroupKey::Pair(0, 1)].len(), 2);
        assert_eq!(groups[&GroupKey::Single(2)].len(), 1);
    }

    fn segments_between(a: LocalCoord, b: LocalCoord, via: Option<LocalCoord>, n: usize, id0: usize) -> Vec<Segment> {
        (0..n)
            .map(|k| {
                let off = (k as f64 - n as f64 / 2.0) * 0.3;
                let mut vs = vec![a];
                if let Some(v) = via {
                    vs.push(LocalCoord::new(v.x, v.y + off));
                }
                vs.push(b);
                let mut pts = path(&vs);
                if k % 2 == 1 {
                    pts.reverse();
                }
                let (s, e) = if k % 2 == 1 { (Some(1), Some(0)) } else { (Some(0), Some(1)) };
                Segment {
                    trip_id: format!("trip-{:03}", id0 + k),
                    start: s,
                    end: e,
                    points: pts,
                }
            })
            .collect()
    }

    #[test]
    fn single_road_one_edge() {
        let nodes = [LocalCoord::new(0.0, 0.0), LocalCoord::new(300.0, 0.0)];
        let segs = segments_between(nodes[0], nodes[1], Some(LocalCoord::new(150.0, 0.0)), 10, 0);
        let edges = infer_edges(GroupKey::Pair(0, 1), &segs, &nodes, &RoadParams::default());
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].support, 10);
        assert_eq!(edges[0].polyline[0], nodes[0]);
        assert_eq!(*edges[0].polyline.last().unwrap(), nodes[1]);
    }

    #[test]
    fn two_parallel_routes_two_edges() {
        let nodes = [LocalCoord::new(0.0, 0.0), LocalCoord::new(300.0, 0.0)];
        let mut segs = segments_between(nodes[0], nodes[1], Some(LocalCoord::new(150.0, 50.0)), 10, 0);
        segs.extend(segments_between(nodes[0], nodes[1], Some(LocalCoord::new(150.0, -50.0)), 10, 10));
        let edges = infer_edges(GroupKey::Pair(0, 1), &segs, &nodes, &RoadParams::default());
        assert_eq!(edges.len(), 2);
        assert!(edges.iter().all(|e| e.support == 10));
        let ys: Vec<f64> = edges.iter().map(|e| e.polyline[e.polyline.len() / 2].y).collect();
        assert!(ys.iter().any(|&y| y > 30.0) && ys.iter().any(|&y| y < -30.0));
    }

    #[test]
    fn dead_end_spur() {
        let nodes = [LocalCoord::new(0.0, 0.0)];
        let segs: Vec<Segment> = (0..6)
            .map(|k| Segment {
                trip_id: format!("t{k}"),
                start: None,
                end: Some(0),
                points: path(&[LocalCoord::new(0.0, 200.0 + k as f64), LocalCoord::new(0.0, 0.0)]),
            })
            .collect();
        let edges = infer_edges(GroupKey::Single(0), &segs, &nodes, &RoadParams::default());
        assert_eq!(edges.len(), 1);
        assert_eq!((edges[0].from, edges[0].to), (0, None));
        assert_eq!(edges[0].polyline[0], nodes[0]);
    }

    #[test]
    fn representative_is_lower_median_then_smallest_id() {
        let nodes = [LocalCoord::new(0.0, 0.0)];
        let piece = |id: &str, len: f64| Segment {
            trip_id: id.into(),
            start: Some(0),
            end: None,
            points: path(&[LocalCoord::new(0.0, 0.0), LocalCoord::new(len, 0.0)]),
        };
        // counts beyond the trim grow with length; lower median is the 150 m piece
        let segs = vec![piece("d", 100.0), piece("c", 150.0), piece("b", 200.0), piece("a", 250.0)];
        let edges = infer_edges(GroupKey::Single(0), &segs, &nodes, &RoadParams::default());
        assert_eq!(edges.len(), 1);
        assert_eq!(*edges[0].polyline.last().unwrap(), LocalCoord::new(150.0, 0.0));

        // equal counts: smallest trip id wins, whatever the input order
        let mut z = piece("z", 120.0);
        let mut y = piece("y", 120.0);
        z.points.iter_mut().for_each(|q| q.y = 1.0);
        y.points.iter_mut().for_each(|q| q.y = 2.0);
        let segs = vec![z, y, piece("x", 300.0)];
        let edges = infer_edges(GroupKey::Single(0), &segs, &nodes, &RoadParams::default());
        assert_eq!(edges[0].polyline[1].y, 2.0);
    }

    #[test]
    fn build_graph_empty_and_straight() {
        let g = build_graph(&[], &[], &[], &RoadParams::default(), None).unwrap();
        assert!(g.nodes.is_empty() && g.edges.is_empty());
        let t = trip("s", &path(&[LocalCoord::new(0.0, 0.0), LocalCoord::new(500.0, 0.0)]));
        let g = build_graph(&[t], &[], &[], &RoadParams::default(), None).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn covered_dead_end_pruned() {
        // node 0 at origin, node 1 at (300, 0); full trips between them and
        // shortened trips that stop 100 m before node 1
        let a = LocalCoord::new(0.0, 0.0);
        let b = LocalCoord::new(300.0, 0.0);
        let mut trips = Vec::new();
        for k in 0..8 {
            let y = 0.2 * k as f64;
            trips.push(trip(&format!("full{k}"), &path(&[LocalCoord::new(0.0, y), LocalCoord::new(300.0, y)])));
            trips.push(trip(&format!("part{k}"), &path(&[LocalCoord::new(-0.0, y), LocalCoord::new(200.0, y)])));
        }
        let actions = [
            ActionNode {
                kind: ActionKind::Load,
                position: a,
                support: 1,
                source_ids: vec![],
            },
            ActionNode {
                kind: ActionKind::Dropoff,
                position: b,
                support: 1,
                source_ids: vec![],
            },
        ];
        let g = build_graph(&trips, &[], &actions, &RoadParams::default(), None).unwrap();
        assert_eq!(g.edges.len(), 1);
        assert_eq!((g.edges[0].from, g.edges[0].to), (0, Some(1)));
        let unpruned = RoadParams {
            prune_covered_dead_ends: false,
            ..Default::default()
        };
        let g = build_graph(&trips, &[], &actions, &unpruned, None).unwrap();
        assert_eq!(g.edges.len(), 2);
    }

    #[test]
    fn check_rejects_bad_graph() {
        let g = RoadGraph {
            nodes: vec![Node {
                node_id: 0,
                kind: NodeKind::Load,
                position: LocalCoord::default(),
                geo: None,
                altitude: None,
            }],
            edges: vec![Edge {
                edge_id: 0,
                from: 0,
                to: Some(7),
                polyline: vec![LocalCoord::default(), LocalCoord::new(5.0, 0.0)],
                support: 1,
            }],
        };
        assert!(g.check(5.0, 30.0).is_err());
    }
}

use super::*;
use crate::geo::to_local;
use crate::polyline::distance_to_polyline;
use crate::roads::{Edge, Node, NodeKind};
use crate::trips::{self, write_csv, PreprocessParams};

fn site(seed: u64) -> RoadGraph {
    let p = SiteParams {
        n_intersections: 3,
        n_load: 2,
        n_dump: 1,
        width_m: 1200.0,
        height_m: 1000.0,
        ..SiteParams::default()
    };
    generate_site(seed, &p, DEFAULT_ORIGIN).unwrap()
}

fn scenario(seed: u64, n_trips: usize) -> SiteScenario {
    SiteScenario {
        seed,
        origin: DEFAULT_ORIGIN,
        ground_truth: site(seed),
        model: TripModel {
            n_trips,
            ..TripModel::default()
        },
    }
}

fn moving_fixes(trips: &[crate::trips::Trip]) -> Vec<&crate::trips::GpsUpdate> {
    trips.iter().flat_map(|t| t.updates.iter()).filter(|u| u.speed_kmh > 0.0).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn noise_free_fixes_lie_on_roads() {
    let mut s = scenario(5, 20);
    s.model.noise = NoiseModel {
        jitter_sigma_m: 0.0,
        endpoint_noise_m: 0.0,
        ..NoiseModel::default()
    };
    let trips = simulate_trips(&s).unwrap();
    for u in trips.iter().flat_map(|t| &t.updates) {
        let p = to_local(u.geo, s.origin);
        let d = s
            .ground_truth
            .edges
            .iter()
            .map(|e| distance_to_polyline(p, &e.polyline))
            .fold(f64::INFINITY, f64::min);
        assert!(d < 0.01, "fix {d} m off the roads");
    }
}

#[test]
fn identical_scenarios_give_identical_bytes() {
    let s = scenario(9, 15);
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_csv(&simulate_trips(&s).unwrap(), &mut a).unwrap();
    write_csv(&simulate_trips(&s).unwrap(), &mut b).unwrap();
    assert_eq!(a, b);
    let mut c = Vec::new();
    write_csv(&simulate_trips(&scenario(10, 15)).unwrap(), &mut c).unwrap();
    assert_ne!(a, c);
}

#[test]
fn speed_and_cadence_statistics() {
    let s = scenario(1, 200);
    let trips = simulate_trips(&s).unwrap();
    let speeds: Vec<f64> = moving_fixes(&trips).iter().map(|u| u.speed_kmh).collect();
    let med = median(speeds.clone());
    assert!((med / 8.33 - 1.0).abs() < 0.2, "speed median {med}");
    assert!(speeds.iter().all(|&v| v <= 25.93 + 0.01));
    let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
    assert!((mean / 9.36 - 1.0).abs() < 0.2, "speed mean {mean}");
    let steps: Vec<f64> = trips
        .iter()
        .flat_map(|t| t.updates.windows(2).map(|w| w[1].timestamp - w[0].timestamp))
        .collect();
    let dt = median(steps);
    assert!((dt / 2.0 - 1.0).abs() < 0.2, "cadence median {dt}");
}

#[test]
fn events_sit_on_fixes_near_their_nodes() {
    let s = scenario(2, 30);
    let trips = simulate_trips(&s).unwrap();
    let near_kind = |g: GeoCoord, kind: NodeKind| {
        let p = to_local(g, s.origin);
        s.ground_truth
            .nodes
            .iter()
            .filter(|n| n.kind == kind)
            .any(|n| n.position.distance(&p) < 15.0)
    };
    for t in &trips {
        let load = t.load_event.unwrap();
        let drop = t.dropoff_event.unwrap();
        assert!(near_kind(load.geo, NodeKind::Load));
        assert!(near_kind(drop.geo, NodeKind::Dropoff));
        assert!(t.updates.iter().any(|u| u.timestamp == load.timestamp && u.geo == load.geo));
        assert!(load.timestamp < drop.timestamp);
        assert_eq!(t.task_id.strip_prefix("task-"), t.excavator_id.as_deref().and_then(|e| e.strip_prefix("excavator-")));
    }
}

#[test]
fn zero_trips_is_empty() {
    assert!(simulate_trips(&scenario(3, 0)).unwrap().is_empty());
}

fn straight(len: f64) -> RoadGraph {
    let line: Vec<LocalCoord> = (0..=(len / 5.0) as usize).map(|k| LocalCoord::new(5.0 * k as f64, 0.0)).collect();
    let node = |id, kind, x| Node {
        node_id: id,
        kind,
        position: LocalCoord::new(x, 0.0),
        geo: None,
        altitude: None,
    };
    RoadGraph {
        nodes: vec![node(0, NodeKind::Load, 0.0), node(1, NodeKind::Dropoff, len)],
        edges: vec![Edge {
            edge_id: 0,
            from: 0,
            to: Some(1),
            polyline: line,
            support: 0,
        }],
    }
}

#[test]
fn tunnel_removes_fixes_and_leaves_a_chord() {
    let mut gt = straight(600.0);
    // A kink in the middle so the chord visibly cuts the corner.
    for p in gt.edges[0].polyline.iter_mut() {
        p.y = 100.0 - (p.x - 300.0).abs() / 3.0;
    }
    gt.nodes[0].position = gt.edges[0].polyline[0];
    gt.nodes[1].position = *gt.edges[0].polyline.last().unwrap();
    gt.edges[0].polyline = crate::polyline::resample_equidistant(&gt.edges[0].polyline, SITE_SPACING);
    let center = LocalCoord::new(300.0, 100.0);
    let s = SiteScenario {
        seed: 4,
        origin: DEFAULT_ORIGIN,
        ground_truth: gt,
        model: TripModel {
            n_trips: 5,
            noise: NoiseModel {
                jitter_sigma_m: 0.0,
                endpoint_noise_m: 0.0,
                tunnels: vec![Tunnel {
                    center,
                    radius_m: 60.0,
                    trip_fraction: 1.0,
                }],
                ..NoiseModel::default()
            },
            ..TripModel::default()
        },
    };
    let mut trips = simulate_trips(&s).unwrap();
    for u in trips.iter().flat_map(|t| &t.updates) {
        assert!(to_local(u.geo, s.origin).distance(&center) > 60.0);
    }
    trips::project_trips(&mut trips, s.origin);
    let p = PreprocessParams::default();
    let t = trips::clean_trip(trips.remove(0), &p).kept().unwrap();
    let dense = trips::interpolate_trip(t, &p);
    let on_chord = dense
        .local_points()
        .iter()
        .filter(|q| q.distance(&center) < 60.0)
        .map(|q| (q.y - 100.0).abs())
        .fold(0.0, f64::max);
    // The apex is 100 m up; the chord passes about 20 m below it.
    assert!(on_chord > 10.0);
}

#[test]
fn disconnected_site_is_an_error() {
    let mut gt = straight(300.0);
    let far = straight(300.0);
    gt.nodes.push(Node {
        node_id: 2,
        kind: NodeKind::Dropoff,
        position: LocalCoord::new(2000.0, 0.0),
        ..far.nodes[1].clone()
    });
    let s = SiteScenario {
        seed: 1,
        origin: DEFAULT_ORIGIN,
        ground_truth: gt,
        model: TripModel {
            n_trips: 20,
            ..TripModel::default()
        },
    };
    assert!(matches!(simulate_trips(&s), Err(Error::Disconnected { .. })));
}

#[test]
fn labels_are_the_intersections() {
    let g = site(7);
    let labels = intersection_labels(&g, DEFAULT_ORIGIN);
    assert_eq!(labels.len(), 3);
    let local = labels.to_local(Some(DEFAULT_ORIGIN)).unwrap();
    for (l, n) in local.iter().zip(g.intersections()) {
        assert!(l.distance(&n.position) < 1e-6);
    }
}

//! Graph serialisation: GeoJSON, Graphviz DOT and CSV tables.
//!
//! GeoJSON carries positions twice: lon/lat geometry for map tools, and the
//! local-frame coordinates as properties so that reading a file back gives
//! the identical graph. The frame origin is stored as a top-level `origin`
//! member.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geo::{to_geo, GeoCoord, LocalCoord};
use crate::polyline::length;
use crate::roads::{Edge, Node, NodeKind, RoadGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Geojson,
    Dot,
    Csv,
}

fn lonlat(g: GeoCoord) -> Value {
    json!([g.lon, g.lat])
}

fn xy(p: LocalCoord) -> Value {
    json!([p.x, p.y])
}

/// Geometry coordinates: lon/lat when the frame origin is known, otherwise
/// local metres.
fn coords(p: LocalCoord, origin: Option<GeoCoord>) -> Value {
    match origin {
        Some(o) => lonlat(to_geo(p, o)),
        None => xy(p),
    }
}

pub fn geojson_value(graph: &RoadGraph, origin: Option<GeoCoord>) -> Value {
    let mut features = Vec::with_capacity(graph.nodes.len() + graph.edges.len());
    for n in &graph.nodes {
        let geometry = match n.geo {
            Some(g) => lonlat(g),
            None => coords(n.position, origin),
        };
        let mut props = Map::new();
        props.insert("node_id".into(), json!(n.node_id));
        props.insert("kind".into(), json!(n.kind.as_str()));
        props.insert("x".into(), json!(n.position.x));
        props.insert("y".into(), json!(n.position.y));
        if let Some(a) = n.altitude {
            props.insert("altitude".into(), json!(a));
        }
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "Point", "coordinates": geometry },
            "properties": props,
        }));
    }
    for e in &graph.edges {
        let line: Vec<Value> = e.polyline.iter().map(|&p| coords(p, origin)).collect();
        let local: Vec<Value> = e.polyline.iter().map(|&p| xy(p)).collect();
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": line },
            "properties": {
                "edge_id": e.edge_id,
                "from": e.from,
                "to": e.to,
                "support": e.support,
                "length_m": length(&e.polyline),
                "local": local,
            },
        }));
    }
    let mut root = Map::new();
    root.insert("type".into(), json!("FeatureCollection"));
    root.insert(
        "origin".into(),
        origin.map_or(Value::Null, |o| json!({ "lat": o.lat, "lon": o.lon })),
    );
    root.insert("features".into(), Value::Array(features));
    Value::Object(root)
}

pub fn write_geojson<W: Write>(graph: &RoadGraph, origin: Option<GeoCoord>, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &geojson_value(graph, origin))?;
    out.write_all(b"\n").map_err(|e| Error::io("<geojson output>", e))
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidInput(format!("geojson: {}", msg.into()))
}

fn num(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| bad(format!("{what} is not a number")))
}

fn pair(v: &Value, what: &str) -> Result<(f64, f64)> {
    match v.as_array().map(Vec::as_slice) {
        Some([a, b, ..]) => Ok((num(a, what)?, num(b, what)?)),
        _ => Err(bad(format!("{what} is not a coordinate pair"))),
    }
}

fn index(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| bad(format!("{what} is not a non-negative integer")))
}

/// Reads a file written by [`write_geojson`].
pub fn read_geojson<R: Read>(input: R) -> Result<(RoadGraph, Option<GeoCoord>)> {
    let root: Value = serde_json::from_reader(input)?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(bad("not a FeatureCollection"));
    }
    let origin = match root.get("origin") {
        None | Some(Value::Null) => None,
        Some(o) => Some(GeoCoord::new(
            num(&o["lat"], "origin.lat")?,
            num(&o["lon"], "origin.lon")?,
        )),
    };
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing features"))?;
    let mut graph = RoadGraph::default();
    for f in features {
        let props = &f["properties"];
        let geometry = &f["geometry"];
        match geometry["type"].as_str() {
            Some("Point") => {
                let kind = match props["kind"].as_str() {
                    Some("intersection") => NodeKind::Intersection,
                    Some("load") => NodeKind::Load,
                    Some("dropoff") => NodeKind::Dropoff,
                    other => return Err(bad(format!("unknown node kind {other:?}"))),
                };
                let (a, b) = pair(&geometry["coordinates"], "point coordinates")?;
                graph.nodes.push(Node {
                    node_id: index(&props["node_id"], "node_id")?,
                    kind,
                    position: LocalCoord::new(num(&props["x"], "x")?, num(&props["y"], "y")?),
                    geo: origin.map(|_| GeoCoord::new(b, a)),
                    altitude: props.get("altitude").map(|v| num(v, "altitude")).transpose()?,
                });
            }
            Some("LineString") => {
                let local = props["local"]
                    .as_array()
                    .ok_or_else(|| bad("edge without local coordinates"))?;
                let polyline = local
                    .iter()
                    .map(|p| pair(p, "edge vertex").map(|(x, y)| LocalCoord::new(x, y)))
                    .collect::<Result<Vec<_>>>()?;
                let to = match &props["to"] {
                    Value::Null => None,
                    v => Some(index(v, "to")?),
                };
                graph.edges.push(Edge {
                    edge_id: index(&props["edge_id"], "edge_id")?,
                    from: index(&props["from"], "from")?,
                    to,
                    polyline,
                    support: index(&props["support"], "support")?,
                });
            }
            other => return Err(bad(format!("unsupported geometry {other:?}"))),
        }
    }
    Ok((graph, origin))
}

pub fn write_dot<W: Write>(graph: &RoadGraph, mut out: W) -> Result<()> {
    let mut s = String::from("graph roads {\n");
    for n in &graph.nodes {
        let shape = match n.kind {
            NodeKind::Intersection => "circle",
            NodeKind::Load => "box",
            NodeKind::Dropoff => "diamond",
        };
        let _ = writeln!(
            s,
            "  n{} [kind=\"{}\", shape={shape}, x={}, y={}];",
            n.node_id,
            n.kind.as_str(),
            n.position.x,
            n.position.y
        );
    }
    for e in &graph.edges {
        let target = match e.to {
            Some(t) => format!("n{t}"),
            None => {
                let end = e.polyline.last().copied().unwrap_or_default();
                let _ = writeln!(
                    s,
                    "  end{} [kind=\"dead_end\", shape=point, x={}, y={}];",
                    e.edge_id, end.x, end.y
                );
                format!("end{}", e.edge_id)
            }
        };
        let _ = writeln!(
            s,
            "  n{} -- {target} [edge_id={}, support={}, length_m={:.1}];",
            e.from,
            e.edge_id,
            e.support,
            length(&e.polyline)
        );
    }
    s.push_str("}\n");
    out.write_all(s.as_bytes()).map_err(|e| Error::io("<dot output>", e))
}

pub fn write_nodes_csv<W: Write>(graph: &RoadGraph, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node_id", "kind", "x", "y", "lat", "lon"])?;
    for n in &graph.nodes {
        let (lat, lon) = n
            .geo
            .map_or((String::new(), String::new()), |g| (g.lat.to_string(), g.lon.to_string()));
        w.write_record([
            n.node_id.to_string(),
            n.kind.as_str().to_string(),
            n.position.x.to_string(),
            n.position.y.to_string(),
            lat,
            lon,
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}

/// One row per edge; `points` holds the local polyline as `x y;x y;...`.
pub fn write_edges_csv<W: Write>(graph: &RoadGraph, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["edge_id", "from", "to", "support", "length_m", "points"])?;
    for e in &graph.edges {
        let points: Vec<String> = e.polyline.iter().map(|p| format!("{} {}", p.x, p.y)).collect();
        w.write_record([
            e.edge_id.to_string(),
            e.from.to_string(),
            e.to.map(|t| t.to_string()).unwrap_or_default(),
            e.support.to_string(),
            format!("{:.3}", length(&e.polyline)),
            points.join(";"),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes the graph into `dir` and returns the files written:
/// `graph.geojson`, `graph.dot`, or `nodes.csv` plus `edges.csv`.
pub fn export_graph(graph: &RoadGraph, origin: Option<GeoCoord>, format: ExportFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = match format {
        ExportFormat::Geojson => {
            let p = dir.join("graph.geojson");
            write_geojson(graph, origin, create(&p)?)?;
            vec![p]
        }
        ExportFormat::Dot => {
            let p = dir.join("graph.dot");
            write_dot(graph, create(&p)?)?;
            vec![p]
        }
        ExportFormat::Csv => {
            let nodes = dir.join("nodes.csv");
            let edges = dir.join("edges.csv");
            write_nodes_csv(graph, create(&nodes)?)?;
            write_edges_csv(graph, create(&edges)?)?;
            vec![nodes, edges]
        }
    };
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(origin: Option<GeoCoord>) -> RoadGraph {
        let pos = [LocalCoord::new(10.0, 20.0), LocalCoord::new(110.0, 20.0)];
        let nodes = vec![
            Node {
                node_id: 0,
                kind: NodeKind::Intersection,
                position: pos[0],
                geo: origin.map(|o| to_geo(pos[0], o)),
                altitude: None,
            },
            Node {
                node_id: 1,
                kind: NodeKind::Load,
                position: pos[1],
                geo: origin.map(|o| to_geo(pos[1], o)),
                altitude: Some(12.5),
            },
        ];
        let line: Vec<LocalCoord> = (0..=20).map(|k| LocalCoord::new(10.0 + 5.0 * k as f64, 20.1)).collect();
        let dead: Vec<LocalCoord> = (0..=8).map(|k| LocalCoord::new(10.0, 20.0 + 5.0 * k as f64 + 0.3)).collect();
        RoadGraph {
            nodes,
            edges: vec![
                Edge {
                    edge_id: 0,
                    from: 0,
                    to: Some(1),
                    polyline: line,
                    support: 7,
                },
                Edge {
                    edge_id: 1,
                    from: 0,
                    to: None,
                    polyline: dead,
                    support: 3,
                },
            ],
        }
    }

    #[test]
    fn empty_graph_is_empty_collection() {
        let v = geojson_value(&RoadGraph::default(), None);
        assert_eq!(v["type"], "FeatureCollection");
        assert_eq!(v["features"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn geojson_round_trip_is_exact() {
        let o = GeoCoord::new(59.8, 10.3);
        for origin in [Some(o), None] {
            let g = sample(origin);
            let mut buf = Vec::new();
            write_geojson(&g, origin, &mut buf).unwrap();
            let (back, back_origin) = read_geojson(buf.as_slice()).unwrap();
            assert_eq!(back, g);
            assert_eq!(back_origin, origin);
        }
    }

    #[test]
    fn single_dead_end_gives_two_features() {
        let mut g = sample(None);
        g.nodes.truncate(1);
        g.edges.remove(0);
        let v = geojson_value(&g, None);
        let features = v["features"].as_array().unwrap();
        assert_eq!(features.len(), 2);
        let first = &features[1]["geometry"]["coordinates"][0];
        let d = LocalCoord::new(first[0].as_f64().unwrap(), first[1].as_f64().unwrap()).distance(&g.nodes[0].position);
        assert!(d <= 30.0);
        assert!(features[1]["properties"]["to"].is_null());
    }

    #[test]
    fn geometry_is_lon_lat() {
        let o = GeoCoord::new(59.8, 10.3);
        let v = geojson_value(&sample(Some(o)), Some(o));
        let c = &v["features"][0]["geometry"]["coordinates"];
        assert!((c[0].as_f64().unwrap() - 10.3).abs() < 0.01);
        assert!((c[1].as_f64().unwrap() - 59.8).abs() < 0.01);
    }

    #[test]
    fn dot_lists_kinds_and_dead_ends() {
        let mut buf = Vec::new();
        write_dot(&sample(None), &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("n0 [kind=\"intersection\""));
        assert!(s.contains("n1 [kind=\"load\""));
        assert!(s.contains("n0 -- n1 [edge_id=0, support=7"));
        assert!(s.contains("n0 -- end1"));
    }

    #[test]
    fn csv_tables() {
        let g = sample(None);
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        write_nodes_csv(&g, &mut nodes).unwrap();
        write_edges_csv(&g, &mut edges).unwrap();
        let nodes = String::from_utf8(nodes).unwrap();
        let edges = String::from_utf8(edges).unwrap();
        assert_eq!(nodes.lines().count(), 3);
        assert!(nodes.starts_with("node_id,kind,x,y,lat,lon\n0,intersection,10,20,,\n"));
        assert_eq!(edges.lines().count(), 3);
        assert!(edges.lines().nth(2).unwrap().starts_with("1,0,,3,40.000,"));
    }

    #[test]
    fn rejects_other_documents() {
        assert!(read_geojson(&b"{\"type\":\"Feature\"}"[..]).is_err());
        assert!(read_geojson(&b"not json"[..]).is_err());
    }
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rgg_core::export::write_geojson;
use rgg_core::geo::LocalCoord;
use rgg_core::roads::{Node, NodeKind, RoadGraph};

const SMALL_SITE: &str = "
[synth.site]
n_intersections = 3
n_load = 2
n_dump = 1
width_m = 1200.0
height_m = 1000.0

[synth.trips]
n_trips = 120
";

fn rgg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgg")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = rgg(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Dir {
        Dir(tempfile::tempdir().unwrap())
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.0.path().join(rel)
    }

    fn arg(&self, rel: &str) -> String {
        self.path(rel).to_string_lossy().into_owned()
    }

    fn write(&self, rel: &str, text: &str) -> String {
        std::fs::write(self.path(rel), text).unwrap();
        self.arg(rel)
    }
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn synth_infer_eval_chain() {
    let d = Dir::new();
    let cfg = d.write("site.toml", SMALL_SITE);
    ok(&["synth", "--config", &cfg, "--seed", "1", "--out", &d.arg("s")]);
    for f in ["trips.csv", "labels.csv", "ground_truth.geojson"] {
        assert!(d.path("s").join(f).exists(), "{f}");
    }
    ok(&["infer", &d.arg("s/trips.csv"), "--config", &cfg, "--seed", "1", "--out", &d.arg("i")]);
    let report: serde_json::Value = serde_json::from_str(&read(&d.path("i/report.json"))).unwrap();
    assert_eq!(report["input_trips"], 120);
    assert!(d.path("i/timings.json").exists());
    let csv = ok(&[
        "eval",
        &d.arg("i/graph.geojson"),
        &d.arg("s/labels.csv"),
        "--tolerances",
        "10,20,30,40,50",
        "--out",
        &d.arg("e"),
        "--plot",
    ]);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "tolerance_m,precision,recall,tp,fp,fn");
    assert_eq!(rows.len(), 6);
    assert!(rows[2].starts_with("20,1.000000,1.000000,"), "{csv}");
    assert!(d.path("e/pr.svg").exists());
}

#[test]
fn same_seed_same_files() {
    let d = Dir::new();
    let cfg = d.write("site.toml", SMALL_SITE);
    for out in ["a", "b"] {
        ok(&["synth", "--config", &cfg, "--seed", "4", "--out", &d.arg(out)]);
    }
    for f in ["trips.csv", "labels.csv"] {
        assert_eq!(read(&d.path("a").join(f)), read(&d.path("b").join(f)), "{f}");
    }
}

#[test]
fn zero_trips_gives_empty_file_and_a_clean_infer_failure() {
    let d = Dir::new();
    let cfg = d.write("site.toml", &format!("{SMALL_SITE}\n").replace("n_trips = 120", "n_trips = 0"));
    ok(&["synth", "--config", &cfg, "--out", &d.arg("s")]);
    let trips = read(&d.path("s/trips.csv"));
    assert_eq!(trips.lines().count(), 1, "header only");
    assert_eq!(read(&d.path("s/labels.csv")).lines().count(), 4);

    let out = rgg(&["infer", &d.arg("s/trips.csv"), "--out", &d.arg("i")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no trips"));
    assert!(!d.path("i").exists(), "no partial outputs");
}

#[test]
fn config_errors_exit_with_2() {
    let d = Dir::new();
    let trips = d.write("t.csv", "trip_id,timestamp,lat,lon,speed_kmh\n");
    for text in ["[roads]\nd_nod_m = 30.0\n", "[validation]\nradii = []\n", "not toml ="] {
        let cfg = d.write("bad.toml", text);
        let out = rgg(&["infer", &trips, "--config", &cfg, "--out", &d.arg("o")]);
        assert_eq!(out.status.code(), Some(2), "{text}");
    }
    let out = rgg(&["infer", "--out", &d.arg("o")]);
    assert_eq!(out.status.code(), Some(2), "missing input");
}

#[test]
fn eval_identical_sets_is_perfect() {
    let d = Dir::new();
    let graph = RoadGraph {
        nodes: [(0.0, 0.0), (100.0, 50.0)]
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Node {
                node_id: i,
                kind: NodeKind::Intersection,
                position: LocalCoord::new(x, y),
                geo: None,
                altitude: None,
            })
            .collect(),
        edges: Vec::new(),
    };
    write_geojson(&graph, None, std::fs::File::create(d.path("g.geojson")).unwrap()).unwrap();
    let labels = d.write("l.csv", "x,y\n0,0\n100,50\n");
    let csv = ok(&["eval", &d.arg("g.geojson"), &labels, "--out", &d.arg("e")]);
    for row in csv.lines().skip(1) {
        assert!(row.contains(",1.000000,1.000000,2,0,0"), "{row}");
    }

    // Lat/lon labels cannot be placed against a graph without an origin.
    let geo = d.write("geo.csv", "lat,lon\n59.8,10.3\n");
    let out = rgg(&["eval", &d.arg("g.geojson"), &geo, "--out", &d.arg("e")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frame mismatch"));
}

#[test]
fn export_and_plot() {
    let d = Dir::new();
    let cfg = d.write("site.toml", SMALL_SITE);
    ok(&["synth", "--config", &cfg, "--out", &d.arg("s")]);
    let gt = d.arg("s/ground_truth.geojson");
    ok(&["export", &gt, "--format", "dot", "--out", &d.arg("x")]);
    assert!(read(&d.path("x/graph.dot")).starts_with("graph roads {"));
    ok(&["export", &gt, "--format", "csv", "--out", &d.arg("x")]);
    assert!(read(&d.path("x/nodes.csv")).starts_with("node_id,kind,x,y,lat,lon"));
    assert!(read(&d.path("x/edges.csv")).starts_with("edge_id,from,to,support,length_m,points"));

    ok(&["plot", &d.arg("s/trips.csv"), "--labels", &d.arg("s/labels.csv"), "--out", &d.arg("p")]);
    let svg = read(&d.path("p/plot.svg"));
    assert!(svg.starts_with("<svg") && svg.contains("id=\"heatmap\"") && svg.contains("id=\"truth\""));

    ok(&["infer", &d.arg("s/trips.csv"), "--debug", "--format", "csv", "--out", &d.arg("i")]);
    assert!(read(&d.path("i/grid.csv")).starts_with("i,j,cx,cy,median_phi,count,delta_phi"));
    assert!(d.path("i/candidates.json").exists() && d.path("i/edges.csv").exists());
}

#[test]
fn log_level_comes_from_the_environment() {
    let d = Dir::new();
    let cfg = d.write("site.toml", SMALL_SITE);
    let out = Command::new(env!("CARGO_BIN_EXE_rgg"))
        .args(["synth", "--config", &cfg, "--out", &d.arg("s")])
        .env("RGG_LOG", "off")
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_rgg"))
        .args(["infer", &d.arg("s/trips.csv"), "--out", &d.arg("i")])
        .env("RGG_LOG", "info")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("INFO"));
}

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rgg_core::config::Config;
use rgg_core::eval::{pr_curve, read_labels, write_labels, write_pr_csv, MatchStrategy};
use rgg_core::export::{export_graph, read_geojson, write_geojson, ExportFormat};
use rgg_core::geo::LocalCoord;
use rgg_core::heading_grid::write_grid_csv;
use rgg_core::pipeline::{infer, with_workers};
use rgg_core::plot::{render_pr_svg, render_svg, Layers};
use rgg_core::synth::{generate_site, intersection_labels, simulate_trips, SiteScenario};
use rgg_core::trips::{parse_updates, write_csv, InputFormat, Trip};
use rgg_core::{Error, Result};

#[derive(Parser)]
#[command(name = "rgg", version, about = "Infer construction-site road graphs from GPS trips")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core. Overrides `run.workers`.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory. Overrides `run.out_dir`; defaults to `.`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "geojson")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Geojson,
    Dot,
    Csv,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Geojson => ExportFormat::Geojson,
            Format::Dot => ExportFormat::Dot,
            Format::Csv => ExportFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Greedy,
    Hungarian,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a trip file (CSV or JSON lines).
    Infer {
        /// Trip file; defaults to `run.input` from the config.
        input: Option<PathBuf>,
        /// Also write the heading grid and per-candidate validation details.
        #[arg(long)]
        debug: bool,
    },
    /// Precision and recall of a graph's intersections against labels.
    Eval {
        /// GeoJSON graph written by `infer`.
        graph: PathBuf,
        /// Label CSV with `x,y` or `lat,lon` columns.
        labels: PathBuf,
        /// Comma-separated matching tolerances in metres.
        #[arg(long, value_delimiter = ',', default_values_t = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0])]
        tolerances: Vec<f64>,
        #[arg(long, value_enum, default_value = "greedy")]
        strategy: Strategy,
        /// Also render the curve as `pr.svg`.
        #[arg(long)]
        plot: bool,
    },
    /// Generate a synthetic site, its trips and intersection labels.
    Synth,
    /// Convert a GeoJSON graph to another format.
    Export {
        graph: PathBuf,
    },
    /// Run the pipeline and render the heat map with overlays as SVG.
    Plot {
        input: Option<PathBuf>,
        /// Ground-truth labels to draw as crosses.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = 1200.0)]
        size: f64,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_string(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_config(g: &Global) -> Result<Config> {
    let mut c = match &g.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = g.seed {
        c.run.seed = s;
    }
    if let Some(w) = g.workers {
        c.run.workers = w;
    }
    if let Some(o) = &g.out {
        c.run.out_dir = Some(o.clone());
    }
    Ok(c)
}

fn out_dir(c: &Config) -> Result<PathBuf> {
    let dir = c.run.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn read_trips(input: Option<PathBuf>, c: &Config) -> Result<Vec<Trip>> {
    let path = input
        .or_else(|| c.run.input.clone())
        .ok_or_else(|| Error::Config("no input file: pass one or set run.input".into()))?;
    let format = InputFormat::from_path(&path)
        .ok_or_else(|| Error::InvalidInput(format!("{}: expected a .csv or .jsonl file", path.display())))?;
    let report = parse_updates(open(&path)?, format)?;
    for m in &report.malformed {
        log::warn!("{}:{}: skipped row: {}", path.display(), m.line, m.reason);
    }
    log::info!("read {} trips from {}", report.trips.len(), path.display());
    Ok(report.trips)
}

fn cmd_infer(c: &Config, input: Option<PathBuf>, format: ExportFormat, debug: bool) -> Result<()> {
    let trips = read_trips(input, c)?;
    let run = with_workers(c.run.workers, || infer(trips, c))??;
    // Nothing is written until every stage has succeeded.
    let dir = out_dir(c)?;
    for f in export_graph(&run.graph, Some(run.origin), format, &dir)? {
        log::info!("wrote {}", f.display());
    }
    let mut report = serde_json::to_string_pretty(&run.report)?;
    report.push('\n');
    write_string(&dir.join("report.json"), &report)?;
    let timings: serde_json::Map<String, serde_json::Value> =
        run.timings.iter().map(|(k, v)| (k.to_string(), (*v).into())).collect();
    write_string(&dir.join("timings.json"), &serde_json::to_string_pretty(&timings)?)?;
    if debug {
        write_grid_csv(&run.grid, &run.field, create(&dir.join("grid.csv"))?)?;
        let mut w = create(&dir.join("candidates.json"))?;
        serde_json::to_writer_pretty(&mut w, &run.validation.reports)?;
        w.flush().map_err(|e| Error::io(dir.join("candidates.json"), e))?;
    }
    println!(
        "{} intersections, {} load, {} drop-off, {} edges",
        run.report.intersections, run.report.load_nodes, run.report.dropoff_nodes, run.report.edges
    );
    Ok(())
}

fn cmd_eval(c: &Config, graph: &Path, labels: &Path, tolerances: &[f64], strategy: Strategy, plot: bool) -> Result<()> {
    let (graph, origin) = read_geojson(open(graph)?)?;
    let actual = read_labels(open(labels)?)?.to_local(origin)?;
    let predicted: Vec<LocalCoord> = graph.intersections().map(|n| n.position).collect();
    let strategy = match strategy {
        Strategy::Greedy => MatchStrategy::Greedy,
        Strategy::Hungarian => MatchStrategy::Hungarian,
    };
    let curve = with_workers(c.run.workers, || pr_curve(&predicted, &actual, tolerances, strategy))??;
    let dir = out_dir(c)?;
    write_pr_csv(&curve, create(&dir.join("pr.csv"))?)?;
    if plot {
        write_string(&dir.join("pr.svg"), &render_pr_svg(&curve))?;
    }
    write_pr_csv(&curve, std::io::stdout().lock())
}

fn cmd_synth(c: &Config) -> Result<()> {
    let seed = c.run.seed;
    let origin = c.synth.origin();
    let ground_truth = generate_site(seed, &c.synth.site, origin)?;
    let scenario = SiteScenario {
        seed,
        origin,
        ground_truth,
        model: c.synth.trips.clone(),
    };
    scenario.validate()?;
    let trips = with_workers(c.run.workers, || simulate_trips(&scenario))??;
    let dir = out_dir(c)?;
    write_csv(&trips, create(&dir.join("trips.csv"))?)?;
    write_labels(
        &intersection_labels(&scenario.ground_truth, origin),
        create(&dir.join("labels.csv"))?,
    )?;
    write_geojson(&scenario.ground_truth, Some(origin), create(&dir.join("ground_truth.geojson"))?)?;
    println!(
        "{} trips over {} nodes and {} roads",
        trips.len(),
        scenario.ground_truth.nodes.len(),
        scenario.ground_truth.edges.len()
    );
    Ok(())
}

fn cmd_export(c: &Config, graph: &Path, format: ExportFormat) -> Result<()> {
    let (graph, origin) = read_geojson(open(graph)?)?;
    for f in export_graph(&graph, origin, format, &out_dir(c)?)? {
        println!("{}", f.display());
    }
    Ok(())
}

fn cmd_plot(c: &Config, input: Option<PathBuf>, labels: Option<PathBuf>, size: f64) -> Result<()> {
    let trips = read_trips(input, c)?;
    let run = with_workers(c.run.workers, || infer(trips, c))??;
    let truth = match labels {
        Some(p) => read_labels(open(&p)?)?.to_local(Some(run.origin))?,
        None => Vec::new(),
    };
    let layers = Layers {
        grid: Some((&run.grid, &run.field)),
        threshold: Some(c.candidates().delta_phi_thr),
        candidates: &run.validation.reports,
        graph: Some(&run.graph),
        truth: &truth,
    };
    let path = out_dir(c)?.join("plot.svg");
    write_string(&path, &render_svg(&layers, size))?;
    println!("{}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let c = load_config(&cli.global)?;
    let format = cli.global.format.into();
    match cli.command {
        Command::Infer { input, debug } => cmd_infer(&c, input, format, debug),
        Command::Eval {
            graph,
            labels,
            tolerances,
            strategy,
            plot,
        } => cmd_eval(&c, &graph, &labels, &tolerances, strategy, plot),
        Command::Synth => cmd_synth(&c),
        Command::Export { graph } => cmd_export(&c, &graph, format),
        Command::Plot { input, labels, size } => cmd_plot(&c, input, labels, size),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RGG_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ladderbus::commands::read_graph_file;
use ladderbus::report::{build_report, report_json, report_text};
use ladderbus::state::CONFIG_FILE;
use ladderbus::sweep::{parse_csv, run_sweep, write_csv};
use ladderbus::{default_coefficients, CliError, Config, PipelineState, RunDir, Runner};
use ladderbus_core::grouping::Algorithm;

/// Maps cluster graphs onto a segmented ladder bus, groups the routed
/// connections into switching scenarios and compiles controller programs.
#[derive(Parser)]
#[command(name = "ladderbus", version)]
struct Cli {
    /// TOML configuration; defaults to `<dir>/config.toml` when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DirArgs {
    /// Run directory.
    #[arg(long, short, default_value = "run")]
    dir: PathBuf,
}

#[derive(Args, Clone, Default)]
struct GraphArgs {
    /// Cluster-graph document to use instead of a synthetic graph.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Synthetic graph: number of clusters.
    #[arg(long)]
    n: Option<usize>,
    /// Synthetic graph: number of connections.
    #[arg(long, conflicts_with = "density")]
    edges: Option<usize>,
    /// Synthetic graph: E / (n (n - 1)).
    #[arg(long)]
    density: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct FlowArgs {
    #[arg(long, value_enum)]
    algorithm: Option<AlgoArg>,
    #[arg(long)]
    lanes: Option<usize>,
    #[arg(long)]
    tiles: Option<usize>,
    #[arg(long)]
    controllers: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    /// Wall-clock limit per clique search, in seconds.
    #[arg(long)]
    budget_secs: Option<f64>,
    /// Write a per-step trace log during `sim`.
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Greedy,
    Maxclique,
    Exact,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Greedy => Algorithm::Greedy,
            AlgoArg::Maxclique => Algorithm::MaxClique,
            AlgoArg::Exact => Algorithm::Exact,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Write the cluster graph (synthetic or from a file).
    Gen {
        #[command(flatten)]
        dir: DirArgs,
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Print graph metrics as JSON.
    Metrics {
        /// Cluster-graph document; defaults to the run directory's graph.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        dir: DirArgs,
    },
    /// Build the topology and place clusters on tiles.
    Place {
        #[command(flatten)]
        dir: DirArgs,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// Route every connection to a lane.
    Route {
        #[command(flatten)]
        dir: DirArgs,
    },
    /// Group routed paths into switching scenarios.
    Group {
        #[command(flatten)]
        dir: DirArgs,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// Compile scenarios into controller programs.
    EmitCtrl {
        #[command(flatten)]
        dir: DirArgs,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// Simulate the controller programs.
    Sim {
        #[command(flatten)]
        dir: DirArgs,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// Evaluate the calibrated area model.
    Cost {
        #[command(flatten)]
        dir: DirArgs,
    },
    /// Run every stage.
    Run {
        #[command(flatten)]
        dir: DirArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// Scaling sweep over synthetic instances, written as CSV.
    Sweep {
        /// Output file; standard output when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        densities: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',', value_enum)]
        algorithms: Option<Vec<AlgoArg>>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        budget_secs: Option<f64>,
    },
    /// Summarize a run directory, or re-emit a sweep table.
    Report {
        #[command(flatten)]
        dir: DirArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Sweep CSV to re-emit instead of a run summary.
        #[arg(long)]
        sweep: Option<PathBuf>,
    },
}

fn load_config(explicit: Option<&Path>, dir: Option<&Path>) -> Result<Config, CliError> {
    let path = match (explicit, dir) {
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(d)) if d.join(CONFIG_FILE).exists() => Some(d.join(CONFIG_FILE)),
        _ => None,
    };
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            Config::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
        None => Ok(Config::default()),
    }
}

fn apply_graph(cfg: &mut Config, g: &GraphArgs) {
    if let Some(p) = &g.input {
        cfg.graph.file = Some(p.clone());
    }
    if let Some(n) = g.n {
        cfg.graph.n = n;
        cfg.graph.file = None;
    }
    if let Some(e) = g.edges {
        cfg.graph.edges = Some(e);
        cfg.graph.density = None;
    }
    if let Some(d) = g.density {
        cfg.graph.density = Some(d);
        cfg.graph.edges = None;
    }
}

fn apply_flow(cfg: &mut Config, f: &FlowArgs) {
    if let Some(a) = f.algorithm {
        cfg.flow.algorithm = a.into();
    }
    if f.lanes.is_some() {
        cfg.flow.lanes = f.lanes;
    }
    if f.tiles.is_some() {
        cfg.flow.tiles = f.tiles;
    }
    if f.controllers.is_some() {
        cfg.flow.controllers = f.controllers;
    }
    if let Some(n) = f.frames {
        cfg.flow.frames = n;
    }
    if let Some(s) = f.budget_secs {
        cfg.flow.clique_budget_secs = s;
    }
    if f.trace {
        cfg.flow.trace = true;
    }
}

fn runner(cli: &Cli, dir: &DirArgs, edit: impl FnOnce(&mut Config)) -> Result<Runner, CliError> {
    let mut cfg = load_config(cli.config.as_deref(), Some(&dir.dir))?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    edit(&mut cfg);
    Runner::new(&dir.dir, cfg)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::stage("output", format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Gen { dir, graph } => {
            let r = runner(cli, dir, |c| apply_graph(c, graph))?;
            let g = r.gen()?;
            println!("gen: {} clusters={} edges={}", g.name(), g.n_clusters(), g.n_edges());
        }
        Command::Metrics { input, dir } => {
            let g = match input {
                Some(p) => read_graph_file(p)?,
                None => RunDir::open(&dir.dir)
                    .load_graph()
                    .map_err(|e| CliError::stage("metrics", e))?,
            };
            let m = g.metrics().map_err(|e| CliError::stage("metrics", e))?;
            print!("{}", ladderbus::state::json(&m));
        }
        Command::Place { dir, flow } => {
            let cost = runner(cli, dir, |c| apply_flow(c, flow))?.place()?;
            println!("place: cost={cost}");
        }
        Command::Route { dir } => {
            let n = runner(cli, dir, |_| {})?.route()?;
            println!("route: paths={n}");
        }
        Command::Group { dir, flow } => {
            let d = runner(cli, dir, |c| apply_flow(c, flow))?.group()?;
            println!(
                "group: algorithm={} scenarios={} greedy={} maxclique={} lower_bound={}",
                d.algorithm, d.scenarios, d.scenarios_greedy, d.scenarios_maxclique, d.lower_bound
            );
        }
        Command::EmitCtrl { dir, flow } => {
            let n = runner(cli, dir, |c| apply_flow(c, flow))?.emit_ctrl()?;
            println!("emit-ctrl: controllers={n}");
        }
        Command::Sim { dir, flow } => {
            let s = runner(cli, dir, |c| apply_flow(c, flow))?.sim()?;
            println!(
                "sim: steps={} deliveries={} collisions={} clean={}",
                s.steps,
                s.deliveries,
                s.collisions.len(),
                s.clean
            );
        }
        Command::Cost { dir } => {
            let c = runner(cli, dir, |_| {})?.cost()?;
            println!("cost: control_fraction={:.4}", c.control_fraction);
        }
        Command::Run { dir, graph, flow } => {
            let r = runner(cli, dir, |c| {
                apply_graph(c, graph);
                apply_flow(c, flow);
            })?;
            r.run_all()?;
            let st = PipelineState::load(&r.dir).map_err(|e| CliError::stage("report", e))?;
            let rep = build_report(&st).map_err(|e| CliError::stage("report", e))?;
            print!("{}", report_text(&rep));
        }
        Command::Sweep {
            out,
            sizes,
            densities,
            seeds,
            algorithms,
            workers,
            budget_secs,
        } => {
            let mut cfg = load_config(cli.config.as_deref(), None)?;
            let s = &mut cfg.sweep;
            if let Some(v) = sizes {
                s.sizes = v.clone();
            }
            if let Some(v) = densities {
                s.densities = v.clone();
            }
            if let Some(v) = seeds {
                s.seeds = v.clone();
            } else if let Some(seed) = cli.seed {
                s.seeds = vec![seed];
            }
            if let Some(v) = algorithms {
                s.algorithms = v.iter().map(|&a| a.into()).collect();
            }
            if let Some(w) = workers {
                s.workers = *w;
            }
            if let Some(b) = budget_secs {
                cfg.flow.clique_budget_secs = *b;
            }
            cfg.check().map_err(CliError::Config)?;
            let rows = run_sweep(&cfg.sweep, &default_coefficients(), cfg.flow.clique_budget_secs)
                .map_err(|e| CliError::stage("sweep", e))?;
            write_out(out.as_deref(), &write_csv(&rows))?;
        }
        Command::Report { dir, format, sweep } => {
            if let Some(p) = sweep {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::stage("report", format!("{}: {e}", p.display())))?;
                let rows = parse_csv(&text).map_err(|e| CliError::stage("report", e))?;
                print!("{}", write_csv(&rows));
                return Ok(());
            }
            let st = PipelineState::load(&RunDir::open(&dir.dir))
                .map_err(|e| CliError::stage("report", e))?;
            let rep = build_report(&st).map_err(|e| CliError::stage("report", e))?;
            match format {
                Format::Text => print!("{}", report_text(&rep)),
                Format::Json => print!("{}", report_json(&rep)),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

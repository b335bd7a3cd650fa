//! Command-line harness around the `manetsim` library: single runs,
//! parameter sweeps, and metric-versus-radius charts.
//!
//! Exit codes: 0 on success, 1 for usage problems (bad flags, bad
//! parameter files, unknown metric names), 2 when a run or an output write
//! fails.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use manetsim::config::SimulationConfig;
use manetsim::engine::{run_report, RunOptions};
use manetsim::metrics::{run_csv_row, RUN_CSV_HEADER};
use manetsim::plot::{parse_aggregate_csv, render_line_chart, Filter, GroupKey, Metric};
use manetsim::sweep::{sweep, SeedSpec, SweepError, SweepSpec};
use manetsim::trace::CsvTrace;

#[derive(Parser)]
#[command(
    name = "manetsim",
    version,
    about = "Anycast flooding simulator for mobile wireless ad hoc networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run and print its metrics as a CSV row.
    Run(RunArgs),
    /// Execute a parameter sweep; writes runs.csv and aggregate.csv.
    Sweep(SweepArgs),
    /// Render a metric-versus-radius line chart from an aggregate CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Parameter file (`key = value` lines); defaults apply when omitted.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Transmission radius override, meters.
    #[arg(long, value_name = "METERS")]
    radius: Option<f64>,
    /// Request TTL override.
    #[arg(long)]
    ttl: Option<u32>,
    /// Link availability override, strictly between 0 and 1.
    #[arg(long)]
    l: Option<f64>,
    /// Maximal node speed override, km/h.
    #[arg(long = "vmax-kmh", value_name = "KMH")]
    vmax_kmh: Option<f64>,
    /// Direction-change probability override.
    #[arg(long)]
    p: Option<f64>,
    /// Number of requests override.
    #[arg(long)]
    requests: Option<u32>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Dump node trajectories (time_ms,node,x,y).
    #[arg(long, value_name = "FILE")]
    dump_trajectories: Option<PathBuf>,
    /// Dump the processed event log (time_ms,tie,kind,node,seq).
    #[arg(long, value_name = "FILE")]
    dump_events: Option<PathBuf>,
    /// Dump per-epoch link up-fractions (time_ms,up_fraction).
    #[arg(long, value_name = "FILE")]
    dump_links: Option<PathBuf>,
    /// Dump packet events (time_ms,event,node,seq,kind,ttl,hops).
    #[arg(long, value_name = "FILE")]
    dump_packets: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Base parameter file for every run of the sweep.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Sweep spec file (`key = value`, comma-separated lists).
    #[arg(long, value_name = "FILE", conflicts_with_all = ["series1", "series2"])]
    spec: Option<PathBuf>,
    /// Preset: radius sweep at 5, 30, and 50 km/h (l = 0.7, TTL 7, p = 0).
    #[arg(long, conflicts_with = "series2")]
    series1: bool,
    /// Preset: radius sweep for TTL 4 and 7 at l = 0.05, 0.1, 0.3, 0.5,
    /// 0.7 (5 km/h, p = 0).
    #[arg(long)]
    series2: bool,
    /// Radii to sweep, meters, comma separated.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    radius: Option<Vec<f64>>,
    /// TTL values to sweep, comma separated.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    ttl: Option<Vec<u32>>,
    /// Link availabilities to sweep, comma separated.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    l: Option<Vec<f64>>,
    /// Maximal speeds to sweep, km/h, comma separated.
    #[arg(long = "vmax-kmh", value_delimiter = ',', value_name = "LIST")]
    vmax_kmh: Option<Vec<f64>>,
    /// Direction-change probability for every run.
    #[arg(long)]
    p: Option<f64>,
    /// Seeds per cell: a count (`5`) or an explicit list (`3,9,27`; use a
    /// trailing comma for a single literal seed).
    #[arg(long, value_name = "LIST|COUNT")]
    seeds: Option<String>,
    /// Requests per run.
    #[arg(long)]
    requests: Option<u32>,
    /// Output directory for runs.csv and aggregate.csv.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    /// aggregate.csv produced by `sweep`.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Metric for the y axis (response_ratio, avg_hops, relative_traffic,
    /// avg_response_time_ms, duplicate_ratio).
    #[arg(long)]
    metric: String,
    /// Dimension labelling the lines (vmax_kmh, link_availability, ttl).
    #[arg(long)]
    group: String,
    /// Pin another dimension, e.g. `--where ttl=4`. Repeatable.
    #[arg(long = "where", value_name = "KEY=VALUE")]
    filters: Vec<String>,
    /// Output SVG file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

/// A failed invocation, split by exit code.
enum Failure {
    Usage(anyhow::Error),
    Run(anyhow::Error),
}

type CliResult = Result<(), Failure>;

trait Classify<T> {
    fn or_usage(self) -> Result<T, Failure>;
    fn or_run_failure(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn or_usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn or_run_failure(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Run(e.into()))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<SimulationConfig, Failure> {
    match path {
        None => Ok(SimulationConfig::default()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .or_usage()?;
            SimulationConfig::parse(&text)
                .with_context(|| format!("parsing {}", path.display()))
                .or_usage()
        }
    }
}

fn csv_writer(path: &Path) -> Result<Box<dyn Write>, Failure> {
    let file = File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .or_run_failure()?;
    Ok(Box::new(BufWriter::new(file)))
}

fn cmd_run(args: RunArgs) -> CliResult {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(radius) = args.radius {
        config.radius_m = radius;
    }
    if let Some(ttl) = args.ttl {
        config.ttl = ttl;
    }
    if let Some(l) = args.l {
        config.link_availability = l;
    }
    if let Some(vmax) = args.vmax_kmh {
        config.vmax_kmh = vmax;
    }
    if let Some(p) = args.p {
        config.direction_change_p = p;
    }
    if let Some(requests) = args.requests {
        config.requests = requests;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate().or_usage()?;

    let mut trace = CsvTrace::new();
    let mut tracing = false;
    if let Some(path) = &args.dump_trajectories {
        trace = trace.trajectories_to(csv_writer(path)?);
        tracing = true;
    }
    if let Some(path) = &args.dump_events {
        trace = trace.events_to(csv_writer(path)?);
        tracing = true;
    }
    if let Some(path) = &args.dump_links {
        trace = trace.links_to(csv_writer(path)?);
        tracing = true;
    }
    if let Some(path) = &args.dump_packets {
        trace = trace.packets_to(csv_writer(path)?);
        tracing = true;
    }

    let options = RunOptions {
        placement: None,
        trace: tracing.then_some(&mut trace as &mut dyn manetsim::trace::Trace),
    };
    let report = run_report(&config, options).or_run_failure()?;
    trace.finish().context("writing trace dumps").or_run_failure()?;

    println!("{RUN_CSV_HEADER}");
    println!("{}", run_csv_row(&config, &report.metrics));
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CliResult {
    let base = load_config(args.config.as_deref())?;

    let mut spec = if args.series1 {
        SweepSpec::series1()
    } else if args.series2 {
        SweepSpec::series2()
    } else {
        SweepSpec::from_base(&base)
    };
    if let Some(path) = &args.spec {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .or_usage()?;
        spec = SweepSpec::parse(&text, &base).or_usage()?;
    }
    if let Some(radii) = args.radius {
        spec.radii_m = radii;
    }
    if let Some(ttls) = args.ttl {
        spec.ttls = ttls;
    }
    if let Some(ls) = args.l {
        spec.availabilities = ls;
    }
    if let Some(vmaxs) = args.vmax_kmh {
        spec.vmax_kmh = vmaxs;
    }
    if let Some(p) = args.p {
        spec.direction_change_p = p;
    }
    if let Some(seeds) = &args.seeds {
        spec.seeds = SeedSpec::parse(seeds)
            .map_err(anyhow::Error::msg)
            .context("--seeds")
            .or_usage()?;
    }
    if let Some(requests) = args.requests {
        spec.requests = Some(requests);
    }

    let output = match sweep(&spec, &base, args.workers) {
        Ok(output) => output,
        Err(e @ SweepError::Run { .. }) => return Err(e).or_run_failure(),
        Err(e) => return Err(e).or_usage(),
    };

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .or_run_failure()?;
    let runs_path = args.out.join("runs.csv");
    let aggregate_path = args.out.join("aggregate.csv");
    fs::write(&runs_path, &output.runs_csv)
        .with_context(|| format!("writing {}", runs_path.display()))
        .or_run_failure()?;
    fs::write(&aggregate_path, &output.aggregate_csv)
        .with_context(|| format!("writing {}", aggregate_path.display()))
        .or_run_failure()?;
    println!(
        "{} runs -> {} and {}",
        output.runs,
        runs_path.display(),
        aggregate_path.display()
    );
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> CliResult {
    let metric = Metric::from_name(&args.metric).or_usage()?;
    let group = GroupKey::from_name(&args.group).or_usage()?;
    let filters = args
        .filters
        .iter()
        .map(|f| Filter::parse(f))
        .collect::<Result<Vec<_>, _>>()
        .or_usage()?;
    let text = fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))
        .or_usage()?;
    let rows = parse_aggregate_csv(&text).or_usage()?;
    let svg = render_line_chart(&rows, metric, group, &filters).or_usage()?;
    fs::write(&args.out, svg)
        .with_context(|| format!("writing {}", args.out.display()))
        .or_run_failure()?;
    println!("wrote {}", args.out.display());
    Ok(())
}

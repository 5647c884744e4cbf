//! Command-line front end: single runs, manifest sweeps, static-stage
//! coloring, and the negotiation-contention probe.
//!
//! Exit codes: 0 success, 1 internal invariant violation (a panic inside
//! the engine), 2 configuration or I/O problem, 3 topology problem
//! (disconnected graph, no route, infeasible coloring).

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::panic::AssertUnwindSafe;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use meshmac::ccaa::ccaa_color;
use meshmac::config::{parse_topology_file, ScenarioConfig, ScenarioError};
use meshmac::mcg::build_mcg;
use meshmac::metrics::{jain, MetricsRecord, CSV_HEADER};
use meshmac::sim::contention::contention_time_probe;
use meshmac::sim::runner::{
    expand_manifest, parse_manifest, run_scenario, run_scenario_traced, RunnerError,
};
use meshmac::sim::trace::WriterSink;
use meshmac::Topology;

// ---------------------------------------------------------------------------
// Exit codes
// ---------------------------------------------------------------------------

const EXIT_INVARIANT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_TOPOLOGY: u8 = 3;

/// A command failure: a machine-parsable message plus the exit class.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_CONFIG, message: message.into() }
    }
}

impl From<RunnerError> for Failure {
    fn from(e: RunnerError) -> Failure {
        let code = runner_exit_code(&e);
        Failure { code, message: e.to_string() }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Failure {
        Failure { code: EXIT_CONFIG, message: e.to_string() }
    }
}

fn runner_exit_code(e: &RunnerError) -> u8 {
    match e {
        RunnerError::Scenario(_) | RunnerError::Manifest { .. } | RunnerError::Io { .. } => {
            EXIT_CONFIG
        }
        RunnerError::Topology(_)
        | RunnerError::NoRoute { .. }
        | RunnerError::Coloring(_)
        | RunnerError::Baseline(_) => EXIT_TOPOLOGY,
    }
}

/// Wraps an I/O error with the path it concerns.
fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    Failure::config(format!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "meshmac",
    version,
    about = "Deterministic simulator for a two-stage multi-radio multi-channel mesh MAC"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and emit its CSV row.
    Run(RunArgs),
    /// Expand a sweep manifest and write its CSV.
    Sweep(SweepArgs),
    /// Color a topology file's conflict graph and print the assignment.
    Color(ColorArgs),
    /// Measure negotiation contention for N pairs in one sense domain.
    Probe(ProbeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration file (`key = value` lines).
    config: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Apply a `key=value` override after loading the file (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Append the CSV row to this file instead of stdout; the header is
    /// written when the file is new.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-event trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep manifest (config/out/seeds/axis.* lines).
    manifest: PathBuf,
}

#[derive(Args)]
struct ColorArgs {
    /// Topology file (`node <id> <x> <y> <radios> <gw>` lines).
    topology: PathBuf,
    /// Number of orthogonal channels.
    #[arg(long, default_value_t = 3)]
    channels: u16,
    /// Seed for load-balancing tie breaks.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Link formation range in meters.
    #[arg(long, default_value_t = 250.0)]
    tx_range: f64,
    /// Interference range in meters.
    #[arg(long, default_value_t = 550.0)]
    sense_range: f64,
}

#[derive(Args)]
struct ProbeArgs {
    /// Pair counts to probe, e.g. `10,25,40`.
    #[arg(value_delimiter = ',', required = true)]
    pairs: Vec<u32>,
    /// Number of orthogonal channels.
    #[arg(long, default_value_t = 1)]
    channels: u16,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_run(a: &RunArgs) -> Result<(), Failure> {
    let mut cfg = ScenarioConfig::load(&a.config).map_err(|e| match e {
        // Name the offending path; the scenario parser only knows the text.
        ScenarioError::Io(io) => io_fail(&a.config, io),
        other => other.into(),
    })?;
    for kv in &a.set {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Failure::config(format!("--set expects key=value, got `{kv}`")))?;
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }

    let record = match &a.trace {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_fail(path, e))?;
            let mut sink = WriterSink(BufWriter::new(file));
            let record = run_scenario_traced(&cfg, &mut sink)?;
            sink.0.flush().map_err(|e| io_fail(path, e))?;
            record
        }
        None => run_scenario(&cfg)?,
    };

    match &a.out {
        Some(path) => append_row(path, &record)?,
        None => {
            println!("{CSV_HEADER}");
            println!("{}", record.to_csv_row());
        }
    }
    Ok(())
}

/// Appends one CSV row, writing the header first when the file is empty.
fn append_row(path: &Path, record: &MetricsRecord) -> Result<(), Failure> {
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| io_fail(path, e))?;
    let empty = file.metadata().map_err(|e| io_fail(path, e))?.len() == 0;
    let mut text = String::new();
    if empty {
        text.push_str(CSV_HEADER);
        text.push('\n');
    }
    text.push_str(&record.to_csv_row());
    text.push('\n');
    file.write_all(text.as_bytes()).map_err(|e| io_fail(path, e))
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), Failure> {
    let dir = a.manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let text = std::fs::read_to_string(&a.manifest).map_err(|e| io_fail(&a.manifest, e))?;
    let manifest = parse_manifest(&text, &dir)?;
    let jobs = expand_manifest(&manifest)?;
    let total = jobs.len();

    // Rows come back in manifest order regardless of scheduling; a failed
    // job is recorded in place as a comment row rather than killing the
    // sweep.
    let results: Vec<(ScenarioConfig, Result<MetricsRecord, RunnerError>)> =
        jobs.into_par_iter().map(|cfg| {
            let record = run_scenario(&cfg);
            (cfg, record)
        }).collect();

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut first_failure: Option<u8> = None;
    let mut failed = 0usize;
    for (cfg, result) in &results {
        match result {
            Ok(record) => csv.push_str(&record.to_csv_row()),
            Err(e) => {
                failed += 1;
                first_failure.get_or_insert(runner_exit_code(e));
                csv.push_str(&format!(
                    "# failed scenario={} seed={}: {e}",
                    cfg.scenario, cfg.seed
                ));
            }
        }
        csv.push('\n');
    }
    std::fs::write(&manifest.out, csv).map_err(|e| io_fail(&manifest.out, e))?;

    println!(
        "wrote {} ({} rows, {} failed)",
        manifest.out.display(),
        total - failed,
        failed
    );
    match first_failure {
        Some(code) => Err(Failure { code, message: format!("{failed} of {total} runs failed") }),
        None => Ok(()),
    }
}

fn cmd_color(a: &ColorArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&a.topology).map_err(|e| io_fail(&a.topology, e))?;
    let parsed = parse_topology_file(&text)?;
    let topo = Topology::build(parsed.nodes, a.tx_range).map_err(RunnerError::Topology)?;
    let mcg = build_mcg(&topo, a.sense_range);

    let mut phys = ScenarioConfig::default().phys_params();
    phys.tx_range_m = a.tx_range;
    phys.sense_range_m = a.sense_range;
    let assignment = ccaa_color(&topo, &mcg, a.channels, &phys, a.seed)
        .map_err(RunnerError::Coloring)?;

    println!(
        "topology: {} nodes, {} links, {} channels",
        topo.node_count(),
        assignment.link_count(),
        a.channels
    );
    for ((p, q), color) in assignment.links() {
        println!(
            "link {p}-{q}  radios {}/{}  ch {}  hop {}",
            color.vertex.radio_a, color.vertex.radio_b, color.channel, color.hop
        );
    }
    let loads = assignment.load_profile();
    let mut line = String::from("load:");
    for (i, n) in loads.iter().enumerate() {
        line.push_str(&format!(" ch{}={n}", i + 1));
    }
    println!("{line}");
    let shares: Vec<f64> = loads.iter().map(|&n| n as f64).collect();
    println!("fairness: {:.4}", jain(&shares));
    Ok(())
}

fn cmd_probe(a: &ProbeArgs) -> Result<(), Failure> {
    for &pairs in &a.pairs {
        if pairs == 0 {
            return Err(Failure::config("pair counts must be at least 1"));
        }
        let r = contention_time_probe(pairs, a.channels, a.seed)?;
        println!(
            "nctf={} channels={} mean_contention_ms={:.3} makespan_ms={:.3} intervals={} missing={}",
            r.pairs,
            a.channels,
            r.mean_contention_s * 1e3,
            r.mean_makespan_s * 1e3,
            r.intervals,
            r.missing_reservations
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Entry
// ---------------------------------------------------------------------------

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Color(a) => cmd_color(a),
        Cmd::Probe(a) => cmd_probe(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // A panic anywhere below is an internal invariant violation: report it
    // as such rather than with the generic panic exit status.
    match std::panic::catch_unwind(AssertUnwindSafe(|| dispatch(&cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            eprintln!("error: invariant violation: {msg}");
            ExitCode::from(EXIT_INVARIANT)
        }
    }
}

//! Scenario orchestration: topology, channel assignment, engine, metrics.
//!
//! [`run_scenario`] takes a validated configuration through the full
//! pipeline and returns the run's metrics; [`run_scenario_traced`] also
//! streams every trace event into a caller-provided sink. [`run_sweep`]
//! expands a sweep manifest (a base configuration crossed with value axes
//! and a seed list) into individual runs, executes them in parallel, and
//! renders a CSV whose row order — (axis combination, seed) — is
//! independent of scheduling, so reruns are byte-identical.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::ccaa::{ccaa_color, CcaaError};
use crate::config::{parse_topology_file, Protocol, ScenarioConfig, ScenarioError, TopologyKind};
use crate::metrics::{MetricsAccumulator, MetricsRecord, RunInfo, CSV_HEADER};
use crate::rama::{rama_color, RamaError};
use crate::sim::csma::CsmaEngine;
use crate::sim::engine::{BeaconEngine, EngineMode};
use crate::sim::topogen::{build_topology, synth_flows};
use crate::sim::trace::{NullSink, TraceSink};
use crate::topo::{Topology, TopologyError};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Coloring(#[from] CcaaError),
    #[error(transparent)]
    Baseline(#[from] RamaError),
    #[error("flow {index}: no route from {src} to {dst}")]
    NoRoute { index: usize, src: u32, dst: u32 },
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// Single runs
// ---------------------------------------------------------------------------

/// Runs one scenario, discarding the trace.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<MetricsRecord, RunnerError> {
    run_scenario_traced(cfg, &mut NullSink)
}

/// Runs one scenario, streaming every trace event into `extra` while the
/// metrics accumulate.
pub fn run_scenario_traced<S: TraceSink>(
    cfg: &ScenarioConfig,
    extra: &mut S,
) -> Result<MetricsRecord, RunnerError> {
    cfg.validate()?;

    // Topology and flows. Named RNG streams keep topology, flow synthesis,
    // and the engines' draws independent of one another.
    let (topo, mut flows) = match cfg.topology_kind {
        TopologyKind::File => {
            let path = cfg.topology_file.as_ref().expect("validated");
            let text = std::fs::read_to_string(path)
                .map_err(|source| RunnerError::Io { path: path.clone(), source })?;
            let tf = parse_topology_file(&text)?;
            (Topology::build(tf.nodes, cfg.tx_range_m)?, tf.flows)
        }
        _ => {
            let mut topo_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            topo_rng.set_stream(0x70);
            (build_topology(cfg, &mut topo_rng)?, Vec::new())
        }
    };
    if !cfg.explicit_flows.is_empty() {
        flows = cfg.explicit_flows.clone();
    }
    if flows.is_empty() && cfg.flow_count > 0 {
        let mut flow_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        flow_rng.set_stream(0xF7);
        flows = synth_flows(&topo, cfg, &mut flow_rng);
    }
    for (index, f) in flows.iter().enumerate() {
        if topo.route(f.src, f.dst).is_none() {
            return Err(RunnerError::NoRoute { index, src: f.src, dst: f.dst });
        }
    }

    let mut acc = MetricsAccumulator::new(cfg.channels, cfg.power_profile(), cfg.psm_timing());
    let run_end = {
        let mut tee = (&mut acc, extra);
        match cfg.protocol {
            Protocol::TscM2mac => {
                let mcg = crate::mcg::build_mcg(&topo, cfg.sense_range_m);
                let assignment =
                    ccaa_color(&topo, &mcg, cfg.channels, &cfg.phys_params(), cfg.seed)?;
                BeaconEngine::new(EngineMode::Tsc, cfg, &topo, &assignment, flows.clone(), &mut tee)
                    .run()
            }
            Protocol::RamaLike => {
                let mcg = crate::mcg::build_mcg(&topo, cfg.sense_range_m);
                let assignment = rama_color(&topo, &mcg, cfg.channels, cfg.seed)?;
                BeaconEngine::new(EngineMode::Rama, cfg, &topo, &assignment, flows.clone(), &mut tee)
                    .run()
            }
            Protocol::CsmaSingle => CsmaEngine::new(cfg, &topo, flows.clone(), &mut tee).run(),
        }
    };

    let pkt_bytes = flows.first().map(|f| f.pkt_bytes).unwrap_or(cfg.flow_pkt_bytes);
    Ok(acc.finish(
        run_end,
        RunInfo {
            scenario: cfg.scenario.clone(),
            protocol: cfg.protocol.as_str().to_string(),
            channels: cfg.channels,
            seed: cfg.seed,
            pkt_bytes,
            nctf: flows.len() as u32,
        },
    ))
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// A parsed sweep manifest: base configuration, output path, seeds, and the
/// value axes to cross (in listing order).
#[derive(Debug)]
pub struct SweepManifest {
    pub base: ScenarioConfig,
    pub out: PathBuf,
    pub seeds: Vec<u64>,
    pub axes: Vec<(String, Vec<String>)>,
}

/// Parses the manifest format:
///
/// ```text
/// config = base.cfg          # scenario file, relative to the manifest
/// out    = results.csv       # CSV destination, relative to the manifest
/// seeds  = 1..30             # inclusive range, or a comma list: 1,2,5
/// axis.channels = 2,4,6      # any scenario key; values cross-multiply
/// axis.flow.pkt_bytes = 210,1500
/// ```
pub fn parse_manifest(text: &str, dir: &Path) -> Result<SweepManifest, RunnerError> {
    let mut base: Option<ScenarioConfig> = None;
    let mut out: Option<PathBuf> = None;
    let mut seeds: Vec<u64> = Vec::new();
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let n = idx + 1;
        let bad = |reason: &str| RunnerError::Manifest { line: n, reason: reason.to_string() };
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| bad("expected key = value"))?;
        if value.is_empty() {
            return Err(bad("empty value"));
        }
        match key {
            "config" => {
                let path = dir.join(value);
                let cfg = ScenarioConfig::load(&path)?;
                base = Some(cfg);
            }
            "out" => out = Some(dir.join(value)),
            "seeds" => {
                seeds = parse_seeds(value).ok_or_else(|| bad("bad seed list"))?;
            }
            _ => {
                let axis_key = key
                    .strip_prefix("axis.")
                    .ok_or_else(|| bad("unknown manifest key"))?;
                if axes.iter().any(|(k, _)| k == axis_key) {
                    return Err(bad("duplicate axis"));
                }
                let values: Vec<String> =
                    value.split(',').map(|v| v.trim().to_string()).collect();
                if values.iter().any(|v| v.is_empty()) {
                    return Err(bad("empty axis value"));
                }
                axes.push((axis_key.to_string(), values));
            }
        }
    }

    let base = base.ok_or(RunnerError::Manifest {
        line: 0,
        reason: "manifest needs a config = <file> line".to_string(),
    })?;
    let out = out.ok_or(RunnerError::Manifest {
        line: 0,
        reason: "manifest needs an out = <file> line".to_string(),
    })?;
    if seeds.is_empty() {
        seeds.push(base.seed);
    }
    Ok(SweepManifest { base, out, seeds, axes })
}

/// `a..b` (inclusive both ends) or a comma list; duplicates collapse.
fn parse_seeds(value: &str) -> Option<Vec<u64>> {
    let seeds: Vec<u64> = if let Some((a, b)) = value.split_once("..") {
        let a: u64 = a.trim().parse().ok()?;
        let b: u64 = b.trim().parse().ok()?;
        if a > b {
            return None;
        }
        (a..=b).collect()
    } else {
        value
            .split(',')
            .map(|v| v.trim().parse().ok())
            .collect::<Option<Vec<u64>>>()?
    };
    let unique: BTreeSet<u64> = seeds.iter().copied().collect();
    (unique.len() == seeds.len() && !seeds.is_empty()).then_some(seeds)
}

/// One expanded sweep job, in deterministic order.
fn expand(m: &SweepManifest) -> Result<Vec<(usize, ScenarioConfig)>, RunnerError> {
    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in &m.axes {
        let mut next = Vec::with_capacity(combos.len() * values.len());
        for combo in &combos {
            for v in values {
                let mut c = combo.clone();
                c.push((key.clone(), v.clone()));
                next.push(c);
            }
        }
        combos = next;
    }

    let mut jobs = Vec::with_capacity(combos.len() * m.seeds.len());
    let mut order = 0usize;
    for combo in &combos {
        for &seed in &m.seeds {
            let mut cfg = m.base.clone();
            for (k, v) in combo {
                cfg.set(k, v)?;
            }
            cfg.seed = seed;
            cfg.validate()?;
            jobs.push((order, cfg));
            order += 1;
        }
    }
    Ok(jobs)
}

/// Expands the manifest into fully configured jobs, in CSV row order —
/// the cross product of the axes (in listing order) times the seed list.
pub fn expand_manifest(m: &SweepManifest) -> Result<Vec<ScenarioConfig>, RunnerError> {
    Ok(expand(m)?.into_iter().map(|(_, cfg)| cfg).collect())
}

/// Runs every job of the manifest in parallel and renders the CSV (header
/// plus one row per run, ordered by (axis combination, seed)).
pub fn run_sweep(m: &SweepManifest) -> Result<String, RunnerError> {
    let jobs = expand(m)?;
    let mut results: Vec<(usize, MetricsRecord)> = jobs
        .into_par_iter()
        .map(|(order, cfg)| run_scenario(&cfg).map(|rec| (order, rec)))
        .collect::<Result<_, _>>()?;
    results.sort_by_key(|(order, _)| *order);

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for (_, rec) in &results {
        csv.push_str(&rec.to_csv_row());
        csv.push('\n');
    }
    Ok(csv)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

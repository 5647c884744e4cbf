//! Scenario configuration.
//!
//! Scenarios are described by flat `key = value` files: `#` starts a
//! comment, keys are dotted paths, later assignments override earlier ones,
//! and unknown keys are errors so typos cannot silently fall back to
//! defaults. The same `set` entry point applies command-line overrides and
//! sweep axes, so every knob reachable from a file is reachable from a
//! sweep.
//!
//! Topologies can be generated (`topology.kind`) or loaded from a node list
//! file with lines
//!
//! ```text
//! node <id> <x_m> <y_m> <radios> <gateway:0|1>
//! flow <src> <dst> <rate_bps> <pkt_bytes>
//! ```
//!
//! where `rate_bps = 0` marks a saturated flow.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::cna::CnaParams;
use crate::phys::{NodeId, PhysParams};
use crate::psm::{PowerProfile, PsmTiming, WAVELAN};
use crate::topo::Node;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("topology file line {line}: {reason}")]
    Topology { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Two-stage negotiation MAC with per-link control channels.
    TscM2mac,
    /// Baseline: one common control channel, static interference-blind
    /// data-channel assignment.
    RamaLike,
    /// Baseline: single channel, single radio, CSMA/CA with per-packet ACKs.
    CsmaSingle,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::TscM2mac => "tsc_m2mac",
            Protocol::RamaLike => "rama_like",
            Protocol::CsmaSingle => "csma_single",
        }
    }
}

impl FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tsc_m2mac" => Ok(Protocol::TscM2mac),
            "rama_like" => Ok(Protocol::RamaLike),
            "csma_single" => Ok(Protocol::CsmaSingle),
            other => Err(format!("unknown protocol `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    File,
    Chain,
    Star,
    Grid,
    Random,
    PairGrid,
    TwoTier,
}

impl FromStr for TopologyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "file" => TopologyKind::File,
            "chain" => TopologyKind::Chain,
            "star" => TopologyKind::Star,
            "grid" => TopologyKind::Grid,
            "random" => TopologyKind::Random,
            "pair_grid" => TopologyKind::PairGrid,
            "two_tier" => TopologyKind::TwoTier,
            other => return Err(format!("unknown topology kind `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnaMode {
    Fixed,
    Adaptive,
}

impl FromStr for CnaMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fixed" => Ok(CnaMode::Fixed),
            "adaptive" => Ok(CnaMode::Adaptive),
            other => Err(format!("unknown control-phase mode `{other}`")),
        }
    }
}

// ---------------------------------------------------------------------------
// Flow specification
// ---------------------------------------------------------------------------

/// One traffic flow. `rate_bps == 0` means saturated (always backlogged).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSpec {
    pub src: NodeId,
    pub dst: NodeId,
    pub rate_bps: u64,
    pub pkt_bytes: u64,
}

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub protocol: Protocol,
    pub channels: u16,
    pub seed: u64,
    pub duration_s: f64,

    pub topology_kind: TopologyKind,
    pub topology_file: Option<PathBuf>,
    pub topology_nodes: u32,
    pub area_m: f64,
    pub spacing_m: f64,
    /// Radios per node when `radios_max == 0`.
    pub radios: u8,
    /// When > 0, radios per node are drawn uniformly from `1..=radios_max`.
    pub radios_max: u8,
    pub pairs: u32,
    pub pair_gap_m: f64,
    pub pitch_m: f64,
    pub inner_nodes: u32,
    pub outer_nodes: u32,

    pub flow_count: u32,
    pub flow_rate_bps: u64,
    pub flow_pkt_bytes: u64,
    pub flows_to_gateway: u32,
    /// Sources stop generating at this time; 0 means the full duration.
    pub flow_stop_s: f64,
    /// Mean of exponentially distributed transfer-request sizes in bits;
    /// 0 means a single unbounded request.
    pub request_mean_bits: u64,
    /// Explicit flows (from a topology file); overrides generated flows.
    pub explicit_flows: Vec<FlowSpec>,

    pub tx_power_w: f64,
    pub antenna_gain: f64,
    pub antenna_height_m: f64,
    pub sinr_threshold: f64,
    pub noise_w: f64,
    pub tx_range_m: f64,
    pub sense_range_m: f64,

    pub data_rate_bps: u64,
    pub beacon_interval_s: f64,
    /// Per-packet framing overhead added to the payload on data channels.
    pub overhead_bytes: u64,
    /// Control frame size (fixed airtime at the data rate).
    pub ctrl_bytes: u64,
    pub slot_us: u64,
    pub difs_us: u64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub retry_limit: u32,
    pub queue_cap: usize,
    pub handover_us: u64,
    pub ack_guard_us: u64,

    pub cna_mode: CnaMode,
    pub cna_fixed_s: f64,
    pub cna_min_s: f64,
    pub cna_max_s: f64,
    pub cna_step_s: f64,
    pub cna_threshold_s: f64,
    pub cna_amended_guard: bool,
    pub cna_epoch_intervals: u32,

    pub psm_enabled: bool,
    pub psm_profile: String,
    pub psm_sleep_us: u64,
    pub psm_wake_us: u64,

    pub sink_enabled: bool,
    pub sink_delay_s: f64,
    pub sink_rate_bps: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: "scenario".into(),
            protocol: Protocol::TscM2mac,
            channels: 3,
            seed: 1,
            duration_s: 10.0,

            topology_kind: TopologyKind::Random,
            topology_file: None,
            topology_nodes: 24,
            area_m: 1500.0,
            spacing_m: 200.0,
            radios: 2,
            radios_max: 0,
            pairs: 10,
            pair_gap_m: 2.0,
            pitch_m: 40.0,
            inner_nodes: 10,
            outer_nodes: 20,

            flow_count: 6,
            flow_rate_bps: 200_000,
            flow_pkt_bytes: 210,
            flows_to_gateway: 0,
            flow_stop_s: 0.0,
            request_mean_bits: 0,
            explicit_flows: Vec::new(),

            tx_power_w: 0.2818,
            antenna_gain: 1.0,
            antenna_height_m: 1.5,
            sinr_threshold: 10.0,
            noise_w: 1e-12,
            tx_range_m: 250.0,
            sense_range_m: 550.0,

            data_rate_bps: 1_000_000,
            beacon_interval_s: 0.1,
            overhead_bytes: 58,
            ctrl_bytes: 34,
            slot_us: 20,
            difs_us: 50,
            cw_min: 16,
            cw_max: 1024,
            retry_limit: 7,
            queue_cap: 512,
            handover_us: 224,
            ack_guard_us: 20,

            cna_mode: CnaMode::Fixed,
            cna_fixed_s: 0.020,
            cna_min_s: 0.010,
            cna_max_s: 0.050,
            cna_step_s: 0.005,
            cna_threshold_s: 0.002,
            cna_amended_guard: false,
            cna_epoch_intervals: 1,

            psm_enabled: false,
            psm_profile: "wavelan".into(),
            psm_sleep_us: 250,
            psm_wake_us: 250,

            sink_enabled: true,
            sink_delay_s: 0.001,
            sink_rate_bps: 100_000_000,
        }
    }
}

fn parse_as<T: FromStr>(key: &str, value: &str) -> Result<T, ScenarioError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ScenarioError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

impl ScenarioConfig {
    /// Parses a configuration from text. Missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut cfg = ScenarioConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ScenarioError::Malformed { line: idx + 1, text: raw.into() })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Loads a configuration file; a relative `topology.file` is resolved
    /// against the configuration file's directory.
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        if let Some(topo) = &cfg.topology_file {
            if topo.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.topology_file = Some(dir.join(topo));
                }
            }
        }
        Ok(cfg)
    }

    /// Applies one `key = value` assignment. Used by the file parser, by
    /// command-line overrides, and by sweep axes.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ScenarioError> {
        match key {
            "scenario" => {
                if value.contains(',') {
                    return Err(ScenarioError::BadValue {
                        key: key.into(),
                        value: value.into(),
                        reason: "scenario names may not contain commas".into(),
                    });
                }
                self.scenario = value.to_string();
            }
            "protocol" => self.protocol = parse_as(key, value)?,
            "channels" => self.channels = parse_as(key, value)?,
            "seed" => self.seed = parse_as(key, value)?,
            "duration_s" => self.duration_s = parse_as(key, value)?,

            "topology.kind" => self.topology_kind = parse_as(key, value)?,
            "topology.file" => self.topology_file = Some(PathBuf::from(value)),
            "topology.nodes" => self.topology_nodes = parse_as(key, value)?,
            "topology.area_m" => self.area_m = parse_as(key, value)?,
            "topology.spacing_m" => self.spacing_m = parse_as(key, value)?,
            "topology.radios" => self.radios = parse_as(key, value)?,
            "topology.radios_max" => self.radios_max = parse_as(key, value)?,
            "topology.pairs" => self.pairs = parse_as(key, value)?,
            "topology.pair_gap_m" => self.pair_gap_m = parse_as(key, value)?,
            "topology.pitch_m" => self.pitch_m = parse_as(key, value)?,
            "topology.inner" => self.inner_nodes = parse_as(key, value)?,
            "topology.outer" => self.outer_nodes = parse_as(key, value)?,

            "flows.count" => self.flow_count = parse_as(key, value)?,
            "flows.rate_bps" => self.flow_rate_bps = parse_as(key, value)?,
            "flows.pkt_bytes" => self.flow_pkt_bytes = parse_as(key, value)?,
            "flows.to_gateway" => self.flows_to_gateway = parse_as(key, value)?,
            "flows.stop_s" => self.flow_stop_s = parse_as(key, value)?,
            "flows.request_mean_bits" => self.request_mean_bits = parse_as(key, value)?,

            "phys.tx_power_w" => self.tx_power_w = parse_as(key, value)?,
            "phys.gain" => self.antenna_gain = parse_as(key, value)?,
            "phys.height_m" => self.antenna_height_m = parse_as(key, value)?,
            "phys.sinr_threshold" => self.sinr_threshold = parse_as(key, value)?,
            "phys.noise_w" => self.noise_w = parse_as(key, value)?,
            "phys.tx_range_m" => self.tx_range_m = parse_as(key, value)?,
            "phys.sense_range_m" => self.sense_range_m = parse_as(key, value)?,

            "mac.data_rate_bps" => self.data_rate_bps = parse_as(key, value)?,
            "mac.beacon_interval_s" => self.beacon_interval_s = parse_as(key, value)?,
            "mac.overhead_bytes" => self.overhead_bytes = parse_as(key, value)?,
            "mac.ctrl_bytes" => self.ctrl_bytes = parse_as(key, value)?,
            "mac.slot_us" => self.slot_us = parse_as(key, value)?,
            "mac.difs_us" => self.difs_us = parse_as(key, value)?,
            "mac.cw_min" => self.cw_min = parse_as(key, value)?,
            "mac.cw_max" => self.cw_max = parse_as(key, value)?,
            "mac.retry_limit" => self.retry_limit = parse_as(key, value)?,
            "mac.queue_cap" => self.queue_cap = parse_as(key, value)?,
            "mac.handover_us" => self.handover_us = parse_as(key, value)?,
            "mac.ack_guard_us" => self.ack_guard_us = parse_as(key, value)?,

            "cna.mode" => self.cna_mode = parse_as(key, value)?,
            "cna.fixed_s" => self.cna_fixed_s = parse_as(key, value)?,
            "cna.min_s" => self.cna_min_s = parse_as(key, value)?,
            "cna.max_s" => self.cna_max_s = parse_as(key, value)?,
            "cna.step_s" => self.cna_step_s = parse_as(key, value)?,
            "cna.threshold_s" => self.cna_threshold_s = parse_as(key, value)?,
            "cna.amended_guard" => self.cna_amended_guard = parse_as(key, value)?,
            "cna.epoch_intervals" => self.cna_epoch_intervals = parse_as(key, value)?,

            "psm.enabled" => self.psm_enabled = parse_as(key, value)?,
            "psm.profile" => {
                if PowerProfile::by_name(value).is_none() {
                    return Err(ScenarioError::BadValue {
                        key: key.into(),
                        value: value.into(),
                        reason: "expected `wavelan` or `cisco`".into(),
                    });
                }
                self.psm_profile = value.to_string();
            }
            "psm.sleep_us" => self.psm_sleep_us = parse_as(key, value)?,
            "psm.wake_us" => self.psm_wake_us = parse_as(key, value)?,

            "sink.enabled" => self.sink_enabled = parse_as(key, value)?,
            "sink.delay_s" => self.sink_delay_s = parse_as(key, value)?,
            "sink.rate_bps" => self.sink_rate_bps = parse_as(key, value)?,

            other => return Err(ScenarioError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Consistency checks that span multiple keys.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let err = |msg: String| Err(ScenarioError::Invalid(msg));
        if self.channels == 0 {
            return err("channels must be at least 1".into());
        }
        match self.protocol {
            Protocol::RamaLike if self.channels < 2 => {
                return err("rama_like needs at least 2 channels (one is the control channel)"
                    .into());
            }
            Protocol::CsmaSingle if self.channels != 1 => {
                return err(format!(
                    "csma_single is a single-channel baseline, got channels = {}",
                    self.channels
                ));
            }
            _ => {}
        }
        if self.duration_s <= 0.0 {
            return err(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if self.topology_kind == TopologyKind::File && self.topology_file.is_none() {
            return err("topology.kind = file requires topology.file".into());
        }
        if self.beacon_interval_s <= 0.0 {
            return err("mac.beacon_interval_s must be positive".into());
        }
        if self.protocol != Protocol::CsmaSingle {
            let cna = match self.cna_mode {
                CnaMode::Fixed => self.cna_fixed_s,
                CnaMode::Adaptive => self.cna_max_s,
            };
            if cna >= self.beacon_interval_s {
                return err(format!(
                    "control phase ({cna} s) must be shorter than the beacon interval ({} s)",
                    self.beacon_interval_s
                ));
            }
            self.cna_params().validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        }
        if self.data_rate_bps == 0 {
            return err("mac.data_rate_bps must be positive".into());
        }
        if self.flow_pkt_bytes == 0 {
            return err("flows.pkt_bytes must be positive".into());
        }
        if self.sense_range_m < self.tx_range_m {
            return err(format!(
                "sense range ({} m) must not be below decode range ({} m)",
                self.sense_range_m, self.tx_range_m
            ));
        }
        if self.queue_cap == 0 {
            return err("mac.queue_cap must be at least 1".into());
        }
        Ok(())
    }

    // -- derived parameter bundles ------------------------------------------

    pub fn phys_params(&self) -> PhysParams {
        PhysParams {
            tx_power_w: self.tx_power_w,
            gain_tx: self.antenna_gain,
            gain_rx: self.antenna_gain,
            height_tx_m: self.antenna_height_m,
            height_rx_m: self.antenna_height_m,
            sinr_threshold: self.sinr_threshold,
            noise_w: self.noise_w,
            tx_range_m: self.tx_range_m,
            sense_range_m: self.sense_range_m,
        }
    }

    pub fn cna_params(&self) -> CnaParams {
        CnaParams {
            min_s: self.cna_min_s,
            max_s: self.cna_max_s,
            step_s: self.cna_step_s,
            threshold_s: self.cna_threshold_s,
            amended_guard: self.cna_amended_guard,
        }
    }

    pub fn psm_timing(&self) -> PsmTiming {
        PsmTiming { sleep_s: self.psm_sleep_us as f64 * 1e-6, wake_s: self.psm_wake_us as f64 * 1e-6 }
    }

    pub fn power_profile(&self) -> PowerProfile {
        PowerProfile::by_name(&self.psm_profile).unwrap_or(WAVELAN)
    }
}

// ---------------------------------------------------------------------------
// Topology files
// ---------------------------------------------------------------------------

/// Parsed contents of a topology file.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyFile {
    pub nodes: Vec<Node>,
    pub flows: Vec<FlowSpec>,
}

/// Parses the `node`/`flow` line format described in the module docs. Node
/// ids must form a dense range `0..n` (in any order).
pub fn parse_topology_file(text: &str) -> Result<TopologyFile, ScenarioError> {
    let mut nodes: Vec<Node> = Vec::new();
    let mut flows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| ScenarioError::Topology { line: idx + 1, reason };
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap();
        let fields: Vec<&str> = parts.collect();
        match tag {
            "node" => {
                if fields.len() != 5 {
                    return Err(bad(format!(
                        "expected `node <id> <x_m> <y_m> <radios> <gw>`, got {} fields",
                        fields.len()
                    )));
                }
                let parse_f = |i: usize, what: &str| {
                    fields[i]
                        .parse::<f64>()
                        .map_err(|_| bad(format!("bad {what} `{}`", fields[i])))
                };
                let id: NodeId =
                    fields[0].parse().map_err(|_| bad(format!("bad node id `{}`", fields[0])))?;
                let x = parse_f(1, "x coordinate")?;
                let y = parse_f(2, "y coordinate")?;
                let radios: u8 = fields[3]
                    .parse()
                    .map_err(|_| bad(format!("bad radio count `{}`", fields[3])))?;
                let gateway = match fields[4] {
                    "0" => false,
                    "1" => true,
                    other => return Err(bad(format!("bad gateway flag `{other}`"))),
                };
                nodes.push(Node { id, pos: (x, y), radios, gateway });
            }
            "flow" => {
                if fields.len() != 4 {
                    return Err(bad(format!(
                        "expected `flow <src> <dst> <rate_bps> <pkt_bytes>`, got {} fields",
                        fields.len()
                    )));
                }
                let parse_u = |i: usize, what: &str| {
                    fields[i]
                        .parse::<u64>()
                        .map_err(|_| bad(format!("bad {what} `{}`", fields[i])))
                };
                let src = parse_u(0, "source id")? as NodeId;
                let dst = parse_u(1, "destination id")? as NodeId;
                let rate_bps = parse_u(2, "rate")?;
                let pkt_bytes = parse_u(3, "packet size")?;
                if pkt_bytes == 0 {
                    return Err(bad("packet size must be positive".into()));
                }
                flows.push(FlowSpec { src, dst, rate_bps, pkt_bytes });
            }
            other => return Err(bad(format!("unknown directive `{other}`"))),
        }
    }
    // Node ids must be dense and unique so they can index arrays directly.
    let ids: BTreeSet<NodeId> = nodes.iter().map(|n| n.id).collect();
    if ids.len() != nodes.len() {
        return Err(ScenarioError::Invalid("duplicate node ids in topology file".into()));
    }
    if let (Some(&max), n) = (ids.iter().next_back(), ids.len()) {
        if max as usize != n - 1 {
            return Err(ScenarioError::Invalid(format!(
                "node ids must be dense 0..{}, found max id {max}",
                n
            )));
        }
    }
    for f in &flows {
        for end in [f.src, f.dst] {
            if !ids.contains(&end) {
                return Err(ScenarioError::Invalid(format!(
                    "flow references unknown node {end}"
                )));
            }
        }
        if f.src == f.dst {
            return Err(ScenarioError::Invalid(format!(
                "flow source and destination are both node {}",
                f.src
            )));
        }
    }
    nodes.sort_by_key(|n| n.id);
    Ok(TopologyFile { nodes, flows })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

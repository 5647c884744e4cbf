//! Scenario topology and flow generators.
//!
//! Each generator produces a node list for [`Topology::build`]; the random
//! generator resamples until the layout is connected (every node reaches a
//! gateway). Generation draws from a caller-supplied RNG stream, so layouts
//! are a pure function of the seed.

use rand::Rng;

use crate::config::{FlowSpec, ScenarioConfig, TopologyKind};
use crate::phys::NodeId;
use crate::topo::{Node, Topology, TopologyError};

// ---------------------------------------------------------------------------
// Primitive layouts
// ---------------------------------------------------------------------------

/// `n` nodes in a line, `spacing` apart; node 0 is the gateway.
pub fn chain(n: u32, spacing_m: f64, radios: u8) -> Vec<Node> {
    (0..n)
        .map(|i| Node {
            id: i as NodeId,
            pos: (i as f64 * spacing_m, 0.0),
            radios,
            gateway: i == 0,
        })
        .collect()
}

/// A gateway at the origin with `n − 1` satellites on a circle of `radius`.
pub fn star(n: u32, radius_m: f64, radios: u8) -> Vec<Node> {
    let mut nodes = vec![Node { id: 0, pos: (0.0, 0.0), radios, gateway: true }];
    let spokes = n.saturating_sub(1).max(1);
    for i in 1..n {
        let theta = 2.0 * std::f64::consts::PI * (i - 1) as f64 / spokes as f64;
        nodes.push(Node {
            id: i as NodeId,
            pos: (radius_m * theta.cos(), radius_m * theta.sin()),
            radios,
            gateway: false,
        });
    }
    nodes
}

/// A near-square grid with `spacing` pitch; node 0 (a corner) is the gateway.
pub fn grid(n: u32, spacing_m: f64, radios: u8) -> Vec<Node> {
    let cols = (n as f64).sqrt().ceil() as u32;
    (0..n)
        .map(|i| Node {
            id: i as NodeId,
            pos: ((i % cols) as f64 * spacing_m, (i / cols) as f64 * spacing_m),
            radios,
            gateway: i == 0,
        })
        .collect()
}

/// Random connected mesh in an `area × area` square: the gateway sits at the
/// centre and every further node lands within decode range of a uniformly
/// chosen earlier node, so the layout is connected by construction (plain
/// uniform scatter at mesh densities is almost never connected). Radio
/// counts are fixed, or drawn from `1..=radios_max` when `radios_max > 0`.
pub fn random_layout(
    n: u32,
    area_m: f64,
    tx_range_m: f64,
    radios: u8,
    radios_max: u8,
    rng: &mut impl Rng,
) -> Vec<Node> {
    let mut nodes: Vec<Node> = Vec::with_capacity(n as usize);
    for i in 0..n {
        let pos = if i == 0 {
            (area_m / 2.0, area_m / 2.0)
        } else {
            loop {
                let anchor = nodes[rng.gen_range(0..nodes.len())].pos;
                let r = rng.gen_range(0.35..0.95) * tx_range_m;
                let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                // Clamping into the area can only move the point closer to
                // its anchor, so the link to the anchor survives.
                let p = (
                    (anchor.0 + r * theta.cos()).clamp(0.0, area_m),
                    (anchor.1 + r * theta.sin()).clamp(0.0, area_m),
                );
                let clear = nodes
                    .iter()
                    .all(|n| crate::phys::distance(n.pos, p) > 1.0);
                if clear {
                    break p;
                }
            }
        };
        let r = if radios_max > 0 { rng.gen_range(1..=radios_max) } else { radios };
        nodes.push(Node { id: i as NodeId, pos, radios: r, gateway: i == 0 });
    }
    nodes
}

/// Isolated transmitter/receiver pairs on a coarse grid: pair `i` sits at
/// grid cell `(i % cols, i / cols)` scaled by `pitch`, with the two ends
/// `gap` apart. The receiving end of each pair is its own gateway so the
/// layout is valid even though pairs never link to each other.
pub fn pair_grid(pairs: u32, pitch_m: f64, gap_m: f64, radios: u8) -> Vec<Node> {
    let cols = (pairs as f64).sqrt().ceil() as u32;
    let mut nodes = Vec::with_capacity(pairs as usize * 2);
    for p in 0..pairs {
        let base = ((p % cols) as f64 * pitch_m, (p / cols) as f64 * pitch_m);
        nodes.push(Node {
            id: (2 * p) as NodeId,
            pos: base,
            radios,
            gateway: true,
        });
        nodes.push(Node {
            id: (2 * p + 1) as NodeId,
            pos: (base.0 + gap_m, base.1),
            radios,
            gateway: false,
        });
    }
    nodes
}

/// Two concentric rings around a central gateway: `inner` nodes one hop from
/// the gateway, `outer` nodes one hop from the inner ring but out of the
/// gateway's reach. Ring radii scale with `tx_range`.
pub fn two_tier(inner: u32, outer: u32, tx_range_m: f64, radios: u8) -> Vec<Node> {
    let mut nodes = vec![Node { id: 0, pos: (0.0, 0.0), radios, gateway: true }];
    let r1 = 0.6 * tx_range_m;
    let r2 = 1.5 * tx_range_m;
    for i in 0..inner {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / inner.max(1) as f64;
        nodes.push(Node {
            id: (1 + i) as NodeId,
            pos: (r1 * theta.cos(), r1 * theta.sin()),
            radios,
            gateway: false,
        });
    }
    for i in 0..outer {
        // Offset by half a step so outer nodes sit between inner spokes.
        let theta =
            2.0 * std::f64::consts::PI * (i as f64 + 0.5) / outer.max(1) as f64;
        nodes.push(Node {
            id: (1 + inner + i) as NodeId,
            pos: (r2 * theta.cos(), r2 * theta.sin()),
            radios,
            gateway: false,
        });
    }
    nodes
}

// ---------------------------------------------------------------------------
// Config-driven construction
// ---------------------------------------------------------------------------

/// Builds the topology a configuration asks for. Random layouts resample
/// until connected (bounded attempts); explicit files must connect on the
/// first try.
pub fn build_topology(
    cfg: &ScenarioConfig,
    rng: &mut impl Rng,
) -> Result<Topology, TopologyError> {
    const MAX_ATTEMPTS: u32 = 256;
    match cfg.topology_kind {
        TopologyKind::File => unreachable!("file topologies are loaded by the runner"),
        TopologyKind::Chain => {
            Topology::build(chain(cfg.topology_nodes, cfg.spacing_m, cfg.radios), cfg.tx_range_m)
        }
        TopologyKind::Star => {
            Topology::build(star(cfg.topology_nodes, cfg.spacing_m, cfg.radios), cfg.tx_range_m)
        }
        TopologyKind::Grid => {
            Topology::build(grid(cfg.topology_nodes, cfg.spacing_m, cfg.radios), cfg.tx_range_m)
        }
        TopologyKind::PairGrid => Topology::build(
            pair_grid(cfg.pairs, cfg.pitch_m, cfg.pair_gap_m, cfg.radios),
            cfg.tx_range_m,
        ),
        TopologyKind::TwoTier => Topology::build(
            two_tier(cfg.inner_nodes, cfg.outer_nodes, cfg.tx_range_m, cfg.radios),
            cfg.tx_range_m,
        ),
        TopologyKind::Random => {
            // Growth placement connects by construction; the retry loop only
            // guards against pathological parameter combinations.
            let mut last_err = TopologyError::NoGateway;
            for _ in 0..MAX_ATTEMPTS {
                let nodes = random_layout(
                    cfg.topology_nodes,
                    cfg.area_m,
                    cfg.tx_range_m,
                    cfg.radios,
                    cfg.radios_max,
                    rng,
                );
                match Topology::build(nodes, cfg.tx_range_m) {
                    Ok(t) => return Ok(t),
                    Err(e @ (TopologyError::Disconnected(_) | TopologyError::CoincidentNodes(..))) => {
                        last_err = e;
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(last_err)
        }
    }
}

/// Synthesises the configured number of flows over a topology: first the
/// gateway-bound flows, then random distinct pairs. `rate_bps == 0` marks
/// saturation, inherited from the configuration.
pub fn synth_flows(
    topo: &Topology,
    cfg: &ScenarioConfig,
    rng: &mut impl Rng,
) -> Vec<FlowSpec> {
    let n = topo.nodes().len() as NodeId;
    let gateway = topo.gateways().next().unwrap_or(0);
    let mut flows = Vec::with_capacity(cfg.flow_count as usize);
    for i in 0..cfg.flow_count {
        let (src, dst) = if i < cfg.flows_to_gateway {
            // Gateway-bound traffic from a random non-gateway source.
            let src = loop {
                let s = rng.gen_range(0..n);
                if s != gateway {
                    break s;
                }
            };
            (src, gateway)
        } else {
            loop {
                let s = rng.gen_range(0..n);
                let d = rng.gen_range(0..n);
                if s != d {
                    break (s, d);
                }
            }
        };
        flows.push(FlowSpec {
            src,
            dst,
            rate_bps: cfg.flow_rate_bps,
            pkt_bytes: cfg.flow_pkt_bytes,
        });
    }
    flows
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

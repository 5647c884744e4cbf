//! Negotiation-contention probe.
//!
//! Measures how long negotiation takes when N sender-receiver pairs contend
//! inside one carrier-sense domain. The probe topology is a grid of isolated
//! two-node pairs (each its own island around its own gateway): the pairs
//! never interact over data links, so the only coupling between them is
//! control contention — exactly the quantity under study. The negotiation
//! window is made long enough that nothing is ever denied for lack of time.
//! Two figures come out of the trace: the per-flow mean contention time
//! (beacon to that flow's reservation) and the per-interval makespan (beacon
//! to the last reservation of the interval).

use crate::config::{CnaMode, Protocol, ScenarioConfig, TopologyKind};
use crate::sim::event::to_secs;
use crate::sim::trace::{TraceEvent, TraceKind, VecSink};

#[derive(Debug, Clone, Copy)]
pub struct ProbeResult {
    pub pairs: u32,
    /// Intervals observed (excluding the closing beacon).
    pub intervals: u32,
    /// Mean time from beacon to reservation, across all flows and intervals.
    pub mean_contention_s: f64,
    /// Mean time from beacon to the last reservation of the interval.
    pub mean_makespan_s: f64,
    /// Reservations that never happened: pairs x intervals minus observed.
    pub missing_reservations: u32,
}

/// Scenario used by the probe; exposed so the CLI can run it verbatim.
pub fn probe_config(pairs: u32, channels: u16, seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.scenario = format!("probe-{pairs}");
    cfg.protocol = Protocol::TscM2mac;
    cfg.channels = channels;
    cfg.seed = seed;
    cfg.topology_kind = TopologyKind::PairGrid;
    cfg.pairs = pairs;
    cfg.pitch_m = 40.0;
    cfg.pair_gap_m = 2.0;
    cfg.radios = 1;
    cfg.tx_range_m = 25.0;
    // One generous window per long interval: every pair always gets through.
    cfg.beacon_interval_s = 2.0;
    cfg.cna_mode = CnaMode::Fixed;
    cfg.cna_fixed_s = 1.9;
    cfg.duration_s = 8.0;
    cfg.flows_to_gateway = 0;
    cfg.flow_count = 0; // flows are explicit below
    cfg.sink_enabled = false;
    cfg.psm_enabled = false;
    for p in 0..pairs {
        cfg.explicit_flows.push(crate::config::FlowSpec {
            src: 2 * p + 1,
            dst: 2 * p,
            rate_bps: 0,
            pkt_bytes: 512,
        });
    }
    cfg
}

/// Runs the probe and reduces the trace to contention figures.
pub fn contention_time_probe(
    nctf: u32,
    channels: u16,
    seed: u64,
) -> Result<ProbeResult, crate::sim::runner::RunnerError> {
    let cfg = probe_config(nctf, channels, seed);
    let mut sink = VecSink::default();
    crate::sim::runner::run_scenario_traced(&cfg, &mut sink)?;
    Ok(reduce(nctf, &sink.0))
}

fn reduce(pairs: u32, events: &[TraceEvent]) -> ProbeResult {
    let mut samples: Vec<f64> = Vec::new();
    let mut makespans: Vec<f64> = Vec::new();
    let mut interval_start: Option<u64> = None;
    let mut last_reserve: Option<u64> = None;

    let close = |start: Option<u64>, last: Option<u64>, makespans: &mut Vec<f64>| {
        if let (Some(s), Some(l)) = (start, last) {
            makespans.push(to_secs(l - s));
        }
    };

    for ev in events {
        match ev.kind {
            TraceKind::Beacon => {
                close(interval_start, last_reserve, &mut makespans);
                interval_start = Some(ev.time);
                last_reserve = None;
            }
            TraceKind::Reserve => {
                if let Some(s) = interval_start {
                    samples.push(to_secs(ev.time - s));
                    last_reserve = Some(ev.time);
                }
            }
            _ => {}
        }
    }

    let mean = |xs: &[f64]| if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
    let intervals = makespans.len() as u32;
    ProbeResult {
        pairs,
        intervals,
        mean_contention_s: mean(&samples),
        mean_makespan_s: mean(&makespans),
        missing_reservations: (pairs * intervals).saturating_sub(samples.len() as u32),
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_serves_every_pair() {
        let r = contention_time_probe(10, 1, 7).unwrap();
        assert_eq!(r.intervals, 4);
        assert_eq!(r.missing_reservations, 0, "window too small for 10 pairs");
        assert!(r.mean_makespan_s > 0.0);
        assert!(r.mean_contention_s > 0.0);
        assert!(r.mean_contention_s <= r.mean_makespan_s);
        // Ten handshakes of ~816 us plus arbitration: well under 100 ms.
        assert!(r.mean_makespan_s < 0.1, "makespan implausible: {}", r.mean_makespan_s);
    }

    #[test]
    fn more_pairs_take_longer() {
        let small = contention_time_probe(10, 1, 3).unwrap();
        let large = contention_time_probe(40, 1, 3).unwrap();
        assert_eq!(large.missing_reservations, 0);
        assert!(
            large.mean_makespan_s > 2.0 * small.mean_makespan_s,
            "contention should scale superlinearly: {} vs {}",
            small.mean_makespan_s,
            large.mean_makespan_s
        );
    }

    #[test]
    fn disjoint_control_channels_do_not_contend() {
        // Two pairs, two channels: the balanced coloring puts each pair on
        // its own control channel, so neither ever defers to the other and
        // the per-flow contention time stays at the solo level.
        let solo = contention_time_probe(1, 1, 5).unwrap();
        let split = contention_time_probe(2, 2, 5).unwrap();
        let shared = contention_time_probe(2, 1, 5).unwrap();
        assert_eq!(split.missing_reservations, 0);
        assert!(
            split.mean_contention_s < shared.mean_contention_s,
            "channel isolation should beat a shared channel: {} vs {}",
            split.mean_contention_s,
            shared.mean_contention_s
        );
        assert!(
            split.mean_contention_s < 1.5 * solo.mean_contention_s,
            "isolated pairs should look like solo negotiation: {} vs {}",
            split.mean_contention_s,
            solo.mean_contention_s
        );
    }
}

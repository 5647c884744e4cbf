//! Run metrics, computed as a pure function of the trace.
//!
//! The accumulator consumes trace events one at a time (it implements
//! [`TraceSink`]), so a simulation can fold its metrics inline without ever
//! materialising the full event stream — and the very same fold applied to a
//! parsed trace file produces an identical record, which is what makes
//! trace files authoritative.
//!
//! Definitions:
//!
//! * **throughput** — payload bits of packets that reached their *final*
//!   destination, divided by the run duration;
//! * **offered load** — payload bits generated at sources over the duration;
//! * **loss rate** — `(generated − delivered) / generated` in packets, zero
//!   when nothing was generated (packets still queued at the end count as
//!   not delivered);
//! * **delay** — mean of `deliver.t − gen.t` over delivered packets, matched
//!   by (flow, packet id); absent when nothing was delivered;
//! * **fairness** — Jain's index over per-channel delivered payload, taken
//!   across all configured channels (unused channels count as zero);
//! * **energy** — integral of per-radio state spans against a power profile,
//!   with doze spans charged the sleep/wake transition at idle power.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::phys::NodeId;
#[cfg(test)]
use crate::phys::ChannelId;
use crate::psm::{span_energy_j, PowerProfile, PsmTiming, RadioState};
use crate::sim::event::{to_secs, SimTime};
use crate::sim::trace::{TraceEvent, TraceKind, TraceSink};

// ---------------------------------------------------------------------------
// Jain's fairness index
// ---------------------------------------------------------------------------

/// Jain's fairness index `(Σx)² / (n·Σx²)`.
///
/// Ranges from `1/n` (one participant takes everything) to `1.0` (perfectly
/// even). An all-zero or empty allocation is treated as perfectly even.
pub fn jain(shares: &[f64]) -> f64 {
    let n = shares.len() as f64;
    let sum: f64 = shares.iter().sum();
    let sum_sq: f64 = shares.iter().map(|x| x * x).sum();
    if sum_sq == 0.0 {
        return 1.0;
    }
    (sum * sum) / (n * sum_sq)
}

// ---------------------------------------------------------------------------
// Run identity
// ---------------------------------------------------------------------------

/// Static facts about a run, supplied by the caller rather than measured.
#[derive(Debug, Clone, PartialEq)]
pub struct RunInfo {
    pub scenario: String,
    pub protocol: String,
    pub channels: u16,
    pub seed: u64,
    pub pkt_bytes: u64,
    /// Number of concurrent traffic flows in the scenario.
    pub nctf: u32,
}

// ---------------------------------------------------------------------------
// Record
// ---------------------------------------------------------------------------

/// One CSV row of results plus a few extra measured figures.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub info: RunInfo,
    pub offered_bps: f64,
    pub throughput_bps: f64,
    pub delay_s_mean: Option<f64>,
    pub loss_rate: f64,
    pub fairness: f64,
    pub energy_j: f64,
    pub cna_final_s: Option<f64>,
    // Not part of the CSV, but useful to assertions and reports.
    pub generated_packets: u64,
    pub delivered_packets: u64,
    pub dropped_packets: u64,
    pub per_channel_bits: Vec<f64>,
    pub unmatched_deliveries: u64,
}

pub const CSV_HEADER: &str = "scenario,protocol,channels,seed,pkt_bytes,nctf,offered_bps,\
throughput_bps,delay_s_mean,loss_rate,fairness,energy_j,cna_final_s";

impl MetricsRecord {
    /// Renders the record as one CSV data row matching [`CSV_HEADER`].
    pub fn to_csv_row(&self) -> String {
        let mut row = String::new();
        debug_assert!(!self.info.scenario.contains(','));
        debug_assert!(!self.info.protocol.contains(','));
        let _ = write!(
            row,
            "{},{},{},{},{},{},{},{},",
            self.info.scenario,
            self.info.protocol,
            self.info.channels,
            self.info.seed,
            self.info.pkt_bytes,
            self.info.nctf,
            self.offered_bps,
            self.throughput_bps,
        );
        match self.delay_s_mean {
            Some(d) => {
                let _ = write!(row, "{d}");
            }
            None => {}
        }
        let _ = write!(row, ",{},{},{},", self.loss_rate, self.fairness, self.energy_j);
        if let Some(c) = self.cna_final_s {
            let _ = write!(row, "{c}");
        }
        row
    }
}

// ---------------------------------------------------------------------------
// Streaming accumulator
// ---------------------------------------------------------------------------

/// Folds trace events into a [`MetricsRecord`].
pub struct MetricsAccumulator {
    channels: u16,
    profile: PowerProfile,
    timing: PsmTiming,
    gen_times: BTreeMap<(u32, u64), SimTime>,
    generated: u64,
    generated_payload_bits: u128,
    delivered: u64,
    delivered_payload_bits: u128,
    dropped: u64,
    per_channel_bits: Vec<f64>,
    delay_sum_s: f64,
    // BTreeMap so closing the spans in `finish` folds energy in a fixed
    // order; float summation order must not depend on hasher state.
    radio_spans: BTreeMap<(NodeId, u8), (SimTime, RadioState)>,
    energy_j: f64,
    cna_final_s: Option<f64>,
    unmatched_deliveries: u64,
}

impl MetricsAccumulator {
    pub fn new(channels: u16, profile: PowerProfile, timing: PsmTiming) -> Self {
        MetricsAccumulator {
            channels,
            profile,
            timing,
            gen_times: BTreeMap::new(),
            generated: 0,
            generated_payload_bits: 0,
            delivered: 0,
            delivered_payload_bits: 0,
            dropped: 0,
            per_channel_bits: vec![0.0; channels as usize],
            delay_sum_s: 0.0,
            radio_spans: BTreeMap::new(),
            energy_j: 0.0,
            cna_final_s: None,
            unmatched_deliveries: 0,
        }
    }

    pub fn observe(&mut self, ev: &TraceEvent) {
        match ev.kind {
            TraceKind::Gen => {
                let flow: u32 = ev.get_parsed("flow").expect("gen without flow");
                let pkt: u64 = ev.get_parsed("pkt").expect("gen without pkt");
                let bytes: u64 = ev.get_parsed("bytes").expect("gen without bytes");
                let prev = self.gen_times.insert((flow, pkt), ev.time);
                debug_assert!(prev.is_none(), "duplicate generation of flow {flow} pkt {pkt}");
                self.generated += 1;
                self.generated_payload_bits += bytes as u128 * 8;
            }
            TraceKind::Deliver => {
                let flow: u32 = ev.get_parsed("flow").expect("deliver without flow");
                let pkt: u64 = ev.get_parsed("pkt").expect("deliver without pkt");
                let bytes: u64 = ev.get_parsed("bytes").expect("deliver without bytes");
                match self.gen_times.remove(&(flow, pkt)) {
                    Some(gen_t) => {
                        debug_assert!(ev.time >= gen_t);
                        self.delivered += 1;
                        self.delivered_payload_bits += bytes as u128 * 8;
                        self.delay_sum_s += to_secs(ev.time - gen_t);
                        if let Some(ch) = ev.channel {
                            let idx = ch as usize - 1;
                            if idx < self.per_channel_bits.len() {
                                self.per_channel_bits[idx] += bytes as f64 * 8.0;
                            }
                        }
                    }
                    None => self.unmatched_deliveries += 1,
                }
            }
            TraceKind::Drop => {
                self.dropped += 1;
            }
            TraceKind::State => {
                let node = ev.node.expect("state without node");
                let radio = ev.radio.expect("state without radio");
                let state: RadioState =
                    ev.get_parsed("state").expect("state event without state detail");
                if let Some((since, prev)) = self.radio_spans.insert((node, radio), (ev.time, state))
                {
                    debug_assert!(ev.time >= since);
                    self.energy_j +=
                        span_energy_j(prev, to_secs(ev.time - since), &self.profile, &self.timing);
                }
            }
            TraceKind::Cna => {
                self.cna_final_s = ev.get_parsed("len");
                debug_assert!(self.cna_final_s.is_some(), "cna event without len");
            }
            _ => {}
        }
    }

    /// Closes open radio spans at `end` and produces the record.
    pub fn finish(mut self, end: SimTime, info: RunInfo) -> MetricsRecord {
        for ((_, _), (since, state)) in std::mem::take(&mut self.radio_spans) {
            debug_assert!(end >= since, "run end {end} precedes open span start {since}");
            let len = end.saturating_sub(since);
            self.energy_j += span_energy_j(state, to_secs(len), &self.profile, &self.timing);
        }
        let duration_s = to_secs(end);
        let rate = |bits: u128| if duration_s > 0.0 { bits as f64 / duration_s } else { 0.0 };
        let loss_rate = if self.generated == 0 {
            0.0
        } else {
            (self.generated - self.delivered) as f64 / self.generated as f64
        };
        MetricsRecord {
            info,
            offered_bps: rate(self.generated_payload_bits),
            throughput_bps: rate(self.delivered_payload_bits),
            delay_s_mean: (self.delivered > 0)
                .then(|| self.delay_sum_s / self.delivered as f64),
            loss_rate,
            fairness: jain(&self.per_channel_bits),
            energy_j: self.energy_j,
            cna_final_s: self.cna_final_s,
            generated_packets: self.generated,
            delivered_packets: self.delivered,
            dropped_packets: self.dropped,
            per_channel_bits: self.per_channel_bits,
            unmatched_deliveries: self.unmatched_deliveries,
        }
    }

    /// Number of channels this accumulator was configured with.
    pub fn channels(&self) -> u16 {
        self.channels
    }
}

impl TraceSink for MetricsAccumulator {
    fn record(&mut self, event: &TraceEvent) {
        self.observe(event);
    }
}

/// Folds an in-memory or parsed event stream into a record.
pub fn from_events<'a>(
    events: impl IntoIterator<Item = &'a TraceEvent>,
    channels: u16,
    profile: PowerProfile,
    timing: PsmTiming,
    end: SimTime,
    info: RunInfo,
) -> MetricsRecord {
    let mut acc = MetricsAccumulator::new(channels, profile, timing);
    for ev in events {
        acc.observe(ev);
    }
    acc.finish(end, info)
}

/// Parses a written trace and folds it, line by line.
pub fn from_trace_reader(
    reader: impl std::io::BufRead,
    channels: u16,
    profile: PowerProfile,
    timing: PsmTiming,
    end: SimTime,
    info: RunInfo,
) -> std::io::Result<MetricsRecord> {
    let mut acc = MetricsAccumulator::new(channels, profile, timing);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev: TraceEvent = line
            .parse()
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{e}")))?;
        acc.observe(&ev);
    }
    Ok(acc.finish(end, info))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psm::WAVELAN;
    use crate::sim::event::NS_PER_MS;
    use approx::assert_relative_eq;

    fn info() -> RunInfo {
        RunInfo {
            scenario: "unit".into(),
            protocol: "tsc_m2mac".into(),
            channels: 3,
            seed: 7,
            pkt_bytes: 210,
            nctf: 2,
        }
    }

    fn gen(t: SimTime, flow: u32, pkt: u64, bytes: u64) -> TraceEvent {
        TraceEvent::new(t, TraceKind::Gen)
            .node(1)
            .with("flow", flow)
            .with("pkt", pkt)
            .with("bytes", bytes)
    }

    fn deliver(t: SimTime, flow: u32, pkt: u64, bytes: u64, ch: ChannelId) -> TraceEvent {
        TraceEvent::new(t, TraceKind::Deliver)
            .node(2)
            .channel(ch)
            .with("flow", flow)
            .with("pkt", pkt)
            .with("bytes", bytes)
    }

    #[test]
    fn jain_matches_known_values() {
        assert_relative_eq!(jain(&[5.0, 5.0, 5.0]), 1.0);
        assert_relative_eq!(jain(&[1.0, 0.0, 0.0]), 1.0 / 3.0);
        assert_relative_eq!(jain(&[4.0, 2.0]), 36.0 / (2.0 * 20.0));
        assert_relative_eq!(jain(&[]), 1.0);
        assert_relative_eq!(jain(&[0.0, 0.0]), 1.0);
    }

    #[test]
    fn throughput_counts_only_delivered_payload() {
        let events = vec![
            gen(0, 0, 0, 1000),
            gen(0, 0, 1, 1000),
            deliver(500 * NS_PER_MS, 0, 0, 1000, 1),
        ];
        let rec = from_events(
            events.iter(),
            3,
            WAVELAN,
            PsmTiming::default(),
            1_000_000_000,
            info(),
        );
        assert_relative_eq!(rec.throughput_bps, 8000.0);
        assert_relative_eq!(rec.offered_bps, 16000.0);
        assert_relative_eq!(rec.loss_rate, 0.5);
        assert_eq!(rec.generated_packets, 2);
        assert_eq!(rec.delivered_packets, 1);
    }

    #[test]
    fn delay_is_mean_of_matched_pairs_and_absent_when_none() {
        let events = vec![
            gen(0, 0, 0, 100),
            gen(100 * NS_PER_MS, 1, 0, 100),
            deliver(200 * NS_PER_MS, 0, 0, 100, 1),
            deliver(400 * NS_PER_MS, 1, 0, 100, 2),
        ];
        let rec =
            from_events(events.iter(), 2, WAVELAN, PsmTiming::default(), NS_PER_MS * 1000, info());
        // Delays: 0.2 s and 0.3 s.
        assert_relative_eq!(rec.delay_s_mean.unwrap(), 0.25);

        let nothing = from_events(
            [gen(0, 0, 0, 100)].iter(),
            2,
            WAVELAN,
            PsmTiming::default(),
            NS_PER_MS * 1000,
            info(),
        );
        assert_eq!(nothing.delay_s_mean, None);
        assert_relative_eq!(nothing.loss_rate, 1.0);
    }

    #[test]
    fn loss_rate_is_zero_when_nothing_generated() {
        let rec = from_events([].iter(), 2, WAVELAN, PsmTiming::default(), 1_000, info());
        assert_relative_eq!(rec.loss_rate, 0.0);
        assert_relative_eq!(rec.throughput_bps, 0.0);
        assert_eq!(rec.delay_s_mean, None);
    }

    #[test]
    fn fairness_spreads_over_all_configured_channels() {
        let events = vec![
            gen(0, 0, 0, 100),
            gen(0, 0, 1, 100),
            deliver(NS_PER_MS, 0, 0, 100, 1),
            deliver(NS_PER_MS, 0, 1, 100, 1),
        ];
        // Three channels configured, one carries everything: 1/3.
        let rec =
            from_events(events.iter(), 3, WAVELAN, PsmTiming::default(), NS_PER_MS * 10, info());
        assert_relative_eq!(rec.fairness, 1.0 / 3.0);
    }

    #[test]
    fn energy_integrates_state_spans() {
        let st = |t: SimTime, s: &str| {
            TraceEvent::new(t, TraceKind::State).node(0).radio(0).with("state", s)
        };
        let events = vec![st(0, "idle"), st(400 * NS_PER_MS, "tx"), st(600 * NS_PER_MS, "idle")];
        let rec = from_events(
            events.iter(),
            1,
            WAVELAN,
            PsmTiming::default(),
            1_000 * NS_PER_MS,
            info(),
        );
        // 0.4 s idle + 0.2 s tx + 0.4 s idle (closed at end of run).
        assert_relative_eq!(rec.energy_j, 1.15 * 0.8 + 1.65 * 0.2, epsilon = 1e-9);
    }

    #[test]
    fn doze_spans_charge_transition_overhead() {
        let st = |t: SimTime, s: &str| {
            TraceEvent::new(t, TraceKind::State).node(0).radio(0).with("state", s)
        };
        let events = vec![st(0, "doze")];
        let rec = from_events(
            events.iter(),
            1,
            WAVELAN,
            PsmTiming::default(),
            100 * NS_PER_MS,
            info(),
        );
        assert_relative_eq!(rec.energy_j, 1.15 * 0.5e-3 + 0.045 * 99.5e-3, epsilon = 1e-9);
    }

    #[test]
    fn cna_final_takes_the_last_event() {
        let events = vec![
            TraceEvent::new(0, TraceKind::Cna).with("len", 0.02),
            TraceEvent::new(NS_PER_MS * 100, TraceKind::Cna).with("len", 0.025),
        ];
        let rec =
            from_events(events.iter(), 1, WAVELAN, PsmTiming::default(), NS_PER_MS * 200, info());
        assert_relative_eq!(rec.cna_final_s.unwrap(), 0.025);
    }

    #[test]
    fn csv_row_matches_header_shape() {
        let rec = from_events([].iter(), 2, WAVELAN, PsmTiming::default(), 1_000_000_000, info());
        let row = rec.to_csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with("unit,tsc_m2mac,3,7,210,2,"));
        // Absent delay and cna render as empty cells.
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[8], "");
        assert_eq!(cells[12], "");
    }

    #[test]
    fn record_from_written_trace_matches_inline_record() {
        let events = vec![
            gen(0, 0, 0, 210),
            TraceEvent::new(0, TraceKind::State).node(0).radio(0).with("state", "idle"),
            TraceEvent::new(77_000_001, TraceKind::State).node(0).radio(0).with("state", "tx"),
            deliver(123_456_789, 0, 0, 210, 2),
            TraceEvent::new(200_000_000, TraceKind::Cna).with("len", 0.0333333),
        ];
        let inline = from_events(
            events.iter(),
            2,
            WAVELAN,
            PsmTiming::default(),
            300_000_000,
            info(),
        );
        let text: String = events.iter().map(|e| format!("{e}\n")).collect();
        let parsed = from_trace_reader(
            std::io::Cursor::new(text),
            2,
            WAVELAN,
            PsmTiming::default(),
            300_000_000,
            info(),
        )
        .unwrap();
        assert_eq!(inline, parsed);
        assert_eq!(inline.to_csv_row(), parsed.to_csv_row());
    }
}

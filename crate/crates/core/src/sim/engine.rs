//! The beacon-interval MAC engine.
//!
//! Time is sliced into fixed beacon intervals. Every interval opens with a
//! negotiation window and closes with a data-transfer phase:
//!
//! * **Negotiation** — each directed link with pending traffic contends on
//!   its control channel (CSMA with binary exponential backoff) and runs a
//!   three-way handshake: the sender REQs its usable channel set, the
//!   receiver picks the best common channel by its own ranking and ACKs it
//!   (or reports no idle radio / no common channel), and the sender confirms
//!   with a one-hop broadcast RES that neighbours overhear to update their
//!   local channel-usage knowledge. Handshakes that cannot finish before the
//!   pilot are denied and retry next interval.
//! * **Transfer** — reserved pairs retune their radios (paying the handover
//!   time), then stream packets back to back until the queue drains, the
//!   transfer-request budget runs out, or the next packet would cross the
//!   beacon. Failed packets are retried in later intervals. Unreserved
//!   radios may doze through the whole phase; a sender whose stream ends
//!   early may doze through the remainder.
//!
//! Two modes share this machinery: the negotiated multi-channel MAC
//! ([`EngineMode::Tsc`]) with per-link control channels and
//! interference-aware channel choice, and a common-control-channel baseline
//! ([`EngineMode::Rama`]) that funnels every handshake through channel 1 and
//! assigns data channels statically, ignoring interference.
//!
//! Determinism: all iteration is in canonical (sorted) order, every random
//! draw comes from a named ChaCha stream derived from the master seed, and
//! event ties are broken by explicit class ranks. Power saving changes radio
//! states and therefore energy, but never packet outcomes, because doze
//! decisions are taken only where no transmission or reception could occur.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ccaa::ChannelAssignment;
use crate::cna::CnaController;
use crate::config::{CnaMode, FlowSpec, ScenarioConfig};
use crate::crus::{pick_common, ranked_channels, usable_ranked};
use crate::phys::{distance, ChannelId, InterferenceLedger, NodeId, Pos};
use crate::psm::{doze_pays_off, transition_is_legal, wake_deadline, RadioState};
use crate::rama::CONTROL_CHANNEL;
use crate::sim::event::{airtime, secs, to_secs, EventClass, EventQueue, SimTime, NS_PER_US};
use crate::sim::medium::{Medium, TxKind};
use crate::sim::trace::{TraceEvent, TraceKind, TraceSink};
use crate::topo::Topology;

// ---------------------------------------------------------------------------
// Identifiers and small records
// ---------------------------------------------------------------------------

type PairId = u32;
type ResId = u32;
type FlowId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineMode {
    Tsc,
    Rama,
}

#[derive(Debug, Clone)]
struct Packet {
    flow: FlowId,
    pkt: u64,
    bytes: u64,
    /// Index into the flow's route of the node currently holding the packet.
    hop_idx: usize,
}

#[derive(Debug)]
struct FlowState {
    spec: FlowSpec,
    route: Vec<NodeId>,
    next_pkt: u64,
    /// Arrival spacing for constant-rate flows; 0 marks saturation.
    spacing: SimTime,
    /// Remaining payload bits of the current transfer request (saturated
    /// flows with exponential request sizes); `None` = unbounded.
    budget_bits: Option<i64>,
    /// Set when a request boundary fell inside the current interval: the
    /// flow stays quiet until the next beacon.
    paused: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NegState {
    /// Not negotiating (nothing pending, or already reserved).
    Off,
    /// Wants to negotiate but its control radio is busy with another pair.
    WaitRadio,
    /// Backoff counted partway down, then the channel went busy.
    Frozen { remaining: SimTime },
    /// Backoff timer armed.
    Armed { fire_at: SimTime },
    /// REQ sent, waiting for the ACK.
    AwaitAck,
    /// Gave up for this interval (no idle radio, denied, or out of window).
    Denied,
}

#[derive(Debug)]
struct PairState {
    src: NodeId,
    dst: NodeId,
    ctrl_ch: ChannelId,
    ctrl_radio: u8,
    neg: NegState,
    cw: u32,
    /// Bumped to invalidate in-flight timers for this pair.
    epoch: u64,
    /// Saturated flows whose first hop is this pair, with a round-robin
    /// cursor for fairness between them.
    sat_flows: Vec<FlowId>,
    sat_cursor: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum AckVerdict {
    /// Receiver has no radio left to reserve.
    Invalid,
    /// The offered and usable sets do not intersect.
    Null,
    /// Agreed data channel.
    Ch(ChannelId),
}

#[derive(Debug)]
enum FrameKind {
    Req { offered: BTreeSet<ChannelId> },
    Ack { verdict: AckVerdict },
    Res { ch: ChannelId },
}

#[derive(Debug)]
struct Frame {
    pair: PairId,
    kind: FrameKind,
}

#[derive(Debug)]
struct Reservation {
    pair: PairId,
    ch: ChannelId,
    tx_radio: u8,
    /// `None` when the receiver never decoded the RES: the sender streams to
    /// a deaf peer and every packet fails honestly.
    rx_radio: Option<u8>,
    streaming: bool,
    in_flight: Option<Packet>,
    /// Packets that failed in the air this interval; re-queued at the front
    /// next beacon.
    retry: Vec<Packet>,
}

#[derive(Debug)]
struct Radio {
    /// Control-duty channel (binding from the static assignment); spare
    /// radios have none and park on the node's first bound channel.
    home: ChannelId,
    tuned: ChannelId,
    state: RadioState,
    reserved: bool,
    /// Earliest instant the radio can transmit or decode (handover end).
    available_at: SimTime,
    /// Pair currently running its handshake on this radio.
    lock: Option<PairId>,
}

/// Running union of busy spans on one channel during the negotiation window.
#[derive(Debug, Default, Clone, Copy)]
struct BusyUnion {
    open: Option<(SimTime, SimTime)>,
    total: SimTime,
}

impl BusyUnion {
    fn add(&mut self, start: SimTime, end: SimTime) {
        if end <= start {
            return;
        }
        match &mut self.open {
            None => self.open = Some((start, end)),
            Some((_, open_end)) if start > *open_end => {
                self.total += *open_end - self.open.unwrap().0;
                self.open = Some((start, end));
            }
            Some((_, open_end)) => *open_end = (*open_end).max(end),
        }
    }

    fn close(&mut self) -> SimTime {
        if let Some((s, e)) = self.open.take() {
            self.total += e - s;
        }
        std::mem::take(&mut self.total)
    }
}

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum Ev {
    Beacon,
    Pilot,
    Arrival { flow: FlowId },
    CtrlEnd { token: u64 },
    DataEnd { token: u64, res: ResId },
    Fire { pair: PairId, epoch: u64 },
    AckTimeout { pair: PairId, epoch: u64 },
    StreamStart { res: ResId },
    Wake { node: NodeId, radio: u8 },
    SinkDeliver { flow: FlowId, pkt: u64, bytes: u64, ch: ChannelId, node: NodeId },
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

pub struct BeaconEngine<'a, S: TraceSink> {
    mode: EngineMode,
    cfg: &'a ScenarioConfig,

    assignment: &'a ChannelAssignment,
    sink: &'a mut S,

    queue: EventQueue<Ev>,
    medium: Medium,
    positions: Vec<Pos>,
    gateways: BTreeSet<NodeId>,

    mac_rng: ChaCha8Rng,
    crus_rng: ChaCha8Rng,
    flow_rng: ChaCha8Rng,

    radios: Vec<Vec<Radio>>,
    ledgers: Vec<InterferenceLedger>,
    flows: Vec<FlowState>,
    pairs: Vec<PairState>,
    pair_of_link: BTreeMap<(NodeId, NodeId), PairId>,
    queues: Vec<VecDeque<Packet>>,
    reservations: Vec<Reservation>,
    res_of_pair: BTreeMap<PairId, ResId>,
    frames: BTreeMap<u64, Frame>,

    cna: CnaController,
    busy_union: Vec<BusyUnion>,

    // Derived tick constants.
    interval_ns: SimTime,
    slot_ns: SimTime,
    difs_ns: SimTime,
    ctrl_ns: SimTime,
    guard_ns: SimTime,
    handover_ns: SimTime,
    run_end: SimTime,
    stop_ns: SimTime,

    // Interval markers.
    interval_start: SimTime,
    pilot_at: SimTime,
    next_beacon: SimTime,
}

impl<'a, S: TraceSink> BeaconEngine<'a, S> {
    pub fn new(
        mode: EngineMode,
        cfg: &'a ScenarioConfig,
        topo: &'a Topology,
        assignment: &'a ChannelAssignment,
        flows: Vec<FlowSpec>,
        sink: &'a mut S,
    ) -> Self {
        let positions: Vec<Pos> = topo.positions().to_vec();
        let params = cfg.phys_params();
        let medium = Medium::new(positions.clone(), params.clone());
        let ledgers = (0..positions.len())
            .map(|_| InterferenceLedger::new(positions.clone(), params.clone()))
            .collect();

        let interval_ns = secs(cfg.beacon_interval_s);
        let duration_ns = secs(cfg.duration_s);
        let intervals = duration_ns.div_ceil(interval_ns).max(1);
        let run_end = intervals * interval_ns;
        let stop_ns = if cfg.flow_stop_s > 0.0 { secs(cfg.flow_stop_s) } else { duration_ns };

        // Radios: control-duty channel from the assignment; spares park on
        // the node's first bound channel. In common-control mode radio 0
        // always serves channel 1.
        let mut radios: Vec<Vec<Radio>> = Vec::with_capacity(positions.len());
        for node in topo.nodes() {
            let mut per_node = Vec::with_capacity(node.radios as usize);
            let parked = assignment
                .node_channels(node.id)
                .into_iter()
                .next()
                .unwrap_or(CONTROL_CHANNEL);
            for r in 0..node.radios {
                let home = if mode == EngineMode::Rama && r == 0 {
                    CONTROL_CHANNEL
                } else {
                    assignment.radio_channel(node.id, r).unwrap_or(parked)
                };
                per_node.push(Radio {
                    home,
                    tuned: home,
                    state: RadioState::Idle,
                    reserved: false,
                    available_at: 0,
                    lock: None,
                });
            }
            radios.push(per_node);
        }

        // Flows and their routes; directed pairs from route edges.
        let mut flow_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        flow_rng.set_stream(0xF10);
        let mut flow_states: Vec<FlowState> = Vec::with_capacity(flows.len());
        let mut links: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
        for spec in &flows {
            let route = topo
                .route(spec.src, spec.dst)
                .expect("flow endpoints must be connected");
            for w in route.windows(2) {
                links.insert((w[0], w[1]));
            }
            let spacing = if spec.rate_bps == 0 {
                0
            } else {
                airtime(spec.pkt_bytes, spec.rate_bps)
            };
            let budget = (cfg.request_mean_bits > 0 && spec.rate_bps == 0).then(|| {
                draw_exp_bits(cfg.request_mean_bits, &mut flow_rng)
            });
            flow_states.push(FlowState {
                spec: *spec,
                route,
                next_pkt: 0,
                spacing,
                budget_bits: budget,
                paused: false,
            });
        }

        let mut pairs: Vec<PairState> = Vec::new();
        let mut pair_of_link = BTreeMap::new();
        for (src, dst) in links {
            let (ctrl_ch, ctrl_radio) = match mode {
                EngineMode::Rama => (CONTROL_CHANNEL, 0),
                EngineMode::Tsc => {
                    let ch = assignment
                        .channel_of(src, dst)
                        .expect("route edge must be colored");
                    let radio = radios[src as usize]
                        .iter()
                        .position(|r| r.home == ch)
                        .expect("sender must have a radio on its link's channel")
                        as u8;
                    (ch, radio)
                }
            };
            let id = pairs.len() as PairId;
            pair_of_link.insert((src, dst), id);
            pairs.push(PairState {
                src,
                dst,
                ctrl_ch,
                ctrl_radio,
                neg: NegState::Off,
                cw: cfg.cw_min,
                epoch: 0,
                sat_flows: Vec::new(),
                sat_cursor: 0,
            });
        }
        for (fid, f) in flow_states.iter().enumerate() {
            if f.spacing == 0 {
                let first = (f.route[0], f.route[1]);
                let pid = pair_of_link[&first];
                pairs[pid as usize].sat_flows.push(fid as FlowId);
            }
        }
        let queues = (0..pairs.len()).map(|_| VecDeque::new()).collect();

        let mut mac_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        mac_rng.set_stream(0xAC);
        let mut crus_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        crus_rng.set_stream(0xC05);

        let initial_cna = match cfg.cna_mode {
            CnaMode::Fixed => cfg.cna_fixed_s,
            CnaMode::Adaptive => cfg.cna_min_s,
        };
        let cna = CnaController::new(
            initial_cna.min(cfg.beacon_interval_s * 0.99),
            cfg.channels,
            cfg.cna_epoch_intervals.max(1),
            // Fixed mode still carries a controller; it is simply never asked
            // to adjust.
            {
                let mut p = cfg.cna_params();
                if cfg.cna_mode == CnaMode::Fixed {
                    p.min_s = initial_cna.min(cfg.beacon_interval_s * 0.99);
                    p.max_s = p.min_s;
                }
                p
            },
        );

        let data_rate = cfg.data_rate_bps;
        BeaconEngine {
            mode,
            cfg,

            assignment,
            sink,
            queue: EventQueue::new(),
            medium,
            positions,
            gateways: topo.gateways().collect(),
            mac_rng,
            crus_rng,
            flow_rng,
            radios,
            ledgers,
            flows: flow_states,
            pairs,
            pair_of_link,
            queues,
            reservations: Vec::new(),
            res_of_pair: BTreeMap::new(),
            frames: BTreeMap::new(),
            cna,
            busy_union: vec![BusyUnion::default(); cfg.channels as usize],
            interval_ns,
            slot_ns: cfg.slot_us * NS_PER_US,
            difs_ns: cfg.difs_us * NS_PER_US,
            ctrl_ns: airtime(cfg.ctrl_bytes, data_rate),
            guard_ns: cfg.ack_guard_us * NS_PER_US,
            handover_ns: cfg.handover_us * NS_PER_US,
            run_end,
            stop_ns,
            interval_start: 0,
            pilot_at: 0,
            next_beacon: 0,
        }
    }

    /// Runs the scenario to its final beacon and returns that time.
    pub fn run(&mut self) -> SimTime {
        // Initial radio states.
        for node in 0..self.radios.len() {
            for r in 0..self.radios[node].len() {
                let ev = TraceEvent::new(0, TraceKind::State)
                    .node(node as NodeId)
                    .radio(r as u8)
                    .channel(self.radios[node][r].tuned)
                    .with("state", RadioState::Idle.as_str());
                self.sink.record(&ev);
            }
        }
        for fid in 0..self.flows.len() {
            if self.flows[fid].spacing > 0 {
                self.queue.push(0, EventClass::Arrival, Ev::Arrival { flow: fid as FlowId });
            }
        }
        self.queue.push(0, EventClass::Beacon, Ev::Beacon);

        while let Some((t, ev)) = self.queue.pop() {
            match ev {
                Ev::Beacon => self.on_beacon(t),
                Ev::Pilot => self.on_pilot(t),
                Ev::Arrival { flow } => self.on_arrival(t, flow),
                Ev::CtrlEnd { token } => self.on_ctrl_end(t, token),
                Ev::DataEnd { token, res } => self.on_data_end(t, token, res),
                Ev::Fire { pair, epoch } => self.on_fire(t, pair, epoch),
                Ev::AckTimeout { pair, epoch } => self.on_ack_timeout(t, pair, epoch),
                Ev::StreamStart { res } => self.try_send_next(t, res),
                Ev::Wake { node, radio } => {
                    self.set_radio_state(t, node, radio, RadioState::Idle);
                    self.radios[node as usize][radio as usize].available_at = t;
                }
                Ev::SinkDeliver { flow, pkt, bytes, ch, node } => {
                    let ev = TraceEvent::new(t, TraceKind::Deliver)
                        .node(node)
                        .channel(ch)
                        .with("flow", flow)
                        .with("pkt", pkt)
                        .with("bytes", bytes);
                    self.sink.record(&ev);
                }
            }
        }
        self.run_end
    }

    // -- small helpers --------------------------------------------------------

    fn set_radio_state(&mut self, t: SimTime, node: NodeId, radio: u8, state: RadioState) {
        let r = &mut self.radios[node as usize][radio as usize];
        if r.state == state {
            return;
        }
        debug_assert!(
            transition_is_legal(r.state, state),
            "illegal radio transition {:?} -> {:?} at node {node} radio {radio}",
            r.state,
            state
        );
        r.state = state;
        let tuned = r.tuned;
        let ev = TraceEvent::new(t, TraceKind::State)
            .node(node)
            .radio(radio)
            .channel(tuned)
            .with("state", state.as_str());
        self.sink.record(&ev);
    }

    fn in_sense(&self, a: NodeId, b: NodeId) -> bool {
        a == b
            || distance(self.positions[a as usize], self.positions[b as usize])
                <= self.cfg.sense_range_m
    }

    fn data_air_ns(&self, payload_bytes: u64) -> SimTime {
        airtime(payload_bytes + self.cfg.overhead_bytes, self.cfg.data_rate_bps)
    }

    /// Lowest unreserved radio of `node`, preferring one already tuned to
    /// `ch` to save the handover.
    /// First radio index eligible to carry a data reservation. The baseline
    /// pins radio 0 to the common control channel, so data never takes it;
    /// the two-stage protocol has no such reservation.
    fn first_data_radio(&self) -> usize {
        match self.mode {
            EngineMode::Rama => 1,
            EngineMode::Tsc => 0,
        }
    }

    fn pick_unreserved_radio(&self, node: NodeId, ch: ChannelId) -> Option<u8> {
        let skip = self.first_data_radio();
        let rs = &self.radios[node as usize];
        rs.iter()
            .enumerate()
            .skip(skip)
            .find(|(_, r)| !r.reserved && r.tuned == ch)
            .or_else(|| rs.iter().enumerate().skip(skip).find(|(_, r)| !r.reserved))
            .map(|(i, _)| i as u8)
    }

    fn has_unreserved_radio(&self, node: NodeId) -> bool {
        self.radios[node as usize].iter().skip(self.first_data_radio()).any(|r| !r.reserved)
    }

    /// A radio of `node` that was tuned to `ch` and able to listen for the
    /// whole frame starting at `start`.
    fn listening_radio(&self, node: NodeId, ch: ChannelId, start: SimTime) -> Option<u8> {
        self.radios[node as usize]
            .iter()
            .position(|r| r.tuned == ch && r.available_at <= start && r.state != RadioState::Doze)
            .map(|i| i as u8)
    }

    fn record_ctrl_busy(&mut self, ch: ChannelId, start: SimTime, end: SimTime) {
        let idx = ch as usize - 1;
        let s = start.max(self.interval_start);
        let e = end.min(self.pilot_at);
        if idx < self.busy_union.len() {
            self.busy_union[idx].add(s, e);
        }
    }

    // -- beacon ---------------------------------------------------------------

    fn on_beacon(&mut self, t: SimTime) {
        self.sink.record(&TraceEvent::new(t, TraceKind::Beacon));

        // Return air-failed packets to their queues (front, in packet order)
        // and release every reservation.
        let reservations = std::mem::take(&mut self.reservations);
        self.res_of_pair.clear();
        for res in reservations.into_iter().rev() {
            debug_assert!(res.in_flight.is_none(), "packet in flight across a beacon");
            let q = &mut self.queues[res.pair as usize];
            for pkt in res.retry.into_iter().rev() {
                q.push_front(pkt);
            }
        }

        if t >= self.run_end {
            return;
        }
        self.interval_start = t;
        self.next_beacon = t + self.interval_ns;

        // Every radio wakes (guaranteed by wake scheduling), unreserves, and
        // retunes to its control-duty channel.
        for node in 0..self.radios.len() {
            for r in 0..self.radios[node].len() {
                let radio = &mut self.radios[node][r];
                debug_assert!(radio.state != RadioState::Doze, "dozing through a beacon");
                radio.reserved = false;
                radio.lock = None;
                if radio.tuned != radio.home {
                    radio.tuned = radio.home;
                    radio.available_at = t + self.handover_ns;
                }
            }
        }

        // Fresh per-interval knowledge.
        for ledger in &mut self.ledgers {
            ledger.clear();
        }
        self.medium.clear_history();
        for u in &mut self.busy_union {
            *u = BusyUnion::default();
        }
        for f in &mut self.flows {
            f.paused = false;
        }

        let cna_len = secs(self.cna.current_s());
        self.pilot_at = t + cna_len.min(self.interval_ns - 1);
        self.sink
            .record(&TraceEvent::new(t, TraceKind::Cna).with("len", self.cna.current_s()));

        // Kick every pair with pending work.
        for pid in 0..self.pairs.len() as PairId {
            let p = &mut self.pairs[pid as usize];
            p.epoch += 1;
            p.cw = self.cfg.cw_min;
            p.neg = NegState::Off;
            let pending = !self.queues[pid as usize].is_empty()
                || self.pairs[pid as usize]
                    .sat_flows
                    .iter()
                    .any(|&f| !self.flows[f as usize].paused && t < self.stop_ns);
            if pending {
                self.try_arm(t, pid);
            }
        }

        self.queue.push(self.pilot_at, EventClass::Pilot, Ev::Pilot);
        self.queue.push(self.next_beacon, EventClass::Beacon, Ev::Beacon);
    }

    // -- negotiation ----------------------------------------------------------

    /// Puts a pair into contention: waits for its control radio, freezes if
    /// the channel is busy, otherwise arms the backoff timer. Denies when the
    /// handshake cannot finish before the pilot.
    fn try_arm(&mut self, t: SimTime, pid: PairId) {
        let (src, ctrl_ch, ctrl_radio, cw) = {
            let p = &self.pairs[pid as usize];
            (p.src, p.ctrl_ch, p.ctrl_radio, p.cw)
        };
        if !self.has_unreserved_radio(src) {
            self.pairs[pid as usize].neg = NegState::Denied;
            return;
        }
        let radio = &self.radios[src as usize][ctrl_radio as usize];
        if radio.lock.is_some() {
            self.pairs[pid as usize].neg = NegState::WaitRadio;
            return;
        }
        let slots = self.mac_rng.gen_range(0..cw) as SimTime;
        let wait = self.difs_ns + slots * self.slot_ns;
        let start = t.max(radio.available_at);
        if self.medium.busy_at(src, ctrl_ch) {
            self.pairs[pid as usize].neg = NegState::Frozen { remaining: wait };
            return;
        }
        self.arm_at(start + wait, pid);
    }

    fn arm_at(&mut self, fire_at: SimTime, pid: PairId) {
        // The whole handshake (REQ + ACK + RES) must fit before the pilot.
        if fire_at + 3 * self.ctrl_ns + self.guard_ns > self.pilot_at {
            self.pairs[pid as usize].neg = NegState::Denied;
            return;
        }
        let p = &mut self.pairs[pid as usize];
        p.epoch += 1;
        p.neg = NegState::Armed { fire_at };
        let epoch = p.epoch;
        self.queue.push(fire_at, EventClass::Timer, Ev::Fire { pair: pid, epoch });
    }

    /// A control transmission began: freeze every armed pair that can hear
    /// it (except those whose timer expires this very instant — they are
    /// already committed, which is how equal-slot collisions happen).
    fn on_ctrl_started(&mut self, t: SimTime, ch: ChannelId, sender: NodeId, end: SimTime) {
        self.record_ctrl_busy(ch, t, end);
        for pid in 0..self.pairs.len() {
            let p = &self.pairs[pid];
            if p.ctrl_ch != ch {
                continue;
            }
            if let NegState::Armed { fire_at } = p.neg {
                if fire_at > t && self.in_sense(sender, p.src) {
                    let p = &mut self.pairs[pid];
                    p.epoch += 1;
                    p.neg = NegState::Frozen { remaining: fire_at - t };
                }
            }
        }
    }

    /// A control transmission ended: pairs frozen on this channel resume
    /// their countdown if their spot on the medium is now quiet.
    fn resume_frozen(&mut self, t: SimTime, ch: ChannelId) {
        for pid in 0..self.pairs.len() as PairId {
            let p = &self.pairs[pid as usize];
            if p.ctrl_ch != ch {
                continue;
            }
            if let NegState::Frozen { remaining } = p.neg {
                if !self.medium.busy_at(p.src, ch) {
                    self.arm_at(t + self.difs_ns + remaining, pid);
                }
            }
        }
    }

    /// Backoff expired: transmit the REQ.
    fn on_fire(&mut self, t: SimTime, pid: PairId, epoch: u64) {
        {
            let p = &self.pairs[pid as usize];
            if p.epoch != epoch || !matches!(p.neg, NegState::Armed { .. }) {
                return;
            }
        }
        let (src, dst, ctrl_ch, ctrl_radio) = {
            let p = &self.pairs[pid as usize];
            (p.src, p.dst, p.ctrl_ch, p.ctrl_radio)
        };
        if self.medium.busy_before(src, ctrl_ch, t) {
            // Defensive: freezing should have caught this.
            debug_assert!(false, "armed pair fired into a busy channel");
            let p = &mut self.pairs[pid as usize];
            p.neg = NegState::Frozen { remaining: self.difs_ns };
            return;
        }
        if self.radios[src as usize][ctrl_radio as usize].lock.is_some() {
            self.pairs[pid as usize].neg = NegState::WaitRadio;
            return;
        }

        let offered: BTreeSet<ChannelId> = match self.mode {
            EngineMode::Tsc => {
                let ranked =
                    ranked_channels(&self.ledgers[src as usize], self.cfg.channels, &mut self.crus_rng);
                usable_ranked(&self.ledgers[src as usize], &ranked, src, dst)
                    .into_iter()
                    .collect()
            }
            EngineMode::Rama => {
                let ch = self.assignment.channel_of(src, dst).expect("edge colored");
                std::iter::once(ch).collect()
            }
        };
        if offered.is_empty() {
            // Nothing usable from the sender's view: hopeless this interval.
            self.pairs[pid as usize].neg = NegState::Denied;
            return;
        }

        let end = t + self.ctrl_ns;
        let token = self.medium.begin(TxKind::Ctrl, ctrl_ch, src, Some(dst), t, end);
        self.frames.insert(token, Frame { pair: pid, kind: FrameKind::Req { offered } });
        self.radios[src as usize][ctrl_radio as usize].lock = Some(pid);
        self.set_radio_state(t, src, ctrl_radio, RadioState::Tx);
        self.pairs[pid as usize].neg = NegState::AwaitAck;
        self.on_ctrl_started(t, ctrl_ch, src, end);
        self.queue.push(end, EventClass::MsgEnd, Ev::CtrlEnd { token });
        let ev = TraceEvent::new(t, TraceKind::Req)
            .node(src)
            .radio(ctrl_radio)
            .channel(ctrl_ch)
            .with("peer", dst);
        self.sink.record(&ev);
    }

    fn on_ack_timeout(&mut self, t: SimTime, pid: PairId, epoch: u64) {
        {
            let p = &self.pairs[pid as usize];
            if p.epoch != epoch || p.neg != NegState::AwaitAck {
                return;
            }
        }
        let (src, ctrl_radio) = {
            let p = &self.pairs[pid as usize];
            (p.src, p.ctrl_radio)
        };
        self.release_lock(src, ctrl_radio, t);
        let p = &mut self.pairs[pid as usize];
        p.cw = (p.cw * 2).min(self.cfg.cw_max);
        self.try_arm(t, pid);
    }

    fn release_lock(&mut self, node: NodeId, radio: u8, t: SimTime) {
        self.radios[node as usize][radio as usize].lock = None;
        // Hand the radio to the first pair queued on it.
        for pid in 0..self.pairs.len() as PairId {
            let p = &self.pairs[pid as usize];
            if p.neg == NegState::WaitRadio && p.src == node && p.ctrl_radio == radio {
                self.try_arm(t, pid);
                if self.radios[node as usize][radio as usize].lock.is_some() {
                    break;
                }
            }
        }
    }

    // -- control frame completion ----------------------------------------------

    fn on_ctrl_end(&mut self, t: SimTime, token: u64) {
        let frame_tx = self.medium.end(token);
        let Some(frame) = self.frames.remove(&token) else {
            panic!("control frame without metadata");
        };
        let pid = frame.pair;
        let (src, dst, ctrl_ch, ctrl_radio) = {
            let p = &self.pairs[pid as usize];
            (p.src, p.dst, p.ctrl_ch, p.ctrl_radio)
        };

        match frame.kind {
            FrameKind::Req { offered } => {
                // Sender returns to listening; keeps the radio lock while
                // awaiting the ACK.
                self.set_radio_state(t, src, ctrl_radio, RadioState::Idle);
                let deadline = t + self.ctrl_ns + self.guard_ns;
                let epoch = self.pairs[pid as usize].epoch;
                self.queue
                    .push(deadline, EventClass::Timer, Ev::AckTimeout { pair: pid, epoch });

                // Does the intended receiver decode and reply?
                if let Some(rx_radio) = self.listening_radio(dst, ctrl_ch, frame_tx.start) {
                    if self.medium.ctrl_decodable(&frame_tx, dst)
                        && self.radios[dst as usize][rx_radio as usize].state == RadioState::Idle
                    {
                        let verdict = self.build_verdict(src, dst, &offered);
                        let end = t + self.ctrl_ns;
                        let tok =
                            self.medium.begin(TxKind::Ctrl, ctrl_ch, dst, Some(src), t, end);
                        self.frames.insert(
                            tok,
                            Frame { pair: pid, kind: FrameKind::Ack { verdict: verdict.clone() } },
                        );
                        self.set_radio_state(t, dst, rx_radio, RadioState::Tx);
                        self.on_ctrl_started(t, ctrl_ch, dst, end);
                        self.queue.push(end, EventClass::MsgEnd, Ev::CtrlEnd { token: tok });
                        let label = match verdict {
                            AckVerdict::Invalid => "invalid".to_string(),
                            AckVerdict::Null => "null".to_string(),
                            AckVerdict::Ch(c) => format!("ch{c}"),
                        };
                        let ev = TraceEvent::new(t, TraceKind::Ack)
                            .node(dst)
                            .radio(rx_radio)
                            .channel(ctrl_ch)
                            .with("peer", src)
                            .with("verdict", label);
                        self.sink.record(&ev);
                    }
                }
            }

            FrameKind::Ack { verdict } => {
                // The replying radio goes back to listening.
                if let Some(r) = self.listening_radio(dst, ctrl_ch, frame_tx.start) {
                    let _ = r;
                }
                let ack_radio = self.radios[dst as usize]
                    .iter()
                    .position(|r| r.state == RadioState::Tx && r.tuned == ctrl_ch);
                if let Some(r) = ack_radio {
                    self.set_radio_state(t, dst, r as u8, RadioState::Idle);
                }

                // Everyone in decode range learns the agreement.
                if let AckVerdict::Ch(ch) = verdict {
                    self.spread_knowledge(&frame_tx, ch, src, dst);
                }

                // Sender's state machine.
                if self.pairs[pid as usize].neg == NegState::AwaitAck
                    && self.listening_radio(src, ctrl_ch, frame_tx.start).is_some()
                    && self.medium.ctrl_decodable(&frame_tx, src)
                {
                    let p = &mut self.pairs[pid as usize];
                    p.epoch += 1; // cancels the ACK timeout
                    match verdict {
                        AckVerdict::Invalid => {
                            p.neg = NegState::Denied;
                            self.release_lock(src, ctrl_radio, t);
                        }
                        AckVerdict::Null => {
                            p.neg = NegState::Off;
                            self.release_lock(src, ctrl_radio, t);
                            self.try_arm(t, pid);
                        }
                        AckVerdict::Ch(ch) => {
                            let still_ok = match self.mode {
                                EngineMode::Tsc => {
                                    self.ledgers[src as usize].admissible(ch, src, dst)
                                        && self.has_unreserved_radio(src)
                                }
                                EngineMode::Rama => self.has_unreserved_radio(src),
                            };
                            if still_ok {
                                let end = t + self.ctrl_ns;
                                let tok = self
                                    .medium
                                    .begin(TxKind::Ctrl, ctrl_ch, src, None, t, end);
                                self.frames
                                    .insert(tok, Frame { pair: pid, kind: FrameKind::Res { ch } });
                                self.set_radio_state(t, src, ctrl_radio, RadioState::Tx);
                                self.on_ctrl_started(t, ctrl_ch, src, end);
                                self.queue
                                    .push(end, EventClass::MsgEnd, Ev::CtrlEnd { token: tok });
                                let ev = TraceEvent::new(t, TraceKind::Res)
                                    .node(src)
                                    .radio(ctrl_radio)
                                    .channel(ctrl_ch)
                                    .with("peer", dst)
                                    .with("data_ch", ch);
                                self.sink.record(&ev);
                            } else {
                                self.pairs[pid as usize].neg = NegState::Off;
                                self.release_lock(src, ctrl_radio, t);
                                self.try_arm(t, pid);
                            }
                        }
                    }
                }
            }

            FrameKind::Res { ch } => {
                self.set_radio_state(t, src, ctrl_radio, RadioState::Idle);
                self.release_lock(src, ctrl_radio, t);
                self.spread_knowledge(&frame_tx, ch, src, dst);

                // Sender commits unconditionally (it validated before RES).
                let tx_radio = self
                    .pick_unreserved_radio(src, ch)
                    .expect("validated unreserved radio disappeared");
                self.radios[src as usize][tx_radio as usize].reserved = true;
                let _ = self.ledgers[src as usize].schedule(ch, src, dst);

                // Receiver commits only if it decoded the RES and still has
                // a radio; otherwise the sender talks to a deaf peer.
                let rx_radio = if self.listening_radio(dst, ctrl_ch, frame_tx.start).is_some()
                    && self.medium.ctrl_decodable(&frame_tx, dst)
                {
                    self.pick_unreserved_radio(dst, ch)
                } else {
                    None
                };
                if let Some(r) = rx_radio {
                    self.radios[dst as usize][r as usize].reserved = true;
                    let _ = self.ledgers[dst as usize].schedule(ch, src, dst);
                }

                let rid = self.reservations.len() as ResId;
                self.reservations.push(Reservation {
                    pair: pid,
                    ch,
                    tx_radio,
                    rx_radio,
                    streaming: false,
                    in_flight: None,
                    retry: Vec::new(),
                });
                self.res_of_pair.insert(pid, rid);
                self.pairs[pid as usize].neg = NegState::Off;
                let ev = TraceEvent::new(t, TraceKind::Reserve)
                    .node(src)
                    .radio(tx_radio)
                    .channel(ch)
                    .with("peer", dst)
                    .with("heard", rx_radio.is_some() as u8);
                self.sink.record(&ev);
            }
        }

        self.resume_frozen(t, ctrl_ch);
    }

    /// The receiver's three-way verdict: no idle radio, no common channel,
    /// or the agreed channel (picked by the receiver's own ranking).
    fn build_verdict(&mut self, src: NodeId, dst: NodeId, offered: &BTreeSet<ChannelId>) -> AckVerdict {
        if !self.has_unreserved_radio(dst) {
            return AckVerdict::Invalid;
        }
        match self.mode {
            EngineMode::Rama => {
                let ch = self.assignment.channel_of(src, dst).expect("edge colored");
                if offered.contains(&ch) {
                    AckVerdict::Ch(ch)
                } else {
                    AckVerdict::Null
                }
            }
            EngineMode::Tsc => {
                let ranked = ranked_channels(
                    &self.ledgers[dst as usize],
                    self.cfg.channels,
                    &mut self.crus_rng,
                );
                let usable = usable_ranked(&self.ledgers[dst as usize], &ranked, src, dst);
                match pick_common(&usable, offered) {
                    Some(ch) => AckVerdict::Ch(ch),
                    None => AckVerdict::Null,
                }
            }
        }
    }

    /// Every node that decoded an agreement broadcast (ACK or RES carrying a
    /// channel) records the upcoming reservation in its local ledger.
    fn spread_knowledge(&mut self, frame_tx: &crate::sim::medium::ActiveTx, ch: ChannelId, src: NodeId, dst: NodeId) {
        if self.mode == EngineMode::Rama {
            return; // the baseline is interference-blind by design
        }
        for x in self.medium.decode_neighbors(frame_tx.tx_node) {
            if self.listening_radio(x, frame_tx.channel, frame_tx.start).is_some()
                && self.medium.ctrl_decodable(frame_tx, x)
            {
                let _ = self.ledgers[x as usize].schedule(ch, src, dst);
            }
        }
    }

    // -- pilot and the transfer phase -------------------------------------------

    fn on_pilot(&mut self, t: SimTime) {
        self.sink.record(&TraceEvent::new(t, TraceKind::Pilot));

        // Close the idle books and let the controller resize the window.
        if self.cfg.cna_mode == CnaMode::Adaptive {
            let window_s = to_secs(t - self.interval_start);
            for ch in 1..=self.cfg.channels {
                let busy = self.busy_union[ch as usize - 1].close();
                let idle_s = (window_s - to_secs(busy)).max(0.0);
                self.cna.record_idle(ch, idle_s);
            }
            self.cna.end_of_phase();
        }

        // Abort unfinished negotiations: they retry next interval.
        for pid in 0..self.pairs.len() {
            let p = &mut self.pairs[pid];
            match p.neg {
                NegState::WaitRadio | NegState::Frozen { .. } | NegState::Armed { .. }
                | NegState::AwaitAck => {
                    p.epoch += 1;
                    p.neg = NegState::Denied;
                    let (src, radio) = (p.src, p.ctrl_radio);
                    if self.radios[src as usize][radio as usize].lock == Some(pid as PairId) {
                        self.radios[src as usize][radio as usize].lock = None;
                    }
                }
                _ => {}
            }
        }

        // Retune reserved radios and schedule the streams.
        for rid in 0..self.reservations.len() as ResId {
            let (pair, ch, tx_radio, rx_radio) = {
                let r = &self.reservations[rid as usize];
                (r.pair, r.ch, r.tx_radio, r.rx_radio)
            };
            let (src, dst) = {
                let p = &self.pairs[pair as usize];
                (p.src, p.dst)
            };
            let mut start = t;
            {
                let radio = &mut self.radios[src as usize][tx_radio as usize];
                if radio.tuned != ch {
                    radio.tuned = ch;
                    radio.available_at = t + self.handover_ns;
                }
                start = start.max(radio.available_at);
            }
            if let Some(rr) = rx_radio {
                let radio = &mut self.radios[dst as usize][rr as usize];
                if radio.tuned != ch {
                    radio.tuned = ch;
                    radio.available_at = t + self.handover_ns;
                }
                start = start.max(radio.available_at);
            }
            self.reservations[rid as usize].streaming = true;
            self.queue.push(start, EventClass::Timer, Ev::StreamStart { res: rid });
        }

        // Power saving, decision at the pilot: any radio without a
        // reservation has nothing left to do until the beacon.
        if self.cfg.psm_enabled {
            let timing = self.cfg.psm_timing();
            let profile = self.cfg.power_profile();
            for node in 0..self.radios.len() {
                for r in 0..self.radios[node].len() {
                    if self.radios[node][r].reserved {
                        continue;
                    }
                    let gap_s = to_secs(self.next_beacon - t);
                    if doze_pays_off(gap_s, &profile, &timing) {
                        if let Some(deadline) = wake_deadline(t, self.next_beacon, &timing) {
                            self.set_radio_state(t, node as NodeId, r as u8, RadioState::Doze);
                            self.radios[node][r].available_at = self.next_beacon;
                            self.queue.push(
                                deadline,
                                EventClass::Wake,
                                Ev::Wake { node: node as NodeId, radio: r as u8 },
                            );
                        }
                    }
                }
            }
        }
    }

    /// Streams the next packet of a reservation, or ends the stream (and
    /// possibly dozes the sender's radio) when nothing more fits.
    fn try_send_next(&mut self, t: SimTime, rid: ResId) {
        let (pair, ch, tx_radio, rx_radio, streaming) = {
            let r = &self.reservations[rid as usize];
            (r.pair, r.ch, r.tx_radio, r.rx_radio, r.streaming)
        };
        if !streaming {
            return;
        }
        let (src, dst) = {
            let p = &self.pairs[pair as usize];
            (p.src, p.dst)
        };

        // Take the head packet, synthesising one for saturated sources.
        let pkt = match self.queues[pair as usize].pop_front() {
            Some(p) => Some(p),
            None => self.synthesize_packet(t, pair),
        };
        let Some(pkt) = pkt else {
            self.finish_stream(t, rid, src, dst, tx_radio, rx_radio);
            return;
        };

        let air = self.data_air_ns(pkt.bytes);
        let end = t + air;
        if end > self.next_beacon {
            // Does not fit: back to the head, retry next interval.
            self.queues[pair as usize].push_front(pkt);
            self.finish_stream(t, rid, src, dst, tx_radio, rx_radio);
            return;
        }

        let token = self.medium.begin(TxKind::Data, ch, src, Some(dst), t, end);
        let ev = TraceEvent::new(t, TraceKind::TxStart)
            .node(src)
            .radio(tx_radio)
            .channel(ch)
            .with("flow", pkt.flow)
            .with("pkt", pkt.pkt)
            .with("bytes", pkt.bytes);
        self.sink.record(&ev);
        self.set_radio_state(t, src, tx_radio, RadioState::Tx);
        if let Some(rr) = rx_radio {
            self.set_radio_state(t, dst, rr, RadioState::Rx);
        }
        self.reservations[rid as usize].in_flight = Some(pkt);
        self.queue.push(end, EventClass::PacketEnd, Ev::DataEnd { token, res: rid });
    }

    fn finish_stream(
        &mut self,
        t: SimTime,
        rid: ResId,
        src: NodeId,
        dst: NodeId,
        tx_radio: u8,
        rx_radio: Option<u8>,
    ) {
        let _ = (dst, rx_radio);
        self.reservations[rid as usize].streaming = false;
        // Transfer finished early: the sender's radio may doze until the
        // beacon. The receiver cannot know the stream ended and stays up.
        if self.cfg.psm_enabled {
            let timing = self.cfg.psm_timing();
            let profile = self.cfg.power_profile();
            let gap_s = to_secs(self.next_beacon.saturating_sub(t));
            if self.radios[src as usize][tx_radio as usize].state == RadioState::Idle
                && doze_pays_off(gap_s, &profile, &timing)
            {
                if let Some(deadline) = wake_deadline(t, self.next_beacon, &timing) {
                    self.set_radio_state(t, src, tx_radio, RadioState::Doze);
                    self.radios[src as usize][tx_radio as usize].available_at = self.next_beacon;
                    self.queue
                        .push(deadline, EventClass::Wake, Ev::Wake { node: src, radio: tx_radio });
                }
            }
        }
    }

    /// Creates the next packet of a saturated flow rooted at this pair,
    /// honouring transfer-request budgets and the generation stop time.
    fn synthesize_packet(&mut self, t: SimTime, pair: PairId) -> Option<Packet> {
        if t >= self.stop_ns {
            return None;
        }
        let n = self.pairs[pair as usize].sat_flows.len();
        for _ in 0..n {
            let cursor = self.pairs[pair as usize].sat_cursor;
            let fid = self.pairs[pair as usize].sat_flows[cursor];
            self.pairs[pair as usize].sat_cursor = (cursor + 1) % n;
            let f = &mut self.flows[fid as usize];
            if f.paused {
                continue;
            }
            if let Some(budget) = &mut f.budget_bits {
                *budget -= (f.spec.pkt_bytes * 8) as i64;
                if *budget <= 0 {
                    // Request boundary: draw the next request and go quiet
                    // until the next beacon.
                    let top_up = draw_exp_bits(self.cfg.request_mean_bits, &mut self.flow_rng);
                    *budget += top_up;
                    f.paused = true;
                }
            }
            let pkt = Packet {
                flow: fid,
                pkt: f.next_pkt,
                bytes: f.spec.pkt_bytes,
                hop_idx: 0,
            };
            f.next_pkt += 1;
            let ev = TraceEvent::new(t, TraceKind::Gen)
                .node(f.spec.src)
                .with("flow", fid)
                .with("pkt", pkt.pkt)
                .with("bytes", pkt.bytes);
            self.sink.record(&ev);
            return Some(pkt);
        }
        None
    }

    fn on_data_end(&mut self, t: SimTime, token: u64, rid: ResId) {
        let tx = self.medium.end(token);
        let (pair, ch, tx_radio, rx_radio) = {
            let r = &self.reservations[rid as usize];
            (r.pair, r.ch, r.tx_radio, r.rx_radio)
        };
        let (src, dst) = {
            let p = &self.pairs[pair as usize];
            (p.src, p.dst)
        };
        let pkt = self.reservations[rid as usize]
            .in_flight
            .take()
            .expect("data end without a packet in flight");
        let success = tx.clean && rx_radio.is_some();
        let ev = TraceEvent::new(t, TraceKind::TxEnd)
            .node(src)
            .radio(tx_radio)
            .channel(ch)
            .with("flow", pkt.flow)
            .with("pkt", pkt.pkt)
            .with("ok", success as u8);
        self.sink.record(&ev);
        self.set_radio_state(t, src, tx_radio, RadioState::Idle);
        if let Some(rr) = rx_radio {
            self.set_radio_state(t, dst, rr, RadioState::Idle);
        }
        if success {
            self.advance_packet(t, pkt, ch);
        } else {
            self.reservations[rid as usize].retry.push(pkt);
        }
        self.try_send_next(t, rid);
    }

    /// Moves a delivered-on-this-hop packet forward: final delivery (with
    /// the wired-sink extension behind a gateway), or the next relay queue.
    fn advance_packet(&mut self, t: SimTime, mut pkt: Packet, ch: ChannelId) {
        let route = &self.flows[pkt.flow as usize].route;
        let next_idx = pkt.hop_idx + 1;
        let holder = route[next_idx];
        if next_idx == route.len() - 1 {
            if self.cfg.sink_enabled && self.gateways.contains(&holder) {
                let wired =
                    secs(self.cfg.sink_delay_s) + airtime(pkt.bytes, self.cfg.sink_rate_bps);
                self.queue.push(
                    t + wired,
                    EventClass::Timer,
                    Ev::SinkDeliver {
                        flow: pkt.flow,
                        pkt: pkt.pkt,
                        bytes: pkt.bytes,
                        ch,
                        node: holder,
                    },
                );
            } else {
                let ev = TraceEvent::new(t, TraceKind::Deliver)
                    .node(holder)
                    .channel(ch)
                    .with("flow", pkt.flow)
                    .with("pkt", pkt.pkt)
                    .with("bytes", pkt.bytes);
                self.sink.record(&ev);
            }
            return;
        }
        // Relay hop: store and forward from the next beacon on.
        let next_pair = self.pair_of_link[&(route[next_idx], route[next_idx + 1])];
        pkt.hop_idx = next_idx;
        let ev = TraceEvent::new(t, TraceKind::Hop)
            .node(holder)
            .channel(ch)
            .with("flow", pkt.flow)
            .with("pkt", pkt.pkt);
        self.sink.record(&ev);
        self.enqueue(t, next_pair, pkt);
    }

    fn enqueue(&mut self, t: SimTime, pair: PairId, pkt: Packet) {
        let q = &mut self.queues[pair as usize];
        if q.len() >= self.cfg.queue_cap {
            let ev = TraceEvent::new(t, TraceKind::Drop)
                .node(self.pairs[pair as usize].src)
                .with("flow", pkt.flow)
                .with("pkt", pkt.pkt)
                .with("reason", "cap");
            self.sink.record(&ev);
            return;
        }
        q.push_back(pkt);
    }

    // -- constant-rate arrivals --------------------------------------------------

    fn on_arrival(&mut self, t: SimTime, fid: FlowId) {
        if t >= self.stop_ns || t >= self.run_end {
            return;
        }
        let (pkt, spacing, src, first_pair) = {
            let f = &mut self.flows[fid as usize];
            let pkt = Packet {
                flow: fid,
                pkt: f.next_pkt,
                bytes: f.spec.pkt_bytes,
                hop_idx: 0,
            };
            f.next_pkt += 1;
            let first = (f.route[0], f.route[1]);
            (pkt, f.spacing, f.spec.src, self.pair_of_link[&first])
        };
        let ev = TraceEvent::new(t, TraceKind::Gen)
            .node(src)
            .with("flow", fid)
            .with("pkt", pkt.pkt)
            .with("bytes", pkt.bytes);
        self.sink.record(&ev);
        self.enqueue(t, first_pair, pkt);
        self.queue.push(t + spacing, EventClass::Arrival, Ev::Arrival { flow: fid });
    }
}

fn draw_exp_bits(mean_bits: u64, rng: &mut impl Rng) -> i64 {
    let u: f64 = rng.gen::<f64>();
    let bits = -(mean_bits as f64) * (1.0 - u).ln();
    bits.round().max(1.0) as i64
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

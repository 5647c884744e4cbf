//! Single-channel CSMA/CA baseline.
//!
//! Every node owns one radio, permanently tuned to channel 1. A node with
//! pending traffic contends per packet: DIFS plus a uniformly drawn backoff,
//! freezing while the channel is busy and resuming after DIFS with the
//! remaining wait. The data frame is answered by an immediate (gapless) ACK
//! from the receiver; a missing or jammed ACK doubles the contention window
//! and retries the same packet until the retry limit drops it. Relays pick
//! the next packet round-robin over their per-neighbor queues so one heavy
//! link cannot starve the others.
//!
//! There are no beacons, reservations, or power saving here — the engine
//! exists as the single-channel reference point, hidden terminals and all.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{FlowSpec, ScenarioConfig};
use crate::phys::{ChannelId, NodeId};
use crate::psm::RadioState;
use crate::sim::event::{airtime, secs, EventClass, EventQueue, SimTime, NS_PER_US};
use crate::sim::medium::{Medium, TxKind};
use crate::sim::trace::{TraceEvent, TraceKind, TraceSink};
use crate::topo::Topology;

const CH: ChannelId = 1;
const RADIO: u8 = 0;

type FlowId = u32;

#[derive(Debug, Clone)]
struct Packet {
    flow: FlowId,
    pkt: u64,
    bytes: u64,
    hop_idx: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeMode {
    /// Nothing to send.
    Quiet,
    /// Backoff counted partway down, then the channel went busy.
    Frozen { remaining: SimTime },
    /// Backoff timer armed.
    Armed { fire_at: SimTime },
    /// Data frame in the air.
    Sending,
    /// Waiting for the ACK (or its timeout).
    AwaitAck,
}

#[derive(Debug)]
struct NodeState {
    /// Per-next-hop queues, served round-robin.
    queues: BTreeMap<NodeId, VecDeque<Packet>>,
    rr_last: Option<NodeId>,
    mode: NodeMode,
    epoch: u64,
    cw: u32,
    retries: u32,
    /// Head packet being contended for / transmitted, with its next hop.
    current: Option<(Packet, NodeId)>,
    /// Saturated flows rooted here, with a round-robin cursor.
    sat_flows: Vec<FlowId>,
    sat_cursor: usize,
}

#[derive(Debug)]
struct FlowState {
    spec: FlowSpec,
    route: Vec<NodeId>,
    next_pkt: u64,
    spacing: SimTime,
}

#[derive(Debug)]
enum Ev {
    Arrival { flow: FlowId },
    Fire { node: NodeId, epoch: u64 },
    DataEnd { token: u64 },
    AckEnd { token: u64 },
    AckTimeout { node: NodeId, epoch: u64 },
    SinkDeliver { flow: FlowId, pkt: u64, bytes: u64, node: NodeId },
}

/// Bookkeeping for a frame in the air.
#[derive(Debug)]
struct FrameMeta {
    sender: NodeId,
    dst: NodeId,
    /// Receiver's radio was put into Rx for this frame and must be restored.
    rx_was_set: bool,
}

pub struct CsmaEngine<'a, S: TraceSink> {
    cfg: &'a ScenarioConfig,
    sink: &'a mut S,
    queue: EventQueue<Ev>,
    medium: Medium,
    rng: ChaCha8Rng,
    nodes: Vec<NodeState>,
    radio_state: Vec<RadioState>,
    flows: Vec<FlowState>,
    gateways: std::collections::BTreeSet<NodeId>,
    frames: BTreeMap<u64, FrameMeta>,
    positions: Vec<crate::phys::Pos>,

    slot_ns: SimTime,
    difs_ns: SimTime,
    ctrl_ns: SimTime,
    guard_ns: SimTime,
    run_end: SimTime,
    stop_ns: SimTime,
}

impl<'a, S: TraceSink> CsmaEngine<'a, S> {
    pub fn new(
        cfg: &'a ScenarioConfig,
        topo: &'a Topology,
        flows: Vec<FlowSpec>,
        sink: &'a mut S,
    ) -> Self {
        let positions = topo.positions().to_vec();
        let medium = Medium::new(positions.clone(), cfg.phys_params());
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(0x5A);

        let mut nodes: Vec<NodeState> = (0..positions.len())
            .map(|_| NodeState {
                queues: BTreeMap::new(),
                rr_last: None,
                mode: NodeMode::Quiet,
                epoch: 0,
                cw: cfg.cw_min,
                retries: 0,
                current: None,
                sat_flows: Vec::new(),
                sat_cursor: 0,
            })
            .collect();

        let mut flow_states = Vec::with_capacity(flows.len());
        for (fid, spec) in flows.iter().enumerate() {
            let route = topo
                .route(spec.src, spec.dst)
                .expect("flow endpoints must be connected");
            let spacing = if spec.rate_bps == 0 {
                0
            } else {
                airtime(spec.pkt_bytes, spec.rate_bps)
            };
            if spacing == 0 {
                nodes[spec.src as usize].sat_flows.push(fid as FlowId);
            }
            flow_states.push(FlowState { spec: *spec, route, next_pkt: 0, spacing });
        }

        let duration_ns = secs(cfg.duration_s);
        let stop_ns = if cfg.flow_stop_s > 0.0 { secs(cfg.flow_stop_s) } else { duration_ns };
        CsmaEngine {
            cfg,
            sink,
            queue: EventQueue::new(),
            medium,
            rng,
            nodes,
            radio_state: vec![RadioState::Idle; positions.len()],
            flows: flow_states,
            gateways: topo.gateways().collect(),
            frames: BTreeMap::new(),
            positions,
            slot_ns: cfg.slot_us * NS_PER_US,
            difs_ns: cfg.difs_us * NS_PER_US,
            ctrl_ns: airtime(cfg.ctrl_bytes, cfg.data_rate_bps),
            guard_ns: cfg.ack_guard_us * NS_PER_US,
            run_end: duration_ns,
            stop_ns,
        }
    }

    pub fn run(&mut self) -> SimTime {
        for node in 0..self.nodes.len() as NodeId {
            let ev = TraceEvent::new(0, TraceKind::State)
                .node(node)
                .radio(RADIO)
                .channel(CH)
                .with("state", RadioState::Idle.as_str());
            self.sink.record(&ev);
        }
        for fid in 0..self.flows.len() as FlowId {
            if self.flows[fid as usize].spacing > 0 {
                self.queue.push(0, EventClass::Arrival, Ev::Arrival { flow: fid });
            } else {
                self.start_contention(0, self.flows[fid as usize].spec.src);
            }
        }

        while let Some((t, ev)) = self.queue.pop() {
            if t >= self.run_end {
                break;
            }
            match ev {
                Ev::Arrival { flow } => self.on_arrival(t, flow),
                Ev::Fire { node, epoch } => self.on_fire(t, node, epoch),
                Ev::DataEnd { token } => self.on_data_end(t, token),
                Ev::AckEnd { token } => self.on_ack_end(t, token),
                Ev::AckTimeout { node, epoch } => self.on_ack_timeout(t, node, epoch),
                Ev::SinkDeliver { flow, pkt, bytes, node } => {
                    let ev = TraceEvent::new(t, TraceKind::Deliver)
                        .node(node)
                        .channel(CH)
                        .with("flow", flow)
                        .with("pkt", pkt)
                        .with("bytes", bytes);
                    self.sink.record(&ev);
                }
            }
        }
        self.run_end
    }

    // -- helpers ----------------------------------------------------------------

    fn set_state(&mut self, t: SimTime, node: NodeId, state: RadioState) {
        if self.radio_state[node as usize] == state {
            return;
        }
        self.radio_state[node as usize] = state;
        let ev = TraceEvent::new(t, TraceKind::State)
            .node(node)
            .radio(RADIO)
            .channel(CH)
            .with("state", state.as_str());
        self.sink.record(&ev);
    }

    fn in_sense(&self, a: NodeId, b: NodeId) -> bool {
        a == b
            || crate::phys::distance(self.positions[a as usize], self.positions[b as usize])
                <= self.cfg.sense_range_m
    }

    fn data_air_ns(&self, payload_bytes: u64) -> SimTime {
        airtime(payload_bytes + self.cfg.overhead_bytes, self.cfg.data_rate_bps)
    }

    /// Picks the node's next head packet: round-robin over nonempty queues,
    /// then synthesised saturated traffic.
    fn next_packet(&mut self, t: SimTime, node: NodeId) -> Option<(Packet, NodeId)> {
        let keys: Vec<NodeId> = self.nodes[node as usize]
            .queues
            .iter()
            .filter(|(_, q)| !q.is_empty())
            .map(|(&k, _)| k)
            .collect();
        if !keys.is_empty() {
            let start = self.nodes[node as usize]
                .rr_last
                .and_then(|last| keys.iter().position(|&k| k > last))
                .unwrap_or(0);
            let dst = keys[start % keys.len()];
            self.nodes[node as usize].rr_last = Some(dst);
            let pkt = self.nodes[node as usize]
                .queues
                .get_mut(&dst)
                .unwrap()
                .pop_front()
                .unwrap();
            return Some((pkt, dst));
        }
        self.synthesize(t, node)
    }

    fn synthesize(&mut self, t: SimTime, node: NodeId) -> Option<(Packet, NodeId)> {
        if t >= self.stop_ns {
            return None;
        }
        let n = self.nodes[node as usize].sat_flows.len();
        if n == 0 {
            return None;
        }
        let cursor = self.nodes[node as usize].sat_cursor;
        self.nodes[node as usize].sat_cursor = (cursor + 1) % n;
        let fid = self.nodes[node as usize].sat_flows[cursor];
        let f = &mut self.flows[fid as usize];
        let pkt = Packet { flow: fid, pkt: f.next_pkt, bytes: f.spec.pkt_bytes, hop_idx: 0 };
        f.next_pkt += 1;
        let next_hop = f.route[1];
        let ev = TraceEvent::new(t, TraceKind::Gen)
            .node(f.spec.src)
            .with("flow", fid)
            .with("pkt", pkt.pkt)
            .with("bytes", pkt.bytes);
        self.sink.record(&ev);
        Some((pkt, next_hop))
    }

    // -- contention ---------------------------------------------------------------

    /// Starts a fresh contention round if the node is quiet and has traffic.
    fn start_contention(&mut self, t: SimTime, node: NodeId) {
        if self.nodes[node as usize].mode != NodeMode::Quiet {
            return;
        }
        if self.nodes[node as usize].current.is_none() {
            let Some(head) = self.next_packet(t, node) else { return };
            self.nodes[node as usize].current = Some(head);
        }
        self.contend(t, node);
    }

    /// Arms (or freezes) the backoff for the node's current head packet.
    fn contend(&mut self, t: SimTime, node: NodeId) {
        let cw = self.nodes[node as usize].cw;
        let slots = self.rng.gen_range(0..cw) as SimTime;
        let wait = self.difs_ns + slots * self.slot_ns;
        if self.medium.busy_at(node, CH) {
            self.nodes[node as usize].mode = NodeMode::Frozen { remaining: wait };
            return;
        }
        let fire_at = t + wait;
        let n = &mut self.nodes[node as usize];
        n.epoch += 1;
        n.mode = NodeMode::Armed { fire_at };
        let epoch = n.epoch;
        self.queue.push(fire_at, EventClass::Timer, Ev::Fire { node, epoch });
    }

    /// Freezes every armed node that can hear a transmission that just
    /// started (same-instant fires are already committed and collide).
    fn on_tx_started(&mut self, t: SimTime, sender: NodeId) {
        for node in 0..self.nodes.len() as NodeId {
            if let NodeMode::Armed { fire_at } = self.nodes[node as usize].mode {
                if fire_at > t && self.in_sense(sender, node) {
                    let n = &mut self.nodes[node as usize];
                    n.epoch += 1;
                    n.mode = NodeMode::Frozen { remaining: fire_at - t };
                }
            }
        }
    }

    /// Resumes frozen nodes whose spot on the medium went quiet.
    fn resume_frozen(&mut self, t: SimTime) {
        for node in 0..self.nodes.len() as NodeId {
            if let NodeMode::Frozen { remaining } = self.nodes[node as usize].mode {
                if !self.medium.busy_at(node, CH) {
                    let fire_at = t + self.difs_ns + remaining;
                    let n = &mut self.nodes[node as usize];
                    n.epoch += 1;
                    n.mode = NodeMode::Armed { fire_at };
                    let epoch = n.epoch;
                    self.queue.push(fire_at, EventClass::Timer, Ev::Fire { node, epoch });
                }
            }
        }
    }

    fn on_fire(&mut self, t: SimTime, node: NodeId, epoch: u64) {
        {
            let n = &self.nodes[node as usize];
            if n.epoch != epoch || !matches!(n.mode, NodeMode::Armed { .. }) {
                return;
            }
        }
        if self.medium.busy_before(node, CH, t) {
            debug_assert!(false, "armed node fired into a busy channel");
            self.nodes[node as usize].mode = NodeMode::Frozen { remaining: self.difs_ns };
            return;
        }
        let (pkt, dst) = self.nodes[node as usize].current.clone().expect("armed without packet");
        let air = self.data_air_ns(pkt.bytes);
        let end = t + air;
        let token = self.medium.begin(TxKind::Data, CH, node, Some(dst), t, end);
        let ev = TraceEvent::new(t, TraceKind::TxStart)
            .node(node)
            .radio(RADIO)
            .channel(CH)
            .with("flow", pkt.flow)
            .with("pkt", pkt.pkt)
            .with("bytes", pkt.bytes);
        self.sink.record(&ev);
        self.set_state(t, node, RadioState::Tx);
        let rx_was_set = self.radio_state[dst as usize] == RadioState::Idle;
        if rx_was_set {
            self.set_state(t, dst, RadioState::Rx);
        }
        self.frames.insert(token, FrameMeta { sender: node, dst, rx_was_set });
        self.nodes[node as usize].mode = NodeMode::Sending;
        self.on_tx_started(t, node);
        self.queue.push(end, EventClass::PacketEnd, Ev::DataEnd { token });
    }

    // -- frame completions ----------------------------------------------------------

    fn on_data_end(&mut self, t: SimTime, token: u64) {
        let tx = self.medium.end(token);
        let meta = self.frames.remove(&token).expect("data frame metadata");
        let (sender, dst) = (meta.sender, meta.dst);
        let pkt = self.nodes[sender as usize]
            .current
            .as_ref()
            .expect("sending without packet")
            .0
            .clone();
        let ev = TraceEvent::new(t, TraceKind::TxEnd)
            .node(sender)
            .radio(RADIO)
            .channel(CH)
            .with("flow", pkt.flow)
            .with("pkt", pkt.pkt)
            .with("ok", tx.clean as u8);
        self.sink.record(&ev);
        self.set_state(t, sender, RadioState::Idle);

        // The sender always waits out the ACK window; the receiver replies
        // instantly (gapless) when the data decoded.
        let deadline = t + self.ctrl_ns + self.guard_ns;
        let epoch = {
            let n = &mut self.nodes[sender as usize];
            n.mode = NodeMode::AwaitAck;
            n.epoch += 1;
            n.epoch
        };
        self.queue.push(deadline, EventClass::Timer, Ev::AckTimeout { node: sender, epoch });

        if tx.clean {
            let end = t + self.ctrl_ns;
            let ack = self.medium.begin(TxKind::Ctrl, CH, dst, Some(sender), t, end);
            self.frames.insert(ack, FrameMeta { sender: dst, dst: sender, rx_was_set: false });
            self.set_state(t, dst, RadioState::Tx);
            self.on_tx_started(t, dst);
            self.queue.push(end, EventClass::MsgEnd, Ev::AckEnd { token: ack });
        } else if meta.rx_was_set && self.radio_state[dst as usize] == RadioState::Rx {
            self.set_state(t, dst, RadioState::Idle);
        }

        self.resume_frozen(t);
    }

    fn on_ack_end(&mut self, t: SimTime, token: u64) {
        let ack = self.medium.end(token);
        let meta = self.frames.remove(&token).expect("ack frame metadata");
        let (receiver, sender) = (meta.sender, meta.dst);
        self.set_state(t, receiver, RadioState::Idle);

        if self.nodes[sender as usize].mode == NodeMode::AwaitAck
            && self.medium.ctrl_decodable(&ack, sender)
        {
            let n = &mut self.nodes[sender as usize];
            n.epoch += 1; // cancels the timeout
            n.cw = self.cfg.cw_min;
            n.retries = 0;
            n.mode = NodeMode::Quiet;
            let (pkt, _) = n.current.take().expect("acked without packet");
            self.advance_packet(t, pkt);
            self.start_contention(t, sender);
        }
        self.resume_frozen(t);
    }

    fn on_ack_timeout(&mut self, t: SimTime, node: NodeId, epoch: u64) {
        {
            let n = &self.nodes[node as usize];
            if n.epoch != epoch || n.mode != NodeMode::AwaitAck {
                return;
            }
        }
        let n = &mut self.nodes[node as usize];
        n.retries += 1;
        if n.retries > self.cfg.retry_limit {
            let (pkt, _) = n.current.take().expect("retrying without packet");
            n.retries = 0;
            n.cw = self.cfg.cw_min;
            n.mode = NodeMode::Quiet;
            let ev = TraceEvent::new(t, TraceKind::Drop)
                .node(node)
                .with("flow", pkt.flow)
                .with("pkt", pkt.pkt)
                .with("reason", "retry");
            self.sink.record(&ev);
            self.start_contention(t, node);
            return;
        }
        n.cw = (n.cw * 2).min(self.cfg.cw_max);
        // Same head packet, wider window.
        self.contend(t, node);
    }

    /// Final delivery (with the wired-sink extension behind a gateway) or
    /// the next relay queue.
    fn advance_packet(&mut self, t: SimTime, mut pkt: Packet) {
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
                    Ev::SinkDeliver { flow: pkt.flow, pkt: pkt.pkt, bytes: pkt.bytes, node: holder },
                );
            } else {
                let ev = TraceEvent::new(t, TraceKind::Deliver)
                    .node(holder)
                    .channel(CH)
                    .with("flow", pkt.flow)
                    .with("pkt", pkt.pkt)
                    .with("bytes", pkt.bytes);
                self.sink.record(&ev);
            }
            return;
        }
        let next_hop = route[next_idx + 1];
        pkt.hop_idx = next_idx;
        let ev = TraceEvent::new(t, TraceKind::Hop)
            .node(holder)
            .channel(CH)
            .with("flow", pkt.flow)
            .with("pkt", pkt.pkt);
        self.sink.record(&ev);
        self.enqueue(t, holder, next_hop, pkt);
        self.start_contention(t, holder);
    }

    fn enqueue(&mut self, t: SimTime, node: NodeId, next_hop: NodeId, pkt: Packet) {
        let q = self.nodes[node as usize].queues.entry(next_hop).or_default();
        if q.len() >= self.cfg.queue_cap {
            let ev = TraceEvent::new(t, TraceKind::Drop)
                .node(node)
                .with("flow", pkt.flow)
                .with("pkt", pkt.pkt)
                .with("reason", "cap");
            self.sink.record(&ev);
            return;
        }
        q.push_back(pkt);
    }

    fn on_arrival(&mut self, t: SimTime, fid: FlowId) {
        if t >= self.stop_ns {
            return;
        }
        let (pkt, spacing, src, next_hop) = {
            let f = &mut self.flows[fid as usize];
            let pkt = Packet { flow: fid, pkt: f.next_pkt, bytes: f.spec.pkt_bytes, hop_idx: 0 };
            f.next_pkt += 1;
            (pkt, f.spacing, f.spec.src, f.route[1])
        };
        let ev = TraceEvent::new(t, TraceKind::Gen)
            .node(src)
            .with("flow", fid)
            .with("pkt", pkt.pkt)
            .with("bytes", pkt.bytes);
        self.sink.record(&ev);
        self.enqueue(t, src, next_hop, pkt);
        self.start_contention(t, src);
        self.queue.push(t + spacing, EventClass::Arrival, Ev::Arrival { flow: fid });
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

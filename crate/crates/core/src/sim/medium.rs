//! The shared radio medium.
//!
//! Tracks every transmission in flight per channel and answers the three
//! physical questions the engines ask:
//!
//! * **carrier sense** — is the channel busy at a node (any transmitter
//!   within sensing range, including the node itself)?
//! * **control decode** — short control frames use a pessimistic overlap
//!   rule: a listener in decode range receives a frame only if no *other*
//!   transmission on that channel overlapped any part of the frame while
//!   within the listener's sensing range (its own transmissions count as
//!   jamming too — radios are half-duplex);
//! * **data reception** — data frames are received when the SINR at the
//!   receiver stays above the capture threshold for the whole frame. The
//!   verdict is maintained incrementally: every transmission start degrades
//!   the running minimum of concurrent frames, and ends never improve an
//!   already-failed frame.
//!
//! Intervals are half-open `[start, end)`: a frame beginning exactly when
//! another ends does not overlap it, which is what makes gapless handshake
//! turnarounds clean.

use std::collections::BTreeMap;

use crate::phys::{distance, interference_power, two_ray_rx_power, ChannelId, NodeId, PhysParams, Pos};
use crate::sim::event::SimTime;

// ---------------------------------------------------------------------------
// Transmissions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxKind {
    /// Short control frame (handshake, acknowledgement): overlap-decoded.
    Ctrl,
    /// Data frame: SINR-decoded at its unicast receiver.
    Data,
}

#[derive(Debug, Clone)]
pub struct ActiveTx {
    pub token: u64,
    pub kind: TxKind,
    pub channel: ChannelId,
    pub tx_node: NodeId,
    /// Unicast receiver of a data frame; control frames are decoded by
    /// whoever listens.
    pub rx_node: Option<NodeId>,
    pub start: SimTime,
    pub end: SimTime,
    /// For data: true while the SINR at the receiver has never dipped to or
    /// below the threshold and the receiver never transmitted concurrently.
    pub clean: bool,
}

/// A finished control frame's span, kept for overlap checks against frames
/// that were still in flight when it ended.
#[derive(Debug, Clone, Copy)]
struct PastTx {
    tx_node: NodeId,
    start: SimTime,
    end: SimTime,
}

// ---------------------------------------------------------------------------
// Medium
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct Medium {
    params: PhysParams,
    positions: Vec<Pos>,
    active: BTreeMap<u64, ActiveTx>,
    per_channel: BTreeMap<ChannelId, Vec<u64>>,
    history: BTreeMap<ChannelId, Vec<PastTx>>,
    next_token: u64,
}

impl Medium {
    pub fn new(positions: Vec<Pos>, params: PhysParams) -> Self {
        params.validate();
        Medium {
            params,
            positions,
            active: BTreeMap::new(),
            per_channel: BTreeMap::new(),
            history: BTreeMap::new(),
            next_token: 0,
        }
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    fn pos(&self, node: NodeId) -> Pos {
        self.positions[node as usize]
    }

    fn in_sense(&self, a: NodeId, b: NodeId) -> bool {
        a == b || distance(self.pos(a), self.pos(b)) <= self.params.sense_range_m
    }

    /// True when any transmission on `channel` is audible at `node`.
    pub fn busy_at(&self, node: NodeId, channel: ChannelId) -> bool {
        self.channel_tokens(channel)
            .any(|tok| self.in_sense(self.active[&tok].tx_node, node))
    }

    /// Like [`busy_at`], but only counts transmissions that started strictly
    /// before `t`. A station whose backoff expires in the same instant
    /// another station begins transmitting has already committed to sending:
    /// it must not be retroactively silenced by that transmission (this is
    /// exactly how equal-slot collisions happen).
    ///
    /// [`busy_at`]: Medium::busy_at
    pub fn busy_before(&self, node: NodeId, channel: ChannelId, t: SimTime) -> bool {
        self.channel_tokens(channel).any(|tok| {
            let tx = &self.active[&tok];
            tx.start < t && self.in_sense(tx.tx_node, node)
        })
    }

    /// When the channel will next be quiet at `node`, judged from what is
    /// currently in flight: the latest end among audible transmissions.
    pub fn busy_until(&self, node: NodeId, channel: ChannelId) -> Option<SimTime> {
        self.channel_tokens(channel)
            .filter(|tok| self.in_sense(self.active[tok].tx_node, node))
            .map(|tok| self.active[&tok].end)
            .max()
    }

    fn channel_tokens(&self, channel: ChannelId) -> impl Iterator<Item = u64> + '_ {
        self.per_channel.get(&channel).into_iter().flatten().copied()
    }

    /// Registers a transmission spanning `[start, end)` and returns its
    /// token. Starting a transmission immediately re-scores every concurrent
    /// data frame on the channel.
    pub fn begin(
        &mut self,
        kind: TxKind,
        channel: ChannelId,
        tx_node: NodeId,
        rx_node: Option<NodeId>,
        start: SimTime,
        end: SimTime,
    ) -> u64 {
        debug_assert!(end > start, "empty transmission span");
        debug_assert!(kind != TxKind::Data || rx_node.is_some(), "data needs a receiver");
        let token = self.next_token;
        self.next_token += 1;
        let mut tx = ActiveTx { token, kind, channel, tx_node, rx_node, start, end, clean: true };
        if kind == TxKind::Data {
            tx.clean = self.data_sinr_ok(&tx);
        }
        self.active.insert(token, tx);
        self.per_channel.entry(channel).or_default().push(token);
        // The newcomer degrades everyone else already in flight.
        let peers: Vec<u64> = self
            .channel_tokens(channel)
            .filter(|&t| t != token && self.active[&t].kind == TxKind::Data)
            .collect();
        for t in peers {
            if self.active[&t].clean && !self.data_sinr_ok(&self.active[&t].clone()) {
                self.active.get_mut(&t).unwrap().clean = false;
            }
        }
        token
    }

    /// Current SINR verdict for a data frame at its receiver: the receiver
    /// must not itself be transmitting on the channel, and the signal must
    /// clear the threshold against noise plus all audible interferers.
    fn data_sinr_ok(&self, tx: &ActiveTx) -> bool {
        let rx = tx.rx_node.expect("data frame without receiver");
        let rx_pos = self.pos(rx);
        let mut interference = 0.0;
        for other_tok in self.channel_tokens(tx.channel) {
            let other = &self.active[&other_tok];
            if other.token == tx.token || other.tx_node == tx.tx_node {
                continue;
            }
            if other.tx_node == rx {
                // Half-duplex: a transmitting radio hears nothing.
                return false;
            }
            interference +=
                interference_power(&self.params, distance(self.pos(other.tx_node), rx_pos));
        }
        let signal = two_ray_rx_power(&self.params, distance(self.pos(tx.tx_node), rx_pos));
        signal / (self.params.noise_w + interference) > self.params.sinr_threshold
    }

    /// Ends a transmission, returning its record. Control frames move into
    /// the overlap history so later-ending frames can still see them.
    pub fn end(&mut self, token: u64) -> ActiveTx {
        let tx = self.active.remove(&token).expect("ending unknown transmission");
        let tokens = self.per_channel.get_mut(&tx.channel).expect("channel roster missing");
        tokens.retain(|&t| t != token);
        if tokens.is_empty() {
            self.per_channel.remove(&tx.channel);
        }
        let hist = self.history.entry(tx.channel).or_default();
        hist.push(PastTx { tx_node: tx.tx_node, start: tx.start, end: tx.end });
        // Keep only spans that could still overlap something in flight or
        // the frame that just ended (its decode checks come right after).
        let horizon = self
            .channel_tokens(tx.channel)
            .map(|t| self.active[&t].start)
            .chain(std::iter::once(tx.start))
            .min()
            .expect("chain is never empty");
        self.history.get_mut(&tx.channel).unwrap().retain(|p| p.end > horizon);
        tx
    }

    /// Whether `listener` decoded the control frame `frame` (call at frame
    /// end): in decode range of the sender, not the sender itself, and no
    /// other transmission on the channel overlapped the frame while audible.
    pub fn ctrl_decodable(&self, frame: &ActiveTx, listener: NodeId) -> bool {
        debug_assert_eq!(frame.kind, TxKind::Ctrl);
        if listener == frame.tx_node {
            return false;
        }
        if distance(self.pos(frame.tx_node), self.pos(listener)) > self.params.tx_range_m {
            return false;
        }
        let overlaps = |s: SimTime, e: SimTime| s < frame.end && frame.start < e;
        // Still-active transmissions (the frame itself is already ended and
        // removed when this is asked, but guard by token anyway).
        for tok in self.channel_tokens(frame.channel) {
            let other = &self.active[&tok];
            if other.token != frame.token
                && other.tx_node != frame.tx_node
                && overlaps(other.start, other.end)
                && self.in_sense(other.tx_node, listener)
            {
                return false;
            }
        }
        for past in self.history.get(&frame.channel).into_iter().flatten() {
            if (past.start, past.end, past.tx_node) != (frame.start, frame.end, frame.tx_node)
                && past.tx_node != frame.tx_node
                && overlaps(past.start, past.end)
                && self.in_sense(past.tx_node, listener)
            {
                return false;
            }
        }
        true
    }

    /// Nodes within decode range of `node`, cheapest audience enumeration
    /// for broadcast control frames.
    pub fn decode_neighbors(&self, node: NodeId) -> Vec<NodeId> {
        let here = self.pos(node);
        (0..self.positions.len() as NodeId)
            .filter(|&other| {
                other != node && distance(self.pos(other), here) <= self.params.tx_range_m
            })
            .collect()
    }

    /// Drops all history (interval boundary in beacon-driven engines).
    pub fn clear_history(&mut self) {
        self.history.clear();
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

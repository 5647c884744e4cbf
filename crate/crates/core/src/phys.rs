//! Physical-layer model: two-ray ground propagation, SINR admission and the
//! per-channel interference ledger.
//!
//! Everything here works in plain SI units (watts, metres, seconds). The model
//! is intentionally small:
//!
//! * receive power follows the two-ray ground formula
//!   `P = Pt*Gt*Gr*ht^2*hr^2 / d^4` with no crossover region and unit system
//!   loss;
//! * a transmitter contributes interference at a point only within
//!   `sense_range_m`; beyond it the contribution is exactly zero;
//! * a link is decodable when its SINR strictly exceeds `sinr_threshold`;
//! * every co-channel receiver exposes a *maximum allowed interference power*
//!   (the headroom `P_r/gamma - sum(I) - N`), and a new transmission is
//!   admitted only if it stays strictly below the smallest headroom on the
//!   channel while keeping its own SINR above the threshold.
//!
//! The [`InterferenceLedger`] is the bookkeeping structure behind admission:
//! it records which directed links are scheduled on which channel and answers
//! interference/headroom/admission queries from the stored set. Sums are
//! recomputed from the set on demand, so scheduling and releasing a link are
//! exact inverses — releasing restores every number bit for bit.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

/// Index of a node in the topology (also indexes the position table).
pub type NodeId = u32;
/// Channel identifier. Channels are numbered from 1.
pub type ChannelId = u16;

/// Position of a node in metres.
pub type Pos = (f64, f64);

/// Euclidean distance between two positions, in metres.
pub fn distance(a: Pos, b: Pos) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    (dx * dx + dy * dy).sqrt()
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Radio/propagation parameters shared by every node.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysParams {
    /// Transmit power in watts.
    pub tx_power_w: f64,
    /// Transmitter antenna gain (dimensionless).
    pub gain_tx: f64,
    /// Receiver antenna gain (dimensionless).
    pub gain_rx: f64,
    /// Transmitter antenna height in metres.
    pub height_tx_m: f64,
    /// Receiver antenna height in metres.
    pub height_rx_m: f64,
    /// SINR admission threshold `gamma` (dimensionless, linear).
    pub sinr_threshold: f64,
    /// Thermal noise floor in watts.
    pub noise_w: f64,
    /// Maximum distance at which a frame can be decoded, in metres.
    pub tx_range_m: f64,
    /// Maximum distance at which a carrier is sensed / interferes, in metres.
    pub sense_range_m: f64,
}

impl Default for PhysParams {
    /// Defaults sized so that the receive power at exactly `tx_range_m`
    /// (250 m) is ~3.65e-10 W, comfortably above the SINR threshold over the
    /// 1e-12 W noise floor.
    fn default() -> Self {
        PhysParams {
            tx_power_w: 0.2818,
            gain_tx: 1.0,
            gain_rx: 1.0,
            height_tx_m: 1.5,
            height_rx_m: 1.5,
            sinr_threshold: 10.0,
            noise_w: 1e-12,
            tx_range_m: 250.0,
            sense_range_m: 550.0,
        }
    }
}

impl PhysParams {
    /// Panics if any parameter is outside its physical domain.
    pub fn validate(&self) {
        assert!(self.tx_power_w > 0.0, "tx_power_w must be positive");
        assert!(self.gain_tx > 0.0 && self.gain_rx > 0.0, "gains must be positive");
        assert!(
            self.height_tx_m > 0.0 && self.height_rx_m > 0.0,
            "antenna heights must be positive"
        );
        assert!(self.sinr_threshold > 0.0, "sinr_threshold must be positive");
        assert!(self.noise_w >= 0.0, "noise_w must be non-negative");
        assert!(self.tx_range_m > 0.0, "tx_range_m must be positive");
        assert!(
            self.sense_range_m >= self.tx_range_m,
            "sense_range_m must be at least tx_range_m"
        );
    }

    /// Numerator of the two-ray formula: `Pt*Gt*Gr*ht^2*hr^2`.
    fn two_ray_numerator(&self) -> f64 {
        self.tx_power_w
            * self.gain_tx
            * self.gain_rx
            * self.height_tx_m
            * self.height_tx_m
            * self.height_rx_m
            * self.height_rx_m
    }
}

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

/// Receive power in watts over a distance of `distance_m` metres under the
/// two-ray ground model.
///
/// Panics if `distance_m` is not strictly positive: the model has a pole at
/// the origin and co-located radios are a topology bug, not a physics case.
pub fn two_ray_rx_power(params: &PhysParams, distance_m: f64) -> f64 {
    assert!(
        distance_m > 0.0,
        "two-ray model undefined for non-positive distance {distance_m}"
    );
    let d2 = distance_m * distance_m;
    params.two_ray_numerator() / (d2 * d2)
}

/// Interference contributed by a transmitter at `distance_m`.
///
/// Identical to [`two_ray_rx_power`] within the sensing range and exactly
/// zero beyond it — far transmitters do not add fractional wattage.
pub fn interference_power(params: &PhysParams, distance_m: f64) -> f64 {
    if distance_m > params.sense_range_m {
        0.0
    } else {
        two_ray_rx_power(params, distance_m)
    }
}

/// Maximum allowed interference power at a receiver: the headroom
/// `P_r/gamma - interference - noise` that further co-channel transmitters
/// may still consume before the receiver's SINR drops to the threshold.
///
/// Negative values mean the receiver is already in violation.
pub fn cmaip(rx_power_w: f64, gamma: f64, interference_w: f64, noise_w: f64) -> f64 {
    assert!(gamma > 0.0, "gamma must be positive");
    rx_power_w / gamma - interference_w - noise_w
}

// ---------------------------------------------------------------------------
// Interference ledger
// ---------------------------------------------------------------------------

/// A directed link scheduled on a channel: `tx` transmits towards `rx`.
pub type LinkKey = (NodeId, NodeId);

/// Errors from ledger bookkeeping.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("link {0}->{1} already scheduled on channel {2}")]
    DuplicateLink(NodeId, NodeId, ChannelId),
    #[error("link {0}->{1} not scheduled on channel {2}")]
    AbsentLink(NodeId, NodeId, ChannelId),
    #[error("node {0} out of range (ledger knows {1} positions)")]
    UnknownNode(NodeId, usize),
}

/// Per-channel book of scheduled transmissions plus the geometry needed to
/// answer interference and admission queries.
///
/// The ledger stores only the *set* of active links; every sum is recomputed
/// from that set, which keeps `schedule` and `release` exact inverses.
#[derive(Debug, Clone)]
pub struct InterferenceLedger {
    params: PhysParams,
    positions: Vec<Pos>,
    active: BTreeMap<ChannelId, BTreeSet<LinkKey>>,
}

impl InterferenceLedger {
    pub fn new(positions: Vec<Pos>, params: PhysParams) -> Self {
        params.validate();
        InterferenceLedger { params, positions, active: BTreeMap::new() }
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    pub fn position(&self, node: NodeId) -> Pos {
        self.positions[node as usize]
    }

    fn check_node(&self, node: NodeId) -> Result<(), LedgerError> {
        if (node as usize) < self.positions.len() {
            Ok(())
        } else {
            Err(LedgerError::UnknownNode(node, self.positions.len()))
        }
    }

    /// Records `tx -> rx` as active on `channel`.
    pub fn schedule(&mut self, channel: ChannelId, tx: NodeId, rx: NodeId) -> Result<(), LedgerError> {
        self.check_node(tx)?;
        self.check_node(rx)?;
        let set = self.active.entry(channel).or_default();
        if !set.insert((tx, rx)) {
            return Err(LedgerError::DuplicateLink(tx, rx, channel));
        }
        Ok(())
    }

    /// Removes `tx -> rx` from `channel`, restoring every interference sum to
    /// its value before the matching `schedule`.
    pub fn release(&mut self, channel: ChannelId, tx: NodeId, rx: NodeId) -> Result<(), LedgerError> {
        let set = self.active.get_mut(&channel).ok_or(LedgerError::AbsentLink(tx, rx, channel))?;
        if !set.remove(&(tx, rx)) {
            return Err(LedgerError::AbsentLink(tx, rx, channel));
        }
        if set.is_empty() {
            self.active.remove(&channel);
        }
        Ok(())
    }

    /// Drops every link on every channel.
    pub fn clear(&mut self) {
        self.active.clear();
    }

    /// Links currently scheduled on `channel`, in canonical order.
    pub fn links_on(&self, channel: ChannelId) -> impl Iterator<Item = LinkKey> + '_ {
        self.active.get(&channel).into_iter().flatten().copied()
    }

    /// Number of links scheduled on `channel`.
    pub fn load(&self, channel: ChannelId) -> usize {
        self.active.get(&channel).map_or(0, |s| s.len())
    }

    pub fn is_scheduled(&self, channel: ChannelId, tx: NodeId, rx: NodeId) -> bool {
        self.active.get(&channel).is_some_and(|s| s.contains(&(tx, rx)))
    }

    /// Receive power of a direct transmission `tx -> rx`.
    pub fn rx_power(&self, tx: NodeId, rx: NodeId) -> f64 {
        two_ray_rx_power(&self.params, distance(self.position(tx), self.position(rx)))
    }

    /// Total interference at `node` from links active on `channel`, skipping
    /// transmitters listed in `exclude`.
    pub fn interference_at(&self, channel: ChannelId, node: NodeId, exclude: &[NodeId]) -> f64 {
        let here = self.position(node);
        self.links_on(channel)
            .filter(|(tx, _)| !exclude.contains(tx) && *tx != node)
            .map(|(tx, _)| interference_power(&self.params, distance(self.position(tx), here)))
            .sum()
    }

    /// Headroom of the scheduled link `tx -> rx` on `channel`: receive power
    /// over gamma minus the interference from the *other* co-channel
    /// transmitters minus noise.
    pub fn cmaip_of(&self, channel: ChannelId, tx: NodeId, rx: NodeId) -> f64 {
        let p = &self.params;
        cmaip(
            self.rx_power(tx, rx),
            p.sinr_threshold,
            self.interference_at(channel, rx, &[tx]),
            p.noise_w,
        )
    }

    /// Smallest headroom over all links on `channel`; `None` when idle.
    pub fn min_cmaip(&self, channel: ChannelId) -> Option<f64> {
        self.links_on(channel)
            .map(|(tx, rx)| self.cmaip_of(channel, tx, rx))
            .min_by(|a, b| a.partial_cmp(b).expect("cmaip is never NaN"))
    }

    /// SINR the new link `tx -> rx` would see on `channel` against the
    /// currently scheduled transmitters.
    ///
    /// Links sharing either endpoint with the newcomer are skipped: the
    /// common node serializes them in time (one radio cannot transmit and
    /// serve another link at once), so they are a scheduling constraint, not
    /// an interference term.
    pub fn sinr_of_new(&self, channel: ChannelId, tx: NodeId, rx: NodeId) -> f64 {
        let rx_pos = self.position(rx);
        let interference: f64 = self
            .links_on(channel)
            .filter(|link| !shares_node(link, tx, rx))
            .map(|(t, _)| interference_power(&self.params, distance(self.position(t), rx_pos)))
            .sum();
        self.rx_power(tx, rx) / (self.params.noise_w + interference)
    }

    /// Whether scheduling `tx -> rx` on `channel` is admissible:
    ///
    /// * the newcomer's interference at every existing co-channel receiver
    ///   stays strictly below the smallest headroom on the channel, and
    /// * the newcomer's own SINR against the existing transmitters strictly
    ///   exceeds the threshold.
    ///
    /// An idle channel admits any link whose noise-only SINR clears the
    /// threshold. Equality is not admission on either condition. Existing
    /// links that share a node with the newcomer never run concurrently with
    /// it (the shared node's radios serialize them), so they take part in
    /// neither the headroom pool nor the interference sums.
    pub fn admissible(&self, channel: ChannelId, tx: NodeId, rx: NodeId) -> bool {
        let tx_pos = self.position(tx);
        let disjoint: Vec<LinkKey> = self
            .links_on(channel)
            .filter(|link| !shares_node(link, tx, rx))
            .collect();
        if let Some(min_headroom) = disjoint
            .iter()
            .map(|&(t, r)| self.cmaip_of(channel, t, r))
            .min_by(|a, b| a.partial_cmp(b).expect("cmaip is never NaN"))
        {
            for &(_, existing_rx) in &disjoint {
                let injected =
                    interference_power(&self.params, distance(tx_pos, self.position(existing_rx)));
                if injected >= min_headroom {
                    return false;
                }
            }
        }
        self.sinr_of_new(channel, tx, rx) > self.params.sinr_threshold
    }
}

/// A link has `x` or `y` as an endpoint.
fn shares_node(link: &LinkKey, x: NodeId, y: NodeId) -> bool {
    link.0 == x || link.0 == y || link.1 == x || link.1 == y
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

//! Static-stage channel assignment: load-balancing BFS coloring of the
//! multi-radio conflict graph.
//!
//! The coloring walks hop levels outward from the gateways. Visiting a vertex
//! colors its whole still-uncolored neighborhood (its own link first if
//! needed): for every link the algorithm picks one representative radio pair,
//! computes the channels that are simultaneously
//!
//! * conflict-free against already-colored neighbor links,
//! * compatible with both radios' existing bindings (a radio carries at most
//!   one channel), and
//! * safe for the remaining uncolored links touching either endpoint (no
//!   choice may leave a future link without any radio-compatible channel),
//!
//! and assigns a seeded-random member of that set. When the set is empty the
//! link *shares*: every radio-feasible channel is ranked by (feasibility
//! guard, interference admissibility, presence of same-hop-priority links,
//! fewest assigned links, lowest id) and the best one is reused.
//!
//! Once any radio pair of a link is colored, the link's entire radio-pair
//! group leaves the working graph, so every link ends up with exactly one
//! colored representative.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mcg::{Mcg, RadioPairLink};
use crate::phys::{ChannelId, InterferenceLedger, NodeId, PhysParams};
use crate::topo::Topology;

// ---------------------------------------------------------------------------
// Assignment
// ---------------------------------------------------------------------------

/// How a link obtained its channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorKind {
    /// The conflict-free candidate set was nonempty; the channel was a free
    /// (seeded-random) choice out of it.
    FreeChoice,
    /// No conflict-free candidate existed; the channel was shared by the
    /// admissibility-and-load rule.
    Shared,
    /// Baseline only: the link was orphaned by vertex removal and received a
    /// blind random data channel.
    Fallback,
}

/// Channel and radio pair chosen for one link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkColor {
    pub vertex: RadioPairLink,
    pub channel: ChannelId,
    pub kind: ColorKind,
    /// Global coloring sequence number (0 = first link colored).
    pub order: u32,
    /// Hop level of the link (min endpoint hop).
    pub hop: u32,
}

/// Complete static assignment: one colored radio pair per link plus the
/// radio-to-channel bindings implied by the colored pairs.
#[derive(Debug, Clone, Default)]
pub struct ChannelAssignment {
    channels: u16,
    links: BTreeMap<(NodeId, NodeId), LinkColor>,
    radios: BTreeMap<(NodeId, u8), ChannelId>,
}

impl ChannelAssignment {
    pub fn new(channels: u16) -> Self {
        ChannelAssignment { channels, links: BTreeMap::new(), radios: BTreeMap::new() }
    }

    /// Number of channels the assignment was built for (ids `1..=channels`).
    pub fn channels(&self) -> u16 {
        self.channels
    }

    pub fn channel_of(&self, a: NodeId, b: NodeId) -> Option<ChannelId> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.links.get(&key).map(|c| c.channel)
    }

    pub fn color_of(&self, a: NodeId, b: NodeId) -> Option<&LinkColor> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.links.get(&key)
    }

    pub fn radio_channel(&self, node: NodeId, radio: u8) -> Option<ChannelId> {
        self.radios.get(&(node, radio)).copied()
    }

    /// All (link, color) entries in canonical order.
    pub fn links(&self) -> impl Iterator<Item = ((NodeId, NodeId), &LinkColor)> {
        self.links.iter().map(|(&l, c)| (l, c))
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Radio bindings in canonical order.
    pub fn radio_bindings(&self) -> impl Iterator<Item = ((NodeId, u8), ChannelId)> + '_ {
        self.radios.iter().map(|(&r, &c)| (r, c))
    }

    /// Channels currently bound on any radio of `node`, deduplicated.
    pub fn node_channels(&self, node: NodeId) -> BTreeSet<ChannelId> {
        self.radios
            .range((node, 0)..=(node, u8::MAX))
            .map(|(_, &c)| c)
            .collect()
    }

    /// Number of radios of `node` that carry a binding.
    pub fn node_bound_radios(&self, node: NodeId) -> usize {
        self.radios.range((node, 0)..=(node, u8::MAX)).count()
    }

    /// Number of links assigned to each channel; index `i` holds channel
    /// `i + 1`. Sums to the number of links.
    pub fn load_profile(&self) -> Vec<usize> {
        let mut profile = vec![0usize; self.channels as usize];
        for color in self.links.values() {
            profile[(color.channel - 1) as usize] += 1;
        }
        profile
    }

    /// Records a colored link, binding both radios of the vertex when asked.
    ///
    /// Panics (debug) on radio-uniqueness violations or double coloring; both
    /// indicate an algorithm bug, not bad input.
    pub(crate) fn insert_colored(&mut self, color: LinkColor, bind_radios: bool) {
        debug_assert!(
            (1..=self.channels).contains(&color.channel),
            "channel {} out of range 1..={}",
            color.channel,
            self.channels
        );
        let key = color.vertex.link();
        let prev = self.links.insert(key, color);
        debug_assert!(prev.is_none(), "link {key:?} colored twice");
        if bind_radios {
            for (node, radio) in [
                (color.vertex.node_a, color.vertex.radio_a),
                (color.vertex.node_b, color.vertex.radio_b),
            ] {
                let existing = self.radios.insert((node, radio), color.channel);
                debug_assert!(
                    existing.is_none() || existing == Some(color.channel),
                    "radio ({node},{radio}) rebound from {existing:?} to {}",
                    color.channel
                );
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Coloring
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CcaaError {
    #[error("channel count must be at least 1")]
    NoChannels,
    #[error("link {0}-{1} has no radio-compatible channel even by sharing")]
    Unassignable(NodeId, NodeId),
}

/// One visit record for the hop-priority audit: the hop level of the vertex
/// popped from the queue and the number of links colored so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VisitRecord {
    pub vertex_hop: u32,
    pub links_colored_before: u32,
}

/// Audit trail of a coloring run, consumed by the invariant tests.
#[derive(Debug, Clone, Default)]
pub struct CcaaAudit {
    pub visits: Vec<VisitRecord>,
}

/// Colors the conflict graph with channels `1..=channels`.
pub fn ccaa_color(
    topo: &Topology,
    mcg: &Mcg,
    channels: u16,
    params: &PhysParams,
    seed: u64,
) -> Result<ChannelAssignment, CcaaError> {
    color_with_audit(topo, mcg, channels, params, seed).map(|(a, _)| a)
}

/// [`ccaa_color`] plus the visit audit used by the hop-priority tests.
pub fn color_with_audit(
    topo: &Topology,
    mcg: &Mcg,
    channels: u16,
    params: &PhysParams,
    seed: u64,
) -> Result<(ChannelAssignment, CcaaAudit), CcaaError> {
    if channels == 0 {
        return Err(CcaaError::NoChannels);
    }
    let mut state = Coloring::new(topo, mcg, channels, params, seed);
    state.run()?;
    Ok((state.assignment, state.audit))
}

/// Sort key pinned by the determinism contract: node pair first, then radio
/// indices.
fn vertex_sort_key(v: &RadioPairLink) -> (NodeId, NodeId, u8, u8) {
    (v.node_a, v.node_b, v.radio_a, v.radio_b)
}

struct Coloring<'a> {
    topo: &'a Topology,
    mcg: &'a Mcg,
    channels: u16,
    rng: ChaCha8Rng,
    assignment: ChannelAssignment,
    audit: CcaaAudit,
    /// Channel of the colored representative, per vertex index.
    vertex_color: Vec<Option<ChannelId>>,
    /// Whole-group removal flags (set when the group's link is colored).
    removed: Vec<bool>,
    visited: Vec<bool>,
    /// Colored links treated as active transmissions for admissibility.
    ledger: InterferenceLedger,
    order: u32,
}

impl<'a> Coloring<'a> {
    fn new(
        topo: &'a Topology,
        mcg: &'a Mcg,
        channels: u16,
        params: &'a PhysParams,
        seed: u64,
    ) -> Self {
        let n = mcg.vertex_count();
        Coloring {
            topo,
            mcg,
            channels,
            rng: ChaCha8Rng::seed_from_u64(seed),
            assignment: ChannelAssignment::new(channels),
            audit: CcaaAudit::default(),
            vertex_color: vec![None; n],
            removed: vec![false; n],
            visited: vec![false; n],
            ledger: InterferenceLedger::new(topo.positions(), params.clone()),
            order: 0,
        }
    }

    fn run(&mut self) -> Result<(), CcaaError> {
        let mut levels: Vec<u32> = (0..self.mcg.vertex_count()).map(|i| self.mcg.hop(i as u32)).collect();
        levels.sort_unstable();
        levels.dedup();

        for level in levels {
            let mut queue: Vec<u32> = (0..self.mcg.vertex_count() as u32)
                .filter(|&i| self.mcg.hop(i) == level && !self.removed[i as usize])
                .collect();
            queue.sort_by_key(|&i| vertex_sort_key(self.mcg.vertex(i)));

            for v in queue {
                if self.visited[v as usize] || self.removed[v as usize] {
                    continue;
                }
                self.visited[v as usize] = true;
                self.audit.visits.push(VisitRecord {
                    vertex_hop: self.mcg.hop(v),
                    links_colored_before: self.order,
                });
                self.color_neighborhood(v)?;
            }
        }
        Ok(())
    }

    /// Colors the popped vertex's link (if still uncolored) and every
    /// uncolored link adjacent to it, most-constrained first.
    ///
    /// Plan sizes are cached and revalidated lazily. A commit can change a
    /// remaining link's plan only by binding a radio at a shared endpoint
    /// (feasibility and the stranding guard live there) or by taking a
    /// channel the link still counted as available, so only those entries
    /// are refreshed; the popped link is always re-planned before committing.
    fn color_neighborhood(&mut self, v: u32) -> Result<(), CcaaError> {
        let mut worklist: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
        let own = self.mcg.vertex(v).link();
        if self.assignment.color_of(own.0, own.1).is_none() {
            worklist.insert(own);
        }
        for &nb in self.mcg.neighbors(v) {
            if !self.removed[nb as usize] {
                let link = self.mcg.vertex(nb).link();
                if self.assignment.color_of(link.0, link.1).is_none() {
                    worklist.insert(link);
                }
            }
        }

        let mut sizes: BTreeSet<(usize, (NodeId, NodeId))> = BTreeSet::new();
        let mut masks: BTreeMap<(NodeId, NodeId), u64> = BTreeMap::new();
        for &link in &worklist {
            let choice = self.plan_link(link);
            sizes.insert((choice_size(&choice), link));
            masks.insert(link, choice_mask(&choice));
        }

        while let Some(&(size, link)) = sizes.iter().next() {
            sizes.remove(&(size, link));
            let choice = self.plan_link(link);
            let fresh = choice_size(&choice);
            if fresh > size {
                // The cached size was stale (a stranding guard released a
                // channel); this link may no longer be the most constrained.
                if let Some(&(next, _)) = sizes.iter().next() {
                    if fresh > next {
                        sizes.insert((fresh, link));
                        masks.insert(link, choice_mask(&choice));
                        continue;
                    }
                }
            }
            masks.remove(&link);
            let committed = self.commit(link, choice)?;
            let stale: Vec<(usize, (NodeId, NodeId))> = sizes
                .iter()
                .filter(|&&(_, l)| {
                    let endpoint_shared = l.0 == link.0
                        || l.0 == link.1
                        || l.1 == link.0
                        || l.1 == link.1;
                    endpoint_shared || masks[&l] & channel_bit(committed) != 0
                })
                .copied()
                .collect();
            for (s, l) in stale {
                sizes.remove(&(s, l));
                let refreshed = self.plan_link(l);
                sizes.insert((choice_size(&refreshed), l));
                masks.insert(l, choice_mask(&refreshed));
            }
        }
        Ok(())
    }

    /// Decides what would be done for `link` right now.
    fn plan_link(&mut self, link: (NodeId, NodeId)) -> Choice {
        let group = self.mcg.group(link);
        debug_assert!(!group.is_empty(), "link {link:?} has no radio pairs");

        // Channels already used by colored neighbor links (link-level conflicts, so
        // any group member's adjacency covers them all).
        let neighbor_colors: BTreeSet<ChannelId> = self
            .mcg
            .neighbors(group[0])
            .iter()
            .filter_map(|&nb| self.vertex_color[nb as usize])
            .collect();

        // Representative: both-radios-unbound first, then the largest
        // candidate set, ties by lowest radio indices (group order).
        let mut rep_best: Option<(bool, usize, u32, Vec<ChannelId>)> = None;
        for &vi in group {
            let vertex = *self.mcg.vertex(vi);
            let both_unbound = self
                .assignment
                .radio_channel(vertex.node_a, vertex.radio_a)
                .is_none()
                && self.assignment.radio_channel(vertex.node_b, vertex.radio_b).is_none();
            let c_avail: Vec<ChannelId> = (1..=self.channels)
                .filter(|&c| !neighbor_colors.contains(&c))
                .filter(|&c| self.radio_feasible(&vertex, c))
                .filter(|&c| self.guard_allows(&vertex, c))
                .collect();
            let better = match &rep_best {
                None => true,
                Some((bu, size, _, _)) => {
                    (both_unbound, c_avail.len()) > (*bu, *size)
                }
            };
            if better {
                rep_best = Some((both_unbound, c_avail.len(), vi, c_avail));
            }
        }
        let (_, _, rep, c_available) = rep_best.expect("group nonempty");
        if !c_available.is_empty() {
            return Choice::Free { rep, c_available };
        }

        // Sharing: rank every radio-feasible channel.
        let feasible: Vec<(ChannelId, u32)> = (1..=self.channels)
            .filter_map(|c| self.feasible_vertex_for(group, c).map(|vi| (c, vi)))
            .collect();
        match feasible.len() {
            0 => return Choice::Stuck,
            // One option: the ranking cannot change the outcome, so skip the
            // (ledger-heavy) rank computation entirely.
            1 => return Choice::Share { rep: feasible[0].1, channel: feasible[0].0 },
            _ => {}
        }
        let hop = self.mcg.hop(group[0]);
        let mut ranked: Vec<(ShareRank, ChannelId, u32)> = Vec::new();
        for (c, vi) in feasible {
            let vertex = *self.mcg.vertex(vi);
            let guard_ok = self.guard_allows(&vertex, c);
            let admissible = self.ledger.admissible(c, link.0, link.1);
            let same_hop = self
                .assignment
                .links()
                .any(|(_, col)| col.channel == c && col.hop == hop);
            ranked.push((
                ShareRank {
                    guard_fail: !guard_ok,
                    inadmissible: !admissible,
                    no_same_hop: !same_hop,
                    load: self.ledger.load(c),
                },
                c,
                vi,
            ));
        }
        ranked.sort_by_key(|(rank, c, _)| (*rank, *c));
        let (_, channel, vi) = ranked.into_iter().next().expect("len checked above");
        Choice::Share { rep: vi, channel }
    }

    fn commit(&mut self, link: (NodeId, NodeId), choice: Choice) -> Result<ChannelId, CcaaError> {
        let (rep, channel, kind) = match choice {
            Choice::Free { rep, c_available } => {
                let idx = self.rng.gen_range(0..c_available.len());
                (rep, c_available[idx], ColorKind::FreeChoice)
            }
            Choice::Share { rep, channel } => (rep, channel, ColorKind::Shared),
            Choice::Stuck => return Err(CcaaError::Unassignable(link.0, link.1)),
        };
        let vertex = *self.mcg.vertex(rep);
        self.vertex_color[rep as usize] = Some(channel);
        self.assignment.insert_colored(
            LinkColor { vertex, channel, kind, order: self.order, hop: self.mcg.hop(rep) },
            true,
        );
        self.order += 1;
        for &vi in self.mcg.group(link) {
            self.removed[vi as usize] = true;
        }
        self.ledger
            .schedule(channel, link.0, link.1)
            .expect("each link is colored exactly once");
        Ok(channel)
    }

    /// Channel `c` is compatible with both radios' existing bindings.
    fn radio_feasible(&self, vertex: &RadioPairLink, c: ChannelId) -> bool {
        let a = self.assignment.radio_channel(vertex.node_a, vertex.radio_a);
        let b = self.assignment.radio_channel(vertex.node_b, vertex.radio_b);
        (a.is_none() || a == Some(c)) && (b.is_none() || b == Some(c))
    }

    /// The group vertex that realizes channel `c` with the fewest new radio
    /// bindings, ties by lowest radio indices; `None` if no member fits.
    fn feasible_vertex_for(&self, group: &[u32], c: ChannelId) -> Option<u32> {
        let mut best: Option<(usize, u32)> = None;
        for &vi in group {
            let vertex = self.mcg.vertex(vi);
            if !self.radio_feasible(vertex, c) {
                continue;
            }
            let new_binds = [
                (vertex.node_a, vertex.radio_a),
                (vertex.node_b, vertex.radio_b),
            ]
            .iter()
            .filter(|&&(n, r)| self.assignment.radio_channel(n, r).is_none())
            .count();
            if best.is_none_or(|(b, _)| new_binds < b) {
                best = Some((new_binds, vi));
            }
        }
        best.map(|(_, vi)| vi)
    }

    /// Binding `vertex -> c` must not leave any uncolored link at either
    /// endpoint without a radio-compatible channel. A future link is doomed
    /// only when both of its endpoints are fully bound to disjoint channel
    /// sets, so the check simulates the binding and inspects the incident
    /// uncolored links.
    fn guard_allows(&self, vertex: &RadioPairLink, c: ChannelId) -> bool {
        for (endpoint, radio) in [
            (vertex.node_a, vertex.radio_a),
            (vertex.node_b, vertex.radio_b),
        ] {
            let (mut channels, mut free) = self.binding_state(endpoint);
            if self.assignment.radio_channel(endpoint, radio).is_none() {
                free -= 1;
                channels.insert(c);
            }
            if free > 0 {
                continue; // endpoint keeps a spare radio: nothing can strand
            }
            for &other in self.topo.neighbors(endpoint) {
                if vertex.touches_pair(endpoint, other) {
                    continue; // the link being colored
                }
                if self.assignment.channel_of(endpoint, other).is_some() {
                    continue;
                }
                let (other_channels, other_free) = self.binding_state(other);
                if other_free == 0 && channels.is_disjoint(&other_channels) {
                    return false;
                }
            }
        }
        true
    }

    /// (bound channel set, number of unbound radios) of a node.
    fn binding_state(&self, node: NodeId) -> (BTreeSet<ChannelId>, usize) {
        let channels = self.assignment.node_channels(node);
        let bound = self.assignment.node_bound_radios(node);
        (channels, self.topo.node(node).radios as usize - bound)
    }
}

impl RadioPairLink {
    /// Whether this vertex's link is exactly the pair `{x, y}`.
    fn touches_pair(&self, x: NodeId, y: NodeId) -> bool {
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        self.node_a == lo && self.node_b == hi
    }
}

/// Ordering key for sharing candidates; all fields false/small = better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct ShareRank {
    guard_fail: bool,
    inadmissible: bool,
    no_same_hop: bool,
    load: usize,
}

enum Choice {
    Free { rep: u32, c_available: Vec<ChannelId> },
    Share { rep: u32, channel: ChannelId },
    Stuck,
}

/// Constraint order: fewer free channels first; sharing and stuck links are
/// maximally constrained.
fn choice_size(choice: &Choice) -> usize {
    match choice {
        Choice::Free { c_available, .. } => c_available.len(),
        Choice::Share { .. } | Choice::Stuck => 0,
    }
}

/// Bitmask of the channels a plan still counts as freely available, for the
/// lazy cache-invalidation test. Channels past 63 share one conservative bit
/// (extra refreshes, never a missed one).
fn channel_bit(c: ChannelId) -> u64 {
    1u64 << (c as u64).min(63)
}

fn choice_mask(choice: &Choice) -> u64 {
    match choice {
        Choice::Free { c_available, .. } => {
            c_available.iter().fold(0u64, |m, &c| m | channel_bit(c))
        }
        Choice::Share { .. } | Choice::Stuck => 0,
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcg::build_mcg;
    use crate::topo::Node;

    fn params() -> PhysParams {
        PhysParams::default()
    }

    fn hub_topology() -> Topology {
        let nodes = vec![
            Node { id: 0, pos: (0.0, 0.0), radios: 1, gateway: true }, // A
            Node { id: 1, pos: (200.0, 0.0), radios: 2, gateway: false }, // B (hub)
            Node { id: 2, pos: (400.0, 0.0), radios: 1, gateway: false }, // C
            Node { id: 3, pos: (200.0, 200.0), radios: 1, gateway: false }, // D
        ];
        Topology::build(nodes, 250.0).unwrap()
    }

    fn color(topo: &Topology, channels: u16, seed: u64) -> ChannelAssignment {
        let mcg = build_mcg(topo, params().sense_range_m);
        ccaa_color(topo, &mcg, channels, &params(), seed).unwrap()
    }

    /// Inspection helper: every colored link's radios must agree with the
    /// radio map, every radio must carry at most one channel.
    fn assert_radio_uniqueness(a: &ChannelAssignment) {
        for (_, col) in a.links() {
            let v = col.vertex;
            assert_eq!(a.radio_channel(v.node_a, v.radio_a), Some(col.channel));
            assert_eq!(a.radio_channel(v.node_b, v.radio_b), Some(col.channel));
        }
        // The map structure itself guarantees one entry per radio.
    }

    #[test]
    fn single_link_uses_one_channel() {
        let topo = Topology::build(
            vec![
                Node { id: 0, pos: (0.0, 0.0), radios: 1, gateway: true },
                Node { id: 1, pos: (200.0, 0.0), radios: 1, gateway: false },
            ],
            250.0,
        )
        .unwrap();
        for channels in [1u16, 3, 8] {
            let a = color(&topo, channels, 7);
            assert_eq!(a.link_count(), 1);
            let profile = a.load_profile();
            assert_eq!(profile.iter().sum::<usize>(), 1);
            assert_eq!(profile.iter().filter(|&&n| n > 0).count(), 1);
        }
    }

    #[test]
    fn hub_uses_two_distinct_channels_and_shares_third() {
        // B has two radios: AB and BC get distinct channels through them;
        // BD cannot get a third radio on B, so it shares one of the two.
        for seed in 0..20 {
            let topo = hub_topology();
            let a = color(&topo, 3, seed);
            assert_eq!(a.link_count(), 3);
            let ab = a.channel_of(0, 1).unwrap();
            let bc = a.channel_of(1, 2).unwrap();
            let bd = a.channel_of(1, 3).unwrap();
            assert_ne!(ab, bc, "two radios on the hub give two distinct channels");
            assert!(bd == ab || bd == bc, "third link must share");
            // Exactly two distinct channels used; loads are {2,1}.
            let mut loads = a.load_profile();
            loads.sort_unstable();
            assert_eq!(loads, vec![0, 1, 2]);
            assert_radio_uniqueness(&a);
            assert_eq!(a.color_of(1, 3).unwrap().kind, ColorKind::Shared);
        }
    }

    #[test]
    fn star_with_matching_radios_gets_all_distinct_channels() {
        // Hub with k radios, k leaves out of each other's range: k distinct
        // channels, zero sharing.
        let k = 4u16;
        let mut nodes = vec![Node { id: 0, pos: (0.0, 0.0), radios: k as u8, gateway: true }];
        for i in 0..k as usize {
            let angle = std::f64::consts::TAU * i as f64 / k as f64;
            nodes.push(Node {
                id: (i + 1) as NodeId,
                pos: (240.0 * angle.cos(), 240.0 * angle.sin()),
                radios: 1,
                gateway: false,
            });
        }
        let topo = Topology::build(nodes, 250.0).unwrap();
        let a = color(&topo, k, 3);
        assert_eq!(a.link_count(), k as usize);
        let mut used: Vec<ChannelId> = a.links().map(|(_, c)| c.channel).collect();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), k as usize, "all links on distinct channels");
        assert!(a.links().all(|(_, c)| c.kind == ColorKind::FreeChoice));
    }

    #[test]
    fn zero_channels_is_error() {
        let topo = hub_topology();
        let mcg = build_mcg(&topo, params().sense_range_m);
        assert_eq!(
            ccaa_color(&topo, &mcg, 0, &params(), 1).unwrap_err(),
            CcaaError::NoChannels
        );
    }

    #[test]
    fn coverage_every_link_colored_once() {
        let topo = hub_topology();
        let mcg = build_mcg(&topo, params().sense_range_m);
        let a = color(&topo, 3, 11);
        assert_eq!(a.link_count(), topo.links().len());
        for &(p, q) in topo.links() {
            let col = a.color_of(p, q).unwrap();
            assert!(mcg.group((p, q)).iter().any(|&vi| mcg.vertex(vi) == &col.vertex));
        }
    }

    #[test]
    fn determinism_same_seed_same_assignment() {
        let topo = hub_topology();
        let a = color(&topo, 3, 42);
        let b = color(&topo, 3, 42);
        let av: Vec<_> = a.links().map(|(l, c)| (l, *c)).collect();
        let bv: Vec<_> = b.links().map(|(l, c)| (l, *c)).collect();
        assert_eq!(av, bv);
    }

    #[test]
    fn hop_priority_levels_visited_in_order() {
        let topo = hub_topology();
        let mcg = build_mcg(&topo, params().sense_range_m);
        let (_, audit) = color_with_audit(&topo, &mcg, 3, &params(), 5).unwrap();
        let hops: Vec<u32> = audit.visits.iter().map(|v| v.vertex_hop).collect();
        let mut sorted = hops.clone();
        sorted.sort_unstable();
        assert_eq!(hops, sorted, "visits walk hop levels outward");
    }

    #[test]
    fn conflict_freedom_when_feasible() {
        // On a roomy channel budget every coloring is a free choice and no
        // two conflicting links may share a channel.
        let topo = hub_topology();
        let mcg = build_mcg(&topo, params().sense_range_m);
        let a = color(&topo, 8, 9);
        for (l1, c1) in a.links() {
            if c1.kind != ColorKind::FreeChoice {
                continue;
            }
            for (l2, c2) in a.links() {
                if l1 == l2 || c2.order > c1.order {
                    continue;
                }
                let conflicting = mcg
                    .group(l1)
                    .iter()
                    .any(|&v| mcg.neighbors(v).iter().any(|&n| mcg.vertex(n).link() == l2));
                if conflicting {
                    assert_ne!(c1.channel, c2.channel, "{l1:?} vs {l2:?}");
                }
            }
        }
    }

    #[test]
    fn single_radio_cycle_does_not_strand() {
        // Regression for the feasibility guard: gateway G with two radios,
        // cycle G-X-P-Q-Y-G of single-radio nodes plus chord links. Without
        // the guard, X-P and Y-Q can bind P and Q to different channels and
        // strand link P-Q.
        let nodes = vec![
            Node { id: 0, pos: (250.0, 200.0), radios: 2, gateway: true }, // G
            Node { id: 1, pos: (50.0, 200.0), radios: 1, gateway: false }, // X
            Node { id: 2, pos: (50.0, 0.0), radios: 1, gateway: false },   // P
            Node { id: 3, pos: (250.0, 0.0), radios: 1, gateway: false },  // Q
            Node { id: 4, pos: (450.0, 100.0), radios: 1, gateway: false }, // Y
        ];
        let topo = Topology::build(nodes, 250.0).unwrap();
        let mcg = build_mcg(&topo, params().sense_range_m);
        for seed in 0..50 {
            let a = ccaa_color(&topo, &mcg, 3, &params(), seed).unwrap();
            assert_eq!(a.link_count(), topo.links().len());
            assert_radio_uniqueness(&a);
        }
    }
}

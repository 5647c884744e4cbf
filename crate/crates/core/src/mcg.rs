//! Multi-radio conflict graph.
//!
//! Every topology link P–Q expands into the radio-pair set
//! `S_PQ = R_P × R_Q` — one vertex per (radio of P, radio of Q) combination.
//! Two vertices conflict (carry an edge) when their links cannot share a
//! channel: they touch a common node, or some endpoint of one lies within the
//! sensing range of some endpoint of the other.
//!
//! Each vertex carries the hop level of its link, `min(hop(P), hop(Q))`, so
//! gateway-adjacent links sort first when the coloring walks hop levels.

use std::collections::BTreeMap;

use crate::phys::{distance, NodeId};
use crate::topo::Topology;

/// A vertex of the conflict graph: radio `radio_a` of `node_a` paired with
/// radio `radio_b` of `node_b`. Canonical form has `node_a < node_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RadioPairLink {
    pub node_a: NodeId,
    pub radio_a: u8,
    pub node_b: NodeId,
    pub radio_b: u8,
}

impl RadioPairLink {
    pub fn link(&self) -> (NodeId, NodeId) {
        (self.node_a, self.node_b)
    }

    fn touches(&self, node: NodeId) -> bool {
        self.node_a == node || self.node_b == node
    }
}

/// The radio-pair set of one link: the full Cartesian product of the two
/// endpoints' radio indices. Empty when the nodes are not linked.
pub fn radio_link_set(topo: &Topology, p: NodeId, q: NodeId) -> Vec<RadioPairLink> {
    if !topo.are_linked(p, q) {
        return Vec::new();
    }
    let (a, b) = if p < q { (p, q) } else { (q, p) };
    let mut set = Vec::new();
    for ra in 0..topo.node(a).radios {
        for rb in 0..topo.node(b).radios {
            set.push(RadioPairLink { node_a: a, radio_a: ra, node_b: b, radio_b: rb });
        }
    }
    set
}

/// The assembled conflict graph.
#[derive(Debug, Clone)]
pub struct Mcg {
    /// Vertices in canonical sorted order.
    vertices: Vec<RadioPairLink>,
    /// Sorted adjacency lists over vertex indices.
    adj: Vec<Vec<u32>>,
    /// Hop level per vertex: min of the two endpoint hop counts.
    hop: Vec<u32>,
    /// Vertex indices per link, keyed by canonical node pair.
    groups: BTreeMap<(NodeId, NodeId), Vec<u32>>,
}

/// Builds the conflict graph of `topo` under sensing range `sense_range_m`.
pub fn build_mcg(topo: &Topology, sense_range_m: f64) -> Mcg {
    assert!(sense_range_m > 0.0, "sense_range_m must be positive");
    let mut vertices = Vec::new();
    let mut hop = Vec::new();
    let mut groups: BTreeMap<(NodeId, NodeId), Vec<u32>> = BTreeMap::new();
    for &(a, b) in topo.links() {
        let level = topo.hop(a).min(topo.hop(b));
        for v in radio_link_set(topo, a, b) {
            let idx = vertices.len() as u32;
            vertices.push(v);
            hop.push(level);
            groups.entry((a, b)).or_default().push(idx);
        }
    }

    // Link-level conflict is identical for every vertex pair drawn from the
    // same two links, so decide it once per link pair.
    let links: Vec<(NodeId, NodeId)> = topo.links().to_vec();
    let link_of: BTreeMap<(NodeId, NodeId), usize> =
        links.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let n_links = links.len();
    let mut link_conflicts = vec![false; n_links * n_links];
    for i in 0..n_links {
        for j in (i + 1)..n_links {
            let (a1, b1) = links[i];
            let (a2, b2) = links[j];
            let shares_node = a1 == a2 || a1 == b2 || b1 == a2 || b1 == b2;
            let in_sense = || {
                [a1, b1].iter().any(|&u| {
                    [a2, b2].iter().any(|&v| {
                        distance(topo.node(u).pos, topo.node(v).pos) <= sense_range_m
                    })
                })
            };
            if shares_node || in_sense() {
                link_conflicts[i * n_links + j] = true;
                link_conflicts[j * n_links + i] = true;
            }
        }
    }

    let n = vertices.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        let li = link_of[&vertices[i].link()];
        for j in (i + 1)..n {
            let lj = link_of[&vertices[j].link()];
            // Same link: the group is fully connected. Different links:
            // consult the precomputed link conflict.
            if li == lj || link_conflicts[li * n_links + lj] {
                adj[i].push(j as u32);
                adj[j].push(i as u32);
            }
        }
    }

    Mcg { vertices, adj, hop, groups }
}

impl Mcg {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex(&self, idx: u32) -> &RadioPairLink {
        &self.vertices[idx as usize]
    }

    pub fn vertices(&self) -> &[RadioPairLink] {
        &self.vertices
    }

    pub fn neighbors(&self, idx: u32) -> &[u32] {
        &self.adj[idx as usize]
    }

    /// Hop level of a vertex (min of its endpoints' hop counts).
    pub fn hop(&self, idx: u32) -> u32 {
        self.hop[idx as usize]
    }

    /// Vertex indices of one link's radio-pair group.
    pub fn group(&self, link: (NodeId, NodeId)) -> &[u32] {
        self.groups.get(&link).map_or(&[], |v| v.as_slice())
    }

    /// All links with their vertex groups, in canonical order.
    pub fn groups(&self) -> impl Iterator<Item = ((NodeId, NodeId), &[u32])> {
        self.groups.iter().map(|(&l, v)| (l, v.as_slice()))
    }

    pub fn vertices_touching(&self, node: NodeId) -> impl Iterator<Item = u32> + '_ {
        self.vertices
            .iter()
            .enumerate()
            .filter(move |(_, v)| v.touches(node))
            .map(|(i, _)| i as u32)
    }
}

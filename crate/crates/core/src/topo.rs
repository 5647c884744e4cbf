//! Network topology: node placement, link derivation and gateway hop counts.
//!
//! A topology is a set of positioned nodes, each carrying one or more radios,
//! with at least one gateway. Links are purely geometric: two nodes are linked
//! when their distance is at most the decode range. Every node gets a hop
//! count — the minimum number of links to reach a gateway — which later
//! drives the coloring priority of the static stage.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use thiserror::Error;

use crate::phys::{distance, NodeId, Pos};

/// One wireless node.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub pos: Pos,
    /// Number of half-duplex radios mounted on the node (≥ 1).
    pub radios: u8,
    /// Gateways are the traffic sinks towards the wired network and the
    /// roots of the hop-count breadth-first search.
    pub gateway: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("node ids must be dense and ordered: expected {expected}, found {found}")]
    BadNodeId { expected: NodeId, found: NodeId },
    #[error("node {0} has no radios")]
    NoRadios(NodeId),
    #[error("topology has no gateway")]
    NoGateway,
    #[error("node {0} is not connected to any gateway")]
    Disconnected(NodeId),
    #[error("nodes {0} and {1} occupy the same position")]
    CoincidentNodes(NodeId, NodeId),
}

/// An immutable, validated topology.
#[derive(Debug, Clone)]
pub struct Topology {
    nodes: Vec<Node>,
    /// Canonical (low id, high id) pairs, sorted.
    links: Vec<(NodeId, NodeId)>,
    /// Adjacency lists, sorted by neighbor id.
    neighbors: Vec<Vec<NodeId>>,
    /// Min hops to a gateway, per node. Gateways are at hop 0.
    hops: Vec<u32>,
}

impl Topology {
    /// Derives links (distance ≤ `tx_range_m`) and gateway hop counts.
    ///
    /// Fails if node ids are not `0..n` in order, a node has no radios or no
    /// gateway exists, or any node cannot reach a gateway over the derived
    /// links.
    pub fn build(nodes: Vec<Node>, tx_range_m: f64) -> Result<Topology, TopologyError> {
        assert!(tx_range_m > 0.0, "tx_range_m must be positive");
        for (i, node) in nodes.iter().enumerate() {
            if node.id != i as NodeId {
                return Err(TopologyError::BadNodeId { expected: i as NodeId, found: node.id });
            }
            if node.radios == 0 {
                return Err(TopologyError::NoRadios(node.id));
            }
        }
        if !nodes.iter().any(|n| n.gateway) {
            return Err(TopologyError::NoGateway);
        }

        let n = nodes.len();
        let mut links = Vec::new();
        let mut neighbors = vec![Vec::new(); n];
        for a in 0..n {
            for b in (a + 1)..n {
                // The propagation model has a pole at zero distance; refuse
                // co-located nodes up front instead of panicking mid-run.
                if distance(nodes[a].pos, nodes[b].pos) <= 0.0 {
                    return Err(TopologyError::CoincidentNodes(a as NodeId, b as NodeId));
                }
                if distance(nodes[a].pos, nodes[b].pos) <= tx_range_m {
                    links.push((a as NodeId, b as NodeId));
                    neighbors[a].push(b as NodeId);
                    neighbors[b].push(a as NodeId);
                }
            }
        }

        // Multi-source BFS from all gateways.
        let mut hops = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        for node in &nodes {
            if node.gateway {
                hops[node.id as usize] = 0;
                queue.push_back(node.id);
            }
        }
        while let Some(cur) = queue.pop_front() {
            let next_hop = hops[cur as usize] + 1;
            for &nb in &neighbors[cur as usize] {
                if hops[nb as usize] == u32::MAX {
                    hops[nb as usize] = next_hop;
                    queue.push_back(nb);
                }
            }
        }
        if let Some(stranded) = hops.iter().position(|&h| h == u32::MAX) {
            return Err(TopologyError::Disconnected(stranded as NodeId));
        }

        Ok(Topology { nodes, links, neighbors, hops })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn positions(&self) -> Vec<Pos> {
        self.nodes.iter().map(|n| n.pos).collect()
    }

    /// Canonical (low, high) link list, sorted.
    pub fn links(&self) -> &[(NodeId, NodeId)] {
        &self.links
    }

    pub fn are_linked(&self, a: NodeId, b: NodeId) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.links.binary_search(&key).is_ok()
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.neighbors[id as usize]
    }

    /// Minimum number of links between `id` and the nearest gateway.
    pub fn hop(&self, id: NodeId) -> u32 {
        self.hops[id as usize]
    }

    pub fn gateways(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| n.gateway).map(|n| n.id)
    }

    /// Shortest route (list of node ids, inclusive of both ends) from `src`
    /// to `dst`, breaking ties towards lower-id predecessors. `None` only if
    /// unreachable, which `build` already excludes for connected graphs.
    pub fn route(&self, src: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
        if src == dst {
            return Some(vec![src]);
        }
        let n = self.nodes.len();
        let mut pred: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut seen = vec![false; n];
        seen[src as usize] = true;
        let mut queue = VecDeque::from([src]);
        while let Some(cur) = queue.pop_front() {
            for &nb in &self.neighbors[cur as usize] {
                if !seen[nb as usize] {
                    seen[nb as usize] = true;
                    pred.insert(nb, cur);
                    if nb == dst {
                        let mut path = vec![dst];
                        let mut at = dst;
                        while let Some(&p) = pred.get(&at) {
                            path.push(p);
                            at = p;
                        }
                        path.reverse();
                        return Some(path);
                    }
                    queue.push_back(nb);
                }
            }
        }
        None
    }
}

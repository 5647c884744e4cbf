//! Baseline static assignment with a single common control channel.
//!
//! Channel 1 is reserved for control traffic on radio 0 of every node; data
//! links are colored onto the remaining channels `2..=k` by a plain BFS sweep
//! of the conflict graph. Visiting a vertex assigns it a random
//! non-conflicting data channel (or a blind random data channel when every
//! one conflicts) and then removes every vertex sharing *any* radio with it.
//! That aggressive removal orphans links whose radio pairs were all consumed
//! by earlier colorings; orphans receive a blind random data channel with no
//! radio binding and their interference is left to chance — which is exactly
//! the weakness this baseline exists to exhibit.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ccaa::{ChannelAssignment, ColorKind, LinkColor};
use crate::mcg::{Mcg, RadioPairLink};
use crate::phys::ChannelId;
use crate::topo::Topology;

/// Channel id reserved for the common control channel.
pub const CONTROL_CHANNEL: ChannelId = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RamaError {
    #[error("baseline coloring needs at least 2 channels (control + data), got {0}")]
    TooFewChannels(u16),
}

/// Sort key shared with the primary coloring: node pair, then radio indices.
fn vertex_sort_key(v: &RadioPairLink) -> (u32, u32, u8, u8) {
    (v.node_a, v.node_b, v.radio_a, v.radio_b)
}

/// Colors the conflict graph for the single-control-channel baseline.
///
/// Channel 1 carries no data links; every link lands on `2..=channels`.
pub fn rama_color(
    topo: &Topology,
    mcg: &Mcg,
    channels: u16,
    seed: u64,
) -> Result<ChannelAssignment, RamaError> {
    if channels < 2 {
        return Err(RamaError::TooFewChannels(channels));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = ChannelAssignment::new(channels);
    let n = mcg.vertex_count();
    let mut removed = vec![false; n];
    let mut vertex_color: Vec<Option<ChannelId>> = vec![None; n];
    let mut order = 0u32;

    let data_channels: Vec<ChannelId> = (2..=channels).collect();

    let mut levels: Vec<u32> = (0..n).map(|i| mcg.hop(i as u32)).collect();
    levels.sort_unstable();
    levels.dedup();

    for level in levels {
        let mut queue: Vec<u32> = (0..n as u32)
            .filter(|&i| mcg.hop(i) == level && !removed[i as usize])
            .collect();
        queue.sort_by_key(|&i| vertex_sort_key(mcg.vertex(i)));

        for v in queue {
            if removed[v as usize] {
                continue;
            }
            let conflicting: BTreeSet<ChannelId> = mcg
                .neighbors(v)
                .iter()
                .filter_map(|&nb| vertex_color[nb as usize])
                .collect();
            let free: Vec<ChannelId> = data_channels
                .iter()
                .copied()
                .filter(|c| !conflicting.contains(c))
                .collect();
            let (channel, kind) = if free.is_empty() {
                (data_channels[rng.gen_range(0..data_channels.len())], ColorKind::Shared)
            } else {
                (free[rng.gen_range(0..free.len())], ColorKind::FreeChoice)
            };
            let vertex = *mcg.vertex(v);
            vertex_color[v as usize] = Some(channel);
            assignment.insert_colored(
                LinkColor { vertex, channel, kind, order, hop: mcg.hop(v) },
                true,
            );
            order += 1;

            // Remove every vertex sharing any radio with the colored one,
            // plus the rest of the colored link's own group (the link has
            // its channel; alternative radio pairs are moot).
            for w in 0..n as u32 {
                if removed[w as usize] {
                    continue;
                }
                let other = mcg.vertex(w);
                if shares_radio(&vertex, other)
                    || (other.node_a, other.node_b) == (vertex.node_a, vertex.node_b)
                {
                    removed[w as usize] = true;
                }
            }
        }
    }

    // Orphaned links: all radio pairs were removed before the link got a
    // color. They receive a blind random data channel and no radio binding.
    for &link in topo.links() {
        if assignment.channel_of(link.0, link.1).is_some() {
            continue;
        }
        let group = mcg.group(link);
        let vertex = *mcg.vertex(group[0]);
        let channel = data_channels[rng.gen_range(0..data_channels.len())];
        assignment.insert_colored(
            LinkColor { vertex, channel, kind: ColorKind::Fallback, order, hop: mcg.hop(group[0]) },
            false,
        );
        order += 1;
    }

    Ok(assignment)
}

/// Two vertices share a radio when any (node, radio) slot coincides.
fn shares_radio(a: &RadioPairLink, b: &RadioPairLink) -> bool {
    let slots_a = [(a.node_a, a.radio_a), (a.node_b, a.radio_b)];
    let slots_b = [(b.node_a, b.radio_a), (b.node_b, b.radio_b)];
    slots_a.iter().any(|s| slots_b.contains(s))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

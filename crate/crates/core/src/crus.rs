//! Channel ranking for the negotiation handshake.
//!
//! Before requesting a data channel, a sender ranks every channel by how
//! attractive it is for a new transfer, based on what the node has locally
//! overheard (its interference ledger):
//!
//! 1. channels with no known reservation come first, in random order — the
//!    randomness spreads simultaneous negotiations across idle channels
//!    instead of piling them onto the lowest-numbered one;
//! 2. busy channels follow, ordered by remaining interference margin (the
//!    minimum headroom among that channel's known receivers) descending —
//!    the channel that can absorb the most extra interference first;
//! 3. margin ties break toward the channel with fewer reservations, then
//!    toward the lower channel id so the order is total and reproducible.
//!
//! The receiver applies its own ranking to the intersection of both sides'
//! usable sets; [`pick_common`] implements that selection.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::phys::{ChannelId, InterferenceLedger, NodeId};

/// Ranks channels `1..=channels` for a new negotiation as seen from one
/// node's ledger. Idle channels first in random order, then busy channels by
/// descending margin, ascending load, ascending id.
pub fn ranked_channels(
    ledger: &InterferenceLedger,
    channels: u16,
    rng: &mut impl Rng,
) -> Vec<ChannelId> {
    let mut idle: Vec<ChannelId> = Vec::new();
    let mut busy: Vec<(ChannelId, f64, usize)> = Vec::new();
    for ch in 1..=channels {
        match ledger.min_cmaip(ch) {
            None => idle.push(ch),
            Some(margin) => busy.push((ch, margin, ledger.load(ch))),
        }
    }
    idle.shuffle(rng);
    busy.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("margin is never NaN")
            .then(a.2.cmp(&b.2))
            .then(a.0.cmp(&b.0))
    });
    idle.into_iter().chain(busy.into_iter().map(|(ch, _, _)| ch)).collect()
}

/// Restricts a ranking to channels the node could actually use for the link
/// `tx -> rx`: the new transmission must keep every known co-channel
/// reservation above its interference margin and itself clear the capture
/// threshold.
pub fn usable_ranked(
    ledger: &InterferenceLedger,
    ranked: &[ChannelId],
    tx: NodeId,
    rx: NodeId,
) -> Vec<ChannelId> {
    ranked.iter().copied().filter(|&ch| ledger.admissible(ch, tx, rx)).collect()
}

/// The receiver's choice: the first channel in the receiver's own ranking
/// that the sender also offered. `None` when the sets do not intersect.
pub fn pick_common(
    receiver_ranked: &[ChannelId],
    sender_offered: &BTreeSet<ChannelId>,
) -> Option<ChannelId> {
    receiver_ranked.iter().copied().find(|ch| sender_offered.contains(ch))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phys::PhysParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Powers of sixteen everywhere: P(d) = 16 / d^4, threshold 16, no noise.
    fn params() -> PhysParams {
        PhysParams {
            tx_power_w: 16.0,
            gain_tx: 1.0,
            gain_rx: 1.0,
            height_tx_m: 1.0,
            height_rx_m: 1.0,
            sinr_threshold: 16.0,
            noise_w: 0.0,
            tx_range_m: 100.0,
            sense_range_m: 1000.0,
        }
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn idle_channels_precede_busy_ones() {
        let positions = vec![(0.0, 0.0), (0.0, 1.0)];
        let mut ledger = InterferenceLedger::new(positions, params());
        ledger.schedule(2, 0, 1).unwrap();
        for seed in 0..20 {
            let order = ranked_channels(&ledger, 3, &mut rng(seed));
            assert_eq!(order.len(), 3);
            assert_eq!(order[2], 2, "busy channel must rank last (seed {seed})");
            assert!(order[..2].contains(&1) && order[..2].contains(&3));
        }
    }

    #[test]
    fn idle_order_is_random_but_seed_deterministic() {
        let ledger = InterferenceLedger::new(vec![(0.0, 0.0), (0.0, 1.0)], params());
        let a = ranked_channels(&ledger, 8, &mut rng(1));
        let b = ranked_channels(&ledger, 8, &mut rng(1));
        assert_eq!(a, b, "same seed, same order");
        let distinct = (0..32)
            .map(|s| ranked_channels(&ledger, 8, &mut rng(s)))
            .collect::<BTreeSet<_>>();
        assert!(distinct.len() > 1, "idle order should vary across seeds");
    }

    #[test]
    fn busy_channels_rank_by_remaining_margin() {
        // Channel 3 hosts a short link (margin 1.0); channel 2 hosts a long
        // one (margin 1/16). The roomier channel 3 must come first.
        let positions = vec![(0.0, 0.0), (0.0, 1.0), (100.0, 0.0), (100.0, 2.0)];
        let mut ledger = InterferenceLedger::new(positions, params());
        ledger.schedule(3, 0, 1).unwrap();
        ledger.schedule(2, 2, 3).unwrap();
        let order = ranked_channels(&ledger, 3, &mut rng(0));
        assert_eq!(order, vec![1, 3, 2]);
    }

    #[test]
    fn margin_ties_break_toward_lighter_load() {
        // Both channels' minimum margin comes from an identical short link,
        // but channel 2 carries an extra reservation far outside sensing
        // range (adds load, not interference).
        let positions = vec![
            (0.0, 0.0),
            (0.0, 1.0),
            (100.0, 0.0),
            (100.0, 1.0),
            (1e6, 0.0),
            (1e6, 1.0),
        ];
        let mut ledger = InterferenceLedger::new(positions, params());
        ledger.schedule(3, 0, 1).unwrap();
        ledger.schedule(2, 2, 3).unwrap();
        ledger.schedule(2, 4, 5).unwrap();
        let order = ranked_channels(&ledger, 3, &mut rng(0));
        assert_eq!(order, vec![1, 3, 2]);
    }

    #[test]
    fn usable_filter_drops_inadmissible_channels() {
        // Channel 2's existing link leaves headroom exactly equal to the
        // interference a co-located newcomer would inject, so 2 is unusable;
        // channel 1 is idle and fine.
        let positions = vec![(0.0, 0.0), (0.0, 1.0), (2.0, 0.0), (3.0, 0.0)];
        let mut ledger = InterferenceLedger::new(positions, params());
        ledger.schedule(2, 1, 0).unwrap();
        let ranked = ranked_channels(&ledger, 2, &mut rng(0));
        let usable = usable_ranked(&ledger, &ranked, 2, 3);
        assert_eq!(usable, vec![1]);
    }

    #[test]
    fn receiver_order_decides_the_common_pick() {
        let offered: BTreeSet<ChannelId> = [2, 4].into_iter().collect();
        assert_eq!(pick_common(&[3, 4, 2, 1], &offered), Some(4));
        assert_eq!(pick_common(&[1, 3], &offered), None);
        assert_eq!(pick_common(&[], &offered), None);
    }
}

//! Simulation time base and the deterministic event queue.
//!
//! Time is an integer count of nanoseconds from the start of the run, so
//! event arithmetic is exact and runs are reproducible bit for bit. The queue
//! orders events by (time, class, sequence): the class ranks fix the relative
//! order of simultaneous events of different kinds, and the sequence number —
//! assigned at push — makes the order total and insertion-deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Nanoseconds since simulation start.
pub type SimTime = u64;

pub const NS_PER_US: SimTime = 1_000;
pub const NS_PER_MS: SimTime = 1_000_000;
pub const NS_PER_SEC: SimTime = 1_000_000_000;

/// Converts seconds (config units) to the integer time base, rounding to the
/// nearest nanosecond.
pub fn secs(s: f64) -> SimTime {
    debug_assert!(s >= 0.0 && s.is_finite(), "non-finite or negative time {s}");
    (s * 1e9).round() as SimTime
}

/// Converts the integer time base back to seconds for reporting.
pub fn to_secs(t: SimTime) -> f64 {
    t as f64 / 1e9
}

/// Airtime of `bytes` at `rate_bps`, rounded to the nearest nanosecond.
pub fn airtime(bytes: u64, rate_bps: u64) -> SimTime {
    debug_assert!(rate_bps > 0);
    let bits = bytes as u128 * 8 * NS_PER_SEC as u128;
    ((bits + rate_bps as u128 / 2) / rate_bps as u128) as SimTime
}

/// Tie-break rank for simultaneous events. Lower runs first. Frame and packet
/// completions precede timers so that a timer firing at the exact end of a
/// transmission observes an idle medium; arrivals precede interval markers so
/// a packet generated exactly at a beacon is eligible in that interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventClass {
    MsgEnd = 0,
    PacketEnd = 1,
    Timer = 2,
    Arrival = 3,
    Pilot = 4,
    Beacon = 5,
    Wake = 6,
}

#[derive(Debug)]
struct Queued<E> {
    time: SimTime,
    class: EventClass,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Queued<E> {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl<E> Eq for Queued<E> {}
impl<E> PartialOrd for Queued<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<E> Ord for Queued<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so the smallest key pops first.
        (other.time, other.class, other.seq).cmp(&(self.time, self.class, self.seq))
    }
}

/// Deterministic priority queue of simulation events.
#[derive(Debug)]
pub struct EventQueue<E> {
    heap: BinaryHeap<Queued<E>>,
    next_seq: u64,
    now: SimTime,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        EventQueue { heap: BinaryHeap::new(), next_seq: 0, now: 0 }
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current simulation time: the timestamp of the last popped event.
    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Schedules `event` at absolute time `time` (≥ now).
    pub fn push(&mut self, time: SimTime, class: EventClass, event: E) {
        debug_assert!(time >= self.now, "event scheduled in the past: {time} < {}", self.now);
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Queued { time, class, seq, event });
    }

    /// Pops the next event, advancing the clock.
    pub fn pop(&mut self) -> Option<(SimTime, E)> {
        self.heap.pop().map(|q| {
            debug_assert!(q.time >= self.now);
            self.now = q.time;
            (q.time, q.event)
        })
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seconds_round_trip() {
        assert_eq!(secs(0.1), 100 * NS_PER_MS);
        assert_eq!(secs(1.0), NS_PER_SEC);
        assert_eq!(to_secs(1_500_000), 0.0015);
    }

    #[test]
    fn airtime_is_exact_for_clean_rates() {
        // 34 bytes at 1 Mbps = 272 us.
        assert_eq!(airtime(34, 1_000_000), 272 * NS_PER_US);
        // 244 bytes at 1 Mbps = 1.952 ms.
        assert_eq!(airtime(244, 1_000_000), 1_952 * NS_PER_US);
        assert_eq!(airtime(0, 1_000_000), 0);
    }

    #[test]
    fn pop_orders_by_time_then_class_then_seq() {
        let mut q: EventQueue<&str> = EventQueue::new();
        q.push(200, EventClass::Timer, "late-timer");
        q.push(100, EventClass::Beacon, "beacon");
        q.push(100, EventClass::MsgEnd, "msg-end");
        q.push(100, EventClass::Timer, "timer-a");
        q.push(100, EventClass::Timer, "timer-b");
        let order: Vec<&str> = std::iter::from_fn(|| q.pop().map(|(_, e)| e)).collect();
        // Same time: MsgEnd < Timer < Beacon; equal keys keep push order.
        assert_eq!(order, vec!["msg-end", "timer-a", "timer-b", "beacon", "late-timer"]);
    }

    #[test]
    fn clock_tracks_pops() {
        let mut q: EventQueue<u32> = EventQueue::new();
        q.push(50, EventClass::Arrival, 1);
        q.push(70, EventClass::Arrival, 2);
        assert_eq!(q.now(), 0);
        q.pop();
        assert_eq!(q.now(), 50);
        q.pop();
        assert_eq!(q.now(), 70);
    }
}

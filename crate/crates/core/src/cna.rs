//! Adaptive sizing of the per-interval control phase.
//!
//! Each beacon interval opens with a contention/negotiation window (the
//! control phase) followed by the data-transfer phase. A fixed window wastes
//! airtime when few pairs negotiate and starves negotiation when many do.
//! The adaptive algorithm resizes the window once per adjustment epoch from
//! the *accumulated idle time* observed on each channel during the previous
//! control phase:
//!
//! * if the least-idle channel was idle for no more than `threshold`, the
//!   window is congested — grow it by `step` (clamped to `max`);
//! * if even the least-idle channel was idle for more than the current
//!   window plus one step, the window is oversized — shrink it by `step`
//!   (clamped to `min`);
//! * otherwise leave it unchanged.
//!
//! The shrink guard is kept in its historical form even though idle time can
//! never exceed the window itself, which makes the branch unreachable: the
//! controller then only ever grows toward `max`. Enabling
//! [`CnaParams::amended_guard`] replaces the guard with `idle > step +
//! threshold`, which restores two-sided adaptation; both forms are exercised
//! by tests.
//!
//! All durations are in seconds.

use thiserror::Error;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Controller parameters (seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnaParams {
    /// Smallest allowed control-phase length.
    pub min_s: f64,
    /// Largest allowed control-phase length.
    pub max_s: f64,
    /// Adjustment step.
    pub step_s: f64,
    /// Idle-time threshold below which the window is considered congested.
    pub threshold_s: f64,
    /// Use the corrected shrink condition (`idle > step + threshold`) instead
    /// of the historical `idle > current + step`.
    pub amended_guard: bool,
}

impl Default for CnaParams {
    fn default() -> Self {
        CnaParams {
            min_s: 0.010,
            max_s: 0.050,
            step_s: 0.005,
            threshold_s: 0.002,
            amended_guard: false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CnaError {
    #[error("control-phase bounds are invalid: min {min} .. max {max}")]
    BadBounds { min: f64, max: f64 },
    #[error("control-phase step must be positive, got {0}")]
    BadStep(f64),
}

impl CnaParams {
    pub fn validate(&self) -> Result<(), CnaError> {
        if !(self.min_s > 0.0 && self.max_s >= self.min_s) {
            return Err(CnaError::BadBounds { min: self.min_s, max: self.max_s });
        }
        if self.step_s <= 0.0 {
            return Err(CnaError::BadStep(self.step_s));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Controller
// ---------------------------------------------------------------------------

/// One adjustment of the control-phase length.
///
/// `idle_by_channel` holds the accumulated idle time of each channel over the
/// previous control phase. The decision is driven by the busiest channel
/// (minimum idle time): growth helps the channel that ran out of room, and a
/// window that is oversized even for the busiest channel is safe to shrink.
pub fn adjust(current_s: f64, idle_by_channel: &[f64], params: &CnaParams) -> f64 {
    debug_assert!(params.validate().is_ok());
    let Some(min_idle) = idle_by_channel.iter().copied().reduce(f64::min) else {
        return current_s;
    };
    let shrink = if params.amended_guard {
        min_idle > params.step_s + params.threshold_s
    } else {
        min_idle > current_s + params.step_s
    };
    if min_idle <= params.threshold_s {
        (current_s + params.step_s).min(params.max_s)
    } else if shrink {
        (current_s - params.step_s).max(params.min_s)
    } else {
        current_s
    }
}

/// Tracks the control-phase length across intervals and accumulates
/// per-channel idle time between adjustments.
#[derive(Debug, Clone)]
pub struct CnaController {
    params: CnaParams,
    current_s: f64,
    /// Idle seconds accumulated per channel since the last adjustment,
    /// indexed by channel − 1.
    idle_s: Vec<f64>,
    /// Control phases observed since the last adjustment.
    phases_seen: u32,
    /// Adjust once every this many control phases.
    epoch_len: u32,
}

impl CnaController {
    /// A controller that starts at `initial_s` and manages `channels`
    /// channels, adjusting every `epoch_len` intervals.
    pub fn new(initial_s: f64, channels: u16, epoch_len: u32, params: CnaParams) -> Self {
        debug_assert!(params.validate().is_ok());
        debug_assert!(epoch_len > 0);
        let current_s = initial_s.clamp(params.min_s, params.max_s);
        CnaController {
            params,
            current_s,
            idle_s: vec![0.0; channels as usize],
            phases_seen: 0,
            epoch_len: epoch_len.max(1),
        }
    }

    /// Current control-phase length in seconds.
    pub fn current_s(&self) -> f64 {
        self.current_s
    }

    /// Adds observed idle time for one channel (1-based id).
    pub fn record_idle(&mut self, channel: u16, idle_s: f64) {
        debug_assert!(channel >= 1 && (channel as usize) <= self.idle_s.len());
        debug_assert!(idle_s >= -1e-12 && idle_s <= self.current_s + 1e-9);
        self.idle_s[channel as usize - 1] += idle_s.max(0.0);
    }

    /// Marks the end of a control phase; at epoch boundaries the window is
    /// resized from the accumulated idle figures. Returns the length to use
    /// for the next control phase.
    pub fn end_of_phase(&mut self) -> f64 {
        self.phases_seen += 1;
        if self.phases_seen >= self.epoch_len {
            // Average the idle time per phase so multi-interval epochs
            // compare against the same scale as single-interval ones.
            let scale = 1.0 / self.phases_seen as f64;
            let averaged: Vec<f64> = self.idle_s.iter().map(|v| v * scale).collect();
            self.current_s = adjust(self.current_s, &averaged, &self.params);
            self.idle_s.iter_mut().for_each(|v| *v = 0.0);
            self.phases_seen = 0;
        }
        self.current_s
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

//! Deterministic discrete-event simulator for a two-stage multi-radio
//! multi-channel mesh MAC.
//!
//! The library models a wireless mesh backbone in which every node carries one
//! or more half-duplex radios and the network coordinates medium access in two
//! stages:
//!
//! 1. **Static stage** — links (radio pairs) are vertices of a multi-radio
//!    conflict graph ([`mcg`]); a breadth-first, load-balancing coloring
//!    ([`ccaa`]) binds radios to control channels so that every link owns a
//!    conflict-aware default channel without any dedicated common control
//!    channel.
//! 2. **Dynamic stage** — time is divided into beacon intervals. During the
//!    negotiation window nodes run a three-way REQ/ACK/RES handshake driven by
//!    per-node channel/radio usage structures ([`crus`]); the window length
//!    adapts to contention ([`cna`]); reserved pairs then stream data until the
//!    next beacon, and idle radios doze under the power-saving rules ([`psm`]).
//!
//! Physical-layer admission (two-ray propagation, SINR, maximum allowed
//! interference power) lives in [`phys`]; the event engine, traffic and
//! baseline protocols in [`sim`]; scoring in [`metrics`].
//!
//! Everything is deterministic: a master seed is split into named streams, and
//! re-running any scenario with the same seed reproduces the event trace
//! byte for byte.

pub mod ccaa;
pub mod cna;
pub mod config;
pub mod crus;
pub mod mcg;
pub mod metrics;
pub mod phys;
pub mod psm;
pub mod rama;
pub mod sim;
pub mod topo;

pub use config::{ScenarioConfig, ScenarioError};
pub use metrics::MetricsRecord;
pub use phys::PhysParams;
pub use topo::Topology;

//! Discrete-event simulation: the event queue, trace plumbing, scenario
//! generators, the shared medium, and the protocol engines.

pub mod contention;
pub mod csma;
pub mod engine;
pub mod event;
pub mod medium;
pub mod runner;
pub mod topogen;
pub mod trace;

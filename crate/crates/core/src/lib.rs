//! Core of the gridrisk benchmark: the bus/branch grid model, Newton–Raphson
//! AC power flow, load/generation profile synthesis, and the scenario
//! simulator that turns event schedules into labelled measurement streams.

pub mod grid;
pub mod powerflow;
pub mod rng;
pub mod scenario;
pub mod synth;

#[cfg(test)]
pub(crate) mod testutil;

pub use grid::GridCase;
pub use rng::SimRng;

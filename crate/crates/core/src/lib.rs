//! Simulation and verification of multiparty quantum remote control.
//!
//! `N` controllers each hold one qubit of an `(N+1)`-qubit GHZ state; Bob
//! holds the last one plus his target qubit. Using only that entanglement,
//! local measurements and a chain of classical parity bits, the controllers
//! apply rotations from `{U0(θ), U1(θ)}` to Bob's target, and Bob undoes the
//! measurement byproduct with a single Pauli.
//!
//! * [`statevector`]: dense simulator with forced or seeded measurements.
//! * [`protocol`]: the parties, their messages and the scheduler.
//! * [`correction`]: Bob's correction rules behind a named registry.
//! * [`oracle`]: direct matrix-product ground truth and branch enumeration.
//! * [`files`] and [`cli`]: JSON configs, transcripts and the `mqrc` tool.

pub mod cli;
pub mod correction;
pub mod error;
pub mod files;
pub mod oracle;
pub mod protocol;
pub mod statevector;

pub use error::{Error, Result};

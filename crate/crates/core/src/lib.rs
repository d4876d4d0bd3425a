//! Blind calibration of noisy quantum channels.
//!
//! A sender tunes a receiver's decoder over a noisy channel without revealing
//! which calibration states it transmits or how the cost is computed: states
//! are drawn uniformly at random from a private set, the receiver measures in
//! random Pauli bases and reports raw outcomes, and only a scalar cost comes
//! back.
//!
//! The crate is organised bottom-up:
//!
//! - [`qcore`]: density matrices, unitaries, Pauli algebra, fidelity, Bell measurement
//! - [`channels`]: length-parameterized rotational and bit/phase-flip fiber noise
//! - [`tomography`]: Pauli-record accumulation and linear-inversion reconstruction
//! - [`protocol`]: sender/receiver state machines, costs, optimizers, wire codec
//! - [`scenarios`]: random states, BB84, entanglement swapping, GHZ/W, blinding check
//! - [`harness`]: run configuration, seeded execution and CSV output
//!
//! See the `examples/` directory for one runnable program per capability.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod error;
pub mod harness;
pub mod protocol;
pub mod qcore;
pub mod scenarios;
pub mod seed;
pub mod tomography;

pub use error::{CodecError, Error, Result};

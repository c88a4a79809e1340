//! Numerical engine for additive free Lévy processes and their moments.
//!
//! The crate is organized bottom-up:
//!
//! * [`partitions`] enumerates set, non-crossing and interval partitions.
//! * [`moments`] holds moment/cumulant sequences, the classical, free and
//!   boolean transforms, additive convolutions and the Bercovici–Pata map.
//! * [`fock`] is an exact model of the truncated free Fock space with
//!   creation, annihilation and conservation operators. It is the brute-force
//!   oracle for the other modules.
//! * [`mixed`] evaluates joint moments of tensor independent or free families
//!   from their marginals.
//! * [`levy`] realizes additive free Lévy processes from generator tuples and
//!   performs the Gaussian / compound-Poisson analysis.
//! * [`affine`] implements increments of Lévy processes on the dual affine
//!   group and a discretized free Azéma martingale.
//! * [`cli`] is the batch job runner behind the `ncp` binary.

pub mod affine;
pub mod cli;
mod error;
pub mod fock;
pub mod levy;
pub mod mixed;
pub mod moments;
pub mod partitions;

pub use error::{Error, Result};

/// Complex scalar used by every Fock space computation.
pub type C64 = num_complex::Complex64;

/// Library version reported in CLI result documents.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

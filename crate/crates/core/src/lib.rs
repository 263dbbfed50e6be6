//! Monte Carlo simulator and statistics toolkit for entanglement-swapping
//! Bell tests with polarization-entangled photon pairs.
//!
//! * [`qstate`]: exact state algebra for up to four polarization qubits.
//! * [`photonics`]: pair sources, detectors, the beam-splitter Bell-state
//!   analyzer and pump-phase drift.
//! * [`pipeline`]: event-log generation, fourfold post-selection, delayed
//!   choice and the space-like separation audit.
//! * [`stats`]: correlation and CHSH estimators, fidelity, the local bound
//!   and Allan variance.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod photonics;
pub mod pipeline;
pub mod qstate;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

//! Simulation and entanglement estimation for generalized Werner states
//! probed by induced-coherence (frustrated two-photon) interferometry.
//!
//! Layers, bottom up:
//! - [`state`]: the two-qubit state, partial transpose, PPT spectrum, concurrence.
//! - [`engine`]: exact interferometer forward model on the joint two-source state.
//! - [`analytic`]: closed-form fringe offsets, amplitudes and visibilities.
//! - [`config`]: the key = value run configuration format.
//! - [`estimation`]: fringe fits, inversion formulas, transmission recovery and
//!   the end-to-end pipeline from scans to an entanglement verdict.

pub mod analytic;
pub mod config;
pub mod engine;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod state;

pub use error::{Error, Result};

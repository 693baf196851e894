//! Simulation and analysis toolkit for a post-selected linear-optics
//! C-Phase gate on polarization qubits.
//!
//! The gate applies a π phase to the VV component of a two-photon state by
//! overlapping the photons at a polarization-dependent beam splitter and
//! post-selecting on a coincidence. This crate models the transformation
//! for arbitrary component imperfections and photon distinguishability,
//! simulates the photon-counting experiment, reconstructs states and the
//! full process (χ) matrix by linear inversion, and fits the
//! partial-interference model to reconstructed data.
//!
//! A narrative guide with runnable examples lives in the [`guide`] module
//! (rendered from the `book/` sources of the repository).

pub mod counts;
pub mod error;
pub mod fit;
pub mod gate;
pub mod guide;
pub mod pauli;
pub mod qpt;
pub mod serial;
pub mod states;
pub mod tomo;

pub use error::{Error, Result};
pub use states::C64;

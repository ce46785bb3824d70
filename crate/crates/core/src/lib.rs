//! Desk-scale simulator for the decoherence of a photonic cat state coupled to
//! an engineered reservoir of two-level oscillators.
//!
//! The crate covers the whole numerical pipeline:
//!
//! * [`hilbert`]: truncated Fock-space states, operators, propagators and
//!   partial traces.
//! * [`catprep`]: photon-by-photon synthesis of the even phase cat and its
//!   conversion into an amplitude cat.
//! * [`floquet`]: sideband couplings and Stark shifts produced by sinusoidal
//!   qubit-frequency modulation, plus the full time-dependent model.
//! * [`dynamics`]: the N-qubit reservoir Hamiltonian, exact and analytic
//!   branch-state evolution.
//! * [`tomography`]: photon-number readout through ancilla Rabi signals and
//!   displaced-parity Wigner functions.
//! * [`analysis`]: trace distance, entropy and which-path distinguishability.
//! * [`calib`]: Z-line crosstalk correction and calibration models.
//!
//! Frequencies are angular frequencies in rad/s and times are in seconds
//! throughout the library. [`units`] converts from the MHz / ns values used
//! in configuration files.
//!
//! Data-parallel loops (Wigner grids, time sweeps, block diagonalization) run on
//! rayon when the `parallel` feature is enabled (the default) and fall back to
//! plain iterators otherwise. See [`par`].

pub mod analysis;
pub mod calib;
pub mod catprep;
pub mod dynamics;
mod error;
pub mod floquet;
pub mod hilbert;
pub mod par;
pub mod tomography;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

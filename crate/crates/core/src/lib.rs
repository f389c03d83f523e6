//! Single-photon spectroscopy of a quantum emitter.
//!
//! An emitter with an `N`-level singly-excited subspace, Hamiltonian `H`
//! (relative to the carrier), coupling vector `|gamma>` and rate `Gamma`
//! scatters a single-photon pulse by a frequency-dependent phase. This crate
//! evaluates that phase and its parameter derivatives, propagates pulses in
//! the frequency and time domains, computes the quantum Fisher information of
//! a pulse for `Gamma` or a detuning `Delta_j`, locates the extrema of the
//! response that bound it, and builds the pulses that reach the bound.

pub mod config;
pub mod emitter;
pub mod error;
pub mod grid;
pub mod optimizer;
pub mod pulse;
pub mod qfi;
pub mod scattering;

pub use emitter::{EmitterModel, ParameterTag, SpectralDecomposition};
pub use error::{Error, Result};
pub use grid::{build_grid, default_window, SampledField};
pub use pulse::{PulseSpec, Regularization};

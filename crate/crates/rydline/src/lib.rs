//! Simulation toolkit for laser phase noise in 1-D Rydberg spin chains.
//!
//! The crate synthesizes phase-noise realizations from a power spectral
//! density, propagates open-boundary Rydberg chains through noisy adiabatic
//! ramps, and quantifies excitation and thermalization with exact
//! diagonalization, diagonal ensembles, and canonical ensembles.
//!
//! Units throughout: ordinary frequencies in MHz, time in microseconds,
//! angular quantities (Rabi frequency, detuning, interaction strength) in
//! rad/us. The interaction strength `v_dd` defaults to 1 rad/us, so
//! `v_dd / 2 pi ~= 0.159 MHz`.

pub mod analysis;
pub mod error;
pub mod evolve;
pub mod exec;
pub mod io;
pub mod lab;
pub mod model;
pub mod noisegen;
pub mod spectrum;
pub mod thermo;

pub use error::{Error, Result};

/// Complex scalar used for all amplitudes and operators.
pub type C64 = num_complex::Complex64;

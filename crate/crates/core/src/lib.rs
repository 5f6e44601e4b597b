//! Noise analysis for a pair of weakly coupled MEMS resonators.
//!
//! The crate models the coupled pair as a two-degree-of-freedom system,
//! integrates it under thermal and harmonic forcing, estimates spectra, and
//! turns displacement noise plus transimpedance readout noise into output
//! resolution and minimum detectable stiffness.

pub mod cli;
pub mod config;
pub mod error;
pub mod noisebudget;
pub mod report;
pub mod resolution;
pub mod spectral;
pub mod sysmodel;
pub mod timesim;

pub use error::{Error, Result};

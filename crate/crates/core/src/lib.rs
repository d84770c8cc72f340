//! Numerical toolkit for linear time-varying (LTV) Gaussian channels:
//! capacity by eigenvalue waterfilling and by waterfilling in the
//! time-frequency plane, rate-distortion for the matched nonstationary
//! source by reverse waterfilling, spectral analysis of the underlying
//! time-frequency operators, and a Monte Carlo pulse-train coding
//! experiment.

pub mod coding;
pub mod error;
pub mod heat;
pub mod quad;
mod rng;
pub mod run;
pub mod source;
pub mod special;
pub mod waterfill;
pub mod weyl;

pub use error::{Error, Result};

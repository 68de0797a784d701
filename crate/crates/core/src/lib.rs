//! Blind deconvolution of sparse signals from subsampled circular convolutions.
//!
//! The unknown pair `(x, y) = (Φu, Ψv)` is recovered from `b = √(n/m)·S_Ω(x ⊛ y) + z`
//! by alternating sparse least squares on the lifted rank-one matrix `u vᵀ`, with both
//! factors kept inside a spectral-flatness cone.
//!
//! Module map:
//!
//! * [`signal`]: signals, sparse coefficient vectors, random dictionaries, flatness.
//! * [`operator`]: the measurement operator, its adjoint and the restricted maps.
//! * [`recovery`]: hard thresholding pursuit and least squares on a support.
//! * [`projection`]: flatness-cone projection and the alternating approximate projection.
//! * [`solver`]: thresholded initialization and the alternating minimization loop.
//! * [`harness`]: instance synthesis, metrics, phase-transition grids and exports.

pub mod dft;
pub mod error;
pub mod harness;
pub mod operator;
pub mod projection;
pub mod recovery;
pub mod rng;
pub mod signal;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use signal::{ComplexVec, Dictionary, Field, FlatnessLevel, ModelParams, SparseVec};

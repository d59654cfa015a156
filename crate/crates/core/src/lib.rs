//! Spectral analysis of wide two-layer ReLU network training.
//!
//! - [`harmonics`]: points on spheres, Gegenbauer polynomials, harmonic labels.
//! - [`kernels`]: the infinite-width neural tangent kernels and Gram matrices.
//! - [`spectra`]: kernel coefficients by closed form, quadrature and matrix estimates.
//! - [`dynamics`]: the linearized gradient-descent forecast.
//! - [`nets`]: two-layer and deep networks with a full-batch trainer.
//! - [`experiments`]: frequency sweeps, demonstrations and reports.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod harmonics;
pub mod kernels;
pub mod nets;
pub mod quadrature;
pub mod rng;
pub mod spectra;

pub use error::{Error, Result};
pub use kernels::{gram_matrix, GramMatrix, KernelVariant};
pub use spectra::{coefficient, Source, SpectrumEntry};

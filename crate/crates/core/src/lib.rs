//! Recovery of `L` sparse vectors from unlabeled mixtures of designed linear
//! measurements.
//!
//! Noiseless measurements are decoded by [`decode::decode`]: summation checks find
//! consistent measurement pairs, ratio tests find singletons, strong doubletons link
//! singletons into a graph whose `L` largest components seed one color each, and
//! guess-and-check peeling colors the rest. [`robust::robust_decode`] handles the
//! two-component Gaussian-noise case with quantized values by denoising every query
//! with a small EM estimator first. [`devo`] computes the density-evolution quantities
//! that pick the code parameters.

pub mod decode;
pub mod design;
pub mod devo;
pub mod emdenoise;
pub mod error;
pub mod harness;
pub mod model;
pub mod peeling;
pub mod robust;
pub mod seed;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{
    evaluate, generate_mixture, MixtureModel, MixtureSpec, QuantizedAlphabet, RecoveryReport,
    SparseVector, ValueSource, ValueTolerance,
};
pub use seed::{mix, rng_from_seed};

pub use num_complex::Complex64;

//! Variational estimation of grouped line spectra.
//!
//! A signal is modeled as a superposition of groups of spectral lines; each
//! group shares one continuous parameter (a fundamental frequency, a delay,
//! or a band center) and activates a discrete set of component lines. The
//! engine jointly estimates the number of groups, each group's parameter
//! and component set, the complex amplitudes and the noise precision, using
//! a mean-field proxy with a Bernoulli prior on groups and Gamma priors on
//! component precisions.
//!
//! Everything is generic over the real scalar type (`f32` or `f64`);
//! concrete `f64` aliases live at the crate root.

pub mod dictionary;
pub mod error;
pub mod hyper;
pub mod inference;
pub mod io;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod signal;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
pub use scalar::RealScalar;

/// `f64` working aliases.
pub type Signal64 = signal::SignalVector<f64>;
pub type Grid64 = signal::Grid<f64>;
pub type Hyper64 = hyper::Hyperparameters<f64>;
pub type Dictionary64 = dictionary::DictionarySpec<f64>;
pub type Group64 = model::GroupState<f64>;
pub type Report64 = model::EstimateReport<f64>;
pub type RunOptions64 = inference::RunOptions<f64>;
pub type NoiseSpec64 = simulate::NoiseSpec<f64>;
pub type Complex64 = num_complex::Complex<f64>;

//! Observation vector with its symmetric time grid.

use crate::error::{Error, Result};
use crate::scalar::{cast, RealScalar};
use num_complex::Complex;

/// Sampling geometry of a signal: length, interval and integer grid origin.
///
/// Dictionary evaluation only needs this, not the samples themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T: RealScalar> {
    pub n: usize,
    pub ts: T,
    /// Integer offset of sample 0, i.e. `-floor(N/2)`.
    pub origin: i64,
}

impl<T: RealScalar> Grid<T> {
    pub fn new(n: usize, ts: T) -> Self {
        Self {
            n,
            ts,
            origin: -((n / 2) as i64),
        }
    }

    /// Dimensionless offsets `n - floor(N/2)` as scalars.
    pub fn offsets(&self) -> impl Iterator<Item = T> + '_ {
        let origin = self.origin;
        (0..self.n).map(move |i| cast::<T>((origin + i as i64) as f64))
    }
}

/// A uniformly sampled complex observation.
///
/// Sample `n` (0-based) is taken at time `(n - floor(N/2)) * sample_interval`,
/// so the grid is centred on zero for even lengths and generalizes to odd
/// lengths via the floor.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalVector<T: RealScalar> {
    samples: Vec<Complex<T>>,
    sample_interval: T,
}

impl<T: RealScalar> SignalVector<T> {
    pub fn new(samples: Vec<Complex<T>>, sample_interval: T) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "signal must have at least 2 samples, got {}",
                samples.len()
            )));
        }
        if !(sample_interval > T::zero()) || !sample_interval.is_finite() {
            return Err(Error::InvalidArgument(
                "sample interval must be positive and finite".into(),
            ));
        }
        Ok(Self {
            samples,
            sample_interval,
        })
    }

    /// Construct with a unit sample interval.
    pub fn from_samples(samples: Vec<Complex<T>>) -> Result<Self> {
        Self::new(samples, T::one())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    pub fn sample_interval(&self) -> T {
        self.sample_interval
    }

    /// Integer grid offset of sample 0: `-floor(N/2)`.
    pub fn grid_origin(&self) -> i64 {
        -((self.samples.len() / 2) as i64)
    }

    /// Sampling geometry without the samples.
    pub fn grid(&self) -> Grid<T> {
        Grid::new(self.samples.len(), self.sample_interval)
    }

    /// Dimensionless grid `n - floor(N/2)` as scalars.
    pub fn offset_grid(&self) -> Vec<T> {
        let origin = self.grid_origin();
        (0..self.samples.len())
            .map(|n| cast::<T>((origin + n as i64) as f64))
            .collect()
    }

    /// Sampling instants in seconds.
    pub fn time_grid(&self) -> Vec<T> {
        self.offset_grid()
            .into_iter()
            .map(|g| g * self.sample_interval)
            .collect()
    }

    /// Total energy Σ|x[n]|².
    pub fn energy(&self) -> T {
        self.samples.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.samples
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

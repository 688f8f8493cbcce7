//! Scalar abstraction: the whole library is generic over the real scalar
//! type, instantiated at `f32` or `f64` (see the aliases at the crate root).

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::iter::Sum;

/// Real scalar the estimation core operates on.
///
/// `RealField` supplies the elementary functions and makes
/// `Complex<Self>` usable with nalgebra factorizations; the extra bounds
/// cover FFTs, conversions and sampling.
pub trait RealScalar: RealField + Copy + ToPrimitive + Sum + Default {
    /// Draw from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw uniformly from `[0, 1)`.
    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl RealScalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

impl RealScalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

/// Convert an `f64` constant into the working scalar type.
#[inline]
pub fn cast<T: RealScalar>(v: f64) -> T {
    T::from_f64(v).expect("f64 constant not representable in scalar type")
}

/// Convert the working scalar into `f64` (for reporting and serialization).
#[inline]
pub fn to_f64<T: RealScalar>(v: T) -> f64 {
    v.to_f64().expect("scalar not representable as f64")
}

/// Draw from the circularly-symmetric standard complex normal CN(0, 1).
pub fn standard_complex_normal<T: RealScalar, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let half = cast::<T>(0.5).sqrt();
    Complex::new(
        T::standard_normal(rng) * half,
        T::standard_normal(rng) * half,
    )
}

/// `r·e^{jθ}` without the `num_traits::Float` bound `Complex::from_polar`
/// would impose.
#[inline]
pub fn polar<T: RealScalar>(r: T, theta: T) -> Complex<T> {
    Complex::new(r * theta.cos(), r * theta.sin())
}

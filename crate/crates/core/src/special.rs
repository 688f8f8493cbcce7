//! Special functions needed by the hyperparameter closures.

use crate::error::{Error, Result};
use crate::scalar::{cast, to_f64, RealScalar};

/// Digamma function ψ(a) for a > 0.
///
/// Uses the ascending recurrence ψ(a+1) = ψ(a) + 1/a to shift the argument
/// above 10, then the asymptotic series in 1/a². Absolute accuracy is better
/// than 1e-13 over the positive axis (in f64).
pub fn digamma<T: RealScalar>(a: T) -> Result<T> {
    if a <= T::zero() {
        return Err(Error::DigammaDomain(to_f64(a)));
    }
    let mut x = a;
    let mut acc = T::zero();
    let shift_to = cast::<T>(10.0);
    while x < shift_to {
        acc -= T::one() / x;
        x += T::one();
    }
    let inv = T::one() / x;
    let inv2 = inv * inv;
    // ln x - 1/(2x) - sum_{n>=1} B_{2n} / (2n x^{2n})
    let series = cast::<T>(-1.0 / 12.0)
        + inv2
            * (cast::<T>(1.0 / 120.0)
                + inv2
                    * (cast::<T>(-1.0 / 252.0)
                        + inv2
                            * (cast::<T>(1.0 / 240.0)
                                + inv2
                                    * (cast::<T>(-1.0 / 132.0)
                                        + inv2
                                            * (cast::<T>(691.0 / 32760.0)
                                                + inv2 * cast::<T>(-1.0 / 12.0))))));
    Ok(acc + x.ln() - inv * cast::<T>(0.5) + inv2 * series)
}

/// Numerically stable logistic 1/(1 + e^a).
pub(crate) fn inv_one_plus_exp<T: RealScalar>(a: T) -> T {
    if a >= T::zero() {
        let e = (-a).exp();
        e / (T::one() + e)
    } else {
        T::one() / (T::one() + a.exp())
    }
}

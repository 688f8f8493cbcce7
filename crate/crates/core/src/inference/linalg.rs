//! Hermitian positive-definite solves with the escalating-jitter retry.

use crate::error::{Error, Result};
use crate::scalar::{cast, RealScalar};
use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex;

/// Cholesky-factor a Hermitian positive-definite matrix. If factorization
/// fails, add relative diagonal jitter 1e-12·trace/dim and retry up to three
/// times with 10× escalation.
pub(crate) fn hpd_cholesky<T: RealScalar>(
    a: &DMatrix<Complex<T>>,
) -> Result<Cholesky<Complex<T>, Dyn>> {
    let dim = a.nrows();
    if dim == 0 {
        // Cholesky of the empty matrix succeeds trivially.
        return Cholesky::new(a.clone()).ok_or(Error::SingularSystem { attempts: 0 });
    }
    if let Some(ch) = Cholesky::new(a.clone()) {
        return Ok(ch);
    }
    let trace: T = a.diagonal().iter().map(|c| c.re).sum();
    let mut jitter = cast::<T>(1e-12) * trace / cast::<T>(dim as f64);
    for attempt in 1..=3 {
        let mut m = a.clone();
        for i in 0..dim {
            m[(i, i)] += Complex::new(jitter, T::zero());
        }
        if let Some(ch) = Cholesky::new(m) {
            return Ok(ch);
        }
        let _ = attempt;
        jitter *= cast::<T>(10.0);
    }
    Err(Error::SingularSystem { attempts: 4 })
}

/// log|A| from a Cholesky factor of A.
pub(crate) fn log_det<T: RealScalar>(chol: &Cholesky<Complex<T>, Dyn>) -> T {
    let two = cast::<T>(2.0);
    chol.l_dirty()
        .diagonal()
        .iter()
        .map(|c| c.re.ln())
        .sum::<T>()
        * two
}

/// Inverse of a Hermitian positive-definite matrix (with jitter retry),
/// re-symmetrized so the result is Hermitian to machine precision.
pub(crate) fn hpd_inverse<T: RealScalar>(a: &DMatrix<Complex<T>>) -> Result<DMatrix<Complex<T>>> {
    let chol = hpd_cholesky(a)?;
    let mut inv = chol.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

/// Force exact Hermitian symmetry: M ← (M + Mᴴ)/2.
pub(crate) fn symmetrize<T: RealScalar>(m: &mut DMatrix<Complex<T>>) {
    let half = cast::<T>(0.5);
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = Complex::new(m[(i, i)].re, T::zero());
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * Complex::new(half, T::zero());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn inverse_of_hermitian_pd() {
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(4.0f64, 0.0),
                Complex::new(1.0, 1.0),
                Complex::new(1.0, -1.0),
                Complex::new(3.0, 0.0),
            ],
        );
        let inv = hpd_inverse(&a).unwrap();
        let prod = &a * &inv;
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod[(i, j)].re, expected, epsilon = 1e-12);
                assert_abs_diff_eq!(prod[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn log_det_matches_direct() {
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(2.0f64, 0.0),
                Complex::new(0.5, 0.25),
                Complex::new(0.5, -0.25),
                Complex::new(1.5, 0.0),
            ],
        );
        let chol = hpd_cholesky(&a).unwrap();
        let det = 2.0 * 1.5 - (0.5f64 * 0.5 + 0.25 * 0.25);
        assert_abs_diff_eq!(log_det(&chol), det.ln(), epsilon = 1e-12);
    }

    #[test]
    fn jitter_rescues_semidefinite() {
        // Rank-one matrix: plain Cholesky fails, jitter succeeds.
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(1.0f64, 0.0),
                Complex::new(1.0, 0.0),
                Complex::new(1.0, 0.0),
                Complex::new(1.0, 0.0),
            ],
        );
        assert!(hpd_cholesky(&a).is_ok());
    }
}

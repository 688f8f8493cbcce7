//! Prior hyperparameters and the coupled sparsity thresholds.
//!
//! The component threshold χ1 and group threshold χ2 are configured in dB
//! and converted to linear power ratios; the linear values are what all
//! acceptance inequalities use. The group activation prior z̄ is closed over
//! χ2 as z̄ = 1/(1 + exp(χ0 + χ2)) with χ0 = ψ(η + 1).

use crate::error::{Error, Result};
use crate::scalar::{cast, to_f64, RealScalar};
use crate::special::{digamma, inv_one_plus_exp};
use serde::{Deserialize, Serialize};

/// Convert decibels to a linear power ratio, `10^(db/10)`.
pub fn db_to_linear<T: RealScalar>(db: T) -> T {
    cast::<T>(10.0).powf(db / cast::<T>(10.0))
}

/// Gamma/noise prior shapes and rates plus both sparsity thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters<T: RealScalar> {
    /// Shape of the component-precision prior Ga(η, ν).
    pub eta: T,
    /// Rate of the component-precision prior.
    pub nu: T,
    /// Shape of the noise-precision prior Ga(ρ, μ).
    pub rho: T,
    /// Rate of the noise-precision prior.
    pub mu: T,
    /// Component-SNR threshold in dB.
    pub chi1_db: T,
    /// Group threshold in dB; must exceed `chi1_db`.
    pub chi2_db: T,
    /// χ1 as a linear power ratio.
    pub chi1: T,
    /// χ2 as a linear power ratio.
    pub chi2: T,
    /// χ0 = ψ(η + 1), the ⟨ln γ⟩ − ln γ̂ expectation correction.
    pub chi0: T,
    /// Group activation prior z̄ = 1/(1 + exp(χ0 + χ2)).
    pub zbar: T,
}

impl<T: RealScalar> Hyperparameters<T> {
    pub fn new(eta: T, nu: T, rho: T, mu: T, chi1_db: T, chi2_db: T) -> Result<Self> {
        for (name, v) in [("eta", eta), ("nu", nu), ("rho", rho), ("mu", mu)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidHyperparameters(format!(
                    "{name} must be finite and nonnegative, got {}",
                    to_f64(v)
                )));
            }
        }
        let chi1 = db_to_linear(chi1_db);
        let chi2 = db_to_linear(chi2_db);
        if !(chi1 >= T::one()) {
            return Err(Error::InvalidHyperparameters(format!(
                "chi1 must be >= 1 in linear scale (>= 0 dB), got {} dB",
                to_f64(chi1_db)
            )));
        }
        if !(chi2 > chi1) {
            return Err(Error::InvalidHyperparameters(format!(
                "chi2 ({} dB) must exceed chi1 ({} dB)",
                to_f64(chi2_db),
                to_f64(chi1_db)
            )));
        }
        let chi0 = digamma(eta + T::one())?;
        let zbar = inv_one_plus_exp(chi0 + chi2);
        Ok(Self {
            eta,
            nu,
            rho,
            mu,
            chi1_db,
            chi2_db,
            chi1,
            chi2,
            chi0,
            zbar,
        })
    }

    /// Jeffrey's priors (η = ν = ρ = μ = 0) with the given thresholds.
    pub fn with_thresholds_db(chi1_db: T, chi2_db: T) -> Result<Self> {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero(), chi1_db, chi2_db)
    }

    /// ln(z̄ / (1 − z̄)) = −(χ0 + χ2), the group-prior log-odds.
    pub fn zbar_log_odds(&self) -> T {
        -(self.chi0 + self.chi2)
    }
}

/// Group activation prior implied by a linear group threshold:
/// z̄ = 1/(1 + exp(ψ(η+1) + χ2)). Strictly inside (0, 1).
pub fn derive_zbar<T: RealScalar>(chi2_linear: T, eta: T) -> Result<T> {
    if !(chi2_linear > T::zero()) {
        return Err(Error::InvalidHyperparameters(format!(
            "chi2 must be positive, got {}",
            to_f64(chi2_linear)
        )));
    }
    let chi0 = digamma(eta + T::one())?;
    Ok(inv_one_plus_exp(chi0 + chi2_linear))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn zbar_closure_value() {
        // chi2 = 10 linear, eta = 0: 1/(1 + exp(psi(1) + 10))
        let z = derive_zbar(10.0f64, 0.0).unwrap();
        let expected = 1.0 / (1.0 + (10.0 - 0.577_215_664_901_532_9f64).exp());
        assert_relative_eq!(z, expected, max_relative = 1e-14);
        assert_abs_diff_eq!(z, 8.083e-5, epsilon = 5e-8);
    }

    #[test]
    fn zbar_limits() {
        // chi2 -> large drives zbar to zero monotonically.
        let mut prev = derive_zbar(1.0f64, 0.0).unwrap();
        for chi2 in [2.0, 5.0, 20.0, 100.0, 700.0] {
            let z = derive_zbar(chi2, 0.0).unwrap();
            assert!(z < prev);
            assert!(z > 0.0 && z < 1.0);
            prev = z;
        }
        // chi2 = -chi0 gives exactly 1/2 (requires chi0 < 0 so chi2 stays
        // positive, i.e. eta + 1 below the digamma root at ~1.4616).
        for eta in [0.0, 0.25, 0.4] {
            let chi0 = digamma(eta + 1.0).unwrap();
            let z = derive_zbar(-chi0, eta).unwrap();
            assert_abs_diff_eq!(z, 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn zbar_strictly_decreasing_and_below_chi1_bound() {
        let eta = 0.0f64;
        let chi0 = digamma(eta + 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let chi2 = 0.1 * i as f64;
            let z = derive_zbar(chi2, eta).unwrap();
            assert!(z < prev, "zbar must be strictly decreasing in chi2");
            prev = z;
            // For any chi1 < chi2 the bound z < 1/(1+exp(chi0+chi1)) holds.
            let chi1 = chi2 * 0.5;
            assert!(z < 1.0 / (1.0 + (chi0 + chi1).exp()));
        }
    }

    #[test]
    fn group_test_dominates_component_test_on_log_grid() {
        // (1+g)(ln((1+g)/g) + ln((1-zbar)/zbar) - chi0) > chi1 over a wide
        // log grid of g = gamma*s, for chi2 > chi1 >= 1.
        for (chi1, chi2) in [(1.0f64, 2.0), (5.0, 10.0), (10.0, 20.0)] {
            let eta = 0.0;
            let chi0 = digamma(eta + 1.0).unwrap();
            let zbar: f64 = derive_zbar(chi2, eta).unwrap();
            let anti_odds = ((1.0 - zbar) / zbar).ln();
            for i in 0..=100 {
                let g = 10f64.powf(-6.0 + 12.0 * i as f64 / 100.0);
                let lhs = (1.0 + g) * (((1.0 + g) / g).ln() + anti_odds - chi0);
                assert!(
                    lhs > chi1,
                    "threshold relation violated at g={g}, chi1={chi1}, chi2={chi2}"
                );
            }
        }
    }

    #[test]
    fn construction_validates_thresholds() {
        assert!(Hyperparameters::with_thresholds_db(7.0f64, 10.0).is_ok());
        // chi2 <= chi1 rejected.
        assert!(Hyperparameters::with_thresholds_db(10.0f64, 10.0).is_err());
        assert!(Hyperparameters::with_thresholds_db(10.0f64, 7.0).is_err());
        // chi1 below 0 dB (linear < 1) rejected.
        assert!(Hyperparameters::with_thresholds_db(-1.0f64, 10.0).is_err());
        // negative shapes rejected.
        assert!(Hyperparameters::new(-0.1f64, 0.0, 0.0, 0.0, 7.0, 10.0).is_err());
    }

    #[test]
    fn log_odds_matches_zbar() {
        let h = Hyperparameters::with_thresholds_db(7.0f64, 10.0).unwrap();
        let direct = (h.zbar / (1.0 - h.zbar)).ln();
        assert_relative_eq!(h.zbar_log_odds(), direct, max_relative = 1e-10);
    }
}

//! Parametrized dictionaries for the three structural variants.
//!
//! Every atom is a (possibly pulse-weighted) complex exponential sampled on
//! the integer offset grid `g_n = n - floor(N/2)`. A `(θ, l)` pair maps to a
//! normalized frequency ν so that the atom entry is `w_n · e^{j2π ν g_n}`:
//!
//! * `Harmonic`: ν = θ·l with θ a relative fundamental frequency,
//! * `DelayTap`: ν = −(θ/Tₛ + l)/N with θ a delay in seconds and unit tap
//!   spacing (the columns live on the frequency grid, weighted by the pulse
//!   spectrum),
//! * `BandOffset`: ν = θ + l/N with θ a relative center frequency.
//!
//! Since ν is affine in `l` for every variant, correlations against a fixed
//! vector step from one component to the next with a single complex multiply
//! per sample, and inner products between atoms reduce to geometric sums
//! with a closed form.

use crate::error::{Error, Result};
use crate::model::GroupState;
use crate::scalar::{cast, polar, to_f64, RealScalar};
use crate::signal::Grid;
use nalgebra::DVector;
use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Structural variant of the dictionary.
#[derive(Debug, Clone, PartialEq)]
pub enum Variant<T: RealScalar> {
    /// Spectral lines at integer multiples of a fundamental frequency.
    Harmonic,
    /// Delay taps spaced by the sampling interval, optionally weighted by a
    /// pulse spectrum (length must match the signal; `None` means flat).
    DelayTap { pulse: Option<Vec<Complex<T>>> },
    /// Lines offset from a center frequency on the DFT bin grid.
    BandOffset,
}

/// Rule that produces the candidate-component search set for a group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SearchPolicy {
    /// All multiples `1..floor(1/θ̂)` of the fundamental.
    HarmonicStack,
    /// Indices within `radius` of the active span (or of the seed component
    /// for a group with no active components yet).
    Neighborhood { radius: i64 },
}

/// Atom generator plus search-space policy for one application.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionarySpec<T: RealScalar> {
    variant: Variant<T>,
    l_min: i64,
    l_max: i64,
    theta_min: T,
    theta_max: T,
    policy: SearchPolicy,
    seed_component: i64,
}

impl<T: RealScalar> DictionarySpec<T> {
    pub fn new(
        variant: Variant<T>,
        l_min: i64,
        l_max: i64,
        theta_min: T,
        theta_max: T,
        policy: SearchPolicy,
        seed_component: i64,
    ) -> Result<Self> {
        if l_min > l_max {
            return Err(Error::InvalidDictionary(format!(
                "l_min ({l_min}) must not exceed l_max ({l_max})"
            )));
        }
        if !(theta_min <= theta_max) || !theta_min.is_finite() || !theta_max.is_finite() {
            return Err(Error::InvalidDictionary(
                "theta domain must be a nonempty finite interval".into(),
            ));
        }
        match variant {
            Variant::Harmonic | Variant::BandOffset => {
                if !(theta_min > T::zero()) || !(theta_max < T::one()) {
                    return Err(Error::InvalidDictionary(
                        "relative-frequency domain must lie inside (0, 1)".into(),
                    ));
                }
            }
            Variant::DelayTap { .. } => {
                if theta_min < T::zero() {
                    return Err(Error::InvalidDictionary("delays must be nonnegative".into()));
                }
            }
        }
        if !(seed_component >= l_min && seed_component <= l_max) {
            return Err(Error::InvalidDictionary(format!(
                "seed component {seed_component} outside [{l_min}, {l_max}]"
            )));
        }
        Ok(Self {
            variant,
            l_min,
            l_max,
            theta_min,
            theta_max,
            policy,
            seed_component,
        })
    }

    /// Harmonic dictionary over `θ ∈ [theta_min, theta_max]`, components
    /// `1..=l_max`, full-stack search, seeded at the fundamental.
    pub fn harmonic(l_max: i64, theta_min: T, theta_max: T) -> Result<Self> {
        Self::new(
            Variant::Harmonic,
            1,
            l_max,
            theta_min,
            theta_max,
            SearchPolicy::HarmonicStack,
            1,
        )
    }

    /// Delay-tap dictionary with taps `0..=l_max`, ±1 neighborhood search,
    /// seeded at tap 0.
    pub fn delay_tap(
        l_max: i64,
        theta_min: T,
        theta_max: T,
        pulse: Option<Vec<Complex<T>>>,
    ) -> Result<Self> {
        Self::new(
            Variant::DelayTap { pulse },
            0,
            l_max,
            theta_min,
            theta_max,
            SearchPolicy::Neighborhood { radius: 1 },
            0,
        )
    }

    /// Band-offset dictionary with offsets `-l_span..=l_span`, ±5
    /// neighborhood search, seeded at the center bin.
    pub fn band_offset(l_span: i64, theta_min: T, theta_max: T) -> Result<Self> {
        Self::new(
            Variant::BandOffset,
            -l_span,
            l_span,
            theta_min,
            theta_max,
            SearchPolicy::Neighborhood { radius: 5 },
            0,
        )
    }

    pub fn variant(&self) -> &Variant<T> {
        &self.variant
    }

    pub fn l_min(&self) -> i64 {
        self.l_min
    }

    pub fn l_max(&self) -> i64 {
        self.l_max
    }

    pub fn theta_domain(&self) -> (T, T) {
        (self.theta_min, self.theta_max)
    }

    pub fn policy(&self) -> SearchPolicy {
        self.policy
    }

    pub fn with_policy(mut self, policy: SearchPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn seed_component(&self) -> i64 {
        self.seed_component
    }

    pub fn theta_in_domain(&self, theta: T) -> bool {
        theta >= self.theta_min && theta <= self.theta_max
    }

    pub fn check_component(&self, l: i64) -> Result<()> {
        if l < self.l_min || l > self.l_max {
            return Err(Error::IndexOutOfRange {
                index: l,
                l_min: self.l_min,
                l_max: self.l_max,
            });
        }
        Ok(())
    }

    fn check_theta(&self, theta: T) -> Result<()> {
        if !self.theta_in_domain(theta) {
            return Err(Error::OutOfDomain(format!(
                "theta {} outside [{}, {}]",
                to_f64(theta),
                to_f64(self.theta_min),
                to_f64(self.theta_max)
            )));
        }
        Ok(())
    }

    fn pulse(&self) -> Option<&[Complex<T>]> {
        match &self.variant {
            Variant::DelayTap { pulse } => pulse.as_deref(),
            _ => None,
        }
    }

    fn check_pulse(&self, grid: &Grid<T>) -> Result<()> {
        if let Some(p) = self.pulse() {
            if p.len() != grid.n {
                return Err(Error::InvalidDictionary(format!(
                    "pulse spectrum length {} does not match signal length {}",
                    p.len(),
                    grid.n
                )));
            }
        }
        Ok(())
    }

    /// Normalized frequency of component `(θ, l)` on the integer grid.
    pub fn nu(&self, theta: T, l: i64, grid: &Grid<T>) -> T {
        let lf = cast::<T>(l as f64);
        let nf = cast::<T>(grid.n as f64);
        match &self.variant {
            Variant::Harmonic => theta * lf,
            Variant::DelayTap { .. } => -(theta / grid.ts + lf) / nf,
            Variant::BandOffset => theta + lf / nf,
        }
    }

    /// Per-component increment dν/dl (constant for all variants).
    fn nu_step(&self, theta: T, grid: &Grid<T>) -> T {
        let nf = cast::<T>(grid.n as f64);
        match &self.variant {
            Variant::Harmonic => theta,
            Variant::DelayTap { .. } => -T::one() / nf,
            Variant::BandOffset => T::one() / nf,
        }
    }

    /// |dν/dθ|, the frequency sensitivity used for refinement bounds.
    pub fn nu_theta_slope(&self, l: i64, grid: &Grid<T>) -> T {
        match &self.variant {
            Variant::Harmonic => cast::<T>(l.unsigned_abs() as f64),
            Variant::DelayTap { .. } => T::one() / (grid.ts * cast::<T>(grid.n as f64)),
            Variant::BandOffset => T::one(),
        }
    }

    /// Grid spacing of θ that corresponds to the native normalized-frequency
    /// resolution 1/N for the steepest component in `ls`.
    pub fn native_theta_resolution(&self, ls: &[i64], grid: &Grid<T>) -> T {
        let nf = cast::<T>(grid.n as f64);
        match &self.variant {
            Variant::Harmonic => {
                let l_hi = ls.iter().map(|l| l.unsigned_abs()).max().unwrap_or(1).max(1);
                T::one() / (nf * cast::<T>(l_hi as f64))
            }
            Variant::DelayTap { .. } => grid.ts,
            Variant::BandOffset => T::one() / nf,
        }
    }

    /// Materialize the column for `(θ, l)`.
    pub fn atom(&self, theta: T, l: i64, grid: &Grid<T>) -> Result<DVector<Complex<T>>> {
        self.check_component(l)?;
        self.check_theta(theta)?;
        self.check_pulse(grid)?;
        let nu = self.nu(theta, l, grid);
        let two_pi = T::two_pi();
        let mut col = DVector::from_iterator(
            grid.n,
            grid.offsets().map(|g| polar(T::one(), two_pi * nu * g)),
        );
        if let Some(p) = self.pulse() {
            for (c, w) in col.iter_mut().zip(p.iter()) {
                *c *= *w;
            }
        }
        Ok(col)
    }

    /// ψ(θ,l)ᴴψ(θ,l), identical for every atom of the dictionary.
    pub fn atom_norm_sqr(&self, grid: &Grid<T>) -> T {
        match self.pulse() {
            Some(p) => p.iter().map(|w| w.norm_sqr()).sum(),
            None => cast::<T>(grid.n as f64),
        }
    }

    /// Inner product ψ(θ₁,l₁)ᴴψ(θ₂,l₂).
    ///
    /// Flat-weight dictionaries use the geometric-sum closed form; a pulse
    /// weight falls back to direct summation.
    pub fn inner(&self, theta1: T, l1: i64, theta2: T, l2: i64, grid: &Grid<T>) -> Complex<T> {
        let dnu = self.nu(theta2, l2, grid) - self.nu(theta1, l1, grid);
        match self.pulse() {
            None => dirichlet_sum(dnu, grid),
            Some(p) => {
                // Σ |s_n|² e^{j2π dν g_n}
                let two_pi = T::two_pi();
                let mut acc = Complex::new(T::zero(), T::zero());
                for (w, g) in p.iter().zip(grid.offsets()) {
                    acc += polar(w.norm_sqr(), two_pi * dnu * g);
                }
                acc
            }
        }
    }

    /// ψ(θ,l)ᴴy for each `l` in `ls` (ascending). `y` must have grid length.
    ///
    /// Shares the per-sample phasor across components: ν is affine in `l`,
    /// so successive components differ by one constant complex rotation.
    pub fn correlations(&self, theta: T, ls: &[i64], y: &[Complex<T>], grid: &Grid<T>) -> Vec<Complex<T>> {
        debug_assert_eq!(y.len(), grid.n);
        debug_assert!(ls.windows(2).all(|w| w[0] < w[1]));
        if ls.is_empty() {
            return Vec::new();
        }
        let two_pi = T::two_pi();
        let nu0 = self.nu(theta, ls[0], grid);
        let step = self.nu_step(theta, grid);
        // p_n = conj(w_n) y_n e^{-j2π ν(θ, ls[0]) g_n}
        let mut p: Vec<Complex<T>> = grid
            .offsets()
            .zip(y.iter())
            .map(|(g, &yn)| yn * polar(T::one(), -two_pi * nu0 * g))
            .collect();
        if let Some(pulse) = self.pulse() {
            for (pn, w) in p.iter_mut().zip(pulse.iter()) {
                *pn *= w.conj();
            }
        }
        let rot: Vec<Complex<T>> = grid
            .offsets()
            .map(|g| polar(T::one(), -two_pi * step * g))
            .collect();
        let mut out = Vec::with_capacity(ls.len());
        let mut current = ls[0];
        for &l in ls {
            while current < l {
                for (pn, r) in p.iter_mut().zip(rot.iter()) {
                    *pn *= *r;
                }
                current += 1;
            }
            out.push(p.iter().copied().sum());
        }
        out
    }

    /// Matched-filter maximization of |ψ(θ,l)ᴴ residual| over the θ grid
    /// with spacing (native resolution / oversampling). Ties resolve to the
    /// lowest θ.
    pub fn coarse_scan(
        &self,
        residual: &[Complex<T>],
        l: i64,
        oversampling: usize,
        grid: &Grid<T>,
    ) -> Result<T> {
        Ok(self.coarse_scan_peaks(residual, l, oversampling, 1, grid)?[0])
    }

    /// Up to `count` matched-filter peaks, strongest first. After each pick
    /// the bins within ±1 native resolution of it are suppressed, so the
    /// peaks land on distinct spectral features; used to retry the group
    /// search when the strongest peak produces a rejected candidate.
    pub fn coarse_scan_peaks(
        &self,
        residual: &[Complex<T>],
        l: i64,
        oversampling: usize,
        count: usize,
        grid: &Grid<T>,
    ) -> Result<Vec<T>> {
        self.check_component(l)?;
        self.check_pulse(grid)?;
        if residual.len() != grid.n {
            return Err(Error::InvalidArgument(format!(
                "residual length {} does not match grid length {}",
                residual.len(),
                grid.n
            )));
        }
        let oversampling = oversampling.max(1);
        let m = grid.n * oversampling;

        // |Σ_n c_n e^{-j2π ν g_n}| over ν = j/m is |DFT_m of c| up to a
        // global phase from the grid origin, which the modulus ignores.
        let mut buf: Vec<Complex<T>> = residual.to_vec();
        if let Some(p) = self.pulse() {
            for (c, w) in buf.iter_mut().zip(p.iter()) {
                *c *= w.conj();
            }
        }
        buf.resize(m, Complex::new(T::zero(), T::zero()));
        let mut planner = FftPlanner::<T>::new();
        planner.plan_fft_forward(m).process(&mut buf);
        let mut mags: Vec<T> = buf.iter().map(|v| v.norm_sqr()).collect();

        let mf = cast::<T>(m as f64);
        let mut peaks = Vec::with_capacity(count);
        for _ in 0..count.max(1) {
            let mut best: Option<(T, T, usize)> = None; // (magnitude², θ, bin)
            for (j, &mag2) in mags.iter().enumerate() {
                let nu = cast::<T>(j as f64) / mf;
                for theta in self.thetas_for_nu(nu, l, grid) {
                    match &mut best {
                        None => best = Some((mag2, theta, j)),
                        Some((bm, bt, bj)) => {
                            if mag2 > *bm || (mag2 == *bm && theta < *bt) {
                                *bm = mag2;
                                *bt = theta;
                                *bj = j;
                            }
                        }
                    }
                }
            }
            match best {
                Some((_, theta, bin)) => {
                    peaks.push(theta);
                    for offset in 0..=oversampling {
                        mags[(bin + offset) % m] = T::zero();
                        mags[(bin + m - offset) % m] = T::zero();
                    }
                }
                // No scan point inside the θ domain: degenerate
                // configuration, fall back to the lower domain edge.
                None => {
                    if peaks.is_empty() {
                        peaks.push(self.theta_min);
                    }
                    break;
                }
            }
        }
        Ok(peaks)
    }

    /// All θ in the domain whose component `l` has normalized frequency
    /// ≡ ν (mod 1).
    fn thetas_for_nu(&self, nu: T, l: i64, grid: &Grid<T>) -> Vec<T> {
        let lf = cast::<T>(l as f64);
        let nf = cast::<T>(grid.n as f64);
        let mut thetas = Vec::new();
        match &self.variant {
            Variant::Harmonic => {
                // θ = (ν + j)/l for integer j; atoms alias modulo 1/l.
                let l_abs = l.unsigned_abs();
                for j in 0..l_abs {
                    let theta = (nu + cast::<T>(j as f64)) / lf;
                    if self.theta_in_domain(theta) {
                        thetas.push(theta);
                    }
                }
            }
            Variant::DelayTap { .. } => {
                // ν ≡ -(θ/Tₛ + l)/N (mod 1): delay in samples is
                // (-ν·N - l) mod N.
                let mut tau = (-nu * nf - lf) % nf;
                if tau < T::zero() {
                    tau += nf;
                }
                let theta = tau * grid.ts;
                if self.theta_in_domain(theta) {
                    thetas.push(theta);
                }
            }
            Variant::BandOffset => {
                // θ ≡ ν - l/N (mod 1), reduced into (0, 1).
                let mut theta = (nu - lf / nf) % T::one();
                if theta < T::zero() {
                    theta += T::one();
                }
                if self.theta_in_domain(theta) {
                    thetas.push(theta);
                }
            }
        }
        thetas
    }

    /// Candidate-component set for a group under this spec's policy,
    /// clipped to `[l_min, l_max]` and sorted ascending.
    pub fn search_space(&self, group: &GroupState<T>) -> Vec<i64> {
        let (lo, hi) = match self.policy {
            SearchPolicy::HarmonicStack => {
                let inv = (T::one() / group.theta).floor();
                (1, to_f64(inv) as i64)
            }
            SearchPolicy::Neighborhood { radius } => {
                let (min, max) = match (group.active_set().next(), group.active_set().last()) {
                    (Some(min), Some(max)) => (min, max),
                    _ => (self.seed_component, self.seed_component),
                };
                (min - radius, max + radius)
            }
        };
        (lo.max(self.l_min)..=hi.min(self.l_max)).collect()
    }
}

/// Σ_{n = origin}^{origin+N-1} e^{j2π δν n} with the phase reduced modulo 1
/// first (exact on the integer grid), keeping the closed form
/// well-conditioned near integer δν.
fn dirichlet_sum<T: RealScalar>(dnu: T, grid: &Grid<T>) -> Complex<T> {
    let nf = cast::<T>(grid.n as f64);
    let r = dnu - dnu.round();
    if r == T::zero() {
        return Complex::new(nf, T::zero());
    }
    let phi = T::two_pi() * r;
    let half = cast::<T>(0.5);
    let ratio = (phi * half * nf).sin() / (phi * half).sin();
    let center = cast::<T>(grid.origin as f64) + (nf - T::one()) * half;
    polar(T::one(), phi * center) * Complex::new(ratio, T::zero())
}

/// Re-parametrize a group after a fractional component at `l' = 1/m` was
/// found: θ' = θ/m, every existing index scales by m, and the fractional
/// component becomes index 1 with prior precision `gamma_new`.
///
/// `m = 1` returns the group unchanged. The set of absolute line frequencies
/// {θ·l} is preserved exactly.
pub fn fractional_reparametrize<T: RealScalar>(
    spec: &DictionarySpec<T>,
    group: &GroupState<T>,
    m: u32,
    gamma_new: T,
) -> Result<GroupState<T>> {
    if m == 0 {
        return Err(Error::InvalidArgument("fraction denominator must be >= 1".into()));
    }
    if m == 1 {
        return Ok(group.clone());
    }
    let mf = cast::<T>(m as f64);
    let mut out = GroupState::new(group.theta / mf);
    for (l, gamma) in group.iter() {
        let scaled = l
            .checked_mul(m as i64)
            .ok_or_else(|| Error::InvalidArgument("scaled component index overflow".into()))?;
        spec.check_component(scaled)?;
        out.set_gamma(scaled, gamma)?;
    }
    spec.check_component(1)?;
    out.set_gamma(1, gamma_new)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::standard_complex_normal;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn harmonic_spec() -> DictionarySpec<f64> {
        DictionarySpec::harmonic(20, 0.005, 0.995).unwrap()
    }

    #[test]
    fn harmonic_atom_matches_direct_formula() {
        let spec = harmonic_spec();
        let grid = Grid::new(4, 1.0);
        let col = spec.atom(0.1, 2, &grid).unwrap();
        // ν = 0.2 over offsets {-2, -1, 0, 1}
        for (i, g) in [-2.0f64, -1.0, 0.0, 1.0].iter().enumerate() {
            let expected = polar(1.0, 2.0 * std::f64::consts::PI * 0.2 * g);
            assert_abs_diff_eq!(col[i].re, expected.re, epsilon = 1e-15);
            assert_abs_diff_eq!(col[i].im, expected.im, epsilon = 1e-15);
        }
    }

    #[test]
    fn flat_delay_tap_at_zero_delay_is_all_ones() {
        let spec = DictionarySpec::delay_tap(10, 0.0, 50.0, None).unwrap();
        let grid = Grid::new(8, 1.0);
        let col = spec.atom(0.0, 0, &grid).unwrap();
        for c in col.iter() {
            assert_abs_diff_eq!(c.re, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(c.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn atoms_are_unit_modulus_for_flat_variants() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let grid = Grid::new(33, 1.0);
        let harmonic = harmonic_spec();
        let band = DictionarySpec::band_offset(8, 0.05, 0.45).unwrap();
        for _ in 0..20 {
            let theta = 0.01 + 0.9 * f64::uniform_01(&mut rng);
            let l = 1 + (f64::uniform_01(&mut rng) * 10.0) as i64;
            let col = harmonic.atom(theta, l, &grid).unwrap();
            for c in col.iter() {
                assert_abs_diff_eq!(c.norm(), 1.0, epsilon = 1e-13);
            }
            let theta_b = 0.05 + 0.4 * f64::uniform_01(&mut rng);
            let l_b = -8 + (f64::uniform_01(&mut rng) * 16.0) as i64;
            let col = band.atom(theta_b, l_b, &grid).unwrap();
            for c in col.iter() {
                assert_abs_diff_eq!(c.norm(), 1.0, epsilon = 1e-13);
            }
            // ψᴴψ = N exactly through the closed form as well.
            assert_relative_eq!(
                harmonic.inner(theta, l, theta, l, &grid).re,
                33.0,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn closed_form_inner_matches_materialized_dot() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let grid = Grid::new(64, 1.0);
        let spec = harmonic_spec();
        for _ in 0..50 {
            let t1 = 0.01 + 0.45 * f64::uniform_01(&mut rng);
            let t2 = 0.01 + 0.45 * f64::uniform_01(&mut rng);
            let l1 = 1 + (f64::uniform_01(&mut rng) * 6.0) as i64;
            let l2 = 1 + (f64::uniform_01(&mut rng) * 6.0) as i64;
            let a1 = spec.atom(t1, l1, &grid).unwrap();
            let a2 = spec.atom(t2, l2, &grid).unwrap();
            let direct = a1.dotc(&a2);
            let closed = spec.inner(t1, l1, t2, l2, &grid);
            assert_abs_diff_eq!(direct.re, closed.re, epsilon = 1e-9);
            assert_abs_diff_eq!(direct.im, closed.im, epsilon = 1e-9);
        }
        // Same-frequency and bin-aligned cases hit the integer branch.
        let band = DictionarySpec::band_offset(8, 0.05, 0.45).unwrap();
        let same_group = band.inner(0.2, -3, 0.2, 5, &grid);
        let a = band.atom(0.2, -3, &grid).unwrap();
        let b = band.atom(0.2, 5, &grid).unwrap();
        let direct = a.dotc(&b);
        assert_abs_diff_eq!(same_group.re, direct.re, epsilon = 1e-9);
        assert_abs_diff_eq!(same_group.im, direct.im, epsilon = 1e-9);
        // Distinct bins of the same group are exactly orthogonal.
        assert_abs_diff_eq!(same_group.norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn pulse_weighted_inner_matches_materialized_dot() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let grid = Grid::new(32, 1.0);
        let pulse: Vec<Complex<f64>> = (0..32).map(|_| standard_complex_normal(&mut rng)).collect();
        let spec = DictionarySpec::delay_tap(10, 0.0, 31.0, Some(pulse)).unwrap();
        for _ in 0..20 {
            let t1 = 30.0 * f64::uniform_01(&mut rng);
            let t2 = 30.0 * f64::uniform_01(&mut rng);
            let l1 = (f64::uniform_01(&mut rng) * 10.0) as i64;
            let l2 = (f64::uniform_01(&mut rng) * 10.0) as i64;
            let a1 = spec.atom(t1, l1, &grid).unwrap();
            let a2 = spec.atom(t2, l2, &grid).unwrap();
            let direct = a1.dotc(&a2);
            let closed = spec.inner(t1, l1, t2, l2, &grid);
            assert_abs_diff_eq!(direct.re, closed.re, epsilon = 1e-9);
            assert_abs_diff_eq!(direct.im, closed.im, epsilon = 1e-9);
        }
    }

    #[test]
    fn correlations_match_materialized_atoms() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let grid = Grid::new(50, 1.0);
        let y: Vec<Complex<f64>> = (0..50).map(|_| standard_complex_normal(&mut rng)).collect();

        let spec = harmonic_spec();
        let ls = [1i64, 2, 3, 5, 8];
        let fast = spec.correlations(0.07, &ls, &y, &grid);
        for (i, &l) in ls.iter().enumerate() {
            let atom = spec.atom(0.07, l, &grid).unwrap();
            let direct: Complex<f64> = atom
                .iter()
                .zip(y.iter())
                .map(|(a, yn)| a.conj() * yn)
                .sum();
            assert_abs_diff_eq!(fast[i].re, direct.re, epsilon = 1e-10);
            assert_abs_diff_eq!(fast[i].im, direct.im, epsilon = 1e-10);
        }

        let band = DictionarySpec::band_offset(10, 0.05, 0.45).unwrap();
        let ls = [-4i64, -1, 0, 2, 7];
        let fast = band.correlations(0.21, &ls, &y, &grid);
        for (i, &l) in ls.iter().enumerate() {
            let atom = band.atom(0.21, l, &grid).unwrap();
            let direct: Complex<f64> = atom
                .iter()
                .zip(y.iter())
                .map(|(a, yn)| a.conj() * yn)
                .sum();
            assert_abs_diff_eq!(fast[i].re, direct.re, epsilon = 1e-10);
            assert_abs_diff_eq!(fast[i].im, direct.im, epsilon = 1e-10);
        }
    }

    #[test]
    fn atom_is_lipschitz_in_theta() {
        let grid = Grid::new(40, 1.0);
        let spec = harmonic_spec();
        let norm_g: f64 = grid.offsets().map(|g: f64| g * g).sum::<f64>().sqrt();
        for &(theta, l) in &[(0.11, 1i64), (0.07, 4), (0.23, 3)] {
            let delta = 1e-6;
            let a = spec.atom(theta, l, &grid).unwrap();
            let b = spec.atom(theta + delta, l, &grid).unwrap();
            let diff = (&b - &a).norm();
            let bound = 2.0 * std::f64::consts::PI * l as f64 * delta * norm_g;
            assert!(diff <= bound * (1.0 + 1e-6), "diff {diff} > bound {bound}");
        }
    }

    #[test]
    fn coarse_scan_recovers_single_tone() {
        let grid = Grid::new(100, 1.0);
        let spec = harmonic_spec();
        let tone = spec.atom(0.1, 1, &grid).unwrap();
        let theta = spec.coarse_scan(tone.as_slice(), 1, 8, &grid).unwrap();
        assert!((theta - 0.1).abs() <= 1.0 / (8.0 * 100.0));
    }

    #[test]
    fn coarse_scan_zero_residual_returns_lowest_theta() {
        let grid = Grid::new(64, 1.0);
        let spec = DictionarySpec::harmonic(20, 0.02, 0.9).unwrap();
        let zeros = vec![Complex::new(0.0, 0.0); 64];
        let theta = spec.coarse_scan(&zeros, 1, 8, &grid).unwrap();
        // Lowest grid point inside [0.02, 0.9]: spacing 1/512.
        let expected = (0.02f64 * 512.0).ceil() / 512.0;
        assert_abs_diff_eq!(theta, expected, epsilon = 1e-12);
    }

    #[test]
    fn coarse_scan_two_tones_lands_on_one() {
        let grid = Grid::new(100, 1.0);
        let spec = harmonic_spec();
        // Equal powers: the two peak magnitudes tie analytically (the cross
        // terms are conjugates), so only closeness to either tone is defined.
        let a = spec.atom(0.05, 1, &grid).unwrap();
        let b = spec.atom(0.09, 1, &grid).unwrap();
        let sum: Vec<Complex<f64>> = a.iter().zip(b.iter()).map(|(x, y)| x + y).collect();
        let theta = spec.coarse_scan(&sum, 1, 8, &grid).unwrap();
        let tol = 1.0 / 800.0 + 1e-12;
        let near = (theta - 0.05).abs() <= tol || (theta - 0.09).abs() <= tol;
        assert!(near, "scan landed at {theta}");

        // Slightly unequal powers break the tie; the scan must then agree
        // with an exhaustive grid evaluation at the same spacing.
        let skewed: Vec<Complex<f64>> = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| x + y * Complex::new(0.95, 0.0))
            .collect();
        let theta = spec.coarse_scan(&skewed, 1, 8, &grid).unwrap();
        let mut best = (0.0f64, 0.0f64);
        for j in 0..800 {
            let t = j as f64 / 800.0;
            if !spec.theta_in_domain(t) {
                continue;
            }
            let atom = spec.atom(t, 1, &grid).unwrap();
            let v: Complex<f64> = atom
                .iter()
                .zip(skewed.iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            if v.norm_sqr() > best.0 {
                best = (v.norm_sqr(), t);
            }
        }
        assert_abs_diff_eq!(theta, best.1, epsilon = 1e-12);
    }

    #[test]
    fn coarse_scan_delay_tap_recovers_delay() {
        let grid = Grid::new(100, 1.0);
        let spec = DictionarySpec::delay_tap(99, 0.0, 99.0, None).unwrap();
        let target = spec.atom(35.25, 0, &grid).unwrap();
        let theta: f64 = spec.coarse_scan(target.as_slice(), 0, 8, &grid).unwrap();
        assert!((theta - 35.25).abs() <= 1.0 / 8.0 + 1e-12, "got {theta}");
    }

    #[test]
    fn search_space_examples() {
        // Harmonic stack.
        let spec = harmonic_spec();
        let g = GroupState::with_components(0.1f64, [(1, 1.0)]).unwrap();
        assert_eq!(spec.search_space(&g), (1..=10).collect::<Vec<_>>());

        // Delay-tap ±1 neighborhood.
        let spec = DictionarySpec::delay_tap(100, 0.0, 99.0, None).unwrap();
        let g = GroupState::with_components(35.0f64, [(5, 1.0), (6, 1.0), (7, 1.0)]).unwrap();
        assert_eq!(spec.search_space(&g), vec![4, 5, 6, 7, 8]);

        // Band-offset ±5 neighborhood over [-50, 50].
        let spec = DictionarySpec::band_offset(50, 0.05, 0.45).unwrap();
        let g = GroupState::with_components(0.2f64, [(-1, 1.0), (0, 1.0), (1, 1.0)]).unwrap();
        assert_eq!(spec.search_space(&g), (-6..=6).collect::<Vec<_>>());

        // Empty group: neighborhood centred on the seed component.
        let g = GroupState::new(0.2f64);
        assert_eq!(spec.search_space(&g), (-5..=5).collect::<Vec<_>>());
    }

    #[test]
    fn search_space_respects_bounds() {
        let spec = DictionarySpec::delay_tap(6, 0.0, 99.0, None).unwrap();
        let g = GroupState::with_components(1.0f64, [(5, 1.0), (6, 1.0)]).unwrap();
        assert_eq!(spec.search_space(&g), vec![4, 5, 6]);
        let spec = DictionarySpec::harmonic(4, 0.005, 0.995).unwrap();
        let g = GroupState::with_components(0.1f64, [(1, 1.0)]).unwrap();
        assert_eq!(spec.search_space(&g), vec![1, 2, 3, 4]);
    }

    #[test]
    fn fractional_reparametrization_examples() {
        let spec = DictionarySpec::harmonic(40, 0.005, 0.995).unwrap();
        let g = GroupState::with_components(0.2f64, [(1, 10.0), (2, 20.0), (3, 30.0)]).unwrap();
        let out = fractional_reparametrize(&spec, &g, 2, 5.0).unwrap();
        assert_abs_diff_eq!(out.theta, 0.1, epsilon = 1e-15);
        assert_eq!(out.active_set().collect::<Vec<_>>(), vec![1, 2, 4, 6]);
        assert_eq!(out.gamma(2), Some(10.0));
        assert_eq!(out.gamma(4), Some(20.0));
        assert_eq!(out.gamma(6), Some(30.0));
        assert_eq!(out.gamma(1), Some(5.0));

        // m = 1 is the identity.
        let same = fractional_reparametrize(&spec, &g, 1, 99.0).unwrap();
        assert_eq!(same, g);

        let g = GroupState::with_components(0.1f64, [(1, 7.0)]).unwrap();
        let out = fractional_reparametrize(&spec, &g, 3, 2.0).unwrap();
        assert_abs_diff_eq!(out.theta, 0.1 / 3.0, epsilon = 1e-15);
        assert_eq!(out.active_set().collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn fractional_reparametrization_preserves_line_frequencies() {
        let spec = DictionarySpec::harmonic(64, 0.001, 0.995).unwrap();
        let g = GroupState::with_components(0.12f64, [(2, 1.0), (5, 1.0), (7, 1.0)]).unwrap();
        let out = fractional_reparametrize(&spec, &g, 4, 1.0).unwrap();
        let before: Vec<f64> = g.active_set().map(|l| g.theta * l as f64).collect();
        for f in before {
            let found = out
                .active_set()
                .any(|l| (out.theta * l as f64 - f).abs() < 1e-12);
            assert!(found, "line frequency {f} lost");
        }
    }

    #[test]
    fn fractional_reparametrization_rejects_index_overflow() {
        let spec = DictionarySpec::harmonic(5, 0.005, 0.995).unwrap();
        let g = GroupState::with_components(0.2f64, [(3, 1.0)]).unwrap();
        assert!(fractional_reparametrize(&spec, &g, 2, 1.0).is_err());
    }

    #[test]
    fn atom_rejects_out_of_domain() {
        let spec = harmonic_spec();
        let grid = Grid::new(16, 1.0);
        assert!(spec.atom(0.1, 21, &grid).is_err());
        assert!(spec.atom(0.9999, 1, &grid).is_err());
        assert!(DictionarySpec::<f64>::harmonic(10, 0.0, 0.5).is_err());
        assert!(DictionarySpec::<f64>::harmonic(0, 0.1, 0.5).is_err());
    }
}

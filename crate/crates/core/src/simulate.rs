//! Synthetic scenario generation and noise injection.
//!
//! All generators are deterministic functions of their parameters and the
//! supplied RNG state; noise injection additionally carries its own seed so
//! scenario and noise streams can be derived independently.

use crate::error::{Error, Result};
use crate::scalar::{cast, polar, standard_complex_normal, to_f64, RealScalar};
use crate::signal::SignalVector;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Which energy ratio the SNR refers to. Both definitions relate the clean
/// signal energy to the noise energy — `SignalToNoise` states it via the
/// observed signal minus noise, `CleanToNoise` directly — so they scale the
/// noise identically; the distinction is kept for configuration clarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrDefinition {
    SignalToNoise,
    CleanToNoise,
}

/// Noise prescription: target SNR in dB, its definition and the noise seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec<T: RealScalar> {
    pub snr_db: T,
    pub definition: SnrDefinition,
    pub seed: u64,
}

impl<T: RealScalar> NoiseSpec<T> {
    pub fn new(snr_db: T, definition: SnrDefinition, seed: u64) -> Self {
        Self {
            snr_db,
            definition,
            seed,
        }
    }
}

/// One amplitude/frequency-modulated mode for the decomposition scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VmdModeSpec<T: RealScalar> {
    /// Center frequency (relative, in (0, 0.5)).
    pub f_center: T,
    /// Fractional instantaneous-frequency modulation range.
    pub f_mod: T,
    /// Base amplitude.
    pub a0: T,
    /// Fractional amplitude modulation range.
    pub a_mod: T,
}

impl<T: RealScalar> VmdModeSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_center > T::zero() && self.f_center < cast::<T>(0.5)) {
            return Err(Error::InvalidArgument(format!(
                "mode center frequency must be in (0, 0.5), got {}",
                to_f64(self.f_center)
            )));
        }
        for (name, v) in [("f_mod", self.f_mod), ("a_mod", self.a_mod)] {
            if !(v >= T::zero() && v < T::one()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be in [0, 1), got {}",
                    to_f64(v)
                )));
            }
        }
        Ok(())
    }
}

/// Scatter-point ground truth of an extended object.
#[derive(Debug, Clone)]
pub struct ExtendedObjectTruth<T: RealScalar> {
    /// Extent max τ − min τ (same units as the delays).
    pub extent: T,
    /// Power-weighted center of mass Σ|α|²τ / Σ|α|².
    pub center: T,
    /// (delay, amplitude) of each scatter point.
    pub scatterers: Vec<(T, Complex<T>)>,
}

fn uniform_in<T: RealScalar, R: Rng + ?Sized>(rng: &mut R, lo: T, hi: T) -> T {
    lo + (hi - lo) * T::uniform_01(rng)
}

/// K harmonic sources with unit-amplitude lines at multiples of rejection-
/// sampled fundamentals. Phases are independent and uniform.
pub fn gen_multipitch<T: RealScalar, R: Rng + ?Sized>(
    n: usize,
    k: usize,
    harmonics: usize,
    f0_range: (T, T),
    min_sep: T,
    rng: &mut R,
) -> Result<(SignalVector<T>, Vec<T>)> {
    const MAX_DRAWS: usize = 10_000;
    let mut fundamentals: Vec<T> = Vec::new();
    if k > 0 {
        let mut accepted = false;
        for _ in 0..MAX_DRAWS {
            let draw: Vec<T> = (0..k)
                .map(|_| uniform_in(rng, f0_range.0, f0_range.1))
                .collect();
            let ok = (0..k).all(|i| (i + 1..k).all(|j| (draw[i] - draw[j]).abs() >= min_sep));
            if ok {
                fundamentals = draw;
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::RejectionSamplingFailed(MAX_DRAWS));
        }
    }
    let mut samples = vec![Complex::new(T::zero(), T::zero()); n];
    for &f0 in &fundamentals {
        for l in 1..=harmonics {
            let phase = uniform_in(rng, T::zero(), T::two_pi());
            add_line(&mut samples, f0 * cast::<T>(l as f64), T::one(), phase);
        }
    }
    Ok((SignalVector::new(samples, T::one())?, fundamentals))
}

/// A perfectly tempered major triad: notes at f0, 5/4·f0 and 3/2·f0, each
/// with `per_note` distinct harmonic indices drawn from `harmonic_pool`
/// without replacement, unit amplitudes and uniform phases.
pub fn gen_triad<T: RealScalar, R: Rng + ?Sized>(
    n: usize,
    f0_range: (T, T),
    harmonic_pool: &[u32],
    per_note: usize,
    rng: &mut R,
) -> Result<(SignalVector<T>, Vec<T>)> {
    if per_note > harmonic_pool.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {per_note} distinct harmonics from a pool of {}",
            harmonic_pool.len()
        )));
    }
    let f0 = uniform_in(rng, f0_range.0, f0_range.1);
    let notes = [f0, f0 * cast::<T>(1.25), f0 * cast::<T>(1.5)];
    let mut samples = vec![Complex::new(T::zero(), T::zero()); n];
    for &note in &notes {
        let mut pool = harmonic_pool.to_vec();
        for i in 0..per_note {
            let j = i + (T::uniform_01(rng) * cast::<T>((pool.len() - i) as f64))
                .floor()
                .to_usize()
                .unwrap_or(0)
                .min(pool.len() - i - 1);
            pool.swap(i, j);
        }
        let mut chosen: Vec<u32> = pool[..per_note].to_vec();
        chosen.sort_unstable();
        for l in chosen {
            let phase = uniform_in(rng, T::zero(), T::two_pi());
            add_line(&mut samples, note * cast::<T>(l as f64), T::one(), phase);
        }
    }
    Ok((SignalVector::new(samples, T::one())?, notes.to_vec()))
}

/// Frequency-domain response of one extended object: Poisson-many (≥ 1)
/// scatter points with delays uniform over `delay_interval` (in sampling-
/// interval units) and CN(0,1) amplitudes, on a flat transmit pulse.
pub fn gen_extended_object<T: RealScalar, R: Rng + ?Sized>(
    n: usize,
    delay_interval: (T, T),
    mean_points: f64,
    rng: &mut R,
) -> Result<(SignalVector<T>, ExtendedObjectTruth<T>)> {
    if !(delay_interval.1 > delay_interval.0) {
        return Err(Error::InvalidArgument(
            "delay interval must have positive length".into(),
        ));
    }
    let poisson = Poisson::new(mean_points)
        .map_err(|e| Error::InvalidArgument(format!("invalid scatter mean: {e}")))?;
    // Condition on at least one scatter point; an empty object has no
    // defined truth.
    let count = loop {
        let c = poisson.sample(rng) as usize;
        if c >= 1 {
            break c;
        }
    };
    let mut scatterers: Vec<(T, Complex<T>)> = (0..count)
        .map(|_| {
            let tau = uniform_in(rng, delay_interval.0, delay_interval.1);
            let amp = standard_complex_normal(rng);
            (tau, amp)
        })
        .collect();
    scatterers.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let nf = cast::<T>(n as f64);
    let mut samples = vec![Complex::new(T::zero(), T::zero()); n];
    for &(tau, amp) in &scatterers {
        // Frequency-domain line: e^{-j2π g_n τ / N} on the offset grid.
        add_weighted_line(&mut samples, -(tau / nf), amp);
    }

    let total_power: T = scatterers.iter().map(|(_, a)| a.norm_sqr()).sum();
    let center = scatterers
        .iter()
        .map(|&(tau, a)| tau * a.norm_sqr())
        .sum::<T>()
        / total_power;
    let extent = scatterers.last().unwrap().0 - scatterers.first().unwrap().0;
    Ok((
        SignalVector::new(samples, T::one())?,
        ExtendedObjectTruth {
            extent,
            center,
            scatterers,
        },
    ))
}

/// Real-valued sum of amplitude/frequency-modulated modes. Returns the
/// clean signal and each mode's waveform.
///
/// Amplitude and instantaneous frequency are drawn at the five support
/// points `{0, N/4, N/2, 3N/4, N-1}` (amplitudes first, then frequencies,
/// per mode) and linearly interpolated; the phase is the cumulative
/// trapezoidal integral of the instantaneous frequency starting at the
/// first sample.
pub fn gen_vmd<T: RealScalar, R: Rng + ?Sized>(
    n: usize,
    modes: &[VmdModeSpec<T>],
    rng: &mut R,
) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    if n < 8 {
        return Err(Error::InvalidArgument("signal too short for mode supports".into()));
    }
    let supports = [0, n / 4, n / 2, 3 * n / 4, n - 1];
    let mut signal = vec![T::zero(); n];
    let mut waveforms = Vec::with_capacity(modes.len());
    let half = cast::<T>(0.5);
    for spec in modes {
        spec.validate()?;
        let amp_support: Vec<T> = (0..supports.len())
            .map(|_| spec.a0 * (T::one() + uniform_in(rng, -spec.a_mod, spec.a_mod)))
            .collect();
        let omega_support: Vec<T> = (0..supports.len())
            .map(|_| {
                T::two_pi() * spec.f_center * (T::one() + uniform_in(rng, -spec.f_mod, spec.f_mod))
            })
            .collect();
        let amp = interpolate_supports(&supports, &amp_support, n);
        let omega = interpolate_supports(&supports, &omega_support, n);
        let mut phase = vec![T::zero(); n];
        for i in 1..n {
            phase[i] = phase[i - 1] + (omega[i - 1] + omega[i]) * half;
        }
        let wave: Vec<T> = (0..n).map(|i| amp[i] * phase[i].cos()).collect();
        for (s, w) in signal.iter_mut().zip(wave.iter()) {
            *s += *w;
        }
        waveforms.push(wave);
    }
    Ok((signal, waveforms))
}

fn interpolate_supports<T: RealScalar>(supports: &[usize], values: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n];
    for w in 0..supports.len() - 1 {
        let (i0, i1) = (supports[w], supports[w + 1]);
        let (v0, v1) = (values[w], values[w + 1]);
        let span = cast::<T>((i1 - i0) as f64);
        for i in i0..=i1 {
            let t = cast::<T>((i - i0) as f64) / span;
            out[i] = v0 + (v1 - v0) * t;
        }
    }
    out
}

fn add_line<T: RealScalar>(samples: &mut [Complex<T>], freq: T, amp: T, phase: T) {
    let origin = -((samples.len() / 2) as i64);
    let two_pi = T::two_pi();
    for (i, s) in samples.iter_mut().enumerate() {
        let g = cast::<T>((origin + i as i64) as f64);
        *s += polar(amp, two_pi * freq * g + phase);
    }
}

fn add_weighted_line<T: RealScalar>(samples: &mut [Complex<T>], freq: T, amp: Complex<T>) {
    let origin = -((samples.len() / 2) as i64);
    let two_pi = T::two_pi();
    for (i, s) in samples.iter_mut().enumerate() {
        let g = cast::<T>((origin + i as i64) as f64);
        *s += amp * polar(T::one(), two_pi * freq * g);
    }
}

/// Add circularly-symmetric complex white noise scaled so the realized
/// noise vector hits the target SNR exactly. Returns (noisy, noise).
pub fn add_awgn<T: RealScalar>(
    clean: &[Complex<T>],
    spec: &NoiseSpec<T>,
) -> Result<(Vec<Complex<T>>, Vec<Complex<T>>)> {
    let energy: T = clean.iter().map(|c| c.norm_sqr()).sum();
    let scale = noise_scale(energy, spec, |rng| {
        let raw: Vec<Complex<T>> = (0..clean.len())
            .map(|_| standard_complex_normal(rng))
            .collect();
        let raw_energy = raw.iter().map(|c| c.norm_sqr()).sum::<T>();
        (raw, raw_energy)
    })?;
    let (raw, factor) = scale;
    let noise: Vec<Complex<T>> = raw
        .into_iter()
        .map(|c| c * Complex::new(factor, T::zero()))
        .collect();
    let noisy = clean.iter().zip(noise.iter()).map(|(a, b)| a + b).collect();
    Ok((noisy, noise))
}

/// Real-noise counterpart of [`add_awgn`].
pub fn add_awgn_real<T: RealScalar>(clean: &[T], spec: &NoiseSpec<T>) -> Result<(Vec<T>, Vec<T>)> {
    let energy: T = clean.iter().map(|&c| c * c).sum();
    let (raw, factor) = noise_scale(energy, spec, |rng| {
        let raw: Vec<T> = (0..clean.len()).map(|_| T::standard_normal(rng)).collect();
        let raw_energy = raw.iter().map(|&c| c * c).sum::<T>();
        (raw, raw_energy)
    })?;
    let noise: Vec<T> = raw.into_iter().map(|c| c * factor).collect();
    let noisy = clean.iter().zip(noise.iter()).map(|(a, b)| *a + *b).collect();
    Ok((noisy, noise))
}

fn noise_scale<T: RealScalar, V>(
    clean_energy: T,
    spec: &NoiseSpec<T>,
    draw: impl FnOnce(&mut ChaCha12Rng) -> (V, T),
) -> Result<(V, T)> {
    if !(clean_energy > T::zero()) && spec.snr_db.is_finite() {
        return Err(Error::ZeroSignal(
            "cannot prescribe a finite SNR for a zero signal".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let (raw, raw_energy) = draw(&mut rng);
    if !spec.snr_db.is_finite() {
        return Ok((raw, T::zero()));
    }
    let snr_linear = cast::<T>(10.0).powf(spec.snr_db / cast::<T>(10.0));
    let target = clean_energy / snr_linear;
    let factor = (target / raw_energy).sqrt();
    Ok((raw, factor))
}

/// Discrete-time analytic signal via the frequency-domain method: DC (and
/// the Nyquist bin, for even lengths) kept, strictly positive frequencies
/// doubled, negative frequencies zeroed.
pub fn analytic_signal<T: RealScalar>(x: &[T]) -> Vec<Complex<T>> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
    let mut planner = FftPlanner::<T>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let two = Complex::new(cast::<T>(2.0), T::zero());
    let positive_end = n.div_ceil(2); // exclusive end of strictly-positive bins
    for b in buf.iter_mut().take(positive_end).skip(1) {
        *b *= two;
    }
    let negative_start = n / 2 + 1;
    for b in buf.iter_mut().skip(negative_start) {
        *b = Complex::new(T::zero(), T::zero());
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let inv_n = Complex::new(T::one() / cast::<T>(n as f64), T::zero());
    for b in buf.iter_mut() {
        *b *= inv_n;
    }
    buf
}

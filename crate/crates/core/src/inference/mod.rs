//! The variational engine: posterior updates, the fast prior fixed point,
//! the group acceptance test and the bottom-up estimation schedule.

mod ctx;
mod engine;
mod linalg;
mod posterior;

pub use ctx::GroupStats;
pub use posterior::ExclusionStats;

use crate::dictionary::DictionarySpec;
use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::model::{EstimateReport, GroupState};
use crate::scalar::{cast, RealScalar};
use crate::signal::{Grid, SignalVector};
use ctx::GroupCtx;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use posterior::Posterior;

/// Schedule controls. Defaults follow the bottom-up schedule: relative
/// reconstruction tolerance 1e-6, at most 200 outer iterations, matched
/// filter oversampling 8 and θ refinement to relative tolerance 1e-7.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions<T: RealScalar> {
    /// Relative reconstruction-change stopping tolerance.
    pub tol: T,
    /// Outer iteration cap.
    pub max_outer: usize,
    /// Frequency-grid oversampling for coarse scans and refinement grids.
    pub oversampling: usize,
    /// Number of per-group update sweeps per outer iteration. Defaults to 1
    /// for the harmonic variant and 2 for neighborhood-searched variants.
    pub group_sweeps: Option<usize>,
    /// Probe fractions of the fundamental and re-parametrize on a hit.
    /// Defaults to on for the harmonic variant, off otherwise.
    pub fractional_search: Option<bool>,
    /// Run the local θ maximization of Δ_k.
    pub refine_theta: bool,
    /// Relative θ tolerance of the golden-section refinement.
    pub theta_refine_rel_tol: T,
}

impl<T: RealScalar> Default for RunOptions<T> {
    fn default() -> Self {
        Self {
            tol: cast(1e-6),
            max_outer: 200,
            oversampling: 8,
            group_sweeps: None,
            fractional_search: None,
            refine_theta: true,
            theta_refine_rel_tol: cast(1e-7),
        }
    }
}

/// Joint amplitude posterior (Ĉ, α̂) for the given support, group-major,
/// components ascending within each group. Empty support yields empty
/// outputs.
pub fn update_amplitudes<T: RealScalar>(
    spec: &DictionarySpec<T>,
    x: &SignalVector<T>,
    groups: &[GroupState<T>],
    lambda: T,
) -> Result<(DVector<Complex<T>>, DMatrix<Complex<T>>)> {
    let post = Posterior::build(spec, x.grid(), x.samples(), groups, lambda)?;
    Ok((post.alpha().clone(), post.cov().clone()))
}

/// Reconstruction Ψ̂α̂ for amplitudes in group-major order.
pub fn reconstruct<T: RealScalar>(
    spec: &DictionarySpec<T>,
    grid: Grid<T>,
    groups: &[GroupState<T>],
    alpha: &DVector<Complex<T>>,
) -> Result<DVector<Complex<T>>> {
    let mut out = DVector::zeros(grid.n);
    let mut j = 0;
    for g in groups {
        for (l, _) in g.iter() {
            let col = spec.atom(g.theta, l, &grid)?;
            let w = alpha[j];
            for (o, c) in out.iter_mut().zip(col.iter()) {
                *o += c * w;
            }
            j += 1;
        }
    }
    debug_assert_eq!(j, alpha.len());
    Ok(out)
}

/// Noise-precision update λ̂ = (N+ρ)/(‖x−Ψ̂α̂‖² + tr(Ψ̂ĈΨ̂ᴴ) + μ).
///
/// Errors with [`Error::DegenerateNoiselessFit`] when the denominator is
/// exactly zero (perfect fit with μ = 0).
pub fn update_noise_precision<T: RealScalar>(
    spec: &DictionarySpec<T>,
    x: &SignalVector<T>,
    groups: &[GroupState<T>],
    alpha: &DVector<Complex<T>>,
    cov: &DMatrix<Complex<T>>,
    hyper: &Hyperparameters<T>,
) -> Result<T> {
    let grid = x.grid();
    let x_hat = reconstruct(spec, grid, groups, alpha)?;
    let resid: T = x
        .samples()
        .iter()
        .zip(x_hat.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    // tr(Ψ̂ĈΨ̂ᴴ) = Σ_ij Ĉ_ij (ΨᴴΨ)_ji with the Gram in the same ordering.
    let atoms: Vec<(T, i64)> = groups
        .iter()
        .flat_map(|g| g.iter().map(move |(l, _)| (g.theta, l)))
        .collect();
    let mut trace = T::zero();
    for (i, a) in atoms.iter().enumerate() {
        for (j, b) in atoms.iter().enumerate() {
            trace += (cov[(i, j)] * spec.inner(b.0, b.1, a.0, a.1, &grid)).re;
        }
    }
    let denom = resid + trace + hyper.mu;
    if !(denom > T::zero()) {
        return Err(Error::DegenerateNoiselessFit);
    }
    Ok((cast::<T>(x.len() as f64) + hyper.rho) / denom)
}

/// Exclusion statistics (s, u) of the candidate column ψ(θ, l) for slot
/// (k, l): the column itself is excluded from the model if it is active,
/// and the statistics are computed against everything else.
pub fn exclusion_stats<T: RealScalar>(
    spec: &DictionarySpec<T>,
    x: &SignalVector<T>,
    groups: &[GroupState<T>],
    lambda: T,
    k: usize,
    l: i64,
    theta: T,
) -> Result<ExclusionStats<T>> {
    let mut work = groups.to_vec();
    if k < work.len() {
        work[k].remove(l);
    }
    let post = Posterior::build(spec, x.grid(), x.samples(), &work, lambda)?;
    Ok(post.candidate_stats(theta, l)?.stats)
}

/// Closed-form fixed point of the prior-precision update: γ̂ = (|u|²−s)⁻¹
/// when the component SNR |u|²/s exceeds χ1, `None` (discard) otherwise.
pub fn gamma_closed_form<T: RealScalar>(stats: &ExclusionStats<T>, chi1: T) -> Option<T> {
    posterior::gamma_from_stats(stats, chi1)
}

/// Block statistics (C_k, u) of group `k` at candidate θ over the given
/// `(l, γ̂)` members, with every other group treated as fixed.
pub fn group_stats<T: RealScalar>(
    spec: &DictionarySpec<T>,
    x: &SignalVector<T>,
    groups: &[GroupState<T>],
    lambda: T,
    k: usize,
    theta: T,
    members: &[(i64, T)],
) -> Result<GroupStats<T>> {
    let ctx = GroupCtx::new(spec, x.grid(), x.samples(), groups, lambda, k)?;
    ctx.stats(theta, members)
}

/// Δ_k(θ): the ln Z difference between the model with group `k` active at
/// θ (members and precisions from `groups[k]`) and the model without it.
pub fn delta_k<T: RealScalar>(
    spec: &DictionarySpec<T>,
    x: &SignalVector<T>,
    groups: &[GroupState<T>],
    lambda: T,
    k: usize,
    theta: T,
    hyper: &Hyperparameters<T>,
) -> Result<T> {
    let ctx = GroupCtx::new(spec, x.grid(), x.samples(), groups, lambda, k)?;
    let members: Vec<(i64, T)> = groups[k].iter().collect();
    ctx.delta(theta, &members, hyper)
}

/// Local maximization of Δ_k over θ: a ±1-native-bin grid at the configured
/// oversampling followed by golden-section refinement. Returns `(θ̂, Δ_k(θ̂))`
/// with Δ_k(θ̂) never below Δ_k at the current θ.
pub fn refine_theta<T: RealScalar>(
    spec: &DictionarySpec<T>,
    x: &SignalVector<T>,
    groups: &[GroupState<T>],
    lambda: T,
    k: usize,
    hyper: &Hyperparameters<T>,
    options: &RunOptions<T>,
) -> Result<(T, T)> {
    let ctx = GroupCtx::new(spec, x.grid(), x.samples(), groups, lambda, k)?;
    engine::refine_with_ctx(&ctx, spec, x.grid(), &groups[k], hyper, options)
}

/// One prior-update pass (Algorithm-2 style) over group `k`: refresh or
/// drop the active components, then probe the search space for additions.
pub fn update_group_priors<T: RealScalar>(
    spec: &DictionarySpec<T>,
    x: &SignalVector<T>,
    groups: &mut Vec<GroupState<T>>,
    lambda: T,
    k: usize,
    hyper: &Hyperparameters<T>,
) -> Result<()> {
    let mut post = Posterior::build(spec, x.grid(), x.samples(), groups, lambda)?;
    engine::update_group_priors_impl(&mut post, groups, k, spec, hyper)
}

/// Seed a candidate group from the residual's matched-filter peak, grow it
/// with one prior-update pass and accept it iff Δ > 0. Returns the accepted
/// group and its Δ without modifying `groups`.
pub fn search_new_group<T: RealScalar>(
    spec: &DictionarySpec<T>,
    x: &SignalVector<T>,
    groups: &[GroupState<T>],
    lambda: T,
    hyper: &Hyperparameters<T>,
    options: &RunOptions<T>,
) -> Result<Option<(GroupState<T>, T)>> {
    let mut work = groups.to_vec();
    let mut post = Posterior::build(spec, x.grid(), x.samples(), &work, lambda)?;
    let delta =
        engine::search_new_group_impl(&mut post, &mut work, spec, x.grid(), x.samples(), lambda, hyper, options)?;
    Ok(delta.map(|d| (work.pop().expect("accepted group present"), d)))
}

/// Run the full bottom-up estimation schedule on `x`.
pub fn run<T: RealScalar>(
    x: &SignalVector<T>,
    spec: &DictionarySpec<T>,
    hyper: &Hyperparameters<T>,
    options: &RunOptions<T>,
) -> Result<EstimateReport<T>> {
    engine::run(x, spec, hyper, options)
}

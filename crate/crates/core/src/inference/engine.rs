//! Bottom-up estimation schedule.
//!
//! Each outer iteration searches the residual for one new group, runs the
//! per-group prior/parameter updates (twice per iteration for
//! neighborhood-searched variants), then recommits the amplitude posterior
//! and the noise precision. The loop stops when the reconstruction change
//! falls below tolerance and the search added no group.

use crate::dictionary::{fractional_reparametrize, DictionarySpec, Variant};
use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::model::{Diagnostics, EstimateReport, GroupState, ReportedComponent, ReportedGroup};
use crate::scalar::{cast, to_f64, RealScalar};
use crate::signal::{Grid, SignalVector};
use nalgebra::DVector;
use num_complex::Complex;
use std::time::Instant;

use super::ctx::GroupCtx;
use super::posterior::{gamma_from_stats, AtomRef, Posterior};
use super::{reconstruct, update_amplitudes, update_noise_precision, RunOptions};

/// One prior-update pass over group `k`, mutating both the posterior
/// workspace and the group. Active components are visited in ascending `l`
/// first (refresh or drop), then the search space is probed for additions,
/// also ascending; every statistic sees all mutations made so far.
pub(super) fn update_group_priors_impl<T: RealScalar>(
    post: &mut Posterior<'_, T>,
    groups: &mut [GroupState<T>],
    k: usize,
    spec: &DictionarySpec<T>,
    hyper: &Hyperparameters<T>,
) -> Result<()> {
    let active: Vec<i64> = groups[k].active_set().collect();
    for l in active {
        let j = post.find(k, l).expect("posterior out of sync with groups");
        let stats = post.active_stats(j)?;
        match gamma_from_stats(&stats, hyper.chi1) {
            Some(gamma) => {
                post.set_gamma(j, gamma)?;
                groups[k].set_gamma(l, gamma)?;
            }
            None => {
                post.remove(j)?;
                groups[k].remove(l);
            }
        }
    }
    let theta = groups[k].theta;
    for l in spec.search_space(&groups[k]) {
        if groups[k].contains(l) {
            continue;
        }
        let cand = post.candidate_stats(theta, l)?;
        if let Some(gamma) = gamma_from_stats(&cand.stats, hyper.chi1) {
            post.add(AtomRef { group: k, l, theta }, gamma, &cand)?;
            groups[k].set_gamma(l, gamma)?;
        }
    }
    Ok(())
}

/// Seed a candidate group at the residual's matched-filter peak, grow it,
/// and keep it iff Δ > 0. On acceptance the group stays appended to
/// `groups` (and `post`) and its Δ is returned.
pub(super) fn search_new_group_impl<T: RealScalar>(
    post: &mut Posterior<'_, T>,
    groups: &mut Vec<GroupState<T>>,
    spec: &DictionarySpec<T>,
    grid: Grid<T>,
    x: &[Complex<T>],
    lambda: T,
    hyper: &Hyperparameters<T>,
    options: &RunOptions<T>,
) -> Result<Option<T>> {
    let residual = post.residual()?;
    let theta0 = spec.coarse_scan(&residual, spec.seed_component(), options.oversampling, &grid)?;
    groups.push(GroupState::new(theta0));
    let k = groups.len() - 1;
    update_group_priors_impl(post, groups, k, spec, hyper)?;
    let members: Vec<(i64, T)> = groups[k].iter().collect();
    let ctx = GroupCtx::new(spec, grid, x, groups, lambda, k)?;
    let delta = ctx.delta(theta0, &members, hyper)?;
    if delta > T::zero() {
        Ok(Some(delta))
    } else {
        post.remove_group(k)?;
        groups.pop();
        Ok(None)
    }
}

/// Grid-then-golden-section maximization of Δ_k(θ) around the current θ.
pub(super) fn refine_with_ctx<T: RealScalar>(
    ctx: &GroupCtx<'_, T>,
    spec: &DictionarySpec<T>,
    grid: Grid<T>,
    group: &GroupState<T>,
    hyper: &Hyperparameters<T>,
    options: &RunOptions<T>,
) -> Result<(T, T)> {
    let members: Vec<(i64, T)> = group.iter().collect();
    let theta0 = group.theta;
    let d0 = ctx.delta(theta0, &members, hyper)?;
    if members.is_empty() {
        return Ok((theta0, d0));
    }
    let (tmin, tmax) = spec.theta_domain();
    let ls: Vec<i64> = members.iter().map(|&(l, _)| l).collect();
    let res = spec.native_theta_resolution(&ls, &grid);
    let over = options.oversampling.max(1) as i64;
    let step = res / cast::<T>(over as f64);

    let mut best = (theta0, d0);
    for i in -over..=over {
        if i == 0 {
            continue;
        }
        let t = theta0 + step * cast::<T>(i as f64);
        if t < tmin || t > tmax {
            continue;
        }
        let d = ctx.delta(t, &members, hyper)?;
        if d > best.1 {
            best = (t, d);
        }
    }

    // Golden-section around the best grid point, tracking every evaluation
    // so the result can only improve on the grid stage.
    let mut lo = (best.0 - step).max(tmin);
    let mut hi = (best.0 + step).min(tmax);
    let tol = options.theta_refine_rel_tol * best.0.abs().max(cast::<T>(f64::MIN_POSITIVE));
    let inv_phi = cast::<T>(0.618_033_988_749_894_9);
    let mut a = hi - (hi - lo) * inv_phi;
    let mut b = lo + (hi - lo) * inv_phi;
    let mut fa = ctx.delta(a, &members, hyper)?;
    let mut fb = ctx.delta(b, &members, hyper)?;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if fa > best.1 {
            best = (a, fa);
        }
        if fb > best.1 {
            best = (b, fb);
        }
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - (hi - lo) * inv_phi;
            fa = ctx.delta(a, &members, hyper)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + (hi - lo) * inv_phi;
            fb = ctx.delta(b, &members, hyper)?;
        }
    }
    if fa > best.1 {
        best = (a, fa);
    }
    if fb > best.1 {
        best = (b, fb);
    }
    Ok(best)
}

/// Probe components at fractions θ̂/m for m = 2..floor(N·θ̂) against the full
/// model; on the first acceptance re-key the group so the fraction becomes
/// index 1. Returns whether a re-parametrization happened.
fn fractional_search_impl<T: RealScalar>(
    post: &mut Posterior<'_, T>,
    groups: &mut [GroupState<T>],
    k: usize,
    spec: &DictionarySpec<T>,
    grid: Grid<T>,
    hyper: &Hyperparameters<T>,
) -> Result<bool> {
    if groups[k].is_empty() {
        return Ok(false);
    }
    let theta = groups[k].theta;
    let m_max = to_f64(theta * cast::<T>(grid.n as f64)).floor() as u32;
    let (tmin, _) = spec.theta_domain();
    for m in 2..=m_max {
        let frac_theta = theta / cast::<T>(m as f64);
        if frac_theta < tmin {
            break;
        }
        let cand = post.candidate_stats(frac_theta, 1)?;
        if let Some(gamma) = gamma_from_stats(&cand.stats, hyper.chi1) {
            match fractional_reparametrize(spec, &groups[k], m, gamma) {
                Ok(rekeyed) => {
                    groups[k] = rekeyed;
                    return Ok(true);
                }
                // Scaled indices exceed the dictionary range: the fraction
                // cannot be represented, keep searching.
                Err(Error::IndexOutOfRange { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(false)
}

pub(super) fn run<T: RealScalar>(
    x: &SignalVector<T>,
    spec: &DictionarySpec<T>,
    hyper: &Hyperparameters<T>,
    options: &RunOptions<T>,
) -> Result<EstimateReport<T>> {
    let start = Instant::now();
    if !x.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let grid = x.grid();
    let n = x.len();
    let energy = x.energy();
    // Zero signal cannot seed λ̂ = N/‖x‖²; use unit precision, the model
    // stays empty anyway.
    let mut lambda = if energy > T::zero() {
        cast::<T>(n as f64) / energy
    } else {
        T::one()
    };

    let sweeps = options.group_sweeps.unwrap_or(match spec.variant() {
        Variant::Harmonic => 1,
        _ => 2,
    });
    let fractional = options
        .fractional_search
        .unwrap_or(matches!(spec.variant(), Variant::Harmonic));

    let mut groups: Vec<GroupState<T>> = Vec::new();
    let mut post = Posterior::build(spec, grid, x.samples(), &groups, lambda)?;
    let mut x_hat_old: DVector<Complex<T>> = DVector::zeros(n);
    let mut outer = 0;
    let mut converged = false;
    let x_norm = energy.sqrt();
    let change_scale = x_norm.max(cast::<T>(f64::EPSILON));

    while outer < options.max_outer {
        outer += 1;

        let added = search_new_group_impl(
            &mut post, &mut groups, spec, grid, x.samples(), lambda, hyper, options,
        )?
        .is_some();

        for _ in 0..sweeps {
            let mut k = 0;
            while k < groups.len() {
                update_group_priors_impl(&mut post, &mut groups, k, spec, hyper)?;
                if fractional {
                    // Descend fractions until none is accepted, absorbing the
                    // re-keyed stack after every step: a partial descent
                    // would leave sub-harmonic lines for spurious groups.
                    for _ in 0..32 {
                        if !fractional_search_impl(&mut post, &mut groups, k, spec, grid, hyper)? {
                            break;
                        }
                        post = Posterior::build(spec, grid, x.samples(), &groups, lambda)?;
                        update_group_priors_impl(&mut post, &mut groups, k, spec, hyper)?;
                    }
                }
                let ctx = GroupCtx::new(spec, grid, x.samples(), &groups, lambda, k)?;
                let members: Vec<(i64, T)> = groups[k].iter().collect();
                let (theta_best, delta_best) = if options.refine_theta && !members.is_empty() {
                    refine_with_ctx(&ctx, spec, grid, &groups[k], hyper, options)?
                } else {
                    (groups[k].theta, ctx.delta(groups[k].theta, &members, hyper)?)
                };
                if delta_best <= T::zero() {
                    post.remove_group(k)?;
                    groups.remove(k);
                } else {
                    if theta_best != groups[k].theta {
                        groups[k].theta = theta_best;
                        post = Posterior::build(spec, grid, x.samples(), &groups, lambda)?;
                    }
                    k += 1;
                }
            }
        }

        // Committed recompute of (α̂, Ĉ) and λ̂, once per outer iteration.
        let (alpha, cov) = update_amplitudes(spec, x, &groups, lambda)?;
        let x_hat = reconstruct(spec, grid, &groups, &alpha)?;
        match update_noise_precision(spec, x, &groups, &alpha, &cov, hyper) {
            Ok(l) => lambda = l,
            // Exact zero denominator (e.g. zero signal, empty model):
            // keep the previous precision.
            Err(Error::DegenerateNoiselessFit) => {}
            Err(e) => return Err(e),
        }
        post = Posterior::build(spec, grid, x.samples(), &groups, lambda)?;

        let change = (&x_hat - &x_hat_old).norm() / change_scale;
        x_hat_old = x_hat;
        if change < options.tol && !added {
            converged = true;
            break;
        }
    }

    // Final committed state and per-group diagnostics.
    let (alpha, _cov) = update_amplitudes(spec, x, &groups, lambda)?;
    let x_hat = reconstruct(spec, grid, &groups, &alpha)?;
    let residual_norm = x
        .samples()
        .iter()
        .zip(x_hat.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<T>()
        .sqrt();
    let mut group_deltas = Vec::with_capacity(groups.len());
    for k in 0..groups.len() {
        let ctx = GroupCtx::new(spec, grid, x.samples(), &groups, lambda, k)?;
        let members: Vec<(i64, T)> = groups[k].iter().collect();
        group_deltas.push(ctx.delta(groups[k].theta, &members, hyper)?);
    }

    let mut reported = Vec::with_capacity(groups.len());
    let mut j = 0;
    for g in &groups {
        let mut components = Vec::with_capacity(g.len());
        for (l, gamma) in g.iter() {
            components.push(ReportedComponent {
                l,
                gamma,
                amplitude: alpha[j],
            });
            j += 1;
        }
        reported.push(ReportedGroup {
            theta: g.theta,
            components,
        });
    }

    Ok(EstimateReport {
        k_hat: reported.len(),
        groups: reported,
        lambda_hat: lambda,
        x_hat: x_hat.iter().copied().collect(),
        diagnostics: Diagnostics {
            outer_iterations: outer,
            converged,
            final_residual_norm: residual_norm,
            group_deltas,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    })
}

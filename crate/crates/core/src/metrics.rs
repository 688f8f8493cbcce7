//! Evaluation metrics: OSPA, pitch matching, extended-object extent/center
//! estimation with oracle association, and mode reconstruction error.

use crate::error::{Error, Result};
use crate::scalar::{cast, RealScalar};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// OSPA cutoff and order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OspaParams<T: RealScalar> {
    pub cutoff: T,
    pub order: T,
}

impl<T: RealScalar> OspaParams<T> {
    pub fn new(cutoff: T, order: T) -> Result<Self> {
        if !(cutoff > T::zero()) {
            return Err(Error::InvalidArgument("OSPA cutoff must be positive".into()));
        }
        if !(order >= T::one()) {
            return Err(Error::InvalidArgument("OSPA order must be >= 1".into()));
        }
        Ok(Self { cutoff, order })
    }
}

/// Optimal subpattern assignment distance between two 1-D point sets.
///
/// With m = |smaller set| and n = |larger|: the optimal one-to-one
/// assignment of the smaller set over cutoff-truncated distances, plus the
/// cardinality penalty cᵖ(n−m), normalized by n and taken to the 1/p power.
/// Empty vs empty is 0; empty vs nonempty is the cutoff.
pub fn ospa<T: RealScalar>(truth: &[T], estimate: &[T], params: &OspaParams<T>) -> T {
    let (small, large) = if truth.len() <= estimate.len() {
        (truth, estimate)
    } else {
        (estimate, truth)
    };
    let (m, n) = (small.len(), large.len());
    if n == 0 {
        return T::zero();
    }
    if m == 0 {
        return params.cutoff;
    }
    let cost: Vec<Vec<T>> = small
        .iter()
        .map(|&a| {
            large
                .iter()
                .map(|&b| (a - b).abs().min(params.cutoff).powf(params.order))
                .collect()
        })
        .collect();
    let assignment_cost = hungarian_min_cost(&cost);
    let cardinality = params.cutoff.powf(params.order) * cast::<T>((n - m) as f64);
    ((assignment_cost + cardinality) / cast::<T>(n as f64)).powf(T::one() / params.order)
}

/// Minimum-cost assignment of every row to a distinct column (rows ≤ cols)
/// by the Hungarian algorithm with potentials, O(m²n).
pub fn hungarian_min_cost<T: RealScalar>(cost: &[Vec<T>]) -> T {
    let assignment = hungarian_assignment(cost);
    assignment
        .iter()
        .enumerate()
        .map(|(row, &col)| cost[row][col])
        .sum()
}

/// Column assigned to each row in the minimum-cost matching (rows ≤ cols).
pub fn hungarian_assignment<T: RealScalar>(cost: &[Vec<T>]) -> Vec<usize> {
    let m = cost.len();
    if m == 0 {
        return Vec::new();
    }
    let n = cost[0].len();
    assert!(
        m <= n,
        "hungarian_assignment expects at most as many rows as columns"
    );
    let inf = T::max_value().expect("scalar must have a max value");
    // 1-based potentials over rows (u) and columns (v); way[j] is the
    // previous column on the augmenting path to column j.
    let mut u = vec![T::zero(); m + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut assigned_row = vec![0usize; n + 1]; // row occupying column j (1-based)
    let mut way = vec![0usize; n + 1];
    for i in 1..=m {
        assigned_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![usize::MAX; m];
    for j in 1..=n {
        if assigned_row[j] != 0 {
            result[assigned_row[j] - 1] = j - 1;
        }
    }
    result
}

/// Frame-level matching counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchStats {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// One-to-one pitch matching, greedy by ascending relative deviation.
/// A truth pitch matches at most one estimate and vice versa; a pair counts
/// as matched when the estimate deviates no more than `rel_tol` from the
/// truth.
pub fn match_pitches<T: RealScalar>(truth: &[T], estimate: &[T], rel_tol: T) -> MatchStats {
    let mut pairs: Vec<(T, usize, usize)> = Vec::new();
    for (i, &t) in truth.iter().enumerate() {
        for (j, &e) in estimate.iter().enumerate() {
            let dev = (e - t).abs() / t;
            if dev <= rel_tol {
                pairs.push((dev, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut truth_used = vec![false; truth.len()];
    let mut est_used = vec![false; estimate.len()];
    let mut tp = 0;
    for (_, i, j) in pairs {
        if !truth_used[i] && !est_used[j] {
            truth_used[i] = true;
            est_used[j] = true;
            tp += 1;
        }
    }
    MatchStats {
        tp,
        fp: estimate.len() - tp,
        fn_: truth.len() - tp,
    }
}

/// Optimal-assignment variant of [`match_pitches`] (sensitivity checks):
/// maximizes the number of within-tolerance matches, breaking ties toward
/// the smallest total deviation.
pub fn match_pitches_optimal<T: RealScalar>(truth: &[T], estimate: &[T], rel_tol: T) -> MatchStats {
    if truth.is_empty() || estimate.is_empty() {
        return MatchStats {
            tp: 0,
            fp: estimate.len(),
            fn_: truth.len(),
        };
    }
    // A miss costs more than any full set of tolerated matches, so the
    // minimum-cost assignment maximizes the match count first.
    let miss = cast::<T>(1e6);
    let (rows, cols, transposed) = if truth.len() <= estimate.len() {
        (truth, estimate, false)
    } else {
        (estimate, truth, true)
    };
    let cost: Vec<Vec<T>> = rows
        .iter()
        .map(|&a| {
            cols.iter()
                .map(|&b| {
                    let t = if transposed { b } else { a };
                    let e = if transposed { a } else { b };
                    let dev = (e - t).abs() / t;
                    if dev <= rel_tol {
                        dev
                    } else {
                        miss
                    }
                })
                .collect()
        })
        .collect();
    let assignment = hungarian_assignment(&cost);
    let tp = assignment
        .iter()
        .enumerate()
        .filter(|&(r, &c)| cost[r][c] < miss)
        .count();
    MatchStats {
        tp,
        fp: estimate.len() - tp,
        fn_: truth.len() - tp,
    }
}

/// Micro-averaged (accuracy, precision, recall, F1) over frames. Ratios
/// with zero denominators are 0, as is F1 when P + R = 0.
pub fn aggregate_prf<T: RealScalar>(stats: &[MatchStats]) -> (T, T, T, T) {
    let tp: usize = stats.iter().map(|s| s.tp).sum();
    let fp: usize = stats.iter().map(|s| s.fp).sum();
    let fn_: usize = stats.iter().map(|s| s.fn_).sum();
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            T::zero()
        } else {
            cast::<T>(num as f64) / cast::<T>(den as f64)
        }
    };
    let accuracy = ratio(tp, tp + fp + fn_);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > T::zero() {
        cast::<T>(2.0) * precision * recall / (precision + recall)
    } else {
        T::zero()
    };
    (accuracy, precision, recall, f1)
}

/// Extent and power-weighted center of the components falling within the
/// true object region extended by `slack` samples on both sides (oracle
/// association; the estimated grouping is ignored).
pub fn object_extent_center<T: RealScalar>(
    components: &[(T, Complex<T>)],
    true_region: (T, T),
    slack_samples: T,
    ts: T,
) -> Result<(T, T)> {
    let lo = true_region.0 - slack_samples * ts;
    let hi = true_region.1 + slack_samples * ts;
    let associated: Vec<&(T, Complex<T>)> = components
        .iter()
        .filter(|(tau, _)| *tau >= lo && *tau <= hi)
        .collect();
    if associated.is_empty() {
        return Err(Error::EmptyAssociation);
    }
    let mut min = associated[0].0;
    let mut max = associated[0].0;
    let mut power = T::zero();
    let mut weighted = T::zero();
    for &&(tau, amp) in &associated {
        min = min.min(tau);
        max = max.max(tau);
        let p = amp.norm_sqr();
        power += p;
        weighted += p * tau;
    }
    Ok((max - min, weighted / power))
}

/// Extent and center errors with the miss convention: an empty association
/// contributes the full true extent as extent error and the region midpoint
/// as center estimate.
pub fn extent_center_errors<T: RealScalar>(
    estimate: Result<(T, T)>,
    truth: (T, T),
    region: (T, T),
) -> (T, T) {
    match estimate {
        Ok((extent, center)) => ((extent - truth.0).abs(), (center - truth.1).abs()),
        Err(_) => {
            let midpoint = (region.0 + region.1) * cast::<T>(0.5);
            (truth.0, (midpoint - truth.1).abs())
        }
    }
}

/// Relative reconstruction error of one true mode against the closest
/// estimated mode: min_l ‖x − x̂_l‖²/‖x‖². No estimates means error 1 by
/// convention.
pub fn mode_error<T: RealScalar>(true_mode: &[T], estimated_modes: &[Vec<T>]) -> Result<T> {
    let energy: T = true_mode.iter().map(|&v| v * v).sum();
    if !(energy > T::zero()) {
        return Err(Error::ZeroSignal("true mode has zero energy".into()));
    }
    let mut best: Option<T> = None;
    for est in estimated_modes {
        let err: T = true_mode
            .iter()
            .zip(est.iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            / energy;
        best = Some(match best {
            Some(b) => b.min(err),
            None => err,
        });
    }
    Ok(best.unwrap_or_else(T::one))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn params(c: f64, p: f64) -> OspaParams<f64> {
        OspaParams::new(c, p).unwrap()
    }

    #[test]
    fn ospa_identical_sets_is_zero() {
        let p = params(0.02, 1.0);
        assert_abs_diff_eq!(ospa(&[0.05, 0.09], &[0.09, 0.05], &p), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn ospa_cardinality_penalty() {
        let p = params(0.02, 1.0);
        let v = ospa(&[0.05, 0.09], &[0.05], &p);
        assert_abs_diff_eq!(v, 0.01, epsilon = 1e-14);
    }

    #[test]
    fn ospa_truncates_at_cutoff() {
        let p = params(0.02, 1.0);
        assert_abs_diff_eq!(ospa(&[0.05], &[0.50], &p), 0.02, epsilon = 1e-14);
    }

    #[test]
    fn ospa_empty_conventions() {
        let p = params(0.02, 1.0);
        assert_abs_diff_eq!(ospa::<f64>(&[], &[], &p), 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(ospa(&[], &[0.1], &p), 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(ospa(&[0.1], &[], &p), 0.02, epsilon = 1e-15);
    }

    #[test]
    fn ospa_is_symmetric_and_bounded() {
        let p = params(0.05, 2.0);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..200 {
            let na = rng.random_range(0..5);
            let nb = rng.random_range(0..5);
            let a: Vec<f64> = (0..na).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..nb).map(|_| rng.random::<f64>()).collect();
            let d1 = ospa(&a, &b, &p);
            let d2 = ospa(&b, &a, &p);
            assert_abs_diff_eq!(d1, d2, epsilon = 1e-12);
            assert!(d1 >= 0.0 && d1 <= 0.05 + 1e-12);
        }
    }

    /// Brute-force all-permutations assignment for small sets.
    fn ospa_brute(truth: &[f64], estimate: &[f64], p: &OspaParams<f64>) -> f64 {
        let (small, large) = if truth.len() <= estimate.len() {
            (truth, estimate)
        } else {
            (estimate, truth)
        };
        let (m, n) = (small.len(), large.len());
        if n == 0 {
            return 0.0;
        }
        if m == 0 {
            return p.cutoff;
        }
        fn permutations(items: Vec<usize>) -> Vec<Vec<usize>> {
            if items.len() <= 1 {
                return vec![items];
            }
            let mut out = Vec::new();
            for i in 0..items.len() {
                let mut rest = items.clone();
                let head = rest.remove(i);
                for mut tail in permutations(rest) {
                    tail.insert(0, head);
                    out.push(tail);
                }
            }
            out
        }
        let mut best = f64::INFINITY;
        for perm in permutations((0..n).collect()) {
            let cost: f64 = small
                .iter()
                .enumerate()
                .map(|(i, &a)| (a - large[perm[i]]).abs().min(p.cutoff).powf(p.order))
                .sum();
            best = best.min(cost);
        }
        ((best + p.cutoff.powf(p.order) * (n - m) as f64) / n as f64).powf(1.0 / p.order)
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let p = params(0.3, 1.5);
        for _ in 0..100 {
            let na = rng.random_range(0..=5);
            let nb = rng.random_range(0..=5);
            let a: Vec<f64> = (0..na).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..nb).map(|_| rng.random::<f64>()).collect();
            let fast = ospa(&a, &b, &p);
            let brute = ospa_brute(&a, &b, &p);
            assert_abs_diff_eq!(fast, brute, epsilon = 1e-12);
        }
    }

    #[test]
    fn pitch_matching_examples() {
        let s = match_pitches(&[440.0f64], &[450.0], 0.03);
        assert_eq!((s.tp, s.fp, s.fn_), (1, 0, 0));
        let s = match_pitches(&[440.0f64], &[460.0], 0.03);
        assert_eq!((s.tp, s.fp, s.fn_), (0, 1, 1));
        let s = match_pitches::<f64>(&[], &[], 0.03);
        assert_eq!((s.tp, s.fp, s.fn_), (0, 0, 0));
    }

    #[test]
    fn pitch_matching_is_one_to_one() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..100 {
            let nt = rng.random_range(0..6);
            let ne = rng.random_range(0..6);
            let truth: Vec<f64> = (0..nt).map(|_| 100.0 + 900.0 * rng.random::<f64>()).collect();
            let est: Vec<f64> = (0..ne).map(|_| 100.0 + 900.0 * rng.random::<f64>()).collect();
            let s = match_pitches(&truth, &est, 0.03);
            assert!(s.tp <= truth.len().min(est.len()));
            assert_eq!(s.tp + s.fn_, truth.len());
            assert_eq!(s.tp + s.fp, est.len());
            // Optimal matching never finds fewer pairs than greedy.
            let o = match_pitches_optimal(&truth, &est, 0.03);
            assert!(o.tp >= s.tp);
        }
    }

    #[test]
    fn prf_aggregation() {
        let (acc, prec, rec, f1) = aggregate_prf::<f64>(&[MatchStats {
            tp: 3,
            fp: 1,
            fn_: 1,
        }]);
        assert_abs_diff_eq!(acc, 0.6, epsilon = 1e-14);
        assert_abs_diff_eq!(prec, 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(rec, 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(f1, 0.75, epsilon = 1e-14);

        let zeros = aggregate_prf::<f64>(&[MatchStats::default()]);
        assert_eq!(zeros, (0.0, 0.0, 0.0, 0.0));

        let (_, prec, rec, _) = aggregate_prf::<f64>(&[
            MatchStats { tp: 1, fp: 0, fn_: 1 },
            MatchStats { tp: 1, fp: 1, fn_: 0 },
        ]);
        assert_abs_diff_eq!(prec, 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rec, 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn extent_center_two_components() {
        let comps = [
            (32.0f64, Complex::new(1.0, 0.0)),
            (36.0, Complex::new(0.0, 1.0)),
        ];
        let (e, c) = object_extent_center(&comps, (31.0, 37.0), 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(e, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c, 34.0, epsilon = 1e-14);
    }

    #[test]
    fn extent_center_single_and_slack() {
        let comps = [(35.5f64, Complex::new(2.0, 0.0))];
        let (e, c) = object_extent_center(&comps, (31.0, 37.0), 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(e, 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(c, 35.5, epsilon = 1e-14);

        // Component half a sample beyond the region is included with slack 1.
        let comps = [(37.5f64, Complex::new(1.0, 0.0))];
        assert!(object_extent_center(&comps, (31.0, 37.0), 1.0, 1.0).is_ok());
        // ... and excluded with slack 0.
        assert!(object_extent_center(&comps, (31.0, 37.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn extent_center_amplitude_scale_invariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let comps: Vec<(f64, Complex<f64>)> = (0..6)
            .map(|_| {
                (
                    32.0 + 5.0 * rng.random::<f64>(),
                    Complex::new(rng.random::<f64>() + 0.1, rng.random::<f64>()),
                )
            })
            .collect();
        let scaled: Vec<(f64, Complex<f64>)> = comps
            .iter()
            .map(|&(t, a)| (t, a * Complex::new(7.5, 0.0)))
            .collect();
        let (e1, c1) = object_extent_center(&comps, (31.0, 38.0), 1.0, 1.0).unwrap();
        let (e2, c2) = object_extent_center(&scaled, (31.0, 38.0), 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(e1, e2, epsilon = 1e-12);
        assert_abs_diff_eq!(c1, c2, epsilon = 1e-12);
    }

    #[test]
    fn miss_convention_errors() {
        let est: Result<(f64, f64)> = Err(Error::EmptyAssociation);
        let (ee, ce) = extent_center_errors(est, (5.0, 34.8), (32.323, 37.323));
        assert_abs_diff_eq!(ee, 5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ce, (34.823 - 34.8f64).abs(), epsilon = 1e-12);
    }

    #[test]
    fn mode_error_cases() {
        let x = vec![1.0f64, -1.0, 0.5, 2.0];
        assert_abs_diff_eq!(mode_error(&x, &[x.clone()]).unwrap(), 0.0, epsilon = 0.0);
        let zeros = vec![0.0f64; 4];
        assert_abs_diff_eq!(mode_error(&x, &[zeros]).unwrap(), 1.0, epsilon = 1e-14);
        // ‖d‖² = 0.04 ‖x‖² gives exactly 0.04.
        let energy: f64 = x.iter().map(|v| v * v).sum();
        let d_scale = (0.04f64 * energy / 4.0).sqrt();
        let shifted: Vec<f64> = x.iter().map(|v| v + d_scale).collect();
        assert_abs_diff_eq!(mode_error(&x, &[shifted]).unwrap(), 0.04, epsilon = 1e-12);
        // No estimates: error 1 by convention.
        assert_abs_diff_eq!(mode_error(&x, &[]).unwrap(), 1.0, epsilon = 0.0);
        // Zero true mode is rejected.
        assert!(mode_error(&[0.0f64; 4], &[x]).is_err());
    }

    #[test]
    fn ospa_rejects_bad_params() {
        assert!(OspaParams::new(0.0f64, 1.0).is_err());
        assert!(OspaParams::new(0.02f64, 0.5).is_err());
    }
}

//! Model state shared between the inference engine and its callers.

use crate::error::{Error, Result};
use crate::scalar::{to_f64, RealScalar};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One group of spectral lines: the shared parameter θ̂ plus the active
/// component indices with their estimated prior precisions γ̂.
///
/// Components are keyed by their integer index `l`, kept in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupState<T: RealScalar> {
    pub theta: T,
    components: BTreeMap<i64, T>,
}

impl<T: RealScalar> GroupState<T> {
    /// A group with no active components yet (a fresh candidate).
    pub fn new(theta: T) -> Self {
        Self {
            theta,
            components: BTreeMap::new(),
        }
    }

    pub fn with_components(theta: T, components: impl IntoIterator<Item = (i64, T)>) -> Result<Self> {
        let mut g = Self::new(theta);
        for (l, gamma) in components {
            g.set_gamma(l, gamma)?;
        }
        Ok(g)
    }

    /// Active component indices in ascending order.
    pub fn active_set(&self) -> impl Iterator<Item = i64> + '_ {
        self.components.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn contains(&self, l: i64) -> bool {
        self.components.contains_key(&l)
    }

    pub fn gamma(&self, l: i64) -> Option<T> {
        self.components.get(&l).copied()
    }

    /// `(l, γ̂)` pairs in ascending `l`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, T)> + '_ {
        self.components.iter().map(|(&l, &g)| (l, g))
    }

    /// Insert or refresh a component precision. γ̂ must be finite and positive.
    pub fn set_gamma(&mut self, l: i64, gamma: T) -> Result<()> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "component precision must be finite and positive, got {} for l={l}",
                to_f64(gamma)
            )));
        }
        self.components.insert(l, gamma);
        Ok(())
    }

    pub fn remove(&mut self, l: i64) -> Option<T> {
        self.components.remove(&l)
    }
}

/// Full variational state: groups, joint amplitude posterior and noise
/// precision. `alpha_hat` and `cov_hat` are indexed group-major, components
/// ascending within each group, matching the order of `atom_index_map`.
#[derive(Debug, Clone)]
pub struct ModelState<T: RealScalar> {
    pub groups: Vec<GroupState<T>>,
    pub alpha_hat: DVector<Complex<T>>,
    pub cov_hat: DMatrix<Complex<T>>,
    pub lambda_hat: T,
    pub x_hat: DVector<Complex<T>>,
}

impl<T: RealScalar> ModelState<T> {
    pub fn empty(n: usize, lambda_hat: T) -> Self {
        Self {
            groups: Vec::new(),
            alpha_hat: DVector::zeros(0),
            cov_hat: DMatrix::zeros(0, 0),
            lambda_hat,
            x_hat: DVector::zeros(n),
        }
    }

    /// Total number of active atoms Σ_k |Ŝ_k|.
    pub fn active_atom_count(&self) -> usize {
        self.groups.iter().map(|g| g.len()).sum()
    }

    /// Flattened `(group index, component index)` pairs in storage order.
    pub fn atom_index_map(&self) -> Vec<(usize, i64)> {
        let mut map = Vec::with_capacity(self.active_atom_count());
        for (k, g) in self.groups.iter().enumerate() {
            for l in g.active_set() {
                map.push((k, l));
            }
        }
        map
    }

    /// Flattened γ̂ vector aligned with `atom_index_map`.
    pub fn gamma_vector(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.active_atom_count());
        for g in &self.groups {
            for (_, gamma) in g.iter() {
                v.push(gamma);
            }
        }
        v
    }
}

/// One reported component: index, prior precision and posterior-mean amplitude.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportedComponent<T: RealScalar> {
    pub l: i64,
    pub gamma: T,
    pub amplitude: Complex<T>,
}

/// One reported group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportedGroup<T: RealScalar> {
    pub theta: T,
    pub components: Vec<ReportedComponent<T>>,
}

/// Run diagnostics attached to an estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics<T: RealScalar> {
    pub outer_iterations: usize,
    pub converged: bool,
    pub final_residual_norm: T,
    /// Final Δ_k of each retained group, in group order.
    pub group_deltas: Vec<T>,
    pub wall_time_s: f64,
}

/// Final estimate: model order, per-group parameters and amplitudes, noise
/// precision, reconstruction and diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport<T: RealScalar> {
    pub k_hat: usize,
    pub groups: Vec<ReportedGroup<T>>,
    pub lambda_hat: T,
    pub x_hat: Vec<Complex<T>>,
    pub diagnostics: Diagnostics<T>,
}

impl<T: RealScalar> EstimateReport<T> {
    /// Estimated group parameters in group order.
    pub fn thetas(&self) -> Vec<T> {
        self.groups.iter().map(|g| g.theta).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_orders_components_and_validates_gamma() {
        let mut g = GroupState::new(0.1f64);
        g.set_gamma(3, 1.0).unwrap();
        g.set_gamma(1, 2.0).unwrap();
        g.set_gamma(2, 0.5).unwrap();
        assert_eq!(g.active_set().collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(g.set_gamma(4, 0.0).is_err());
        assert!(g.set_gamma(4, -1.0).is_err());
        assert!(g.set_gamma(4, f64::INFINITY).is_err());
    }

    #[test]
    fn flattening_is_group_major() {
        let g1 = GroupState::with_components(0.1f64, [(1, 1.0), (2, 1.0)]).unwrap();
        let g2 = GroupState::with_components(0.2f64, [(5, 1.0)]).unwrap();
        let mut state = ModelState::empty(8, 1.0);
        state.groups = vec![g1, g2];
        assert_eq!(state.active_atom_count(), 3);
        assert_eq!(state.atom_index_map(), vec![(0, 1), (0, 2), (1, 5)]);
    }
}

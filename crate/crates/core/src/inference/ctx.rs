//! Evaluation context for the group acceptance test.
//!
//! Fixes everything outside group k (the k̄ atoms with their precisions)
//! once, so that Δ_k(θ) can be swept over candidate θ values cheaply during
//! refinement. The quadratic term uses u ᴴC_k⁻¹u = λ²vᴴB⁻¹v with
//! B = C_k⁻¹ = λΨ_kᴴ(I − λΨ_k̄C_k̄Ψ_k̄ᴴ)Ψ_k + Γ_k and v = Ψ_kᴴ(I − λΨ_k̄C_k̄Ψ_k̄ᴴ)x,
//! so only one Hermitian solve per θ is needed.

use crate::dictionary::DictionarySpec;
use crate::error::Result;
use crate::hyper::Hyperparameters;
use crate::model::GroupState;
use crate::scalar::RealScalar;
use crate::signal::Grid;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex;

use super::linalg::{hpd_cholesky, log_det};

/// Block statistics of one group: C_k and u over the candidate components.
#[derive(Debug, Clone)]
pub struct GroupStats<T: RealScalar> {
    /// Candidate component indices, ascending.
    pub ls: Vec<i64>,
    /// Hermitian positive-definite covariance block C_k.
    pub c_k: DMatrix<Complex<T>>,
    /// Correlation vector u (same dimension as `ls`).
    pub u_vec: DVector<Complex<T>>,
}

pub(crate) struct GroupCtx<'a, T: RealScalar> {
    spec: &'a DictionarySpec<T>,
    grid: Grid<T>,
    lambda: T,
    /// (θ, l) of every atom outside the group under evaluation.
    others: Vec<(T, i64)>,
    chol_other: Option<Cholesky<Complex<T>, Dyn>>,
    /// p = (I − λΨ_k̄C_k̄Ψ_k̄ᴴ)x.
    proj_x: Vec<Complex<T>>,
}

impl<'a, T: RealScalar> GroupCtx<'a, T> {
    /// Build the context for group `k`, treating all other groups as fixed.
    pub fn new(
        spec: &'a DictionarySpec<T>,
        grid: Grid<T>,
        x: &[Complex<T>],
        groups: &[GroupState<T>],
        lambda: T,
        k: usize,
    ) -> Result<Self> {
        let mut others = Vec::new();
        let mut gammas = Vec::new();
        for (i, g) in groups.iter().enumerate() {
            if i == k {
                continue;
            }
            for (l, gamma) in g.iter() {
                others.push((g.theta, l));
                gammas.push(gamma);
            }
        }
        let m = others.len();
        if m == 0 {
            return Ok(Self {
                spec,
                grid,
                lambda,
                others,
                chol_other: None,
                proj_x: x.to_vec(),
            });
        }
        let lam = Complex::new(lambda, T::zero());
        let mut b = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = spec.inner(others[i].0, others[i].1, others[j].0, others[j].1, &grid) * lam;
                b[(i, j)] = v;
                b[(j, i)] = v.conj();
            }
            b[(i, i)] += Complex::new(gammas[i], T::zero());
        }
        let chol = hpd_cholesky(&b)?;
        // h_k̄ = Ψ_k̄ᴴx, w = C_k̄ h_k̄, p = x − λ Ψ_k̄ w.
        let h = DVector::from_iterator(
            m,
            others
                .iter()
                .map(|&(theta, l)| spec.correlations(theta, &[l], x, &grid)[0]),
        );
        let w = chol.solve(&h);
        let mut proj_x = x.to_vec();
        for (i, &(theta, l)) in others.iter().enumerate() {
            let col = spec.atom(theta, l, &grid)?;
            let coeff = w[i] * lam;
            for (p, c) in proj_x.iter_mut().zip(col.iter()) {
                *p -= c * coeff;
            }
        }
        Ok(Self {
            spec,
            grid,
            lambda,
            others,
            chol_other: Some(chol),
            proj_x,
        })
    }

    /// B = C_k⁻¹ and v = Ψ_kᴴp for the group at candidate θ with the given
    /// (l, γ̂) members.
    fn block(&self, theta: T, members: &[(i64, T)]) -> Result<(DMatrix<Complex<T>>, DVector<Complex<T>>)> {
        let mk = members.len();
        let lam = Complex::new(self.lambda, T::zero());
        let lam2 = Complex::new(self.lambda * self.lambda, T::zero());
        let mut b = DMatrix::zeros(mk, mk);
        for i in 0..mk {
            for j in i..mk {
                let v = self
                    .spec
                    .inner(theta, members[i].0, theta, members[j].0, &self.grid)
                    * lam;
                b[(i, j)] = v;
                b[(j, i)] = v.conj();
            }
            b[(i, i)] += Complex::new(members[i].1, T::zero());
        }
        if let Some(chol) = &self.chol_other {
            let mo = self.others.len();
            let mut cross = DMatrix::zeros(mo, mk);
            for (i, &(ot, ol)) in self.others.iter().enumerate() {
                for (j, &(l, _)) in members.iter().enumerate() {
                    cross[(i, j)] = self.spec.inner(ot, ol, theta, l, &self.grid);
                }
            }
            let solved = chol.solve(&cross);
            let correction = cross.adjoint() * solved * lam2;
            b -= correction;
        }
        let ls: Vec<i64> = members.iter().map(|&(l, _)| l).collect();
        let v = DVector::from_vec(self.spec.correlations(theta, &ls, &self.proj_x, &self.grid));
        Ok((b, v))
    }

    /// Δ_k(θ): the ln Z difference between keeping and removing the group.
    pub fn delta(&self, theta: T, members: &[(i64, T)], hyper: &Hyperparameters<T>) -> Result<T> {
        let mut delta = hyper.zbar_log_odds();
        if members.is_empty() {
            return Ok(delta);
        }
        let (b, v) = self.block(theta, members)?;
        let chol = hpd_cholesky(&b)?;
        let y = chol.solve(&v);
        let quad = (self.lambda * self.lambda) * v.dotc(&y).re;
        delta += quad - log_det(&chol);
        for &(_, gamma) in members {
            delta += hyper.chi0 + gamma.ln();
        }
        Ok(delta)
    }

    /// Block statistics C_k = B⁻¹ and u = λB⁻¹v.
    pub fn stats(&self, theta: T, members: &[(i64, T)]) -> Result<GroupStats<T>> {
        let (b, v) = self.block(theta, members)?;
        let chol = hpd_cholesky(&b)?;
        let c_k = chol.inverse();
        let u_vec = chol.solve(&v) * Complex::new(self.lambda, T::zero());
        Ok(GroupStats {
            ls: members.iter().map(|&(l, _)| l).collect(),
            c_k,
            u_vec,
        })
    }
}

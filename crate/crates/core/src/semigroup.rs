//! Dense evaluation of `S̃(t) = exp(−tP)` with `P = M⁻¹ FormAtilde`, the
//! physical semigroup `e^{tα} S̃(t)`, and operator norms between lumped
//! `L¹`, `L²` and `L∞` spaces.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::assembly::AssembledSystem;
use crate::expm::expm;

pub const DEFAULT_DENSE_CAP: usize = 6000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemigroupError {
    #[error("{n} unknowns exceed the dense cap of {cap}; coarsen the mesh")]
    TooLarge { n: usize, cap: usize },
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("mass and form sizes disagree ({mass} vs {form})")]
    SizeMismatch { mass: usize, form: usize },
    #[error("lumped mass must be positive")]
    NonPositiveMass,
}

pub struct SemigroupEvaluator {
    generator: DMatrix<f64>,
    mass: DVector<f64>,
    alpha: f64,
    cache: Mutex<BTreeMap<u64, Arc<DMatrix<f64>>>>,
}

impl std::fmt::Debug for SemigroupEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SemigroupEvaluator")
            .field("n", &self.mass.len())
            .field("alpha", &self.alpha)
            .finish()
    }
}

/// Evaluator for the primal (`adjoint = false`) or adjoint semigroup.
pub fn build_evaluator(sys: &AssembledSystem, adjoint: bool) -> Result<SemigroupEvaluator, SemigroupError> {
    build_evaluator_with_cap(sys, adjoint, DEFAULT_DENSE_CAP)
}

pub fn build_evaluator_with_cap(
    sys: &AssembledSystem,
    adjoint: bool,
    cap: usize,
) -> Result<SemigroupEvaluator, SemigroupError> {
    let form = if adjoint { &sys.form_a_tilde_adj } else { &sys.form_a_tilde };
    SemigroupEvaluator::from_form(sys.m.clone(), form, sys.alpha, cap)
}

impl SemigroupEvaluator {
    /// `P = diag(mass)⁻¹ form`.
    pub fn from_form(mass: DVector<f64>, form: &DMatrix<f64>, alpha: f64, cap: usize) -> Result<Self, SemigroupError> {
        let n = mass.len();
        if n > cap {
            return Err(SemigroupError::TooLarge { n, cap });
        }
        if form.nrows() != n || form.ncols() != n {
            return Err(SemigroupError::SizeMismatch { mass: n, form: form.nrows() });
        }
        if mass.iter().any(|&m| !(m > 0.0)) {
            return Err(SemigroupError::NonPositiveMass);
        }
        let mut generator = form.clone();
        for (i, mut row) in generator.row_iter_mut().enumerate() {
            row /= mass[i];
        }
        Ok(Self { generator, mass, alpha, cache: Mutex::new(BTreeMap::new()) })
    }

    pub fn n(&self) -> usize {
        self.mass.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn mass(&self) -> &DVector<f64> {
        &self.mass
    }

    /// `exp(−sP)` for any real `s`, uncached.
    pub fn propagator(&self, s: f64) -> DMatrix<f64> {
        expm(&(&self.generator * (-s)))
    }

    /// Cached `S̃(t)`.
    pub fn exponential(&self, t: f64) -> Result<Arc<DMatrix<f64>>, SemigroupError> {
        if !(t >= 0.0) {
            return Err(SemigroupError::NegativeTime(t));
        }
        let key = t.to_bits();
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let s = Arc::new(if t == 0.0 { DMatrix::identity(self.n(), self.n()) } else { self.propagator(t) });
        let mut cache = self.cache.lock().expect("cache lock");
        Ok(Arc::clone(cache.entry(key).or_insert(s)))
    }

    /// Fill the cache for `times` in parallel.
    pub fn precompute(&self, times: &[f64]) -> Result<(), SemigroupError> {
        times.par_iter().try_for_each(|&t| self.exponential(t).map(|_| ()))
    }

    /// `S̃(t)` or, when `shifted`, `e^{tα} S̃(t)`.
    pub fn matrix(&self, t: f64, shifted: bool) -> Result<DMatrix<f64>, SemigroupError> {
        let s = self.exponential(t)?;
        Ok(if shifted { s.as_ref() * (t * self.alpha).exp() } else { s.as_ref().clone() })
    }

    pub fn apply(&self, t: f64, u: &DVector<f64>, shifted: bool) -> Result<DVector<f64>, SemigroupError> {
        let s = self.exponential(t)?;
        let v = s.as_ref() * u;
        Ok(if shifted { v * (t * self.alpha).exp() } else { v })
    }

    fn scale(&self, t: f64, shifted: bool) -> f64 {
        if shifted {
            (t * self.alpha).exp()
        } else {
            1.0
        }
    }

    pub fn norm_2_to_inf(&self, t: f64, shifted: bool) -> Result<f64, SemigroupError> {
        Ok(self.scale(t, shifted) * norm_2_to_inf(self.exponential(t)?.as_ref(), &self.mass))
    }

    pub fn norm_1_to_2(&self, t: f64, shifted: bool) -> Result<f64, SemigroupError> {
        Ok(self.scale(t, shifted) * norm_1_to_2(self.exponential(t)?.as_ref(), &self.mass))
    }

    pub fn norm_inf_to_inf(&self, t: f64, shifted: bool) -> Result<f64, SemigroupError> {
        Ok(self.scale(t, shifted) * norm_inf_to_inf(self.exponential(t)?.as_ref()))
    }

    pub fn norm_1_to_1(&self, t: f64, shifted: bool) -> Result<f64, SemigroupError> {
        Ok(self.scale(t, shifted) * norm_1_to_1(self.exponential(t)?.as_ref(), &self.mass))
    }

    pub fn norm_2_to_2(&self, t: f64, shifted: bool) -> Result<f64, SemigroupError> {
        Ok(self.scale(t, shifted) * norm_2_to_2(self.exponential(t)?.as_ref(), &self.mass))
    }

    pub fn min_entry(&self, t: f64) -> Result<f64, SemigroupError> {
        Ok(self.exponential(t)?.min())
    }

    /// `λ (λ + P)⁻¹`.
    pub fn resolvent(&self, lambda: f64) -> DMatrix<f64> {
        let n = self.n();
        let mut a = &self.generator + DMatrix::identity(n, n) * lambda;
        a = a.try_inverse().expect("λ + P is invertible for λ > 0 and accretive P");
        a * lambda
    }

    /// `‖S̃(t + s) − S̃(t) S̃(s)‖₁ / ‖S̃(t + s)‖₁`.
    pub fn semigroup_law_defect(&self, t: f64, s: f64) -> Result<f64, SemigroupError> {
        let ts = self.exponential(t + s)?;
        let prod = self.exponential(t)?.as_ref() * self.exponential(s)?.as_ref();
        Ok(crate::expm::norm_1(&(ts.as_ref() - prod)) / crate::expm::norm_1(&ts))
    }

    /// `‖(I − S̃(h)) / h − P‖₁`.
    pub fn generator_error(&self, h: f64) -> f64 {
        let n = self.n();
        let approx = (DMatrix::identity(n, n) - self.propagator(h)) / h;
        crate::expm::norm_1(&(approx - &self.generator))
    }

    /// Largest relative mismatch of `⟨S u, v⟩_M` against `⟨u, S* v⟩_M` for the
    /// given pairs.
    pub fn pairing_defect(
        &self,
        adjoint: &SemigroupEvaluator,
        t: f64,
        pairs: &[(DVector<f64>, DVector<f64>)],
    ) -> Result<f64, SemigroupError> {
        let s = self.exponential(t)?;
        let sa = adjoint.exponential(t)?;
        let mut worst = 0.0f64;
        for (u, v) in pairs {
            let lhs = (s.as_ref() * u).component_mul(&self.mass).dot(v);
            let rhs = u.component_mul(&self.mass).dot(&(sa.as_ref() * v));
            let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
            worst = worst.max((lhs - rhs).abs() / scale);
        }
        Ok(worst)
    }
}

/// `max_i sqrt(Σ_j S_ij² / M_jj)`.
pub fn norm_2_to_inf(s: &DMatrix<f64>, m: &DVector<f64>) -> f64 {
    let mut best = 0.0f64;
    for i in 0..s.nrows() {
        let mut acc = 0.0;
        for j in 0..s.ncols() {
            acc += s[(i, j)] * s[(i, j)] / m[j];
        }
        best = best.max(acc);
    }
    best.sqrt()
}

/// `max_j ‖S e_j‖_{L²} / M_jj`.
pub fn norm_1_to_2(s: &DMatrix<f64>, m: &DVector<f64>) -> f64 {
    let mut best = 0.0f64;
    for (j, col) in s.column_iter().enumerate() {
        let l2 = col.iter().zip(m.iter()).map(|(x, w)| w * x * x).sum::<f64>().sqrt();
        best = best.max(l2 / m[j]);
    }
    best
}

pub fn norm_inf_to_inf(s: &DMatrix<f64>) -> f64 {
    crate::assembly::matrix_norm_inf(s)
}

/// `max_j Σ_i M_ii |S_ij| / M_jj`.
pub fn norm_1_to_1(s: &DMatrix<f64>, m: &DVector<f64>) -> f64 {
    let mut best = 0.0f64;
    for (j, col) in s.column_iter().enumerate() {
        let l1 = col.iter().zip(m.iter()).map(|(x, w)| w * x.abs()).sum::<f64>();
        best = best.max(l1 / m[j]);
    }
    best
}

/// `‖M^{1/2} S M^{-1/2}‖₂`.
pub fn norm_2_to_2(s: &DMatrix<f64>, m: &DVector<f64>) -> f64 {
    let w = weighted(s, m);
    (w.transpose() * &w).symmetric_eigenvalues().max().max(0.0).sqrt()
}

fn weighted(s: &DMatrix<f64>, m: &DVector<f64>) -> DMatrix<f64> {
    let sq = m.map(f64::sqrt);
    DMatrix::from_fn(s.nrows(), s.ncols(), |i, j| sq[i] * s[(i, j)] / sq[j])
}

/// `M⁻¹ Sᵀ M`, the adjoint with respect to the lumped inner product.
pub fn mass_adjoint(s: &DMatrix<f64>, m: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(s.ncols(), s.nrows(), |i, j| s[(j, i)] * m[j] / m[i])
}

/// Geometric grid `t_max · ratio^k`, `k = 0..count`, returned in increasing
/// order.
pub fn geometric_grid(t_max: f64, ratio: f64, count: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..count).map(|k| t_max * ratio.powi(k as i32)).collect();
    g.reverse();
    g
}

pub fn default_grid() -> Vec<f64> {
    geometric_grid(1.0, std::f64::consts::FRAC_1_SQRT_2, 24)
}

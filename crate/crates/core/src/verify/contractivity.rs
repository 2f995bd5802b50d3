//! L∞-contractivity via the truncation criterion, and positivity of the
//! semigroup generated with boundary operator `‖B̄‖_∞ − B̄`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{smooth_sample, VerifyError, M_MATRIX_TOL};
use crate::assembly::{matrix_norm_inf, AssembledSystem};
use crate::coefficients::BoundaryOperatorSpec;
use crate::mesh::Mesh;
use crate::semigroup::SemigroupEvaluator;
use crate::status::Status;

pub const OUHABAZ_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OuhabazReport {
    pub status: Status,
    pub samples: usize,
    pub seed: u64,
    /// Smallest `zᵀ F w / scale` for the boundary operator `‖B̄‖_∞ + B̄`.
    pub min_plus: f64,
    /// Same for `‖B̄‖_∞ − B̄`.
    pub min_minus: f64,
}

/// `w = (1 ∧ |u|) sign u`, `z = (|u| − 1)⁺ sign u`.
pub fn truncate(u: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let w = u.map(|x| x.clamp(-1.0, 1.0));
    let z = u - &w;
    (w, z)
}

/// `zᵀ F w` normalised by `‖F‖_∞ ‖w‖ ‖z‖` (zero when `z = 0`).
pub fn criterion_value(form: &DMatrix<f64>, form_norm: f64, u: &DVector<f64>) -> f64 {
    let (w, z) = truncate(u);
    let scale = form_norm * w.norm() * z.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (form * &w).dot(&z) / scale
}

pub fn check_ouhabaz_contractivity_criterion(
    mesh: &Mesh,
    sys: &AssembledSystem,
    spec: &BoundaryOperatorSpec,
    samples: usize,
    seed: u64,
) -> Result<OuhabazReport, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plus = sys.form_tilde_for(&spec.shifted_bar(1.0))?;
    let minus = sys.form_tilde_for(&spec.shifted_bar(-1.0))?;
    let (np, nm) = (matrix_norm_inf(&plus), matrix_norm_inf(&minus));
    let mut min_plus = f64::INFINITY;
    let mut min_minus = f64::INFINITY;
    for _ in 0..samples {
        let f = smooth_sample(mesh, &mut rng);
        // Scale so the peak lands in (1.2, 3): part of the field is truncated.
        let u = &f * (rng.gen_range(1.2..3.0) / f.amax());
        min_plus = min_plus.min(criterion_value(&plus, np, &u));
        min_minus = min_minus.min(criterion_value(&minus, nm, &u));
    }
    let ok = min_plus >= -OUHABAZ_TOL && min_minus >= -OUHABAZ_TOL;
    let status = gate(sys, ok);
    Ok(OuhabazReport { status, samples, seed, min_plus, min_minus })
}

fn gate(sys: &AssembledSystem, ok: bool) -> Status {
    if !sys.admissibility.admissible {
        Status::HypothesisUnmet
    } else if ok {
        Status::Pass
    } else if sys.stiffness_offdiag_max() > M_MATRIX_TOL {
        Status::DiscretizationLimited
    } else {
        Status::Fail
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub status: Status,
    pub times: Vec<f64>,
    pub min_entries: Vec<f64>,
}

/// `bar` must be built from the system with boundary operator `‖B̄‖_∞ − B̄`.
pub fn check_positivity(
    sys: &AssembledSystem,
    bar: &SemigroupEvaluator,
    times: &[f64],
) -> Result<PositivityReport, VerifyError> {
    bar.precompute(times)?;
    let min_entries = times.iter().map(|&t| bar.min_entry(t)).collect::<Result<Vec<_>, _>>()?;
    let ok = min_entries.iter().all(|&m| m >= -POSITIVITY_TOL);
    Ok(PositivityReport { status: gate(sys, ok), times: times.to_vec(), min_entries })
}

//! Domination `|S_B(t) u| ≤ S_bar(t) |u|` of the semigroup with boundary
//! operator `B` by the one with `‖B̄‖_∞ − B̄`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{random_signed, VerifyError};
use crate::assembly::AssembledSystem;
use crate::coefficients::BoundaryOperatorSpec;
use crate::semigroup::SemigroupEvaluator;
use crate::status::Status;

pub const DOMINATION_TOL: f64 = 1e-8;
pub const FORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    pub status: Status,
    pub times: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Max over times and samples of `max_i (|S_B u|_i − (S_bar |u|)_i)⁺ / ‖u‖_∞`.
    pub max_violation: f64,
    /// Per-time maxima of the same quantity.
    pub violations: Vec<f64>,
    /// Smallest `Re ã(B)(u, v) − ã(‖B̄‖_∞ − B̄)(|u|, |v|)` over sampled pairs
    /// with `u v ≥ 0`, relative to `‖F‖_∞ ‖u‖ ‖v‖`.
    pub form_min: f64,
}

/// Largest relative excess of `|S u|` over `T |u|` across `us`.
pub fn domination_violation(s: &DMatrix<f64>, t: &DMatrix<f64>, us: &[DVector<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for u in us {
        let lhs = (s * u).abs();
        let rhs = t * u.abs();
        let excess = lhs.iter().zip(rhs.iter()).map(|(l, r)| l - r).fold(0.0f64, f64::max);
        worst = worst.max(excess / u.amax());
    }
    worst
}

/// Runs on the unshifted semigroups; the common factor `e^{tα}` cancels.
pub fn check_domination(
    sys: &AssembledSystem,
    spec: &BoundaryOperatorSpec,
    eval_b: &SemigroupEvaluator,
    eval_bar: &SemigroupEvaluator,
    times: &[f64],
    samples: usize,
    seed: u64,
) -> Result<DominationReport, VerifyError> {
    let n = sys.num_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let us: Vec<DVector<f64>> = (0..samples).map(|_| random_signed(n, &mut rng)).collect();
    eval_b.precompute(times)?;
    eval_bar.precompute(times)?;
    let mut violations = Vec::with_capacity(times.len());
    for &t in times {
        let s = eval_b.exponential(t)?;
        let b = eval_bar.exponential(t)?;
        violations.push(domination_violation(&s, &b, &us));
    }
    let max_violation = violations.iter().copied().fold(0.0, f64::max);

    let f_b = &sys.form_a_tilde;
    let f_bar = sys.form_tilde_for(&spec.shifted_bar(-1.0))?;
    let scale = crate::assembly::matrix_norm_inf(f_b).max(crate::assembly::matrix_norm_inf(&f_bar));
    let mut form_min = f64::INFINITY;
    for k in 0..100 {
        let u = random_signed(n, &mut rng);
        // v shares the sign pattern of u, so u v ≥ 0 componentwise. Every
        // other pair is nonnegative, where the gradient parts cancel and only
        // the boundary terms are compared.
        let u = if k % 2 == 0 { u } else { u.abs() };
        let v = u.zip_map(&random_signed(n, &mut rng), |a, b| a.signum() * b.abs());
        let lhs = (f_b * &u).dot(&v);
        let rhs = (&f_bar * u.abs()).dot(&v.abs());
        form_min = form_min.min((lhs - rhs) / (scale * u.norm() * v.norm()));
    }

    let ok = max_violation <= DOMINATION_TOL && form_min >= -FORM_TOL;
    let status = if !sys.admissibility.admissible {
        Status::HypothesisUnmet
    } else if ok {
        Status::Pass
    } else if sys.stiffness_offdiag_max() > super::M_MATRIX_TOL {
        Status::DiscretizationLimited
    } else {
        Status::Fail
    };
    Ok(DominationReport {
        status,
        times: times.to_vec(),
        samples,
        seed,
        max_violation,
        violations,
        form_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_system;
    use crate::coefficients::{build_boundary_operator, BoundaryRepr, CoefficientField, KernelShape};
    use crate::mesh::build_box_mesh;
    use crate::semigroup::build_evaluator;

    #[test]
    fn identical_operators_on_nonnegative_data() {
        let mesh = build_box_mesh(&[1.0, 1.0], &[3, 3]).unwrap();
        let field = CoefficientField::isotropic(&mesh, 1.0).unwrap();
        let zero = build_boundary_operator(BoundaryRepr::Zero, &mesh).unwrap();
        let sys = assemble_system(&mesh, &field, &zero, 1.0).unwrap();
        let e = build_evaluator(&sys, false).unwrap();
        let s = e.exponential(0.1).unwrap();
        let u = DVector::from_fn(sys.num_vertices(), |i, _| (i % 3) as f64);
        assert_eq!(domination_violation(&s, &s, &[u]), 0.0);
    }

    /// `S_{‖B̄‖∞ + B}` is dominated by `S_{‖B̄‖∞ − B̄}` and `S_B` by `S_{−B̄}`:
    /// in both pairs the dominating form has the smaller boundary part.
    #[test]
    fn reordered_pairs_are_dominated() {
        let mesh = build_box_mesh(&[1.0, 1.0], &[4, 4]).unwrap();
        let field = CoefficientField::isotropic(&mesh, 2.0).unwrap();
        let kernel = KernelShape::Cosine.sample(&mesh, -0.05);
        let spec = build_boundary_operator(BoundaryRepr::Kernel(kernel), &mesh).unwrap();
        let sys = assemble_system(&mesh, &field, &spec, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let us: Vec<_> = (0..20).map(|_| random_signed(sys.num_vertices(), &mut rng)).collect();
        let pairs = [(spec.shifted_bar(1.0), spec.shifted_bar(-1.0)), (spec.clone(), spec.negated_bar())];
        for (small, big) in pairs {
            let a = build_evaluator(&sys.with_boundary(&mesh, &small).unwrap(), false).unwrap();
            let b = build_evaluator(&sys.with_boundary(&mesh, &big).unwrap(), false).unwrap();
            for t in [0.01, 0.1, 1.0] {
                let v = domination_violation(&a.exponential(t).unwrap(), &b.exponential(t).unwrap(), &us);
                assert!(v <= 1e-10, "t = {t}: {v}");
            }
        }
    }
}

//! Eventual positivity `e^{-tL(B)} u ≥ δ ∫u` for `u ≥ 0` and `t ≥ t0`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{random_nonnegative, VerifyError};
use crate::assembly::AssembledSystem;
use crate::coefficients::BoundaryOperatorSpec;
use crate::semigroup::SemigroupEvaluator;
use crate::status::Status;

pub const HYPOTHESIS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EventualPositivityReport {
    pub status: Status,
    pub hypothesis_ok: bool,
    /// `λ_min(sym(Bw + Bwᵀ))`.
    pub sym_min_eigenvalue: f64,
    /// `‖B 1‖_∞`.
    pub constant_defect: f64,
    pub times: Vec<f64>,
    /// `min over samples of min_i (S(t)u)_i / ∫u` per time.
    pub ratios: Vec<f64>,
    pub t0: Option<f64>,
    pub delta: Option<f64>,
    pub samples: usize,
    pub seed: u64,
}

/// `(λ_min(sym(Bw + Bwᵀ)), ‖B 1‖_∞)`.
pub fn hypothesis_values(sys: &AssembledSystem, spec: &BoundaryOperatorSpec) -> (f64, f64) {
    let s = &sys.bw + sys.bw.transpose();
    let lmin = if s.is_empty() { 0.0 } else { s.symmetric_eigenvalues().min() };
    let ones = DVector::from_element(spec.num_boundary(), 1.0);
    let defect = if spec.num_boundary() == 0 { 0.0 } else { spec.apply(&ones).amax() };
    (lmin, defect)
}

/// Nonnegative samples: random fields and single-vertex bumps.
pub fn nonnegative_samples(n: usize, samples: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    (0..samples)
        .map(|k| {
            if k % 2 == 0 {
                random_nonnegative(n, rng)
            } else {
                let mut u = DVector::zeros(n);
                u[rng.gen_range(0..n)] = 1.0;
                u
            }
        })
        .collect()
}

/// `min over us of min_i (e^{-tL} u)_i / ∫u`.
pub fn positivity_ratio(
    sys: &AssembledSystem,
    eval: &SemigroupEvaluator,
    t: f64,
    us: &[DVector<f64>],
) -> Result<f64, VerifyError> {
    let mut worst = f64::INFINITY;
    for u in us {
        let v = eval.apply(t, u, true)?;
        worst = worst.min(v.min() / sys.integral(u));
    }
    Ok(worst)
}

pub fn check_eventual_positivity(
    sys: &AssembledSystem,
    spec: &BoundaryOperatorSpec,
    eval: &SemigroupEvaluator,
    times: &[f64],
    samples: usize,
    seed: u64,
) -> Result<EventualPositivityReport, VerifyError> {
    let (sym_min_eigenvalue, constant_defect) = hypothesis_values(sys, spec);
    let hypothesis_ok = sym_min_eigenvalue >= -HYPOTHESIS_TOL && constant_defect <= HYPOTHESIS_TOL;
    let mut report = EventualPositivityReport {
        status: Status::HypothesisUnmet,
        hypothesis_ok,
        sym_min_eigenvalue,
        constant_defect,
        times: times.to_vec(),
        ratios: Vec::new(),
        t0: None,
        delta: None,
        samples,
        seed,
    };
    if !hypothesis_ok {
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let us = nonnegative_samples(sys.num_vertices(), samples, &mut rng);
    eval.precompute(times)?;
    let ratios = times.iter().map(|&t| positivity_ratio(sys, eval, t, &us)).collect::<Result<Vec<_>, _>>()?;
    // First index after which every ratio is positive.
    let start = ratios.iter().rposition(|&r| !(r > 0.0)).map_or(0, |k| k + 1);
    if start < ratios.len() {
        report.t0 = Some(times[start]);
        report.delta = Some(ratios[start..].iter().copied().fold(f64::INFINITY, f64::min));
    }
    report.status = Status::from_bool(report.t0.is_some());
    report.ratios = ratios;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_system;
    use crate::coefficients::{build_boundary_operator, BoundaryRepr, CoefficientField};
    use crate::mesh::build_box_mesh;
    use crate::semigroup::build_evaluator;

    #[test]
    fn neumann_interval_is_positive_with_mean_limit() {
        let mesh = build_box_mesh(&[2.0], &[8]).unwrap();
        let field = CoefficientField::isotropic(&mesh, 1.0).unwrap();
        let zero = build_boundary_operator(BoundaryRepr::Zero, &mesh).unwrap();
        let sys = assemble_system(&mesh, &field, &zero, 1.0).unwrap();
        let eval = build_evaluator(&sys, false).unwrap();
        let rep = check_eventual_positivity(&sys, &zero, &eval, &[0.1, 1.0, 10.0], 6, 3).unwrap();
        assert_eq!(rep.status, Status::Pass);
        assert_eq!(rep.t0, Some(0.1));
        assert!(rep.delta.unwrap() > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let us = nonnegative_samples(sys.num_vertices(), 4, &mut rng);
        let r = positivity_ratio(&sys, &eval, 60.0, &us).unwrap();
        assert!((r - 0.5).abs() < 1e-6);
    }

    #[test]
    fn robin_operator_fails_hypothesis() {
        let mesh = build_box_mesh(&[1.0], &[4]).unwrap();
        let field = CoefficientField::isotropic(&mesh, 1.0).unwrap();
        let spec = build_boundary_operator(BoundaryRepr::Multiplication(DVector::from_element(2, 0.3)), &mesh).unwrap();
        let sys = assemble_system(&mesh, &field, &spec, 1.0).unwrap();
        let eval = build_evaluator(&sys, false).unwrap();
        let rep = check_eventual_positivity(&sys, &spec, &eval, &[1.0], 4, 0).unwrap();
        assert!(!rep.hypothesis_ok);
        assert_eq!(rep.status, Status::HypothesisUnmet);
        assert!(rep.t0.is_none());
    }
}

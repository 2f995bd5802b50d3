//! Checks of the inequality chain: Nash, L∞ contractivity, positivity,
//! domination, ultracontractive decay and eventual positivity.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::mesh::Mesh;
use crate::semigroup::SemigroupError;

pub mod contractivity;
pub mod domination;
pub mod eventual;
pub mod nash;
pub mod report;
pub mod ultra;

pub use contractivity::{check_ouhabaz_contractivity_criterion, check_positivity, OuhabazReport, PositivityReport};
pub use domination::{check_domination, domination_violation, DominationReport};
pub use eventual::{check_eventual_positivity, EventualPositivityReport};
pub use nash::{check_nash, NashReport};
pub use report::{Report, TimeSeries, Value};
pub use ultra::{check_lemma_decay, check_ode_mechanism, fit_curve, fit_ultracontractivity, LemmaDecayReport, OdeReport, UltracontractivityReport};

/// Positive off-diagonal stiffness entries above this make a run
/// discretization-limited for sign-sensitive checks.
pub const M_MATRIX_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("dimension {0} is outside the hypothesis d > 2; pass the low-dimension override to run anyway")]
    OutOfHypothesis(usize),
    #[error("only {got} usable grid points for the decay fit, need at least 4")]
    TooFewPoints { got: usize },
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

/// Multi-indices `k ∈ {0..=kmax}^d`, ordered by total degree then
/// lexicographically.
pub fn cosine_modes(dim: usize, kmax: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| (0..=kmax).map(move |k| {
                let mut q = p.clone();
                q.push(k);
                q
            }))
            .collect();
    }
    out.sort_by_key(|k| (k.iter().sum::<usize>(), k.clone()));
    out
}

/// Nodal interpolant of `Π_a cos(π k_a x_a)`.
pub fn cosine_mode(mesh: &Mesh, k: &[usize]) -> DVector<f64> {
    DVector::from_fn(mesh.num_vertices(), |i, _| {
        mesh.vertex(i).iter().zip(k).map(|(x, &ka)| (PI * ka as f64 * x).cos()).product()
    })
}

/// Random smooth field: a few tensor cosines with random weights plus a
/// random offset.
pub fn smooth_sample(mesh: &Mesh, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let modes = cosine_modes(mesh.dim(), 2);
    let mut u = DVector::from_element(mesh.num_vertices(), rng.gen_range(-1.0..1.0));
    for k in modes.iter().skip(1).take(8) {
        u += cosine_mode(mesh, k) * rng.gen_range(-1.0..1.0);
    }
    u
}

pub fn random_signed(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_nonnegative(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(0.0..1.0))
}

/// Centred log-log slopes of `y` against `t` (one-sided at the ends).
pub fn local_slopes(t: &[f64], y: &[f64]) -> Vec<f64> {
    let lt: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|x| x.ln()).collect();
    let n = t.len();
    (0..n)
        .map(|k| {
            if n < 2 {
                0.0
            } else if k == 0 {
                (ly[1] - ly[0]) / (lt[1] - lt[0])
            } else if k == n - 1 {
                (ly[n - 1] - ly[n - 2]) / (lt[n - 1] - lt[n - 2])
            } else {
                (ly[k + 1] - ly[k - 1]) / (lt[k + 1] - lt[k - 1])
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_box_mesh;

    #[test]
    fn modes_start_with_constant() {
        let m = cosine_modes(3, 2);
        assert_eq!(m.len(), 27);
        assert_eq!(m[0], vec![0, 0, 0]);
        assert_eq!(m[1..4], [vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]);
    }

    #[test]
    fn slopes_of_power_law() {
        let t: Vec<f64> = (0..6).map(|k| 2f64.powi(-k)).collect();
        let y: Vec<f64> = t.iter().map(|x| 3.0 * x.powf(-0.75)).collect();
        for s in local_slopes(&t, &y) {
            assert!((s + 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_mode_values() {
        let mesh = build_box_mesh(&[1.0, 1.0], &[2, 2]).unwrap();
        let u = cosine_mode(&mesh, &[1, 0]);
        assert!((u[0] - 1.0).abs() < 1e-15);
        assert!(u[1].abs() < 1e-15);
        assert!((u[2] + 1.0).abs() < 1e-15);
    }
}

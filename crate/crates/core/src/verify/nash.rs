//! Nash inequality in the form `‖u‖^{2+4/d} ≤ C ‖u‖_1^{4/d} ‖u‖²_{H¹}`.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{cosine_mode, cosine_modes, random_signed, VerifyError};
use crate::assembly::AssembledSystem;
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq)]
pub struct NashReport {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub max_ratio: f64,
    /// Lower bound for the constant; equal to `max_ratio`.
    pub implied_constant: f64,
    /// `‖∇u‖² ` fails to control a constant function.
    pub gradient_only_violation: bool,
    pub gradient_only_lhs: f64,
    pub gradient_only_rhs: f64,
    pub ratios: Vec<f64>,
    /// False when run below `d = 3` via the override.
    pub in_hypothesis: bool,
}

/// `(‖u‖^{2+4/d}, ‖u‖_1^{4/d} ‖u‖²_{H¹})` with lumped norms.
pub fn nash_sides(sys: &AssembledSystem, u: &DVector<f64>) -> (f64, f64) {
    let d = sys.dim as f64;
    let l2 = sys.l2_norm(u);
    let l1 = sys.l1_norm(u);
    let h1 = sys.h1_norm(u);
    (l2.powf(2.0 + 4.0 / d), l1.powf(4.0 / d) * h1 * h1)
}

pub fn nash_ratio(sys: &AssembledSystem, u: &DVector<f64>) -> Option<f64> {
    let (lhs, rhs) = nash_sides(sys, u);
    (rhs > 0.0).then(|| lhs / rhs)
}

/// Samples are the constant, the first ten nonconstant tensor cosines, then
/// random nodal vectors up to `samples` in total.
pub fn check_nash(
    mesh: &Mesh,
    sys: &AssembledSystem,
    samples: usize,
    seed: u64,
    allow_low_dim: bool,
) -> Result<NashReport, VerifyError> {
    let d = mesh.dim();
    if d <= 2 && !allow_low_dim {
        return Err(VerifyError::OutOfHypothesis(d));
    }
    let n = mesh.num_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vectors = vec![DVector::from_element(n, 1.0)];
    vectors.extend(cosine_modes(d, 3).iter().skip(1).take(10).map(|k| cosine_mode(mesh, k)));
    while vectors.len() < samples {
        vectors.push(random_signed(n, &mut rng));
    }
    vectors.truncate(samples.max(1));

    let ratios: Vec<f64> = vectors.iter().filter_map(|u| nash_ratio(sys, u)).collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);

    let ones = DVector::from_element(n, 1.0);
    let gradient_only_lhs = sys.l2_norm(&ones).powf(2.0 + 4.0 / d as f64);
    let gradient_only_rhs = sys.l1_norm(&ones).powf(4.0 / d as f64) * (&sys.k_id * &ones).dot(&ones);
    Ok(NashReport {
        dim: d,
        samples: ratios.len(),
        seed,
        max_ratio,
        implied_constant: max_ratio,
        gradient_only_violation: gradient_only_lhs > gradient_only_rhs,
        gradient_only_lhs,
        gradient_only_rhs,
        ratios,
        in_hypothesis: d > 2,
    })
}

//! Ultracontractive decay `‖e^{-tL}‖_{2→∞} ≤ C e^{tα} t^{slope}` and the
//! L¹ → L² smoothing estimate behind it.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{local_slopes, random_signed, VerifyError};
use crate::assembly::AssembledSystem;
use crate::semigroup::SemigroupEvaluator;
use crate::status::Status;

/// Local slopes above this (in absolute value) count as decaying.
pub const PLATEAU_SLOPE: f64 = 0.05;
pub const BOUND_SLACK: f64 = 1.05;
pub const ODE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct UltracontractivityReport {
    pub times: Vec<f64>,
    /// `‖e^{-tL(B)}‖_{2→∞}` on every grid time.
    pub raw: Vec<f64>,
    /// `raw · e^{−tα}`.
    pub norms: Vec<f64>,
    pub local_slopes: Vec<f64>,
    /// Indices into `times` used by the fit.
    pub window: Vec<usize>,
    pub fitted_slope: f64,
    pub fitted_c: f64,
    pub mu: f64,
    /// `max g(t) / (C t^slope)` over the window.
    pub bound_ratio: f64,
    /// Mesh-size floor `h²` below which times are excluded.
    pub t_floor: f64,
}

impl UltracontractivityReport {
    pub fn slope_in(&self, lo: f64, hi: f64) -> bool {
        (lo..=hi).contains(&self.fitted_slope)
    }

    pub fn bound_holds(&self) -> bool {
        self.bound_ratio <= BOUND_SLACK
    }
}

/// Fit `log g = log C + slope log t` on the decaying window.
///
/// The window starts at the smallest grid time `≥ t_floor` and extends
/// upward while the local slope of `raw` stays below `−PLATEAU_SLOPE`.
pub fn fit_curve(times: &[f64], raw: &[f64], alpha: f64, t_floor: f64) -> Result<UltracontractivityReport, VerifyError> {
    let norms: Vec<f64> = times.iter().zip(raw).map(|(t, r)| r * (-t * alpha).exp()).collect();
    let slopes = local_slopes(times, raw);
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let window: Vec<usize> = order
        .into_iter()
        .filter(|&k| times[k] >= t_floor)
        .take_while(|&k| slopes[k] < -PLATEAU_SLOPE)
        .collect();
    if window.len() < 4 {
        return Err(VerifyError::TooFewPoints { got: window.len() });
    }
    let xs: Vec<f64> = window.iter().map(|&k| times[k].ln()).collect();
    let ys: Vec<f64> = window.iter().map(|&k| norms[k].ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let fitted_c = intercept.exp();
    let bound_ratio = window
        .iter()
        .map(|&k| norms[k] / (fitted_c * times[k].powf(slope)))
        .fold(0.0, f64::max);
    Ok(UltracontractivityReport {
        times: times.to_vec(),
        raw: raw.to_vec(),
        norms,
        local_slopes: slopes,
        window,
        fitted_slope: slope,
        fitted_c,
        mu: -4.0 * slope,
        bound_ratio,
        t_floor,
    })
}

/// `h` is the mesh size (largest cell diameter).
pub fn fit_ultracontractivity(
    eval: &SemigroupEvaluator,
    times: &[f64],
    h: f64,
) -> Result<UltracontractivityReport, VerifyError> {
    eval.precompute(times)?;
    let raw = times.iter().map(|&t| eval.norm_2_to_inf(t, true)).collect::<Result<Vec<_>, _>>()?;
    fit_curve(times, &raw, eval.alpha(), h * h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaDecayReport {
    pub status: Status,
    pub constant: f64,
    /// Max over window times and samples of `‖S̃*(t)u‖ / ((dC/4)^{d/4} t^{−d/4} ‖u‖₁)`.
    pub max_ratio: f64,
    /// Same with the exact `L¹ → L²` operator norm in place of samples.
    pub operator_ratio: f64,
}

/// `‖S̃*(t) u‖_{L²} ≤ (d C / 4)^{d/4} t^{−d/4} ‖u‖_{L¹}` on `times`.
pub fn check_lemma_decay(
    sys: &AssembledSystem,
    adjoint: &SemigroupEvaluator,
    nash_constant: f64,
    times: &[f64],
    samples: usize,
    seed: u64,
) -> Result<LemmaDecayReport, VerifyError> {
    let d = sys.dim as f64;
    let pre = (d * nash_constant / 4.0).powf(d / 4.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let us: Vec<DVector<f64>> = (0..samples).map(|_| random_signed(sys.num_vertices(), &mut rng)).collect();
    let mut max_ratio = 0.0f64;
    let mut operator_ratio = 0.0f64;
    for &t in times {
        let bound = pre * t.powf(-d / 4.0);
        for u in &us {
            let v = adjoint.apply(t, u, false)?;
            max_ratio = max_ratio.max(sys.l2_norm(&v) / (bound * sys.l1_norm(u)));
        }
        operator_ratio = operator_ratio.max(adjoint.norm_1_to_2(t, false)? / bound);
    }
    Ok(LemmaDecayReport {
        status: Status::from_bool(max_ratio <= 1.0),
        constant: nash_constant,
        max_ratio,
        operator_ratio,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeReport {
    pub status: Status,
    /// Max of `(D − (−2‖v‖²_{H¹})) / scale` where `D` is the centred difference
    /// of `t ↦ ‖v(t)‖²`.
    pub max_excess: f64,
}

/// `d/dt ‖S̃*(t)u‖² ≤ −2 ‖S̃*(t)u‖²_{H¹}` by centred differences.
pub fn check_ode_mechanism(
    sys: &AssembledSystem,
    adjoint: &SemigroupEvaluator,
    times: &[f64],
    samples: usize,
    seed: u64,
) -> Result<OdeReport, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let us: Vec<DVector<f64>> = (0..samples).map(|_| random_signed(sys.num_vertices(), &mut rng)).collect();
    let mut max_excess = f64::NEG_INFINITY;
    for &t in times {
        let h = 1e-6 * t;
        let fwd = adjoint.propagator(h);
        let bwd = adjoint.propagator(-h);
        for u in &us {
            let v = adjoint.apply(t, u, false)?;
            let vp = &fwd * &v;
            let vm = &bwd * &v;
            let deriv = (sys.l2_norm(&vp).powi(2) - sys.l2_norm(&vm).powi(2)) / (2.0 * h);
            let h1 = sys.h1_norm(&v).powi(2);
            let scale = 2.0 * h1;
            max_excess = max_excess.max((deriv + 2.0 * h1) / scale);
        }
    }
    let status = if !sys.admissibility.admissible {
        Status::HypothesisUnmet
    } else {
        Status::from_bool(max_excess <= ODE_TOL)
    };
    Ok(OdeReport { status, max_excess })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_power_law_is_recovered() {
        let times: Vec<f64> = (0..12).map(|k| 0.5f64.powi(11 - k)).collect();
        let alpha = 0.7;
        let raw: Vec<f64> = times.iter().map(|t| 2.0 * t.powf(-0.75) * (t * alpha).exp()).collect();
        let rep = fit_curve(&times, &raw, alpha, 0.0).unwrap();
        assert_relative_eq!(rep.fitted_slope, -0.75, epsilon = 1e-12);
        assert_relative_eq!(rep.fitted_c, 2.0, max_relative = 1e-12);
        assert_relative_eq!(rep.mu, 3.0, epsilon = 1e-12);
        assert!(rep.bound_holds());
    }

    #[test]
    fn plateau_and_floor_are_excluded() {
        let times: Vec<f64> = (0..16).map(|k| 0.5f64.powi(15 - k) * 256.0).collect();
        let raw: Vec<f64> = times.iter().map(|t| 1.0 + t.powf(-0.75)).collect();
        let rep = fit_curve(&times, &raw, 0.0, 1e-3).unwrap();
        assert!(rep.window.iter().all(|&k| times[k] >= 1e-3));
        assert!(rep.window.iter().all(|&k| rep.local_slopes[k] < -PLATEAU_SLOPE));
        assert!(!rep.window.contains(&15));
    }

    #[test]
    fn too_few_points() {
        let times = [0.1, 0.2, 0.4];
        let raw = [3.0, 2.0, 1.5];
        assert_eq!(fit_curve(&times, &raw, 0.0, 0.0).unwrap_err(), VerifyError::TooFewPoints { got: 3 });
    }
}

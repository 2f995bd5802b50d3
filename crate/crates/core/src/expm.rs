//! Dense matrix exponential by scaling and squaring with the diagonal
//! [7/7] Padé approximant.

use nalgebra::DMatrix;

const ORDER: usize = 7;
/// Scaled argument bound `‖A‖₁ / 2^s ≤ THETA`.
pub const THETA: f64 = 0.5;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Numerator coefficients `(2m − j)! m! / ((2m)! j! (m − j)!)`.
pub fn pade_coefficients() -> [f64; ORDER + 1] {
    let m = ORDER;
    let mut b = [0.0; ORDER + 1];
    for (j, bj) in b.iter_mut().enumerate() {
        *bj = factorial(2 * m - j) * factorial(m) / (factorial(2 * m) * factorial(j) * factorial(m - j));
    }
    b
}

pub fn norm_1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Number of squarings so that `‖a‖₁ / 2^s ≤ THETA`.
pub fn squarings(a: &DMatrix<f64>) -> u32 {
    let n = norm_1(a);
    if n <= THETA {
        0
    } else {
        (n / THETA).log2().ceil().max(0.0) as u32
    }
}

/// `exp(a)` for a square matrix.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let s = squarings(a);
    let x = a / 2f64.powi(s as i32);
    let b = pade_coefficients();
    let id = DMatrix::<f64>::identity(n, n);
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let odd = &x * (&id * b[1] + &x2 * b[3] + &x4 * b[5] + &x6 * b[7]);
    let even = &id * b[0] + &x2 * b[2] + &x4 * b[4] + &x6 * b[6];
    let num = &even + &odd;
    let den = &even - &odd;
    let mut r = den.lu().solve(&num).expect("Padé denominator is nonsingular for ‖x‖₁ ≤ 1/2");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

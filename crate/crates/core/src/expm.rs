//! Matrix exponential of small dense real matrices by scaling and squaring
//! with a Taylor kernel.
//!
//! Metzler matrices (nonnegative off-diagonal) are shifted to be entrywise
//! nonnegative first, so every Taylor term is nonnegative and entries keep full
//! relative accuracy, including the tiny ones.

use nalgebra::DMatrix;

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn is_metzler(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] >= 0.0))
}

/// Taylor series of `exp(a)` for `||a||_1 <= 1/2`.
fn taylor(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..40 {
        term = &term * a / k as f64;
        sum += &term;
        if one_norm(&term) <= 1e-18 * one_norm(&sum) {
            break;
        }
    }
    sum
}

/// `exp(a)` for a square matrix.
///
/// Panics if `a` is not square.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let (shift, work) = if is_metzler(a) {
        let c = (0..n).map(|i| -a[(i, i)]).fold(0.0f64, f64::max);
        (c, a + DMatrix::identity(n, n) * c)
    } else {
        (0.0, a.clone())
    };

    let norm = one_norm(&work);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = &work / 2f64.powi(squarings);
    let mut e = taylor(&scaled);

    // Track a log-scale during squaring so large exponents cannot overflow
    // before the shift is undone.
    let mut log_scale = 0.0;
    for _ in 0..squarings {
        e = &e * &e;
        log_scale *= 2.0;
        let peak = e.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if peak > 0.0 && peak.is_finite() {
            e /= peak;
            log_scale += peak.ln();
        }
    }
    e * (log_scale - shift).exp()
}

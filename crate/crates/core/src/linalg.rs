//! Small dense linear solves used by the barrier solver and the GMP
//! least-squares fit. Systems here are tiny (Newton steps over at most a
//! couple dozen users, J x J normal equations), so a direct Cholesky
//! factorization is all that is needed.

use num_complex::Complex64;

/// Solve `A x = b` for symmetric positive definite `A` (row-major, n x n)
/// by Cholesky factorization. Returns `None` if a pivot is not strictly
/// positive (matrix not PD to working precision).
pub fn solve_spd(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(0.0f64, f64::max);
    let pivot_floor = 1e-13 * max_diag.max(f64::MIN_POSITIVE);
    // L lower-triangular, A = L L^T
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= pivot_floor || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // forward then backward substitution
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

/// Solve `A x = b` for Hermitian positive definite complex `A` (row-major)
/// by complex Cholesky. Returns `None` when not PD to working precision.
pub fn solve_hermitian_pd(a: &[Complex64], b: &[Complex64], n: usize) -> Option<Vec<Complex64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let max_diag = (0..n).map(|i| a[i * n + i].re.abs()).fold(0.0f64, f64::max);
    let pivot_floor = 1e-13 * max_diag.max(f64::MIN_POSITIVE);
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            if i == j {
                // diagonal of a Hermitian PD matrix is real positive
                let d = s.re;
                if d <= pivot_floor || !d.is_finite() {
                    return None;
                }
                l[i * n + i] = Complex64::new(d.sqrt(), 0.0);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i].conj() * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

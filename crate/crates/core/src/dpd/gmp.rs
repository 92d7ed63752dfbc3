//! GMP basis construction, least-squares coefficient fitting, predistorter
//! application and indirect-learning training.

use super::{DpdCoefficients, DpdError, GmpStructure, SyntheticPa};
use crate::dpd::measure::{bussgang_decompose, measure_nmse};
use crate::dpd::synth_pa::synthetic_pa_apply;
use crate::linalg::solve_hermitian_pd;
use num_complex::Complex64;
use std::ops::Range;

/// Design matrix in column-major form. Rows correspond to the time indices
/// in `valid` (those with complete memory/lag/lead context).
pub struct GmpDesign {
    pub columns: Vec<Vec<Complex64>>,
    pub valid: Range<usize>,
}

impl GmpDesign {
    pub fn rows(&self) -> usize {
        self.valid.len()
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }
}

fn envelope_term(u: &[Complex64], n: usize, l: usize, q: isize, p: usize) -> Complex64 {
    // u[n-l] * |u[n-l-q]|^p with q > 0 lagging, q < 0 leading
    let base = u[n - l];
    if p == 0 {
        return base;
    }
    let env_idx = n as isize - l as isize - q;
    let env = u[env_idx as usize].norm();
    base * env.powi(p as i32)
}

/// Basis columns ordered (aligned, lagging, leading) with `(p, l)` /
/// `(p, l, q)` lexicographic within each block. Row `n` is valid only when
/// every referenced sample index exists, so the first `max_lookback` and
/// last `max_lookahead` samples are excluded.
pub fn gmp_basis(u: &[Complex64], g: &GmpStructure) -> Result<GmpDesign, DpdError> {
    g.validate()?;
    let lookback = g.max_lookback();
    let lookahead = g.max_lookahead();
    if u.len() <= lookback + lookahead {
        return Err(DpdError::SequenceTooShort {
            needed: lookback + lookahead + 1,
            got: u.len(),
        });
    }
    let valid = lookback..u.len() - lookahead;
    let mut columns = Vec::with_capacity(g.term_count());
    // aligned: u[n-l] |u[n-l]|^p
    for p in 0..g.p_a {
        for l in 0..g.l_a {
            columns.push(valid.clone().map(|n| envelope_term(u, n, l, 0, p)).collect());
        }
    }
    // lagging: u[n-l] |u[n-l-q]|^p
    for p in 1..=g.p_b {
        for l in 0..g.l_b {
            for q in 1..=g.q_b {
                columns.push(
                    valid
                        .clone()
                        .map(|n| envelope_term(u, n, l, q as isize, p))
                        .collect(),
                );
            }
        }
    }
    // leading: u[n-l] |u[n-l+q]|^p
    for p in 1..=g.p_c {
        for l in 0..g.l_c {
            for q in 1..=g.q_c {
                columns.push(
                    valid
                        .clone()
                        .map(|n| envelope_term(u, n, l, -(q as isize), p))
                        .collect(),
                );
            }
        }
    }
    Ok(GmpDesign { columns, valid })
}

/// Least-squares fit result; `regularized` flags a rank-deficient system
/// solved with a small ridge term.
pub struct LsFit {
    pub theta: Vec<Complex64>,
    pub regularized: bool,
}

/// Solve `min || target - design * theta ||_2` through the normal equations.
/// `target` is the full-length sequence; the rows in `design.valid` are used.
pub fn ls_fit(design: &GmpDesign, target: &[Complex64]) -> Result<LsFit, DpdError> {
    let j = design.cols();
    let rows = design.rows();
    if rows < j {
        return Err(DpdError::NotEnoughRows { rows, cols: j });
    }
    if target.len() < design.valid.end {
        return Err(DpdError::LengthMismatch(target.len(), design.valid.end));
    }
    let t = &target[design.valid.clone()];
    // A = Y^H Y, b = Y^H x
    let mut a = vec![Complex64::new(0.0, 0.0); j * j];
    let mut b = vec![Complex64::new(0.0, 0.0); j];
    for (ci, col_i) in design.columns.iter().enumerate() {
        for (cj, col_j) in design.columns.iter().enumerate().skip(ci) {
            let mut s = Complex64::new(0.0, 0.0);
            for n in 0..rows {
                s += col_i[n].conj() * col_j[n];
            }
            a[ci * j + cj] = s;
            a[cj * j + ci] = s.conj();
        }
        let mut s = Complex64::new(0.0, 0.0);
        for n in 0..rows {
            s += col_i[n].conj() * t[n];
        }
        b[ci] = s;
    }
    if let Some(theta) = solve_hermitian_pd(&a, &b, j) {
        return Ok(LsFit {
            theta,
            regularized: false,
        });
    }
    // rank-deficient: escalate a ridge on the diagonal until the factorization
    // succeeds
    let trace: f64 = (0..j).map(|i| a[i * j + i].re).sum();
    let mut ridge = 1e-12 * (trace / j as f64).max(1e-300);
    for _ in 0..12 {
        let mut a_r = a.clone();
        for i in 0..j {
            a_r[i * j + i] += Complex64::new(ridge, 0.0);
        }
        if let Some(theta) = solve_hermitian_pd(&a_r, &b, j) {
            return Ok(LsFit {
                theta,
                regularized: true,
            });
        }
        ridge *= 100.0;
    }
    Err(DpdError::InvalidParameter(
        "normal equations unsolvable even with regularization".into(),
    ))
}

/// Apply predistorter coefficients to a full sequence. Samples whose
/// memory/lag/lead context falls outside the sequence treat the missing
/// samples as zero.
pub fn gmp_apply(
    u: &[Complex64],
    coeffs: &DpdCoefficients,
    g: &GmpStructure,
) -> Vec<Complex64> {
    let theta = coeffs.theta();
    assert_eq!(theta.len(), g.term_count(), "coefficient count mismatch");
    let n_len = u.len();
    let at = |idx: isize| -> Complex64 {
        if idx < 0 || idx as usize >= n_len {
            Complex64::new(0.0, 0.0)
        } else {
            u[idx as usize]
        }
    };
    let mut out = vec![Complex64::new(0.0, 0.0); n_len];
    for (n, o) in out.iter_mut().enumerate() {
        let n = n as isize;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut t = 0usize;
        for p in 0..g.p_a {
            for l in 0..g.l_a {
                let base = at(n - l as isize);
                let term = if p == 0 {
                    base
                } else {
                    base * at(n - l as isize).norm().powi(p as i32)
                };
                acc += theta[t] * term;
                t += 1;
            }
        }
        for p in 1..=g.p_b {
            for l in 0..g.l_b {
                for q in 1..=g.q_b {
                    let term = at(n - l as isize) * at(n - l as isize - q as isize).norm().powi(p as i32);
                    acc += theta[t] * term;
                    t += 1;
                }
            }
        }
        for p in 1..=g.p_c {
            for l in 0..g.l_c {
                for q in 1..=g.q_c {
                    let term = at(n - l as isize) * at(n - l as isize + q as isize).norm().powi(p as i32);
                    acc += theta[t] * term;
                    t += 1;
                }
            }
        }
        *o = acc;
    }
    out
}

/// Indirect-learning training outcome.
pub struct TrainedDpd {
    pub coefficients: DpdCoefficients,
    /// End-to-end NMSE (input vs PA output) after each iteration, dB.
    pub nmse_trace: Vec<f64>,
    /// Set when the NMSE worsened three iterations in a row; the returned
    /// coefficients are then the best seen.
    pub diverged: bool,
    pub regularized: bool,
}

/// Train a GMP predistorter by indirect learning: predistort, drive the PA,
/// normalize the output by its linear gain, fit a postinverse on the
/// normalized output against the PA input, and copy it back as the new
/// predistorter.
pub fn dpd_train_indirect(
    u: &[Complex64],
    pa: &SyntheticPa,
    g: &GmpStructure,
    iters: usize,
) -> Result<TrainedDpd, DpdError> {
    if iters == 0 {
        return Err(DpdError::InvalidParameter("need at least one iteration".into()));
    }
    pa.validate()?;
    let mut theta = DpdCoefficients::identity(g)?;
    let mut best = theta.clone();
    let mut best_nmse = f64::INFINITY;
    let mut trace = Vec::with_capacity(iters);
    let mut worsening = 0usize;
    let mut diverged = false;
    let mut regularized = false;
    for _ in 0..iters {
        let x = gmp_apply(u, &theta, g);
        let y = synthetic_pa_apply(&x, pa);
        // end-to-end distortion of the DPD+PA chain relative to the input
        let (g_end, _) = bussgang_decompose(u, &y)?;
        let nmse = measure_nmse(u, &y, g_end)?;
        trace.push(nmse);
        if nmse < best_nmse {
            best_nmse = nmse;
            best = theta.clone();
            worsening = 0;
        } else {
            worsening += 1;
            if worsening >= 3 {
                diverged = true;
                break;
            }
        }
        // postinverse fit: scale the output back to input level, regress
        // the PA input on the scaled output
        let (g_loop, _) = bussgang_decompose(&x, &y)?;
        let y_hat: Vec<Complex64> = y.iter().map(|&v| v / g_loop).collect();
        let design = gmp_basis(&y_hat, g)?;
        let fit = ls_fit(&design, &x)?;
        regularized |= fit.regularized;
        theta = DpdCoefficients::new(fit.theta, g)?;
    }
    // evaluate the final iterate too
    let x = gmp_apply(u, &theta, g);
    let y = synthetic_pa_apply(&x, pa);
    let (g_end, _) = bussgang_decompose(u, &y)?;
    let nmse = measure_nmse(u, &y, g_end)?;
    trace.push(nmse);
    if nmse < best_nmse {
        best = theta;
    }
    Ok(TrainedDpd {
        coefficients: best,
        nmse_trace: trace,
        diverged,
        regularized,
    })
}

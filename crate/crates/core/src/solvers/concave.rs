//! Log-barrier interior-point solver for concave maximization over box and
//! coupled concave inequality constraints:
//!
//! ```text
//! maximize  f(p)
//! s.t.      c_i(p) >= 0,  0 <= p <= ub
//! ```
//!
//! The barrier subproblems are solved by damped Newton with backtracking;
//! when the Newton system is not positive definite the step falls back to
//! gradient ascent. Every objective and constraint in this crate is a sum
//! of per-coordinate terms, so callers supply diagonal second derivatives
//! and the only off-diagonal Hessian contributions are the rank-one
//! `grad c grad c^T / c^2` barrier terms, assembled densely here (dimensions
//! stay in the tens).

use super::{SolverError, SolverSettings};
use crate::linalg::solve_spd;

/// Function bundle: value, gradient, and per-coordinate second derivatives
/// (all mixed second derivatives are zero for the separable functions used
/// throughout the solvers).
pub struct SeparableFn<'a> {
    pub value: Box<dyn Fn(&[f64]) -> f64 + 'a>,
    pub grad: Box<dyn Fn(&[f64], &mut [f64]) + 'a>,
    pub hess_diag: Box<dyn Fn(&[f64], &mut [f64]) + 'a>,
}

impl<'a> SeparableFn<'a> {
    /// Linear function `coeffs . p + offset`.
    pub fn linear(coeffs: Vec<f64>, offset: f64) -> Self {
        let c2 = coeffs.clone();
        let n = coeffs.len();
        SeparableFn {
            value: Box::new(move |p| {
                p.iter().zip(&coeffs).map(|(&x, &c)| x * c).sum::<f64>() + offset
            }),
            grad: Box::new(move |_, out| out.copy_from_slice(&c2)),
            hess_diag: Box::new(move |_, out| out[..n].fill(0.0)),
        }
    }
}

/// Concave maximization problem over the box `[0, upper]`.
pub struct ConcaveProblem<'a> {
    pub objective: SeparableFn<'a>,
    pub constraints: Vec<SeparableFn<'a>>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Scaled stationarity measure of the barrier Lagrangian at the final
    /// iterate (projected-gradient norm in box-normalized coordinates).
    pub kkt_residual: f64,
    pub converged: bool,
}

const NEWTON_MAX_STEPS: usize = 120;
const INTERIOR_MARGIN: f64 = 1e-12;

/// Maximize `prob` starting from `start` (made strictly interior; when the
/// start violates a constraint, a feasibility phase locates one). Returns
/// `Infeasible` when no strictly feasible point exists, otherwise the best
/// iterate with `converged` reporting whether the barrier schedule finished.
pub fn solve_concave_subproblem(
    prob: &ConcaveProblem,
    start: Option<&[f64]>,
    settings: &SolverSettings,
) -> Result<InnerSolution, SolverError> {
    settings.validate()?;
    let n = prob.upper.len();
    if n == 0 {
        return Err(SolverError::InvalidInput("empty problem".into()));
    }
    for (j, &u) in prob.upper.iter().enumerate() {
        if !u.is_finite() || u <= 0.0 {
            return Err(SolverError::InvalidInput(format!(
                "upper bound {j} must be finite and > 0, got {u}"
            )));
        }
    }
    let mut x = match start {
        Some(s) if s.len() == n => super::clamp_interior(s, &prob.upper, INTERIOR_MARGIN),
        Some(_) => return Err(SolverError::InvalidInput("start has wrong dimension".into())),
        None => prob.upper.iter().map(|&u| 0.5 * u).collect(),
    };
    if !strictly_feasible(&prob.constraints, &x) {
        let (x0, slack) = feasible_start(&prob.constraints, &prob.upper, settings)?;
        if slack <= 0.0 {
            return Err(SolverError::Infeasible { max_slack: slack });
        }
        x = x0;
    }
    Ok(barrier_solve(prob, x, settings))
}

fn strictly_feasible(cons: &[SeparableFn], x: &[f64]) -> bool {
    cons.iter().all(|c| (c.value)(x) > 0.0)
}

/// Locate a strictly feasible point by maximizing the minimum constraint
/// slack through its epigraph form (`maximize s` subject to
/// `c_i(p) - s >= 0` over the box). Returns the point and the attained
/// min-slack; a nonpositive slack is an infeasibility certificate.
pub fn feasible_start(
    constraints: &[SeparableFn],
    upper: &[f64],
    settings: &SolverSettings,
) -> Result<(Vec<f64>, f64), SolverError> {
    let n = upper.len();
    let x0: Vec<f64> = upper.iter().map(|&u| 0.5 * u).collect();
    if constraints.is_empty() {
        return Ok((x0, f64::INFINITY));
    }
    let min0 = constraints
        .iter()
        .map(|c| (c.value)(&x0))
        .fold(f64::INFINITY, f64::min);
    if min0 > 0.0 {
        return Ok((x0, min0));
    }
    // epigraph variable s, shifted so its box is [0, span]
    let s_lo = min0 - 1.0 - min0.abs();
    let s_hi = (2.0 * min0.abs()).max(1.0);
    let span = s_hi - s_lo;
    let mut upper_ext = upper.to_vec();
    upper_ext.push(span);

    let epigraph_cons: Vec<SeparableFn> = constraints
        .iter()
        .map(|c| SeparableFn {
            value: Box::new(move |z: &[f64]| (c.value)(&z[..n]) - (s_lo + z[n])),
            grad: Box::new(move |z: &[f64], out: &mut [f64]| {
                (c.grad)(&z[..n], &mut out[..n]);
                out[n] = -1.0;
            }),
            hess_diag: Box::new(move |z: &[f64], out: &mut [f64]| {
                (c.hess_diag)(&z[..n], &mut out[..n]);
                out[n] = 0.0;
            }),
        })
        .collect();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let prob = ConcaveProblem {
        objective: SeparableFn::linear(coeffs, 0.0),
        constraints: epigraph_cons,
        upper: upper_ext,
    };
    let mut z0 = x0.clone();
    z0.push(0.5 * (min0 - s_lo));
    let sol = barrier_solve(&prob, super::clamp_interior(&z0, &prob.upper, INTERIOR_MARGIN), settings);
    let s_star = s_lo + sol.x[n];
    let x_star = sol.x[..n].to_vec();
    let attained = constraints
        .iter()
        .map(|c| (c.value)(&x_star))
        .fold(f64::INFINITY, f64::min);
    if attained > 0.0 {
        Ok((x_star, attained))
    } else {
        Err(SolverError::Infeasible {
            max_slack: s_star.max(attained),
        })
    }
}

/// Barrier outer loop. `x` must be strictly interior and strictly feasible.
fn barrier_solve(prob: &ConcaveProblem, mut x: Vec<f64>, settings: &SolverSettings) -> InnerSolution {
    let n = prob.upper.len();
    let ub = &prob.upper;
    let m_total = (prob.constraints.len() + 2 * n) as f64;

    // objective scale so the stopping rule is dimensionless
    let mut g0 = vec![0.0; n];
    (prob.objective.grad)(&x, &mut g0);
    let grad_scale = g0
        .iter()
        .zip(ub)
        .map(|(&g, &u)| (g * u).abs())
        .fold(0.0f64, f64::max);
    let fscale = (prob.objective.value)(&x).abs().max(grad_scale).max(1e-12);

    let mut t = 1.0;
    let mut converged = true;
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n * n];
    let mut hd = vec![0.0; n];
    let mut cg = vec![0.0; n];

    loop {
        // damped Newton on phi_t(x) = (t/fscale) f(x) + sum log c_i + box logs,
        // in box-normalized coordinates y = x / ub
        let mut newton_ok = false;
        for _ in 0..NEWTON_MAX_STEPS {
            let phi0 = barrier_value(prob, &x, t, fscale);
            // gradient and Hessian in y coordinates
            (prob.objective.grad)(&x, &mut grad);
            (prob.objective.hess_diag)(&x, &mut hd);
            let mut gy: Vec<f64> = (0..n).map(|j| t / fscale * grad[j] * ub[j]).collect();
            hess.fill(0.0);
            for j in 0..n {
                let yj = x[j] / ub[j];
                gy[j] += 1.0 / yj - 1.0 / (1.0 - yj);
                hess[j * n + j] = t / fscale * hd[j] * ub[j] * ub[j]
                    - 1.0 / (yj * yj)
                    - 1.0 / ((1.0 - yj) * (1.0 - yj));
            }
            for c in &prob.constraints {
                let cv = (c.value)(&x);
                (c.grad)(&x, &mut cg);
                (c.hess_diag)(&x, &mut hd);
                for j in 0..n {
                    let gj = cg[j] * ub[j];
                    gy[j] += gj / cv;
                    hess[j * n + j] += hd[j] * ub[j] * ub[j] / cv;
                    for k in 0..n {
                        hess[j * n + k] -= gj * (cg[k] * ub[k]) / (cv * cv);
                    }
                }
            }
            // Newton direction: (-H) d = g, -H positive definite for strictly
            // concave phi; fall back to gradient ascent otherwise
            let neg_h: Vec<f64> = hess.iter().map(|&v| -v).collect();
            let dir = match solve_spd(&neg_h, &gy, n) {
                Some(d) if d.iter().all(|v| v.is_finite()) => d,
                _ => gy.clone(),
            };
            let mut slope: f64 = dir.iter().zip(&gy).map(|(&d, &g)| d * g).sum();
            let dir = if slope <= 0.0 {
                slope = gy.iter().map(|&g| g * g).sum();
                gy.clone()
            } else {
                dir
            };
            if 0.5 * slope <= 1e-13 {
                newton_ok = true;
                break;
            }
            // backtracking line search with domain checks
            let mut step = 1.0;
            let mut accepted = false;
            while step > 1e-15 {
                let cand: Vec<f64> = (0..n)
                    .map(|j| x[j] + step * dir[j] * ub[j])
                    .collect();
                if cand
                    .iter()
                    .zip(ub)
                    .all(|(&v, &u)| v > 0.0 && v < u)
                    && strictly_feasible(&prob.constraints, &cand)
                {
                    let phi1 = barrier_value(prob, &cand, t, fscale);
                    if phi1 > phi0 + 0.25 * step * slope {
                        x = cand;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                newton_ok = true; // no ascent left at this barrier weight
                break;
            }
        }
        if !newton_ok {
            converged = false;
        }
        if m_total / t <= settings.inner_tol {
            break;
        }
        t *= settings.barrier_mu;
    }

    // stationarity of the barrier Lagrangian, normalized coordinates
    (prob.objective.grad)(&x, &mut grad);
    let mut resid: Vec<f64> = (0..n).map(|j| grad[j] * ub[j] / fscale).collect();
    for c in &prob.constraints {
        let cv = (c.value)(&x);
        (c.grad)(&x, &mut cg);
        for j in 0..n {
            resid[j] += cg[j] * ub[j] / (t * cv);
        }
    }
    let kkt = (0..n)
        .map(|j| {
            let y = x[j] / ub[j];
            let projected = (y + resid[j]).clamp(0.0, 1.0);
            (y - projected).abs()
        })
        .fold(0.0f64, f64::max);

    InnerSolution {
        objective: (prob.objective.value)(&x),
        x,
        kkt_residual: kkt,
        converged,
    }
}

fn barrier_value(prob: &ConcaveProblem, x: &[f64], t: f64, fscale: f64) -> f64 {
    let mut v = t / fscale * (prob.objective.value)(x);
    for c in &prob.constraints {
        let cv = (c.value)(x);
        if cv <= 0.0 {
            return f64::NEG_INFINITY;
        }
        v += cv.ln();
    }
    for (&xj, &uj) in x.iter().zip(&prob.upper) {
        if xj <= 0.0 || xj >= uj {
            return f64::NEG_INFINITY;
        }
        v += (xj / uj).ln() + (1.0 - xj / uj).ln();
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn unconstrained_quadratic_interior_max() {
        // f(p) = -(p0-1)^2 - 2(p1-2)^2, argmax (1, 2) inside [0,5]^2
        let prob = ConcaveProblem {
            objective: SeparableFn {
                value: Box::new(|p| -(p[0] - 1.0).powi(2) - 2.0 * (p[1] - 2.0).powi(2)),
                grad: Box::new(|p, out| {
                    out[0] = -2.0 * (p[0] - 1.0);
                    out[1] = -4.0 * (p[1] - 2.0);
                }),
                hess_diag: Box::new(|_, out| {
                    out[0] = -2.0;
                    out[1] = -4.0;
                }),
            },
            constraints: vec![],
            upper: vec![5.0, 5.0],
        };
        let sol = solve_concave_subproblem(&prob, None, &settings()).unwrap();
        assert!(sol.converged);
        assert!((sol.x[0] - 1.0).abs() < 1e-6, "x0 = {}", sol.x[0]);
        assert!((sol.x[1] - 2.0).abs() < 1e-6, "x1 = {}", sol.x[1]);
        assert!(sol.objective.abs() < 1e-10);
    }

    #[test]
    fn box_clipped_linear_objective() {
        let prob = ConcaveProblem {
            objective: SeparableFn::linear(vec![1.0, -0.5], 0.0),
            constraints: vec![],
            upper: vec![2.0, 3.0],
        };
        let sol = solve_concave_subproblem(&prob, None, &settings()).unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-5 * 2.0, "x0 = {}", sol.x[0]);
        assert!(sol.x[1] < 1e-5 * 3.0, "x1 = {}", sol.x[1]);
    }

    #[test]
    fn linear_constraint_binds() {
        // maximize p0 + p1 s.t. 1 - p0 - p1 >= 0 on [0,1]^2
        let prob = ConcaveProblem {
            objective: SeparableFn::linear(vec![1.0, 1.0], 0.0),
            constraints: vec![SeparableFn::linear(vec![-1.0, -1.0], 1.0)],
            upper: vec![1.0, 1.0],
        };
        let sol = solve_concave_subproblem(&prob, None, &settings()).unwrap();
        assert!((sol.x[0] + sol.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn infeasible_reports_certificate() {
        // c(p) = -1 - p0 is never nonnegative
        let prob = ConcaveProblem {
            objective: SeparableFn::linear(vec![1.0], 0.0),
            constraints: vec![SeparableFn::linear(vec![-1.0], -1.0)],
            upper: vec![1.0],
        };
        match solve_concave_subproblem(&prob, None, &settings()) {
            Err(SolverError::Infeasible { max_slack }) => assert!(max_slack <= 0.0),
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn feasibility_phase_finds_interior_point() {
        // intersection of p0 + p1 <= 1.5 and p0 >= 0.25 on [0,1]^2
        let cons = vec![
            SeparableFn::linear(vec![-1.0, -1.0], 1.5),
            SeparableFn::linear(vec![1.0, 0.0], -0.25),
        ];
        let (x, slack) = feasible_start(&cons, &[1.0, 1.0], &settings()).unwrap();
        assert!(slack > 0.0);
        assert!(x[0] >= 0.25 && x[0] + x[1] <= 1.5);
    }
}

//! Weighted sum-rate maximization under per-user rate floors.
//!
//! The weighted sum of logs is first rewritten with per-user auxiliary
//! SINR variables `gamma` (Lagrangian dual transform), then the remaining
//! sum of ratios is handled by the quadratic transform with auxiliary
//! variables `y`:
//!
//! ```text
//! F_q(p, gamma, y) = sum_k w_k [ log2(1+gamma_k) - gamma_k ]
//!   + sum_k [ 2 y_k sqrt(w_k (gamma_k+1) g_k p_k)
//!             - y_k^2 ( sum_{i>=k} g_i p_i + sum_i a_i p_i^{alpha_i} g_i + 1 ) ]
//! ```
//!
//! The three blocks are optimized alternately: `p` by the log-barrier inner
//! solver (concave for fixed `gamma, y`), then `gamma` and `y` by closed
//! forms. The alternation converges monotonically but only linearly, so a
//! feasibility-respecting coordinate polish of the true objective finishes
//! the solve; at the fixed point the closed-form updates leave `gamma` and
//! `y` unchanged.
//!
//! The transform is written for the natural decoding order; other orders
//! are handled by re-indexing users into decoding slots.

use super::concave::{feasible_start, solve_concave_subproblem, ConcaveProblem, SeparableFn};
use super::polish::coordinate_ascent;
use super::{clamp_interior, NormScenario, SolveReport, SolverError, SolverSettings};
use crate::noma::{user_rates, DecodingOrder, PowerAllocation, Scenario};

const POLISH_SWEEPS: usize = 80;

/// Maximize `sum_k weights[k] * rate_k` subject to `rate_k >= floors[k]`
/// (bits/s/Hz) under `order`. Weights must be positive and sum to one;
/// both `weights` and `floors` are indexed by user.
pub fn wsr_maximize(
    weights: &[f64],
    floors: &[f64],
    order: &DecodingOrder,
    s: &Scenario,
    cfg: &SolverSettings,
) -> Result<SolveReport, SolverError> {
    cfg.validate()?;
    let k = s.k();
    if weights.len() != k || floors.len() != k || order.len() != k {
        return Err(SolverError::InvalidInput(
            "weights, floors and order must all match the user count".into(),
        ));
    }
    if weights.iter().any(|&w| !w.is_finite() || w <= 0.0) {
        return Err(SolverError::InvalidInput("weights must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(SolverError::InvalidInput(format!(
            "weights must sum to 1, got {total}"
        )));
    }
    if floors.iter().any(|&r| !r.is_finite() || r < 0.0) {
        return Err(SolverError::InvalidInput(
            "rate floors must be finite and >= 0".into(),
        ));
    }

    let norm = NormScenario::permuted(s, order);
    let w_slot: Vec<f64> = (0..k).map(|i| weights[order.user_at(i)]).collect();
    let c_slot: Vec<f64> = (0..k)
        .map(|i| 2f64.powf(floors[order.user_at(i)]) - 1.0)
        .collect();
    let has_floors = c_slot.iter().any(|&c| c > 0.0);

    let cons = floor_fns(&norm, &c_slot);
    let mut p = if has_floors {
        match locate_start(&norm, &cons, cfg) {
            Ok(p) => p,
            Err(e) => return Err(e),
        }
    } else {
        clamp_interior(&norm.cap, &norm.cap, 1e-9)
    };

    let mut gamma = gamma_slots(&norm, &p);
    let mut y = y_slots(&norm, &w_slot, &gamma, &p);
    let mut fq_prev = fq_slots(&norm, &w_slot, &gamma, &y, &p);
    let mut trace = vec![fq_prev];
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..cfg.max_outer_iters {
        iterations = it + 1;
        let prob = ConcaveProblem {
            objective: fq_power_objective(&norm, &w_slot, &gamma, &y),
            constraints: floor_fns(&norm, &c_slot),
            upper: norm.cap.clone(),
        };
        let sol = solve_concave_subproblem(&prob, Some(&p), cfg)?;
        p = sol.x;
        gamma = gamma_slots(&norm, &p);
        y = y_slots(&norm, &w_slot, &gamma, &p);
        let fq = fq_slots(&norm, &w_slot, &gamma, &y, &p);
        trace.push(fq);
        if (fq - fq_prev).abs() < cfg.epsilon {
            converged = true;
            break;
        }
        fq_prev = fq;
    }

    coordinate_ascent(&norm, &w_slot, &c_slot, &mut p, POLISH_SWEEPS);

    // back to user indexing
    let mut p_user = vec![0.0; k];
    for slot in 0..k {
        p_user[order.user_at(slot)] = p[slot];
    }
    let alloc = PowerAllocation::new(p_user).expect("solver produced invalid powers");
    let rates = user_rates(order, &alloc, s);
    let objective: f64 = rates.iter().zip(weights).map(|(&r, &w)| r * w).sum();
    Ok(SolveReport {
        p_star: alloc,
        objective,
        iterations,
        converged,
        trace,
    })
}

fn locate_start(
    norm: &NormScenario,
    cons: &[SeparableFn],
    cfg: &SolverSettings,
) -> Result<Vec<f64>, SolverError> {
    for frac in [0.9, 0.6, 0.3, 0.1, 0.02] {
        let p: Vec<f64> = norm.cap.iter().map(|&c| frac * c).collect();
        if cons.iter().all(|c| (c.value)(&p) > 0.0) {
            return Ok(p);
        }
    }
    let (p, slack) = feasible_start(cons, &norm.cap, cfg)?;
    if slack <= 0.0 {
        return Err(SolverError::Infeasible { max_slack: slack });
    }
    Ok(p)
}

/// Slot-space SINRs under the natural order.
fn gamma_slots(norm: &NormScenario, p: &[f64]) -> Vec<f64> {
    (0..norm.k()).map(|k| norm.sinr_natural(p, k)).collect()
}

/// Quadratic-transform auxiliaries:
/// `y_k = sqrt(w_k (gamma_k+1) g_k p_k) / (sum_{i>=k} g_i p_i + distortion + 1)`.
fn y_slots(norm: &NormScenario, w: &[f64], gamma: &[f64], p: &[f64]) -> Vec<f64> {
    let k_users = norm.k();
    let dist = norm.distortion(p);
    (0..k_users)
        .map(|k| {
            let mut den = dist + 1.0;
            for i in k..k_users {
                den += p[i] * norm.g[i];
            }
            (w[k] * (gamma[k] + 1.0) * norm.g[k] * p[k]).sqrt() / den
        })
        .collect()
}

/// Full quadratic-transform objective value.
fn fq_slots(norm: &NormScenario, w: &[f64], gamma: &[f64], y: &[f64], p: &[f64]) -> f64 {
    let k_users = norm.k();
    let dist = norm.distortion(p);
    let mut v = 0.0;
    for k in 0..k_users {
        v += w[k] * ((1.0 + gamma[k]).log2() - gamma[k]);
        let mut den = dist + 1.0;
        for i in k..k_users {
            den += p[i] * norm.g[i];
        }
        v += 2.0 * y[k] * (w[k] * (gamma[k] + 1.0) * norm.g[k] * p[k]).sqrt() - y[k] * y[k] * den;
    }
    v
}

/// `F_q` as a function of `p` alone (fixed `gamma`, `y`), in the separable
/// form consumed by the barrier solver. The constant `gamma` terms are
/// omitted; they do not affect the argmax.
fn fq_power_objective<'a>(
    norm: &'a NormScenario,
    w: &[f64],
    gamma: &[f64],
    y: &[f64],
) -> SeparableFn<'a> {
    let k_users = norm.k();
    // coefficient of sqrt(p_k): 2 y_k sqrt(w_k (gamma_k+1) g_k)
    let s_coef: Vec<f64> = (0..k_users)
        .map(|k| 2.0 * y[k] * (w[k] * (gamma[k] + 1.0) * norm.g[k]).sqrt())
        .collect();
    // p_j appears in the denominators of slots k <= j
    let mut a_cum = vec![0.0; k_users];
    let mut run = 0.0;
    for j in 0..k_users {
        run += y[j] * y[j];
        a_cum[j] = run;
    }
    let b_total = run;
    let s2 = s_coef.clone();
    let s3 = s_coef.clone();
    let a2 = a_cum.clone();
    SeparableFn {
        value: Box::new(move |p| {
            let mut v = -b_total * (norm.distortion(p) + 1.0);
            for j in 0..k_users {
                v += s_coef[j] * p[j].max(0.0).sqrt() - a_cum[j] * norm.g[j] * p[j];
            }
            v
        }),
        grad: Box::new(move |p, out| {
            for j in 0..k_users {
                out[j] = s2[j] / (2.0 * p[j].max(1e-300).sqrt())
                    - a2[j] * norm.g[j]
                    - b_total * norm.distortion_grad(p, j);
            }
        }),
        hess_diag: Box::new(move |p, out| {
            for j in 0..k_users {
                out[j] = -s3[j] / (4.0 * p[j].max(1e-300).powf(1.5))
                    - b_total * norm.distortion_hess(p, j);
            }
        }),
    }
}

fn floor_fns<'a>(norm: &'a NormScenario, c_slot: &[f64]) -> Vec<SeparableFn<'a>> {
    let k = norm.k();
    let mut cons = Vec::new();
    for u in 0..k {
        let c = c_slot[u];
        if c <= 0.0 {
            continue;
        }
        cons.push(SeparableFn {
            value: Box::new(move |p: &[f64]| {
                let mut interference = 0.0;
                for j in u + 1..k {
                    interference += p[j] * norm.g[j];
                }
                p[u] * norm.g[u] - c * (interference + norm.distortion(p) + 1.0)
            }),
            grad: Box::new(move |p: &[f64], out: &mut [f64]| {
                for v in 0..k {
                    let mut g = 0.0;
                    if v == u {
                        g += norm.g[u];
                    }
                    if v > u {
                        g -= c * norm.g[v];
                    }
                    g -= c * norm.distortion_grad(p, v);
                    out[v] = g;
                }
            }),
            hess_diag: Box::new(move |p: &[f64], out: &mut [f64]| {
                for v in 0..k {
                    out[v] = -c * norm.distortion_hess(p, v);
                }
            }),
        });
    }
    cons
}

// --- public helpers for cross-checking the transform at a solution ---

/// Closed-form `gamma` update (the exact per-user SINRs), user-indexed.
pub fn gamma_update(p: &PowerAllocation, order: &DecodingOrder, s: &Scenario) -> Vec<f64> {
    let norm = NormScenario::permuted(s, order);
    let p_slot = to_slots(p, order);
    let slots = gamma_slots(&norm, &p_slot);
    from_slots(&slots, order)
}

/// Closed-form quadratic-transform `y` update, user-indexed.
pub fn y_update(
    p: &PowerAllocation,
    gamma_user: &[f64],
    weights: &[f64],
    order: &DecodingOrder,
    s: &Scenario,
) -> Vec<f64> {
    let norm = NormScenario::permuted(s, order);
    let p_slot = to_slots(p, order);
    let w_slot: Vec<f64> = (0..s.k()).map(|i| weights[order.user_at(i)]).collect();
    let g_slot: Vec<f64> = (0..s.k()).map(|i| gamma_user[order.user_at(i)]).collect();
    let slots = y_slots(&norm, &w_slot, &g_slot, &p_slot);
    from_slots(&slots, order)
}

/// Quadratic-transform objective `F_q` (noise-normalized units).
pub fn fq_value(
    p: &PowerAllocation,
    gamma_user: &[f64],
    y_user: &[f64],
    weights: &[f64],
    order: &DecodingOrder,
    s: &Scenario,
) -> f64 {
    let norm = NormScenario::permuted(s, order);
    let p_slot = to_slots(p, order);
    let w_slot: Vec<f64> = (0..s.k()).map(|i| weights[order.user_at(i)]).collect();
    let g_slot: Vec<f64> = (0..s.k()).map(|i| gamma_user[order.user_at(i)]).collect();
    let y_slot: Vec<f64> = (0..s.k()).map(|i| y_user[order.user_at(i)]).collect();
    fq_slots(&norm, &w_slot, &g_slot, &y_slot, &p_slot)
}

/// Analytic gradient of `F_q` with respect to the powers, user-indexed.
pub fn fq_gradient(
    p: &PowerAllocation,
    gamma_user: &[f64],
    y_user: &[f64],
    weights: &[f64],
    order: &DecodingOrder,
    s: &Scenario,
) -> Vec<f64> {
    let norm = NormScenario::permuted(s, order);
    let p_slot = to_slots(p, order);
    let w_slot: Vec<f64> = (0..s.k()).map(|i| weights[order.user_at(i)]).collect();
    let g_slot: Vec<f64> = (0..s.k()).map(|i| gamma_user[order.user_at(i)]).collect();
    let y_slot: Vec<f64> = (0..s.k()).map(|i| y_user[order.user_at(i)]).collect();
    let obj = fq_power_objective(&norm, &w_slot, &g_slot, &y_slot);
    let mut out = vec![0.0; s.k()];
    (obj.grad)(&p_slot, &mut out);
    from_slots(&out, order)
}

fn to_slots(p: &PowerAllocation, order: &DecodingOrder) -> Vec<f64> {
    (0..order.len()).map(|i| p.get(order.user_at(i))).collect()
}

fn from_slots(v: &[f64], order: &DecodingOrder) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for slot in 0..v.len() {
        out[order.user_at(slot)] = v[slot];
    }
    out
}

//! Dinkelbach solver for rate-profile boundary points.
//!
//! The rate-profile problem maximizes user 0's rate subject to per-user
//! rate floors for users `1..K` under a fixed decoding order. Its SINR
//! objective is a concave-over-convex fraction, so the Dinkelbach iteration
//!
//! ```text
//! F(gamma) = max { N(p) - gamma * D(p) : floors, box }
//! ```
//!
//! converges monotonically to the unique ratio `gamma* = N/D` with
//! `F(gamma*) = 0`. Each parametric subproblem is concave and solved by the
//! log-barrier inner solver. Because raising any floored user's power above
//! the level that meets its floor only injects interference and distortion,
//! every floor holds with equality at the optimum; a final profile polish
//! pins the floors exactly and line-searches user 0's power along that
//! constraint manifold (this also realizes the smallest-power tie-break).

use super::concave::{feasible_start, solve_concave_subproblem, ConcaveProblem, SeparableFn};
use super::{clamp_interior, NormScenario, SolveReport, SolverError, SolverSettings};
use crate::noma::{user_rates, DecodingOrder, PowerAllocation, Scenario};

/// Two-user rate profile: maximize user 0's rate subject to user 1's rate
/// being at least `tau`, under `order`.
pub fn dinkelbach_rate_profile(
    tau: f64,
    order: &DecodingOrder,
    s: &Scenario,
    cfg: &SolverSettings,
) -> Result<SolveReport, SolverError> {
    if s.k() != 2 {
        return Err(SolverError::InvalidInput(format!(
            "two-user rate profile needs K = 2, got K = {}",
            s.k()
        )));
    }
    rate_profile_maximize(&[tau], order, s, cfg)
}

/// General rate profile: maximize user 0's rate subject to
/// `rate(user j) >= taus[j-1]` for `j = 1..K` under `order`.
pub fn rate_profile_maximize(
    taus: &[f64],
    order: &DecodingOrder,
    s: &Scenario,
    cfg: &SolverSettings,
) -> Result<SolveReport, SolverError> {
    cfg.validate()?;
    let k = s.k();
    if order.len() != k {
        return Err(SolverError::InvalidInput(
            "decoding order length must match user count".into(),
        ));
    }
    if taus.len() + 1 != k {
        return Err(SolverError::InvalidInput(format!(
            "expected {} rate floors for K = {k}, got {}",
            k - 1,
            taus.len()
        )));
    }
    for &t in taus {
        if !t.is_finite() || t < 0.0 {
            return Err(SolverError::InvalidInput(format!(
                "rate floors must be finite and >= 0, got {t}"
            )));
        }
    }
    let norm = NormScenario::new(s);
    let pos: Vec<usize> = (0..k).map(|u| order.position_of(u)).collect();

    // necessary feasibility: no floor may exceed its single-user maximum
    let r_max: Vec<f64> = (0..k).map(|u| single_user_max_rate(&norm, u)).collect();
    for u in 1..k {
        let tau = taus[u - 1];
        if tau > r_max[u] * (1.0 + 1e-12) {
            let cap = norm.cap[u];
            let c = 2f64.powf(tau) - 1.0;
            let slack =
                cap * norm.g[u] - c * (norm.a[u] * cap.powf(norm.alpha[u]) * norm.g[u] + 1.0);
            return Err(SolverError::Infeasible { max_slack: slack });
        }
    }
    // degenerate endpoint: a floor pinned at its single-user maximum forces
    // every other user silent
    if let Some(u) = (1..k).find(|&u| taus[u - 1] >= r_max[u] * (1.0 - 1e-12)) {
        let mut p = vec![0.0; k];
        p[u] = norm.cap[u];
        for v in 1..k {
            if v != u && taus[v - 1] > 0.0 {
                return Err(SolverError::Infeasible {
                    max_slack: -taus[v - 1],
                });
            }
        }
        return Ok(finish_report(p, order, s, vec![0.0], 0, true));
    }

    let cons = floor_constraints(&norm, &pos, taus);
    let start = locate_start(&norm, &pos, taus, &cons, cfg)?;

    let mut gamma = 0.0;
    let mut x = start;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..cfg.max_outer_iters {
        iterations = it + 1;
        let prob = ConcaveProblem {
            objective: dinkelbach_objective(&norm, &pos, gamma),
            constraints: floor_constraints(&norm, &pos, taus),
            upper: norm.cap.clone(),
        };
        let sol = solve_concave_subproblem(&prob, Some(&x), cfg)?;
        x = sol.x;
        let f_residual = objective_parts(&norm, &pos, &x).0 - gamma * objective_parts(&norm, &pos, &x).1;
        let (num, den) = objective_parts(&norm, &pos, &x);
        let gamma_next = num / den;
        trace.push(gamma_next);
        if f_residual.abs() <= cfg.epsilon {
            converged = true;
            break;
        }
        gamma = gamma_next;
    }

    let polished = profile_polish(&x, &norm, &pos, taus);
    let x_final = match polished {
        Some(p) if ratio_of(&norm, &pos, &p) >= ratio_of(&norm, &pos, &x) => p,
        _ => x,
    };
    Ok(finish_report(x_final, order, s, trace, iterations, converged))
}

fn finish_report(
    p: Vec<f64>,
    order: &DecodingOrder,
    s: &Scenario,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
) -> SolveReport {
    let alloc = PowerAllocation::new(p).expect("solver produced invalid powers");
    let rates = user_rates(order, &alloc, s);
    SolveReport {
        objective: rates[0],
        p_star: alloc,
        iterations,
        converged,
        trace,
    }
}

/// Single-user maximum rate in normalized units (others silent).
fn single_user_max_rate(norm: &NormScenario, u: usize) -> f64 {
    let cap = norm.cap[u];
    let den = norm.a[u] * cap.powf(norm.alpha[u]) * norm.g[u] + 1.0;
    (1.0 + cap * norm.g[u] / den).log2()
}

/// Numerator and denominator of user 0's SINR under the decoding positions.
fn objective_parts(norm: &NormScenario, pos: &[usize], p: &[f64]) -> (f64, f64) {
    let mut interference = 0.0;
    for v in 0..norm.k() {
        if pos[v] > pos[0] {
            interference += p[v] * norm.g[v];
        }
    }
    (p[0] * norm.g[0], interference + norm.distortion(p) + 1.0)
}

fn ratio_of(norm: &NormScenario, pos: &[usize], p: &[f64]) -> f64 {
    let (n, d) = objective_parts(norm, pos, p);
    n / d
}

/// Dinkelbach parametric objective `N(p) - gamma * D(p)`.
fn dinkelbach_objective<'a>(
    norm: &'a NormScenario,
    pos: &'a [usize],
    gamma: f64,
) -> SeparableFn<'a> {
    let k = norm.k();
    SeparableFn {
        value: Box::new(move |p| {
            let (n, d) = objective_parts(norm, pos, p);
            n - gamma * d
        }),
        grad: Box::new(move |p, out| {
            for v in 0..k {
                let mut g = 0.0;
                if v == 0 {
                    g += norm.g[0];
                }
                if pos[v] > pos[0] {
                    g -= gamma * norm.g[v];
                }
                g -= gamma * norm.distortion_grad(p, v);
                out[v] = g;
            }
        }),
        hess_diag: Box::new(move |p, out| {
            for v in 0..k {
                out[v] = -gamma * norm.distortion_hess(p, v);
            }
        }),
    }
}

/// Floor constraints `G_u(p) >= 0` for floored users `u >= 1` with positive
/// floors (a zero floor is vacuous).
fn floor_constraints<'a>(
    norm: &'a NormScenario,
    pos: &'a [usize],
    taus: &[f64],
) -> Vec<SeparableFn<'a>> {
    let k = norm.k();
    let mut cons = Vec::new();
    for u in 1..k {
        let tau = taus[u - 1];
        if tau <= 0.0 {
            continue;
        }
        let c = 2f64.powf(tau) - 1.0;
        cons.push(SeparableFn {
            value: Box::new(move |p: &[f64]| {
                let mut interference = 0.0;
                for v in 0..k {
                    if pos[v] > pos[u] {
                        interference += p[v] * norm.g[v];
                    }
                }
                p[u] * norm.g[u] - c * (interference + norm.distortion(p) + 1.0)
            }),
            grad: Box::new(move |p: &[f64], out: &mut [f64]| {
                for v in 0..k {
                    let mut g = 0.0;
                    if v == u {
                        g += norm.g[u];
                    }
                    if pos[v] > pos[u] {
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

/// Strictly feasible start: floored users near their caps with user 0 nearly
/// silent satisfies the floors whenever they are jointly attainable with
/// margin; otherwise fall back to the max-min-slack feasibility phase.
fn locate_start(
    norm: &NormScenario,
    _pos: &[usize],
    taus: &[f64],
    cons: &[SeparableFn],
    cfg: &SolverSettings,
) -> Result<Vec<f64>, SolverError> {
    let k = norm.k();
    if cons.is_empty() {
        return Ok(norm.cap.iter().map(|&c| 0.5 * c).collect());
    }
    let any_floor = taus.iter().any(|&t| t > 0.0);
    let candidates: [(f64, f64); 4] = [(0.999, 1e-6), (0.9, 1e-3), (0.6, 1e-2), (0.3, 1e-2)];
    if any_floor {
        for (floor_frac, obj_frac) in candidates {
            let mut p: Vec<f64> = (0..k)
                .map(|u| {
                    if u == 0 {
                        obj_frac * norm.cap[0]
                    } else if taus[u - 1] > 0.0 {
                        floor_frac * norm.cap[u]
                    } else {
                        1e-9 * norm.cap[u]
                    }
                })
                .collect();
            p = clamp_interior(&p, &norm.cap, 1e-12);
            if cons.iter().all(|c| (c.value)(&p) > 0.0) {
                return Ok(p);
            }
        }
    }
    let (x0, slack) = feasible_start(cons, &norm.cap, cfg)?;
    if slack <= 0.0 {
        return Err(SolverError::Infeasible { max_slack: slack });
    }
    Ok(x0)
}

const POLISH_BISECT_ITERS: usize = 200;
const POLISH_SWEEPS: usize = 40;

/// Rate of user `u` in normalized units at powers `p`.
fn rate_at(norm: &NormScenario, pos: &[usize], p: &[f64], u: usize) -> f64 {
    let mut interference = 0.0;
    for v in 0..norm.k() {
        if pos[v] > pos[u] {
            interference += p[v] * norm.g[v];
        }
    }
    (1.0 + p[u] * norm.g[u] / (interference + norm.distortion(p) + 1.0)).log2()
}

/// Pin every floored user to rate equality given user 0's power; returns
/// `None` when some floor is unattainable at this `p0`.
fn pinned_point(
    p0: f64,
    seed: &[f64],
    norm: &NormScenario,
    pos: &[usize],
    taus: &[f64],
) -> Option<Vec<f64>> {
    let k = norm.k();
    let mut p = seed.to_vec();
    p[0] = p0;
    for _ in 0..POLISH_SWEEPS {
        let mut moved = 0.0f64;
        for u in 1..k {
            let tau = taus[u - 1];
            let old = p[u];
            if tau <= 0.0 {
                p[u] = 0.0;
            } else {
                p[u] = norm.cap[u];
                if rate_at(norm, pos, &p, u) < tau {
                    p[u] = old;
                    return None;
                }
                let (mut lo, mut hi) = (0.0, norm.cap[u]);
                for _ in 0..POLISH_BISECT_ITERS {
                    let mid = 0.5 * (lo + hi);
                    p[u] = mid;
                    if rate_at(norm, pos, &p, u) >= tau {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                p[u] = hi;
            }
            moved = moved.max((p[u] - old).abs() / norm.cap[u].max(1e-300));
        }
        if moved < 1e-15 {
            break;
        }
    }
    Some(p)
}

/// Final polish: line-search user 0's power along the manifold where every
/// floor holds with equality. Never returns a point with a lower ratio than
/// the barrier iterate (the caller keeps the better of the two).
fn profile_polish(
    x: &[f64],
    norm: &NormScenario,
    pos: &[usize],
    taus: &[f64],
) -> Option<Vec<f64>> {
    let cap0 = norm.cap[0];
    // largest p0 with all floors attainable
    let p0_max = if pinned_point(cap0, x, norm, pos, taus).is_some() {
        cap0
    } else {
        let (mut lo, mut hi) = (0.0, cap0);
        if pinned_point(lo, x, norm, pos, taus).is_none() {
            return None;
        }
        for _ in 0..POLISH_BISECT_ITERS {
            let mid = 0.5 * (lo + hi);
            if pinned_point(mid, x, norm, pos, taus).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let eval = |p0: f64| -> f64 {
        pinned_point(p0, x, norm, pos, taus)
            .map(|p| ratio_of(norm, pos, &p))
            .unwrap_or(f64::NEG_INFINITY)
    };
    // golden-section over [0, p0_max] plus the endpoints
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, p0_max);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..200 {
        if hi - lo < 1e-14 * cap0.max(1.0) {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = eval(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = eval(d);
        }
    }
    let mut best_p0 = 0.5 * (lo + hi);
    let mut best = eval(best_p0);
    for cand in [p0_max, 0.0] {
        let v = eval(cand);
        if v > best {
            best = v;
            best_p0 = cand;
        }
    }
    pinned_point(best_p0, x, norm, pos, taus)
}

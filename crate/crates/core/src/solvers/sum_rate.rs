//! Sum-rate maximization (equal weighting factors).
//!
//! The sum rate collapses to a single concave-over-convex ratio, so the
//! Dinkelbach iteration applies directly and the parametric Lagrangian
//! maximizer has a per-user closed form: with multipliers `lambda` for the
//! rate floors and `c_i = 2^{r_i} - 1`,
//!
//! ```text
//!           [  1 + lambda_k - sum_{i<k} lambda_i c_i   ] 1/(alpha_k - 1)
//! p_k* =    [ ----------------------------------------- ]                , clamped to [0, p_hat_k]
//!           [ (gamma + sum_i lambda_i c_i) a_k alpha_k  ]
//! ```
//!
//! (users with `a = 0` or `alpha <= 1` have an endpoint maximizer instead).
//! The multipliers are driven by a projected subgradient with diminishing
//! steps; with no floors the multipliers vanish and the power is the same
//! for every unclamped user. A final coordinate polish pins the result to
//! the exact constrained optimum.

use super::polish::{coordinate_ascent, floor_slack};
use super::{NormScenario, SolveReport, SolverError, SolverSettings};
use crate::noma::{sum_rate, PowerAllocation, Scenario};
use crate::solvers::concave::{feasible_start, SeparableFn};

const SUBGRADIENT_MAX_STEPS: usize = 5000;
const SUBGRADIENT_VIOLATION_TOL: f64 = 1e-6;
const POLISH_SWEEPS: usize = 60;

/// Maximize the sum rate subject to per-user rate floors `r` (bits/s/Hz)
/// under the natural decoding order (the sum rate itself is
/// order-invariant; the floors are evaluated at `pi(i) = i`).
pub fn sum_rate_maximize(
    floors: &[f64],
    s: &Scenario,
    cfg: &SolverSettings,
) -> Result<SolveReport, SolverError> {
    cfg.validate()?;
    let k = s.k();
    if floors.len() != k {
        return Err(SolverError::InvalidInput(format!(
            "expected {k} rate floors, got {}",
            floors.len()
        )));
    }
    for &r in floors {
        if !r.is_finite() || r < 0.0 {
            return Err(SolverError::InvalidInput(format!(
                "rate floors must be finite and >= 0, got {r}"
            )));
        }
    }
    let norm = NormScenario::new(s);
    let floor_c: Vec<f64> = floors.iter().map(|&r| 2f64.powf(r) - 1.0).collect();
    let has_floors = floor_c.iter().any(|&c| c > 0.0);

    if has_floors {
        // infeasible floors are reported with the max-min-slack certificate
        let cons = floor_fns(&norm, &floor_c);
        match feasible_start(&cons, &norm.cap, cfg) {
            Ok(_) => {}
            Err(e) => return Err(e),
        }
    }

    let mut lambda = vec![0.0; k];
    let mut gamma = 0.0;
    let mut p = norm.cap.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    // run past the requested tolerance while the closed form is this cheap;
    // convergence is still judged against cfg.epsilon
    let target = cfg.epsilon.min(1e-10);
    for it in 0..cfg.max_outer_iters.max(200) {
        iterations = it + 1;
        if has_floors {
            subgradient_multipliers(&norm, &floor_c, gamma, &mut lambda, &mut p, cfg);
            refine_subproblem(&norm, &floor_c, gamma, &mut p, cfg);
        } else {
            p = lagrangian_power(&norm, &floor_c, &lambda, gamma);
        }
        let num: f64 = p.iter().zip(&norm.g).map(|(&pi, &gi)| pi * gi).sum();
        let den = norm.distortion(&p) + 1.0;
        let f_residual = num - gamma * den;
        let gamma_next = num / den;
        trace.push(gamma_next);
        if f_residual.abs() <= cfg.epsilon {
            converged = true;
        }
        if f_residual.abs() <= target {
            break;
        }
        gamma = gamma_next;
    }

    if has_floors {
        // the dual iterate can sit slightly off feasibility; walk it inside
        // and sharpen with the exact-objective coordinate polish
        restore_feasibility(&norm, &floor_c, &mut p);
        let w = vec![1.0; k];
        coordinate_ascent(&norm, &w, &floor_c, &mut p, POLISH_SWEEPS);
    }

    let alloc = PowerAllocation::new(p).expect("solver produced invalid powers");
    let objective = sum_rate(&alloc, s);
    Ok(SolveReport {
        p_star: alloc,
        objective,
        iterations,
        converged,
        trace,
    })
}

/// Closed-form maximizer of the partial Lagrangian for fixed `gamma` and
/// multipliers.
fn lagrangian_power(
    norm: &NormScenario,
    floor_c: &[f64],
    lambda: &[f64],
    gamma: f64,
) -> Vec<f64> {
    let k = norm.k();
    let sum_all: f64 = (0..k).map(|i| lambda[i] * floor_c[i]).sum();
    let den_scalar = gamma + sum_all;
    let mut prefix = 0.0; // sum_{i<k} lambda_i c_i
    let mut p = vec![0.0; k];
    for u in 0..k {
        let num = 1.0 + lambda[u] - prefix;
        prefix += lambda[u] * floor_c[u];
        let (a, alpha, cap, g) = (norm.a[u], norm.alpha[u], norm.cap[u], norm.g[u]);
        p[u] = if a == 0.0 || alpha <= 1.0 {
            // Lagrangian is linear (or concave only at endpoints) in p_u:
            // compare the endpoint values
            let at_cap = g * (num * cap - den_scalar * a * cap.powf(alpha));
            if at_cap > 0.0 {
                cap
            } else {
                0.0
            }
        } else if num <= 0.0 || den_scalar <= 0.0 {
            if num > 0.0 {
                cap // den <= 0 means the distortion penalty is inactive
            } else {
                0.0
            }
        } else {
            (num / (den_scalar * a * alpha))
                .powf(1.0 / (alpha - 1.0))
                .clamp(0.0, cap)
        };
    }
    p
}

/// Projected subgradient on the dual of the parametric problem: the
/// subgradient of the dual function at `lambda` is the constraint slack
/// vector, so violated floors push their multipliers up. Diminishing steps
/// `c / sqrt(t)`.
fn subgradient_multipliers(
    norm: &NormScenario,
    floor_c: &[f64],
    gamma: f64,
    lambda: &mut [f64],
    p: &mut Vec<f64>,
    cfg: &SolverSettings,
) {
    let k = norm.k();
    for t in 1..=SUBGRADIENT_MAX_STEPS {
        *p = lagrangian_power(norm, floor_c, lambda, gamma);
        let mut worst = 0.0f64;
        let mut slacks = vec![0.0; k];
        for u in 0..k {
            if floor_c[u] > 0.0 {
                slacks[u] = floor_slack(norm, p, u, floor_c[u]);
                worst = worst.max(-slacks[u]);
            }
        }
        if worst <= SUBGRADIENT_VIOLATION_TOL && t > 1 {
            return;
        }
        let step = cfg.subgradient_c / (t as f64).sqrt();
        for u in 0..k {
            if floor_c[u] > 0.0 {
                lambda[u] = (lambda[u] - step * slacks[u]).max(0.0);
            }
        }
    }
}

/// The subgradient iterate inherits the dual method's slow tail, so the same
/// parametric subproblem (concave objective, concave floor constraints) is
/// re-solved by the interior-point machinery from the dual point; the better
/// of the two is kept.
fn refine_subproblem(
    norm: &NormScenario,
    floor_c: &[f64],
    gamma: f64,
    p: &mut Vec<f64>,
    cfg: &SolverSettings,
) {
    let k = norm.k();
    let objective = SeparableFn {
        value: Box::new(move |q: &[f64]| {
            q.iter().zip(&norm.g).map(|(&qi, &gi)| qi * gi).sum::<f64>()
                - gamma * (norm.distortion(q) + 1.0)
        }),
        grad: Box::new(move |q: &[f64], out: &mut [f64]| {
            for j in 0..k {
                out[j] = norm.g[j] - gamma * norm.distortion_grad(q, j);
            }
        }),
        hess_diag: Box::new(move |q: &[f64], out: &mut [f64]| {
            for j in 0..k {
                out[j] = -gamma * norm.distortion_hess(q, j);
            }
        }),
    };
    let prob = crate::solvers::concave::ConcaveProblem {
        objective,
        constraints: floor_fns(norm, floor_c),
        upper: norm.cap.clone(),
    };
    let fval = |q: &[f64]| {
        q.iter().zip(&norm.g).map(|(&qi, &gi)| qi * gi).sum::<f64>()
            - gamma * (norm.distortion(q) + 1.0)
    };
    if let Ok(sol) = crate::solvers::concave::solve_concave_subproblem(&prob, Some(p), cfg) {
        let feasible = floor_c
            .iter()
            .enumerate()
            .all(|(u, &c)| c <= 0.0 || floor_slack(norm, &sol.x, u, c) >= -1e-12);
        if feasible && fval(&sol.x) > fval(p) {
            *p = sol.x;
        }
    }
}

/// Nudge a near-feasible dual iterate into the feasible region by raising
/// violated users to their floor (sweeping until stable).
fn restore_feasibility(norm: &NormScenario, floor_c: &[f64], p: &mut [f64]) {
    for _ in 0..40 {
        let mut violated = false;
        for u in 0..norm.k() {
            if floor_c[u] <= 0.0 || floor_slack(norm, p, u, floor_c[u]) >= 0.0 {
                continue;
            }
            violated = true;
            let (mut lo, mut hi) = (p[u], norm.cap[u]);
            let mut probe = p.to_vec();
            probe[u] = hi;
            if floor_slack(norm, &probe, u, floor_c[u]) < 0.0 {
                p[u] = hi;
                continue;
            }
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                probe[u] = mid;
                if floor_slack(norm, &probe, u, floor_c[u]) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            p[u] = hi;
        }
        if !violated {
            return;
        }
    }
}

fn floor_fns<'a>(norm: &'a NormScenario, floor_c: &'a [f64]) -> Vec<SeparableFn<'a>> {
    let k = norm.k();
    let mut cons = Vec::new();
    for u in 0..k {
        let c = floor_c[u];
        if c <= 0.0 {
            continue;
        }
        cons.push(SeparableFn {
            value: Box::new(move |p: &[f64]| floor_slack(norm, p, u, c)),
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noma::{user_rates, DecodingOrder, Scenario};
    use crate::pa_model::PaModel;
    use crate::units::watts_to_dbm;

    const H_120M: f64 = 1.0045949010588951e-10;
    const H_80M: f64 = 2.882891137532078e-10;
    const N0: f64 = 1.1943215116604918e-13;
    const P_MAX: f64 = 3.9810717055349722;

    fn scenario() -> Scenario {
        Scenario::homogeneous(
            &[H_120M, H_80M],
            P_MAX,
            PaModel::new(0.0032, 1.3552).unwrap(),
            N0,
            30e6,
        )
        .unwrap()
    }

    #[test]
    fn unconstrained_users_transmit_equal_power() {
        let s = scenario();
        let rep = sum_rate_maximize(&[0.0, 0.0], &s, &SolverSettings::default()).unwrap();
        assert!(rep.converged);
        let p0 = rep.p_star.get(0);
        let p1 = rep.p_star.get(1);
        assert!((p0 - p1).abs() < 1e-9 * p0, "powers {p0} vs {p1}");
        // the section-VI operating point sits near 25.9 dBm
        assert!((watts_to_dbm(p0) - 25.9).abs() < 0.5, "p* = {} dBm", watts_to_dbm(p0));
        // throughput close to the reported 2.515e8 bits/s
        let throughput = s.bandwidth() * rep.objective;
        assert!((throughput / 2.515e8 - 1.0).abs() < 0.02, "throughput {throughput}");
    }

    #[test]
    fn ideal_pa_transmits_at_p_max() {
        let s = Scenario::homogeneous(&[H_120M, H_80M], P_MAX, PaModel::ideal(), N0, 30e6).unwrap();
        let rep = sum_rate_maximize(&[0.0, 0.0], &s, &SolverSettings::default()).unwrap();
        assert_eq!(rep.p_star.get(0), P_MAX);
        assert_eq!(rep.p_star.get(1), P_MAX);
    }

    #[test]
    fn trace_monotone_and_converged() {
        let s = scenario();
        let rep = sum_rate_maximize(&[0.0, 0.0], &s, &SolverSettings::default()).unwrap();
        for w in rep.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        assert!(rep.converged);
    }

    #[test]
    fn matches_grid_oracle_two_user() {
        use crate::solvers::oracle::{grid_oracle, GridObjective};
        let s = scenario();
        let rep = sum_rate_maximize(&[0.0, 0.0], &s, &SolverSettings::default()).unwrap();
        let grid = grid_oracle(&s, GridObjective::SumRate, 600).unwrap();
        assert!(rep.objective >= grid.objective - 1e-9);
        // within one grid step of the closed form
        let caps = s.power_caps();
        let step = caps[0].max(caps[1]) / 599.0;
        assert!((rep.p_star.get(0) - grid.p.get(0)).abs() <= step + 1e-9);
        assert!((rep.p_star.get(1) - grid.p.get(1)).abs() <= step + 1e-9);
    }

    #[test]
    fn floors_bind_when_active() {
        let s = scenario();
        // force the far user (weak channel, decoded first) to a demanding floor
        let floors = [2.0, 0.0];
        let rep = sum_rate_maximize(&floors, &s, &SolverSettings::default()).unwrap();
        let rates = user_rates(&DecodingOrder::natural(2), &rep.p_star, &s);
        assert!(rates[0] >= floors[0] - 1e-9, "floor violated: {}", rates[0]);
        // a binding floor costs sum rate relative to the unconstrained optimum
        let free = sum_rate_maximize(&[0.0, 0.0], &s, &SolverSettings::default()).unwrap();
        assert!(rep.objective <= free.objective + 1e-12);
        // and the constrained answer should dominate a grid search under floors
        let caps = s.power_caps();
        let n = 400;
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                let p = PowerAllocation::new(vec![
                    caps[0] * i as f64 / (n - 1) as f64,
                    caps[1] * j as f64 / (n - 1) as f64,
                ])
                .unwrap();
                let r = user_rates(&DecodingOrder::natural(2), &p, &s);
                if r[0] >= floors[0] && r[1] >= floors[1] {
                    best = best.max(sum_rate(&p, &s));
                }
            }
        }
        assert!(rep.objective >= best - 1e-6, "solver {} grid {best}", rep.objective);
    }

    #[test]
    fn infeasible_floors_rejected() {
        let s = scenario();
        match sum_rate_maximize(&[40.0, 40.0], &s, &SolverSettings::default()) {
            Err(SolverError::Infeasible { .. }) => {}
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }
}

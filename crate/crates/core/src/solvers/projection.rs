//! Euclidean projection of a power vector onto the feasible set of the
//! WSRMax problem (rate floors plus the `[0, p_hat]` box). Used to make
//! power control policies that were optimized under a mismatched PA model
//! comparable under rate constraints: their powers generally violate the
//! true model's floors and caps, and the nearest feasible point is the
//! fairest surrogate.

use super::concave::{solve_concave_subproblem, ConcaveProblem, SeparableFn};
use super::{NormScenario, SolverError, SolverSettings};
use crate::noma::{rate_constraint_slack, DecodingOrder, PowerAllocation, Scenario};

/// `argmin || p - p_prime ||` subject to `rate_k >= floors[k]` (user-indexed)
/// under `order`, and `0 <= p_k <= p_hat_k`. Returns `p_prime` unchanged when
/// it is already feasible.
pub fn project_feasible(
    p_prime: &PowerAllocation,
    floors: &[f64],
    order: &DecodingOrder,
    s: &Scenario,
    cfg: &SolverSettings,
) -> Result<PowerAllocation, SolverError> {
    cfg.validate()?;
    let k = s.k();
    if p_prime.len() != k || floors.len() != k || order.len() != k {
        return Err(SolverError::InvalidInput(
            "power vector, floors and order must match the user count".into(),
        ));
    }
    let caps = s.power_caps();
    let in_box = (0..k).all(|u| p_prime.get(u) <= caps[u]);
    let floors_ok = (0..k).all(|pos| {
        let u = order.user_at(pos);
        floors[u] <= 0.0 || rate_constraint_slack(pos, order, p_prime, s, floors[u]) >= 0.0
    });
    if in_box && floors_ok {
        return Ok(p_prime.clone());
    }

    let norm = NormScenario::permuted(s, order);
    let c_slot: Vec<f64> = (0..k)
        .map(|i| 2f64.powf(floors[order.user_at(i)]) - 1.0)
        .collect();
    let target: Vec<f64> = (0..k).map(|i| p_prime.get(order.user_at(i))).collect();
    // scale so the quadratic objective is O(1) over the box
    let scale: f64 = target
        .iter()
        .zip(&norm.cap)
        .map(|(&t, &c)| t.max(c) * t.max(c))
        .sum::<f64>()
        .max(1e-12);

    let objective = SeparableFn {
        value: Box::new({
            let target = target.clone();
            move |p: &[f64]| {
                -p.iter()
                    .zip(&target)
                    .map(|(&x, &t)| (x - t) * (x - t))
                    .sum::<f64>()
                    / scale
            }
        }),
        grad: Box::new({
            let target = target.clone();
            move |p: &[f64], out: &mut [f64]| {
                for j in 0..p.len() {
                    out[j] = -2.0 * (p[j] - target[j]) / scale;
                }
            }
        }),
        hess_diag: Box::new(move |p: &[f64], out: &mut [f64]| {
            out[..p.len()].fill(-2.0 / scale);
        }),
    };
    let prob = ConcaveProblem {
        objective,
        constraints: floor_fns(&norm, &c_slot),
        upper: norm.cap.clone(),
    };
    let sol = solve_concave_subproblem(&prob, None, cfg)?;
    let mut p_user = vec![0.0; k];
    for slot in 0..k {
        p_user[order.user_at(slot)] = sol.x[slot];
    }
    Ok(PowerAllocation::new(p_user).expect("projection produced invalid powers"))
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noma::Scenario;
    use crate::pa_model::PaModel;

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
    fn feasible_point_unchanged() {
        let s = scenario();
        let p = PowerAllocation::new(vec![0.2, 0.2]).unwrap();
        let out = project_feasible(
            &p,
            &[0.0, 0.0],
            &DecodingOrder::natural(2),
            &s,
            &SolverSettings::default(),
        )
        .unwrap();
        assert_eq!(out, p);
    }

    #[test]
    fn out_of_box_point_clamps_to_caps() {
        // full transmit power violates the distortion-aware caps; the nearest
        // feasible point with no floors is the cap vector
        let s = scenario();
        let caps = s.power_caps();
        let p = PowerAllocation::new(vec![P_MAX, P_MAX]).unwrap();
        let out = project_feasible(
            &p,
            &[0.0, 0.0],
            &DecodingOrder::natural(2),
            &s,
            &SolverSettings::default(),
        )
        .unwrap();
        for u in 0..2 {
            assert!(
                (out.get(u) - caps[u]).abs() < 1e-4 * caps[u],
                "user {u}: {} vs cap {}",
                out.get(u),
                caps[u]
            );
        }
    }

    #[test]
    fn matches_grid_oracle_nearest_point() {
        let s = scenario();
        let order = DecodingOrder::new(vec![1, 0]).unwrap();
        let floors = [0.8, 0.4];
        let p_prime = PowerAllocation::new(vec![3.0, 0.01]).unwrap();
        let out = project_feasible(&p_prime, &floors, &order, &s, &SolverSettings::default())
            .unwrap();
        // brute-force nearest feasible grid point
        let caps = s.power_caps();
        let n = 700;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let cand = PowerAllocation::new(vec![
                    caps[0] * i as f64 / (n - 1) as f64,
                    caps[1] * j as f64 / (n - 1) as f64,
                ])
                .unwrap();
                let ok = (0..2).all(|pos| {
                    let u = order.user_at(pos);
                    rate_constraint_slack(pos, &order, &cand, &s, floors[u]) >= 0.0
                });
                if ok {
                    let d = (cand.get(0) - 3.0).powi(2) + (cand.get(1) - 0.01).powi(2);
                    if d < best.0 {
                        best = (d, cand.get(0), cand.get(1));
                    }
                }
            }
        }
        assert!((out.get(0) - best.1).abs() < 1e-3, "{} vs {}", out.get(0), best.1);
        assert!((out.get(1) - best.2).abs() < 1e-3, "{} vs {}", out.get(1), best.2);
        // and the projection is feasible
        for pos in 0..2 {
            let u = order.user_at(pos);
            assert!(rate_constraint_slack(pos, &order, &out, &s, floors[u]) >= -1e-12);
        }
    }

    #[test]
    fn empty_feasible_set_is_reported() {
        let s = scenario();
        let p = PowerAllocation::new(vec![0.1, 0.1]).unwrap();
        match project_feasible(
            &p,
            &[25.0, 25.0],
            &DecodingOrder::natural(2),
            &s,
            &SolverSettings::default(),
        ) {
            Err(SolverError::Infeasible { .. }) => {}
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }
}

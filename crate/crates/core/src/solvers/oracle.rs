//! Exhaustive grid search over the power box, used as a verification oracle
//! for the iterative solvers (it stands in for a meta-heuristic benchmark:
//! on these small problems exhaustive search is both simpler and stronger).
//! Exponential in the user count, hence capped at K <= 3.

use super::{SolveReport, SolverError};
use crate::noma::{sum_rate, user_rates, DecodingOrder, PowerAllocation, Scenario};

/// Objective evaluated at every grid point.
pub enum GridObjective<'a> {
    /// Unconstrained sum rate.
    SumRate,
    /// Weighted sum rate under the natural decoding order.
    Wsr { weights: &'a [f64] },
    /// Rate of user 0 over grid points where user `j` meets `taus[j-1]`,
    /// under `order`.
    RateProfile {
        taus: &'a [f64],
        order: &'a DecodingOrder,
    },
}

/// Best grid point and its objective.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub p: PowerAllocation,
    pub objective: f64,
}

impl From<GridSolution> for SolveReport {
    fn from(g: GridSolution) -> Self {
        SolveReport {
            objective: g.objective,
            p_star: g.p,
            iterations: 1,
            converged: true,
            trace: vec![],
        }
    }
}

/// Exhaustive search over `[0, p_hat_k]^K` with `resolution` points per axis.
pub fn grid_oracle(
    s: &Scenario,
    objective: GridObjective,
    resolution: usize,
) -> Result<GridSolution, SolverError> {
    let k = s.k();
    if k > 3 {
        return Err(SolverError::InvalidInput(format!(
            "grid oracle supports K <= 3, got K = {k}"
        )));
    }
    if !(2..=1000).contains(&resolution) {
        return Err(SolverError::InvalidInput(format!(
            "resolution must be in 2..=1000, got {resolution}"
        )));
    }
    if let GridObjective::Wsr { weights } = &objective {
        if weights.len() != k {
            return Err(SolverError::InvalidInput(
                "weight vector must match the user count".into(),
            ));
        }
    }
    if let GridObjective::RateProfile { taus, order } = &objective {
        if taus.len() + 1 != k || order.len() != k {
            return Err(SolverError::InvalidInput(
                "rate-profile floors/order must match the user count".into(),
            ));
        }
    }
    let caps = s.power_caps();
    let natural = DecodingOrder::natural(k);
    let mut idx = vec![0usize; k];
    let mut best: Option<GridSolution> = None;
    let mut p = vec![0.0; k];
    loop {
        for u in 0..k {
            p[u] = caps[u] * idx[u] as f64 / (resolution - 1) as f64;
        }
        let alloc = PowerAllocation::new(p.clone()).expect("grid point is valid");
        let value = match &objective {
            GridObjective::SumRate => Some(sum_rate(&alloc, s)),
            GridObjective::Wsr { weights } => {
                let rates = user_rates(&natural, &alloc, s);
                Some(rates.iter().zip(*weights).map(|(&r, &w)| r * w).sum())
            }
            GridObjective::RateProfile { taus, order } => {
                let rates = user_rates(order, &alloc, s);
                if (1..k).all(|u| rates[u] >= taus[u - 1]) {
                    Some(rates[0])
                } else {
                    None
                }
            }
        };
        if let Some(v) = value {
            if best.as_ref().map_or(true, |b| v > b.objective) {
                best = Some(GridSolution {
                    p: alloc,
                    objective: v,
                });
            }
        }
        // advance the mixed-radix counter
        let mut carry = 0;
        loop {
            idx[carry] += 1;
            if idx[carry] < resolution {
                break;
            }
            idx[carry] = 0;
            carry += 1;
            if carry == k {
                return best.ok_or(SolverError::Infeasible { max_slack: f64::NEG_INFINITY });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pa_model::{optimal_p2p_power, PaModel};

    const H_80M: f64 = 2.882891137532078e-10;
    const N0: f64 = 1.1943215116604918e-13;
    const P_MAX: f64 = 3.9810717055349722;

    #[test]
    fn single_user_grid_finds_p_opt() {
        let s = Scenario::homogeneous(
            &[H_80M],
            P_MAX,
            PaModel::new(0.0032, 1.3552).unwrap(),
            N0,
            30e6,
        )
        .unwrap();
        let sol = grid_oracle(&s, GridObjective::SumRate, 1000).unwrap();
        let expect = optimal_p2p_power(s.link(0), s.model(0));
        let step = s.power_caps()[0] / 999.0;
        assert!((sol.p.get(0) - expect).abs() <= step);
    }

    #[test]
    fn resolution_and_k_limits() {
        let s = Scenario::homogeneous(
            &[H_80M, H_80M, H_80M, H_80M],
            P_MAX,
            PaModel::ideal(),
            N0,
            30e6,
        )
        .unwrap();
        assert!(grid_oracle(&s, GridObjective::SumRate, 10).is_err());
        let s2 = Scenario::homogeneous(&[H_80M], P_MAX, PaModel::ideal(), N0, 30e6).unwrap();
        assert!(grid_oracle(&s2, GridObjective::SumRate, 1).is_err());
        assert!(grid_oracle(&s2, GridObjective::SumRate, 1001).is_err());
    }
}

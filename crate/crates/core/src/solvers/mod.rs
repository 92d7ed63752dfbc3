//! Optimization machinery: the inner log-barrier solver for concave
//! subproblems, Dinkelbach single-ratio solvers (rate-profile boundary
//! points and sum-rate maximization), weighted sum-rate maximization via a
//! Lagrangian-dual + quadratic transform, feasibility projection, and an
//! exhaustive grid oracle used for verification.
//!
//! All solvers share conventions:
//! - powers live in the box `[0, p_hat_k]` with `p_hat_k = min(p_max, p_opt_k)`;
//!   transmitting above the single-link stationary point is never optimal,
//! - channel gains are normalized by the noise power internally, so Dinkelbach
//!   residuals `F` are in noise-power units and the stopping threshold
//!   `epsilon` is dimensionless,
//! - solves are deterministic given identical settings and inputs.

pub mod concave;
pub mod dinkelbach;
pub mod oracle;
pub(crate) mod polish;
pub mod projection;
pub mod sum_rate;
pub mod wsr;

pub use concave::{feasible_start, solve_concave_subproblem, ConcaveProblem, InnerSolution, SeparableFn};
pub use dinkelbach::{dinkelbach_rate_profile, rate_profile_maximize};
pub use oracle::{grid_oracle, GridObjective, GridSolution};
pub use projection::project_feasible;
pub use sum_rate::sum_rate_maximize;
pub use wsr::wsr_maximize;

use crate::noma::{DecodingOrder, PowerAllocation, Scenario};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    /// The constraint set is empty; carries the best attainable minimum
    /// constraint slack found by the feasibility phase (negative).
    #[error("problem infeasible (max attainable min-slack {max_slack:.3e})")]
    Infeasible { max_slack: f64 },
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
}

/// Knobs shared by every solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Outer stopping threshold on the Dinkelbach residual `|F|` (in
    /// noise-power units) or on the objective change of the alternating
    /// WSR updates.
    pub epsilon: f64,
    /// Maximum outer iterations of any iterative loop.
    pub max_outer_iters: usize,
    /// Relative accuracy target of the inner barrier solver.
    pub inner_tol: f64,
    /// Multiplicative barrier parameter schedule (`t <- t * barrier_mu`).
    pub barrier_mu: f64,
    /// Number of rate-profile points when tracing a two-user boundary.
    pub tau_grid: usize,
    /// Subgradient step scale `c` in the diminishing schedule `c / sqrt(t)`.
    pub subgradient_c: f64,
    /// Seed for randomized helpers (experiment drivers); solvers themselves
    /// are deterministic.
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_outer_iters: 100,
            inner_tol: 1e-8,
            barrier_mu: 10.0,
            tau_grid: 200,
            subgradient_c: 1.0,
            seed: 0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), SolverError> {
        let pos = [
            ("epsilon", self.epsilon),
            ("inner_tol", self.inner_tol),
            ("barrier_mu", self.barrier_mu),
            ("subgradient_c", self.subgradient_c),
        ];
        for (name, v) in pos {
            if !v.is_finite() || v <= 0.0 {
                return Err(SolverError::InvalidInput(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.barrier_mu <= 1.0 {
            return Err(SolverError::InvalidInput(
                "barrier_mu must exceed 1".into(),
            ));
        }
        if self.max_outer_iters == 0 {
            return Err(SolverError::InvalidInput(
                "max_outer_iters must be positive".into(),
            ));
        }
        if self.tau_grid < 2 {
            return Err(SolverError::InvalidInput(
                "tau_grid must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a solve: the optimizer, the achieved objective (recomputed
/// from the returned powers through the exact rate expressions), iteration
/// count, convergence flag and the per-iteration trace of the outer loop
/// (the auxiliary-ratio sequence for Dinkelbach loops, which is monotone
/// non-decreasing).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub p_star: PowerAllocation,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

/// Scenario view in noise-normalized units: `g_k = |h_k|^2 / N_0`, noise
/// power 1. Rates and SINRs are unchanged by the normalization; it only
/// keeps solver internals well-scaled.
#[derive(Debug, Clone)]
pub(crate) struct NormScenario {
    pub g: Vec<f64>,
    pub a: Vec<f64>,
    pub alpha: Vec<f64>,
    pub cap: Vec<f64>,
}

impl NormScenario {
    pub fn new(s: &Scenario) -> Self {
        let n0 = s.noise_power();
        let k = s.k();
        let mut g = Vec::with_capacity(k);
        let mut a = Vec::with_capacity(k);
        let mut alpha = Vec::with_capacity(k);
        for u in 0..k {
            g.push(s.link(u).channel_gain() / n0);
            a.push(s.model(u).a());
            alpha.push(s.model(u).alpha());
        }
        Self {
            g,
            a,
            alpha,
            cap: s.power_caps(),
        }
    }

    /// Reindex users so that `order` becomes the natural order: slot `i`
    /// holds the user decoded at position `i`.
    pub fn permuted(s: &Scenario, order: &DecodingOrder) -> Self {
        let base = Self::new(s);
        let k = base.g.len();
        let mut out = NormScenario {
            g: vec![0.0; k],
            a: vec![0.0; k],
            alpha: vec![0.0; k],
            cap: vec![0.0; k],
        };
        for pos in 0..k {
            let u = order.user_at(pos);
            out.g[pos] = base.g[u];
            out.a[pos] = base.a[u];
            out.alpha[pos] = base.alpha[u];
            out.cap[pos] = base.cap[u];
        }
        out
    }

    pub fn k(&self) -> usize {
        self.g.len()
    }

    /// Normalized aggregate distortion `sum_i a_i p_i^{alpha_i} g_i`.
    pub fn distortion(&self, p: &[f64]) -> f64 {
        let mut d = 0.0;
        for i in 0..self.k() {
            if self.a[i] > 0.0 && p[i] > 0.0 {
                d += self.a[i] * p[i].powf(self.alpha[i]) * self.g[i];
            }
        }
        d
    }

    /// Gradient of [`Self::distortion`] with respect to `p_i`.
    pub fn distortion_grad(&self, p: &[f64], i: usize) -> f64 {
        if self.a[i] == 0.0 {
            return 0.0;
        }
        self.a[i] * self.alpha[i] * p[i].max(0.0).powf(self.alpha[i] - 1.0) * self.g[i]
    }

    /// Second derivative of [`Self::distortion`] with respect to `p_i`.
    pub fn distortion_hess(&self, p: &[f64], i: usize) -> f64 {
        if self.a[i] == 0.0 || self.alpha[i] == 1.0 {
            return 0.0;
        }
        self.a[i]
            * self.alpha[i]
            * (self.alpha[i] - 1.0)
            * p[i].max(1e-300).powf(self.alpha[i] - 2.0)
            * self.g[i]
    }

    /// SINR of the user in slot `pos` under the natural order.
    pub fn sinr_natural(&self, p: &[f64], pos: usize) -> f64 {
        let mut interference = 0.0;
        for j in pos + 1..self.k() {
            interference += p[j] * self.g[j];
        }
        p[pos] * self.g[pos] / (interference + self.distortion(p) + 1.0)
    }

}

/// Clamp a candidate strictly inside `(0, cap)` by a relative margin, as
/// required for barrier starts.
pub(crate) fn clamp_interior(x: &[f64], cap: &[f64], margin: f64) -> Vec<f64> {
    x.iter()
        .zip(cap)
        .map(|(&v, &c)| v.max(margin * c).min((1.0 - margin) * c))
        .collect()
}

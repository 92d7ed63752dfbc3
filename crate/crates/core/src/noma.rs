//! Multi-user uplink NOMA SINR and rate expressions under PA distortion.
//!
//! The base station decodes users successively in a fixed order. The user
//! decoded at position `k` sees residual signal interference from all users
//! decoded after it, plus the aggregate PA distortion of **all** users
//! (including its own): SIC removes decoded signals but cannot touch the
//! distortion noise,
//!
//! ```text
//!                         p_{pi(k)} |h_{pi(k)}|^2
//! gamma_k = -------------------------------------------------------------
//!           sum_{j>k} p_{pi(j)} |h_{pi(j)}|^2
//!               + sum_{i=1..K} a_i p_i^{alpha_i} |h_i|^2 + N_0
//! ```
//!
//! The sum rate collapses to a single fraction that is independent of the
//! decoding order.

use crate::pa_model::{optimal_p2p_power, LinkBudget, PaModel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("{0}")]
    Invalid(String),
}

/// Immutable description of a K-user uplink: per-user link budgets and PA
/// models, shared receiver noise power (watts) and system bandwidth (Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    users: Vec<LinkBudget>,
    models: Vec<PaModel>,
    noise_power: f64,
    bandwidth: f64,
}

impl Scenario {
    /// Build a scenario from per-user channel gains and power limits. Each
    /// user's [`LinkBudget`] shares the scenario noise power, so single-link
    /// results and multi-user rates are always consistent.
    pub fn new(
        gains: &[f64],
        p_max: &[f64],
        models: Vec<PaModel>,
        noise_power: f64,
        bandwidth: f64,
    ) -> Result<Self, ScenarioError> {
        if gains.is_empty() {
            return Err(ScenarioError::Invalid("need at least one user".into()));
        }
        if gains.len() != p_max.len() || gains.len() != models.len() {
            return Err(ScenarioError::Invalid(format!(
                "length mismatch: {} gains, {} power limits, {} PA models",
                gains.len(),
                p_max.len(),
                models.len()
            )));
        }
        if !noise_power.is_finite() || noise_power <= 0.0 {
            return Err(ScenarioError::Invalid(format!(
                "noise power must be > 0, got {noise_power}"
            )));
        }
        if !bandwidth.is_finite() || bandwidth <= 0.0 {
            return Err(ScenarioError::Invalid(format!(
                "bandwidth must be > 0, got {bandwidth}"
            )));
        }
        let users = gains
            .iter()
            .zip(p_max)
            .map(|(&g, &p)| {
                LinkBudget::new(g, noise_power, p)
                    .map_err(|e| ScenarioError::Invalid(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            users,
            models,
            noise_power,
            bandwidth,
        })
    }

    /// All users share one power limit and one PA model.
    pub fn homogeneous(
        gains: &[f64],
        p_max: f64,
        model: PaModel,
        noise_power: f64,
        bandwidth: f64,
    ) -> Result<Self, ScenarioError> {
        let p = vec![p_max; gains.len()];
        let models = vec![model; gains.len()];
        Self::new(gains, &p, models, noise_power, bandwidth)
    }

    pub fn k(&self) -> usize {
        self.users.len()
    }

    pub fn link(&self, user: usize) -> &LinkBudget {
        &self.users[user]
    }

    pub fn model(&self, user: usize) -> &PaModel {
        &self.models[user]
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Per-user power cap `min(p_max, p_opt)`: transmitting above the
    /// single-link stationary point only adds self-interference, so solvers
    /// restrict the search box to these caps.
    pub fn power_caps(&self) -> Vec<f64> {
        self.users
            .iter()
            .zip(&self.models)
            .map(|(l, m)| optimal_p2p_power(l, m))
            .collect()
    }

    /// Same channels and limits with every PA replaced by an ideal one.
    /// This is the model assumed by the PC-IDEAL power control policy.
    pub fn ideal_counterpart(&self) -> Scenario {
        Scenario {
            users: self.users.clone(),
            models: vec![PaModel::ideal(); self.users.len()],
            noise_power: self.noise_power,
            bandwidth: self.bandwidth,
        }
    }
}

/// A successive decoding order: `user_at(0)` is decoded first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodingOrder(Vec<usize>);

impl DecodingOrder {
    /// Validates that `perm` is a permutation of `0..K`.
    pub fn new(perm: Vec<usize>) -> Result<Self, ScenarioError> {
        let k = perm.len();
        let mut seen = vec![false; k];
        for &u in &perm {
            if u >= k || seen[u] {
                return Err(ScenarioError::Invalid(format!(
                    "{perm:?} is not a permutation of 0..{k}"
                )));
            }
            seen[u] = true;
        }
        Ok(Self(perm))
    }

    /// Natural order: user 0 decoded first (`pi(i) = i`).
    pub fn natural(k: usize) -> Self {
        Self((0..k).collect())
    }

    /// Reversed order: user K-1 decoded first.
    pub fn reversed(k: usize) -> Self {
        Self((0..k).rev().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// User decoded at position `pos`.
    pub fn user_at(&self, pos: usize) -> usize {
        self.0[pos]
    }

    /// Decoding position of `user`.
    pub fn position_of(&self, user: usize) -> usize {
        self.0.iter().position(|&u| u == user).expect("user index out of range")
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Per-user transmit powers in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation(Vec<f64>);

impl PowerAllocation {
    pub fn new(watts: Vec<f64>) -> Result<Self, ScenarioError> {
        for &p in &watts {
            if !p.is_finite() || p < 0.0 {
                return Err(ScenarioError::Invalid(format!(
                    "powers must be finite and >= 0, got {p}"
                )));
            }
        }
        Ok(Self(watts))
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0.0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, user: usize) -> f64 {
        self.0[user]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.clone()
    }
}

/// Aggregate distortion noise power at the receiver:
/// `sum_i a_i p_i^{alpha_i} |h_i|^2` (watts). Present in every user's
/// denominator regardless of decoding position.
pub fn total_distortion_power(p: &PowerAllocation, s: &Scenario) -> f64 {
    debug_assert_eq!(p.len(), s.k());
    p.as_slice()
        .iter()
        .enumerate()
        .map(|(i, &pi)| {
            let m = s.model(i);
            m.a() * pi.powf(m.alpha()) * s.link(i).channel_gain()
        })
        .sum()
}

fn check_args(pos: usize, order: &DecodingOrder, p: &PowerAllocation, s: &Scenario) {
    assert_eq!(order.len(), s.k(), "decoding order length must match user count");
    assert_eq!(p.len(), s.k(), "power allocation length must match user count");
    assert!(pos < s.k(), "decoding position {pos} out of range for K = {}", s.k());
}

/// SINR of the user decoded at position `pos` under `order`.
pub fn sinr(pos: usize, order: &DecodingOrder, p: &PowerAllocation, s: &Scenario) -> f64 {
    check_args(pos, order, p, s);
    let user = order.user_at(pos);
    let mut interference = 0.0;
    for later in pos + 1..s.k() {
        let j = order.user_at(later);
        interference += p.get(j) * s.link(j).channel_gain();
    }
    let den = interference + total_distortion_power(p, s) + s.noise_power();
    p.get(user) * s.link(user).channel_gain() / den
}

/// Rate (bits/s/Hz) of the user decoded at position `pos`.
pub fn user_rate(pos: usize, order: &DecodingOrder, p: &PowerAllocation, s: &Scenario) -> f64 {
    (1.0 + sinr(pos, order, p, s)).log2()
}

/// Rates of all users indexed by **user** (not decoding position).
pub fn user_rates(order: &DecodingOrder, p: &PowerAllocation, s: &Scenario) -> Vec<f64> {
    let mut out = vec![0.0; s.k()];
    for pos in 0..s.k() {
        out[order.user_at(pos)] = user_rate(pos, order, p, s);
    }
    out
}

/// Sum rate in bits/s/Hz. Independent of the decoding order:
/// `log2(1 + sum_k p_k |h_k|^2 / (sum_k a_k p_k^{alpha_k} |h_k|^2 + N_0))`.
pub fn sum_rate(p: &PowerAllocation, s: &Scenario) -> f64 {
    assert_eq!(p.len(), s.k(), "power allocation length must match user count");
    let signal: f64 = p
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &pi)| pi * s.link(i).channel_gain())
        .sum();
    let den = total_distortion_power(p, s) + s.noise_power();
    (1.0 + signal / den).log2()
}

/// Rate-floor slack of the user decoded at position `pos`:
///
/// ```text
/// G = p |h|^2 - (2^r - 1) * (interference + distortion + N_0)
/// ```
///
/// Nonnegative exactly when that user's rate is at least `r`.
pub fn rate_constraint_slack(
    pos: usize,
    order: &DecodingOrder,
    p: &PowerAllocation,
    s: &Scenario,
    r: f64,
) -> f64 {
    check_args(pos, order, p, s);
    assert!(r >= 0.0, "rate floor must be nonnegative, got {r}");
    let user = order.user_at(pos);
    let mut interference = 0.0;
    for later in pos + 1..s.k() {
        let j = order.user_at(later);
        interference += p.get(j) * s.link(j).channel_gain();
    }
    let den = interference + total_distortion_power(p, s) + s.noise_power();
    p.get(user) * s.link(user).channel_gain() - (2f64.powf(r) - 1.0) * den
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const H_120M: f64 = 1.0045949010588951e-10;
    const H_80M: f64 = 2.882891137532078e-10;
    const N0: f64 = 1.1943215116604918e-13;
    const P_MAX: f64 = 3.9810717055349722;

    fn section_vi_scenario() -> Scenario {
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
    fn single_user_ideal_sinr() {
        let s = Scenario::homogeneous(&[H_80M], P_MAX, PaModel::ideal(), N0, 30e6).unwrap();
        let p = PowerAllocation::new(vec![1.0]).unwrap();
        let g = sinr(0, &DecodingOrder::natural(1), &p, &s);
        assert_relative_eq!(g, H_80M / N0, max_relative = 1e-14);
    }

    #[test]
    fn last_decoded_user_sees_only_distortion() {
        // order 2 -> 1 (user index 1 first): position 1 decodes user 0 with
        // no signal interference, both distortion terms plus noise remain.
        let s = section_vi_scenario();
        let p = PowerAllocation::new(vec![0.389, 0.389]).unwrap();
        let order = DecodingOrder::new(vec![1, 0]).unwrap();
        let g = sinr(1, &order, &p, &s);
        let expect = 0.389 * H_120M / (total_distortion_power(&p, &s) + N0);
        assert_relative_eq!(g, expect, max_relative = 1e-14);
    }

    #[test]
    fn first_decoded_user_sees_full_interference() {
        let s = section_vi_scenario();
        let p = PowerAllocation::new(vec![0.389, 0.389]).unwrap();
        let order = DecodingOrder::new(vec![1, 0]).unwrap();
        let g = sinr(0, &order, &p, &s);
        let expect =
            0.389 * H_80M / (0.389 * H_120M + total_distortion_power(&p, &s) + N0);
        assert_relative_eq!(g, expect, max_relative = 1e-14);
    }

    #[test]
    fn two_user_rates_match_symbolic_expansion() {
        // order pi1 = 2 -> 1 must reproduce the expanded pair
        let s = section_vi_scenario();
        let p = PowerAllocation::new(vec![0.7, 0.3]).unwrap();
        let order = DecodingOrder::new(vec![1, 0]).unwrap();
        let (a, al) = (0.0032, 1.3552);
        let dist = a * 0.7f64.powf(al) * H_120M + a * 0.3f64.powf(al) * H_80M;
        let r_user0 = (1.0 + 0.7 * H_120M / (dist + N0)).log2();
        let r_user1 = (1.0 + 0.3 * H_80M / (0.7 * H_120M + dist + N0)).log2();
        assert_relative_eq!(user_rate(1, &order, &p, &s), r_user0, max_relative = 1e-13);
        assert_relative_eq!(user_rate(0, &order, &p, &s), r_user1, max_relative = 1e-13);
    }

    #[test]
    fn rate_maps_sinr_edge_values() {
        let s = section_vi_scenario();
        let zero = PowerAllocation::zeros(2);
        let order = DecodingOrder::natural(2);
        assert_eq!(user_rate(0, &order, &zero, &s), 0.0);
        assert_eq!(sum_rate(&zero, &s), 0.0);
    }

    #[test]
    fn sum_rate_is_order_invariant_two_user() {
        let s = section_vi_scenario();
        let p = PowerAllocation::new(vec![0.52, 0.11]).unwrap();
        let o1 = DecodingOrder::new(vec![1, 0]).unwrap();
        let o2 = DecodingOrder::new(vec![0, 1]).unwrap();
        let sum1: f64 = (0..2).map(|k| user_rate(k, &o1, &p, &s)).sum();
        let sum2: f64 = (0..2).map(|k| user_rate(k, &o2, &p, &s)).sum();
        let direct = sum_rate(&p, &s);
        assert!((sum1 - direct).abs() < 1e-12);
        assert!((sum2 - direct).abs() < 1e-12);
    }

    #[test]
    fn fig6_operating_point_throughput() {
        // 25.9 dBm each; bandwidth-scaled sum close to the reported
        // (1.933 + 0.582)e8 bits/s operating point
        let s = section_vi_scenario();
        let p_w = crate::units::dbm_to_watts(25.9);
        let p = PowerAllocation::new(vec![p_w, p_w]).unwrap();
        let throughput = s.bandwidth() * sum_rate(&p, &s);
        assert!(
            (throughput / 2.515e8 - 1.0).abs() < 0.02,
            "throughput {throughput}"
        );
    }

    #[test]
    fn slack_zero_rate_floor_always_feasible() {
        let s = section_vi_scenario();
        let p = PowerAllocation::new(vec![0.1, 0.2]).unwrap();
        let order = DecodingOrder::natural(2);
        assert!(rate_constraint_slack(0, &order, &p, &s, 0.0) >= 0.0);
        assert!(rate_constraint_slack(1, &order, &p, &s, 0.0) >= 0.0);
    }

    #[test]
    fn slack_zero_iff_rate_equals_floor() {
        let s = section_vi_scenario();
        let p = PowerAllocation::new(vec![0.3, 0.9]).unwrap();
        let order = DecodingOrder::new(vec![1, 0]).unwrap();
        for pos in 0..2 {
            let r = user_rate(pos, &order, &p, &s);
            let slack = rate_constraint_slack(pos, &order, &p, &s, r);
            // algebraic identity: floor at the achieved rate has zero slack
            assert!(slack.abs() < 1e-24, "slack {slack}");
        }
    }

    #[test]
    fn earlier_decoding_never_helps() {
        let s = Scenario::homogeneous(
            &[H_120M, H_80M, 2.0 * H_80M],
            P_MAX,
            PaModel::new(0.0032, 1.3552).unwrap(),
            N0,
            30e6,
        )
        .unwrap();
        let p = PowerAllocation::new(vec![0.4, 0.2, 0.6]).unwrap();
        let orders = [
            DecodingOrder::new(vec![0, 1, 2]).unwrap(),
            DecodingOrder::new(vec![1, 0, 2]).unwrap(),
            DecodingOrder::new(vec![1, 2, 0]).unwrap(),
            DecodingOrder::new(vec![2, 1, 0]).unwrap(),
        ];
        for user in 0..3 {
            for a in &orders {
                for b in &orders {
                    if a.position_of(user) < b.position_of(user) {
                        let ra = user_rate(a.position_of(user), a, &p, &s);
                        let rb = user_rate(b.position_of(user), b, &p, &s);
                        assert!(
                            ra <= rb + 1e-15,
                            "user {user} decoded earlier must not gain rate"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn distortion_floor_kills_sum_rate_at_huge_power() {
        // the ratio decays like p^(1 - alpha), so the collapse is slow but
        // strictly monotone once distortion dominates
        let s = section_vi_scenario();
        let mut prev = f64::INFINITY;
        for t in 0..=6 {
            let p_val = 10f64.powi(t);
            let p = PowerAllocation::new(vec![p_val, p_val]).unwrap();
            let r = sum_rate(&p, &s);
            if t >= 2 {
                assert!(r < prev, "sum rate must fall once distortion dominates");
            }
            prev = r;
        }
        let huge = PowerAllocation::new(vec![1e13, 1e13]).unwrap();
        assert!(sum_rate(&huge, &s) < 0.02, "sum rate should collapse toward zero");
    }

    #[test]
    fn order_validation() {
        assert!(DecodingOrder::new(vec![0, 1, 2]).is_ok());
        assert!(DecodingOrder::new(vec![0, 0, 2]).is_err());
        assert!(DecodingOrder::new(vec![1, 2, 3]).is_err());
    }

    #[test]
    fn scenario_validation() {
        let m = PaModel::ideal();
        assert!(Scenario::homogeneous(&[], 1.0, m, 1e-13, 1e6).is_err());
        assert!(Scenario::homogeneous(&[1e-10], 1.0, m, 0.0, 1e6).is_err());
        assert!(Scenario::new(&[1e-10], &[1.0, 2.0], vec![m], 1e-13, 1e6).is_err());
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        fn perms(k: usize) -> Vec<DecodingOrder> {
            fn heap(v: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
                if n == 1 {
                    out.push(v.clone());
                    return;
                }
                for i in 0..n {
                    heap(v, n - 1, out);
                    if n % 2 == 0 {
                        v.swap(i, n - 1);
                    } else {
                        v.swap(0, n - 1);
                    }
                }
            }
            let mut base: Vec<usize> = (0..k).collect();
            let mut all = Vec::new();
            heap(&mut base, k, &mut all);
            all.into_iter().map(|p| DecodingOrder::new(p).unwrap()).collect()
        }

        proptest! {
            #[test]
            fn slack_sign_matches_rate_comparison(
                g1 in 1e-12f64..1e-8, g2 in 1e-12f64..1e-8,
                p1 in 0.0f64..4.0, p2 in 0.0f64..4.0,
                r in 0.0f64..10.0,
            ) {
                let s = Scenario::homogeneous(
                    &[g1, g2], 4.0, PaModel::new(0.0032, 1.3552).unwrap(), 1e-13, 1e6,
                ).unwrap();
                let p = PowerAllocation::new(vec![p1, p2]).unwrap();
                let order = DecodingOrder::new(vec![1, 0]).unwrap();
                for pos in 0..2 {
                    let slack = rate_constraint_slack(pos, &order, &p, &s, r);
                    let rate = user_rate(pos, &order, &p, &s);
                    if slack > 1e-20 {
                        prop_assert!(rate >= r - 1e-9);
                    } else if slack < -1e-20 {
                        prop_assert!(rate <= r + 1e-9);
                    }
                }
            }

            #[test]
            fn sum_rate_order_invariant_up_to_four_users(
                k in 2usize..=4,
                seed in 0u64..1_000,
            ) {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let gains: Vec<f64> = (0..k).map(|_| 10f64.powf(rng.random_range(-12.0..-8.0))).collect();
                let s = Scenario::homogeneous(
                    &gains, 4.0, PaModel::new(0.01, 1.4).unwrap(), 1e-13, 1e6,
                ).unwrap();
                let p = PowerAllocation::new(
                    (0..k).map(|_| rng.random_range(0.0..2.0)).collect(),
                ).unwrap();
                let reference = sum_rate(&p, &s);
                for order in perms(k) {
                    let total: f64 = (0..k).map(|pos| user_rate(pos, &order, &p, &s)).sum();
                    prop_assert!((total - reference).abs() < 1e-10);
                }
            }
        }
    }
}

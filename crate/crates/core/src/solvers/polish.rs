//! Feasibility-respecting coordinate-ascent polish shared by the WSR and
//! sum-rate solvers. The alternating fractional-programming updates converge
//! only linearly (very slowly when an optimum sits on the power cap), so
//! after the main loop each user's power is refined by a golden-section line
//! search of the true weighted objective inside its feasible interval. Every
//! step keeps the floors satisfied and never decreases the objective.

use super::NormScenario;

/// Weighted sum rate in normalized units, natural decoding order (slot 0
/// decoded first).
pub(crate) fn weighted_rate(norm: &NormScenario, weights: &[f64], p: &[f64]) -> f64 {
    let mut v = 0.0;
    for k in 0..norm.k() {
        v += weights[k] * (1.0 + norm.sinr_natural(p, k)).log2();
    }
    v
}

/// Floor slack `G_k(p)` in normalized units for slot `k` with
/// `c_k = 2^{r_k} - 1`.
pub(crate) fn floor_slack(norm: &NormScenario, p: &[f64], k: usize, c_k: f64) -> f64 {
    let mut interference = 0.0;
    for j in k + 1..norm.k() {
        interference += p[j] * norm.g[j];
    }
    p[k] * norm.g[k] - c_k * (interference + norm.distortion(p) + 1.0)
}

const BISECT_ITERS: usize = 100;
const GOLDEN_ITERS: usize = 160;

/// Coordinate-ascent polish of `weights . rates` subject to floors
/// (`floor_c[k] = 2^{r_k} - 1`, zero when vacuous) and the box
/// `[0, cap]`. Mutates `p` in place; returns the final objective.
pub(crate) fn coordinate_ascent(
    norm: &NormScenario,
    weights: &[f64],
    floor_c: &[f64],
    p: &mut Vec<f64>,
    max_sweeps: usize,
) -> f64 {
    let k_users = norm.k();
    let mut best = weighted_rate(norm, weights, p);
    for _ in 0..max_sweeps {
        let mut improved = false;
        for k in 0..k_users {
            let (lo, hi) = feasible_interval(norm, floor_c, p, k);
            if hi <= lo {
                continue;
            }
            let mut probe = p.clone();
            let eval = |x: f64, probe: &mut Vec<f64>| {
                probe[k] = x;
                weighted_rate(norm, weights, probe)
            };
            // golden section plus interval endpoints
            let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
            let (mut a, mut b) = (lo, hi);
            let mut c = b - inv_phi * (b - a);
            let mut d = a + inv_phi * (b - a);
            let (mut fc, mut fd) = (eval(c, &mut probe), eval(d, &mut probe));
            for _ in 0..GOLDEN_ITERS {
                if b - a < 1e-15 * norm.cap[k].max(1.0) {
                    break;
                }
                if fc > fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - inv_phi * (b - a);
                    fc = eval(c, &mut probe);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + inv_phi * (b - a);
                    fd = eval(d, &mut probe);
                }
            }
            for candidate in [0.5 * (a + b), lo, hi] {
                let v = eval(candidate, &mut probe);
                if v > best * (1.0 + 1e-15) + 1e-15 {
                    p[k] = candidate;
                    best = v;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    best
}

/// Feasible interval for `p[k]` with the other coordinates fixed. The own
/// floor is increasing in `p[k]` over the box (a lower bound); every other
/// floor is decreasing in `p[k]` (an upper bound).
fn feasible_interval(norm: &NormScenario, floor_c: &[f64], p: &[f64], k: usize) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = norm.cap[k];
    let mut probe = p.to_vec();
    if floor_c[k] > 0.0 {
        probe[k] = hi;
        if floor_slack(norm, &probe, k, floor_c[k]) < 0.0 {
            return (1.0, 0.0); // own floor unattainable; leave coordinate alone
        }
        let (mut a, mut b) = (0.0, hi);
        probe[k] = a;
        if floor_slack(norm, &probe, k, floor_c[k]) < 0.0 {
            for _ in 0..BISECT_ITERS {
                let m = 0.5 * (a + b);
                probe[k] = m;
                if floor_slack(norm, &probe, k, floor_c[k]) >= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            lo = b;
        }
    }
    for j in 0..norm.k() {
        if j == k || floor_c[j] <= 0.0 {
            continue;
        }
        probe = p.to_vec();
        probe[k] = hi;
        if floor_slack(norm, &probe, j, floor_c[j]) >= 0.0 {
            continue;
        }
        probe[k] = lo;
        if floor_slack(norm, &probe, j, floor_c[j]) < 0.0 {
            return (1.0, 0.0); // cannot keep user j feasible at any value
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..BISECT_ITERS {
            let m = 0.5 * (a + b);
            probe[k] = m;
            if floor_slack(norm, &probe, j, floor_c[j]) >= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        hi = a;
    }
    (lo, hi)
}

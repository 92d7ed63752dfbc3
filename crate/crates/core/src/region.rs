//! Capacity-region construction: rate-profile boundary tracing, sum-rate
//! corner points, convex hulls and the time-sharing segment between corners.
//!
//! For two users the achievable region under one decoding order is traced by
//! sweeping the floor `tau` of user 1 from 0 to its single-user maximum and
//! maximizing user 0's rate at each step. The capacity region is the convex
//! hull of both orders' regions; the hull's straight segment connects the
//! two corner points that maximize the sum rate under either order, and all
//! points on it are reached by time sharing.

use crate::noma::{user_rates, DecodingOrder, PowerAllocation, Scenario};
use crate::pa_model::max_p2p_rate;
use crate::solvers::{
    rate_profile_maximize, sum_rate_maximize, SolverError, SolverSettings,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RegionError {
    #[error("hull input must contain at least one finite point")]
    EmptyInput,
    #[error("expected {expected}-dimensional rate points, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// How an achievable rate tuple is realized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PointProvenance {
    /// Decoded at fixed powers under one decoding order.
    Decoded {
        order: DecodingOrder,
        powers: PowerAllocation,
    },
    /// Convex combination of two operating points (different orders),
    /// realized by switching between them for fractions `lambda` / `1-lambda`
    /// of the time.
    TimeShare {
        lambda: f64,
        parents: Box<(RatePoint, RatePoint)>,
    },
}

/// An achievable rate tuple together with how to achieve it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub rates: Vec<f64>,
    pub provenance: PointProvenance,
}

impl RatePoint {
    /// Build a decoded point; the rates are computed from the powers so the
    /// achievability invariant holds by construction.
    pub fn decoded(order: DecodingOrder, powers: PowerAllocation, s: &Scenario) -> Self {
        let rates = user_rates(&order, &powers, s);
        RatePoint {
            rates,
            provenance: PointProvenance::Decoded { order, powers },
        }
    }

    pub fn time_share(a: &RatePoint, b: &RatePoint, lambda: f64) -> Self {
        assert!((0.0..=1.0).contains(&lambda), "lambda must be in [0, 1]");
        let rates = a
            .rates
            .iter()
            .zip(&b.rates)
            .map(|(&ra, &rb)| lambda * ra + (1.0 - lambda) * rb)
            .collect();
        RatePoint {
            rates,
            provenance: PointProvenance::TimeShare {
                lambda,
                parents: Box::new((a.clone(), b.clone())),
            },
        }
    }

    pub fn powers(&self) -> Option<&PowerAllocation> {
        match &self.provenance {
            PointProvenance::Decoded { powers, .. } => Some(powers),
            PointProvenance::TimeShare { .. } => None,
        }
    }
}

/// One traced boundary point: the floor it was solved for and the achieved
/// point (`None` when the floor was infeasible or the solver failed).
#[derive(Debug, Clone)]
pub struct TracedPoint {
    pub tau: f64,
    pub point: Option<RatePoint>,
}

/// Multi-user analogue with a floor per user `1..K`.
#[derive(Debug, Clone)]
pub struct TracedPointK {
    pub taus: Vec<f64>,
    pub point: Option<RatePoint>,
}

/// Two-user region boundary: raw traced points of both orders, the
/// convexified upper-right frontier, the sum-rate corner points and the
/// sum capacity `b*` they share.
#[derive(Debug, Clone)]
pub struct RegionBoundary {
    pub points: Vec<RatePoint>,
    pub hull: Vec<RatePoint>,
    pub corners: (RatePoint, RatePoint),
    pub sum_capacity: f64,
}

impl RegionBoundary {
    /// Point on the corner segment by time sharing.
    pub fn time_share(&self, lambda: f64) -> RatePoint {
        RatePoint::time_share(&self.corners.0, &self.corners.1, lambda)
    }

    /// Distance from the origin to the frontier along direction `theta`
    /// (radians in (0, pi/2)). Used for pointwise region comparisons.
    pub fn frontier_radius(&self, theta: f64) -> f64 {
        let (dx, dy) = (theta.cos(), theta.sin());
        let mut best: f64 = 0.0;
        for w in self.hull.windows(2) {
            let (x1, y1) = (w[0].rates[0], w[0].rates[1]);
            let (x2, y2) = (w[1].rates[0], w[1].rates[1]);
            // solve origin + t*(dx,dy) = p1 + u*(p2-p1)
            let (ex, ey) = (x2 - x1, y2 - y1);
            let det = dx * (-ey) - dy * (-ex);
            if det.abs() < 1e-30 {
                continue;
            }
            let t = (x1 * (-ey) - y1 * (-ex)) / det;
            let u = (dx * y1 - dy * x1) / det;
            if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u) {
                best = best.max(t);
            }
        }
        best
    }
}

/// Trace the two-user boundary under `order` over a uniform `cfg.tau_grid`
/// point sweep of user 1's floor, endpoints included. Solver failures mark
/// the point invalid and the sweep continues.
pub fn trace_boundary_2user(
    order: &DecodingOrder,
    s: &Scenario,
    cfg: &SolverSettings,
) -> Result<Vec<TracedPoint>, SolverError> {
    if s.k() != 2 {
        return Err(SolverError::InvalidInput(format!(
            "two-user trace needs K = 2, got {}",
            s.k()
        )));
    }
    cfg.validate()?;
    let tau_max = max_p2p_rate(s.link(1), s.model(1));
    let n = cfg.tau_grid;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let tau = tau_max * i as f64 / (n - 1) as f64;
        let point = match rate_profile_maximize(&[tau], order, s, cfg) {
            Ok(rep) => Some(RatePoint::decoded(order.clone(), rep.p_star, s)),
            Err(SolverError::Infeasible { .. }) => None,
            Err(e) => return Err(e),
        };
        out.push(TracedPoint { tau, point });
    }
    Ok(out)
}

/// Sum-rate corner points: the sum-rate optimum `p*` evaluated under both
/// decoding orders. Both lie on the line `R_0 + R_1 = b*`.
pub fn sum_rate_corner_points(
    s: &Scenario,
    cfg: &SolverSettings,
) -> Result<(RatePoint, RatePoint), SolverError> {
    if s.k() != 2 {
        return Err(SolverError::InvalidInput(format!(
            "corner points need K = 2, got {}",
            s.k()
        )));
    }
    let rep = sum_rate_maximize(&[0.0, 0.0], s, cfg)?;
    let b = RatePoint::decoded(
        DecodingOrder::new(vec![1, 0]).unwrap(),
        rep.p_star.clone(),
        s,
    );
    let c = RatePoint::decoded(DecodingOrder::new(vec![0, 1]).unwrap(), rep.p_star, s);
    Ok((b, c))
}

/// Full two-user capacity region: both traces, the corner points, and the
/// convexified frontier (the raw traces stay available in `points`; the
/// boundary of a single order need not be convex).
pub fn capacity_region_2user(
    s: &Scenario,
    cfg: &SolverSettings,
) -> Result<RegionBoundary, SolverError> {
    let pi1 = DecodingOrder::new(vec![1, 0]).unwrap();
    let pi2 = DecodingOrder::new(vec![0, 1]).unwrap();
    let mut points: Vec<RatePoint> = Vec::new();
    for order in [&pi1, &pi2] {
        for tp in trace_boundary_2user(order, s, cfg)? {
            if let Some(p) = tp.point {
                points.push(p);
            }
        }
    }
    let corners = sum_rate_corner_points(s, cfg)?;
    let sum_capacity = corners.0.rates.iter().sum::<f64>();
    let mut hull_input = points.clone();
    hull_input.push(corners.0.clone());
    hull_input.push(corners.1.clone());
    let hull = convex_hull_frontier(&hull_input).map_err(|e| {
        SolverError::InvalidInput(format!("hull construction failed: {e}"))
    })?;
    Ok(RegionBoundary {
        points,
        hull,
        corners,
        sum_capacity,
    })
}

/// Multi-user boundary: for each floor vector, maximize user 0's rate
/// subject to `rate(user j) >= taus[j-1]`. Infeasible grid points yield a
/// sentinel `None` (excluded from any hull).
pub fn trace_boundary_multiuser(
    order: &DecodingOrder,
    tau_vec_grid: &[Vec<f64>],
    s: &Scenario,
    cfg: &SolverSettings,
) -> Result<Vec<TracedPointK>, SolverError> {
    let mut out = Vec::with_capacity(tau_vec_grid.len());
    for taus in tau_vec_grid {
        let point = match rate_profile_maximize(taus, order, s, cfg) {
            Ok(rep) => Some(RatePoint::decoded(order.clone(), rep.p_star, s)),
            Err(SolverError::Infeasible { .. }) => None,
            Err(e) => return Err(e),
        };
        out.push(TracedPointK {
            taus: taus.clone(),
            point,
        });
    }
    Ok(out)
}

/// Upper-right convex frontier of 2-D rate points by monotone chain.
/// Collinear interior points are dropped, so a straight boundary keeps only
/// its endpoints; a single point is its own hull.
pub fn convex_hull_frontier(points: &[RatePoint]) -> Result<Vec<RatePoint>, RegionError> {
    let finite: Vec<&RatePoint> = points
        .iter()
        .filter(|p| p.rates.iter().all(|r| r.is_finite()))
        .collect();
    if finite.is_empty() {
        return Err(RegionError::EmptyInput);
    }
    for p in &finite {
        if p.rates.len() != 2 {
            return Err(RegionError::DimensionMismatch {
                expected: 2,
                found: p.rates.len(),
            });
        }
    }
    let mut sorted: Vec<&RatePoint> = finite;
    sorted.sort_by(|a, b| {
        a.rates[0]
            .partial_cmp(&b.rates[0])
            .unwrap()
            .then(b.rates[1].partial_cmp(&a.rates[1]).unwrap())
    });
    sorted.dedup_by(|a, b| a.rates == b.rates);
    // upper hull, left to right
    let cross = |o: &RatePoint, a: &RatePoint, b: &RatePoint| {
        (a.rates[0] - o.rates[0]) * (b.rates[1] - o.rates[1])
            - (a.rates[1] - o.rates[1]) * (b.rates[0] - o.rates[0])
    };
    let mut chain: Vec<&RatePoint> = Vec::new();
    for p in &sorted {
        while chain.len() >= 2 && cross(chain[chain.len() - 2], chain[chain.len() - 1], p) >= 0.0 {
            chain.pop();
        }
        chain.push(p);
    }
    // keep the Pareto part: from the maximum-R1... the chain runs from the
    // leftmost (max R_2 side) to the rightmost point; cut any leading ascent
    let start = chain
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.rates[1].partial_cmp(&b.rates[1]).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(chain[start..].iter().map(|p| (*p).clone()).collect())
}

/// Pareto filter for higher-dimensional point clouds: keeps points not
/// dominated coordinatewise by any other.
pub fn pareto_front(points: &[RatePoint]) -> Vec<RatePoint> {
    let mut out = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        if !p.rates.iter().all(|r| r.is_finite()) {
            continue;
        }
        for (j, q) in points.iter().enumerate() {
            if i == j || !q.rates.iter().all(|r| r.is_finite()) {
                continue;
            }
            let geq_all = q.rates.iter().zip(&p.rates).all(|(&a, &b)| a >= b);
            let gt_any = q.rates.iter().zip(&p.rates).any(|(&a, &b)| a > b);
            if geq_all && gt_any {
                continue 'outer;
            }
        }
        out.push(p.clone());
    }
    out
}

/// 2-D frontier of a projection of higher-dimensional points onto the rate
/// coordinates `dims`.
pub fn projected_frontier(
    points: &[RatePoint],
    dims: (usize, usize),
) -> Result<Vec<(f64, f64)>, RegionError> {
    let projected: Vec<RatePoint> = points
        .iter()
        .filter(|p| p.rates.len() > dims.0.max(dims.1))
        .map(|p| RatePoint {
            rates: vec![p.rates[dims.0], p.rates[dims.1]],
            provenance: p.provenance.clone(),
        })
        .collect();
    let hull = convex_hull_frontier(&projected)?;
    Ok(hull.iter().map(|p| (p.rates[0], p.rates[1])).collect())
}

//! Uplink NOMA capacity analysis and power control under polynomial
//! power-amplifier distortion noise.
//!
//! The PA distortion noise power is modeled as `P_N = a * P_T^alpha`, a
//! polynomial in the transmit power. SIC decoding cannot cancel this noise,
//! so every uplink user's SINR carries the aggregate distortion of all
//! users. This crate provides:
//!
//! - the distortion model, its dB-domain regression form, and closed-form
//!   single-link optima ([`pa_model`]),
//! - multi-user NOMA SINR/rate expressions for arbitrary decoding orders
//!   ([`noma`]),
//! - fractional-programming solvers: Dinkelbach rate-profile boundary
//!   tracing, weighted sum-rate maximization via a Lagrangian-dual +
//!   quadratic transform, an equal-weight closed form with dual subgradient,
//!   feasibility projection, and exhaustive grid oracles ([`solvers`]),
//! - capacity-region construction with convex hulls and time-sharing
//!   corner points ([`region`]),
//! - the broadband OFDM extension with a shared distortion budget
//!   ([`ofdm`]),
//! - a simulation lab that regenerates the distortion model from a
//!   synthetic PA: OFDM waveforms, GMP predistortion trained by indirect
//!   learning, Bussgang decomposition, NMSE sweeps and power-law fitting
//!   ([`dpd`]).
//!
//! All core math uses linear SI units (watts, linear gains, bits/s/Hz).
//! dB and dBm conversions live in [`units`] and are applied only at I/O
//! boundaries.

pub mod dpd;
mod linalg;
pub mod noma;
pub mod ofdm;
pub mod pa_model;
pub mod region;
pub mod solvers;
pub mod units;

pub use noma::{DecodingOrder, PowerAllocation, Scenario};
pub use pa_model::{LinkBudget, PaModel, RegressionForm};
pub use region::{RatePoint, RegionBoundary};
pub use solvers::{SolveReport, SolverError, SolverSettings};

//! Polynomial PA distortion-noise model and closed-form single-link optima.
//!
//! The distortion noise power of a power amplifier driven at transmit power
//! `P_T` is modeled as
//!
//! ```text
//! P_N = a * P_T^alpha
//! ```
//!
//! equivalently, in the dB domain, NMSE is linear in output power:
//!
//! ```text
//! eta = 10*lg(P_N / P_T) = k1 * 10*lg(1000 * P_T) + k2
//! ```
//!
//! with `alpha = 1 + k1` and `a = 1000^k1 * 10^(k2/10)`. Special cases:
//! `a = 0` is an ideal PA, `alpha = 1` the conventional linear distortion
//! model, `alpha > 1` the measured nonlinear regime where the single-link
//! SINR peaks at a finite power and self-interference dominates beyond it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("transmit power must be nonnegative, got {0}")]
    NegativePower(f64),
    #[error("transmit power must be strictly positive, got {0}")]
    NonPositivePower(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Distortion-law coefficients `(a, alpha)` of `P_N = a * P_T^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaModel {
    a: f64,
    alpha: f64,
}

impl PaModel {
    pub fn new(a: f64, alpha: f64) -> Result<Self, ModelError> {
        if !a.is_finite() || a < 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "coefficient a must be finite and >= 0, got {a}"
            )));
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "exponent alpha must be finite and >= 0, got {alpha}"
            )));
        }
        Ok(Self { a, alpha })
    }

    /// Ideal PA without distortion (`a = 0`).
    pub fn ideal() -> Self {
        Self { a: 0.0, alpha: 1.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_ideal(&self) -> bool {
        self.a == 0.0
    }
}

/// dB-domain regression form: NMSE slope `k1` (per decade of mW) and
/// intercept `k2` (dB at 0 dBm output).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionForm {
    pub k1: f64,
    pub k2: f64,
}

/// Point-to-point link parameters: linear channel power gain `|h|^2`,
/// receiver noise power `N_0` (watts) and maximum transmit power (watts).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    channel_gain: f64,
    noise_power: f64,
    p_max: f64,
}

impl LinkBudget {
    pub fn new(channel_gain: f64, noise_power: f64, p_max: f64) -> Result<Self, ModelError> {
        if !channel_gain.is_finite() || channel_gain < 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "channel gain must be finite and >= 0, got {channel_gain}"
            )));
        }
        if !noise_power.is_finite() || noise_power <= 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "noise power must be finite and > 0, got {noise_power}"
            )));
        }
        if !p_max.is_finite() || p_max <= 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "maximum power must be finite and > 0, got {p_max}"
            )));
        }
        Ok(Self {
            channel_gain,
            noise_power,
            p_max,
        })
    }

    pub fn channel_gain(&self) -> f64 {
        self.channel_gain
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }
}

/// Distortion noise power `a * p_t^alpha` in watts.
pub fn distortion_power(p_t: f64, model: &PaModel) -> Result<f64, ModelError> {
    if p_t < 0.0 || !p_t.is_finite() {
        return Err(ModelError::NegativePower(p_t));
    }
    Ok(model.a * p_t.powf(model.alpha))
}

/// NMSE in dB at output power `p_t` from the regression form:
/// `k1 * 10*lg(1000 * p_t) + k2`.
pub fn nmse_db(p_t: f64, reg: &RegressionForm) -> Result<f64, ModelError> {
    if p_t <= 0.0 || !p_t.is_finite() {
        return Err(ModelError::NonPositivePower(p_t));
    }
    Ok(reg.k1 * 10.0 * (1000.0 * p_t).log10() + reg.k2)
}

/// Convert the dB-domain regression `(k1, k2)` to power-law `(a, alpha)`:
/// `alpha = 1 + k1`, `a = 1000^k1 * 10^(k2/10)`.
pub fn regression_to_power_law(reg: &RegressionForm) -> Result<PaModel, ModelError> {
    let alpha = 1.0 + reg.k1;
    let a = 1000f64.powf(reg.k1) * 10f64.powf(reg.k2 / 10.0);
    PaModel::new(a, alpha)
}

/// Inverse of [`regression_to_power_law`]: `k1 = alpha - 1`,
/// `k2 = 10*lg(a) - 30*k1`.
pub fn power_law_to_regression(model: &PaModel) -> Result<RegressionForm, ModelError> {
    if model.a <= 0.0 {
        return Err(ModelError::InvalidParameter(
            "ideal PA (a = 0) has no finite dB-domain regression form".into(),
        ));
    }
    let k1 = model.alpha - 1.0;
    let k2 = 10.0 * model.a.log10() - 30.0 * k1;
    Ok(RegressionForm { k1, k2 })
}

/// Achievable point-to-point rate `log2(1 + p|h|^2 / (a p^alpha |h|^2 + N_0))`
/// in bits/s/Hz.
pub fn p2p_rate(p: f64, link: &LinkBudget, model: &PaModel) -> f64 {
    assert!(p >= 0.0, "transmit power must be nonnegative, got {p}");
    if p == 0.0 {
        return 0.0;
    }
    let h = link.channel_gain;
    let den = model.a * p.powf(model.alpha) * h + link.noise_power;
    (1.0 + p * h / den).log2()
}

/// Stationary point of the single-link SINR for `alpha > 1`:
/// `p_opt = (N_0 / (a (alpha - 1) |h|^2))^(1/alpha)`.
/// Returns `+inf` for an ideal PA, `alpha <= 1`, or zero channel gain
/// (the SINR is then monotone in power and has no interior maximizer).
pub fn p2p_stationary_power(link: &LinkBudget, model: &PaModel) -> f64 {
    if model.a == 0.0 || model.alpha <= 1.0 || link.channel_gain == 0.0 {
        return f64::INFINITY;
    }
    let denom = model.a * (model.alpha - 1.0) * link.channel_gain;
    (link.noise_power / denom).powf(1.0 / model.alpha)
}

/// Rate-optimal transmit power of the single link: `p_max` when the SINR is
/// monotone (`alpha <= 1` or `a = 0`), otherwise `min(p_max, p_opt)`.
/// Transmitting above `p_opt` only feeds self-interference, so every solver
/// clamps powers to this cap.
pub fn optimal_p2p_power(link: &LinkBudget, model: &PaModel) -> f64 {
    link.p_max.min(p2p_stationary_power(link, model))
}

/// Maximum point-to-point rate, i.e. [`p2p_rate`] at [`optimal_p2p_power`].
pub fn max_p2p_rate(link: &LinkBudget, model: &PaModel) -> f64 {
    p2p_rate(optimal_p2p_power(link, model), link, model)
}

//! Broadband OFDM extension of the distortion model.
//!
//! The PA acts on the time-domain signal, so its distortion budget is set by
//! the **total** transmit power `P_T = sum_m P_T^m` and spreads evenly over
//! the `N` subcarriers. The rate of subcarrier `m` is
//!
//! ```text
//! R_m = (B/N) log2( 1 + P_T^m |h_m|^2 / ( (a P_T^alpha / N) |h_m|^2 + (B/N) N_1 ) )
//! ```
//!
//! Moving power between subcarriers at fixed total leaves every subcarrier's
//! distortion term unchanged. With flat gains and equal powers the sum rate
//! reduces exactly to the bandwidth-scaled single-link rate with noise power
//! `B * N_1`.

use crate::pa_model::PaModel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OfdmError {
    #[error("{0}")]
    Invalid(String),
}

/// OFDM system description. `cp_len` is carried for waveform-level tooling
/// and does not enter the rate expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    n_subcarriers: usize,
    cp_len: usize,
    bandwidth: f64,
    noise_psd: f64,
    subchannel_gains: Vec<f64>,
    subcarrier_powers: Vec<f64>,
}

impl OfdmConfig {
    pub fn new(
        cp_len: usize,
        bandwidth: f64,
        noise_psd: f64,
        subchannel_gains: Vec<f64>,
        subcarrier_powers: Vec<f64>,
    ) -> Result<Self, OfdmError> {
        let n = subchannel_gains.len();
        if n == 0 {
            return Err(OfdmError::Invalid("need at least one subcarrier".into()));
        }
        if subcarrier_powers.len() != n {
            return Err(OfdmError::Invalid(format!(
                "gain/power length mismatch: {n} vs {}",
                subcarrier_powers.len()
            )));
        }
        if !bandwidth.is_finite() || bandwidth <= 0.0 {
            return Err(OfdmError::Invalid(format!("bandwidth must be > 0, got {bandwidth}")));
        }
        if !noise_psd.is_finite() || noise_psd <= 0.0 {
            return Err(OfdmError::Invalid(format!("noise PSD must be > 0, got {noise_psd}")));
        }
        if subchannel_gains.iter().any(|&g| !g.is_finite() || g < 0.0) {
            return Err(OfdmError::Invalid("subchannel gains must be >= 0".into()));
        }
        if subcarrier_powers.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(OfdmError::Invalid("subcarrier powers must be >= 0".into()));
        }
        Ok(Self {
            n_subcarriers: n,
            cp_len,
            bandwidth,
            noise_psd,
            subchannel_gains,
            subcarrier_powers,
        })
    }

    /// Flat channel with the total power split equally.
    pub fn flat(
        n_subcarriers: usize,
        cp_len: usize,
        bandwidth: f64,
        noise_psd: f64,
        gain: f64,
        total_power: f64,
    ) -> Result<Self, OfdmError> {
        Self::new(
            cp_len,
            bandwidth,
            noise_psd,
            vec![gain; n_subcarriers],
            vec![total_power / n_subcarriers as f64; n_subcarriers],
        )
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn noise_psd(&self) -> f64 {
        self.noise_psd
    }

    pub fn subchannel_gains(&self) -> &[f64] {
        &self.subchannel_gains
    }

    pub fn subcarrier_powers(&self) -> &[f64] {
        &self.subcarrier_powers
    }

    /// Total transmit power `P_T`, the argument of the distortion law.
    pub fn total_power(&self) -> f64 {
        self.subcarrier_powers.iter().sum()
    }
}

/// Rate of subcarrier `m` in bits/s.
pub fn subcarrier_rate(m: usize, cfg: &OfdmConfig, model: &PaModel) -> f64 {
    assert!(
        m < cfg.n_subcarriers,
        "subcarrier index {m} out of range for N = {}",
        cfg.n_subcarriers
    );
    let n = cfg.n_subcarriers as f64;
    let p_total = cfg.total_power();
    let gain = cfg.subchannel_gains[m];
    let distortion = model.a() * p_total.powf(model.alpha()) / n * gain;
    let noise = cfg.bandwidth / n * cfg.noise_psd;
    let sinr = cfg.subcarrier_powers[m] * gain / (distortion + noise);
    cfg.bandwidth / n * (1.0 + sinr).log2()
}

/// Sum rate over all subcarriers in bits/s.
pub fn ofdm_sum_rate(cfg: &OfdmConfig, model: &PaModel) -> f64 {
    (0..cfg.n_subcarriers)
        .map(|m| subcarrier_rate(m, cfg, model))
        .sum()
}

//! Simulation lab for regenerating the distortion power law from synthetic
//! PA measurements: OFDM waveform generation, a behavioral saturating PA,
//! generalized-memory-polynomial (GMP) predistortion trained by indirect
//! learning, Bussgang decomposition, NMSE sweeps and the dB-domain linear
//! regression that produces [`crate::pa_model::PaModel`] instances.

mod gmp;
mod measure;
mod sweep;
mod synth_pa;
mod waveform;

pub use gmp::{dpd_train_indirect, gmp_apply, gmp_basis, ls_fit, GmpDesign, LsFit, TrainedDpd};
pub use measure::{bussgang_decompose, fit_power_law, measure_nmse, PowerLawFit};
pub use sweep::{default_drive_levels, nmse_sweep, sweep_measurements, SweepSample};
pub use synth_pa::synthetic_pa_apply;
pub use waveform::{generate_ofdm_burst, generate_ofdm_waveform, papr_db};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DpdError {
    #[error("sample sequence too short: need at least {needed}, got {got}")]
    SequenceTooShort { needed: usize, got: usize },
    #[error("least squares needs at least as many rows as columns ({rows} rows, {cols} columns)")]
    NotEnoughRows { rows: usize, cols: usize },
    #[error("reference signal has zero power")]
    ZeroReferencePower,
    #[error("signal has zero power")]
    ZeroSignalPower,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("power-law fit needs at least two distinct output powers")]
    DegenerateSweep,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Generalized memory polynomial shape: aligned signal/envelope terms,
/// lagging and leading cross-terms.
///
/// `aligned(5, 5)` is the "5-5-0" structure (nonlinearity order 5, memory
/// depth 5, no lag/lead cross-terms).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GmpStructure {
    /// Aligned nonlinearity orders: envelope powers `0..p_a`.
    pub p_a: usize,
    /// Aligned memory depth.
    pub l_a: usize,
    /// Lagging nonlinearity orders: envelope powers `1..=p_b`.
    pub p_b: usize,
    pub l_b: usize,
    /// Longest lagging delay.
    pub q_b: usize,
    /// Leading nonlinearity orders: envelope powers `1..=p_c`.
    pub p_c: usize,
    pub l_c: usize,
    /// Longest leading advance.
    pub q_c: usize,
}

impl GmpStructure {
    /// Aligned-only structure with `p` envelope orders and memory depth `l`.
    pub fn aligned(p: usize, l: usize) -> Self {
        Self {
            p_a: p,
            l_a: l,
            p_b: 0,
            l_b: 0,
            q_b: 0,
            p_c: 0,
            l_c: 0,
            q_c: 0,
        }
    }

    /// Total number of basis terms `J`.
    pub fn term_count(&self) -> usize {
        self.p_a * self.l_a + self.p_b * self.l_b * self.q_b + self.p_c * self.l_c * self.q_c
    }

    /// Largest past-sample index referenced by any term.
    pub fn max_lookback(&self) -> usize {
        let aligned = self.l_a.saturating_sub(1);
        let lagging = if self.p_b > 0 {
            self.l_b.saturating_sub(1) + self.q_b
        } else {
            0
        };
        let leading = if self.p_c > 0 {
            self.l_c.saturating_sub(1)
        } else {
            0
        };
        aligned.max(lagging).max(leading)
    }

    /// Largest future-sample index referenced by any term.
    pub fn max_lookahead(&self) -> usize {
        if self.p_c > 0 {
            self.q_c
        } else {
            0
        }
    }

    pub fn validate(&self) -> Result<(), DpdError> {
        if self.term_count() == 0 {
            return Err(DpdError::InvalidParameter(
                "GMP structure has no basis terms".into(),
            ));
        }
        Ok(())
    }
}

/// Trained predistorter coefficients, ordered to match
/// [`gmp_basis`] columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DpdCoefficients {
    theta: Vec<Complex64>,
}

impl DpdCoefficients {
    pub fn new(theta: Vec<Complex64>, structure: &GmpStructure) -> Result<Self, DpdError> {
        if theta.len() != structure.term_count() {
            return Err(DpdError::LengthMismatch(
                theta.len(),
                structure.term_count(),
            ));
        }
        if theta.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(DpdError::InvalidParameter(
                "coefficients must be finite".into(),
            ));
        }
        Ok(Self { theta })
    }

    /// Identity passthrough: unit weight on the aligned `(p=0, l=0)` term.
    pub fn identity(structure: &GmpStructure) -> Result<Self, DpdError> {
        structure.validate()?;
        if structure.p_a == 0 || structure.l_a == 0 {
            return Err(DpdError::InvalidParameter(
                "identity initialization needs the aligned (p=0, l=0) term".into(),
            ));
        }
        let mut theta = vec![Complex64::new(0.0, 0.0); structure.term_count()];
        theta[0] = Complex64::new(1.0, 0.0);
        Ok(Self { theta })
    }

    pub fn theta(&self) -> &[Complex64] {
        &self.theta
    }
}

/// Behavioral PA: a short real FIR (memory) followed by a smooth-limiter
/// AM/AM curve `g(r) = r / (1 + (r/A)^(2s))^(1/(2s))` scaled by the linear
/// gain. `smoothness -> inf` approaches an ideal clipper (exactly linear
/// below saturation); the output amplitude never exceeds
/// `linear_gain * saturation_amplitude`. Memoryless when `memory_taps == [1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPa {
    pub smoothness: f64,
    pub saturation_amplitude: f64,
    pub linear_gain: f64,
    pub memory_taps: Vec<f64>,
}

impl Default for SyntheticPa {
    /// Calibrated so the default no-DPD sweep regresses to a power law with
    /// `alpha` in the 1.2..1.5 range at high R^2 (the measured-PA regime).
    fn default() -> Self {
        Self {
            smoothness: 0.45,
            saturation_amplitude: 1.0,
            linear_gain: 10.0,
            memory_taps: vec![1.0, 0.04],
        }
    }
}

impl SyntheticPa {
    pub fn validate(&self) -> Result<(), DpdError> {
        if !self.smoothness.is_finite() || self.smoothness <= 0.0 {
            return Err(DpdError::InvalidParameter("smoothness must be > 0".into()));
        }
        if !self.saturation_amplitude.is_finite() || self.saturation_amplitude <= 0.0 {
            return Err(DpdError::InvalidParameter(
                "saturation amplitude must be > 0".into(),
            ));
        }
        if !self.linear_gain.is_finite() || self.linear_gain <= 0.0 {
            return Err(DpdError::InvalidParameter("linear gain must be > 0".into()));
        }
        if self.memory_taps.is_empty() {
            return Err(DpdError::InvalidParameter(
                "memory taps must not be empty".into(),
            ));
        }
        Ok(())
    }
}

/// One NMSE measurement at a mean PA output power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmseMeasurement {
    /// Mean output power in watts (strictly positive).
    pub p_out: f64,
    pub nmse_db: f64,
}

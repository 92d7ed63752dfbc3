//! OFDM waveform generation: IFFT of i.i.d. circular complex Gaussian
//! subcarrier symbols with a cyclic prefix. The orthonormal IFFT scaling
//! keeps the expected time-domain sample power equal to the configured
//! total power.

use super::DpdError;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

/// One OFDM symbol: `n` subcarriers, `cp` cyclic-prefix samples, expected
/// per-sample power `total_power`. Deterministic per seed.
pub fn generate_ofdm_waveform(
    n: usize,
    cp: usize,
    total_power: f64,
    seed: u64,
) -> Result<Vec<Complex64>, DpdError> {
    generate_ofdm_burst(n, cp, total_power, seed, 1)
}

/// `n_frames` consecutive OFDM symbols drawn from one seeded stream.
pub fn generate_ofdm_burst(
    n: usize,
    cp: usize,
    total_power: f64,
    seed: u64,
    n_frames: usize,
) -> Result<Vec<Complex64>, DpdError> {
    if n == 0 || n_frames == 0 {
        return Err(DpdError::InvalidParameter(
            "need at least one subcarrier and one frame".into(),
        ));
    }
    if !total_power.is_finite() || total_power < 0.0 {
        return Err(DpdError::InvalidParameter(format!(
            "total power must be finite and >= 0, got {total_power}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let sigma = (total_power / 2.0).sqrt();
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    let scale = 1.0 / (n as f64).sqrt();
    let mut out = Vec::with_capacity(n_frames * (n + cp));
    let mut symbols = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..n_frames {
        for s in symbols.iter_mut() {
            let re: f64 = normal.sample(&mut rng);
            let im: f64 = normal.sample(&mut rng);
            *s = Complex64::new(re * sigma, im * sigma);
        }
        ifft.process(&mut symbols);
        for s in symbols.iter_mut() {
            *s *= scale;
        }
        let start = out.len();
        out.extend_from_slice(&symbols[n - cp.min(n)..]);
        out.extend_from_slice(&symbols);
        debug_assert_eq!(out.len() - start, n + cp.min(n));
    }
    Ok(out)
}

/// Peak-to-average power ratio of a sample block, in dB.
pub fn papr_db(samples: &[Complex64]) -> f64 {
    let mean: f64 = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64;
    let peak = samples
        .iter()
        .map(|s| s.norm_sqr())
        .fold(0.0f64, f64::max);
    10.0 * (peak / mean).log10()
}

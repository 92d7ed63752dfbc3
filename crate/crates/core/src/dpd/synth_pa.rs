//! Behavioral PA: memory FIR followed by a smooth-limiter AM/AM curve.

use super::SyntheticPa;
use num_complex::Complex64;

/// Apply the PA to a sample sequence. The FIR runs over past samples
/// (zero-padded edges); the memoryless nonlinearity compresses the envelope
/// while preserving phase:
///
/// ```text
/// out = G * r / (1 + (r/A)^(2s))^(1/(2s)) * exp(j*angle)
/// ```
pub fn synthetic_pa_apply(x: &[Complex64], pa: &SyntheticPa) -> Vec<Complex64> {
    pa.validate().expect("invalid synthetic PA parameters");
    let taps = &pa.memory_taps;
    let two_s = 2.0 * pa.smoothness;
    let inv_two_s = 1.0 / two_s;
    let sat = pa.saturation_amplitude;
    x.iter()
        .enumerate()
        .map(|(n, _)| {
            let mut v = Complex64::new(0.0, 0.0);
            for (l, &t) in taps.iter().enumerate() {
                if n >= l {
                    v += t * x[n - l];
                }
            }
            let r = v.norm();
            if r == 0.0 {
                return v;
            }
            let compressed = r / (1.0 + (r / sat).powf(two_s)).powf(inv_two_s);
            v * (pa.linear_gain * compressed / r)
        })
        .collect()
}

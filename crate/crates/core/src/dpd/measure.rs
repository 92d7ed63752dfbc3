//! Bussgang decomposition, NMSE measurement, and the dB-domain power-law
//! regression.

use super::{DpdError, NmseMeasurement};
use crate::pa_model::{regression_to_power_law, PaModel, RegressionForm};
use num_complex::Complex64;

/// NMSE values below this floor are reported as the floor (a perfectly
/// linear device has NMSE -inf dB, which would break sweeps and plots).
pub const NMSE_FLOOR_DB: f64 = -200.0;

/// Split `y` into a scaled replica of `u` plus uncorrelated residual:
/// `y = G u + e` with `G = <y, u> / <u, u>` (inner product `sum x conj(y)`,
/// which fixes the sign of `G`'s phase). By construction `<e, u> = 0`.
pub fn bussgang_decompose(
    u: &[Complex64],
    y: &[Complex64],
) -> Result<(Complex64, Vec<Complex64>), DpdError> {
    if u.len() != y.len() {
        return Err(DpdError::LengthMismatch(u.len(), y.len()));
    }
    let u_power: f64 = u.iter().map(|v| v.norm_sqr()).sum();
    if u_power <= 0.0 {
        return Err(DpdError::ZeroReferencePower);
    }
    let cross: Complex64 = y.iter().zip(u).map(|(&yi, &ui)| yi * ui.conj()).sum();
    let g = cross / u_power;
    let e = y.iter().zip(u).map(|(&yi, &ui)| yi - g * ui).collect();
    Ok((g, e))
}

/// NMSE in dB: `10 lg( E|y - G u|^2 / E|y|^2 )`, floored at
/// [`NMSE_FLOOR_DB`].
pub fn measure_nmse(u: &[Complex64], y: &[Complex64], g: Complex64) -> Result<f64, DpdError> {
    if u.len() != y.len() {
        return Err(DpdError::LengthMismatch(u.len(), y.len()));
    }
    let y_power: f64 = y.iter().map(|v| v.norm_sqr()).sum();
    if y_power <= 0.0 {
        return Err(DpdError::ZeroSignalPower);
    }
    let e_power: f64 = y
        .iter()
        .zip(u)
        .map(|(&yi, &ui)| (yi - g * ui).norm_sqr())
        .sum();
    let ratio = e_power / y_power;
    if ratio <= 10f64.powf(NMSE_FLOOR_DB / 10.0) {
        return Ok(NMSE_FLOOR_DB);
    }
    Ok(10.0 * ratio.log10())
}

/// Ordinary-least-squares regression of NMSE (dB) against
/// `10 lg(1000 p_out)`, returning the line, the equivalent power law and the
/// coefficient of determination.
#[derive(Debug, Clone)]
pub struct PowerLawFit {
    pub regression: RegressionForm,
    pub model: PaModel,
    pub r_squared: f64,
}

pub fn fit_power_law(measurements: &[NmseMeasurement]) -> Result<PowerLawFit, DpdError> {
    let pts: Vec<(f64, f64)> = measurements
        .iter()
        .filter(|m| m.p_out > 0.0 && m.nmse_db.is_finite())
        .map(|m| (10.0 * (1000.0 * m.p_out).log10(), m.nmse_db))
        .collect();
    if pts.len() < 2 {
        return Err(DpdError::DegenerateSweep);
    }
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx < 1e-12 {
        return Err(DpdError::DegenerateSweep);
    }
    let sxy: f64 = pts
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let k1 = sxy / sxx;
    let k2 = mean_y - k1 * mean_x;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - (k1 * p.0 + k2)).powi(2))
        .sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res < 1e-18 {
        1.0
    } else {
        0.0
    };
    let regression = RegressionForm { k1, k2 };
    let model = regression_to_power_law(&regression)
        .map_err(|e| DpdError::InvalidParameter(e.to_string()))?;
    Ok(PowerLawFit {
        regression,
        model,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpd::synth_pa::synthetic_pa_apply;
    use crate::dpd::waveform::generate_ofdm_burst;
    use crate::dpd::SyntheticPa;
    use crate::pa_model::nmse_db;

    #[test]
    fn scaled_replica_has_zero_residual() {
        let u: Vec<Complex64> = (0..32)
            .map(|i| Complex64::from_polar(1.0 + 0.1 * i as f64, 0.2 * i as f64))
            .collect();
        let y: Vec<Complex64> = u.iter().map(|&v| 2.0 * v).collect();
        let (g, e) = bussgang_decompose(&u, &y).unwrap();
        assert!((g - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        assert!(e.iter().all(|v| v.norm() < 1e-12));
        assert_eq!(measure_nmse(&u, &y, g).unwrap(), NMSE_FLOOR_DB);
    }

    #[test]
    fn orthogonal_signal_gives_zero_gain() {
        // u on even samples, y on odd samples: <y, u> = 0
        let n = 64;
        let u: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(if i % 2 == 0 { 1.0 } else { 0.0 }, 0.0))
            .collect();
        let y: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(0.0, if i % 2 == 1 { 1.0 } else { 0.0 }))
            .collect();
        let (g, e) = bussgang_decompose(&u, &y).unwrap();
        assert!(g.norm() < 1e-15);
        assert_eq!(e, y);
        // all of y is residual: NMSE = 0 dB
        assert!(measure_nmse(&u, &y, g).unwrap().abs() < 1e-12);
    }

    #[test]
    fn residual_orthogonal_and_power_splits() {
        let u = generate_ofdm_burst(256, 16, 0.01, 21, 8).unwrap();
        let y = synthetic_pa_apply(&u, &SyntheticPa::default());
        let (g, e) = bussgang_decompose(&u, &y).unwrap();
        let u_norm: f64 = u.iter().map(|v| v.norm_sqr()).sum();
        let e_norm: f64 = e.iter().map(|v| v.norm_sqr()).sum();
        let y_norm: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        let dot: Complex64 = u.iter().zip(&e).map(|(&ui, &ei)| ui * ei.conj()).sum();
        let corr = dot.norm() / (u_norm.sqrt() * e_norm.sqrt());
        assert!(corr < 1e-6, "normalized <u, e> = {corr}");
        // ||y||^2 = |G|^2 ||u||^2 + ||e||^2
        let recon = g.norm_sqr() * u_norm + e_norm;
        assert!(
            ((recon - y_norm) / y_norm).abs() < 1e-9,
            "power accounting off: {recon} vs {y_norm}"
        );
        // NMSE from the decomposition matches the direct formula
        let nmse = measure_nmse(&u, &y, g).unwrap();
        assert!((nmse - 10.0 * (e_norm / y_norm).log10()).abs() < 1e-12);
    }

    #[test]
    fn saturated_output_stays_uncorrelated() {
        // heavy drive: the clipper is strongly nonlinear, yet the residual
        // stays essentially uncorrelated with the input
        let u = generate_ofdm_burst(256, 16, 0.5, 22, 8).unwrap();
        let y = synthetic_pa_apply(&u, &SyntheticPa::default());
        let (_, e) = bussgang_decompose(&u, &y).unwrap();
        let u_norm: f64 = u.iter().map(|v| v.norm_sqr()).sum();
        let e_norm: f64 = e.iter().map(|v| v.norm_sqr()).sum();
        let dot: Complex64 = u.iter().zip(&e).map(|(&ui, &ei)| ui * ei.conj()).sum();
        assert!(dot.norm() / (u_norm.sqrt() * e_norm.sqrt()) < 0.05);
    }

    #[test]
    fn zero_power_inputs_rejected() {
        let z = vec![Complex64::new(0.0, 0.0); 8];
        let y = vec![Complex64::new(1.0, 0.0); 8];
        assert!(matches!(
            bussgang_decompose(&z, &y),
            Err(DpdError::ZeroReferencePower)
        ));
        assert!(matches!(
            measure_nmse(&y, &z, Complex64::new(1.0, 0.0)),
            Err(DpdError::ZeroSignalPower)
        ));
    }

    #[test]
    fn noiseless_power_law_recovered_exactly() {
        let reg = RegressionForm {
            k1: 0.3552,
            k2: -35.60450021680094,
        };
        let sweep: Vec<NmseMeasurement> = [0.01, 0.05, 0.2, 0.5, 1.0, 2.0, 3.981]
            .iter()
            .map(|&p| NmseMeasurement {
                p_out: p,
                nmse_db: nmse_db(p, &reg).unwrap(),
            })
            .collect();
        let fit = fit_power_law(&sweep).unwrap();
        assert!((fit.model.a() - 0.0032).abs() < 1e-9 * 0.0032);
        assert!((fit.model.alpha() - 1.3552).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_points_interpolate_exactly() {
        let sweep = [
            NmseMeasurement { p_out: 0.1, nmse_db: -40.0 },
            NmseMeasurement { p_out: 1.0, nmse_db: -35.0 },
        ];
        let fit = fit_power_law(&sweep).unwrap();
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.regression.k1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_sweeps_rejected() {
        assert!(matches!(
            fit_power_law(&[NmseMeasurement { p_out: 1.0, nmse_db: -30.0 }]),
            Err(DpdError::DegenerateSweep)
        ));
        let same_power = [
            NmseMeasurement { p_out: 1.0, nmse_db: -30.0 },
            NmseMeasurement { p_out: 1.0, nmse_db: -31.0 },
        ];
        assert!(matches!(
            fit_power_law(&same_power),
            Err(DpdError::DegenerateSweep)
        ));
    }
}

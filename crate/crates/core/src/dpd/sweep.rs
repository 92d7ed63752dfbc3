//! NMSE-vs-output-power sweeps over the synthetic PA, with and without a
//! trained predistorter. These drive the power-law fitting pipeline end to
//! end and back the `dpd-sweep` experiment's CSV export.
//!
//! Each drive level trains on one waveform realization and measures on a
//! fresh one, so the reported NMSE reflects model mismatch rather than
//! in-sample fitting luck.

use super::gmp::{dpd_train_indirect, gmp_apply};
use super::measure::{bussgang_decompose, measure_nmse};
use super::synth_pa::synthetic_pa_apply;
use super::waveform::generate_ofdm_burst;
use super::{DpdError, GmpStructure, NmseMeasurement, SyntheticPa};

/// One sweep row, mirroring the CSV schema
/// `p_out_dBm, nmse_db, dpd_enabled, seed`.
#[derive(Debug, Clone, Copy)]
pub struct SweepSample {
    pub drive_power: f64,
    pub p_out: f64,
    pub nmse_db: f64,
    pub dpd_enabled: bool,
    pub seed: u64,
}

/// Default drive powers (watts) for characterizing the bare PA: the
/// non-saturated-to-moderate range of the default [`SyntheticPa`], where the
/// NMSE trend regresses to an exponent in the measured-hardware regime.
pub fn default_drive_levels() -> Vec<f64> {
    geomspace(6e-4, 2e-2, 12)
}

/// Drive powers (watts) for the DPD measurement campaign. The linearized
/// chain's residual only rises out of the fitting floor at stronger drive,
/// so its useful dynamic range sits higher than the bare PA's.
pub fn dpd_drive_levels() -> Vec<f64> {
    geomspace(2e-2, 0.25, 12)
}

fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

const SWEEP_SUBCARRIERS: usize = 256;
const SWEEP_CP: usize = 16;
const SWEEP_FRAMES: usize = 24;
const DPD_TRAIN_ITERS: usize = 3;

/// Measure NMSE at each drive level. With `dpd` set, a predistorter is
/// trained per level by indirect learning before measuring (retraining
/// whenever the input power changes, as the distortion level is
/// power-dependent). Level `i` derives a training stream from seed
/// `2*(seed+i)` and an evaluation stream from `2*(seed+i)+1`; the
/// measurement always runs on the evaluation stream.
pub fn nmse_sweep(
    pa: &SyntheticPa,
    dpd: Option<&GmpStructure>,
    drive_levels: &[f64],
    seed: u64,
) -> Result<Vec<SweepSample>, DpdError> {
    pa.validate()?;
    if drive_levels.is_empty() {
        return Err(DpdError::InvalidParameter("empty drive sweep".into()));
    }
    let mut out = Vec::with_capacity(drive_levels.len());
    for (i, &drive) in drive_levels.iter().enumerate() {
        if !drive.is_finite() || drive <= 0.0 {
            return Err(DpdError::InvalidParameter(format!(
                "drive powers must be > 0, got {drive}"
            )));
        }
        let level_seed = seed.wrapping_add(i as u64);
        let eval_seed = level_seed.wrapping_mul(2).wrapping_add(1);
        let u_eval =
            generate_ofdm_burst(SWEEP_SUBCARRIERS, SWEEP_CP, drive, eval_seed, SWEEP_FRAMES)?;
        let x = match dpd {
            Some(structure) => {
                let train_seed = level_seed.wrapping_mul(2);
                let u_train = generate_ofdm_burst(
                    SWEEP_SUBCARRIERS,
                    SWEEP_CP,
                    drive,
                    train_seed,
                    SWEEP_FRAMES,
                )?;
                let trained = dpd_train_indirect(&u_train, pa, structure, DPD_TRAIN_ITERS)?;
                gmp_apply(&u_eval, &trained.coefficients, structure)
            }
            None => u_eval.clone(),
        };
        let y = synthetic_pa_apply(&x, pa);
        let p_out = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / y.len() as f64;
        let (g, _) = bussgang_decompose(&u_eval, &y)?;
        let nmse = measure_nmse(&u_eval, &y, g)?;
        out.push(SweepSample {
            drive_power: drive,
            p_out,
            nmse_db: nmse,
            dpd_enabled: dpd.is_some(),
            seed: level_seed,
        });
    }
    Ok(out)
}

/// Strip a sweep down to the measurement pairs consumed by
/// [`super::fit_power_law`].
pub fn sweep_measurements(samples: &[SweepSample]) -> Vec<NmseMeasurement> {
    samples
        .iter()
        .map(|s| NmseMeasurement {
            p_out: s.p_out,
            nmse_db: s.nmse_db,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpd::fit_power_law;

    #[test]
    fn sweep_is_deterministic_per_seed() {
        let pa = SyntheticPa::default();
        let levels = [1e-3, 5e-3];
        let a = nmse_sweep(&pa, None, &levels, 9).unwrap();
        let b = nmse_sweep(&pa, None, &levels, 9).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.nmse_db, y.nmse_db);
            assert_eq!(x.p_out, y.p_out);
        }
    }

    #[test]
    fn nmse_monotone_in_drive() {
        let pa = SyntheticPa::default();
        let sweep = nmse_sweep(&pa, None, &default_drive_levels(), 3).unwrap();
        for w in sweep.windows(2) {
            assert!(
                w[1].nmse_db > w[0].nmse_db - 0.3,
                "NMSE should trend upward in drive: {} then {}",
                w[0].nmse_db,
                w[1].nmse_db
            );
        }
        // and the overall rise is substantial
        assert!(sweep.last().unwrap().nmse_db - sweep[0].nmse_db > 3.0);
    }

    #[test]
    fn default_sweep_fits_measured_regime() {
        let pa = SyntheticPa::default();
        let sweep = nmse_sweep(&pa, None, &default_drive_levels(), 3).unwrap();
        let fit = fit_power_law(&sweep_measurements(&sweep)).unwrap();
        assert!(fit.r_squared > 0.9, "R^2 = {}", fit.r_squared);
        assert!(
            fit.model.alpha() > 1.2 && fit.model.alpha() < 1.5,
            "alpha = {}",
            fit.model.alpha()
        );
        assert!(fit.regression.k1 > 0.0);
    }

    #[test]
    fn dpd_improves_every_level_and_steepens_the_law() {
        let pa = SyntheticPa::default();
        let structure = GmpStructure::aligned(5, 5);
        let levels = dpd_drive_levels();
        let plain = nmse_sweep(&pa, None, &levels, 3).unwrap();
        let with_dpd = nmse_sweep(&pa, Some(&structure), &levels, 3).unwrap();
        for (p, d) in plain.iter().zip(&with_dpd) {
            assert!(
                d.nmse_db < p.nmse_db,
                "DPD must lower NMSE at every level: {} vs {}",
                d.nmse_db,
                p.nmse_db
            );
        }
        let fit_plain = fit_power_law(&sweep_measurements(&plain)).unwrap();
        let fit_dpd = fit_power_law(&sweep_measurements(&with_dpd)).unwrap();
        assert!(fit_dpd.model.alpha() > fit_plain.model.alpha());
        assert!(fit_dpd.model.a() < fit_plain.model.a());
        assert!(fit_dpd.model.alpha() > 1.0);
        assert!(fit_plain.regression.k1 > 0.0 && fit_dpd.regression.k1 > 0.0);
        assert!(fit_dpd.r_squared > 0.9, "R^2 = {}", fit_dpd.r_squared);
    }
}

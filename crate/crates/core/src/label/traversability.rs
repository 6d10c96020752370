//! Per-frame traversability from accelerometer variance and foot-force
//! imbalance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{ImuSample, TactileSample, TerrainClass};
use crate::synth::{synth_imu, synth_tactile};

/// Span between the accelerometer variance floor and ceiling, (m/s^2)^2.
pub const ACCEL_VARIANCE_RANGE: f64 = 6.0;
/// Time-mean L1 force-fraction deviation that saturates the tactile term.
pub const DEVIATION_CEILING: f64 = 0.5;
pub const CALIBRATION_SEED: u64 = 0x00ca_11b8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraversabilityCalibration {
    pub ideal_force_distribution: [f64; 4],
    pub accel_variance_floor: f64,
    pub accel_variance_ceiling: f64,
    pub deviation_ceiling: f64,
}

/// Mean over axes of the per-axis variance about the window mean.
pub fn accel_variance(imu: &[ImuSample]) -> Result<f64> {
    if imu.is_empty() {
        return Err(Error::input("empty accelerometer series"));
    }
    let n = imu.len() as f64;
    let mut total = 0.0;
    for axis in 0..3 {
        let mean = imu.iter().map(|s| s.accel[axis] as f64).sum::<f64>() / n;
        total += imu.iter().map(|s| (s.accel[axis] as f64 - mean).powi(2)).sum::<f64>() / n;
    }
    Ok(total / 3.0)
}

fn fractions(sample: &TactileSample, row: usize) -> Result<[f64; 4]> {
    let total: f64 = sample.forces.iter().map(|f| *f as f64).sum();
    if !(total > 0.0) {
        return Err(Error::NoGroundContact { row });
    }
    Ok(sample.forces.map(|f| f as f64 / total))
}

/// Time-mean L1 distance between force fractions and `ideal`.
pub fn tactile_deviation(tactile: &[TactileSample], ideal: &[f64; 4]) -> Result<f64> {
    if tactile.is_empty() {
        return Err(Error::input("empty tactile series"));
    }
    let mut sum = 0.0;
    for (row, s) in tactile.iter().enumerate() {
        let f = fractions(s, row)?;
        sum += f.iter().zip(ideal).map(|(a, b)| (a - b).abs()).sum::<f64>();
    }
    Ok(sum / tactile.len() as f64)
}

impl TraversabilityCalibration {
    /// Derives the balanced state and variance floor from a recording of the
    /// robot on smooth ground.
    pub fn from_recording(imu: &[ImuSample], tactile: &[TactileSample]) -> Result<Self> {
        let floor = accel_variance(imu)?;
        if tactile.is_empty() {
            return Err(Error::input("empty calibration tactile series"));
        }
        let mut ideal = [0.0; 4];
        for (row, s) in tactile.iter().enumerate() {
            let f = fractions(s, row)?;
            for (a, b) in ideal.iter_mut().zip(f) {
                *a += b;
            }
        }
        let sum: f64 = ideal.iter().sum();
        for v in &mut ideal {
            *v /= sum;
        }
        let cal = TraversabilityCalibration {
            ideal_force_distribution: ideal,
            accel_variance_floor: floor,
            accel_variance_ceiling: floor + ACCEL_VARIANCE_RANGE,
            deviation_ceiling: DEVIATION_CEILING,
        };
        cal.validate()?;
        Ok(cal)
    }

    /// Calibration from a fixed synthetic concrete recording.
    pub fn standard() -> Self {
        let imu = synth_imu(TerrainClass::Concrete, 10.0, CALIBRATION_SEED).expect("positive duration");
        let tactile =
            synth_tactile(TerrainClass::Concrete, 0.0, 10.0, CALIBRATION_SEED + 1).expect("positive duration");
        Self::from_recording(&imu, &tactile).expect("concrete recording is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.ideal_force_distribution.iter().sum();
        if self.ideal_force_distribution.iter().any(|v| *v < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config("ideal force distribution must be nonnegative and sum to 1"));
        }
        if !(self.accel_variance_floor < self.accel_variance_ceiling) {
            return Err(Error::config("accelerometer variance floor must be below the ceiling"));
        }
        if !(self.deviation_ceiling > 0.0) {
            return Err(Error::config("deviation ceiling must be positive"));
        }
        Ok(())
    }

    /// Accelerometer instability rescaled into [0, 1].
    pub fn accel_term(&self, variance: f64) -> f64 {
        ((variance - self.accel_variance_floor) / (self.accel_variance_ceiling - self.accel_variance_floor))
            .clamp(0.0, 1.0)
    }

    /// Tactile imbalance rescaled into [0, 1].
    pub fn tactile_term(&self, deviation: f64) -> f64 {
        (deviation / self.deviation_ceiling).clamp(0.0, 1.0)
    }
}

/// Score in [0, 1], 1 = easiest: one minus the product of the rescaled
/// accelerometer variance and tactile deviation.
pub fn traversability_score(
    imu: &[ImuSample],
    tactile: &[TactileSample],
    calibration: &TraversabilityCalibration,
) -> Result<f64> {
    calibration.validate()?;
    let v = calibration.accel_term(accel_variance(imu)?);
    let d = calibration.tactile_term(tactile_deviation(tactile, &calibration.ideal_force_distribution)?);
    Ok(1.0 - v * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_imu_with_roughness, synth_tactile_with_roughness, IDEAL_FORCE_FRACTIONS};

    fn ideal_cal() -> TraversabilityCalibration {
        TraversabilityCalibration {
            ideal_force_distribution: IDEAL_FORCE_FRACTIONS,
            accel_variance_floor: 0.0,
            accel_variance_ceiling: 1.0,
            deviation_ceiling: 0.5,
        }
    }

    #[test]
    fn calm_balanced_is_fully_traversable() {
        let imu = vec![ImuSample { t: 0.0, accel: [0.1, 0.2, 9.81] }; 50];
        let tactile = synth_tactile_with_roughness(0.0, 0.0, 1.0, 0).unwrap();
        assert_eq!(traversability_score(&imu, &tactile, &ideal_cal()).unwrap(), 1.0);
    }

    #[test]
    fn saturated_terms_give_zero() {
        let cal = ideal_cal();
        assert_eq!(cal.accel_term(5.0), 1.0);
        assert_eq!(cal.tactile_term(3.0), 1.0);
        let imu: Vec<ImuSample> = (0..100)
            .map(|i| ImuSample { t: i as f32, accel: if i % 2 == 0 { [5.0; 3] } else { [-5.0; 3] } })
            .collect();
        let tactile = vec![TactileSample { t: 0.0, forces: [1.0, 0.0, 0.0, 0.0] }; 10];
        assert_eq!(traversability_score(&imu, &tactile, &cal).unwrap(), 0.0);
    }

    #[test]
    fn no_contact_is_an_error() {
        let imu = vec![ImuSample { t: 0.0, accel: [0.0, 0.0, 9.81] }; 4];
        let tactile = vec![TactileSample { t: 0.0, forces: [0.0; 4] }; 4];
        assert!(matches!(
            traversability_score(&imu, &tactile, &ideal_cal()),
            Err(Error::NoGroundContact { row: 0 })
        ));
    }

    #[test]
    fn mud_scores_below_concrete() {
        let cal = TraversabilityCalibration::standard();
        let score = |c: TerrainClass| {
            let imu = synth_imu(c, 2.0, 17).unwrap();
            let tac = synth_tactile(c, 0.0, 2.0, 18).unwrap();
            traversability_score(&imu, &tac, &cal).unwrap()
        };
        assert!(score(TerrainClass::Mud) < score(TerrainClass::Concrete));
        assert!(score(TerrainClass::Concrete) > 0.95);
    }

    #[test]
    fn louder_accel_never_raises_score() {
        let cal = TraversabilityCalibration::standard();
        let tac = synth_tactile_with_roughness(0.5, 0.1, 2.0, 3).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..12 {
            let imu = synth_imu_with_roughness(0.1 * k as f64, 2.0, 9).unwrap();
            let s = traversability_score(&imu, &tac, &cal).unwrap();
            assert!(s <= last + 1e-12);
            last = s;
        }
    }

    #[test]
    fn standard_calibration_is_valid() {
        let cal = TraversabilityCalibration::standard();
        cal.validate().unwrap();
        assert!(cal.accel_variance_floor > 0.0);
    }
}

//! Shared domain vocabulary: gyroscope samples, physical constants,
//! calibration levels and detected swings.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One timestamped 3-axis angular-velocity reading.
///
/// `t` is milliseconds since stream start; gyro components are degrees/second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub t: u64,
    pub gyro_x: f64,
    pub gyro_y: f64,
    pub gyro_z: f64,
}

impl ImuSample {
    pub fn new(t: u64, gyro_x: f64, gyro_y: f64, gyro_z: f64) -> Self {
        Self {
            t,
            gyro_x,
            gyro_y,
            gyro_z,
        }
    }

    pub fn gyro(&self) -> [f64; 3] {
        [self.gyro_x, self.gyro_y, self.gyro_z]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("non-finite gyro value at t={t} ms")]
    NonFiniteValue { t: u64 },
    #[error("timestamp regression: {t} ms follows {previous} ms")]
    TimestampRegression { previous: u64, t: u64 },
}

/// Checks a single sample in isolation.
pub fn validate_sample(raw: ImuSample) -> Result<ImuSample, SampleError> {
    if raw.gyro().iter().all(|v| v.is_finite()) {
        Ok(raw)
    } else {
        Err(SampleError::NonFiniteValue { t: raw.t })
    }
}

/// Stream validator: enforces finiteness and non-decreasing timestamps.
///
/// Equal consecutive timestamps are accepted.
#[derive(Debug, Clone, Default)]
pub struct SampleValidator {
    last_t: Option<u64>,
}

impl SampleValidator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, raw: ImuSample) -> Result<ImuSample, SampleError> {
        let sample = validate_sample(raw)?;
        if let Some(previous) = self.last_t {
            if sample.t < previous {
                return Err(SampleError::TimestampRegression { previous, t: sample.t });
            }
        }
        self.last_t = Some(sample.t);
        Ok(sample)
    }

    /// Timestamp of the last accepted sample.
    pub fn last_t(&self) -> Option<u64> {
        self.last_t
    }
}

/// Metres/second to miles/hour.
pub const MPH_PER_MPS: f64 = 2.23694;

/// Racket and conversion constants used by the metric path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalConfig {
    pub racket_length_m: f64,
    pub effective_mass_kg: f64,
    pub moment_of_inertia_kgm2: f64,
    pub speed_calibration_factor: f64,
    pub mph_per_mps: f64,
    /// Apply `speed_calibration_factor` to the linear velocity used for
    /// kinetic energy as well as for displayed speed.
    pub calibrate_power: bool,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        Self {
            racket_length_m: 0.68,
            effective_mass_kg: 0.2,
            moment_of_inertia_kgm2: 0.045,
            speed_calibration_factor: 1.15,
            mph_per_mps: MPH_PER_MPS,
            calibrate_power: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("config field `{field}` must be strictly positive and finite (got {value})")]
pub struct ConfigError {
    pub field: &'static str,
    pub value: f64,
}

pub(crate) fn require_positive(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError { field, value })
    }
}

impl PhysicalConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        require_positive("racket_length_m", self.racket_length_m)?;
        require_positive("effective_mass_kg", self.effective_mass_kg)?;
        require_positive("moment_of_inertia_kgm2", self.moment_of_inertia_kgm2)?;
        require_positive("speed_calibration_factor", self.speed_calibration_factor)?;
        require_positive("mph_per_mps", self.mph_per_mps)
    }
}

/// Calibration quality levels, 0 (uncalibrated) to 3 (fully calibrated).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationState {
    pub system: u8,
    pub gyro: u8,
    pub accel: u8,
    pub mag: u8,
}

pub const MAX_CALIBRATION_LEVEL: u8 = 3;

impl CalibrationState {
    pub fn new(system: u8, gyro: u8, accel: u8, mag: u8) -> Option<Self> {
        let state = Self {
            system,
            gyro,
            accel,
            mag,
        };
        state.is_valid().then_some(state)
    }

    pub fn is_valid(&self) -> bool {
        self.levels().iter().all(|&l| l <= MAX_CALIBRATION_LEVEL)
    }

    pub fn levels(&self) -> [u8; 4] {
        [self.system, self.gyro, self.accel, self.mag]
    }

    pub fn fully_calibrated(&self) -> bool {
        self.levels().iter().all(|&l| l == MAX_CALIBRATION_LEVEL)
    }
}

/// One detected swing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwingEvent {
    pub start_ms: u64,
    pub end_ms: u64,
    pub peak_speed_mph: f64,
    pub peak_power_pct: f64,
    pub peak_omega_dps: f64,
}

impl SwingEvent {
    pub fn is_valid(&self) -> bool {
        self.start_ms < self.end_ms
            && self.peak_speed_mph.is_finite()
            && self.peak_speed_mph >= 0.0
            && (0.0..=100.0).contains(&self.peak_power_pct)
            && self.peak_omega_dps.is_finite()
            && self.peak_omega_dps >= 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rest_sample_accepted() {
        let s = ImuSample::new(0, 0.0, 0.0, 0.0);
        assert_eq!(validate_sample(s), Ok(s));
    }

    #[test]
    fn nan_rejected() {
        let s = ImuSample::new(10, f64::NAN, 0.0, 0.0);
        assert_eq!(validate_sample(s), Err(SampleError::NonFiniteValue { t: 10 }));
    }

    #[test]
    fn regression_rejected_on_second_sample() {
        let mut v = SampleValidator::new();
        assert!(v.check(ImuSample::new(5, 1.0, 2.0, 3.0)).is_ok());
        assert_eq!(
            v.check(ImuSample::new(4, 1.0, 2.0, 3.0)),
            Err(SampleError::TimestampRegression { previous: 5, t: 4 })
        );
        // equal timestamps are a burst, not a regression
        assert!(v.check(ImuSample::new(5, 0.0, 0.0, 0.0)).is_ok());
    }

    #[test]
    fn physical_defaults() {
        let cfg = PhysicalConfig::default();
        assert_eq!(cfg.racket_length_m, 0.68);
        assert_eq!(cfg.effective_mass_kg, 0.2);
        assert_eq!(cfg.moment_of_inertia_kgm2, 0.045);
        assert_eq!(cfg.speed_calibration_factor, 1.15);
        assert_eq!(cfg.mph_per_mps, 2.23694);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn physical_rejects_non_positive() {
        let cfg = PhysicalConfig {
            effective_mass_kg: 0.0,
            ..Default::default()
        };
        assert_eq!(cfg.validate().unwrap_err().field, "effective_mass_kg");
    }

    #[test]
    fn calibration_levels() {
        assert!(CalibrationState::new(3, 3, 3, 3).unwrap().fully_calibrated());
        assert!(!CalibrationState::new(3, 3, 3, 2).unwrap().fully_calibrated());
        assert!(CalibrationState::new(4, 0, 0, 0).is_none());
    }

    fn any_component() -> impl Strategy<Value = f64> {
        prop_oneof![
            4 => -2000.0..2000.0f64,
            1 => Just(f64::NAN),
            1 => Just(f64::INFINITY),
            1 => Just(f64::NEG_INFINITY),
        ]
    }

    proptest! {
        #[test]
        fn validated_samples_satisfy_invariants(
            raw in proptest::collection::vec((0u64..1000, any_component(), any_component(), any_component()), 1..50)
        ) {
            let mut v = SampleValidator::new();
            let mut last = None;
            for (t, x, y, z) in raw {
                if let Ok(s) = v.check(ImuSample::new(t, x, y, z)) {
                    prop_assert!(s.gyro().iter().all(|c| c.is_finite()));
                    if let Some(prev) = last {
                        prop_assert!(s.t >= prev);
                    }
                    last = Some(s.t);
                }
            }
        }
    }
}

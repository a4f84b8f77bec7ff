use std::f64::consts::PI;

use crate::model::{ImuSample, PhysicalConfig};

/// Euclidean norm of the gyroscope vector, degrees/second.
pub fn angular_speed_dps(sample: &ImuSample) -> f64 {
    let [x, y, z] = sample.gyro();
    (x * x + y * y + z * z).sqrt()
}

pub fn dps_to_rad(omega_dps: f64) -> f64 {
    omega_dps * PI / 180.0
}

/// Calibrated racket-tip linear speed in metres/second.
fn tip_speed_mps(omega_dps: f64, cfg: &PhysicalConfig, calibrated: bool) -> f64 {
    let v = cfg.racket_length_m * dps_to_rad(omega_dps);
    if calibrated {
        v * cfg.speed_calibration_factor
    } else {
        v
    }
}

/// Racket-tip speed in mph, including the empirical calibration factor.
pub fn swing_speed_mph(omega_dps: f64, cfg: &PhysicalConfig) -> f64 {
    tip_speed_mps(omega_dps, cfg, true) * cfg.mph_per_mps
}

/// Linear plus rotational kinetic energy in joules.
pub fn raw_power_joules(omega_dps: f64, cfg: &PhysicalConfig) -> f64 {
    let omega = dps_to_rad(omega_dps);
    let v = tip_speed_mps(omega_dps, cfg, cfg.calibrate_power);
    0.5 * cfg.effective_mass_kg * v * v + 0.5 * cfg.moment_of_inertia_kgm2 * omega * omega
}

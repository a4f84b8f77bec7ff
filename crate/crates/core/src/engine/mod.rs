//! Swing detection and per-swing metrics.

mod detect;
mod metrics;
mod normalize;

pub use detect::{detect_swings, DetectorConfig, SwingDetector};
pub use metrics::{angular_speed_dps, dps_to_rad, raw_power_joules, swing_speed_mph};
pub use normalize::{normalize_power, NormalizerState};

//! Simulated sensor calibration procedure gating the metric pipeline.
//!
//! The gyroscope level is derived from the sample stream (accumulated
//! stillness). Magnetometer and accelerometer progress comes from scripted
//! gesture annotations: a completed figure-8 and six distinct standing poses.

use serde::{Deserialize, Serialize};

use crate::engine::angular_speed_dps;
use crate::model::{CalibrationState, ImuSample, MAX_CALIBRATION_LEVEL};

pub const POSE_COUNT: u8 = 6;

/// Scripted calibration gesture carried in a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gesture {
    Figure8Complete,
    /// Standing pose index, 1 through 6.
    Pose(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub stillness_threshold_dps: f64,
    /// Accumulated stillness needed for gyro levels 1, 2 and 3.
    pub stillness_milestones_ms: [u64; 3],
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            stillness_threshold_dps: 5.0,
            stillness_milestones_ms: [500, 1000, 2000],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProcedure {
    cfg: CalibrationConfig,
    current: CalibrationState,
    stillness_ms_accumulated: u64,
    figure8_progress: f64,
    poses_seen: [bool; POSE_COUNT as usize],
    last_t: Option<u64>,
}

impl Default for CalibrationProcedure {
    fn default() -> Self {
        Self::new(CalibrationConfig::default())
    }
}

impl CalibrationProcedure {
    pub fn new(cfg: CalibrationConfig) -> Self {
        Self {
            cfg,
            current: CalibrationState::default(),
            stillness_ms_accumulated: 0,
            figure8_progress: 0.0,
            poses_seen: [false; POSE_COUNT as usize],
            last_t: None,
        }
    }

    pub fn state(&self) -> CalibrationState {
        self.current
    }

    pub fn stillness_ms_accumulated(&self) -> u64 {
        self.stillness_ms_accumulated
    }

    pub fn figure8_progress(&self) -> f64 {
        self.figure8_progress
    }

    pub fn pose_count(&self) -> u8 {
        self.poses_seen.iter().filter(|&&p| p).count() as u8
    }

    /// Stillness accumulates by the time elapsed since the previous sample
    /// while angular speed stays under the threshold; any motion resets it.
    pub fn feed(&mut self, sample: &ImuSample) {
        let still = angular_speed_dps(sample) < self.cfg.stillness_threshold_dps;
        let dt = self.last_t.map_or(0, |prev| sample.t.saturating_sub(prev));
        self.last_t = Some(sample.t);
        if !still {
            self.stillness_ms_accumulated = 0;
            return;
        }
        self.stillness_ms_accumulated += dt;
        let reached = self
            .cfg
            .stillness_milestones_ms
            .iter()
            .filter(|&&m| self.stillness_ms_accumulated >= m)
            .count() as u8;
        self.current.gyro = self.current.gyro.max(reached);
        self.refresh_system();
    }

    pub fn apply_gesture(&mut self, gesture: Gesture) {
        match gesture {
            Gesture::Figure8Complete => {
                self.figure8_progress = 1.0;
                self.current.mag = MAX_CALIBRATION_LEVEL;
            }
            Gesture::Pose(n) if (1..=POSE_COUNT).contains(&n) => {
                self.poses_seen[(n - 1) as usize] = true;
                let level = self.pose_count() / 2;
                self.current.accel = self.current.accel.max(level);
            }
            Gesture::Pose(_) => {}
        }
        self.refresh_system();
    }

    /// Raises levels to a device-reported state; levels never decrease.
    pub fn merge_reported(&mut self, reported: CalibrationState) {
        let cap = |l: u8| l.min(MAX_CALIBRATION_LEVEL);
        self.current.gyro = self.current.gyro.max(cap(reported.gyro));
        self.current.accel = self.current.accel.max(cap(reported.accel));
        self.current.mag = self.current.mag.max(cap(reported.mag));
        self.current.system = self.current.system.max(cap(reported.system));
        self.refresh_system();
    }

    fn refresh_system(&mut self) {
        let c = &mut self.current;
        c.system = c.system.max(c.gyro.min(c.accel).min(c.mag));
    }
}

/// Whether the pipeline may start acquiring swings.
pub fn gate(proc: &CalibrationProcedure) -> bool {
    proc.state().fully_calibrated()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rest(from: u64, to: u64) -> impl Iterator<Item = ImuSample> {
        (from..=to).step_by(10).map(|t| ImuSample::new(t, 0.0, 0.0, 0.0))
    }

    #[test]
    fn fresh_procedure_is_ungated() {
        let p = CalibrationProcedure::default();
        assert_eq!(p.state(), CalibrationState::default());
        assert!(!gate(&p));
    }

    #[test]
    fn two_seconds_of_rest_reaches_gyro_three() {
        let mut p = CalibrationProcedure::default();
        rest(0, 2000).for_each(|s| p.feed(&s));
        assert_eq!(p.state().gyro, 3);
        assert!(!gate(&p));
    }

    #[test]
    fn motion_resets_stillness_keeps_level() {
        let mut p = CalibrationProcedure::default();
        rest(0, 600).for_each(|s| p.feed(&s));
        assert_eq!(p.state().gyro, 1);
        p.feed(&ImuSample::new(610, 500.0, 0.0, 0.0));
        assert_eq!(p.state().gyro, 1);
        assert_eq!(p.stillness_ms_accumulated(), 0);
    }

    #[test]
    fn gate_examples() {
        let mut p = CalibrationProcedure::default();
        p.merge_reported(CalibrationState::new(3, 3, 3, 2).unwrap());
        assert!(!gate(&p));
        p.merge_reported(CalibrationState::new(3, 3, 3, 3).unwrap());
        assert!(gate(&p));
    }

    #[test]
    fn full_script_opens_gate() {
        let mut p = CalibrationProcedure::default();
        p.apply_gesture(Gesture::Figure8Complete);
        for n in 1..=6 {
            p.apply_gesture(Gesture::Pose(n));
        }
        assert_eq!(p.state().accel, 3);
        assert!(!gate(&p));
        rest(0, 2000).for_each(|s| p.feed(&s));
        assert!(gate(&p));
    }

    #[test]
    fn repeated_pose_counts_once() {
        let mut p = CalibrationProcedure::default();
        for _ in 0..6 {
            p.apply_gesture(Gesture::Pose(2));
        }
        assert_eq!(p.pose_count(), 1);
        assert_eq!(p.state().accel, 0);
    }

    #[derive(Debug, Clone)]
    enum Step {
        Still(u64),
        Move,
        Figure8,
        Pose(u8),
    }

    fn step() -> impl Strategy<Value = Step> {
        prop_oneof![
            (10u64..800).prop_map(Step::Still),
            Just(Step::Move),
            Just(Step::Figure8),
            (1u8..=6).prop_map(Step::Pose),
        ]
    }

    proptest! {
        #[test]
        fn gate_requires_all_gestures_and_levels_monotone(steps in proptest::collection::vec(step(), 0..60)) {
            let mut p = CalibrationProcedure::default();
            let mut t = 0u64;
            let mut figure8 = false;
            let mut poses = [false; 6];
            // reference model of the stillness accumulator
            let mut acc = 0u64;
            let mut last_t: Option<u64> = None;
            let mut gyro_done = false;
            let mut prev = p.state();
            for s in steps {
                match s {
                    Step::Still(d) => {
                        let end = t + d;
                        while t < end {
                            t += 10;
                            p.feed(&ImuSample::new(t, 0.0, 0.0, 0.0));
                            acc += last_t.map_or(0, |l| t - l);
                            last_t = Some(t);
                            gyro_done |= acc >= 2000;
                        }
                    }
                    Step::Move => {
                        t += 10;
                        p.feed(&ImuSample::new(t, 300.0, 0.0, 0.0));
                        acc = 0;
                        last_t = Some(t);
                    }
                    Step::Figure8 => { p.apply_gesture(Gesture::Figure8Complete); figure8 = true; }
                    Step::Pose(n) => { p.apply_gesture(Gesture::Pose(n)); poses[(n - 1) as usize] = true; }
                }
                let now = p.state();
                for (a, b) in prev.levels().iter().zip(now.levels()) {
                    prop_assert!(b >= *a);
                }
                prev = now;
                if gate(&p) {
                    prop_assert!(figure8 && poses.iter().all(|&x| x));
                    prop_assert!(gyro_done);
                }
                if figure8 && poses.iter().all(|&x| x) && gyro_done {
                    prop_assert!(gate(&p));
                }
            }
        }
    }
}

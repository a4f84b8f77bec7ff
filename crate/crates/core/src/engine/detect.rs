use serde::{Deserialize, Serialize};

use super::metrics::{angular_speed_dps, raw_power_joules, swing_speed_mph};
use super::normalize::NormalizerState;
use crate::model::{require_positive, ConfigError, ImuSample, PhysicalConfig, SwingEvent};

/// Hysteresis thresholds for swing segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub start_threshold_dps: f64,
    pub end_threshold_dps: f64,
    pub min_duration_ms: u64,
    pub refractory_ms: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            start_threshold_dps: 120.0,
            end_threshold_dps: 60.0,
            min_duration_ms: 80,
            refractory_ms: 150,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        require_positive("start_threshold_dps", self.start_threshold_dps)?;
        require_positive("end_threshold_dps", self.end_threshold_dps)?;
        require_positive("min_duration_ms", self.min_duration_ms as f64)?;
        require_positive("refractory_ms", self.refractory_ms as f64)?;
        if self.end_threshold_dps >= self.start_threshold_dps {
            return Err(ConfigError {
                field: "end_threshold_dps",
                value: self.end_threshold_dps,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Idle,
    Active {
        start_ms: u64,
        last_ms: u64,
        peak_dps: f64,
        /// First timestamp of the current run below the end threshold.
        below_since: Option<u64>,
    },
}

/// Streaming swing segmenter.
///
/// A window opens on the first sample whose angular speed exceeds the start
/// threshold and closes once the speed has stayed below the end threshold
/// for at least the refractory time. The window end is the first sample of
/// that quiet run. Windows shorter than `min_duration_ms` are dropped
/// without touching the normaliser.
#[derive(Debug, Clone)]
pub struct SwingDetector {
    det: DetectorConfig,
    cfg: PhysicalConfig,
    normalizer: NormalizerState,
    phase: Phase,
}

impl SwingDetector {
    pub fn new(det: DetectorConfig, cfg: PhysicalConfig) -> Self {
        Self::with_state(det, cfg, NormalizerState::new())
    }

    pub fn with_state(det: DetectorConfig, cfg: PhysicalConfig, normalizer: NormalizerState) -> Self {
        Self {
            det,
            cfg,
            normalizer,
            phase: Phase::Idle,
        }
    }

    pub fn normalizer(&self) -> &NormalizerState {
        &self.normalizer
    }

    pub fn into_normalizer(self) -> NormalizerState {
        self.normalizer
    }

    pub fn in_swing(&self) -> bool {
        matches!(self.phase, Phase::Active { .. })
    }

    pub fn push(&mut self, sample: &ImuSample) -> Option<SwingEvent> {
        let omega = angular_speed_dps(sample);
        match &mut self.phase {
            Phase::Idle => {
                if omega > self.det.start_threshold_dps {
                    self.phase = Phase::Active {
                        start_ms: sample.t,
                        last_ms: sample.t,
                        peak_dps: omega,
                        below_since: None,
                    };
                }
                None
            }
            Phase::Active {
                start_ms,
                last_ms,
                peak_dps,
                below_since,
            } => {
                *last_ms = sample.t;
                if omega > *peak_dps {
                    *peak_dps = omega;
                }
                if omega < self.det.end_threshold_dps {
                    let since = *below_since.get_or_insert(sample.t);
                    if sample.t - since >= self.det.refractory_ms {
                        let (start, peak) = (*start_ms, *peak_dps);
                        self.phase = Phase::Idle;
                        return self.close(start, since, peak);
                    }
                } else {
                    *below_since = None;
                }
                None
            }
        }
    }

    /// Closes any open window at end of stream.
    pub fn finish(&mut self) -> Option<SwingEvent> {
        match std::mem::replace(&mut self.phase, Phase::Idle) {
            Phase::Idle => None,
            Phase::Active {
                start_ms,
                last_ms,
                peak_dps,
                below_since,
            } => self.close(start_ms, below_since.unwrap_or(last_ms), peak_dps),
        }
    }

    fn close(&mut self, start_ms: u64, end_ms: u64, peak_dps: f64) -> Option<SwingEvent> {
        if end_ms <= start_ms || end_ms - start_ms < self.det.min_duration_ms {
            return None;
        }
        let raw = raw_power_joules(peak_dps, &self.cfg);
        Some(SwingEvent {
            start_ms,
            end_ms,
            peak_speed_mph: swing_speed_mph(peak_dps, &self.cfg),
            peak_power_pct: self.normalizer.normalize(raw),
            peak_omega_dps: peak_dps,
        })
    }
}

/// Runs the detector over a whole stream, threading `state` through.
pub fn detect_swings<'a, I>(
    samples: I,
    det: &DetectorConfig,
    cfg: &PhysicalConfig,
    state: &mut NormalizerState,
) -> Vec<SwingEvent>
where
    I: IntoIterator<Item = &'a ImuSample>,
{
    let mut detector = SwingDetector::with_state(*det, *cfg, *state);
    let mut events: Vec<SwingEvent> = samples.into_iter().filter_map(|s| detector.push(s)).collect();
    events.extend(detector.finish());
    *state = detector.into_normalizer();
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pulse_train(peaks: &[f64], duration_ms: u64, rest_ms: u64, step_ms: u64) -> Vec<ImuSample> {
        let mut out = Vec::new();
        let mut t = 0;
        let rest = |t: &mut u64, out: &mut Vec<ImuSample>| {
            let end = *t + rest_ms;
            while *t < end {
                out.push(ImuSample::new(*t, 0.0, 0.0, 0.0));
                *t += step_ms;
            }
        };
        rest(&mut t, &mut out);
        for &peak in peaks {
            let start = t;
            while t <= start + duration_ms {
                let phase = (t - start) as f64 / duration_ms as f64;
                out.push(ImuSample::new(t, 0.0, 0.0, peak * (PI * phase).sin()));
                t += step_ms;
            }
            rest(&mut t, &mut out);
        }
        out
    }

    #[test]
    fn rest_stream_is_silent() {
        let samples: Vec<_> = (0..500).map(|i| ImuSample::new(i * 10, 0.0, 0.0, 0.0)).collect();
        let mut state = NormalizerState::new();
        assert!(detect_swings(
            &samples,
            &DetectorConfig::default(),
            &PhysicalConfig::default(),
            &mut state
        )
        .is_empty());
        assert!(detect_swings(&[], &DetectorConfig::default(), &PhysicalConfig::default(), &mut state).is_empty());
        assert_eq!(state.swing_count(), 0);
    }

    #[test]
    fn three_pulses_three_events() {
        let samples = pulse_train(&[400.0, 400.0, 400.0], 300, 1000, 10);
        let mut state = NormalizerState::new();
        let events = detect_swings(
            &samples,
            &DetectorConfig::default(),
            &PhysicalConfig::default(),
            &mut state,
        );
        assert_eq!(events.len(), 3);
        // sine sampled at 10 ms over 300 ms: worst-case miss is 1 - cos(pi/30)
        let tol = 400.0 * (1.0 - (PI * 10.0 / 300.0).cos());
        for e in &events {
            assert!((e.peak_omega_dps - 400.0).abs() <= tol, "{e:?}");
            assert!(e.is_valid());
        }
        for pair in events.windows(2) {
            assert!(pair[0].end_ms < pair[1].start_ms);
        }
    }

    #[test]
    fn weaker_second_swing_reads_quarter_power() {
        let samples = pulse_train(&[400.0, 200.0], 300, 1000, 10);
        let mut state = NormalizerState::new();
        let events = detect_swings(
            &samples,
            &DetectorConfig::default(),
            &PhysicalConfig::default(),
            &mut state,
        );
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].peak_power_pct, 100.0);
        assert!((events[1].peak_power_pct - 25.0).abs() < 0.5);
    }

    #[test]
    fn casual_waggle_ignored() {
        let samples = pulse_train(&[100.0], 300, 500, 10);
        let mut state = NormalizerState::new();
        assert!(detect_swings(
            &samples,
            &DetectorConfig::default(),
            &PhysicalConfig::default(),
            &mut state
        )
        .is_empty());
    }

    #[test]
    fn short_spike_discarded() {
        let samples = vec![
            ImuSample::new(0, 0.0, 0.0, 0.0),
            ImuSample::new(10, 500.0, 0.0, 0.0),
            ImuSample::new(20, 0.0, 0.0, 0.0),
            ImuSample::new(400, 0.0, 0.0, 0.0),
        ];
        let mut state = NormalizerState::new();
        assert!(detect_swings(
            &samples,
            &DetectorConfig::default(),
            &PhysicalConfig::default(),
            &mut state
        )
        .is_empty());
        assert_eq!(state.swing_count(), 0);
    }

    #[test]
    fn open_window_closed_at_stream_end() {
        let samples: Vec<_> = (0..20).map(|i| ImuSample::new(i * 10, 300.0, 0.0, 0.0)).collect();
        let mut state = NormalizerState::new();
        let events = detect_swings(
            &samples,
            &DetectorConfig::default(),
            &PhysicalConfig::default(),
            &mut state,
        );
        assert_eq!(events.len(), 1);
        assert_eq!((events[0].start_ms, events[0].end_ms), (0, 190));
    }

    #[test]
    fn brief_dip_does_not_split_swing() {
        let mut samples: Vec<_> = (0..10).map(|i| ImuSample::new(i * 10, 300.0, 0.0, 0.0)).collect();
        samples.push(ImuSample::new(100, 10.0, 0.0, 0.0));
        samples.extend((11..20).map(|i| ImuSample::new(i * 10, 300.0, 0.0, 0.0)));
        samples.extend((20..60).map(|i| ImuSample::new(i * 10, 0.0, 0.0, 0.0)));
        let mut state = NormalizerState::new();
        let events = detect_swings(
            &samples,
            &DetectorConfig::default(),
            &PhysicalConfig::default(),
            &mut state,
        );
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].end_ms, 200);
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::default().validate().is_ok());
        let bad = DetectorConfig {
            end_threshold_dps: 150.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}

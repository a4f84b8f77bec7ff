use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::codec::{Annotation, TraceError, TraceFile};
use crate::calibration::{Gesture, POSE_COUNT};
use crate::model::ImuSample;

/// One half-sine swing: angular speed `peak_dps * sin(pi * (t - start) / duration)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub start_ms: u64,
    pub duration_ms: u64,
    pub peak_dps: f64,
    /// Unit vector distributing the speed over the three gyro axes.
    pub axis_weights: [f64; 3],
}

impl PulseSpec {
    pub fn new(start_ms: u64, duration_ms: u64, peak_dps: f64) -> Self {
        Self {
            start_ms,
            duration_ms,
            peak_dps,
            axis_weights: [0.0, 0.0, 1.0],
        }
    }

    pub fn end_ms(&self) -> u64 {
        self.start_ms + self.duration_ms
    }

    fn validate(&self, index: usize) -> Result<(), TraceError> {
        let invalid = |reason: &str| TraceError::InvalidPulse {
            index,
            reason: reason.into(),
        };
        if !(self.peak_dps.is_finite() && self.peak_dps > 0.0) {
            return Err(invalid("peak_dps must be positive"));
        }
        if self.duration_ms == 0 {
            return Err(invalid("duration_ms must be positive"));
        }
        let norm = self.axis_weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        if norm.is_nan() || (norm - 1.0).abs() > 1e-9 {
            return Err(invalid("axis_weights must have unit norm"));
        }
        Ok(())
    }

    fn speed_at(&self, t: u64) -> Option<f64> {
        (self.start_ms..=self.end_ms()).contains(&t).then(|| {
            let phase = (t - self.start_ms) as f64 / self.duration_ms as f64;
            self.peak_dps * (PI * phase).sin()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub sample_rate_hz: u32,
    pub seed: u64,
    /// Half-width of additive uniform noise per axis, dps.
    pub noise_dps: f64,
    /// Rest appended after the last pulse (or the whole trace with no pulses).
    pub tail_ms: u64,
    /// Emit the figure-8 and six pose gestures after the first sample.
    pub calibration_gestures: bool,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            sample_rate_hz: 100,
            seed: 0,
            noise_dps: 0.0,
            tail_ms: 1000,
            calibration_gestures: false,
        }
    }
}

/// Deterministic synthetic trace from a list of non-overlapping pulses.
pub fn generate_trace(pulses: &[PulseSpec], params: &GeneratorParams) -> Result<TraceFile, TraceError> {
    if params.sample_rate_hz == 0 {
        return Err(TraceError::InvalidSampleRate);
    }
    for (i, p) in pulses.iter().enumerate() {
        p.validate(i)?;
    }
    let mut order: Vec<usize> = (0..pulses.len()).collect();
    order.sort_by_key(|&i| pulses[i].start_ms);
    for pair in order.windows(2) {
        if pulses[pair[0]].end_ms() > pulses[pair[1]].start_ms {
            return Err(TraceError::OverlappingPulses {
                first: pair[0].min(pair[1]),
                second: pair[0].max(pair[1]),
            });
        }
    }

    let end_ms = pulses.iter().map(PulseSpec::end_ms).max().unwrap_or(0) + params.tail_ms;
    let rate = params.sample_rate_hz as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let noise = |rng: &mut ChaCha8Rng| {
        if params.noise_dps > 0.0 {
            rng.gen_range(-params.noise_dps..=params.noise_dps)
        } else {
            0.0
        }
    };

    let mut trace = TraceFile::default();
    let mut cursor = 0; // index into `order`, pulses are visited in time order
    for k in 0u64.. {
        let t = (k as f64 * 1000.0 / rate).round() as u64;
        if t > end_ms {
            break;
        }
        while cursor < order.len() && pulses[order[cursor]].end_ms() < t {
            cursor += 1;
        }
        let (speed, weights) = order[cursor..]
            .iter()
            .map(|&i| &pulses[i])
            .take_while(|p| p.start_ms <= t)
            .find_map(|p| p.speed_at(t).map(|s| (s, p.axis_weights)))
            .unwrap_or((0.0, [0.0; 3]));
        let sample = ImuSample::new(
            t,
            weights[0] * speed + noise(&mut rng),
            weights[1] * speed + noise(&mut rng),
            weights[2] * speed + noise(&mut rng),
        );
        trace.push_sample(sample);
        if k == 0 && params.calibration_gestures {
            trace.push_annotation(Annotation::Gesture(Gesture::Figure8Complete));
            for n in 1..=POSE_COUNT {
                trace.push_annotation(Annotation::Gesture(Gesture::Pose(n)));
            }
        }
    }
    Ok(trace)
}

/// The three-swing reference trace: 400 dps half-sines of 300 ms separated
/// by 1 s of rest, preceded by 2.5 s of stillness and the calibration script.
pub fn three_pulse_oracle() -> (Vec<PulseSpec>, GeneratorParams) {
    let pulses = (0..3).map(|i| PulseSpec::new(2500 + i * 1300, 300, 400.0)).collect();
    let params = GeneratorParams {
        calibration_gestures: true,
        ..Default::default()
    };
    (pulses, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::angular_speed_dps;

    #[test]
    fn single_pulse_peak() {
        let trace = generate_trace(&[PulseSpec::new(100, 300, 400.0)], &GeneratorParams::default()).unwrap();
        let max = trace.samples().map(angular_speed_dps).fold(0.0, f64::max);
        // 10 ms spacing over a 300 ms half-period; the apex at 250 ms is sampled
        assert!((max - 400.0).abs() <= 400.0 * (1.0 - (PI * 10.0 / 300.0).cos()));
        assert_eq!(trace.samples().last().unwrap().t, 1400);
    }

    #[test]
    fn no_pulses_no_noise_is_flat() {
        let trace = generate_trace(&[], &GeneratorParams::default()).unwrap();
        assert_eq!(trace.sample_count(), 101);
        assert!(trace.samples().all(|s| s.gyro() == [0.0; 3]));
    }

    #[test]
    fn noise_is_bounded_and_seeded() {
        let params = GeneratorParams {
            noise_dps: 3.0,
            seed: 7,
            ..Default::default()
        };
        let a = generate_trace(&[], &params).unwrap();
        assert!(a.samples().all(|s| s.gyro().iter().all(|v| v.abs() <= 3.0)));
        assert!(a.samples().any(|s| s.gyro_x != 0.0));
        let b = generate_trace(&[], &params).unwrap();
        assert_eq!(a.encode().unwrap(), b.encode().unwrap());
        let c = generate_trace(&[], &GeneratorParams { seed: 8, ..params }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn weights_split_axes() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pulse = PulseSpec {
            axis_weights: [s, s, 0.0],
            ..PulseSpec::new(0, 200, 300.0)
        };
        let trace = generate_trace(&[pulse], &GeneratorParams::default()).unwrap();
        let apex = trace.samples().find(|x| x.t == 100).unwrap();
        assert!((angular_speed_dps(apex) - 300.0).abs() < 1e-9);
        assert_eq!(apex.gyro_z, 0.0);
    }

    #[test]
    fn rejects_bad_pulses() {
        let p = GeneratorParams::default();
        assert_eq!(
            generate_trace(&[PulseSpec::new(0, 300, 400.0), PulseSpec::new(200, 300, 400.0)], &p),
            Err(TraceError::OverlappingPulses { first: 0, second: 1 })
        );
        assert!(matches!(
            generate_trace(
                &[PulseSpec {
                    axis_weights: [1.0, 1.0, 0.0],
                    ..PulseSpec::new(0, 10, 1.0)
                }],
                &p
            ),
            Err(TraceError::InvalidPulse { index: 0, .. })
        ));
        assert!(generate_trace(&[PulseSpec::new(0, 0, 1.0)], &p).is_err());
        assert!(generate_trace(&[PulseSpec::new(0, 10, -1.0)], &p).is_err());
        assert_eq!(
            generate_trace(&[], &GeneratorParams { sample_rate_hz: 0, ..p }),
            Err(TraceError::InvalidSampleRate)
        );
    }

    #[test]
    fn oracle_layout() {
        let (pulses, params) = three_pulse_oracle();
        let trace = generate_trace(&pulses, &params).unwrap();
        assert_eq!(trace.span_ms(), 5400 + 1000);
        assert_eq!(trace.entries.len(), trace.sample_count() + 7);
    }
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::Gesture;
use crate::model::{ImuSample, SampleValidator};
use crate::session::ShotOutcome;

pub const HEADER: &str = "t_ms,gyro_x,gyro_y,gyro_z";
pub const ACCEL_SUFFIX: &str = ",ax,ay,az";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("malformed trace at line {line}: {reason}")]
    MalformedTrace { line: usize, reason: String },
    #[error("sample {index} lacks accelerometer columns required by the header")]
    InconsistentAccel { index: usize },
    #[error("pulses {first} and {second} overlap in time")]
    OverlappingPulses { first: usize, second: usize },
    #[error("invalid pulse {index}: {reason}")]
    InvalidPulse { index: usize, reason: String },
    #[error("sample rate must be positive")]
    InvalidSampleRate,
}

/// Out-of-band event recorded between samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Annotation {
    Gesture(Gesture),
    Shot(ShotOutcome),
}

impl Annotation {
    /// Parses the text after the leading `#`, e.g. `gesture pose 3`.
    pub fn parse(body: &str) -> Result<Self, String> {
        let mut words = body.split_whitespace();
        match (words.next(), words.next(), words.next(), words.next()) {
            (Some("gesture"), Some("figure8_complete"), None, _) => Ok(Annotation::Gesture(Gesture::Figure8Complete)),
            (Some("gesture"), Some("pose"), Some(n), None) => n
                .parse::<u8>()
                .ok()
                .filter(|n| (1..=6).contains(n))
                .map(|n| Annotation::Gesture(Gesture::Pose(n)))
                .ok_or_else(|| format!("pose index `{n}` not in 1..=6")),
            (Some("shot"), Some(a), Some(w), None) => {
                let flag = |field: &str, key: &str| -> Result<bool, String> {
                    match field.strip_prefix(key).and_then(|v| v.strip_prefix('=')) {
                        Some("true") => Ok(true),
                        Some("false") => Ok(false),
                        _ => Err(format!("expected `{key}=true|false`, got `{field}`")),
                    }
                };
                let outcome = ShotOutcome {
                    accurate: flag(a, "accurate")?,
                    won_point: flag(w, "won_point")?,
                };
                if outcome.is_valid() {
                    Ok(Annotation::Shot(outcome))
                } else {
                    Err("won_point=true requires accurate=true".into())
                }
            }
            _ => Err(format!("unrecognised annotation `#{body}`")),
        }
    }

    /// Line form without trailing newline.
    pub fn to_line(&self) -> String {
        match self {
            Annotation::Gesture(Gesture::Figure8Complete) => "#gesture figure8_complete".into(),
            Annotation::Gesture(Gesture::Pose(n)) => format!("#gesture pose {n}"),
            Annotation::Shot(o) => format!("#shot accurate={} won_point={}", o.accurate, o.won_point),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub sample: ImuSample,
    /// Carried through but unused by the metric path.
    pub accel: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEntry {
    Sample(TraceSample),
    Annotation(Annotation),
}

/// CSV gyroscope trace with interleaved annotation lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceFile {
    pub has_accel: bool,
    pub entries: Vec<TraceEntry>,
}

impl TraceFile {
    pub fn samples(&self) -> impl Iterator<Item = &ImuSample> {
        self.entries.iter().filter_map(|e| match e {
            TraceEntry::Sample(s) => Some(&s.sample),
            TraceEntry::Annotation(_) => None,
        })
    }

    pub fn sample_count(&self) -> usize {
        self.samples().count()
    }

    pub fn push_sample(&mut self, sample: ImuSample) {
        self.entries
            .push(TraceEntry::Sample(TraceSample { sample, accel: None }));
    }

    pub fn push_annotation(&mut self, annotation: Annotation) {
        self.entries.push(TraceEntry::Annotation(annotation));
    }

    /// Span between first and last sample timestamps, ms.
    pub fn span_ms(&self) -> u64 {
        let mut it = self.samples().map(|s| s.t);
        match it.next() {
            Some(first) => it.last().unwrap_or(first) - first,
            None => 0,
        }
    }

    pub fn encode(&self) -> Result<String, TraceError> {
        let mut out = String::with_capacity(32 * (self.entries.len() + 1));
        out.push_str(HEADER);
        if self.has_accel {
            out.push_str(ACCEL_SUFFIX);
        }
        out.push('\n');
        for (index, entry) in self.entries.iter().enumerate() {
            match entry {
                TraceEntry::Sample(ts) => {
                    let s = &ts.sample;
                    let _ = write!(out, "{},{},{},{}", s.t, s.gyro_x, s.gyro_y, s.gyro_z);
                    match (self.has_accel, ts.accel) {
                        (true, Some([ax, ay, az])) => {
                            let _ = write!(out, ",{ax},{ay},{az}");
                        }
                        (false, None) => {}
                        _ => return Err(TraceError::InconsistentAccel { index }),
                    }
                }
                TraceEntry::Annotation(a) => out.push_str(&a.to_line()),
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn decode(text: &str) -> Result<Self, TraceError> {
        let malformed = |line: usize, reason: String| TraceError::MalformedTrace { line, reason };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        let (_, header) = lines.next().ok_or_else(|| malformed(1, "missing header".into()))?;
        let has_accel = if header == HEADER {
            false
        } else if header.strip_prefix(HEADER) == Some(ACCEL_SUFFIX) {
            true
        } else {
            return Err(malformed(1, format!("unexpected header `{header}`")));
        };
        let width = if has_accel { 7 } else { 4 };
        let mut validator = SampleValidator::new();
        let mut entries = Vec::new();
        for (no, line) in lines {
            if line.is_empty() {
                continue;
            }
            if let Some(body) = line.strip_prefix('#') {
                let a = Annotation::parse(body).map_err(|r| malformed(no, r))?;
                entries.push(TraceEntry::Annotation(a));
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != width {
                return Err(malformed(
                    no,
                    format!("expected {width} fields, found {}", fields.len()),
                ));
            }
            let t: u64 = fields[0]
                .trim()
                .parse()
                .map_err(|_| malformed(no, format!("bad timestamp `{}`", fields[0])))?;
            let mut values = [0.0f64; 6];
            for (slot, (field, name)) in values
                .iter_mut()
                .zip(fields[1..].iter().zip(["gyro_x", "gyro_y", "gyro_z", "ax", "ay", "az"]))
            {
                *slot = field
                    .trim()
                    .parse()
                    .map_err(|_| malformed(no, format!("non-numeric {name} `{field}`")))?;
            }
            let sample = validator
                .check(ImuSample::new(t, values[0], values[1], values[2]))
                .map_err(|e| malformed(no, e.to_string()))?;
            let accel = if has_accel {
                if values[3..].iter().any(|v| !v.is_finite()) {
                    return Err(malformed(no, "non-finite accelerometer value".into()));
                }
                Some([values[3], values[4], values[5]])
            } else {
                None
            };
            entries.push(TraceEntry::Sample(TraceSample { sample, accel }));
        }
        Ok(Self { has_accel, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decode_with_annotations() {
        let text = "t_ms,gyro_x,gyro_y,gyro_z\n0,0,0,0\n#gesture figure8_complete\n#gesture pose 4\n10,1.5,-2,3e2\n#shot accurate=true won_point=false\n";
        let trace = TraceFile::decode(text).unwrap();
        assert_eq!(trace.entries.len(), 5);
        assert_eq!(trace.sample_count(), 2);
        assert_eq!(
            trace.entries[2],
            TraceEntry::Annotation(Annotation::Gesture(Gesture::Pose(4)))
        );
        assert_eq!(trace.samples().nth(1).unwrap().gyro_z, 300.0);
        let again = TraceFile::decode(&trace.encode().unwrap()).unwrap();
        assert_eq!(again, trace);
    }

    #[test]
    fn empty_trace_is_header_only() {
        let t = TraceFile::default();
        assert_eq!(t.encode().unwrap(), "t_ms,gyro_x,gyro_y,gyro_z\n");
        assert_eq!(TraceFile::decode("t_ms,gyro_x,gyro_y,gyro_z\n").unwrap(), t);
    }

    #[test]
    fn non_numeric_field_names_line() {
        let text = "t_ms,gyro_x,gyro_y,gyro_z\n0,0,0,0\n10,abc,0,0\n";
        match TraceFile::decode(text) {
            Err(TraceError::MalformedTrace { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("gyro_x"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(TraceFile::decode("").is_err());
        assert!(TraceFile::decode("t,x,y,z\n").is_err());
        let regress = "t_ms,gyro_x,gyro_y,gyro_z\n5,0,0,0\n4,0,0,0\n";
        assert!(matches!(
            TraceFile::decode(regress),
            Err(TraceError::MalformedTrace { line: 3, .. })
        ));
        let nan = "t_ms,gyro_x,gyro_y,gyro_z\n5,NaN,0,0\n";
        assert!(matches!(
            TraceFile::decode(nan),
            Err(TraceError::MalformedTrace { line: 2, .. })
        ));
        let bad_note = "t_ms,gyro_x,gyro_y,gyro_z\n#gesture pose 9\n";
        assert!(TraceFile::decode(bad_note).is_err());
        let bad_shot = "t_ms,gyro_x,gyro_y,gyro_z\n#shot accurate=false won_point=true\n";
        assert!(TraceFile::decode(bad_shot).is_err());
        let short = "t_ms,gyro_x,gyro_y,gyro_z,ax,ay,az\n0,1,2,3\n";
        assert!(TraceFile::decode(short).is_err());
    }

    #[test]
    fn accel_columns_round_trip() {
        let text = "t_ms,gyro_x,gyro_y,gyro_z,ax,ay,az\n0,1,2,3,0.1,-9.81,0\n";
        let trace = TraceFile::decode(text).unwrap();
        assert!(trace.has_accel);
        assert_eq!(trace.encode().unwrap(), text);
        let mut broken = trace.clone();
        broken.push_sample(ImuSample::new(1, 0.0, 0.0, 0.0));
        assert_eq!(broken.encode(), Err(TraceError::InconsistentAccel { index: 1 }));
    }

    pub(crate) fn any_trace() -> impl Strategy<Value = TraceFile> {
        let annotation = prop_oneof![
            Just(Annotation::Gesture(Gesture::Figure8Complete)),
            (1u8..=6).prop_map(|n| Annotation::Gesture(Gesture::Pose(n))),
            (any::<bool>(), any::<bool>()).prop_map(|(a, w)| Annotation::Shot(ShotOutcome {
                accurate: a || w,
                won_point: w
            })),
        ];
        let value = prop_oneof![
            any::<f64>().prop_filter("finite", |v| v.is_finite()),
            -2000.0..2000.0f64
        ];
        let step = prop_oneof![
            3 => (0u64..50, value.clone(), value.clone(), value.clone(), proptest::array::uniform3(value.clone()))
                .prop_map(|(dt, x, y, z, a)| (Some((dt, x, y, z, a)), None)),
            1 => annotation.prop_map(|a| (None, Some(a))),
        ];
        (any::<bool>(), proptest::collection::vec(step, 0..80)).prop_map(|(has_accel, steps)| {
            let mut t = 0;
            let mut trace = TraceFile {
                has_accel,
                entries: Vec::new(),
            };
            for step in steps {
                match step {
                    (Some((dt, x, y, z, a)), _) => {
                        t += dt;
                        trace.entries.push(TraceEntry::Sample(TraceSample {
                            sample: ImuSample::new(t, x, y, z),
                            accel: has_accel.then_some(a),
                        }));
                    }
                    (None, Some(a)) => trace.push_annotation(a),
                    _ => unreachable!(),
                }
            }
            trace
        })
    }

    proptest! {
        #[test]
        fn encode_decode_inverse(trace in any_trace()) {
            let text = trace.encode().unwrap();
            prop_assert_eq!(TraceFile::decode(&text).unwrap(), trace);
        }
    }
}

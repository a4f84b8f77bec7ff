use std::thread;
use std::time::{Duration, Instant};

use super::codec::{Annotation, TraceEntry, TraceFile};
use crate::model::ImuSample;

/// Replay speed relative to the trace's own clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pace {
    /// As fast as possible.
    Unpaced,
    /// Inter-sample delays scaled by `1 / multiplier`.
    Multiplier(f64),
}

impl Pace {
    /// `inf` maps to [`Pace::Unpaced`]; non-positive or NaN is rejected.
    pub fn from_multiplier(multiplier: f64) -> Option<Self> {
        if multiplier.is_infinite() && multiplier > 0.0 {
            Some(Pace::Unpaced)
        } else if multiplier.is_finite() && multiplier > 0.0 {
            Some(Pace::Multiplier(multiplier))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplayItem {
    Sample(ImuSample),
    /// Annotation stamped with the time of the preceding sample (0 before any).
    Annotation {
        t: u64,
        annotation: Annotation,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplaySummary {
    pub samples: usize,
    pub annotations: usize,
    pub elapsed: Duration,
}

/// Feeds `trace` to `sink` in file order, sleeping between samples per `pace`.
/// A sink error stops the replay and is returned.
pub fn replay<E, F>(trace: &TraceFile, pace: Pace, mut sink: F) -> Result<ReplaySummary, E>
where
    F: FnMut(ReplayItem) -> Result<(), E>,
{
    let started = Instant::now();
    let origin = trace.samples().next().map_or(0, |s| s.t);
    let mut last_t = 0;
    let mut summary = ReplaySummary {
        samples: 0,
        annotations: 0,
        elapsed: Duration::ZERO,
    };
    for entry in &trace.entries {
        match entry {
            TraceEntry::Sample(ts) => {
                if let Pace::Multiplier(m) = pace {
                    let due = started + Duration::from_secs_f64((ts.sample.t - origin) as f64 / 1000.0 / m);
                    let now = Instant::now();
                    if due > now {
                        thread::sleep(due - now);
                    }
                }
                last_t = ts.sample.t;
                sink(ReplayItem::Sample(ts.sample))?;
                summary.samples += 1;
            }
            TraceEntry::Annotation(annotation) => {
                sink(ReplayItem::Annotation {
                    t: last_t,
                    annotation: *annotation,
                })?;
                summary.annotations += 1;
            }
        }
    }
    summary.elapsed = started.elapsed();
    Ok(summary)
}

//! Calibration gate plus swing detector over one sample stream.
//!
//! Both offline analysis and the telemetry server drive this type, so the
//! swings they produce for the same input are identical.

use crate::calibration::{gate, CalibrationConfig, CalibrationProcedure};
use crate::engine::{DetectorConfig, SwingDetector};
use crate::model::{CalibrationState, ImuSample, PhysicalConfig, SampleError, SampleValidator, SwingEvent};
use crate::session::{Condition, SessionRecord, ShotOutcome, SwingRecord};
use crate::trace::{Annotation, ReplayItem, TraceEntry, TraceFile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PipelineEvent {
    /// Calibration levels changed while still gated.
    Calibration(CalibrationState),
    /// The gate opened; swings may follow.
    Live,
    Swing(SwingEvent),
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    validator: SampleValidator,
    calibration: CalibrationProcedure,
    gated: bool,
    live: bool,
    detector: SwingDetector,
    swings: Vec<SwingRecord>,
    pending_shot: Option<ShotOutcome>,
}

impl Pipeline {
    /// Swings are only detected once calibration is complete.
    pub fn gated(det: DetectorConfig, cfg: PhysicalConfig, calibration: CalibrationConfig) -> Self {
        Self {
            validator: SampleValidator::new(),
            calibration: CalibrationProcedure::new(calibration),
            gated: true,
            live: false,
            detector: SwingDetector::new(det, cfg),
            swings: Vec::new(),
            pending_shot: None,
        }
    }

    /// Detection from the first sample.
    pub fn ungated(det: DetectorConfig, cfg: PhysicalConfig) -> Self {
        Self {
            gated: false,
            live: true,
            ..Self::gated(det, cfg, CalibrationConfig::default())
        }
    }

    pub fn is_live(&self) -> bool {
        self.live
    }

    pub fn calibration(&self) -> CalibrationState {
        self.calibration.state()
    }

    pub fn swings(&self) -> &[SwingRecord] {
        &self.swings
    }

    pub fn push_sample(&mut self, raw: ImuSample) -> Result<Vec<PipelineEvent>, SampleError> {
        let sample = self.validator.check(raw)?;
        let mut events = Vec::new();
        if !self.live {
            let before = self.calibration.state();
            self.calibration.feed(&sample);
            self.after_calibration_step(before, &mut events);
            return Ok(events);
        }
        let was_in_swing = self.detector.in_swing();
        match self.detector.push(&sample) {
            Some(swing) => self.record(swing, &mut events),
            None if was_in_swing && !self.detector.in_swing() => {
                // window discarded as too short
                self.pending_shot = None;
            }
            None => {}
        }
        Ok(events)
    }

    pub fn push_annotation(&mut self, annotation: &Annotation) -> Vec<PipelineEvent> {
        let mut events = Vec::new();
        match annotation {
            Annotation::Gesture(g) => {
                if !self.live {
                    let before = self.calibration.state();
                    self.calibration.apply_gesture(*g);
                    self.after_calibration_step(before, &mut events);
                }
            }
            Annotation::Shot(outcome) => self.attach_shot(*outcome),
        }
        events
    }

    /// Device-reported calibration levels.
    pub fn report_calibration(&mut self, reported: CalibrationState) -> Vec<PipelineEvent> {
        let mut events = Vec::new();
        if !self.live {
            let before = self.calibration.state();
            self.calibration.merge_reported(reported);
            self.after_calibration_step(before, &mut events);
        }
        events
    }

    pub fn push_item(&mut self, item: &ReplayItem) -> Result<Vec<PipelineEvent>, SampleError> {
        match item {
            ReplayItem::Sample(s) => self.push_sample(*s),
            ReplayItem::Annotation { annotation, .. } => Ok(self.push_annotation(annotation)),
        }
    }

    /// Ends the stream, closing any open swing window.
    pub fn finish(&mut self) -> Vec<PipelineEvent> {
        let mut events = Vec::new();
        if self.live {
            if let Some(swing) = self.detector.finish() {
                self.record(swing, &mut events);
            }
        }
        self.pending_shot = None;
        events
    }

    pub fn into_session(self, participant_id: impl Into<String>, condition: Condition) -> SessionRecord {
        SessionRecord {
            swings: self.swings,
            ..SessionRecord::new(participant_id, condition)
        }
    }

    fn after_calibration_step(&mut self, before: CalibrationState, events: &mut Vec<PipelineEvent>) {
        let now = self.calibration.state();
        if now != before {
            events.push(PipelineEvent::Calibration(now));
        }
        if self.gated && gate(&self.calibration) {
            self.live = true;
            events.push(PipelineEvent::Live);
        }
    }

    fn record(&mut self, swing: SwingEvent, events: &mut Vec<PipelineEvent>) {
        self.swings.push(SwingRecord {
            swing,
            outcome: self.pending_shot.take(),
        });
        events.push(PipelineEvent::Swing(swing));
    }

    /// A shot belongs to the swing in progress, else to the latest swing.
    fn attach_shot(&mut self, outcome: ShotOutcome) {
        if self.detector.in_swing() {
            self.pending_shot = Some(outcome);
        } else if let Some(last) = self.swings.last_mut() {
            last.outcome = Some(outcome);
        }
    }
}

/// Runs a whole trace through a pipeline and returns every detected swing.
pub fn analyze_trace(trace: &TraceFile, pipeline: &mut Pipeline) -> Result<Vec<SwingEvent>, SampleError> {
    let mut swings = Vec::new();
    let mut take = |events: Vec<PipelineEvent>| {
        swings.extend(events.into_iter().filter_map(|e| match e {
            PipelineEvent::Swing(s) => Some(s),
            _ => None,
        }))
    };
    for entry in &trace.entries {
        match entry {
            TraceEntry::Sample(ts) => take(pipeline.push_sample(ts.sample)?),
            TraceEntry::Annotation(a) => take(pipeline.push_annotation(a)),
        }
    }
    take(pipeline.finish());
    Ok(swings)
}

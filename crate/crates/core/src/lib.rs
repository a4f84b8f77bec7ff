//! Swing analytics from streamed gyroscope samples.
//!
//! Samples flow through a calibration gate and a hysteresis swing detector
//! that reports per-swing racket speed (mph) and normalised power (%).
//! Sessions of annotated swings are summarised per participant and compared
//! across baseline and visualisation conditions with paired t-tests.

pub mod calibration;
pub mod engine;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod session;
pub mod stats;
pub mod telemetry;
pub mod trace;

pub use calibration::{gate, CalibrationConfig, CalibrationProcedure, Gesture};
pub use engine::{
    angular_speed_dps, detect_swings, normalize_power, raw_power_joules, swing_speed_mph, DetectorConfig,
    NormalizerState, SwingDetector,
};
pub use model::{
    validate_sample, CalibrationState, ImuSample, PhysicalConfig, SampleError, SampleValidator, SwingEvent,
};
pub use pipeline::{analyze_trace, Pipeline, PipelineEvent};
pub use session::{
    compare, speed_bracket, summarize, Condition, MetricDeltas, ParticipantMetrics, SessionRecord, SessionSummary,
    ShotOutcome, SpeedBracket, SwingRecord,
};
pub use stats::{paired_t, student_t_sf, PairedTestResult};
pub use trace::{Annotation, TraceFile};

//! Trace and session file formats, the synthetic swing generator and the
//! paced replayer.

mod codec;
mod document;
mod generate;
mod replay;

pub use codec::{Annotation, TraceEntry, TraceError, TraceFile, TraceSample, ACCEL_SUFFIX, HEADER};
pub use document::{
    load_metrics, load_participants, load_session, load_session_file, save_metrics, save_session, save_session_file,
    validate_session, DocumentError, METRICS_SUFFIX, SESSION_FILE, SESSION_SUFFIX,
};
pub use generate::{generate_trace, three_pulse_oracle, GeneratorParams, PulseSpec};
pub use replay::{replay, Pace, ReplayItem, ReplaySummary};

//! JSON session and participant-metrics documents.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::session::{summarize, AnalyticsError, Condition, ParticipantMetrics, SessionRecord};

pub const SESSION_SUFFIX: &str = ".session.json";
pub const METRICS_SUFFIX: &str = ".metrics.json";
/// Session document name inside a server session directory.
pub const SESSION_FILE: &str = "session.txt";

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("schema violation at `{path}`: {detail}")]
    SchemaViolation { path: String, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<DocumentError>,
    },
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

impl DocumentError {
    fn schema(path: impl Into<String>, detail: impl Into<String>) -> Self {
        DocumentError::SchemaViolation {
            path: path.into(),
            detail: detail.into(),
        }
    }

    fn in_file(self, path: &Path) -> Self {
        DocumentError::InFile {
            path: path.to_path_buf(),
            source: Box::new(self),
        }
    }
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T, DocumentError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        DocumentError::schema(path, e.into_inner().to_string())
    })
}

pub fn save_session(record: &SessionRecord) -> String {
    let mut text = serde_json::to_string_pretty(record).expect("session record serialises");
    text.push('\n');
    text
}

pub fn load_session(text: &str) -> Result<SessionRecord, DocumentError> {
    let record: SessionRecord = parse(text)?;
    validate_session(&record)?;
    Ok(record)
}

pub fn validate_session(record: &SessionRecord) -> Result<(), DocumentError> {
    for (i, r) in record.swings.iter().enumerate() {
        if !r.swing.is_valid() {
            return Err(DocumentError::schema(
                format!("swings[{i}].swing"),
                "start_ms < end_ms, speed >= 0 and power in [0, 100] required",
            ));
        }
        if r.outcome.is_some_and(|o| !o.is_valid()) {
            return Err(DocumentError::schema(
                format!("swings[{i}].outcome.won_point"),
                "won_point requires accurate",
            ));
        }
    }
    Ok(())
}

pub fn save_metrics(metrics: &ParticipantMetrics) -> String {
    let mut text = serde_json::to_string_pretty(metrics).expect("metrics serialise");
    text.push('\n');
    text
}

pub fn load_metrics(text: &str) -> Result<ParticipantMetrics, DocumentError> {
    let m: ParticipantMetrics = parse(text)?;
    let check = |name: &str, v: f64| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(DocumentError::schema(name.to_string(), "must be finite"))
        }
    };
    check("points_won", m.points_won)?;
    check("shots_power_above_75", m.shots_power_above_75)?;
    if let Some(v) = m.accurate_pct {
        check("accurate_pct", v)?;
    }
    Ok(m)
}

fn read(path: &Path) -> Result<String, DocumentError> {
    fs::read_to_string(path).map_err(|source| DocumentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_session_file(path: &Path) -> Result<SessionRecord, DocumentError> {
    load_session(&read(path)?).map_err(|e| e.in_file(path))
}

pub fn save_session_file(path: &Path, record: &SessionRecord) -> Result<(), DocumentError> {
    fs::write(path, save_session(record)).map_err(|source| DocumentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads every participant in `dir`, sorted by file name.
///
/// Accepts `*.metrics.json` documents as-is, `*.session.json` documents
/// (summarised on load) and sub-directories holding a server `session.txt`.
/// `condition`, when given, overrides the condition recorded in the files.
pub fn load_participants(dir: &Path, condition: Option<Condition>) -> Result<Vec<ParticipantMetrics>, DocumentError> {
    let io = |source| DocumentError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let mut metrics = if name.ends_with(METRICS_SUFFIX) {
            load_metrics(&read(&path)?).map_err(|e| e.in_file(&path))?
        } else if name.ends_with(SESSION_SUFFIX) {
            session_metrics(&path)?
        } else if path.join(SESSION_FILE).is_file() {
            session_metrics(&path.join(SESSION_FILE))?
        } else {
            continue;
        };
        if let Some(c) = condition {
            metrics.condition = c;
        }
        out.push(metrics);
    }
    Ok(out)
}

fn session_metrics(path: &Path) -> Result<ParticipantMetrics, DocumentError> {
    let record = load_session_file(path)?;
    let summary = summarize(&record).map_err(|e| DocumentError::from(e).in_file(path))?;
    Ok(ParticipantMetrics::from_summary(
        record.participant_id.clone(),
        record.condition,
        &summary,
    ))
}

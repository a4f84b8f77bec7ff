//! Line-delimited JSON messages exchanged with devices and viewers.

use serde::{Deserialize, Serialize};

use crate::model::{CalibrationState, ImuSample, SwingEvent};
use crate::session::Condition;
use crate::trace::Annotation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Device,
    Viewer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionPhase {
    Calibrating,
    Live,
    Ended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorCode {
    BadHandshake,
    SecondDevice,
    SessionEnded,
    UnknownKind,
    BadMessage,
    UnknownSession,
    InvalidSample,
    NotPermitted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WireMessage {
    Hello {
        session_id: String,
        role: Role,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        participant_id: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        condition: Option<Condition>,
    },
    Sample {
        session_id: String,
        #[serde(flatten)]
        sample: ImuSample,
    },
    Annotation {
        session_id: String,
        t: u64,
        annotation: Annotation,
    },
    Calibration {
        session_id: String,
        #[serde(flatten)]
        levels: CalibrationState,
    },
    Swing {
        session_id: String,
        #[serde(flatten)]
        swing: SwingEvent,
    },
    SessionState {
        session_id: String,
        state: SessionPhase,
        /// Messages dropped from this connection's outbound queue so far.
        dropped: u64,
    },
    /// Request (without `swing`) and reply for the latest broadcast swing.
    Latest {
        session_id: String,
        #[serde(default)]
        swing: Option<SwingEvent>,
    },
    Error {
        session_id: String,
        code: ErrorCode,
        detail: String,
    },
}

const KINDS: [&str; 8] = [
    "hello",
    "sample",
    "annotation",
    "calibration",
    "swing",
    "session_state",
    "latest",
    "error",
];

impl WireMessage {
    pub fn session_id(&self) -> &str {
        match self {
            WireMessage::Hello { session_id, .. }
            | WireMessage::Sample { session_id, .. }
            | WireMessage::Annotation { session_id, .. }
            | WireMessage::Calibration { session_id, .. }
            | WireMessage::Swing { session_id, .. }
            | WireMessage::SessionState { session_id, .. }
            | WireMessage::Latest { session_id, .. }
            | WireMessage::Error { session_id, .. } => session_id,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            WireMessage::Hello { .. } => KINDS[0],
            WireMessage::Sample { .. } => KINDS[1],
            WireMessage::Annotation { .. } => KINDS[2],
            WireMessage::Calibration { .. } => KINDS[3],
            WireMessage::Swing { .. } => KINDS[4],
            WireMessage::SessionState { .. } => KINDS[5],
            WireMessage::Latest { .. } => KINDS[6],
            WireMessage::Error { .. } => KINDS[7],
        }
    }

    pub fn error(session_id: impl Into<String>, code: ErrorCode, detail: impl Into<String>) -> Self {
        WireMessage::Error {
            session_id: session_id.into(),
            code,
            detail: detail.into(),
        }
    }

    /// One line, no trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("wire messages serialise")
    }

    /// Parses one line. Failures come back as the `error` reply to send.
    pub fn parse(line: &str) -> Result<Self, WireMessage> {
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| WireMessage::error("", ErrorCode::BadMessage, e.to_string()))?;
        let session_id = value
            .get("session_id")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string();
        let Some(kind) = value.get("kind").and_then(|k| k.as_str()) else {
            return Err(WireMessage::error(session_id, ErrorCode::BadMessage, "missing `kind`"));
        };
        if !KINDS.contains(&kind) {
            return Err(WireMessage::error(
                session_id,
                ErrorCode::UnknownKind,
                format!("unknown kind `{kind}`"),
            ));
        }
        // re-parse from text so floats keep exact round-trip
        serde_json::from_str(line).map_err(|e| WireMessage::error(session_id, ErrorCode::BadMessage, e.to_string()))
    }
}

/// Session ids double as directory names.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::Gesture;

    #[test]
    fn example_lines() {
        let hello = WireMessage::parse(r#"{"kind":"hello","session_id":"s1","role":"viewer"}"#).unwrap();
        assert_eq!(
            hello,
            WireMessage::Hello {
                session_id: "s1".into(),
                role: Role::Viewer,
                participant_id: None,
                condition: None
            }
        );
        let sample =
            WireMessage::parse(r#"{"kind":"sample","session_id":"s1","t":10,"gyro_x":1.5,"gyro_y":0,"gyro_z":-3}"#)
                .unwrap();
        assert_eq!(
            sample,
            WireMessage::Sample {
                session_id: "s1".into(),
                sample: ImuSample::new(10, 1.5, 0.0, -3.0)
            }
        );
        let a = WireMessage::Annotation {
            session_id: "s1".into(),
            t: 0,
            annotation: Annotation::Gesture(Gesture::Pose(2)),
        };
        assert_eq!(
            a.to_line(),
            r#"{"kind":"annotation","session_id":"s1","t":0,"annotation":{"gesture":{"pose":2}}}"#
        );
        assert_eq!(WireMessage::parse(&a.to_line()).unwrap(), a);
        let latest = WireMessage::parse(r#"{"kind":"latest","session_id":"s1"}"#).unwrap();
        assert_eq!(
            latest,
            WireMessage::Latest {
                session_id: "s1".into(),
                swing: None
            }
        );
        assert!(latest.to_line().contains(r#""kind":"latest""#));
        assert_eq!(latest.kind(), "latest");
    }

    #[test]
    fn swing_round_trips_exactly() {
        let m = WireMessage::Swing {
            session_id: "x".into(),
            swing: SwingEvent {
                start_ms: 2530,
                end_ms: 2790,
                peak_speed_mph: 0.1 + 0.2,
                peak_power_pct: 100.0 / 3.0,
                peak_omega_dps: 399.99999999999994,
            },
        };
        assert_eq!(WireMessage::parse(&m.to_line()).unwrap(), m);
    }

    #[test]
    fn rejections() {
        let e = WireMessage::parse(r#"{"kind":"teleport","session_id":"s"}"#).unwrap_err();
        assert!(
            matches!(e, WireMessage::Error { code: ErrorCode::UnknownKind, ref session_id, .. } if session_id == "s")
        );
        let e = WireMessage::parse("not json").unwrap_err();
        assert!(matches!(
            e,
            WireMessage::Error {
                code: ErrorCode::BadMessage,
                ..
            }
        ));
        let e = WireMessage::parse(r#"{"session_id":"s"}"#).unwrap_err();
        assert!(matches!(
            e,
            WireMessage::Error {
                code: ErrorCode::BadMessage,
                ..
            }
        ));
        let e = WireMessage::parse(r#"{"kind":"sample","session_id":"s","t":"x"}"#).unwrap_err();
        assert!(matches!(
            e,
            WireMessage::Error {
                code: ErrorCode::BadMessage,
                ..
            }
        ));
    }

    #[test]
    fn session_ids() {
        assert!(valid_session_id("court-1_a.b"));
        assert!(!valid_session_id(""));
        assert!(!valid_session_id("../etc"));
        assert!(!valid_session_id("a/b"));
    }
}

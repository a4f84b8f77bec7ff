//! Per-participant session aggregation and baseline-vs-visualisation deltas.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SwingEvent;

pub const DEFAULT_SESSION_MS: u64 = 5 * 60 * 1000;
pub const POWER_THRESHOLD_PCT: f64 = 75.0;

/// Human-observed result of the shot played with a swing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotOutcome {
    pub accurate: bool,
    pub won_point: bool,
}

impl ShotOutcome {
    /// A won point implies the shot was accurate.
    pub fn is_valid(&self) -> bool {
        self.accurate || !self.won_point
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Baseline,
    Visualisation,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Condition::Baseline => "baseline",
            Condition::Visualisation => "visualisation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwingRecord {
    pub swing: SwingEvent,
    pub outcome: Option<ShotOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub participant_id: String,
    pub condition: Condition,
    pub duration_ms: u64,
    pub swings: Vec<SwingRecord>,
}

impl SessionRecord {
    pub fn new(participant_id: impl Into<String>, condition: Condition) -> Self {
        Self {
            participant_id: participant_id.into(),
            condition,
            duration_ms: DEFAULT_SESSION_MS,
            swings: Vec::new(),
        }
    }

    /// Annotated swings, i.e. shots.
    pub fn shots(&self) -> impl Iterator<Item = (&SwingEvent, &ShotOutcome)> {
        self.swings
            .iter()
            .filter_map(|r| r.outcome.as_ref().map(|o| (&r.swing, o)))
    }
}

/// Swing-speed band. Both 25 and 40 mph fall in the middle band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedBracket {
    Above40,
    Mid,
    Below25,
}

impl SpeedBracket {
    /// Table order: >40, 25-40, <25.
    pub const ALL: [SpeedBracket; 3] = [SpeedBracket::Above40, SpeedBracket::Mid, SpeedBracket::Below25];

    pub fn index(self) -> usize {
        match self {
            SpeedBracket::Above40 => 0,
            SpeedBracket::Mid => 1,
            SpeedBracket::Below25 => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SpeedBracket::Above40 => "Greater than 40 mph",
            SpeedBracket::Mid => "Between 25 mph and 40 mph",
            SpeedBracket::Below25 => "Less than 25 mph",
        }
    }
}

pub fn speed_bracket(speed_mph: f64) -> SpeedBracket {
    if speed_mph < 25.0 {
        SpeedBracket::Below25
    } else if speed_mph <= 40.0 {
        SpeedBracket::Mid
    } else {
        SpeedBracket::Above40
    }
}

/// Bracket shares in table order (>40, 25-40, <25), percent.
pub type BracketPct = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub total_shots: u32,
    pub accurate_shots: u32,
    pub accurate_pct: Option<f64>,
    pub points_won: u32,
    pub bracket_total_pct: Option<BracketPct>,
    /// Distribution of accurate shots over brackets; absent without accurate shots.
    pub bracket_accurate_pct: Option<BracketPct>,
    pub shots_power_above_75: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyticsError {
    #[error("session `{0}` has no annotated shots")]
    EmptySession(String),
    #[error("swing {index} of session `{participant}` has won_point without accurate")]
    InvalidOutcome { participant: String, index: usize },
}

fn pct(part: u32, whole: u32) -> f64 {
    part as f64 / whole as f64 * 100.0
}

fn shares(counts: [u32; 3]) -> Option<BracketPct> {
    let total: u32 = counts.iter().sum();
    (total > 0).then(|| counts.map(|c| pct(c, total)))
}

pub fn summarize(session: &SessionRecord) -> Result<SessionSummary, AnalyticsError> {
    if let Some(index) = session
        .swings
        .iter()
        .position(|r| r.outcome.is_some_and(|o| !o.is_valid()))
    {
        return Err(AnalyticsError::InvalidOutcome {
            participant: session.participant_id.clone(),
            index,
        });
    }
    let mut total = [0u32; 3];
    let mut accurate = [0u32; 3];
    let mut points_won = 0;
    let mut above_75 = 0;
    for (swing, outcome) in session.shots() {
        let b = speed_bracket(swing.peak_speed_mph).index();
        total[b] += 1;
        if outcome.accurate {
            accurate[b] += 1;
        }
        if outcome.won_point {
            points_won += 1;
        }
        if swing.peak_power_pct > POWER_THRESHOLD_PCT {
            above_75 += 1;
        }
    }
    let total_shots: u32 = total.iter().sum();
    if total_shots == 0 {
        return Err(AnalyticsError::EmptySession(session.participant_id.clone()));
    }
    let accurate_shots: u32 = accurate.iter().sum();
    Ok(SessionSummary {
        total_shots,
        accurate_shots,
        accurate_pct: Some(pct(accurate_shots, total_shots)),
        points_won,
        bracket_total_pct: shares(total),
        bracket_accurate_pct: shares(accurate),
        shots_power_above_75: above_75,
    })
}

/// The per-participant values compared across conditions.
///
/// Either derived from a [`SessionSummary`] or loaded directly from a
/// metrics document when only aggregate values are available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipantMetrics {
    pub participant_id: String,
    pub condition: Condition,
    pub accurate_pct: Option<f64>,
    pub points_won: f64,
    pub bracket_total_pct: Option<BracketPct>,
    pub bracket_accurate_pct: Option<BracketPct>,
    pub shots_power_above_75: f64,
}

impl ParticipantMetrics {
    pub fn from_summary(participant_id: impl Into<String>, condition: Condition, s: &SessionSummary) -> Self {
        Self {
            participant_id: participant_id.into(),
            condition,
            accurate_pct: s.accurate_pct,
            points_won: s.points_won as f64,
            bracket_total_pct: s.bracket_total_pct,
            bracket_accurate_pct: s.bracket_accurate_pct,
            shots_power_above_75: s.shots_power_above_75 as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Improved,
    Worse,
    Unchanged,
}

/// Visualisation minus baseline for one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub baseline: f64,
    pub visualisation: f64,
    pub change: f64,
    pub trend: Trend,
}

impl Delta {
    pub fn new(baseline: f64, visualisation: f64) -> Self {
        let change = visualisation - baseline;
        let trend = if change > 0.0 {
            Trend::Improved
        } else if change < 0.0 {
            Trend::Worse
        } else {
            Trend::Unchanged
        };
        Self {
            baseline,
            visualisation,
            change,
            trend,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDeltas {
    pub participant_id: String,
    pub accurate_pct: Option<Delta>,
    pub points_won: Delta,
    pub bracket_total_pct: Option<[Delta; 3]>,
    pub bracket_accurate_pct: Option<[Delta; 3]>,
    pub shots_power_above_75: Delta,
}

fn bracket_deltas(b: Option<BracketPct>, v: Option<BracketPct>) -> Option<[Delta; 3]> {
    let (b, v) = (b?, v?);
    Some([0, 1, 2].map(|i| Delta::new(b[i], v[i])))
}

pub fn compare(baseline: &ParticipantMetrics, vis: &ParticipantMetrics) -> MetricDeltas {
    MetricDeltas {
        participant_id: baseline.participant_id.clone(),
        accurate_pct: baseline
            .accurate_pct
            .zip(vis.accurate_pct)
            .map(|(b, v)| Delta::new(b, v)),
        points_won: Delta::new(baseline.points_won, vis.points_won),
        bracket_total_pct: bracket_deltas(baseline.bracket_total_pct, vis.bracket_total_pct),
        bracket_accurate_pct: bracket_deltas(baseline.bracket_accurate_pct, vis.bracket_accurate_pct),
        shots_power_above_75: Delta::new(baseline.shots_power_above_75, vis.shots_power_above_75),
    }
}

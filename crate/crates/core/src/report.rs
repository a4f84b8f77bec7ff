//! Baseline-vs-visualisation comparison across participants: per-participant
//! deltas plus paired t-tests, rendered as text tables or serialised.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::{compare, BracketPct, MetricDeltas, ParticipantMetrics, SpeedBracket};
use crate::stats::{paired_t, PairedTestResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("participants not present on both sides: baseline only {baseline_only:?}, visualisation only {visualisation_only:?}")]
    ParticipantMismatch {
        baseline_only: Vec<String>,
        visualisation_only: Vec<String>,
    },
    #[error("participant `{0}` appears more than once on one side")]
    DuplicateParticipant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricGroup {
    PointsWon,
    AccuratePct,
    BracketTotalPct,
    BracketAccuratePct,
    ShotsPowerAbove75,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTest {
    pub group: MetricGroup,
    pub metric: String,
    /// `None` when fewer than two participants carry the metric.
    pub result: Option<PairedTestResult>,
}

impl MetricTest {
    pub fn zero_variance(&self) -> bool {
        self.result.as_ref().is_some_and(PairedTestResult::zero_variance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline: Vec<ParticipantMetrics>,
    pub visualisation: Vec<ParticipantMetrics>,
    pub deltas: Vec<MetricDeltas>,
    pub tests: Vec<MetricTest>,
}

impl ComparisonReport {
    pub fn test(&self, group: MetricGroup, metric: &str) -> Option<&MetricTest> {
        self.tests.iter().find(|t| t.group == group && t.metric == metric)
    }
}

/// Pairs participants by id (in baseline order) and runs every comparison.
pub fn build_report(
    baseline: &[ParticipantMetrics],
    visualisation: &[ParticipantMetrics],
) -> Result<ComparisonReport, ReportError> {
    let ids = |side: &[ParticipantMetrics]| -> Result<BTreeSet<String>, ReportError> {
        let mut set = BTreeSet::new();
        for m in side {
            if !set.insert(m.participant_id.clone()) {
                return Err(ReportError::DuplicateParticipant(m.participant_id.clone()));
            }
        }
        Ok(set)
    };
    let (b_ids, v_ids) = (ids(baseline)?, ids(visualisation)?);
    if b_ids != v_ids {
        return Err(ReportError::ParticipantMismatch {
            baseline_only: b_ids.difference(&v_ids).cloned().collect(),
            visualisation_only: v_ids.difference(&b_ids).cloned().collect(),
        });
    }
    let vis: Vec<ParticipantMetrics> = baseline
        .iter()
        .map(|b| {
            visualisation
                .iter()
                .find(|v| v.participant_id == b.participant_id)
                .cloned()
                .expect("id sets are equal")
        })
        .collect();
    let deltas = baseline.iter().zip(&vis).map(|(b, v)| compare(b, v)).collect();

    let mut tests = Vec::new();
    let mut run = |group, metric: &str, get: &dyn Fn(&ParticipantMetrics) -> Option<f64>| {
        let (bs, vs): (Vec<f64>, Vec<f64>) = baseline
            .iter()
            .zip(&vis)
            .filter_map(|(b, v)| Some((get(b)?, get(v)?)))
            .unzip();
        tests.push(MetricTest {
            group,
            metric: metric.to_string(),
            result: paired_t(&bs, &vs).ok(),
        });
    };
    run(MetricGroup::PointsWon, "No. of points won", &|m| Some(m.points_won));
    run(MetricGroup::AccuratePct, "Accurate shots (%)", &|m| m.accurate_pct);
    for b in SpeedBracket::ALL {
        run(MetricGroup::BracketTotalPct, b.label(), &|m| {
            m.bracket_total_pct.map(|p| p[b.index()])
        });
    }
    for b in SpeedBracket::ALL {
        run(MetricGroup::BracketAccuratePct, b.label(), &|m| {
            m.bracket_accurate_pct.map(|p| p[b.index()])
        });
    }
    run(MetricGroup::ShotsPowerAbove75, "Shots at power > 75%", &|m| {
        Some(m.shots_power_above_75)
    });

    Ok(ComparisonReport {
        baseline: baseline.to_vec(),
        visualisation: vis,
        deltas,
        tests,
    })
}

fn opt(v: Option<f64>, fmt: impl Fn(f64) -> String) -> String {
    v.map(fmt).unwrap_or_else(|| "-".into())
}

fn signed(v: f64) -> String {
    if v > 0.0 {
        format!("+{}", trim(v))
    } else {
        trim(v)
    }
}

/// Shortest of `{:.1}` / integer form.
fn trim(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

fn write_row(out: &mut String, cells: &[String]) {
    let _ = write!(out, "{:<26}", cells[0]);
    for c in &cells[1..] {
        let _ = write!(out, " | {c:>26}");
    }
    out.push('\n');
}

fn write_title(out: &mut String, title: &str, header: &[&str]) {
    let _ = writeln!(out, "\n== {title} ==");
    let cells: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    write_row(out, &cells);
    let _ = writeln!(out, "{}", "-".repeat(26 + header.len().saturating_sub(1) * 29));
}

fn bracket_table(
    out: &mut String,
    title: &str,
    rows: &[ParticipantMetrics],
    get: fn(&ParticipantMetrics) -> Option<BracketPct>,
) {
    let header = ["Participant"]
        .into_iter()
        .chain(SpeedBracket::ALL.iter().map(|b| b.label()))
        .collect::<Vec<_>>();
    write_title(out, title, &header);
    let mut sums = [0.0; 3];
    let mut n = 0;
    for m in rows {
        let mut cells = vec![m.participant_id.clone()];
        match get(m) {
            Some(p) => {
                cells.extend(p.iter().map(|v| format!("{v:.1}%")));
                for (s, v) in sums.iter_mut().zip(p) {
                    *s += v;
                }
                n += 1;
            }
            None => cells.extend(std::iter::repeat_n("-".to_string(), 3)),
        }
        write_row(out, &cells);
    }
    if n > 0 {
        let mut cells = vec!["Mean".to_string()];
        cells.extend(sums.iter().map(|s| format!("{:.1}%", s / n as f64)));
        write_row(out, &cells);
    }
}

fn stats_table(out: &mut String, title: &str, tests: &[&MetricTest]) {
    write_title(
        out,
        title,
        &["Metric", "Mean Difference (V - B)", "t-statistic", "p-value"],
    );
    for t in tests {
        let cells = match &t.result {
            Some(r) => vec![
                t.metric.clone(),
                format!("{:.2}", r.mean_diff),
                opt(r.t_statistic, |v| format!("{v:.4}")),
                r.p_value.map_or_else(|| "zero variance".into(), |p| format!("{p:.4}")),
            ],
            None => vec![t.metric.clone(), "-".into(), "-".into(), "n < 2".into()],
        };
        write_row(out, &cells);
    }
}

/// Plain-text tables: per-participant values, then the paired test for each group.
pub fn render_text(report: &ComparisonReport) -> String {
    let mut out = String::new();
    let group = |g: MetricGroup| report.tests.iter().filter(|t| t.group == g).collect::<Vec<_>>();

    write_title(
        &mut out,
        "Percentage of Accurate Shots in both conditions",
        &["Participant", "Baseline (%)", "Visualisation (%)", "Change (%)"],
    );
    for d in &report.deltas {
        let cells = match d.accurate_pct {
            Some(a) => vec![
                d.participant_id.clone(),
                format!("{}%", trim(a.baseline)),
                format!("{}%", trim(a.visualisation)),
                format!("{}%", signed(a.change)),
            ],
            None => vec![d.participant_id.clone(), "-".into(), "-".into(), "-".into()],
        };
        write_row(&mut out, &cells);
    }
    stats_table(
        &mut out,
        "Statistical Analysis for Accurate Shots",
        &group(MetricGroup::AccuratePct),
    );

    write_title(
        &mut out,
        "Number of Points Won in both conditions",
        &["Participant", "Baseline", "Visualisation", "Change"],
    );
    for d in &report.deltas {
        let p = d.points_won;
        write_row(
            &mut out,
            &[
                d.participant_id.clone(),
                trim(p.baseline),
                trim(p.visualisation),
                signed(p.change),
            ],
        );
    }
    if !report.deltas.is_empty() {
        let n = report.deltas.len() as f64;
        let mean = |f: fn(&MetricDeltas) -> f64| report.deltas.iter().map(f).sum::<f64>() / n;
        write_row(
            &mut out,
            &[
                "Mean".into(),
                format!("{:.1}", mean(|d| d.points_won.baseline)),
                format!("{:.1}", mean(|d| d.points_won.visualisation)),
                format!("{:.1}", mean(|d| d.points_won.change)),
            ],
        );
    }
    stats_table(
        &mut out,
        "Statistical Analysis for Number of Points won",
        &group(MetricGroup::PointsWon),
    );

    bracket_table(
        &mut out,
        "Total Shots at different swing speeds (BASELINE)",
        &report.baseline,
        |m| m.bracket_total_pct,
    );
    bracket_table(
        &mut out,
        "Total Shots at different swing speeds (VISUALISATION)",
        &report.visualisation,
        |m| m.bracket_total_pct,
    );
    stats_table(
        &mut out,
        "Statistical Analysis for Total Shots at varying swing speeds",
        &group(MetricGroup::BracketTotalPct),
    );

    bracket_table(
        &mut out,
        "Accurate Shots at different swing speeds (BASELINE)",
        &report.baseline,
        |m| m.bracket_accurate_pct,
    );
    bracket_table(
        &mut out,
        "Accurate Shots at different swing speeds (VISUALISATION)",
        &report.visualisation,
        |m| m.bracket_accurate_pct,
    );
    stats_table(
        &mut out,
        "Statistical Analysis for Accurate Shots at varying swing speeds",
        &group(MetricGroup::BracketAccuratePct),
    );

    write_title(
        &mut out,
        "Number of shots at Swing Power > 75%",
        &["Participant", "Baseline", "Visualisation", "Change"],
    );
    for d in &report.deltas {
        let p = d.shots_power_above_75;
        write_row(
            &mut out,
            &[
                d.participant_id.clone(),
                trim(p.baseline),
                trim(p.visualisation),
                signed(p.change),
            ],
        );
    }
    stats_table(
        &mut out,
        "Statistical Analysis for Shots at Swing Power > 75%",
        &group(MetricGroup::ShotsPowerAbove75),
    );
    out
}

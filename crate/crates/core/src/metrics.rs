//! Scoring detector alarms against the ground-truth drift schedule.

use serde::{Deserialize, Serialize};

use crate::streamgen::DriftSchedule;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("drift {k} does not exist; schedule has {n} positions")]
    NoSuchDrift { k: usize, n: usize },
    #[error("index {index} is outside the concept window [{start}, {end})")]
    OutsideWindow { index: usize, start: usize, end: usize },
    #[error("cannot aggregate an empty list of outcomes")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlarmKind {
    TrueAlarm,
    FalseAlarm,
    Missed,
}

impl AlarmKind {
    pub fn id(self) -> &'static str {
        match self {
            AlarmKind::TrueAlarm => "true_alarm",
            AlarmKind::FalseAlarm => "false_alarm",
            AlarmKind::Missed => "missed",
        }
    }

    pub fn from_id(s: &str) -> Option<Self> {
        match s {
            "true_alarm" => Some(AlarmKind::TrueAlarm),
            "false_alarm" => Some(AlarmKind::FalseAlarm),
            "missed" => Some(AlarmKind::Missed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlarmOutcome {
    pub kind: AlarmKind,
    pub detected_index: Option<usize>,
    pub drift_index: usize,
    pub closeness: Option<f64>,
}

impl AlarmOutcome {
    /// Outcome of the given kind with no detection details, for tallies.
    pub fn bare(kind: AlarmKind) -> Self {
        let (detected_index, closeness) = match kind {
            AlarmKind::TrueAlarm => (Some(0), Some(1.0)),
            AlarmKind::FalseAlarm => (Some(0), None),
            AlarmKind::Missed => (None, None),
        };
        Self {
            kind,
            detected_index,
            drift_index: 0,
            closeness,
        }
    }
}

/// Score a detection against drift `k` of `schedule`.
pub fn classify_alarm(
    detected_index: Option<usize>,
    schedule: &DriftSchedule,
    k: usize,
) -> Result<AlarmOutcome, MetricsError> {
    let n = schedule.positions.len();
    let start = *schedule.positions.get(k).ok_or(MetricsError::NoSuchDrift { k, n })?;
    let end = schedule.concept_end(k);
    let (kind, closeness) = match detected_index {
        None => (AlarmKind::Missed, None),
        Some(i) if (start..end).contains(&i) => (AlarmKind::TrueAlarm, Some(closeness(i, start, end)?)),
        Some(_) => (AlarmKind::FalseAlarm, None),
    };
    Ok(AlarmOutcome {
        kind,
        detected_index,
        drift_index: start,
        closeness,
    })
}

/// Linear proximity of a detection to the drift start: 1 when immediate,
/// `1 / (end - start)` at the last index of the concept.
pub fn closeness(detected_index: usize, drift_start: usize, concept_end: usize) -> Result<f64, MetricsError> {
    if detected_index < drift_start || detected_index >= concept_end {
        return Err(MetricsError::OutsideWindow {
            index: detected_index,
            start: drift_start,
            end: concept_end,
        });
    }
    let span = (concept_end - drift_start) as f64;
    Ok(1.0 - (detected_index - drift_start) as f64 / span)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmSummary {
    pub true_count: usize,
    pub false_count: usize,
    pub missed_count: usize,
    pub true_alarm_pct: f64,
    /// Mean over true alarms; `None` when there are none.
    pub mean_closeness: Option<f64>,
}

impl AlarmSummary {
    pub fn total(&self) -> usize {
        self.true_count + self.false_count + self.missed_count
    }
}

pub fn aggregate_alarms(outcomes: &[AlarmOutcome]) -> Result<AlarmSummary, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::Empty);
    }
    let count = |k: AlarmKind| outcomes.iter().filter(|o| o.kind == k).count();
    let true_count = count(AlarmKind::TrueAlarm);
    let false_count = count(AlarmKind::FalseAlarm);
    let missed_count = count(AlarmKind::Missed);
    let closeness: Vec<f64> = outcomes.iter().filter_map(|o| o.closeness).collect();
    let mean_closeness = (!closeness.is_empty()).then(|| closeness.iter().sum::<f64>() / closeness.len() as f64);
    Ok(AlarmSummary {
        true_count,
        false_count,
        missed_count,
        true_alarm_pct: 100.0 * true_count as f64 / outcomes.len() as f64,
        mean_closeness,
    })
}

use serde::{Deserialize, Serialize};

use super::drift::DriftStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScheduleMode {
    /// Update the current filter every `period_seconds`.
    User { period_seconds: i64 },
    /// Generate a new filter when the drift detector alarms.
    Detector,
    /// Periodic updates, plus a forked filter on every drift alarm.
    Hybrid { period_seconds: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    None,
    GenerateNew,
    UpdateExisting,
    ForkAndUpdate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScheduleState {
    /// Time of the last generate/update, `None` before the first filter.
    pub last_update: Option<i64>,
    pub drift: Option<DriftStatus>,
}

/// Decides what the filter generator does at `now`.
pub fn schedule_tick(mode: ScheduleMode, state: &ScheduleState, now: i64) -> Action {
    let Some(last) = state.last_update else {
        return Action::GenerateNew;
    };
    let drift = state.drift == Some(DriftStatus::Drift);
    let due = |period: i64| now - last >= period;
    match mode {
        ScheduleMode::User { period_seconds } if due(period_seconds) => Action::UpdateExisting,
        ScheduleMode::User { .. } => Action::None,
        ScheduleMode::Detector if drift => Action::GenerateNew,
        ScheduleMode::Detector => Action::None,
        ScheduleMode::Hybrid { .. } if drift => Action::ForkAndUpdate,
        ScheduleMode::Hybrid { period_seconds } if due(period_seconds) => Action::UpdateExisting,
        ScheduleMode::Hybrid { .. } => Action::None,
    }
}

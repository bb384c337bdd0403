//! Request and response bodies of the HTTP API.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use mhn_core::chronicle::{ActivityLabel, EventRecord};
use mhn_core::ema::DailyMood;
use mhn_core::estimator::{DailyFeatures, DepressionScreen, ScreenBand, StateVector};
use mhn_core::navigator::{FeedbackOutcome, GoalAction, GoalTarget, GuidancePlan, Proposer};
use mhn_core::time::EpochMs;
use serde::{Deserialize, Serialize};

use crate::alerts::Alert;

/// Body of `POST /subjects/{id}/goals`. Without `goal_id` the action must be
/// `propose`; otherwise `version` must match the stored goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalRequest {
    #[serde(default)]
    pub goal_id: Option<String>,
    #[serde(default)]
    pub version: Option<u64>,
    #[serde(flatten)]
    pub action: GoalCommand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum GoalCommand {
    Propose { target: GoalTarget, proposed_by: Proposer },
    ProviderAgree,
    ProviderDiverge { note: String },
    Revise { target: GoalTarget },
    MarkAchieved,
    Abandon,
}

impl GoalCommand {
    pub fn into_action(self) -> Option<GoalAction> {
        Some(match self {
            GoalCommand::Propose { .. } => return None,
            GoalCommand::ProviderAgree => GoalAction::ProviderAgree,
            GoalCommand::ProviderDiverge { note } => GoalAction::ProviderDiverge { note },
            GoalCommand::Revise { target } => GoalAction::Revise { target },
            GoalCommand::MarkAchieved => GoalAction::MarkAchieved,
            GoalCommand::Abandon => GoalAction::Abandon,
        })
    }

    /// Actions reserved for the provider role.
    pub fn provider_only(&self) -> bool {
        matches!(self, GoalCommand::ProviderAgree | GoalCommand::ProviderDiverge { .. })
    }
}

/// Body of `POST /subjects/{id}/guidance`: plan a route for a consensus goal,
/// or accept a manual plan.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GuidanceRequest {
    /// Defaults to the subject's most recent consensus goal.
    #[serde(default)]
    pub goal_id: Option<String>,
    /// Preview only; nothing is stored.
    #[serde(default)]
    pub dry_run: bool,
    /// Allows interventions that require provider sign-off.
    #[serde(default)]
    pub provider_approved: bool,
    #[serde(default)]
    pub manual_plan: Option<GuidancePlan>,
    /// Expected version of the active plan being replaced.
    #[serde(default)]
    pub version: Option<u64>,
}

/// Body of `POST /subjects/{id}/events`: a manually annotated event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventInput {
    pub label: ActivityLabel,
    pub start_ms: EpochMs,
    pub end_ms: EpochMs,
    #[serde(default)]
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub subject: String,
    pub buffered_date: Option<NaiveDate>,
    pub closed_days: Vec<NaiveDate>,
    pub events_appended: usize,
    pub alerts: Vec<Alert>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSummary {
    pub id: String,
    pub days: usize,
    pub latest_date: Option<NaiveDate>,
    pub screen_band: Option<ScreenBand>,
    pub screen_score: Option<u32>,
    pub open_alerts: usize,
    pub has_plan: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub subject: String,
    pub date: NaiveDate,
    pub state: StateVector,
    pub regions: Vec<String>,
    pub screen: Option<DepressionScreen>,
    pub stress_score: Option<f64>,
    pub high_stress_windows: usize,
    pub screen_alert_band: ScreenBand,
    pub stress_alert_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineDay {
    pub date: NaiveDate,
    pub features: DailyFeatures,
    pub mood: Option<DailyMood>,
    pub mean_hr: Option<f64>,
    /// Mean heart rate over the recognized sleep intervals.
    pub resting_hr: Option<f64>,
    pub label_minutes: BTreeMap<ActivityLabel, f64>,
    pub stress_score: Option<f64>,
    pub state: Option<StateVector>,
    pub regions: Vec<String>,
    pub screen: Option<DepressionScreen>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub subject: String,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub days: Vec<TimelineDay>,
    pub events: Vec<EventRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanView {
    pub subject: String,
    pub version: u64,
    pub plan: GuidancePlan,
    pub predicted_states: Vec<StateVector>,
    pub feedback: Option<FeedbackOutcome>,
}

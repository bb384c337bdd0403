//! Guidance: goal consensus, the intervention catalog, route planning over
//! the discretized state space, rule-based recommendations and feedback.

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod catalog;
mod feedback;
mod goal;
mod planner;
mod recommend;

pub use catalog::{default_catalog, load_catalog, InterventionSpec, Risk};
pub use feedback::{apply_feedback, FeedbackOutcome};
pub use goal::{update_goal, Goal, GoalAction, GoalEvent, GoalStatus, GoalTarget, Proposer};
pub use planner::{cell_center, cell_of, plan_route, Constraints, GuidancePlan, PlanStep};
pub use recommend::{recommend, Pattern, RecommendProfile, Recommendation, RecommendedItem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NavError {
    #[error("illegal goal transition: {action} from {from:?}")]
    IllegalTransition { from: GoalStatus, action: String },
    #[error("goal has no consensus (status {0:?})")]
    NoConsensusGoal(GoalStatus),
    #[error("no route: blocked by {constraint}")]
    NoRoute { constraint: String },
    #[error("current state lacks dimension {0:?}")]
    IncompleteState(String),
    #[error("unknown target region {0:?}")]
    UnknownRegion(String),
    #[error("invalid intervention {id}: {reason}")]
    InvalidIntervention { id: String, reason: String },
    #[error("recommendation needs {need} days of data, have {have}")]
    InsufficientData { have: usize, need: usize },
    #[error("no active plan")]
    NoActivePlan,
    #[error("no observed state since the plan started")]
    NoObservations,
    #[error("catalog: {0}")]
    Catalog(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavigatorConfig {
    pub grid: u32,
    pub max_concurrent: usize,
    pub max_high_risk: usize,
    pub max_weeks: u32,
    pub drift_cells: u32,
    pub drift_weeks: usize,
    pub recommend_min_days: usize,
    pub isolation_social_max: f64,
    pub isolation_home_z_min: f64,
    pub volatility_arousal_std_min: f64,
    pub catalog_path: Option<String>,
}

impl Default for NavigatorConfig {
    fn default() -> Self {
        NavigatorConfig {
            grid: 10,
            max_concurrent: 2,
            max_high_risk: 1,
            max_weeks: 52,
            drift_cells: 2,
            drift_weeks: 2,
            recommend_min_days: 7,
            isolation_social_max: 0.3,
            isolation_home_z_min: 1.0,
            volatility_arousal_std_min: 0.2,
            catalog_path: None,
        }
    }
}

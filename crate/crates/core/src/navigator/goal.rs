use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::NavError;
use crate::chronicle::SubjectId;
use crate::estimator::{Region, StateSpace};
use crate::time::EpochMs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalStatus {
    Proposed,
    Diverged,
    Revised,
    Consensus,
    Achieved,
    Abandoned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposer {
    Individual,
    Provider,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalTarget {
    Region(String),
    Bounds(BTreeMap<String, [f64; 2]>),
}

impl GoalTarget {
    pub fn resolve(&self, space: &StateSpace) -> Result<Region, NavError> {
        match self {
            GoalTarget::Region(label) => space
                .region(label)
                .cloned()
                .ok_or_else(|| NavError::UnknownRegion(label.clone())),
            GoalTarget::Bounds(b) => Ok(Region {
                label: "goal".into(),
                bounds: b.clone(),
                disorder: false,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalEvent {
    pub ts: EpochMs,
    pub status: GoalStatus,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub id: String,
    pub subject: SubjectId,
    pub target: GoalTarget,
    pub proposed_by: Proposer,
    pub status: GoalStatus,
    pub history: Vec<GoalEvent>,
    pub version: u64,
}

impl Goal {
    pub fn propose(id: &str, subject: SubjectId, target: GoalTarget, by: Proposer, ts: EpochMs) -> Self {
        Goal {
            id: id.to_string(),
            subject,
            target,
            proposed_by: by,
            status: GoalStatus::Proposed,
            history: vec![GoalEvent { ts, status: GoalStatus::Proposed, note: None }],
            version: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum GoalAction {
    ProviderAgree,
    ProviderDiverge { note: String },
    Revise { target: GoalTarget },
    MarkAchieved,
    Abandon,
}

impl GoalAction {
    fn name(&self) -> &'static str {
        match self {
            GoalAction::ProviderAgree => "provider_agree",
            GoalAction::ProviderDiverge { .. } => "provider_diverge",
            GoalAction::Revise { .. } => "revise",
            GoalAction::MarkAchieved => "mark_achieved",
            GoalAction::Abandon => "abandon",
        }
    }
}

pub fn update_goal(goal: &Goal, action: GoalAction, ts: EpochMs) -> Result<Goal, NavError> {
    use GoalStatus::*;
    let next = match (goal.status, &action) {
        (Proposed | Revised, GoalAction::ProviderAgree) => Consensus,
        (Proposed | Revised, GoalAction::ProviderDiverge { .. }) => Diverged,
        (Diverged | Consensus, GoalAction::Revise { .. }) => Revised,
        (Consensus, GoalAction::MarkAchieved) => Achieved,
        (Consensus, GoalAction::Abandon) => Abandoned,
        (from, a) => {
            return Err(NavError::IllegalTransition { from, action: a.name().to_string() })
        }
    };
    let mut g = goal.clone();
    let note = match action {
        GoalAction::ProviderDiverge { note } => Some(note),
        GoalAction::Revise { target } => {
            g.target = target;
            None
        }
        _ => None,
    };
    g.status = next;
    g.history.push(GoalEvent { ts, status: next, note });
    g.version += 1;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn goal() -> Goal {
        Goal::propose(
            "g1",
            SubjectId::new("s").unwrap(),
            GoalTarget::Region("healthy".into()),
            Proposer::Individual,
            0,
        )
    }

    fn legal(from: GoalStatus, to: GoalStatus) -> bool {
        use GoalStatus::*;
        matches!(
            (from, to),
            (Proposed, Consensus | Diverged)
                | (Diverged, Revised)
                | (Revised, Consensus | Diverged)
                | (Consensus, Achieved | Abandoned | Revised)
        )
    }

    #[test]
    fn agree_reaches_consensus() {
        let g = update_goal(&goal(), GoalAction::ProviderAgree, 1).unwrap();
        assert_eq!(g.status, GoalStatus::Consensus);
        assert_eq!(g.version, 2);
    }

    #[test]
    fn iterative_revision() {
        let g = update_goal(&goal(), GoalAction::ProviderDiverge { note: "too ambitious".into() }, 1).unwrap();
        assert_eq!(g.status, GoalStatus::Diverged);
        let target = GoalTarget::Bounds([("emotional_valence".to_string(), [0.5, 1.0])].into());
        let g = update_goal(&g, GoalAction::Revise { target: target.clone() }, 2).unwrap();
        assert_eq!(g.status, GoalStatus::Revised);
        assert_eq!(g.target, target);
        let g = update_goal(&g, GoalAction::ProviderAgree, 3).unwrap();
        assert_eq!(g.status, GoalStatus::Consensus);
        assert_eq!(g.history.len(), 4);
        assert_eq!(g.history[1].note.as_deref(), Some("too ambitious"));
    }

    #[test]
    fn double_agree_is_illegal() {
        let g = update_goal(&goal(), GoalAction::ProviderAgree, 1).unwrap();
        assert!(matches!(
            update_goal(&g, GoalAction::ProviderAgree, 2),
            Err(NavError::IllegalTransition { from: GoalStatus::Consensus, .. })
        ));
    }

    #[test]
    fn random_walks_keep_a_legal_history() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let actions = [
            GoalAction::ProviderAgree,
            GoalAction::ProviderDiverge { note: "n".into() },
            GoalAction::Revise { target: GoalTarget::Region("healthy".into()) },
            GoalAction::MarkAchieved,
            GoalAction::Abandon,
        ];
        for _ in 0..200 {
            let mut g = goal();
            for t in 0..20 {
                let a = actions[rng.gen_range(0..actions.len())].clone();
                if let Ok(n) = update_goal(&g, a, t) {
                    g = n;
                }
            }
            for w in g.history.windows(2) {
                assert!(legal(w[0].status, w[1].status), "{:?}", g.history);
            }
        }
    }

    #[test]
    fn actions_deserialize_from_tagged_json() {
        let a: GoalAction = serde_json::from_str(r#"{"action":"provider_diverge","note":"x"}"#).unwrap();
        assert_eq!(a, GoalAction::ProviderDiverge { note: "x".into() });
        let a: GoalAction = serde_json::from_str(r#"{"action":"revise","target":{"region":"healthy"}}"#).unwrap();
        assert!(matches!(a, GoalAction::Revise { .. }));
    }
}

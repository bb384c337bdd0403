use serde::{Deserialize, Serialize};

use super::{cell_of, plan_route, Constraints, Goal, GuidancePlan, InterventionSpec, NavError, NavigatorConfig};
use crate::estimator::{StateSpace, StateVector};
use crate::time::WEEK_MS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum FeedbackOutcome {
    OnTrack {
        week: usize,
        distance: u32,
    },
    Drifted {
        week: usize,
        observed_cell: Vec<u32>,
        /// Fresh route from the observed cell, when one exists.
        replan: Option<GuidancePlan>,
        replan_error: Option<String>,
    },
    Achieved {
        week: usize,
    },
}

fn chebyshev(a: &[u32], b: &[u32]) -> u32 {
    a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0)
}

/// Compares observations against the plan's predicted cells week by week.
#[allow(clippy::too_many_arguments)]
pub fn apply_feedback(
    plan: Option<&GuidancePlan>,
    observations: &[StateVector],
    goal: &Goal,
    catalog: &[InterventionSpec],
    space: &StateSpace,
    constraints: &Constraints,
    cfg: &NavigatorConfig,
) -> Result<FeedbackOutcome, NavError> {
    let plan = plan.ok_or(NavError::NoActivePlan)?;
    let mut obs: Vec<&StateVector> = observations.iter().filter(|o| o.timestamp >= plan.created_at).collect();
    if obs.is_empty() {
        return Err(NavError::NoObservations);
    }
    obs.sort_by_key(|o| o.timestamp);
    let week_of = |o: &StateVector| ((o.timestamp - plan.created_at) / WEEK_MS) as usize;
    let last = *obs.last().unwrap();
    if plan.target.contains(last) {
        return Ok(FeedbackOutcome::Achieved { week: week_of(last) });
    }
    let cell = |o: &StateVector| -> Result<Vec<u32>, NavError> {
        plan.dimensions
            .iter()
            .map(|d| o.get(d).map(|v| cell_of(v, plan.grid)).ok_or_else(|| NavError::IncompleteState(d.clone())))
            .collect()
    };
    let mut streak = 0usize;
    let mut last_week = None;
    let mut distance = 0;
    for o in &obs {
        let w = week_of(o);
        if last_week == Some(w) {
            continue;
        }
        let c = cell(o)?;
        distance = chebyshev(&c, plan.predicted_cell(w));
        let consecutive = last_week.is_some_and(|lw| lw + 1 == w);
        streak = if distance >= cfg.drift_cells {
            if consecutive { streak + 1 } else { 1 }
        } else {
            0
        };
        last_week = Some(w);
        if streak >= cfg.drift_weeks {
            let (replan, replan_error) = match plan_route(o, goal, catalog, space, constraints, &plan.created_by) {
                Ok(p) => (Some(p), None),
                Err(e) => (None, Some(e.to_string())),
            };
            return Ok(FeedbackOutcome::Drifted { week: w, observed_cell: c, replan, replan_error });
        }
    }
    Ok(FeedbackOutcome::OnTrack { week: week_of(last), distance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chronicle::SubjectId;
    use crate::estimator::{AROUSAL, VALENCE};
    use crate::navigator::{GoalStatus, GoalTarget, Proposer, Risk};
    use std::collections::BTreeMap;

    fn setup() -> (Goal, Vec<InterventionSpec>, StateSpace, GuidancePlan) {
        let mut g = Goal::propose(
            "g",
            SubjectId::new("s").unwrap(),
            GoalTarget::Bounds(BTreeMap::from([(VALENCE.to_string(), [0.6, 1.0])])),
            Proposer::Provider,
            0,
        );
        g.status = GoalStatus::Consensus;
        let cat = vec![InterventionSpec {
            id: "walk".into(),
            name: "walk".into(),
            effect: BTreeMap::from([(VALENCE.to_string(), 0.1)]),
            cost: 1.0,
            risk: Risk::Low,
            requires_provider: false,
            tags: vec![],
        }];
        let space = StateSpace::demo_2d();
        let cur = StateVector::new(0).with(VALENCE, 0.3).with(AROUSAL, 0.5);
        let plan = plan_route(&cur, &g, &cat, &space, &Constraints::default(), "t").unwrap();
        (g, cat, space, plan)
    }

    fn at(week: i64, v: f64) -> StateVector {
        StateVector { timestamp: week * WEEK_MS, ..StateVector::new(0) }.with(VALENCE, v).with(AROUSAL, 0.55)
    }

    #[test]
    fn on_the_predicted_path() {
        let (g, cat, space, plan) = setup();
        let obs = vec![at(1, 0.45), at(2, 0.55)];
        let r = apply_feedback(Some(&plan), &obs, &g, &cat, &space, &Constraints::default(), &NavigatorConfig::default());
        assert_eq!(r.unwrap(), FeedbackOutcome::OnTrack { week: 2, distance: 0 });
    }

    #[test]
    fn inside_target_is_achieved() {
        let (g, cat, space, plan) = setup();
        let obs = vec![at(3, 0.65)];
        let r = apply_feedback(Some(&plan), &obs, &g, &cat, &space, &Constraints::default(), &NavigatorConfig::default());
        assert_eq!(r.unwrap(), FeedbackOutcome::Achieved { week: 3 });
        let labels = crate::estimator::classify_regions(&obs[0], &space).unwrap();
        assert!(plan.target.contains(&obs[0]) || labels.contains(&plan.target.label));
    }

    #[test]
    fn non_adherence_drifts_by_week_three() {
        let (g, cat, space, plan) = setup();
        // Stuck in cell 3: distances 1, 2, 3 over weeks 1..3.
        let obs = vec![at(1, 0.35), at(2, 0.35), at(3, 0.35)];
        let r = apply_feedback(Some(&plan), &obs, &g, &cat, &space, &Constraints::default(), &NavigatorConfig::default())
            .unwrap();
        match r {
            FeedbackOutcome::Drifted { week, observed_cell, replan, .. } => {
                assert_eq!(week, 3);
                assert_eq!(observed_cell, vec![3, 5]);
                assert_eq!(replan.unwrap().trajectory[0], vec![3, 5]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn needs_a_plan() {
        let (g, cat, space, _) = setup();
        assert_eq!(
            apply_feedback(None, &[at(1, 0.3)], &g, &cat, &space, &Constraints::default(), &NavigatorConfig::default()),
            Err(NavError::NoActivePlan)
        );
    }
}

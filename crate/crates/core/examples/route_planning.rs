//! Plans a cheapest weekly intervention route from a low-mood state to the
//! healthy region while avoiding disorder regions.

use mhn_core::estimator::{StateSpace, StateVector, AROUSAL, VALENCE};
use mhn_core::navigator::{default_catalog, plan_route, Constraints, Goal, GoalStatus, GoalTarget, Proposer};
use mhn_core::SubjectId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let space = StateSpace::demo_2d();
    for r in &space.regions {
        println!("region {:<12} disorder={} {:?}", r.label, r.disorder, r.bounds);
    }
    let current = StateVector::new(0).with(VALENCE, 0.2).with(AROUSAL, 0.75);
    let mut goal = Goal::propose("g1", SubjectId::new("demo")?, GoalTarget::Region("healthy".into()), Proposer::Provider, 0);
    goal.status = GoalStatus::Consensus;
    let plan = plan_route(&current, &goal, &default_catalog(), &space, &Constraints::default(), "p1")?;
    println!("route of {} weeks, cost {:.1}", plan.weeks(), plan.total_cost);
    for step in &plan.steps {
        println!("  {} x {}", step.weeks, step.interventions.join(" + "));
    }
    println!("cells {:?}", plan.trajectory);
    Ok(())
}

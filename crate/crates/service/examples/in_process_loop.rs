//! The whole loop in one process: an API server on a loopback port, a
//! two-subject cohort uploaded through the client, then state, alerts, a
//! goal agreed by provider and subject, and a guidance plan.

use std::sync::{mpsc, Arc};

use mhn_core::navigator::{GoalTarget, Proposer};
use mhn_core::simkit::{generate_day, CohortConfig};
use mhn_service::api::router;
use mhn_service::client::Client;
use mhn_service::model::{GoalCommand, GuidanceRequest};
use mhn_service::{Engine, EngineOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("mhn-loop-example");
    let _ = std::fs::remove_dir_all(&dir);
    let engine = Arc::new(Engine::open(&dir, EngineOptions::load(None)?)?);
    let (tx, rx) = mpsc::channel();
    let e = engine.clone();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().expect("runtime");
        rt.block_on(async move {
            let l = tokio::net::TcpListener::bind("127.0.0.1:0").await.expect("bind");
            tx.send(l.local_addr().expect("addr")).expect("send");
            axum::serve(l, router(e)).await.expect("serve");
        });
    });
    let url = format!("http://{}", rx.recv()?);
    println!("serving {url}, data in {}", dir.display());

    let provider = Client::new(&url, "provider")?;
    let cohort = CohortConfig::loop_cohort().with_short_windows();
    for s in 0..cohort.subjects {
        for d in 0..cohort.days {
            for b in generate_day(&cohort, s, d)?.batches {
                provider.ingest(&b)?;
            }
        }
    }
    provider.flush()?;

    for s in provider.subjects()? {
        let view = provider.state(&s.id)?;
        let screen = view.screen.as_ref().map(|x| format!("{} {}", x.score, x.band.as_str()));
        println!("{} on {}: regions {:?}, screen {}", view.subject, view.date, view.regions, screen.unwrap_or_default());
    }
    for a in provider.alerts(Some("open"))? {
        println!("alert {} {} {:?} {}", a.id, a.subject, a.kind, a.payload);
    }

    let subject = Client::new(&url, "individual:s01")?;
    let goal = subject.propose_goal("s01", GoalTarget::Region("healthy".into()), Proposer::Individual)?;
    let goal = provider.update_goal(&goal, GoalCommand::ProviderAgree)?;
    println!("goal {} is {:?}", goal.id, goal.status);
    let plan = provider.guidance("s01", &GuidanceRequest { goal_id: Some(goal.id), ..Default::default() })?;
    println!("plan v{}: {} weeks, cost {:.1}", plan.version, plan.plan.weeks(), plan.plan.total_cost);
    for step in &plan.plan.steps {
        println!("  {} x {}", step.weeks, step.interventions.join(" + "));
    }
    println!("state hash {}", provider.state_hash()?);
    Ok(())
}

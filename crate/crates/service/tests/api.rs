use std::net::SocketAddr;
use std::path::Path;
use std::sync::{mpsc, Arc, OnceLock};

use mhn_core::estimator::ScreenBand;
use mhn_core::navigator::{GoalStatus, GoalTarget, Proposer};
use mhn_core::simkit::{generate_day, CohortConfig};
use mhn_core::time::day_bounds;
use mhn_service::alerts::{Alert, AlertKind, AlertState};
use mhn_service::api::router;
use mhn_service::client::Client;
use mhn_service::engine::replay_journal;
use mhn_service::journal::JOURNAL_FILE;
use mhn_service::model::{GoalCommand, GuidanceRequest, PlanView, Timeline};
use mhn_service::{Engine, EngineOptions};
use serde_json::{json, Value};

fn spawn(dir: &Path) -> (String, Arc<Engine>) {
    let engine = Arc::new(Engine::open(dir, EngineOptions::load(None).unwrap()).unwrap());
    let (tx, rx) = mpsc::channel::<SocketAddr>();
    let e = engine.clone();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let l = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(l.local_addr().unwrap()).unwrap();
            axum::serve(l, router(e)).await.unwrap();
        });
    });
    (format!("http://{}", rx.recv().unwrap()), engine)
}

/// Status and JSON body of a raw request.
fn call(method: &str, url: &str, token: Option<&str>, body: Option<&str>) -> (u16, Value) {
    let http = reqwest::blocking::Client::new();
    let mut req = match method {
        "GET" => http.get(url),
        "PUT" => http.put(url),
        _ => http.post(url),
    };
    if let Some(t) = token {
        req = req.bearer_auth(t);
    }
    if let Some(b) = body {
        req = req.header("content-type", "application/json").body(b.to_string());
    }
    let resp = req.send().unwrap();
    let status = resp.status().as_u16();
    (status, resp.json().unwrap_or(Value::Null))
}

fn ingest_days(client: &Client, cohort: &CohortConfig, subject: usize, days: std::ops::Range<usize>) {
    for d in days {
        for b in generate_day(cohort, subject, d).unwrap().batches {
            client.ingest(&b).unwrap();
        }
    }
}

struct Loaded {
    _dir: tempfile::TempDir,
    url: String,
}

/// Server holding the full two-subject loop cohort.
fn loaded() -> &'static Loaded {
    static CELL: OnceLock<Loaded> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let (url, _) = spawn(dir.path());
        let cohort = CohortConfig::loop_cohort().with_short_windows();
        let client = Client::new(&url, "provider").unwrap();
        for s in 0..cohort.subjects {
            ingest_days(&client, &cohort, s, 0..cohort.days);
        }
        client.flush().unwrap();
        Loaded { _dir: dir, url }
    })
}

#[test]
fn auth_and_request_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (url, _) = spawn(dir.path());
    assert_eq!(call("GET", &format!("{url}/health"), None, None).0, 200);
    assert_eq!(call("GET", &format!("{url}/subjects"), None, None).0, 401);
    assert_eq!(call("GET", &format!("{url}/subjects"), Some("admin"), None).0, 401);
    assert_eq!(call("GET", &format!("{url}/subjects/s02/state"), Some("individual:s01"), None).0, 403);
    let (code, body) = call("GET", &format!("{url}/subjects/s01/state"), Some("provider"), None);
    assert_eq!(code, 404);
    assert_eq!(body["kind"], "not_found");
    assert_eq!(call("POST", &format!("{url}/ingest"), Some("provider"), Some("{not json")).0, 400);
    assert_eq!(call("POST", &format!("{url}/ingest/flush"), Some("individual:s01"), None).0, 403);
    assert_eq!(call("GET", &format!("{url}/alerts?state=bogus"), Some("provider"), None).0, 400);
    assert_eq!(call("POST", &format!("{url}/alerts/s01-0001/ack"), Some("provider"), None).0, 404);
    assert_eq!(call("PUT", &format!("{url}/subjects/s01/profile"), Some("provider"), Some(r#"{"timezone":"Mars/Base"}"#)).0, 400);
    assert_eq!(call("PUT", &format!("{url}/subjects/s01/profile"), Some("individual:s01"), Some(r#"{"timezone":"UTC"}"#)).0, 403);
    assert!(call("GET", &format!("{url}/lattice"), Some("individual:s01"), None).1["concepts"].is_array());
    assert!(call("GET", &format!("{url}/space"), Some("provider"), None).1["dimensions"].is_array());
}

#[test]
fn goal_state_machine_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let (url, _) = spawn(dir.path());
    let provider = Client::new(&url, "provider").unwrap();
    let me = Client::new(&url, "individual:p01").unwrap();
    let target = GoalTarget::Region("healthy".into());
    assert_eq!(me.propose_goal("p01", target.clone(), Proposer::Individual).unwrap_err().status(), Some(404));
    let (code, _) = call("PUT", &format!("{url}/subjects/p01/profile"), Some("provider"), Some(r#"{"timezone":"Europe/Berlin"}"#));
    assert_eq!(code, 200);
    assert_eq!(me.get::<Value>("/subjects/p01/profile").unwrap()["timezone"], "Europe/Berlin");

    let g = me.propose_goal("p01", target.clone(), Proposer::Individual).unwrap();
    assert_eq!(g.status, GoalStatus::Proposed);
    assert_eq!(me.update_goal(&g, GoalCommand::ProviderAgree).unwrap_err().status(), Some(403));
    let mut stale = g.clone();
    stale.version += 7;
    assert_eq!(provider.update_goal(&stale, GoalCommand::ProviderAgree).unwrap_err().status(), Some(409));
    let agreed = provider.update_goal(&g, GoalCommand::ProviderAgree).unwrap();
    assert_eq!(agreed.status, GoalStatus::Consensus);
    assert_eq!(agreed.version, g.version + 1);
    // Replaying the old version after it moved on is a conflict too.
    assert_eq!(provider.update_goal(&g, GoalCommand::Abandon).unwrap_err().status(), Some(409));
    // Agreeing twice is not a legal transition.
    assert_eq!(provider.update_goal(&agreed, GoalCommand::ProviderAgree).unwrap_err().status(), Some(409));
    let unknown = GoalCommand::Revise { target: GoalTarget::Region("no_such_region".into()) };
    assert_eq!(me.update_goal(&agreed, unknown).unwrap_err().status(), Some(400));
    let bounds = GoalTarget::Bounds([("valence".to_string(), [0.6, 1.0])].into());
    let revised = me.update_goal(&agreed, GoalCommand::Revise { target: bounds }).unwrap();
    assert_eq!(revised.status, GoalStatus::Revised);
    let goals = me.goals("p01").unwrap();
    assert_eq!(goals.len(), 1);
    assert_eq!(goals[0], revised);
    // No state yet, so there is nothing to plan from.
    let req = GuidanceRequest { goal_id: Some(revised.id.clone()), ..Default::default() };
    assert!(provider.guidance("p01", &req).is_err());
    assert_eq!(me.get::<Value>("/subjects/p01/state").unwrap_err().status(), Some(404));
}

#[test]
fn timeline_and_state_follow_the_data() {
    let f = loaded();
    let client = Client::new(&f.url, "provider").unwrap();
    let subjects = client.subjects().unwrap();
    assert_eq!(subjects.iter().map(|s| s.id.as_str()).collect::<Vec<_>>(), ["s01", "s02"]);
    assert!(subjects.iter().all(|s| s.days == 60));

    let tl: Timeline = client.get("/subjects/s01/timeline").unwrap();
    assert_eq!(tl.days.len(), 60);
    assert!(!tl.events.is_empty());
    let mut compared = 0;
    for d in &tl.days {
        if let (Some(rest), Some(mean)) = (d.resting_hr, d.mean_hr) {
            assert!(rest < mean, "{}: resting {rest} mean {mean}", d.date);
            compared += 1;
        }
    }
    assert!(compared >= 50);
    let window: Timeline = client.get(&format!("/subjects/s01/timeline?from={}&to={}", tl.days[10].date, tl.days[19].date)).unwrap();
    assert_eq!(window.days.len(), 10);
    let (lo, _) = day_bounds(tl.days[10].date, chrono_tz::UTC);
    let (_, hi) = day_bounds(tl.days[19].date, chrono_tz::UTC);
    assert!(window.events.iter().all(|e| e.end_ms > lo && e.start_ms < hi));

    let s01 = client.state("s01").unwrap();
    let s02 = client.state("s02").unwrap();
    assert_eq!(s01.date, tl.days.last().unwrap().date);
    assert!(s01.screen.as_ref().unwrap().band >= ScreenBand::Moderate, "{:?}", s01.screen);
    assert_eq!(s02.screen.as_ref().unwrap().band, ScreenBand::Minimal);
    let me = Client::new(&f.url, "individual:s02").unwrap();
    assert_eq!(me.subjects().unwrap().len(), 1);
    assert_eq!(me.get::<Value>("/subjects/s02/regimes").unwrap_err().status(), Some(403));
    let regimes: Value = client.get("/subjects/s01/regimes").unwrap();
    assert!(regimes.as_array().unwrap().iter().any(|r| r["phase"] == "poor_mood"));
    let rec: Value = client.get("/subjects/s01/recommendations").unwrap();
    assert!(!rec["items"].as_array().unwrap().is_empty());
}

/// One alert every time the screen band reaches the alert band from below.
fn expected_screen_alerts(tl: &Timeline, boundary: ScreenBand) -> usize {
    let bands: Vec<ScreenBand> = tl.days.iter().filter_map(|d| d.screen.as_ref().map(|s| s.band)).collect();
    let mut prev = ScreenBand::Minimal;
    let mut n = 0;
    for (i, b) in bands.iter().enumerate() {
        if *b >= boundary && (i == 0 || prev < boundary) {
            n += 1;
        }
        prev = *b;
    }
    n
}

#[test]
fn alerts_match_crossings_and_ack_once() {
    let f = loaded();
    let client = Client::new(&f.url, "provider").unwrap();
    let tl: Timeline = client.get("/subjects/s01/timeline").unwrap();
    let boundary = client.state("s01").unwrap().screen_alert_band;
    let mine: Vec<Alert> = client.get("/alerts?subject=s01").unwrap();
    let screen: Vec<&Alert> = mine.iter().filter(|a| a.kind == AlertKind::ScreenBandIncrease).collect();
    assert_eq!(screen.len(), expected_screen_alerts(&tl, boundary));
    assert!(!screen.is_empty());
    let s02: Vec<Alert> = client.get("/alerts?subject=s02").unwrap();
    assert!(s02.iter().all(|a| a.kind != AlertKind::ScreenBandIncrease), "{s02:?}");

    let id = screen[0].id.clone();
    let individual = Client::new(&f.url, "individual:s01").unwrap();
    assert_eq!(individual.ack(&id).unwrap_err().status(), Some(403));
    let acked = client.ack(&id).unwrap();
    assert_eq!(acked.state, AlertState::Acknowledged);
    assert!(acked.acknowledged_at.is_some());
    assert_eq!(client.ack(&id).unwrap_err().status(), Some(409));
    let open = client.alerts(Some("open")).unwrap();
    assert!(open.iter().all(|a| a.id != id));
    let closed = client.alerts(Some("acknowledged")).unwrap();
    assert!(closed.iter().any(|a| a.id == id));
    // Individuals only ever see their own alerts.
    let theirs = Client::new(&f.url, "individual:s02").unwrap().alerts(None).unwrap();
    assert!(theirs.iter().all(|a| a.subject == "s02"));
}

#[test]
fn dry_run_stores_nothing_and_plans_are_versioned() {
    let f = loaded();
    let client = Client::new(&f.url, "provider").unwrap();
    let g = client.propose_goal("s01", GoalTarget::Region("healthy".into()), Proposer::Provider).unwrap();
    let g = client.update_goal(&g, GoalCommand::ProviderAgree).unwrap();
    let req = GuidanceRequest { goal_id: Some(g.id.clone()), dry_run: true, ..Default::default() };
    let preview = client.guidance("s01", &req).unwrap();
    assert!(!preview.plan.steps.is_empty());
    assert_eq!(client.plan("s01").unwrap_err().status(), Some(404));

    let individual = Client::new(&f.url, "individual:s01").unwrap();
    let approved = GuidanceRequest { provider_approved: true, ..req.clone() };
    assert_eq!(individual.guidance("s01", &approved).unwrap_err().status(), Some(403));

    let committed = client.guidance("s01", &GuidanceRequest { dry_run: false, ..req.clone() }).unwrap();
    assert_eq!(committed.plan.steps, preview.plan.steps);
    let stored: PlanView = individual.plan("s01").unwrap();
    assert_eq!(stored.version, committed.version);
    assert_eq!(stored.predicted_states.len(), stored.plan.trajectory.len());

    let wrong = GuidanceRequest { dry_run: false, version: Some(committed.version + 5), ..req.clone() };
    assert_eq!(client.guidance("s01", &wrong).unwrap_err().status(), Some(409));
    let next = GuidanceRequest { dry_run: false, version: Some(committed.version), ..req };
    let replaced = client.guidance("s01", &next).unwrap();
    assert!(replaced.version > committed.version);
    assert!(client.subjects().unwrap().iter().any(|s| s.id == "s01" && s.has_plan));
}

#[test]
fn manual_plans_are_checked() {
    let f = loaded();
    let client = Client::new(&f.url, "provider").unwrap();
    let g = client.propose_goal("s02", GoalTarget::Region("healthy".into()), Proposer::Individual).unwrap();
    let g = client.update_goal(&g, GoalCommand::ProviderAgree).unwrap();
    let mut plan = client
        .guidance("s02", &GuidanceRequest { goal_id: Some(g.id.clone()), dry_run: true, ..Default::default() })
        .unwrap()
        .plan;
    plan.steps = vec![mhn_core::navigator::PlanStep { interventions: vec!["made_up".into()], weeks: 1 }];
    let req = GuidanceRequest { goal_id: Some(g.id), manual_plan: Some(plan), ..Default::default() };
    let (code, _) = call("POST", &format!("{}/subjects/s02/guidance", f.url), Some("provider"), Some(&serde_json::to_string(&req).unwrap()));
    assert_eq!(code, 400);
}

#[test]
fn annotated_events_reach_the_timeline() {
    let f = loaded();
    let client = Client::new(&f.url, "individual:s02").unwrap();
    let tl: Timeline = client.get("/subjects/s02/timeline").unwrap();
    let noon = tl.days.last().unwrap().state.as_ref().unwrap().timestamp;
    let body = json!({ "label": "Direct communication", "start_ms": noon, "end_ms": noon + 600_000, "attributes": ["conflict"] });
    let sent: Value = client.post("/subjects/s02/events", &body).unwrap();
    assert_eq!(sent["label"], "Direct communication");
    let bad = json!({ "label": "Direct communication", "start_ms": noon, "end_ms": noon - 1 });
    assert_eq!(client.post::<_, Value>("/subjects/s02/events", &bad).unwrap_err().status(), Some(400));
    let after: Timeline = client.get("/subjects/s02/timeline").unwrap();
    assert_eq!(after.events.len(), tl.events.len() + 1);
}

#[test]
fn journal_replay_and_restart_reproduce_state() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("live");
    let (url, engine) = spawn(&data);
    let cohort = CohortConfig { days: 12, ..CohortConfig::loop_cohort().with_short_windows() };
    std::thread::scope(|s| {
        for subject in 0..2 {
            let (url, cohort) = (&url, &cohort);
            s.spawn(move || ingest_days(&Client::new(url, "provider").unwrap(), cohort, subject, 0..cohort.days));
        }
    });
    let client = Client::new(&url, "provider").unwrap();
    client.flush().unwrap();
    let g = client.propose_goal("s01", GoalTarget::Region("healthy".into()), Proposer::Provider).unwrap();
    client.update_goal(&g, GoalCommand::ProviderAgree).unwrap();
    // Rejected commands are journaled as well and must replay to the same rejection.
    assert!(client.update_goal(&g, GoalCommand::ProviderAgree).is_err());
    let _ = client.guidance("s01", &GuidanceRequest::default());
    for a in client.alerts(Some("open")).unwrap().iter().take(2) {
        client.ack(&a.id).unwrap();
    }

    let live = client.state_hash().unwrap();
    assert_eq!(live, engine.state_hash().unwrap());
    let replayed = replay_journal(&data.join(JOURNAL_FILE), &dir.path().join("replay"), EngineOptions::load(None).unwrap()).unwrap();
    assert_eq!(replayed, live);
    let reopened = Engine::open(&data, EngineOptions::load(None).unwrap()).unwrap();
    assert_eq!(reopened.state_hash().unwrap(), live);
    assert_eq!(reopened.subjects(), engine.subjects());
}

//! HTTP routes over the engine.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use mhn_core::ingest::SampleBatch;
use mhn_core::personal_model::ProfileContext;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::alerts::AlertState;
use crate::auth::Session;
use crate::engine::{Engine, Outcome};
use crate::error::ServiceError;
use crate::journal::Command;
use crate::model::{EventInput, GoalRequest, GuidanceRequest};

/// Raw batches can be several megabytes.
const BODY_LIMIT: usize = 512 * 1024 * 1024;

type Shared = Arc<Engine>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(json!({ "error": self.to_string(), "kind": self.kind() }))).into_response()
    }
}

fn session(headers: &HeaderMap) -> Result<Session, ServiceError> {
    Session::from_header(headers.get("authorization").and_then(|v| v.to_str().ok()))
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

/// Runs engine work off the async workers.
async fn blocking<T, F>(f: F) -> Response
where
    T: Serialize + Send + 'static,
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(Ok(v)) => Json(v).into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ServiceError::Journal(format!("worker failed: {e}")).into_response(),
    }
}

fn outcome_json(o: Outcome) -> Result<serde_json::Value, ServiceError> {
    let v = match o {
        Outcome::Ingest(r) => serde_json::to_value(r),
        Outcome::Profile(p) => serde_json::to_value(p),
        Outcome::Event(e) => serde_json::to_value(e),
        Outcome::Goal(g) => serde_json::to_value(g),
        Outcome::Plan(p) => serde_json::to_value(p),
        Outcome::Alert(a) => serde_json::to_value(a),
    };
    v.map_err(|e| ServiceError::Journal(e.to_string()))
}

pub fn router(engine: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/subjects", get(list_subjects))
        .route("/subjects/:id/timeline", get(timeline))
        .route("/subjects/:id/state", get(state))
        .route("/subjects/:id/plan", get(plan))
        .route("/subjects/:id/goals", get(list_goals).post(post_goal))
        .route("/subjects/:id/guidance", post(post_guidance))
        .route("/subjects/:id/recommendations", get(recommendations))
        .route("/subjects/:id/regimes", get(regimes))
        .route("/subjects/:id/profile", get(get_profile).put(put_profile))
        .route("/subjects/:id/events", post(post_event))
        .route("/alerts", get(list_alerts))
        .route("/alerts/:id/ack", post(ack_alert))
        .route("/ingest", post(ingest))
        .route("/ingest/flush", post(flush))
        .route("/lattice", get(lattice))
        .route("/space", get(space))
        .route("/admin/state-hash", get(state_hash))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(engine)
}

/// Binds and serves until the process ends. Prints the bound address on
/// stdout so scripts can use port 0.
pub async fn serve(engine: Shared, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    println!("listening on {local}");
    tracing::info!(%local, "serving");
    axum::serve(listener, router(engine)).await
}

async fn health() -> Response {
    Json(json!({ "status": "ok" })).into_response()
}

async fn list_subjects(State(e): State<Shared>, headers: HeaderMap) -> Response {
    blocking(move || {
        let s = session(&headers)?;
        let mut all = e.subjects();
        if !s.is_provider() {
            all.retain(|x| s.check_subject(&x.id).is_ok());
        }
        Ok(all)
    })
    .await
}

#[derive(Deserialize)]
struct Range {
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
}

async fn timeline(
    State(e): State<Shared>,
    Path(id): Path<String>,
    Query(r): Query<Range>,
    headers: HeaderMap,
) -> Response {
    blocking(move || {
        session(&headers)?.check_subject(&id)?;
        e.timeline(&id, r.from, r.to)
    })
    .await
}

async fn state(State(e): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    blocking(move || {
        session(&headers)?.check_subject(&id)?;
        e.state(&id)
    })
    .await
}

async fn plan(State(e): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    blocking(move || {
        session(&headers)?.check_subject(&id)?;
        e.plan(&id)
    })
    .await
}

async fn list_goals(State(e): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    blocking(move || {
        session(&headers)?.check_subject(&id)?;
        e.goals(&id)
    })
    .await
}

async fn post_goal(State(e): State<Shared>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Response {
    blocking(move || {
        let s = session(&headers)?;
        s.check_subject(&id)?;
        let request: GoalRequest = parse(&body)?;
        if request.action.provider_only() {
            s.require_provider("provider agreement")?;
        }
        if !e.has_subject(&id) {
            return Err(ServiceError::NotFound(format!("subject {id}")));
        }
        outcome_json(e.submit(Command::Goal { subject: id, request })?)
    })
    .await
}

async fn post_guidance(State(e): State<Shared>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Response {
    blocking(move || {
        let s = session(&headers)?;
        s.check_subject(&id)?;
        let request: GuidanceRequest = if body.is_empty() { GuidanceRequest::default() } else { parse(&body)? };
        if request.provider_approved || request.manual_plan.is_some() {
            s.require_provider("provider-approved or manual plans")?;
        }
        if request.dry_run {
            return serde_json::to_value(e.preview_guidance(&id, &request, &s.token())?)
                .map_err(|x| ServiceError::Journal(x.to_string()));
        }
        if !e.has_subject(&id) {
            return Err(ServiceError::NotFound(format!("subject {id}")));
        }
        outcome_json(e.submit(Command::Guidance { subject: id, request, created_by: s.token() })?)
    })
    .await
}

async fn recommendations(State(e): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    blocking(move || {
        session(&headers)?.check_subject(&id)?;
        e.recommendations(&id)
    })
    .await
}

async fn regimes(State(e): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    blocking(move || {
        session(&headers)?.require_provider("regime detection")?;
        e.regimes(&id)
    })
    .await
}

async fn get_profile(State(e): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    blocking(move || {
        session(&headers)?.check_subject(&id)?;
        e.profile(&id)
    })
    .await
}

async fn put_profile(State(e): State<Shared>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Response {
    blocking(move || {
        session(&headers)?.require_provider("profile edits")?;
        let context: ProfileContext = parse(&body)?;
        context.tz().map_err(|x| ServiceError::BadRequest(x.to_string()))?;
        outcome_json(e.submit(Command::SetProfile { subject: id, context })?)
    })
    .await
}

async fn post_event(State(e): State<Shared>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Response {
    blocking(move || {
        session(&headers)?.check_subject(&id)?;
        let event: EventInput = parse(&body)?;
        if !e.has_subject(&id) {
            return Err(ServiceError::NotFound(format!("subject {id}")));
        }
        outcome_json(e.submit(Command::AddEvent { subject: id, event })?)
    })
    .await
}

#[derive(Deserialize)]
struct AlertQuery {
    state: Option<String>,
    subject: Option<String>,
}

async fn list_alerts(State(e): State<Shared>, Query(q): Query<AlertQuery>, headers: HeaderMap) -> Response {
    blocking(move || {
        let s = session(&headers)?;
        let state: Option<AlertState> =
            q.state.as_deref().map(str::parse).transpose().map_err(ServiceError::BadRequest)?;
        let subject = match (&s.role, q.subject) {
            (crate::auth::Role::Individual(me), None) => Some(me.clone()),
            (_, subj) => subj,
        };
        if let Some(subj) = &subject {
            s.check_subject(subj)?;
        }
        Ok(e.alerts(state, subject.as_deref()))
    })
    .await
}

async fn ack_alert(State(e): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    blocking(move || {
        session(&headers)?.require_provider("acknowledging alerts")?;
        let cmd = Command::AckAlert { id: id.clone() };
        match cmd.subject() {
            Some(s) if e.has_subject(s) => outcome_json(e.submit(cmd)?),
            _ => Err(ServiceError::NotFound(format!("alert {id}"))),
        }
    })
    .await
}

async fn ingest(State(e): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    blocking(move || {
        let s = session(&headers)?;
        let batch: SampleBatch = parse(&body)?;
        s.check_subject(batch.subject.as_str())?;
        outcome_json(e.submit(Command::Ingest { batch })?)
    })
    .await
}

#[derive(Deserialize)]
struct FlushQuery {
    subject: Option<String>,
}

async fn flush(State(e): State<Shared>, Query(q): Query<FlushQuery>, headers: HeaderMap) -> Response {
    blocking(move || {
        let s = session(&headers)?;
        match q.subject {
            Some(subject) => {
                s.check_subject(&subject)?;
                if !e.has_subject(&subject) {
                    return Err(ServiceError::NotFound(format!("subject {subject}")));
                }
                Ok(vec![outcome_json(e.submit(Command::Flush { subject })?)?])
            }
            None => {
                s.require_provider("flushing every subject")?;
                e.flush_all()?
                    .into_iter()
                    .map(|r| serde_json::to_value(r).map_err(|x| ServiceError::Journal(x.to_string())))
                    .collect()
            }
        }
    })
    .await
}

async fn lattice(State(e): State<Shared>, headers: HeaderMap) -> Response {
    blocking(move || {
        session(&headers)?;
        Ok(e.lattice())
    })
    .await
}

async fn space(State(e): State<Shared>, headers: HeaderMap) -> Response {
    blocking(move || {
        session(&headers)?;
        Ok(e.options().space.clone())
    })
    .await
}

async fn state_hash(State(e): State<Shared>, headers: HeaderMap) -> Response {
    blocking(move || {
        session(&headers)?.require_provider("state hash")?;
        Ok(json!({ "state_hash": e.state_hash()? }))
    })
    .await
}

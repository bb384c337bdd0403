//! Blocking HTTP client used by the command-line tools.

use std::time::Duration;

use mhn_core::ingest::SampleBatch;
use mhn_core::navigator::{Goal, GoalTarget, Proposer};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::alerts::Alert;
use crate::model::{GoalCommand, GoalRequest, GuidanceRequest, IngestReport, PlanView, StateView, SubjectSummary};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("http: {0}")]
    Http(#[from] reqwest::Error),
    #[error("server answered {status}: {body}")]
    Status { status: u16, body: String },
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Status { status, .. } => Some(*status),
            ClientError::Http(_) => None,
        }
    }
}

pub struct Client {
    base: String,
    token: String,
    http: reqwest::blocking::Client,
}

impl Client {
    pub fn new(base: &str, token: &str) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder().timeout(Duration::from_secs(600)).build()?;
        Ok(Client { base: base.trim_end_matches('/').to_string(), token: token.to_string(), http })
    }

    fn finish<T: DeserializeOwned>(resp: reqwest::blocking::Response) -> Result<T, ClientError> {
        let status = resp.status();
        if status.is_success() {
            Ok(resp.json()?)
        } else {
            Err(ClientError::Status { status: status.as_u16(), body: resp.text().unwrap_or_default() })
        }
    }

    pub fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        let resp = self.http.get(format!("{}{path}", self.base)).bearer_auth(&self.token).send()?;
        Self::finish(resp)
    }

    pub fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        let resp = self.http.post(format!("{}{path}", self.base)).bearer_auth(&self.token).json(body).send()?;
        Self::finish(resp)
    }

    pub fn health(&self) -> Result<serde_json::Value, ClientError> {
        self.get("/health")
    }

    pub fn ingest(&self, batch: &SampleBatch) -> Result<IngestReport, ClientError> {
        self.post("/ingest", batch)
    }

    pub fn flush(&self) -> Result<Vec<IngestReport>, ClientError> {
        self.post("/ingest/flush", &serde_json::json!({}))
    }

    pub fn subjects(&self) -> Result<Vec<SubjectSummary>, ClientError> {
        self.get("/subjects")
    }

    pub fn state(&self, subject: &str) -> Result<StateView, ClientError> {
        self.get(&format!("/subjects/{subject}/state"))
    }

    pub fn plan(&self, subject: &str) -> Result<PlanView, ClientError> {
        self.get(&format!("/subjects/{subject}/plan"))
    }

    pub fn goals(&self, subject: &str) -> Result<Vec<Goal>, ClientError> {
        self.get(&format!("/subjects/{subject}/goals"))
    }

    pub fn propose_goal(&self, subject: &str, target: GoalTarget, by: Proposer) -> Result<Goal, ClientError> {
        let req = GoalRequest { goal_id: None, version: None, action: GoalCommand::Propose { target, proposed_by: by } };
        self.post(&format!("/subjects/{subject}/goals"), &req)
    }

    pub fn update_goal(&self, goal: &Goal, action: GoalCommand) -> Result<Goal, ClientError> {
        let req = GoalRequest { goal_id: Some(goal.id.clone()), version: Some(goal.version), action };
        self.post(&format!("/subjects/{}/goals", goal.subject), &req)
    }

    pub fn guidance(&self, subject: &str, req: &GuidanceRequest) -> Result<PlanView, ClientError> {
        self.post(&format!("/subjects/{subject}/guidance"), req)
    }

    pub fn alerts(&self, state: Option<&str>) -> Result<Vec<Alert>, ClientError> {
        match state {
            Some(s) => self.get(&format!("/alerts?state={s}")),
            None => self.get("/alerts"),
        }
    }

    pub fn ack(&self, id: &str) -> Result<Alert, ClientError> {
        self.post(&format!("/alerts/{id}/ack"), &serde_json::json!({}))
    }

    pub fn state_hash(&self) -> Result<String, ClientError> {
        let v: serde_json::Value = self.get("/admin/state-hash")?;
        Ok(v["state_hash"].as_str().unwrap_or_default().to_string())
    }
}

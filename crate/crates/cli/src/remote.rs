//! Backend that drives episodes on a running server.

use reqwest::blocking::{Client, Response};
use serde::de::DeserializeOwned;
use varapps::env::{EpisodeRequest, EpisodeResult, StepResult};
use varapps::harness::{Backend, ErrorCategory, RunError, Started};
use varapps::layout::Observation;

use crate::protocol::*;

pub struct Remote {
    base: String,
    client: Client,
    session: Option<String>,
}

impl Remote {
    pub fn new(base: &str) -> Self {
        Remote { base: base.trim_end_matches('/').to_string(), client: Client::new(), session: None }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn session(&self) -> Result<&str, RunError> {
        self.session.as_deref().ok_or_else(|| RunError::internal("no session started"))
    }

    fn close(&mut self) {
        if let Some(id) = self.session.take() {
            let _ = self.client.delete(self.url(&format!("/sessions/{id}"))).send();
        }
    }
}

fn transport(e: reqwest::Error) -> RunError {
    let category = if e.is_connect() || e.is_timeout() { ErrorCategory::Connect } else { ErrorCategory::Protocol };
    RunError::new(category, e.to_string())
}

fn decode<T: DeserializeOwned>(resp: Result<Response, reqwest::Error>) -> Result<T, RunError> {
    let resp = resp.map_err(transport)?;
    let status = resp.status();
    let text = resp.text().map_err(transport)?;
    if !status.is_success() {
        let msg = match serde_json::from_str::<ErrorBody>(&text) {
            Ok(b) => format!("{} {}: {}", status.as_u16(), b.error.code, b.error.message),
            Err(_) => format!("{} {text}", status.as_u16()),
        };
        return Err(RunError::new(ErrorCategory::Protocol, msg));
    }
    serde_json::from_str(&text).map_err(|e| RunError::new(ErrorCategory::Protocol, format!("bad response body: {e}")))
}

impl Backend for Remote {
    fn start(&mut self, request: &EpisodeRequest) -> Result<Started, RunError> {
        self.close();
        let created: SessionCreated = decode(self.client.post(self.url("/sessions")).json(request).send())?;
        self.session = Some(created.session_id);
        Ok(Started { goal: created.goal, digest: created.digest, observation: created.observation })
    }

    fn step(&mut self, action: &str) -> Result<(StepResult, Observation), RunError> {
        let id = self.session()?;
        let body = ActRequest { protocol_version: Some(PROTOCOL_VERSION), action: action.to_string() };
        let r: ActResponse = decode(self.client.post(self.url(&format!("/sessions/{id}/actions"))).json(&body).send())?;
        Ok((r.result, r.observation))
    }

    fn finish(&mut self) -> Result<EpisodeResult, RunError> {
        let id = self.session()?;
        let r: ResultResponse = decode(self.client.get(self.url(&format!("/sessions/{id}/result"))).send())?;
        self.close();
        Ok(r.result)
    }
}

impl Drop for Remote {
    fn drop(&mut self) {
        self.close();
    }
}

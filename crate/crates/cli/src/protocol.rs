//! JSON bodies of the HTTP protocol. Every response carries `protocol_version`.

use serde::{Deserialize, Serialize};
use varapps::env::{EpisodeResult, Status, StepResult};
use varapps::layout::Observation;
use varapps::state::Route;

pub const PROTOCOL_VERSION: u32 = 1;

/// Response to `POST /sessions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub protocol_version: u32,
    pub session_id: String,
    pub goal: String,
    pub status: Status,
    pub horizon: usize,
    pub digest: String,
    pub observation: Observation,
}

/// Response to `GET /sessions/{id}/observation?mode=json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationResponse {
    pub protocol_version: u32,
    pub session_id: String,
    pub observation: Observation,
}

/// Body of `POST /sessions/{id}/actions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_version: Option<u32>,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActResponse {
    pub protocol_version: u32,
    pub session_id: String,
    pub result: StepResult,
    pub observation: Observation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultResponse {
    pub protocol_version: u32,
    pub session_id: String,
    pub result: EpisodeResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub protocol_version: u32,
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInfo {
    pub id: String,
    pub relevant_apps: Vec<Route>,
    pub prompts: usize,
    pub multi_step: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TasksResponse {
    pub protocol_version: u32,
    pub tasks: Vec<TaskInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationInfo {
    pub id: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationsResponse {
    pub protocol_version: u32,
    pub variations: Vec<VariationInfo>,
}

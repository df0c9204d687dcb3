//! One episode: configuration, task, state and the step pipeline
//! parse → resolve → apply → evaluate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{parse_action, ActionProfile, InvalidCategory};
use crate::config::{load_config, AppConfigSet, Catalog, ConfigError};
use crate::layout::{render, resolve, Observation, Viewport};
use crate::state::{apply_control, canonicalize, Control, EnvState, RejectCode, Rejection, Route};
use crate::tasks::{Evaluator, RewardResult, TaskCatalog, TaskError, TaskSpec, DEFAULT_HORIZON};

/// Bumped whenever a change could alter digests or observations.
pub const ENGINE_VERSION: &str = concat!("varapps-", env!("CARGO_PKG_VERSION"));

fn default_seed() -> u64 {
    0
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

/// Everything needed to start an episode. Identical requests give identical
/// episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeRequest {
    pub task: String,
    #[serde(default)]
    pub variations: Vec<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub viewport: Viewport,
    #[serde(default = "ActionProfile::default")]
    pub profile: ActionProfile,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Base configuration as YAML text; the shipped default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
}

impl EpisodeRequest {
    pub fn new(task: impl Into<String>) -> Self {
        EpisodeRequest {
            task: task.into(),
            variations: Vec::new(),
            seed: 0,
            viewport: Viewport::default(),
            profile: ActionProfile::Full,
            horizon: DEFAULT_HORIZON,
            config: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("horizon must be at least 1")]
    BadHorizon,
    #[error("episode already finished ({0})")]
    Terminal(Status),
}

impl EnvError {
    /// Machine-readable code for wire errors.
    pub fn code(&self) -> &'static str {
        match self {
            EnvError::Task(TaskError::UnknownTask(_)) => "unknown_task",
            EnvError::Task(_) => "invalid_task",
            EnvError::Config(ConfigError::UnknownVariation(_)) => "unknown_variation",
            EnvError::Config(_) => "invalid_config",
            EnvError::BadHorizon => "invalid_request",
            EnvError::Terminal(_) => "session_finished",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Succeeded,
    Exhausted,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Running => "running",
            Status::Succeeded => "succeeded",
            Status::Exhausted => "exhausted",
        })
    }
}

/// How the raw action text parsed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ParseOutcome {
    Ok { action: String },
    Invalid { category: InvalidCategory, detail: String },
}

impl ParseOutcome {
    pub fn is_invalid(&self) -> bool {
        matches!(self, ParseOutcome::Invalid { .. })
    }
}

/// Result of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub step: usize,
    pub action_text: String,
    pub parse: ParseOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection: Option<Rejection>,
    pub route: Route,
    pub digest: String,
    pub reward: RewardResult,
    pub status: Status,
}

/// Final outcome of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub task: String,
    pub status: Status,
    pub steps: usize,
    pub horizon: usize,
    /// Best reward seen; the completing step's reward once succeeded.
    pub reward: RewardResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub achieved_at: Option<usize>,
    pub digest: String,
}

/// A running episode. Not thread-safe by itself; callers serialize access.
#[derive(Debug, Clone)]
pub struct Episode {
    request: EpisodeRequest,
    config: AppConfigSet,
    task: TaskSpec,
    evaluator: Evaluator,
    goal: String,
    s0: EnvState,
    state: EnvState,
    obs: Observation,
    steps: usize,
    status: Status,
    best: RewardResult,
    achieved_at: Option<usize>,
}

impl Episode {
    pub fn new(request: EpisodeRequest, catalog: &Catalog, tasks: &TaskCatalog) -> Result<Self, EnvError> {
        if request.horizon == 0 {
            return Err(EnvError::BadHorizon);
        }
        let task = tasks.get(&request.task)?.clone();
        let base = match &request.config {
            Some(text) => load_config(text)?,
            None => crate::config::default_config(),
        };
        let config = catalog.apply_ids(&base, &request.variations)?;
        let s0 = crate::config::init_state(&config);
        let evaluator = Evaluator::new(&task, &s0)?;
        let goal = task.sample_goal(request.seed, &s0)?;
        let obs = render(&s0, &config, request.viewport);
        let best = evaluator.evaluate(&s0);
        Ok(Episode {
            request,
            config,
            task,
            evaluator,
            goal,
            state: s0.clone(),
            s0,
            obs,
            steps: 0,
            status: Status::Running,
            best,
            achieved_at: None,
        })
    }

    pub fn request(&self) -> &EpisodeRequest {
        &self.request
    }

    pub fn config(&self) -> &AppConfigSet {
        &self.config
    }

    pub fn task(&self) -> &TaskSpec {
        &self.task
    }

    pub fn goal(&self) -> &str {
        &self.goal
    }

    pub fn initial_state(&self) -> &EnvState {
        &self.s0
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn observation(&self) -> &Observation {
        &self.obs
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn digest(&self) -> String {
        canonicalize(&self.state).digest()
    }

    /// Canonical YAML of the current state.
    pub fn state_yaml(&self) -> String {
        canonicalize(&self.state).to_yaml()
    }

    pub fn result(&self) -> EpisodeResult {
        EpisodeResult {
            task: self.task.id.clone(),
            status: self.status,
            steps: self.steps,
            horizon: self.request.horizon,
            reward: self.best,
            achieved_at: self.achieved_at,
            digest: self.digest(),
        }
    }

    /// Run one raw action through the pipeline. Invalid and rejected actions
    /// leave the state alone but still use up a step.
    pub fn act(&mut self, raw: &str) -> Result<StepResult, EnvError> {
        if self.status != Status::Running {
            return Err(EnvError::Terminal(self.status));
        }
        self.steps += 1;
        let mut control = None;
        let mut rejection = None;
        let parse = match parse_action(raw, self.request.profile) {
            Err(inv) => ParseOutcome::Invalid { category: inv.category, detail: inv.detail },
            Ok(action) => {
                let resolved = resolve(&self.obs, &self.state.nav, &action);
                let applied = match resolved {
                    Ok(c) => {
                        control = Some(c.to_string());
                        apply_control(&self.state, &c)
                    }
                    Err(r) if r.code == RejectCode::ExternalNavigation => {
                        // leaving the environment is recorded but still happens
                        let c = Control::Navigate(Route::External(r.detail.clone()));
                        control = Some(c.to_string());
                        let next = apply_control(&self.state, &c);
                        rejection = Some(r);
                        next
                    }
                    Err(r) => Err(r),
                };
                match applied {
                    Ok(next) => self.state = next,
                    Err(r) => rejection = Some(r),
                }
                ParseOutcome::Ok { action: action.to_string() }
            }
        };
        if !parse.is_invalid() {
            self.obs = render(&self.state, &self.config, self.request.viewport);
        }
        let canon = canonicalize(&self.state);
        let reward = self.evaluator.evaluate_canonical(&canon);
        if reward.reward > self.best.reward {
            self.best = reward;
        }
        if reward.success {
            self.best = reward;
            self.achieved_at = Some(self.steps);
            self.status = Status::Succeeded;
        } else if self.steps >= self.request.horizon {
            self.status = Status::Exhausted;
        }
        Ok(StepResult {
            step: self.steps,
            action_text: raw.to_string(),
            parse,
            control,
            rejection,
            route: self.state.nav.route.clone(),
            digest: canon.digest(),
            reward,
            status: self.status,
        })
    }
}

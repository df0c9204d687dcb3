//! Deterministic, configurable multi-app environment for UI agents.
//!
//! Six small apps share one [`EnvState`]. YAML configuration and named
//! variations define the initial state and the look of every page. Agents act
//! through text actions; rewards compare the final state against the state a
//! task should produce.

pub mod action;
pub mod analytics;
pub mod config;
pub mod env;
pub mod harness;
pub mod layout;
pub mod state;
pub mod tasks;
pub mod text;
pub mod yaml;

pub use action::{parse_action, Action, ActionProfile, InvalidAction};
pub use config::{default_config, init_state, AppConfigSet, Catalog, ConfigError, Variation};
pub use env::{Episode, EpisodeRequest, EpisodeResult, EnvError, ParseOutcome, Status, StepResult};
pub use harness::{RunSpec, TrajectoryRecord};
pub use layout::{Observation, Viewport};
pub use state::{apply_control, canonicalize, AppId, Control, EnvState, Route};
pub use tasks::{RewardResult, TaskCatalog, TaskSpec};

/// Engine identifier recorded in trajectories; replay refuses other versions.
pub const ENGINE_VERSION: &str = env::ENGINE_VERSION;

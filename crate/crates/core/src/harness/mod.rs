//! Experiment runs: matrices of (agent, task, variations, seed, viewport),
//! trajectory files and replay.

mod agents;

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::ActionProfile;
use crate::config::Catalog;
use crate::env::{
    EnvError, Episode, EpisodeRequest, EpisodeResult, Status, StepResult, ENGINE_VERSION,
};
use crate::layout::{Observation, Viewport};
use crate::tasks::{TaskCatalog, DEFAULT_HORIZON};

pub use agents::{
    builtin_agent, Agent, AgentKind, AgentView, ExternalAgent, LooperAgent, OracleAgent, RandomAgent,
};

/// Version of the trajectory line format.
pub const FORMAT_VERSION: u32 = 1;

/// File name of the merged trajectory file inside an output directory.
pub const TRAJECTORY_FILE: &str = "trajectories.traj.ndjson";

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub agent: String,
    pub task: String,
    #[serde(default)]
    pub variations: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub viewport: Viewport,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Action profile; derived from the agent when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ActionProfile>,
}

impl RunSpec {
    pub fn new(agent: &str, task: &str, variations: &[&str], seed: u64) -> Self {
        RunSpec {
            agent: agent.into(),
            task: task.into(),
            variations: variations.iter().map(|v| v.to_string()).collect(),
            seed,
            viewport: Viewport::default(),
            horizon: DEFAULT_HORIZON,
            profile: None,
        }
    }

    pub fn profile(&self) -> ActionProfile {
        self.profile.unwrap_or_else(|| {
            self.agent.parse::<AgentKind>().map(|k| k.default_profile()).unwrap_or_default()
        })
    }

    pub fn request(&self) -> EpisodeRequest {
        EpisodeRequest {
            task: self.task.clone(),
            variations: self.variations.clone(),
            seed: self.seed,
            viewport: self.viewport,
            profile: self.profile(),
            horizon: self.horizon,
            config: None,
        }
    }
}

/// One variation set in a product matrix: a single id or a list of ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VariationSet {
    One(String),
    Many(Vec<String>),
}

impl VariationSet {
    fn ids(&self) -> Vec<String> {
        match self {
            VariationSet::One(v) => vec![v.clone()],
            VariationSet::Many(v) => v.clone(),
        }
    }
}

/// Cartesian product form of a matrix file. `tasks: [all]` means every
/// single-goal task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductMatrix {
    pub agents: Vec<String>,
    pub tasks: Vec<String>,
    #[serde(default = "default_variation_sets")]
    pub variations: Vec<VariationSet>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_viewports")]
    pub viewports: Vec<Viewport>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

fn default_variation_sets() -> Vec<VariationSet> {
    vec![VariationSet::Many(Vec::new())]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_viewports() -> Vec<Viewport> {
    vec![Viewport::default()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixFile {
    List(Vec<RunSpec>),
    Product(ProductMatrix),
}

impl MatrixFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_yaml::from_str(text).map_err(|e| format!("matrix file: {e}"))
    }

    /// Expanded run list; product order is agent, task, variation set, seed,
    /// viewport.
    pub fn specs(&self, tasks: &TaskCatalog) -> Vec<RunSpec> {
        match self {
            MatrixFile::List(v) => v.clone(),
            MatrixFile::Product(p) => {
                let task_ids: Vec<String> = if p.tasks.iter().any(|t| t == "all") {
                    tasks.single_goal().map(|t| t.id.clone()).collect()
                } else {
                    p.tasks.clone()
                };
                let mut out = Vec::new();
                for agent in &p.agents {
                    for task in &task_ids {
                        for vs in &p.variations {
                            for seed in &p.seeds {
                                for vp in &p.viewports {
                                    out.push(RunSpec {
                                        agent: agent.clone(),
                                        task: task.clone(),
                                        variations: vs.ids(),
                                        seed: *seed,
                                        viewport: *vp,
                                        horizon: p.horizon,
                                        profile: None,
                                    });
                                }
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    Connect,
    Protocol,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
#[error("{category:?}: {message}")]
pub struct RunError {
    pub category: ErrorCategory,
    pub message: String,
}

impl RunError {
    pub fn new(category: ErrorCategory, message: impl Into<String>) -> Self {
        RunError { category, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorCategory::Internal, message)
    }
}

impl From<EnvError> for RunError {
    fn from(e: EnvError) -> Self {
        RunError::new(ErrorCategory::Protocol, format!("{}: {e}", e.code()))
    }
}

/// What an episode looks like right after it starts.
#[derive(Debug, Clone, PartialEq)]
pub struct Started {
    pub goal: String,
    pub digest: String,
    pub observation: Observation,
}

/// Where episodes run: in this process or behind the HTTP service.
pub trait Backend {
    fn start(&mut self, request: &EpisodeRequest) -> Result<Started, RunError>;
    fn step(&mut self, action: &str) -> Result<(StepResult, Observation), RunError>;
    fn finish(&mut self) -> Result<EpisodeResult, RunError>;
}

/// Runs episodes in the calling thread.
#[derive(Debug, Clone)]
pub struct InProcess {
    catalog: Catalog,
    tasks: TaskCatalog,
    episode: Option<Episode>,
}

impl InProcess {
    pub fn new(catalog: Catalog, tasks: TaskCatalog) -> Self {
        InProcess { catalog, tasks, episode: None }
    }

    pub fn episode(&self) -> Option<&Episode> {
        self.episode.as_ref()
    }

    fn current(&mut self) -> Result<&mut Episode, RunError> {
        self.episode.as_mut().ok_or_else(|| RunError::internal("no episode started"))
    }
}

impl Default for InProcess {
    fn default() -> Self {
        InProcess::new(Catalog::all(), TaskCatalog::shipped())
    }
}

impl Backend for InProcess {
    fn start(&mut self, request: &EpisodeRequest) -> Result<Started, RunError> {
        let ep = Episode::new(request.clone(), &self.catalog, &self.tasks)?;
        let started = Started {
            goal: ep.goal().to_string(),
            digest: ep.digest(),
            observation: ep.observation().clone(),
        };
        self.episode = Some(ep);
        Ok(started)
    }

    fn step(&mut self, action: &str) -> Result<(StepResult, Observation), RunError> {
        let ep = self.current()?;
        let r = ep.act(action)?;
        Ok((r, ep.observation().clone()))
    }

    fn finish(&mut self) -> Result<EpisodeResult, RunError> {
        Ok(self.current()?.result())
    }
}

/// One line of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub format_version: u32,
    pub engine_version: String,
    /// Position of the spec in its matrix.
    pub index: usize,
    pub spec: RunSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_digest: Option<String>,
    #[serde(default)]
    pub steps: Vec<StepResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<EpisodeResult>,
    pub duration_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RunError>,
}

impl TrajectoryRecord {
    fn blank(index: usize, spec: &RunSpec) -> Self {
        TrajectoryRecord {
            format_version: FORMAT_VERSION,
            engine_version: ENGINE_VERSION.to_string(),
            index,
            spec: spec.clone(),
            goal: None,
            initial_digest: None,
            steps: Vec::new(),
            result: None,
            duration_ms: 0,
            error: None,
        }
    }

    pub fn reward(&self) -> f64 {
        self.result.as_ref().map_or(0.0, |r| r.reward.reward)
    }

    pub fn succeeded(&self) -> bool {
        self.result.as_ref().is_some_and(|r| r.status == Status::Succeeded)
    }

    /// Digest after each step, starting with the initial state.
    pub fn digest_chain(&self) -> Vec<&str> {
        self.initial_digest
            .iter()
            .map(String::as_str)
            .chain(self.steps.iter().map(|s| s.digest.as_str()))
            .collect()
    }

    pub fn action_texts(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.action_text.as_str()).collect()
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

pub type AgentFactory<'a> = dyn Fn(&RunSpec) -> Result<Box<dyn Agent>, String> + Sync + 'a;
pub type BackendFactory<'a> = dyn Fn() -> Box<dyn Backend> + Sync + 'a;

fn drive(
    rec: &mut TrajectoryRecord,
    spec: &RunSpec,
    backend: &mut dyn Backend,
    agents: &AgentFactory<'_>,
) -> Result<(), RunError> {
    let mut agent = agents(spec).map_err(RunError::internal)?;
    let started = backend.start(&spec.request())?;
    rec.goal = Some(started.goal.clone());
    rec.initial_digest = Some(started.digest);
    let mut obs = started.observation;
    loop {
        let view = AgentView {
            goal: &started.goal,
            observation: &obs,
            step: rec.steps.len() + 1,
            last: rec.steps.last(),
        };
        let action = agent.act(&view).map_err(RunError::internal)?;
        let (step, next) = backend.step(&action)?;
        let done = step.status != Status::Running;
        rec.steps.push(step);
        obs = next;
        if done {
            break;
        }
    }
    rec.result = Some(backend.finish()?);
    Ok(())
}

fn panic_message(p: &(dyn std::any::Any + Send)) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// Run one spec. Failures, including panics in the agent, become an error
/// record instead of propagating.
pub fn run_one(
    index: usize,
    spec: &RunSpec,
    backend: &mut dyn Backend,
    agents: &AgentFactory<'_>,
) -> TrajectoryRecord {
    let t0 = Instant::now();
    let mut rec = TrajectoryRecord::blank(index, spec);
    let outcome = catch_unwind(AssertUnwindSafe(|| drive(&mut rec, spec, backend, agents)));
    let err = match outcome {
        Ok(Ok(())) => None,
        Ok(Err(e)) => Some(e),
        Err(p) => Some(RunError::internal(format!("agent panicked: {}", panic_message(p.as_ref())))),
    };
    if let Some(e) = err {
        rec.error = Some(e);
        rec.result = None;
    }
    rec.duration_ms = t0.elapsed().as_millis() as u64;
    rec
}

#[derive(Debug, Clone)]
pub struct MatrixOptions {
    pub parallelism: usize,
    /// Directory for part files and the merged trajectory file.
    pub out_dir: Option<PathBuf>,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        MatrixOptions { parallelism: 1, out_dir: None }
    }
}

fn part_path(dir: &Path, worker: usize) -> PathBuf {
    dir.join(format!("part-{worker:03}.traj.ndjson"))
}

/// Run every spec on a pool of `parallelism` workers. Each worker appends
/// finished records to its own part file; at the end the parts are merged
/// into one file in spec order and removed. The returned records are in
/// spec order too.
pub fn run_matrix(
    specs: &[RunSpec],
    opts: &MatrixOptions,
    backends: &BackendFactory<'_>,
    agents: &AgentFactory<'_>,
) -> io::Result<Vec<TrajectoryRecord>> {
    let workers = opts.parallelism.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(io::Error::other)?;
    let parts: Vec<Mutex<Option<BufWriter<File>>>> = match &opts.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            (0..workers)
                .map(|w| File::create(part_path(dir, w)).map(|f| Mutex::new(Some(BufWriter::new(f)))))
                .collect::<io::Result<_>>()?
        }
        None => Vec::new(),
    };
    let records: Vec<io::Result<TrajectoryRecord>> = pool.install(|| {
        specs
            .par_iter()
            .enumerate()
            .map(|(i, spec)| {
                let mut backend = backends();
                let rec = run_one(i, spec, backend.as_mut(), agents);
                let w = rayon::current_thread_index().unwrap_or(0);
                if let Some(slot) = parts.get(w) {
                    let mut guard = slot.lock().unwrap_or_else(|e| e.into_inner());
                    if let Some(out) = guard.as_mut() {
                        writeln!(out, "{}", rec.to_line())?;
                        out.flush()?;
                    }
                }
                Ok(rec)
            })
            .collect()
    });
    let records = records.into_iter().collect::<io::Result<Vec<_>>>()?;
    if let Some(dir) = &opts.out_dir {
        drop(parts);
        merge_parts(dir, workers)?;
    }
    Ok(records)
}

fn merge_parts(dir: &Path, workers: usize) -> io::Result<()> {
    let mut all = Vec::new();
    for w in 0..workers {
        let p = part_path(dir, w);
        all.extend(read_trajectories(&p)?);
    }
    all.sort_by_key(|r| r.index);
    write_trajectories(&dir.join(TRAJECTORY_FILE), &all)?;
    for w in 0..workers {
        fs::remove_file(part_path(dir, w))?;
    }
    Ok(())
}

pub fn write_trajectories(path: &Path, records: &[TrajectoryRecord]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        writeln!(out, "{}", r.to_line())?;
    }
    out.flush()
}

pub fn read_trajectories(path: &Path) -> io::Result<Vec<TrajectoryRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| {
            io::Error::new(io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), n + 1))
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Every `*.traj.ndjson` file under `dir`, in file-name order.
pub fn read_trajectory_dir(dir: &Path) -> io::Result<Vec<TrajectoryRecord>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".traj.ndjson"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        out.extend(read_trajectories(&f)?);
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("record was produced by {recorded} (format {format}); this is {ENGINE_VERSION} (format {FORMAT_VERSION})")]
    VersionMismatch { recorded: String, format: u32 },
    #[error("record has no trajectory to replay: {0}")]
    Incomplete(String),
    #[error(transparent)]
    Run(#[from] RunError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    /// 0 is the initial state.
    pub step: usize,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayVerdict {
    pub index: usize,
    pub steps_checked: usize,
    pub first_divergence: Option<Divergence>,
}

impl ReplayVerdict {
    pub fn is_exact(&self) -> bool {
        self.first_divergence.is_none()
    }
}

/// Re-execute the record's action texts from the initial state and compare
/// every digest.
pub fn replay(record: &TrajectoryRecord, backend: &mut dyn Backend) -> Result<ReplayVerdict, ReplayError> {
    if record.engine_version != ENGINE_VERSION || record.format_version != FORMAT_VERSION {
        return Err(ReplayError::VersionMismatch {
            recorded: record.engine_version.clone(),
            format: record.format_version,
        });
    }
    let initial = record
        .initial_digest
        .as_deref()
        .ok_or_else(|| ReplayError::Incomplete(format!("run {} never started", record.index)))?;
    let started = backend.start(&record.spec.request())?;
    let mut verdict = ReplayVerdict { index: record.index, steps_checked: 0, first_divergence: None };
    let diverge = |step: usize, expected: &str, actual: &str| {
        (expected != actual)
            .then(|| Divergence { step, expected: expected.to_string(), actual: actual.to_string() })
    };
    verdict.first_divergence = diverge(0, initial, &started.digest);
    for s in &record.steps {
        if verdict.first_divergence.is_some() {
            break;
        }
        let actual = match backend.step(&s.action_text) {
            Ok((r, _)) => r.digest,
            Err(e) => format!("error: {e}"),
        };
        verdict.steps_checked += 1;
        verdict.first_divergence = diverge(s.step, &s.digest, &actual);
    }
    Ok(verdict)
}

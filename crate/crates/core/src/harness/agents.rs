//! Scripted reference agents.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::action::{quote, ActionProfile};
use crate::config::Catalog;
use crate::env::{Episode, StepResult};
use crate::layout::{Observation, Role, UiNode};
use crate::state::Control;
use crate::tasks::{oracle_plan, TaskCatalog};

use super::RunSpec;

/// What an agent sees before choosing its next action.
#[derive(Debug, Clone, Copy)]
pub struct AgentView<'a> {
    pub goal: &'a str,
    pub observation: &'a Observation,
    /// 1-based index of the step about to be taken.
    pub step: usize,
    pub last: Option<&'a StepResult>,
}

pub trait Agent: Send {
    /// Next raw action text. An error ends the run with an error record.
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, String>;
}

/// Built-in agent ids: `oracle`, `oracle-visual`, `random`, `looper[:PERIOD]`
/// and `external:COMMAND`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentKind {
    Oracle,
    OracleVisual,
    Random,
    Looper { period: usize },
    External { command: String },
}

impl AgentKind {
    /// Profile used when a run spec does not name one.
    pub fn default_profile(&self) -> ActionProfile {
        match self {
            AgentKind::OracleVisual => ActionProfile::VisualOnly,
            _ => ActionProfile::Full,
        }
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        Ok(match (head, arg) {
            ("oracle", None) => AgentKind::Oracle,
            ("oracle-visual", None) => AgentKind::OracleVisual,
            ("random", None) => AgentKind::Random,
            ("looper", None) => AgentKind::Looper { period: 1 },
            ("looper", Some(p)) => AgentKind::Looper {
                period: p.parse().ok().filter(|p| *p >= 1).ok_or_else(|| format!("bad looper period `{p}`"))?,
            },
            ("external", Some(c)) if !c.trim().is_empty() => AgentKind::External { command: c.to_string() },
            _ => return Err(format!("unknown agent `{s}`")),
        })
    }
}

/// Construct the built-in agent named by `spec.agent`.
pub fn builtin_agent(spec: &RunSpec, catalog: &Catalog, tasks: &TaskCatalog) -> Result<Box<dyn Agent>, String> {
    let kind: AgentKind = spec.agent.parse()?;
    Ok(match kind {
        AgentKind::Oracle | AgentKind::OracleVisual => {
            let ep = Episode::new(spec.request(), catalog, tasks).map_err(|e| e.to_string())?;
            let plan = oracle_plan(ep.task(), ep.initial_state()).map_err(|e| e.to_string())?;
            Box::new(OracleAgent::new(plan, kind == AgentKind::OracleVisual))
        }
        AgentKind::Random => Box::new(RandomAgent::new(spec.seed, &spec.task)),
        AgentKind::Looper { period } => Box::new(LooperAgent::new(period)),
        AgentKind::External { command } => Box::new(ExternalAgent::spawn(&command)?),
    })
}

fn click(bid: &str) -> String {
    format!("click({})", quote(bid))
}

/// Follows the task's control plan by finding the element that triggers each
/// control. The visual variant uses coordinates and the keyboard only.
#[derive(Debug)]
pub struct OracleAgent {
    plan: Vec<Control>,
    cursor: usize,
    visual: bool,
    queue: VecDeque<String>,
}

impl OracleAgent {
    pub fn new(plan: Vec<Control>, visual: bool) -> Self {
        OracleAgent { plan, cursor: 0, visual, queue: VecDeque::new() }
    }

    fn target<'a>(obs: &'a Observation, c: &Control) -> Option<&'a UiNode> {
        let nodes = obs.nodes();
        match c {
            Control::SetField { field, .. } => nodes.into_iter().find(|n| n.field == Some(*field)),
            c => nodes.into_iter().find(|n| n.control.as_ref() == Some(c)),
        }
    }

    /// Scroll action that brings `node` into view, if it is not visible.
    fn reveal(obs: &Observation, node: &UiNode) -> Option<String> {
        if obs.is_visible(node) {
            let (_, cy) = node.bbox.center();
            if cy >= obs.scroll_offset && cy < obs.scroll_offset + obs.viewport.height {
                return None;
            }
        }
        let dy = obs.scroll_to_show(node) as i64 - obs.scroll_offset as i64;
        Some(format!("scroll(0, {dy})"))
    }

    fn point(obs: &Observation, node: &UiNode) -> (u32, u32) {
        let (cx, cy) = node.bbox.center();
        (cx, cy - obs.scroll_offset)
    }
}

impl Agent for OracleAgent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, String> {
        let obs = view.observation;
        loop {
            if let Some(a) = self.queue.pop_front() {
                return Ok(a);
            }
            let Some(c) = self.plan.get(self.cursor) else {
                return Ok("scroll(0, 0)".into());
            };
            if matches!(c, Control::Navigate(r) if *r == obs.route) {
                self.cursor += 1;
                continue;
            }
            let Some(node) = Self::target(obs, c) else {
                // plan and page disagree; idle until the horizon
                return Ok("scroll(0, 0)".into());
            };
            if !self.visual {
                self.cursor += 1;
                return Ok(match c {
                    Control::SetField { value, .. } => format!("fill({}, {})", quote(&node.bid), quote(value)),
                    _ => click(&node.bid),
                });
            }
            if let Some(scroll) = Self::reveal(obs, node) {
                return Ok(scroll);
            }
            self.cursor += 1;
            let (x, y) = Self::point(obs, node);
            self.queue.push_back(format!("mouse_click({x}, {y})"));
            if let Control::SetField { value, .. } = c {
                if node.value.as_deref().is_some_and(|v| !v.is_empty()) {
                    self.queue.push_back("keyboard_press('ControlOrMeta+a')".into());
                }
                self.queue.push_back(format!("keyboard_type({})", quote(value)));
            }
        }
    }
}

/// Uniformly random element actions, seeded per (seed, task).
#[derive(Debug)]
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

const RANDOM_WORDS: [&str; 5] = ["test", "hello", "Buy milk", "2025-07-22", "x"];

impl RandomAgent {
    pub fn new(seed: u64, task: &str) -> Self {
        // FNV-1a over the task id keeps streams distinct per task
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in task.bytes() {
            h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
        }
        RandomAgent { rng: ChaCha8Rng::seed_from_u64(seed ^ h) }
    }
}

impl Agent for RandomAgent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, String> {
        let nodes = view.observation.interactive();
        let roll: f64 = self.rng.gen();
        if nodes.is_empty() || roll < 0.05 {
            return Ok("go_back()".into());
        }
        if roll < 0.15 {
            let dy = if self.rng.gen_bool(0.5) { 200 } else { -200 };
            return Ok(format!("scroll(0, {dy})"));
        }
        let node = nodes.choose(&mut self.rng).expect("non-empty");
        if node.role == Role::Textbox {
            let word = RANDOM_WORDS.choose(&mut self.rng).expect("non-empty");
            return Ok(format!("fill({}, {})", quote(&node.bid), quote(word)));
        }
        Ok(click(&node.bid))
    }
}

/// Clicks the first `period` interactive elements of the first page, over
/// and over.
#[derive(Debug)]
pub struct LooperAgent {
    period: usize,
    cycle: Vec<String>,
    next: usize,
}

impl LooperAgent {
    pub fn new(period: usize) -> Self {
        LooperAgent { period: period.max(1), cycle: Vec::new(), next: 0 }
    }
}

impl Agent for LooperAgent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, String> {
        if self.cycle.is_empty() {
            let nodes = view.observation.interactive();
            self.cycle = (0..self.period)
                .map(|i| match nodes.get(i % nodes.len().max(1)) {
                    Some(n) => click(&n.bid),
                    None => "scroll(0, 0)".into(),
                })
                .collect();
        }
        let a = self.cycle[self.next % self.cycle.len()].clone();
        self.next += 1;
        Ok(a)
    }
}

/// One JSON object per line on the child's stdin; one action per line back.
#[derive(Serialize)]
struct ExternalRequest<'a> {
    goal: &'a str,
    url: &'a str,
    step: usize,
    ax_tree: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    last_error: Option<String>,
}

/// A child process that chooses actions. It is started with `sh -c`.
#[derive(Debug)]
pub struct ExternalAgent {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl ExternalAgent {
    pub fn spawn(command: &str) -> Result<Self, String> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| format!("cannot start `{command}`: {e}"))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ExternalAgent { child, stdin, stdout })
    }
}

impl Agent for ExternalAgent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, String> {
        let last_error = view.last.and_then(|l| match (&l.parse, &l.rejection) {
            (crate::env::ParseOutcome::Invalid { category, detail }, _) => Some(format!("{category}: {detail}")),
            (_, Some(r)) => Some(r.to_string()),
            _ => None,
        });
        let req = ExternalRequest {
            goal: view.goal,
            url: &view.observation.url,
            step: view.step,
            ax_tree: &view.observation.ax_tree,
            last_error,
        };
        let line = serde_json::to_string(&req).map_err(|e| e.to_string())?;
        writeln!(self.stdin, "{line}").and_then(|_| self.stdin.flush()).map_err(|e| format!("agent stdin: {e}"))?;
        let mut reply = String::new();
        let n = self.stdout.read_line(&mut reply).map_err(|e| format!("agent stdout: {e}"))?;
        if n == 0 {
            return Err("agent closed its output".into());
        }
        Ok(reply.trim_end_matches(['\r', '\n']).to_string())
    }
}

impl Drop for ExternalAgent {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

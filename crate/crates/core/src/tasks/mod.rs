//! Task catalog, target states and rewards.
//!
//! A task describes its goal as a list of [`Change`]s against the episode's
//! initial state. The target state is that initial state with the changes
//! applied; the reward compares full canonical states, so a side effect in
//! any app costs the whole reward.

mod oracle;

use std::collections::BTreeMap;
use std::fmt;

use chrono::Datelike;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{
    canonicalize, join_path, CalendarEvent, CanonicalState, CartItem, Direction, EnvState,
    FileNode, Message, NodeKind, Route, SavedPlace, TodoItem,
};

pub use oracle::oracle_plan;

/// Default action budget per episode.
pub const DEFAULT_HORIZON: usize = 30;

/// Ids of the single-goal tasks, in catalog order.
pub const SINGLE_GOAL_TASKS: [&str; 15] = [
    "Add2CartASingleItemTask",
    "AddEventTask",
    "AddFiles2CodeEditorTask",
    "AddItem2ToDoListTask",
    "DuplicateEventTask",
    "ForwardMessageTask",
    "MarkItemAsDoneTask",
    "MessageXTask",
    "NavigateToPageTask",
    "RemoveEventTask",
    "RemoveFromCodeEditorTask",
    "RemoveItemFromToDoListTask",
    "RemoveItemsFromCartTask",
    "RemoveSavedPlace",
    "SavePlace",
];

const TASKS_YAML: &str = include_str!("../../data/tasks.yaml");

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("task catalog: {0}")]
    Parse(String),
    #[error("task `{task}`: {reason}")]
    Invalid { task: String, reason: String },
}

/// One required change to the initial state. String fields may contain
/// `{...}` references into the initial state (see [`expand`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Change {
    TodoAdd { text: String },
    TodoMarkDone { index: usize },
    TodoRemove { index: usize },
    EventAdd { title: String, date: String },
    EventDuplicate { index: usize, shift_years: i32 },
    EventRemove { index: usize },
    MessageSend { peer: String, body: String },
    MessageForward { from: String, to: String },
    PlaceAdd { query: String },
    PlaceRemove { index: usize },
    FileCreate { parent: String, name: String },
    FileRemove { path: String },
    CartAdd {
        product_id: String,
        #[serde(default)]
        options: BTreeMap<String, String>,
        #[serde(default = "one")]
        quantity: u32,
    },
    CartClear {},
    Navigate { route: Route },
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: String,
    pub relevant_apps: Vec<Route>,
    pub goal_prompts: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected_diff: Vec<Change>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<Vec<Change>>,
}

impl TaskSpec {
    pub fn is_multi_step(&self) -> bool {
        !self.steps.is_empty()
    }

    pub fn total_steps(&self) -> usize {
        if self.is_multi_step() {
            self.steps.len()
        } else {
            1
        }
    }

    /// Only the navigation task is judged on where the user ends up.
    pub fn compares_route(&self) -> bool {
        self.all_changes().any(|c| matches!(c, Change::Navigate { .. }))
    }

    pub fn all_changes(&self) -> impl Iterator<Item = &Change> {
        self.expected_diff.iter().chain(self.steps.iter().flatten())
    }

    /// The state the task asks for, given the episode's initial state.
    pub fn target_state(&self, s0: &EnvState) -> Result<EnvState, TaskError> {
        let mut s = s0.clone();
        for c in self.all_changes() {
            apply_change(&mut s, s0, c).map_err(|reason| self.invalid(reason))?;
        }
        Ok(s)
    }

    /// Goal prompt chosen by `seed`, with references filled in from `s0`.
    pub fn sample_goal(&self, seed: u64, s0: &EnvState) -> Result<String, TaskError> {
        let k = self.goal_prompts.len() as u64;
        if k == 0 {
            return Err(self.invalid("no goal prompts".into()));
        }
        let raw = &self.goal_prompts[(seed % k) as usize];
        expand(raw, s0).map_err(|r| self.invalid(r))
    }

    /// Structural checks, plus target-state validity against `s0`.
    pub fn validate(&self, s0: &EnvState) -> Result<(), TaskError> {
        if self.goal_prompts.len() < 2 {
            return Err(self.invalid("needs at least two goal prompts".into()));
        }
        if self.relevant_apps.is_empty() {
            return Err(self.invalid("relevant_apps is empty".into()));
        }
        if self.expected_diff.is_empty() == self.steps.is_empty() {
            return Err(self.invalid("exactly one of expected_diff and steps must be given".into()));
        }
        if self.steps.iter().any(Vec::is_empty) {
            return Err(self.invalid("empty step".into()));
        }
        for p in &self.goal_prompts {
            expand(p, s0).map_err(|r| self.invalid(r))?;
        }
        let target = self.target_state(s0)?;
        let v = target.violations();
        if !v.is_empty() {
            return Err(self.invalid(format!("target state is invalid: {}", v.join("; "))));
        }
        if !self.compares_route() && canonicalize(&target).same_data(&canonicalize(s0)) {
            return Err(self.invalid("target equals the initial state".into()));
        }
        Ok(())
    }

    fn invalid(&self, reason: String) -> TaskError {
        TaskError::Invalid { task: self.id.clone(), reason }
    }
}

/// Fill `{kind.key.field}` references from `state`. Supported references:
/// `todo.N.text`, `event.N.title`, `event.N.date`, `place.N.name` and
/// `product.ID.name`.
pub fn expand(template: &str, state: &EnvState) -> Result<String, String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let end = rest[start..]
            .find('}')
            .ok_or_else(|| format!("unclosed reference in {template:?}"))?
            + start;
        out.push_str(&lookup(&rest[start + 1..end], state)?);
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn lookup(reference: &str, s: &EnvState) -> Result<String, String> {
    let missing = || format!("reference `{{{reference}}}` does not resolve");
    let (kind, rest) = reference.split_once('.').ok_or_else(missing)?;
    let (key, field) = rest.rsplit_once('.').ok_or_else(missing)?;
    let idx = || key.parse::<usize>().map_err(|_| missing());
    let value = match (kind, field) {
        ("todo", "text") => s.todos.get(idx()?).map(|t| t.text.clone()),
        ("event", "title") => s.calendar.get(idx()?).map(|e| e.title.clone()),
        ("event", "date") => s.calendar.get(idx()?).map(|e| e.date.to_string()),
        ("place", "name") => s.places.get(idx()?).map(|p| p.name.clone()),
        ("product", "name") => s.product(key).map(|p| p.name.clone()),
        _ => None,
    };
    value.ok_or_else(missing)
}

/// Apply one change to `s`. Indices and references resolve against `s0`, so
/// changes can be applied in any order without shifting each other's
/// targets.
pub fn apply_change(s: &mut EnvState, s0: &EnvState, change: &Change) -> Result<(), String> {
    let text = |t: &str| expand(t, s0).map(|v| v.trim().to_string());
    match change {
        Change::TodoAdd { text: t } => {
            s.todos.push(TodoItem { text: text(t)?, done: false });
        }
        Change::TodoMarkDone { index } => {
            let item = s0.todos.get(*index).ok_or("todo index out of range")?;
            let pos = s.todos.iter().position(|t| t == item).ok_or("todo no longer present")?;
            s.todos[pos].done = true;
        }
        Change::TodoRemove { index } => {
            let item = s0.todos.get(*index).ok_or("todo index out of range")?;
            let pos = s.todos.iter().position(|t| t == item).ok_or("todo no longer present")?;
            s.todos.remove(pos);
        }
        Change::EventAdd { title, date } => {
            let date = text(date)?
                .parse()
                .map_err(|_| format!("bad event date {date:?}"))?;
            s.calendar.push(CalendarEvent {
                title: text(title)?,
                date,
                description: String::new(),
                url: None,
                location: None,
                invitees: None,
            });
        }
        Change::EventDuplicate { index, shift_years } => {
            let mut e = s0.calendar.get(*index).ok_or("event index out of range")?.clone();
            e.date = shift_date(e.date, *shift_years)?;
            s.calendar.push(e);
        }
        Change::EventRemove { index } => {
            let e = s0.calendar.get(*index).ok_or("event index out of range")?;
            let pos = s.calendar.iter().position(|x| x == e).ok_or("event no longer present")?;
            s.calendar.remove(pos);
        }
        Change::MessageSend { peer, body } => {
            push_sent(s, &text(peer)?, text(body)?)?;
        }
        Change::MessageForward { from, to } => {
            let body = s0
                .last_received(&text(from)?)
                .ok_or_else(|| format!("no message received from {from}"))?
                .body
                .clone();
            push_sent(s, &text(to)?, body)?;
        }
        Change::PlaceAdd { query } => {
            let q = text(query)?;
            s.places.push(SavedPlace { name: q.clone(), query: q });
        }
        Change::PlaceRemove { index } => {
            let p = s0.places.get(*index).ok_or("place index out of range")?;
            let pos = s.places.iter().position(|x| x == p).ok_or("place no longer present")?;
            s.places.remove(pos);
        }
        Change::FileCreate { parent, name } => {
            let parent = text(parent)?;
            let folder = s
                .files
                .find_mut(&parent)
                .filter(|n| n.kind == NodeKind::Folder)
                .ok_or_else(|| format!("no folder `{parent}`"))?;
            folder.children.push(FileNode { name: text(name)?, kind: NodeKind::File, children: Vec::new() });
        }
        Change::FileRemove { path } => {
            let path = text(path)?;
            s.files.remove(&path).ok_or_else(|| format!("no entry `{path}`"))?;
        }
        Change::CartAdd { product_id, options, quantity } => {
            match s.cart.iter_mut().find(|c| c.product_id == *product_id && c.options == *options) {
                Some(line) => line.quantity += quantity,
                None => s.cart.push(CartItem {
                    product_id: product_id.clone(),
                    options: options.clone(),
                    quantity: *quantity,
                }),
            }
        }
        Change::CartClear {} => s.cart.clear(),
        Change::Navigate { route } => s.nav.route = route.clone(),
    }
    Ok(())
}

fn shift_date(d: chrono::NaiveDate, years: i32) -> Result<chrono::NaiveDate, String> {
    d.with_year(d.year() + years)
        .ok_or_else(|| format!("{d} has no counterpart {years} year(s) later"))
}

fn push_sent(s: &mut EnvState, peer: &str, body: String) -> Result<(), String> {
    let convo = s
        .conversations
        .get_mut(peer)
        .ok_or_else(|| format!("no conversation with {peer}"))?;
    let seq = convo.last().map_or(1, |m| m.seq + 1);
    convo.push(Message { peer: peer.to_string(), direction: Direction::Sent, body, seq });
    Ok(())
}

/// Reward for one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardResult {
    pub reward: f64,
    pub success: bool,
    pub steps_completed: usize,
    pub total_steps: usize,
    pub at_least_one_step: bool,
}

impl RewardResult {
    fn from_steps(done: usize, total: usize) -> Self {
        RewardResult {
            reward: done as f64 / total as f64,
            success: done == total,
            steps_completed: done,
            total_steps: total,
            at_least_one_step: done >= 1,
        }
    }
}

/// Precomputed targets for one (task, initial state) pair.
#[derive(Debug, Clone)]
pub struct Evaluator {
    compares_route: bool,
    total: usize,
    /// Canonical target per subset of steps, largest subsets first. For a
    /// single-goal task this is one entry covering the whole diff.
    targets: Vec<(usize, CanonicalState)>,
}

impl Evaluator {
    pub fn new(task: &TaskSpec, s0: &EnvState) -> Result<Self, TaskError> {
        let mut targets = Vec::new();
        if task.is_multi_step() {
            let k = task.steps.len();
            if k > 16 {
                return Err(task.invalid("too many steps".into()));
            }
            for mask in 1u32..(1 << k) {
                let mut s = s0.clone();
                for (i, step) in task.steps.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        for c in step {
                            apply_change(&mut s, s0, c).map_err(|r| task.invalid(r))?;
                        }
                    }
                }
                targets.push((mask.count_ones() as usize, canonicalize(&s)));
            }
            targets.sort_by_key(|t| std::cmp::Reverse(t.0));
        } else {
            targets.push((1, canonicalize(&task.target_state(s0)?)));
        }
        Ok(Evaluator { compares_route: task.compares_route(), total: task.total_steps(), targets })
    }

    pub fn evaluate(&self, st: &EnvState) -> RewardResult {
        self.evaluate_canonical(&canonicalize(st))
    }

    pub fn evaluate_canonical(&self, c: &CanonicalState) -> RewardResult {
        let done = self
            .targets
            .iter()
            .find(|(_, t)| if self.compares_route { c == t } else { c.same_data(t) })
            .map_or(0, |(n, _)| *n);
        RewardResult::from_steps(done, self.total)
    }
}

/// Reward of `st` for `task` started from `s0`.
pub fn evaluate(s0: &EnvState, st: &EnvState, task: &TaskSpec) -> Result<RewardResult, TaskError> {
    Ok(Evaluator::new(task, s0)?.evaluate(st))
}

/// Result of a whole episode under first-hit semantics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub result: RewardResult,
    /// Step at which the task was first completed.
    pub achieved_at: Option<usize>,
    /// Steps consumed.
    pub steps: usize,
}

/// Score a trajectory of states `[s0, s1, ...]`. Scoring stops at the first
/// success or after `horizon` steps; the reported reward is the best seen.
pub fn episode_outcome(
    states: &[EnvState],
    task: &TaskSpec,
    horizon: usize,
) -> Result<EpisodeOutcome, TaskError> {
    let s0 = states.first().ok_or_else(|| task.invalid("empty trajectory".into()))?;
    let ev = Evaluator::new(task, s0)?;
    let mut best = ev.evaluate(s0);
    let mut steps = 0;
    for (t, st) in states.iter().enumerate().skip(1).take(horizon) {
        steps = t;
        let r = ev.evaluate(st);
        if r.reward > best.reward {
            best = r;
        }
        if r.success {
            return Ok(EpisodeOutcome { result: r, achieved_at: Some(t), steps: t });
        }
    }
    Ok(EpisodeOutcome { result: best, achieved_at: None, steps })
}

/// The task catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskCatalog {
    tasks: Vec<TaskSpec>,
}

impl TaskCatalog {
    pub fn parse(text: &str) -> Result<Self, TaskError> {
        // Changes are written as single-key maps, which serde_yaml only
        // accepts as tags; go through a JSON value instead.
        let value: serde_json::Value =
            serde_yaml::from_str(text).map_err(|e| TaskError::Parse(e.to_string()))?;
        let tasks: Vec<TaskSpec> =
            serde_json::from_value(value).map_err(|e| TaskError::Parse(e.to_string()))?;
        let mut seen = std::collections::BTreeSet::new();
        for t in &tasks {
            if !seen.insert(t.id.as_str()) {
                return Err(TaskError::Parse(format!("duplicate task id `{}`", t.id)));
            }
        }
        Ok(TaskCatalog { tasks })
    }

    /// The built-in catalog.
    pub fn shipped() -> Self {
        Self::parse(TASKS_YAML).expect("shipped task catalog parses")
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn get(&self, id: &str) -> Result<&TaskSpec, TaskError> {
        self.tasks
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| TaskError::UnknownTask(id.to_string()))
    }

    pub fn single_goal(&self) -> impl Iterator<Item = &TaskSpec> {
        self.tasks.iter().filter(|t| !t.is_multi_step())
    }

    pub fn multi_step(&self) -> impl Iterator<Item = &TaskSpec> {
        self.tasks.iter().filter(|t| t.is_multi_step())
    }

    pub fn validate(&self, s0: &EnvState) -> Result<(), TaskError> {
        self.tasks.iter().try_for_each(|t| t.validate(s0))
    }

    pub fn to_yaml(&self) -> String {
        crate::yaml::to_canonical_string(&self.tasks).expect("tasks serialize")
    }
}

impl fmt::Display for Change {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Change::TodoAdd { text } => write!(f, "add todo {text:?}"),
            Change::TodoMarkDone { index } => write!(f, "mark todo #{index} done"),
            Change::TodoRemove { index } => write!(f, "remove todo #{index}"),
            Change::EventAdd { title, date } => write!(f, "add event {title:?} on {date}"),
            Change::EventDuplicate { index, shift_years } => {
                write!(f, "duplicate event #{index} shifted by {shift_years} year(s)")
            }
            Change::EventRemove { index } => write!(f, "remove event #{index}"),
            Change::MessageSend { peer, body } => write!(f, "send {body:?} to {peer}"),
            Change::MessageForward { from, to } => write!(f, "forward last message from {from} to {to}"),
            Change::PlaceAdd { query } => write!(f, "save place {query:?}"),
            Change::PlaceRemove { index } => write!(f, "remove saved place #{index}"),
            Change::FileCreate { parent, name } => write!(f, "create file {}", join_path(parent, name)),
            Change::FileRemove { path } => write!(f, "remove {path}"),
            Change::CartAdd { product_id, quantity, .. } => write!(f, "add {quantity} x {product_id} to cart"),
            Change::CartClear {} => f.write_str("empty the cart"),
            Change::Navigate { route } => write!(f, "go to {route}"),
        }
    }
}

#[cfg(test)]
mod tests;

/// Every single-edit variant of `s` that changes its app data: one entry per
/// toggled, deleted, shifted or added item. `salt` names added items.
pub fn side_effects(s: &EnvState, salt: &str) -> Vec<EnvState> {
    let mut out = Vec::new();
    let mut push = |f: &dyn Fn(&mut EnvState)| {
        let mut n = s.clone();
        f(&mut n);
        out.push(n);
    };
    for i in 0..s.todos.len() {
        push(&|n| n.todos[i].done = !n.todos[i].done);
        push(&|n| {
            n.todos.remove(i);
        });
    }
    push(&|n| n.todos.push(TodoItem { text: format!("todo {salt}"), done: false }));
    for i in 0..s.calendar.len() {
        push(&|n| {
            n.calendar.remove(i);
        });
        push(&|n| n.calendar[i].date = n.calendar[i].date.succ_opt().expect("date in range"));
    }
    for i in 0..s.places.len() {
        push(&|n| {
            n.places.remove(i);
        });
    }
    push(&|n| n.places.push(SavedPlace { name: format!("place {salt}"), query: format!("place {salt}") }));
    for peer in s.conversations.keys() {
        push(&|n| {
            let _ = push_sent(n, peer, format!("message {salt}"));
        });
    }
    for i in 0..s.cart.len() {
        push(&|n| n.cart[i].quantity += 1);
        push(&|n| {
            n.cart.remove(i);
        });
    }
    let mut paths = Vec::new();
    s.files.walk("", &mut |p, _| paths.push(p.to_string()));
    for p in &paths {
        push(&|n| {
            n.files.remove(p);
        });
    }
    push(&|n| {
        n.files.children.push(FileNode {
            name: format!("file-{salt}"),
            kind: NodeKind::File,
            children: Vec::new(),
        })
    });
    out
}

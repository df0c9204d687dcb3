//! Ground-truth environment state for the six apps plus navigation.
//!
//! Everything a reward can depend on lives in [`EnvState`]. Values are
//! immutable snapshots: [`apply_control`] returns a new state and never
//! touches its input.

mod canonical;
mod control;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use canonical::{canonicalize, diff, CanonicalState, DiffEntry, StateDiff};
pub use control::{apply_control, Control, FieldId, RejectCode, Rejection};

/// The six apps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AppId {
    Calendar,
    Todo,
    Messenger,
    Maps,
    #[serde(rename = "codeeditor")]
    CodeEditor,
    Shop,
}

impl AppId {
    pub const ALL: [AppId; 6] = [
        AppId::Calendar,
        AppId::Todo,
        AppId::Messenger,
        AppId::Maps,
        AppId::CodeEditor,
        AppId::Shop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AppId::Calendar => "calendar",
            AppId::Todo => "todo",
            AppId::Messenger => "messenger",
            AppId::Maps => "maps",
            AppId::CodeEditor => "codeeditor",
            AppId::Shop => "shop",
        }
    }

    pub fn route(self) -> Route {
        match self {
            AppId::Calendar => Route::Calendar,
            AppId::Todo => Route::Todo,
            AppId::Messenger => Route::Messenger,
            AppId::Maps => Route::Maps,
            AppId::CodeEditor => Route::CodeEditor,
            AppId::Shop => Route::Shop,
        }
    }
}

impl fmt::Display for AppId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AppId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AppId::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown app `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarEvent {
    pub title: String,
    pub date: NaiveDate,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub url: Option<String>,
    #[serde(default)]
    pub location: Option<String>,
    #[serde(default)]
    pub invitees: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TodoItem {
    pub text: String,
    #[serde(default)]
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub peer: String,
    pub direction: Direction,
    pub body: String,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SavedPlace {
    pub name: String,
    pub query: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Product {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub options: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CartItem {
    pub product_id: String,
    #[serde(default)]
    pub options: BTreeMap<String, String>,
    pub quantity: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Folder,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileNode {
    pub name: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub children: Vec<FileNode>,
}

impl FileNode {
    pub fn root(children: Vec<FileNode>) -> Self {
        FileNode { name: String::new(), kind: NodeKind::Folder, children }
    }

    /// Node at a `/`-separated path relative to this node; `""` is the node itself.
    pub fn find(&self, path: &str) -> Option<&FileNode> {
        let mut node = self;
        for part in path.split('/').filter(|p| !p.is_empty()) {
            node = node.children.iter().find(|c| c.name == part)?;
        }
        Some(node)
    }

    pub fn find_mut(&mut self, path: &str) -> Option<&mut FileNode> {
        let mut node = self;
        for part in path.split('/').filter(|p| !p.is_empty()) {
            node = node.children.iter_mut().find(|c| c.name == part)?;
        }
        Some(node)
    }

    /// Remove the node at `path`. The root itself cannot be removed.
    pub fn remove(&mut self, path: &str) -> Option<FileNode> {
        let (parent, name) = match path.rsplit_once('/') {
            Some((p, n)) => (p, n),
            None => ("", path),
        };
        if name.is_empty() {
            return None;
        }
        let folder = self.find_mut(parent)?;
        let idx = folder.children.iter().position(|c| c.name == name)?;
        Some(folder.children.remove(idx))
    }

    /// Visit every node with its path, pre-order.
    pub fn walk<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(&str, &'a FileNode)) {
        for child in &self.children {
            let path = join_path(prefix, &child.name);
            f(&path, child);
            child.walk(&path, f);
        }
    }

    fn check(&self, path: &str, errors: &mut Vec<String>) {
        if self.kind == NodeKind::File && !self.children.is_empty() {
            errors.push(format!("file `{path}` has children"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.children {
            if c.name.trim().is_empty() || c.name.contains('/') {
                errors.push(format!("invalid entry name {:?} under `{path}`", c.name));
            }
            if !seen.insert(c.name.as_str()) {
                errors.push(format!("duplicate entry `{}` under `{path}`", c.name));
            }
            c.check(&join_path(path, &c.name), errors);
        }
    }
}

pub fn join_path(parent: &str, name: &str) -> String {
    if parent.is_empty() {
        name.to_string()
    } else {
        format!("{parent}/{name}")
    }
}

/// Where the user currently is. `External` records navigation that left the
/// environment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Route {
    Home,
    Calendar,
    Todo,
    Messenger,
    Maps,
    CodeEditor,
    Shop,
    Cart,
    External(String),
}

impl Route {
    /// Base URL under which environment pages are served.
    pub const ORIGIN: &'static str = "http://varapps.local";

    pub fn as_path(&self) -> String {
        match self {
            Route::Home => "/".into(),
            Route::External(url) => url.clone(),
            other => format!("/{other}"),
        }
    }

    pub fn url(&self) -> String {
        match self {
            Route::External(url) => url.clone(),
            other => format!("{}{}", Route::ORIGIN, other.as_path()),
        }
    }

    /// Map a URL (absolute on our origin, or a bare path) back to a route.
    /// Anything else is external.
    pub fn from_url(url: &str) -> Route {
        let trimmed = url.trim();
        let path = trimmed
            .strip_prefix(Route::ORIGIN)
            .or_else(|| trimmed.strip_prefix("https://varapps.local"))
            .or_else(|| trimmed.strip_prefix('/').map(|_| trimmed))
            .or(if trimmed.is_empty() { Some("/") } else { None });
        match path {
            Some(p) => {
                let p = p.trim_matches('/');
                if p.is_empty() {
                    return Route::Home;
                }
                p.parse::<Route>()
                    .ok()
                    .filter(|r| !matches!(r, Route::External(_)))
                    .unwrap_or_else(|| Route::External(trimmed.to_string()))
            }
            None => Route::External(trimmed.to_string()),
        }
    }

    pub fn app(&self) -> Option<AppId> {
        match self {
            Route::Calendar => Some(AppId::Calendar),
            Route::Todo => Some(AppId::Todo),
            Route::Messenger => Some(AppId::Messenger),
            Route::Maps => Some(AppId::Maps),
            Route::CodeEditor => Some(AppId::CodeEditor),
            Route::Shop | Route::Cart => Some(AppId::Shop),
            Route::Home | Route::External(_) => None,
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Route::Home => f.write_str("home"),
            Route::Calendar => f.write_str("calendar"),
            Route::Todo => f.write_str("todo"),
            Route::Messenger => f.write_str("messenger"),
            Route::Maps => f.write_str("maps"),
            Route::CodeEditor => f.write_str("codeeditor"),
            Route::Shop => f.write_str("shop"),
            Route::Cart => f.write_str("cart"),
            Route::External(url) => write!(f, "external:{url}"),
        }
    }
}

impl FromStr for Route {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "home" => Route::Home,
            "calendar" => Route::Calendar,
            "todo" => Route::Todo,
            "messenger" => Route::Messenger,
            "maps" => Route::Maps,
            "codeeditor" => Route::CodeEditor,
            "shop" => Route::Shop,
            "cart" => Route::Cart,
            other => match other.strip_prefix("external:") {
                Some(url) => Route::External(url.to_string()),
                None => return Err(format!("unknown route `{other}`")),
            },
        })
    }
}

impl Serialize for Route {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Route {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sub-view or modal open on the current route.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dialog {
    AddEvent,
    Conversation { peer: String },
    Forward { peer: String, seq: u64 },
    SearchResult { query: String },
    NewEntry { parent: String, kind: NodeKind },
    Product { id: String },
}

impl fmt::Display for Dialog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dialog::AddEvent => f.write_str("add-event"),
            Dialog::Conversation { peer } => write!(f, "chat:{peer}"),
            Dialog::Forward { peer, seq } => write!(f, "forward:{peer}:{seq}"),
            Dialog::SearchResult { query } => write!(f, "result:{query}"),
            Dialog::NewEntry { parent, kind: NodeKind::File } => write!(f, "new-file:{parent}"),
            Dialog::NewEntry { parent, kind: NodeKind::Folder } => write!(f, "new-folder:{parent}"),
            Dialog::Product { id } => write!(f, "product:{id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavState {
    pub route: Route,
    pub scroll_offset: u32,
    pub pending_form: Option<BTreeMap<String, String>>,
    pub open_dialog: Option<Dialog>,
    pub focused_field: Option<FieldId>,
    /// Ctrl+A on the focused field; the next typed text replaces its value.
    pub select_all: bool,
    pub back: Vec<Route>,
    pub forward: Vec<Route>,
}

impl Default for NavState {
    fn default() -> Self {
        NavState {
            route: Route::Home,
            scroll_offset: 0,
            pending_form: None,
            open_dialog: None,
            focused_field: None,
            select_all: false,
            back: Vec::new(),
            forward: Vec::new(),
        }
    }
}

impl NavState {
    pub fn field_value(&self, key: &str) -> Option<&str> {
        self.pending_form.as_ref()?.get(key).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvState {
    pub today: NaiveDate,
    pub logical_clock: u64,
    pub calendar: Vec<CalendarEvent>,
    pub todos: Vec<TodoItem>,
    pub conversations: BTreeMap<String, Vec<Message>>,
    pub places: Vec<SavedPlace>,
    pub catalog: Vec<Product>,
    pub cart: Vec<CartItem>,
    pub files: FileNode,
    pub nav: NavState,
}

impl EnvState {
    /// A state with no app data, on the home route.
    pub fn empty(today: NaiveDate) -> Self {
        EnvState {
            today,
            logical_clock: 0,
            calendar: Vec::new(),
            todos: Vec::new(),
            conversations: BTreeMap::new(),
            places: Vec::new(),
            catalog: Vec::new(),
            cart: Vec::new(),
            files: FileNode::root(Vec::new()),
            nav: NavState::default(),
        }
    }

    /// Full (non-canonical) YAML serialization; includes volatile fields.
    pub fn to_yaml(&self) -> String {
        crate::yaml::to_canonical_string(self).expect("state serializes")
    }

    pub fn from_yaml(text: &str) -> Result<Self, serde_yaml::Error> {
        serde_yaml::from_str(text)
    }

    pub fn last_received(&self, peer: &str) -> Option<&Message> {
        self.conversations
            .get(peer)?
            .iter()
            .rev()
            .find(|m| m.direction == Direction::Received)
    }

    pub fn product(&self, id: &str) -> Option<&Product> {
        self.catalog.iter().find(|p| p.id == id)
    }

    /// Invariant violations, empty when the state is well formed.
    pub fn violations(&self) -> Vec<String> {
        let mut errors = Vec::new();
        for (i, e) in self.calendar.iter().enumerate() {
            if e.title.trim().is_empty() {
                errors.push(format!("calendar[{i}] has an empty title"));
            }
        }
        for (i, t) in self.todos.iter().enumerate() {
            if t.text.trim().is_empty() {
                errors.push(format!("todos[{i}] has empty text"));
            }
        }
        for (peer, msgs) in &self.conversations {
            let mut last = None;
            for m in msgs {
                if m.body.trim().is_empty() {
                    errors.push(format!("empty message body with {peer}"));
                }
                if m.peer != *peer {
                    errors.push(format!("message filed under {peer} names {}", m.peer));
                }
                if last.is_some_and(|l| m.seq <= l) {
                    errors.push(format!("non-increasing seq with {peer}"));
                }
                last = Some(m.seq);
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for p in &self.places {
            if p.name.trim().is_empty() {
                errors.push("saved place with empty name".into());
            }
            if !names.insert(p.name.as_str()) {
                errors.push(format!("duplicate saved place `{}`", p.name));
            }
        }
        for item in &self.cart {
            if item.quantity == 0 {
                errors.push(format!("cart line `{}` has zero quantity", item.product_id));
            }
            match self.product(&item.product_id) {
                None => errors.push(format!("cart references unknown product `{}`", item.product_id)),
                Some(p) => {
                    for (k, v) in &item.options {
                        if !p.options.get(k).is_some_and(|vals| vals.contains(v)) {
                            errors.push(format!("cart line `{}` has invalid option {k}={v}", p.id));
                        }
                    }
                }
            }
        }
        self.files.check("", &mut errors);
        errors
    }
}

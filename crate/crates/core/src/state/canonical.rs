//! Canonical form, digest and structural diff.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{
    CalendarEvent, CartItem, Direction, EnvState, FileNode, Product, Route, SavedPlace, TodoItem,
};
use crate::text::normalize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalMessage {
    pub direction: Direction,
    pub body: String,
}

/// Order-insensitive, normalized view of the state. Volatile UI fields
/// (clock, scroll, focus, open dialogs, draft text, history) are dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalState {
    pub today: NaiveDate,
    pub route: Route,
    pub calendar: Vec<CalendarEvent>,
    pub todos: Vec<TodoItem>,
    pub conversations: BTreeMap<String, Vec<CanonicalMessage>>,
    pub places: Vec<SavedPlace>,
    pub catalog: Vec<Product>,
    pub cart: Vec<CartItem>,
    pub files: FileNode,
}

fn opt(s: &Option<String>) -> Option<String> {
    s.as_deref().map(normalize).filter(|s| !s.is_empty())
}

fn canon_files(node: &FileNode) -> FileNode {
    let mut children: Vec<FileNode> = node.children.iter().map(canon_files).collect();
    children.sort_by(|a, b| a.name.cmp(&b.name).then(a.kind.cmp(&b.kind)));
    FileNode { name: normalize(&node.name), kind: node.kind, children }
}

pub fn canonicalize(state: &EnvState) -> CanonicalState {
    let mut calendar: Vec<CalendarEvent> = state
        .calendar
        .iter()
        .map(|e| CalendarEvent {
            title: normalize(&e.title),
            date: e.date,
            description: normalize(&e.description),
            url: opt(&e.url),
            location: opt(&e.location),
            invitees: e
                .invitees
                .as_ref()
                .map(|v| v.iter().map(|n| normalize(n)).collect::<Vec<_>>())
                .filter(|v| !v.is_empty()),
        })
        .collect();
    calendar.sort_by(|a, b| {
        (a.date, &a.title, &a.description, &a.url, &a.location, &a.invitees).cmp(&(
            b.date,
            &b.title,
            &b.description,
            &b.url,
            &b.location,
            &b.invitees,
        ))
    });

    let todos = state
        .todos
        .iter()
        .map(|t| TodoItem { text: normalize(&t.text), done: t.done })
        .collect();

    let conversations = state
        .conversations
        .iter()
        .map(|(peer, msgs)| {
            let msgs = msgs
                .iter()
                .map(|m| CanonicalMessage { direction: m.direction, body: normalize(&m.body) })
                .collect();
            (normalize(peer), msgs)
        })
        .collect();

    let mut places: Vec<SavedPlace> = state
        .places
        .iter()
        .map(|p| SavedPlace { name: normalize(&p.name), query: normalize(&p.query) })
        .collect();
    places.sort();

    let mut catalog = state.catalog.clone();
    catalog.sort_by(|a, b| a.id.cmp(&b.id));

    let mut cart = state.cart.clone();
    cart.sort();

    CanonicalState {
        today: state.today,
        route: state.nav.route.clone(),
        calendar,
        todos,
        conversations,
        places,
        catalog,
        cart,
        files: canon_files(&state.files),
    }
}

impl CanonicalState {
    pub fn to_yaml(&self) -> String {
        crate::yaml::to_canonical_string(self).expect("canonical state serializes")
    }

    /// SHA-256 (hex) of the canonical YAML bytes.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_yaml().as_bytes()))
    }

    /// Equality on app data only, ignoring where the user is.
    pub fn same_data(&self, other: &CanonicalState) -> bool {
        let mut a = self.clone();
        a.route = other.route.clone();
        a == *other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub path: String,
    pub before: Option<Value>,
    pub after: Option<Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StateDiff {
    pub entries: Vec<DiffEntry>,
}

impl StateDiff {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn paths(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.path.as_str()).collect()
    }

    pub fn to_yaml(&self) -> String {
        crate::yaml::to_canonical_string(self).expect("diff serializes")
    }
}

/// Leaf-level changes from `a` to `b`. Sequences of equal length are compared
/// element-wise; a length change reports the whole sequence once.
pub fn diff(a: &CanonicalState, b: &CanonicalState) -> StateDiff {
    let va = serde_json::to_value(a).expect("serializes");
    let vb = serde_json::to_value(b).expect("serializes");
    let mut entries = Vec::new();
    walk("", &va, &vb, &mut entries);
    StateDiff { entries }
}

fn child(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn walk(path: &str, a: &Value, b: &Value, out: &mut Vec<DiffEntry>) {
    if a == b {
        return;
    }
    match (a, b) {
        (Value::Object(ma), Value::Object(mb)) => {
            let mut keys: Vec<&String> = ma.keys().chain(mb.keys()).collect();
            keys.sort();
            keys.dedup();
            for k in keys {
                let p = child(path, k);
                match (ma.get(k), mb.get(k)) {
                    (Some(x), Some(y)) => walk(&p, x, y, out),
                    (x, y) => out.push(DiffEntry { path: p, before: x.cloned(), after: y.cloned() }),
                }
            }
        }
        (Value::Array(sa), Value::Array(sb)) if sa.len() == sb.len() => {
            for (i, (x, y)) in sa.iter().zip(sb).enumerate() {
                walk(&child(path, &i.to_string()), x, y, out);
            }
        }
        _ => out.push(DiffEntry {
            path: path.to_string(),
            before: Some(a.clone()),
            after: Some(b.clone()),
        }),
    }
}

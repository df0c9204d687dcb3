//! Semantic controls and the pure transition function.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{
    join_path, CalendarEvent, CartItem, Dialog, Direction, EnvState, FileNode, Message, NodeKind,
    Route, SavedPlace, TodoItem,
};

/// Text inputs that exist somewhere in the apps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FieldId {
    #[serde(rename = "event.title")]
    EventTitle,
    #[serde(rename = "event.date")]
    EventDate,
    #[serde(rename = "event.description")]
    EventDescription,
    #[serde(rename = "event.url")]
    EventUrl,
    #[serde(rename = "event.invitees")]
    EventInvitees,
    #[serde(rename = "event.location")]
    EventLocation,
    #[serde(rename = "todo.text")]
    TodoText,
    #[serde(rename = "message.body")]
    MessageBody,
    #[serde(rename = "maps.query")]
    MapsQuery,
    #[serde(rename = "entry.name")]
    EntryName,
    #[serde(rename = "shop.quantity")]
    Quantity,
}

impl FieldId {
    pub const EVENT_FIELDS: [FieldId; 6] = [
        FieldId::EventTitle,
        FieldId::EventDate,
        FieldId::EventDescription,
        FieldId::EventUrl,
        FieldId::EventInvitees,
        FieldId::EventLocation,
    ];

    pub fn key(self) -> &'static str {
        match self {
            FieldId::EventTitle => "event.title",
            FieldId::EventDate => "event.date",
            FieldId::EventDescription => "event.description",
            FieldId::EventUrl => "event.url",
            FieldId::EventInvitees => "event.invitees",
            FieldId::EventLocation => "event.location",
            FieldId::TodoText => "todo.text",
            FieldId::MessageBody => "message.body",
            FieldId::MapsQuery => "maps.query",
            FieldId::EntryName => "entry.name",
            FieldId::Quantity => "shop.quantity",
        }
    }

    /// Key of this field inside its app's form-display style section.
    pub fn style_key(self) -> &'static str {
        self.key().split_once('.').map(|(_, k)| k).unwrap_or_default()
    }

    /// The control that Enter triggers while this field has focus.
    pub fn submit(self) -> Control {
        match self {
            FieldId::EventTitle
            | FieldId::EventDate
            | FieldId::EventDescription
            | FieldId::EventUrl
            | FieldId::EventInvitees
            | FieldId::EventLocation => Control::SubmitAddEvent,
            FieldId::TodoText => Control::SubmitAddTodo,
            FieldId::MessageBody => Control::SubmitMessage,
            FieldId::MapsQuery => Control::SearchPlace,
            FieldId::EntryName => Control::SubmitNewEntry,
            FieldId::Quantity => Control::AddToCart,
        }
    }

    fn available(self, state: &EnvState) -> bool {
        let nav = &state.nav;
        match self {
            FieldId::TodoText => nav.route == Route::Todo,
            FieldId::MapsQuery => nav.route == Route::Maps,
            FieldId::EventTitle
            | FieldId::EventDate
            | FieldId::EventDescription
            | FieldId::EventUrl
            | FieldId::EventInvitees
            | FieldId::EventLocation => {
                nav.route == Route::Calendar && nav.open_dialog == Some(Dialog::AddEvent)
            }
            FieldId::MessageBody => {
                nav.route == Route::Messenger
                    && matches!(nav.open_dialog, Some(Dialog::Conversation { .. }))
            }
            FieldId::EntryName => {
                nav.route == Route::CodeEditor
                    && matches!(nav.open_dialog, Some(Dialog::NewEntry { .. }))
            }
            FieldId::Quantity => {
                nav.route == Route::Shop && matches!(nav.open_dialog, Some(Dialog::Product { .. }))
            }
        }
    }
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// The resolved meaning of a UI action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    Navigate(Route),
    GoBack,
    GoForward,
    ScrollTo(u32),
    Focus(FieldId),
    SetField { field: FieldId, value: String },
    SelectAll,
    CloseDialog,

    SubmitAddTodo,
    ToggleTodo(usize),
    DeleteTodo(usize),

    OpenAddEvent,
    DuplicateEvent(usize),
    DeleteEvent(usize),
    SubmitAddEvent,

    OpenConversation(String),
    SubmitMessage,
    OpenForward { peer: String, seq: u64 },
    ForwardTo { from: String, seq: u64, to: String },

    SearchPlace,
    SavePlace,
    RemovePlace(usize),

    OpenNewEntry { parent: String, kind: NodeKind },
    SubmitNewEntry,
    DeleteEntry(String),

    OpenProduct(String),
    SelectOption { option: String, value: String },
    AddToCart,
    RemoveCartItem(usize),
    ClearCart,
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Control::Navigate(r) => write!(f, "navigate:{r}"),
            Control::GoBack => f.write_str("go-back"),
            Control::GoForward => f.write_str("go-forward"),
            Control::ScrollTo(y) => write!(f, "scroll-to:{y}"),
            Control::Focus(field) => write!(f, "focus:{field}"),
            Control::SetField { field, value } => write!(f, "set-field:{field}={value:?}"),
            Control::SelectAll => f.write_str("select-all"),
            Control::CloseDialog => f.write_str("close-dialog"),
            Control::SubmitAddTodo => f.write_str("add-todo"),
            Control::ToggleTodo(i) => write!(f, "toggle-todo:{i}"),
            Control::DeleteTodo(i) => write!(f, "delete-todo:{i}"),
            Control::OpenAddEvent => f.write_str("open-add-event"),
            Control::DuplicateEvent(i) => write!(f, "duplicate-event:{i}"),
            Control::DeleteEvent(i) => write!(f, "delete-event:{i}"),
            Control::SubmitAddEvent => f.write_str("add-event"),
            Control::OpenConversation(p) => write!(f, "open-conversation:{p}"),
            Control::SubmitMessage => f.write_str("send-message"),
            Control::OpenForward { peer, seq } => write!(f, "open-forward:{peer}:{seq}"),
            Control::ForwardTo { from, seq, to } => write!(f, "forward:{from}:{seq}:{to}"),
            Control::SearchPlace => f.write_str("search-place"),
            Control::SavePlace => f.write_str("save-place"),
            Control::RemovePlace(i) => write!(f, "remove-place:{i}"),
            Control::OpenNewEntry { parent, kind } => match kind {
                NodeKind::File => write!(f, "open-new-file:{parent}"),
                NodeKind::Folder => write!(f, "open-new-folder:{parent}"),
            },
            Control::SubmitNewEntry => f.write_str("create-entry"),
            Control::DeleteEntry(p) => write!(f, "delete-entry:{p}"),
            Control::OpenProduct(id) => write!(f, "open-product:{id}"),
            Control::SelectOption { option, value } => write!(f, "select-option:{option}={value}"),
            Control::AddToCart => f.write_str("add-to-cart"),
            Control::RemoveCartItem(i) => write!(f, "remove-cart-item:{i}"),
            Control::ClearCart => f.write_str("clear-cart"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectCode {
    /// The control does not exist on the current page.
    NotApplicable,
    /// The control exists but its inputs are unacceptable (empty title, bad date, ...).
    InvalidInput,
    UnknownBid,
    NoTarget,
    NotATextbox,
    ExternalNavigation,
    NoFocus,
    OutOfViewport,
    Unsupported,
    NoEffect,
    HistoryEmpty,
}

impl fmt::Display for RejectCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("unknown"))
    }
}

/// A syntactically valid action that the app ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub code: RejectCode,
    pub detail: String,
}

impl Rejection {
    pub fn new(code: RejectCode, detail: impl Into<String>) -> Self {
        Rejection { code, detail: detail.into() }
    }

    fn not_here(control: &Control, state: &EnvState) -> Self {
        Rejection::new(
            RejectCode::NotApplicable,
            format!("`{control}` is not available on {}", state.nav.route),
        )
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.detail)
    }
}

fn invalid(detail: impl Into<String>) -> Rejection {
    Rejection::new(RejectCode::InvalidInput, detail)
}

fn optional(s: Option<&str>) -> Option<String> {
    s.map(str::trim).filter(|s| !s.is_empty()).map(str::to_string)
}

/// Apply one control. Pure: the input is untouched and equal inputs give equal
/// outputs. On success the logical clock advances by one; a rejection leaves
/// the caller's state as it was.
pub fn apply_control(state: &EnvState, control: &Control) -> Result<EnvState, Rejection> {
    let mut next = state.clone();
    transition(&mut next, control)?;
    next.logical_clock += 1;
    Ok(next)
}

fn transition(s: &mut EnvState, control: &Control) -> Result<(), Rejection> {
    let route = s.nav.route.clone();
    let dialog = s.nav.open_dialog.clone();
    let here = |ok: bool| if ok { Ok(()) } else { Err(Rejection::not_here(control, s)) };

    match control {
        Control::Navigate(target) => {
            if *target != route {
                s.nav.back.push(route);
                s.nav.forward.clear();
            }
            enter(s, target.clone());
        }
        Control::GoBack => {
            let prev = s
                .nav
                .back
                .pop()
                .ok_or_else(|| Rejection::new(RejectCode::HistoryEmpty, "no page to go back to"))?;
            s.nav.forward.push(route);
            enter(s, prev);
        }
        Control::GoForward => {
            let next = s
                .nav
                .forward
                .pop()
                .ok_or_else(|| Rejection::new(RejectCode::HistoryEmpty, "no page to go forward to"))?;
            s.nav.back.push(route);
            enter(s, next);
        }
        Control::ScrollTo(y) => {
            if *y == s.nav.scroll_offset {
                return Err(Rejection::new(RejectCode::NoEffect, "already at that scroll position"));
            }
            s.nav.scroll_offset = *y;
        }
        Control::Focus(field) => {
            here(field.available(s))?;
            s.nav.focused_field = Some(*field);
            s.nav.select_all = false;
        }
        Control::SetField { field, value } => {
            here(field.available(s))?;
            s.nav
                .pending_form
                .get_or_insert_with(BTreeMap::new)
                .insert(field.key().to_string(), value.clone());
            s.nav.focused_field = Some(*field);
            s.nav.select_all = false;
        }
        Control::SelectAll => {
            if s.nav.focused_field.is_none() {
                return Err(Rejection::new(RejectCode::NoFocus, "no focused text field"));
            }
            s.nav.select_all = true;
        }
        Control::CloseDialog => {
            here(dialog.is_some())?;
            close_dialog(s);
        }

        Control::SubmitAddTodo => {
            here(route == Route::Todo)?;
            let text = take_field(s, FieldId::TodoText);
            if text.is_empty() {
                return Err(invalid("todo text is empty"));
            }
            s.todos.push(TodoItem { text, done: false });
        }
        Control::ToggleTodo(i) => {
            here(route == Route::Todo && *i < s.todos.len())?;
            s.todos[*i].done = !s.todos[*i].done;
        }
        Control::DeleteTodo(i) => {
            here(route == Route::Todo && *i < s.todos.len())?;
            s.todos.remove(*i);
        }

        Control::OpenAddEvent => {
            here(route == Route::Calendar)?;
            close_dialog(s);
            s.nav.open_dialog = Some(Dialog::AddEvent);
        }
        Control::DuplicateEvent(i) => {
            here(route == Route::Calendar && *i < s.calendar.len())?;
            let e = s.calendar[*i].clone();
            close_dialog(s);
            s.nav.open_dialog = Some(Dialog::AddEvent);
            let form = s.nav.pending_form.get_or_insert_with(BTreeMap::new);
            form.insert(FieldId::EventTitle.key().into(), e.title);
            form.insert(FieldId::EventDate.key().into(), e.date.to_string());
            form.insert(FieldId::EventDescription.key().into(), e.description);
            form.insert(FieldId::EventUrl.key().into(), e.url.unwrap_or_default());
            form.insert(FieldId::EventLocation.key().into(), e.location.unwrap_or_default());
            form.insert(
                FieldId::EventInvitees.key().into(),
                e.invitees.map(|v| v.join(", ")).unwrap_or_default(),
            );
        }
        Control::DeleteEvent(i) => {
            here(route == Route::Calendar && *i < s.calendar.len())?;
            s.calendar.remove(*i);
        }
        Control::SubmitAddEvent => {
            here(route == Route::Calendar && dialog == Some(Dialog::AddEvent))?;
            let nav = &s.nav;
            let title = nav.field_value(FieldId::EventTitle.key()).unwrap_or("").trim().to_string();
            if title.is_empty() {
                return Err(invalid("event title is required"));
            }
            let raw_date = nav.field_value(FieldId::EventDate.key()).unwrap_or("").trim();
            let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d")
                .map_err(|_| invalid(format!("`{raw_date}` is not a date in YYYY-MM-DD format")))?;
            let invitees = optional(nav.field_value(FieldId::EventInvitees.key())).map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|n| !n.is_empty())
                    .map(str::to_string)
                    .collect::<Vec<_>>()
            });
            let event = CalendarEvent {
                title,
                date,
                description: nav
                    .field_value(FieldId::EventDescription.key())
                    .unwrap_or("")
                    .trim()
                    .to_string(),
                url: optional(nav.field_value(FieldId::EventUrl.key())),
                location: optional(nav.field_value(FieldId::EventLocation.key())),
                invitees: invitees.filter(|v| !v.is_empty()),
            };
            s.calendar.push(event);
            close_dialog(s);
        }

        Control::OpenConversation(peer) => {
            here(route == Route::Messenger && s.conversations.contains_key(peer))?;
            close_dialog(s);
            s.nav.open_dialog = Some(Dialog::Conversation { peer: peer.clone() });
        }
        Control::SubmitMessage => {
            let Some(Dialog::Conversation { peer }) = dialog.filter(|_| route == Route::Messenger)
            else {
                return Err(Rejection::not_here(control, s));
            };
            let body = take_field(s, FieldId::MessageBody);
            if body.is_empty() {
                return Err(invalid("message is empty"));
            }
            push_message(s, &peer, body);
        }
        Control::OpenForward { peer, seq } => {
            let open = matches!(&dialog, Some(Dialog::Conversation { peer: p }) if p == peer);
            let exists = s
                .conversations
                .get(peer)
                .is_some_and(|m| m.iter().any(|m| m.seq == *seq));
            here(route == Route::Messenger && open && exists)?;
            close_dialog(s);
            s.nav.open_dialog = Some(Dialog::Forward { peer: peer.clone(), seq: *seq });
        }
        Control::ForwardTo { from, seq, to } => {
            let open = matches!(&dialog, Some(Dialog::Forward { peer, seq: q }) if peer == from && q == seq);
            here(route == Route::Messenger && open && to != from && s.conversations.contains_key(to))?;
            let body = s.conversations[from]
                .iter()
                .find(|m| m.seq == *seq)
                .map(|m| m.body.clone())
                .ok_or_else(|| Rejection::not_here(control, s))?;
            push_message(s, to, body);
            close_dialog(s);
            s.nav.open_dialog = Some(Dialog::Conversation { peer: to.clone() });
        }

        Control::SearchPlace => {
            here(route == Route::Maps)?;
            let query = s.nav.field_value(FieldId::MapsQuery.key()).unwrap_or("").trim().to_string();
            if query.is_empty() {
                return Err(invalid("search query is empty"));
            }
            s.nav.open_dialog = Some(Dialog::SearchResult { query });
        }
        Control::SavePlace => {
            let Some(Dialog::SearchResult { query }) = dialog.filter(|_| route == Route::Maps) else {
                return Err(Rejection::not_here(control, s));
            };
            if s.places.iter().any(|p| p.name == query) {
                return Err(invalid(format!("`{query}` is already saved")));
            }
            s.places.push(SavedPlace { name: query.clone(), query });
            close_dialog(s);
        }
        Control::RemovePlace(i) => {
            here(route == Route::Maps && *i < s.places.len())?;
            s.places.remove(*i);
        }

        Control::OpenNewEntry { parent, kind } => {
            let is_folder = s.files.find(parent).is_some_and(|n| n.kind == NodeKind::Folder);
            here(route == Route::CodeEditor && is_folder)?;
            close_dialog(s);
            s.nav.open_dialog = Some(Dialog::NewEntry { parent: parent.clone(), kind: *kind });
        }
        Control::SubmitNewEntry => {
            let Some(Dialog::NewEntry { parent, kind }) = dialog.filter(|_| route == Route::CodeEditor)
            else {
                return Err(Rejection::not_here(control, s));
            };
            let name = s.nav.field_value(FieldId::EntryName.key()).unwrap_or("").trim().to_string();
            if name.is_empty() || name.contains('/') || name == "." || name == ".." {
                return Err(invalid(format!("`{name}` is not a valid name")));
            }
            let folder = s
                .files
                .find_mut(&parent)
                .ok_or_else(|| invalid(format!("folder `{parent}` no longer exists")))?;
            if folder.children.iter().any(|c| c.name == name) {
                return Err(invalid(format!("`{}` already exists", join_path(&parent, &name))));
            }
            folder.children.push(FileNode { name, kind, children: Vec::new() });
            close_dialog(s);
        }
        Control::DeleteEntry(path) => {
            here(route == Route::CodeEditor && !path.is_empty() && s.files.find(path).is_some())?;
            s.files.remove(path);
            if let Some(Dialog::NewEntry { parent, .. }) = &dialog {
                if s.files.find(parent).is_none() {
                    close_dialog(s);
                }
            }
        }

        Control::OpenProduct(id) => {
            here(route == Route::Shop && s.product(id).is_some())?;
            close_dialog(s);
            s.nav.open_dialog = Some(Dialog::Product { id: id.clone() });
        }
        Control::SelectOption { option, value } => {
            let valid = match &dialog {
                Some(Dialog::Product { id }) => s
                    .product(id)
                    .and_then(|p| p.options.get(option))
                    .is_some_and(|vals| vals.contains(value)),
                _ => false,
            };
            here(route == Route::Shop && valid)?;
            s.nav
                .pending_form
                .get_or_insert_with(BTreeMap::new)
                .insert(format!("option.{option}"), value.clone());
        }
        Control::AddToCart => {
            let Some(Dialog::Product { id }) = dialog.filter(|_| route == Route::Shop) else {
                return Err(Rejection::not_here(control, s));
            };
            let product = s.product(&id).cloned().ok_or_else(|| Rejection::not_here(control, s))?;
            let mut options = BTreeMap::new();
            for name in product.options.keys() {
                let chosen = s
                    .nav
                    .field_value(&format!("option.{name}"))
                    .ok_or_else(|| invalid(format!("choose a {name} first")))?;
                options.insert(name.clone(), chosen.to_string());
            }
            let raw_qty = s.nav.field_value(FieldId::Quantity.key()).unwrap_or("").trim();
            let quantity = if raw_qty.is_empty() {
                1
            } else {
                raw_qty
                    .parse::<u32>()
                    .ok()
                    .filter(|q| *q >= 1)
                    .ok_or_else(|| invalid(format!("`{raw_qty}` is not a positive quantity")))?
            };
            match s.cart.iter_mut().find(|c| c.product_id == id && c.options == options) {
                Some(line) => line.quantity += quantity,
                None => s.cart.push(CartItem { product_id: id, options, quantity }),
            }
            s.nav.pending_form = None;
            s.nav.focused_field = None;
            s.nav.select_all = false;
        }
        Control::RemoveCartItem(i) => {
            here(route == Route::Cart && *i < s.cart.len())?;
            s.cart.remove(*i);
        }
        Control::ClearCart => {
            here(route == Route::Cart)?;
            if s.cart.is_empty() {
                return Err(Rejection::new(RejectCode::NoEffect, "cart is already empty"));
            }
            s.cart.clear();
        }
    }
    Ok(())
}

fn enter(s: &mut EnvState, route: Route) {
    s.nav.route = route;
    s.nav.scroll_offset = 0;
    close_dialog(s);
}

fn close_dialog(s: &mut EnvState) {
    s.nav.open_dialog = None;
    s.nav.pending_form = None;
    s.nav.focused_field = None;
    s.nav.select_all = false;
}

/// Remove a field from the pending form, returning its trimmed value.
fn take_field(s: &mut EnvState, field: FieldId) -> String {
    let value = s
        .nav
        .pending_form
        .as_mut()
        .and_then(|f| f.remove(field.key()))
        .unwrap_or_default();
    if s.nav.pending_form.as_ref().is_some_and(BTreeMap::is_empty) {
        s.nav.pending_form = None;
    }
    s.nav.select_all = false;
    value.trim().to_string()
}

fn push_message(s: &mut EnvState, peer: &str, body: String) {
    let convo = s.conversations.entry(peer.to_string()).or_default();
    let seq = convo.last().map_or(1, |m| m.seq + 1);
    convo.push(Message { peer: peer.to_string(), direction: Direction::Sent, body, seq });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::canonicalize;

    fn todo_state() -> EnvState {
        let mut s = EnvState::empty(NaiveDate::from_ymd_opt(2025, 7, 1).unwrap());
        s.todos = vec![
            TodoItem { text: "Buy groceries".into(), done: false },
            TodoItem { text: "Answer emails".into(), done: false },
        ];
        s.nav.route = Route::Todo;
        s
    }

    #[test]
    fn toggle_flips_one_bit() {
        let s = todo_state();
        let next = apply_control(&s, &Control::ToggleTodo(0)).unwrap();
        assert!(next.todos[0].done);
        assert_eq!(next.todos[1], s.todos[1]);
        assert_eq!(next.logical_clock, s.logical_clock + 1);
        assert!(!s.todos[0].done, "input must stay untouched");
    }

    #[test]
    fn control_off_route_is_rejected() {
        let mut s = todo_state();
        s.nav.route = Route::Home;
        let err = apply_control(&s, &Control::ToggleTodo(0)).unwrap_err();
        assert_eq!(err.code, RejectCode::NotApplicable);
    }

    #[test]
    fn empty_required_title_is_rejected() {
        let mut s = todo_state();
        s.nav.route = Route::Calendar;
        let s = apply_control(&s, &Control::OpenAddEvent).unwrap();
        let s = apply_control(
            &s,
            &Control::SetField { field: FieldId::EventDate, value: "2025-07-22".into() },
        )
        .unwrap();
        let err = apply_control(&s, &Control::SubmitAddEvent).unwrap_err();
        assert_eq!(err.code, RejectCode::InvalidInput);
    }

    #[test]
    fn bad_date_is_rejected() {
        let mut s = todo_state();
        s.nav.route = Route::Calendar;
        s.nav.open_dialog = Some(Dialog::AddEvent);
        let s = apply_control(&s, &Control::SetField { field: FieldId::EventTitle, value: "x".into() })
            .unwrap();
        let s = apply_control(&s, &Control::SetField { field: FieldId::EventDate, value: "July 22".into() })
            .unwrap();
        assert_eq!(apply_control(&s, &Control::SubmitAddEvent).unwrap_err().code, RejectCode::InvalidInput);
    }

    #[test]
    fn duplicate_prefills_and_round_trips() {
        let mut s = todo_state();
        s.nav.route = Route::Calendar;
        s.calendar.push(CalendarEvent {
            title: "CHI".into(),
            date: NaiveDate::from_ymd_opt(2025, 9, 11).unwrap(),
            description: "Papers due.".into(),
            url: Some("https://chi".into()),
            location: Some("Online".into()),
            invitees: Some(vec!["Dennis".into(), "Maria".into()]),
        });
        let s = apply_control(&s, &Control::DuplicateEvent(0)).unwrap();
        let s = apply_control(&s, &Control::SubmitAddEvent).unwrap();
        assert_eq!(s.calendar.len(), 2);
        assert_eq!(s.calendar[0], s.calendar[1]);
        assert_eq!(s.nav.open_dialog, None);
    }

    #[test]
    fn messages_get_increasing_seq() {
        let mut s = todo_state();
        s.nav.route = Route::Messenger;
        s.conversations.insert("Bob".into(), Vec::new());
        let mut s = apply_control(&s, &Control::OpenConversation("Bob".into())).unwrap();
        for body in ["one", "two"] {
            s = apply_control(
                &s,
                &Control::SetField { field: FieldId::MessageBody, value: body.into() },
            )
            .unwrap();
            s = apply_control(&s, &Control::SubmitMessage).unwrap();
        }
        let seqs: Vec<u64> = s.conversations["Bob"].iter().map(|m| m.seq).collect();
        assert_eq!(seqs, vec![1, 2]);
        assert!(s.violations().is_empty());
    }

    #[test]
    fn navigation_history() {
        let s = todo_state();
        let s = apply_control(&s, &Control::Navigate(Route::Maps)).unwrap();
        let s = apply_control(&s, &Control::GoBack).unwrap();
        assert_eq!(s.nav.route, Route::Todo);
        let s = apply_control(&s, &Control::GoForward).unwrap();
        assert_eq!(s.nav.route, Route::Maps);
        assert_eq!(
            apply_control(&s, &Control::GoForward).unwrap_err().code,
            RejectCode::HistoryEmpty
        );
    }

    #[test]
    fn scroll_is_masked_in_canonical_form() {
        let s = todo_state();
        let scrolled = apply_control(&s, &Control::ScrollTo(120)).unwrap();
        assert_eq!(canonicalize(&s).to_yaml(), canonicalize(&scrolled).to_yaml());
    }
}

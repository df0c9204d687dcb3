//! Logical UI trees for each route, before geometry.

use crate::config::{AppConfig, AppConfigSet};
use crate::state::{
    AppId, Control, Dialog, Direction, EnvState, FieldId, FileNode, NodeKind, Route,
};

use super::{Role, UiNode};

fn leaf(role: Role, label: impl Into<String>) -> UiNode {
    UiNode::new(role, label)
}

fn group(role: Role, label: impl Into<String>, children: Vec<UiNode>) -> UiNode {
    let mut n = UiNode::new(role, label);
    n.children = children;
    n
}

fn button(label: impl Into<String>, control: Control) -> UiNode {
    let mut n = UiNode::new(Role::Button, label);
    n.interactive = true;
    n.control = Some(control);
    n
}

fn link(label: impl Into<String>, route: Route) -> UiNode {
    let mut n = UiNode::new(Role::Link, label);
    n.interactive = true;
    n.href = Some(route.url());
    n.control = Some(Control::Navigate(route));
    n
}

fn textbox(state: &EnvState, app: &AppConfig, field: FieldId) -> UiNode {
    let key = field.style_key();
    let mut n = UiNode::new(Role::Textbox, app.aria_label(key).unwrap_or(key));
    n.interactive = true;
    n.field = Some(field);
    n.placeholder = app.placeholder(key).map(str::to_string);
    n.value = Some(state.nav.field_value(field.key()).unwrap_or("").to_string());
    n.focused = state.nav.focused_field == Some(field);
    n
}

fn header(app: &AppConfig) -> Vec<UiNode> {
    let mut out = vec![leaf(Role::Heading, &app.page.title)];
    if !app.page.description.trim().is_empty() {
        out.push(leaf(Role::Text, &app.page.description));
    }
    if !app.page.details.trim().is_empty() {
        out.push(leaf(Role::Text, &app.page.details));
    }
    out
}

fn nav_bar(config: &AppConfigSet) -> UiNode {
    let mut links = vec![link(&config.globals.home_title, Route::Home)];
    for app in AppId::ALL {
        links.push(link(&config.apps.get(app).page.title, app.route()));
    }
    group(Role::Section, "Navigation", links)
}

pub(crate) fn build(state: &EnvState, config: &AppConfigSet) -> UiNode {
    let route = &state.nav.route;
    let mut children = vec![nav_bar(config)];
    let title;
    match route {
        Route::Home => {
            title = config.globals.home_title.clone();
            children.push(leaf(Role::Heading, &config.globals.home_title));
            if !config.globals.home_description.trim().is_empty() {
                children.push(leaf(Role::Text, &config.globals.home_description));
            }
            let apps = AppId::ALL
                .iter()
                .map(|a| {
                    let app = config.apps.get(*a);
                    let mut item = vec![link(&app.page.title, a.route())];
                    if !app.page.description.trim().is_empty() {
                        item.push(leaf(Role::Text, &app.page.description));
                    }
                    group(Role::Listitem, &app.page.title, item)
                })
                .collect();
            children.push(group(Role::Section, "Apps", apps));
        }
        Route::External(url) => {
            title = url.clone();
            children.push(leaf(Role::Heading, url));
            children.push(leaf(Role::Text, "This page is outside the environment."));
        }
        other => {
            let id = other.app().expect("app route");
            let app = config.apps.get(id);
            title = app.page.title.clone();
            children.extend(header(app));
            match other {
                Route::Calendar => calendar(state, app, &mut children),
                Route::Todo => todo(state, app, &mut children),
                Route::Messenger => messenger(state, app, &mut children),
                Route::Maps => maps(state, app, &mut children),
                Route::CodeEditor => codeeditor(state, app, &mut children),
                Route::Shop => shop(state, app, &mut children),
                Route::Cart => cart(state, app, &mut children),
                _ => unreachable!(),
            }
        }
    }
    group(Role::Section, title, children)
}

fn calendar(state: &EnvState, app: &AppConfig, out: &mut Vec<UiNode>) {
    out.push(button(app.label("add_event"), Control::OpenAddEvent));
    if state.nav.open_dialog == Some(Dialog::AddEvent) {
        let mut form: Vec<UiNode> =
            FieldId::EVENT_FIELDS.iter().map(|f| textbox(state, app, *f)).collect();
        form.push(button(app.label("save"), Control::SubmitAddEvent));
        form.push(button(app.label("cancel"), Control::CloseDialog));
        out.push(group(Role::Section, app.label("add_event"), form));
    }
    out.push(leaf(Role::Heading, app.label("list_heading")));
    for (i, e) in state.calendar.iter().enumerate() {
        let mut item = vec![leaf(Role::Text, &e.title), leaf(Role::Text, e.date.to_string())];
        if !e.description.trim().is_empty() {
            item.push(leaf(Role::Text, e.description.trim_end()));
        }
        if let Some(loc) = e.location.as_deref().filter(|l| !l.trim().is_empty()) {
            item.push(leaf(Role::Text, loc));
        }
        if let Some(url) = e.url.as_deref().filter(|u| !u.trim().is_empty()) {
            item.push(leaf(Role::Text, url));
        }
        if let Some(people) = e.invitees.as_ref().filter(|p| !p.is_empty()) {
            item.push(leaf(Role::Text, people.join(", ")));
        }
        item.push(button(app.label("duplicate"), Control::DuplicateEvent(i)));
        item.push(button(app.label("delete"), Control::DeleteEvent(i)));
        out.push(group(Role::Listitem, &e.title, item));
    }
}

fn todo(state: &EnvState, app: &AppConfig, out: &mut Vec<UiNode>) {
    out.push(textbox(state, app, FieldId::TodoText));
    out.push(button(app.label("add"), Control::SubmitAddTodo));
    out.push(leaf(Role::Heading, app.label("list_heading")));
    for (i, t) in state.todos.iter().enumerate() {
        let mut check = UiNode::new(Role::Checkbox, &t.text);
        check.interactive = true;
        check.checked = Some(t.done);
        check.control = Some(Control::ToggleTodo(i));
        let delete = button(app.label("delete"), Control::DeleteTodo(i));
        out.push(group(Role::Listitem, &t.text, vec![check, delete]));
    }
}

fn messenger(state: &EnvState, app: &AppConfig, out: &mut Vec<UiNode>) {
    match &state.nav.open_dialog {
        Some(Dialog::Conversation { peer }) => {
            out.push(button(app.label("back"), Control::CloseDialog));
            out.push(leaf(Role::Heading, peer));
            for m in state.conversations.get(peer).into_iter().flatten() {
                let who = match m.direction {
                    Direction::Sent => app.label("you").to_string(),
                    Direction::Received => peer.clone(),
                };
                let item = vec![
                    leaf(Role::Text, format!("{who}: {}", m.body)),
                    button(app.label("forward"), Control::OpenForward { peer: peer.clone(), seq: m.seq }),
                ];
                out.push(group(Role::Listitem, &m.body, item));
            }
            out.push(textbox(state, app, FieldId::MessageBody));
            out.push(button(app.label("send"), Control::SubmitMessage));
        }
        Some(Dialog::Forward { peer, seq }) => {
            let body = state
                .conversations
                .get(peer)
                .and_then(|msgs| msgs.iter().find(|m| m.seq == *seq))
                .map(|m| m.body.clone())
                .unwrap_or_default();
            out.push(leaf(Role::Heading, app.label("forward_heading")));
            out.push(leaf(Role::Text, body));
            let targets = state
                .conversations
                .keys()
                .filter(|p| *p != peer)
                .map(|to| {
                    button(to, Control::ForwardTo { from: peer.clone(), seq: *seq, to: to.clone() })
                })
                .collect();
            out.push(group(Role::Section, app.label("forward_heading"), targets));
            out.push(button(app.label("cancel"), Control::OpenConversation(peer.clone())));
        }
        _ => {
            out.push(leaf(Role::Heading, app.label("contacts_heading")));
            for (peer, msgs) in &state.conversations {
                let mut item = vec![button(peer, Control::OpenConversation(peer.clone()))];
                if let Some(last) = msgs.last() {
                    item.push(leaf(Role::Text, &last.body));
                }
                out.push(group(Role::Listitem, peer, item));
            }
        }
    }
}

fn maps(state: &EnvState, app: &AppConfig, out: &mut Vec<UiNode>) {
    out.push(textbox(state, app, FieldId::MapsQuery));
    out.push(button(app.label("search"), Control::SearchPlace));
    if let Some(Dialog::SearchResult { query }) = &state.nav.open_dialog {
        let result = vec![
            leaf(Role::Text, query),
            leaf(Role::Image, format!("Map of {query}")),
            button(app.label("save"), Control::SavePlace),
        ];
        out.push(group(Role::Section, app.label("result"), result));
    }
    out.push(leaf(Role::Heading, app.label("saved_heading")));
    for (i, p) in state.places.iter().enumerate() {
        let item = vec![leaf(Role::Text, &p.name), button(app.label("remove"), Control::RemovePlace(i))];
        out.push(group(Role::Listitem, &p.name, item));
    }
}

fn file_entry(node: &FileNode, path: &str, app: &AppConfig) -> UiNode {
    let mut item = vec![leaf(Role::Text, &node.name)];
    if node.kind == NodeKind::Folder {
        item.push(button(
            app.label("new_file"),
            Control::OpenNewEntry { parent: path.to_string(), kind: NodeKind::File },
        ));
        item.push(button(
            app.label("new_folder"),
            Control::OpenNewEntry { parent: path.to_string(), kind: NodeKind::Folder },
        ));
    }
    item.push(button(app.label("delete"), Control::DeleteEntry(path.to_string())));
    for c in &node.children {
        item.push(file_entry(c, &crate::state::join_path(path, &c.name), app));
    }
    group(Role::Listitem, &node.name, item)
}

fn codeeditor(state: &EnvState, app: &AppConfig, out: &mut Vec<UiNode>) {
    out.push(leaf(Role::Heading, app.label("explorer_heading")));
    out.push(button(
        app.label("new_file"),
        Control::OpenNewEntry { parent: String::new(), kind: NodeKind::File },
    ));
    out.push(button(
        app.label("new_folder"),
        Control::OpenNewEntry { parent: String::new(), kind: NodeKind::Folder },
    ));
    if let Some(Dialog::NewEntry { kind, .. }) = &state.nav.open_dialog {
        let title = match kind {
            NodeKind::File => app.label("new_file"),
            NodeKind::Folder => app.label("new_folder"),
        };
        let form = vec![
            textbox(state, app, FieldId::EntryName),
            button(app.label("create"), Control::SubmitNewEntry),
            button(app.label("cancel"), Control::CloseDialog),
        ];
        out.push(group(Role::Section, title, form));
    }
    for c in &state.files.children {
        out.push(file_entry(c, &c.name, app));
    }
}

fn shop(state: &EnvState, app: &AppConfig, out: &mut Vec<UiNode>) {
    out.push(link(format!("{} ({})", app.label("cart"), state.cart.len()), Route::Cart));
    if let Some(Dialog::Product { id }) = &state.nav.open_dialog {
        if let Some(p) = state.product(id) {
            out.push(button(app.label("back"), Control::CloseDialog));
            out.push(leaf(Role::Heading, &p.name));
            for (name, values) in &p.options {
                let chosen = state.nav.field_value(&format!("option.{name}"));
                let opts = values
                    .iter()
                    .map(|v| {
                        let mut n = UiNode::new(Role::Option, v);
                        n.interactive = true;
                        n.selected = chosen == Some(v.as_str());
                        n.control = Some(Control::SelectOption { option: name.clone(), value: v.clone() });
                        n
                    })
                    .collect();
                out.push(group(Role::Section, name, opts));
            }
            out.push(textbox(state, app, FieldId::Quantity));
            out.push(button(app.label("add_to_cart"), Control::AddToCart));
            return;
        }
    }
    out.push(leaf(Role::Heading, app.label("products_heading")));
    for p in &state.catalog {
        let item = vec![leaf(Role::Text, &p.name), button(app.label("view"), Control::OpenProduct(p.id.clone()))];
        out.push(group(Role::Listitem, &p.name, item));
    }
}

fn cart(state: &EnvState, app: &AppConfig, out: &mut Vec<UiNode>) {
    out.push(leaf(Role::Heading, app.label("cart")));
    if state.cart.is_empty() {
        out.push(leaf(Role::Text, app.label("empty_cart")));
        return;
    }
    for (i, line) in state.cart.iter().enumerate() {
        let name = state.product(&line.product_id).map_or(line.product_id.as_str(), |p| p.name.as_str());
        let opts: Vec<String> = line.options.iter().map(|(k, v)| format!("{k}: {v}")).collect();
        let text = if opts.is_empty() {
            format!("{name} x{}", line.quantity)
        } else {
            format!("{name} ({}) x{}", opts.join(", "), line.quantity)
        };
        let item = vec![leaf(Role::Text, &text), button(app.label("remove"), Control::RemoveCartItem(i))];
        out.push(group(Role::Listitem, name, item));
    }
    out.push(button(app.label("remove_all"), Control::ClearCart));
}

//! Map a parsed action onto the control it triggers on the current page.

use crate::action::Action;
use crate::state::{Control, NavState, RejectCode, Rejection, Route};

use super::{Observation, Role, UiNode};

fn reject(code: RejectCode, detail: impl Into<String>) -> Rejection {
    Rejection::new(code, detail)
}

fn node<'a>(obs: &'a Observation, bid: &str) -> Result<&'a UiNode, Rejection> {
    obs.find(bid)
        .ok_or_else(|| reject(RejectCode::UnknownBid, format!("no element with bid `{bid}`")))
}

/// What a primary click on a node does.
pub(crate) fn activate(n: &UiNode) -> Result<Control, Rejection> {
    if let Some(c) = &n.control {
        return Ok(c.clone());
    }
    if let Some(f) = n.field {
        return Ok(Control::Focus(f));
    }
    Err(reject(
        RejectCode::NoTarget,
        format!("{} `{}` (bid {}) is not interactive", n.role, n.label, n.bid),
    ))
}

fn left_button(action: &Action) -> Result<(), Rejection> {
    match action.str_arg("button") {
        None | Some("left") => Ok(()),
        Some(b) => Err(reject(RejectCode::NoEffect, format!("{b} click has no effect"))),
    }
}

fn to_px(v: f64) -> u32 {
    v.max(0.0).min(u32::MAX as f64) as u32
}

fn focused_value(nav: &NavState) -> Result<(crate::state::FieldId, String), Rejection> {
    let field = nav
        .focused_field
        .ok_or_else(|| reject(RejectCode::NoFocus, "no text field has focus"))?;
    Ok((field, nav.field_value(field.key()).unwrap_or("").to_string()))
}

fn key_press(nav: &NavState, key: &str) -> Result<Control, Rejection> {
    let lower = key.trim().to_ascii_lowercase();
    let parts: Vec<&str> = lower.split(['+', ' ']).filter(|p| !p.is_empty()).collect();
    let (last, mods) = match parts.split_last() {
        Some((l, m)) => (*l, m),
        None => return Err(reject(RejectCode::NoEffect, "empty key")),
    };
    let ctrl = mods
        .iter()
        .any(|m| matches!(*m, "control" | "ctrl" | "meta" | "cmd" | "controlormeta"));
    match (ctrl, last) {
        (true, "a") => {
            focused_value(nav)?;
            Ok(Control::SelectAll)
        }
        (false, "enter") => Ok(focused_value(nav)?.0.submit()),
        (false, "backspace") | (false, "delete") => {
            let (field, value) = focused_value(nav)?;
            let value = if nav.select_all {
                String::new()
            } else {
                let mut v = value;
                v.pop();
                v
            };
            Ok(Control::SetField { field, value })
        }
        _ => Err(reject(RejectCode::NoEffect, format!("key `{key}` has no effect here"))),
    }
}

/// Resolve an action against the observation it was issued on. Keyboard
/// actions read focus and field contents from `nav`. A `goto` that leaves the
/// environment is rejected with `external_navigation`; the detail carries the
/// URL.
pub fn resolve(obs: &Observation, nav: &NavState, action: &Action) -> Result<Control, Rejection> {
    let bid = || action.str_arg("bid").unwrap_or("");
    match action.name.as_str() {
        "click" | "dblclick" => {
            left_button(action)?;
            activate(node(obs, bid())?)
        }
        "fill" | "clear" => {
            let n = node(obs, bid())?;
            let field = n.field.ok_or_else(|| {
                reject(RejectCode::NotATextbox, format!("{} `{}` is not a text field", n.role, n.label))
            })?;
            let value = action.str_arg("value").unwrap_or("").to_string();
            Ok(Control::SetField { field, value })
        }
        "select_option" => {
            let n = node(obs, bid())?;
            let wanted: Vec<&str> = match action.get("options") {
                Some(crate::action::ArgValue::List(items)) => items.iter().filter_map(|i| i.as_str()).collect(),
                Some(v) => v.as_str().into_iter().collect(),
                None => Vec::new(),
            };
            let candidates: Vec<&UiNode> = if n.role == Role::Option {
                vec![n]
            } else {
                n.children.iter().filter(|c| c.role == Role::Option).collect()
            };
            if candidates.is_empty() {
                return Err(reject(RejectCode::NoTarget, format!("`{}` has no options", n.label)));
            }
            candidates
                .into_iter()
                .find(|c| wanted.contains(&c.label.as_str()))
                .map(activate)
                .unwrap_or_else(|| {
                    Err(reject(RejectCode::InvalidInput, format!("no option {wanted:?} in `{}`", n.label)))
                })
        }
        "hover" => {
            node(obs, bid())?;
            Err(reject(RejectCode::NoEffect, "hovering has no effect"))
        }
        "drag_and_drop" | "mouse_drag_and_drop" | "mouse_upload_file" => {
            Err(reject(RejectCode::Unsupported, format!("`{}` is not supported by these apps", action.name)))
        }
        "go_back" => Ok(Control::GoBack),
        "go_forward" => Ok(Control::GoForward),
        "goto" => {
            let url = action.str_arg("url").unwrap_or("");
            match Route::from_url(url) {
                Route::External(u) => Err(reject(RejectCode::ExternalNavigation, u)),
                route => Ok(Control::Navigate(route)),
            }
        }
        "scroll" => {
            let dy = action.num_arg("delta_y").unwrap_or(0.0).round();
            let target = (obs.scroll_offset as f64 + dy).clamp(0.0, obs.max_scroll() as f64) as u32;
            if target == obs.scroll_offset && nav.scroll_offset == target {
                return Err(reject(RejectCode::NoEffect, "page cannot scroll further"));
            }
            Ok(Control::ScrollTo(target))
        }
        "mouse_click" | "mouse_dblclick" | "mouse_move" | "mouse_down" | "mouse_up" => {
            let x = action.num_arg("x").unwrap_or(-1.0);
            let y = action.num_arg("y").unwrap_or(-1.0);
            let vp = obs.viewport;
            if !(x >= 0.0 && y >= 0.0 && x < vp.width as f64 && y < vp.height as f64) {
                return Err(reject(
                    RejectCode::OutOfViewport,
                    format!("({x}, {y}) is outside the {vp} viewport"),
                ));
            }
            if !matches!(action.name.as_str(), "mouse_click" | "mouse_dblclick") {
                return Err(reject(RejectCode::NoEffect, format!("`{}` alone has no effect", action.name)));
            }
            left_button(action)?;
            let (px, py) = (to_px(x), to_px(y) + obs.scroll_offset);
            let hit = obs.hit_test(px, py).ok_or_else(|| {
                reject(RejectCode::NoTarget, format!("nothing clickable at ({x}, {y})"))
            })?;
            activate(hit)
        }
        "keyboard_press" => key_press(nav, action.str_arg("key").unwrap_or("")),
        "keyboard_type" | "keyboard_insert_text" => {
            let (field, value) = focused_value(nav)?;
            let text = action.str_arg("text").unwrap_or("");
            let value = if nav.select_all { text.to_string() } else { value + text };
            Ok(Control::SetField { field, value })
        }
        "keyboard_down" | "keyboard_up" => {
            Err(reject(RejectCode::NoEffect, "holding or releasing a key has no effect"))
        }
        other => Err(reject(RejectCode::Unsupported, format!("`{other}` is not supported"))),
    }
}

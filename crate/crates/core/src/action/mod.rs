//! Agent action commands: profiles, signatures and typed actions.

mod parser;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use parser::{parse_action, split_concatenated_calls};

/// Version of the signature manifest format.
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionProfile {
    #[default]
    Full,
    VisualOnly,
}

impl ActionProfile {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionProfile::Full => "full",
            ActionProfile::VisualOnly => "visual_only",
        }
    }

    /// Action names as listed for the profile, repeats included.
    pub fn listing(self) -> &'static [&'static str] {
        match self {
            ActionProfile::Full => FULL_LISTING,
            ActionProfile::VisualOnly => VISUAL_LISTING,
        }
    }

    /// Distinct allowed names in listing order.
    pub fn allowed(self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = Vec::new();
        for n in self.listing() {
            if !out.contains(n) {
                out.push(n);
            }
        }
        out
    }

    pub fn allows(self, name: &str) -> bool {
        self.listing().contains(&name)
    }
}

impl fmt::Display for ActionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(ActionProfile::Full),
            "visual_only" | "visual" => Ok(ActionProfile::VisualOnly),
            other => Err(format!("unknown action profile `{other}`")),
        }
    }
}

const FULL_LISTING: &[&str] = &[
    "click",
    "fill",
    "dblclick",
    "clear",
    "select_option",
    "drag_and_drop",
    "hover",
    "go_back",
    "go_forward",
    "goto",
    "scroll",
    "mouse_click",
    "mouse_dblclick",
    "mouse_move",
    "mouse_down",
    "mouse_up",
    "mouse_click",
    "mouse_dblclick",
    "mouse_drag_and_drop",
    "mouse_upload_file",
    "keyboard_down",
    "keyboard_up",
    "keyboard_press",
    "keyboard_type",
    "keyboard_insert_text",
];

const VISUAL_LISTING: &[&str] = &[
    "go_back",
    "go_forward",
    "goto",
    "mouse_click",
    "mouse_dblclick",
    "scroll",
    "mouse_move",
    "mouse_down",
    "mouse_up",
    "mouse_click",
    "mouse_dblclick",
    "mouse_drag_and_drop",
    "mouse_upload_file",
    "keyboard_down",
    "keyboard_up",
    "keyboard_press",
    "keyboard_type",
    "keyboard_insert_text",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgType {
    Str,
    Number,
    /// `'left' | 'middle' | 'right'`
    Button,
    /// list of `'Alt' | 'Control' | 'ControlOrMeta' | 'Meta' | 'Shift'`
    Modifiers,
    StrOrList,
}

pub const BUTTONS: [&str; 3] = ["left", "middle", "right"];
pub const MODIFIERS: [&str; 5] = ["Alt", "Control", "ControlOrMeta", "Meta", "Shift"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Param {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub ty: ArgType,
    pub required: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Signature {
    pub name: &'static str,
    pub params: Vec<Param>,
    pub description: &'static str,
}

fn p(name: &'static str, ty: ArgType) -> Param {
    Param { name, ty, required: true, default: None }
}

fn o(name: &'static str, ty: ArgType, default: &'static str) -> Param {
    Param { name, ty, required: false, default: Some(default) }
}

/// Signature of a known action name, independent of profile.
pub fn signature(name: &str) -> Option<Signature> {
    use ArgType::*;
    let (params, description) = match name {
        "click" => (
            vec![p("bid", Str), o("button", Button, "'left'"), o("modifiers", Modifiers, "[]")],
            "Click an element.",
        ),
        "fill" => (vec![p("bid", Str), p("value", Str)], "Replace the text of an input."),
        "dblclick" => (
            vec![p("bid", Str), o("button", Button, "'left'"), o("modifiers", Modifiers, "[]")],
            "Double-click an element.",
        ),
        "clear" => (vec![p("bid", Str)], "Empty an input."),
        "select_option" => (vec![p("bid", Str), p("options", StrOrList)], "Choose option(s) in a select."),
        "drag_and_drop" => (vec![p("from_bid", Str), p("to_bid", Str)], "Drag one element onto another."),
        "hover" => (vec![p("bid", Str)], "Move the mouse over an element."),
        "go_back" => (vec![], "Go to the previous page."),
        "go_forward" => (vec![], "Go to the next page."),
        "goto" => (vec![p("url", Str)], "Open a URL."),
        "scroll" => (vec![p("delta_x", Number), p("delta_y", Number)], "Scroll by a pixel offset."),
        "mouse_click" => (
            vec![p("x", Number), p("y", Number), o("button", Button, "'left'")],
            "Click at viewport coordinates.",
        ),
        "mouse_dblclick" => (
            vec![p("x", Number), p("y", Number), o("button", Button, "'left'")],
            "Double-click at viewport coordinates.",
        ),
        "mouse_move" => (vec![p("x", Number), p("y", Number)], "Move the mouse."),
        "mouse_down" => (
            vec![p("x", Number), p("y", Number), o("button", Button, "'left'")],
            "Press a mouse button.",
        ),
        "mouse_up" => (
            vec![p("x", Number), p("y", Number), o("button", Button, "'left'")],
            "Release a mouse button.",
        ),
        "mouse_drag_and_drop" => (
            vec![p("from_x", Number), p("from_y", Number), p("to_x", Number), p("to_y", Number)],
            "Drag between two points.",
        ),
        "mouse_upload_file" => (
            vec![p("x", Number), p("y", Number), p("file", StrOrList)],
            "Upload file(s) through the input at a point.",
        ),
        "keyboard_down" => (vec![p("key", Str)], "Hold a key down."),
        "keyboard_up" => (vec![p("key", Str)], "Release a key."),
        "keyboard_press" => (vec![p("key", Str)], "Press a key or combination, e.g. 'Enter' or 'Control+a'."),
        "keyboard_type" => (vec![p("text", Str)], "Type text into the focused input."),
        "keyboard_insert_text" => (vec![p("text", Str)], "Insert text into the focused input."),
        _ => return None,
    };
    let name = FULL_LISTING.iter().find(|n| **n == name)?;
    Some(Signature { name, params, description })
}

/// Signatures for every distinct action allowed by a profile.
pub fn action_signatures(profile: ActionProfile) -> Vec<Signature> {
    profile
        .allowed()
        .into_iter()
        .map(|n| signature(n).expect("every listed action has a signature"))
        .collect()
}

#[derive(Serialize)]
struct Manifest {
    format_version: u32,
    profile: ActionProfile,
    actions: Vec<Signature>,
}

/// Versioned YAML manifest of a profile's signatures.
pub fn signature_manifest(profile: ActionProfile) -> String {
    crate::yaml::to_canonical_string(&Manifest {
        format_version: MANIFEST_VERSION,
        profile,
        actions: action_signatures(profile),
    })
    .expect("manifest serializes")
}

/// A literal argument value.
#[derive(Debug, Clone, PartialEq)]
pub enum ArgValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<ArgValue>),
    /// `None`
    Null,
    /// A bare identifier such as `bid`; never type-checks.
    Ident(String),
}

impl ArgValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            ArgValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ArgValue::Int(i) => Some(*i as f64),
            ArgValue::Float(f) => Some(*f),
            _ => None,
        }
    }

    fn type_name(&self) -> &'static str {
        match self {
            ArgValue::Bool(_) => "boolean",
            ArgValue::Int(_) => "integer",
            ArgValue::Float(_) => "float",
            ArgValue::Str(_) => "string",
            ArgValue::List(_) => "list",
            ArgValue::Null => "None",
            ArgValue::Ident(_) => "bare identifier",
        }
    }

    /// `Err` explains the mismatch.
    pub(crate) fn check(&self, ty: ArgType) -> Result<(), String> {
        let bad = || format!("expected {}, got {} `{self}`", describe(ty), self.type_name());
        let ok = match ty {
            ArgType::Str => matches!(self, ArgValue::Str(_)),
            ArgType::Number => matches!(self, ArgValue::Int(_) | ArgValue::Float(_)),
            ArgType::Button => self.as_str().is_some_and(|s| BUTTONS.contains(&s)),
            ArgType::Modifiers => match self {
                ArgValue::List(items) => items
                    .iter()
                    .all(|i| i.as_str().is_some_and(|s| MODIFIERS.contains(&s))),
                _ => false,
            },
            ArgType::StrOrList => match self {
                ArgValue::Str(_) => true,
                ArgValue::List(items) => items.iter().all(|i| matches!(i, ArgValue::Str(_))),
                _ => false,
            },
        };
        if ok {
            Ok(())
        } else {
            Err(bad())
        }
    }
}

fn describe(ty: ArgType) -> &'static str {
    match ty {
        ArgType::Str => "a string",
        ArgType::Number => "a number",
        ArgType::Button => "'left', 'middle' or 'right'",
        ArgType::Modifiers => "a list of modifier keys",
        ArgType::StrOrList => "a string or list of strings",
    }
}

/// Python-style single-quoted literal, as accepted by the parser.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

impl fmt::Display for ArgValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgValue::Bool(true) => f.write_str("True"),
            ArgValue::Bool(false) => f.write_str("False"),
            ArgValue::Int(i) => write!(f, "{i}"),
            ArgValue::Float(x) => write!(f, "{x:?}"),
            ArgValue::Str(s) => f.write_str(&quote(s)),
            ArgValue::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
            ArgValue::Null => f.write_str("None"),
            ArgValue::Ident(s) => f.write_str(s),
        }
    }
}

/// A well-formed, type-checked action. `args` holds the supplied arguments
/// bound to parameter names, in signature order.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub name: String,
    pub args: Vec<(String, ArgValue)>,
}

impl Action {
    pub fn get(&self, param: &str) -> Option<&ArgValue> {
        self.args.iter().find(|(k, _)| k == param).map(|(_, v)| v)
    }

    pub fn str_arg(&self, param: &str) -> Option<&str> {
        self.get(param).and_then(ArgValue::as_str)
    }

    pub fn num_arg(&self, param: &str) -> Option<f64> {
        self.get(param).and_then(ArgValue::as_f64)
    }
}

/// Required arguments positionally, optional ones by keyword.
impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sig = signature(&self.name);
        write!(f, "{}(", self.name)?;
        for (i, (k, v)) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let required = sig
                .as_ref()
                .and_then(|s| s.params.iter().find(|p| p.name == k))
                .is_some_and(|p| p.required);
            if required {
                write!(f, "{v}")?;
            } else {
                write!(f, "{k}={v}")?;
            }
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidCategory {
    /// Not of the shape `name(args)`, or the argument list does not tokenize.
    Malformed,
    /// Well formed, but the name is not an action of the profile.
    UnknownAction,
    /// Known action with wrong arity, types or keyword names.
    BadArguments,
}

impl fmt::Display for InvalidCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InvalidCategory::Malformed => "malformed",
            InvalidCategory::UnknownAction => "unknown_action",
            InvalidCategory::BadArguments => "bad_arguments",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvalidAction {
    pub raw: String,
    pub category: InvalidCategory,
    pub detail: String,
}

impl fmt::Display for InvalidAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.category, self.detail)
    }
}

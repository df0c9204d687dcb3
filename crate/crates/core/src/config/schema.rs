//! Structural validator over raw YAML values. Collects every problem with a
//! dotted path instead of stopping at the first one.

use chrono::NaiveDate;
use serde_yaml::Value;

use crate::state::AppId;

#[derive(Debug, Clone)]
pub(crate) enum Shape {
    Str,
    NonEmpty,
    Color,
    Size,
    Date,
    Bool,
    Quantity,
    Version,
    Enum(&'static [&'static str]),
    Nullable(Box<Shape>),
    List(Box<Shape>),
    Map(Box<Shape>),
    Record(Vec<Field>),
    FileTree,
}

#[derive(Debug, Clone)]
pub(crate) struct Field {
    key: String,
    required: bool,
    shape: Shape,
}

fn req(key: impl Into<String>, shape: Shape) -> Field {
    Field { key: key.into(), required: true, shape }
}

fn opt(key: impl Into<String>, shape: Shape) -> Field {
    Field { key: key.into(), required: false, shape }
}

fn nullable(s: Shape) -> Shape {
    Shape::Nullable(Box::new(s))
}

fn list(s: Shape) -> Shape {
    Shape::List(Box::new(s))
}

impl Shape {
    fn describe(&self) -> String {
        match self {
            Shape::Str => "a string".into(),
            Shape::NonEmpty => "a non-empty string".into(),
            Shape::Color => "a hex color like '#1095c1'".into(),
            Shape::Size => "a CSS size with a unit, like '16px' or '1.5rem'".into(),
            Shape::Date => "an ISO date (YYYY-MM-DD)".into(),
            Shape::Bool => "a boolean".into(),
            Shape::Quantity => "a positive integer".into(),
            Shape::Version => "the integer 1".into(),
            Shape::Enum(vals) => format!("one of {}", vals.join(", ")),
            Shape::Nullable(inner) => format!("{} or null", inner.describe()),
            Shape::List(_) => "a list".into(),
            Shape::Map(_) => "a mapping".into(),
            Shape::Record(fields) => {
                let keys: Vec<&str> = fields.iter().map(|f| f.key.as_str()).collect();
                format!("a mapping with keys {}", keys.join(", "))
            }
            Shape::FileTree => "a list of file entries".into(),
        }
    }
}

pub(crate) fn display_section(app: AppId) -> (&'static str, &'static [&'static str]) {
    match app {
        AppId::Calendar => (
            "add_event_display",
            &["title", "date", "description", "url", "invitees", "location"],
        ),
        AppId::Todo => ("add_todo_display", &["text"]),
        AppId::Messenger => ("compose_display", &["body"]),
        AppId::Maps => ("search_display", &["query"]),
        AppId::CodeEditor => ("new_file_display", &["name"]),
        AppId::Shop => ("add_to_cart_display", &["quantity"]),
    }
}

fn style(app: AppId) -> Shape {
    let (display, keys) = display_section(app);
    let strings = |keys: &[&str]| Shape::Record(keys.iter().map(|k| req(*k, Shape::Str)).collect());
    Shape::Record(vec![
        req(
            display,
            Shape::Record(vec![req("placeholder", strings(keys)), req("aria_label", strings(keys))]),
        ),
        req(
            "colors",
            Shape::Record(
                ["primary", "primary_hover", "secondary", "background", "text", "error", "border"]
                    .iter()
                    .map(|k| req(*k, Shape::Color))
                    .collect(),
            ),
        ),
        req(
            "typography",
            Shape::Record(vec![
                req("font_family", Shape::NonEmpty),
                req("heading_font", Shape::NonEmpty),
                req("base_font_size", Shape::Size),
                req("heading_size", Shape::Size),
            ]),
        ),
        req(
            "buttons",
            Shape::Record(vec![req("border_radius", Shape::Size), req("padding", Shape::Size)]),
        ),
        req(
            "layout",
            Shape::Record(vec![req("container_width", Shape::Size), req("spacing", Shape::Size)]),
        ),
    ])
}

fn data_fields(app: AppId) -> Vec<Field> {
    match app {
        AppId::Calendar => vec![req(
            "events",
            list(Shape::Record(vec![
                req("title", Shape::NonEmpty),
                req("date", Shape::Date),
                opt("description", Shape::Str),
                opt("url", nullable(Shape::Str)),
                opt("location", nullable(Shape::Str)),
                opt("invitees", nullable(list(Shape::NonEmpty))),
            ])),
        )],
        AppId::Todo => vec![req(
            "todos",
            list(Shape::Record(vec![req("text", Shape::NonEmpty), opt("done", Shape::Bool)])),
        )],
        AppId::Messenger => vec![req(
            "conversations",
            list(Shape::Record(vec![
                req("peer", Shape::NonEmpty),
                opt(
                    "messages",
                    list(Shape::Record(vec![
                        req("direction", Shape::Enum(&["sent", "received"])),
                        req("body", Shape::NonEmpty),
                    ])),
                ),
            ])),
        )],
        AppId::Maps => vec![req(
            "places",
            list(Shape::Record(vec![req("name", Shape::NonEmpty), req("query", Shape::NonEmpty)])),
        )],
        AppId::CodeEditor => vec![req("files", Shape::FileTree)],
        AppId::Shop => vec![
            req(
                "products",
                list(Shape::Record(vec![
                    req("id", Shape::NonEmpty),
                    req("name", Shape::NonEmpty),
                    opt("options", Shape::Map(Box::new(list(Shape::NonEmpty)))),
                ])),
            ),
            opt(
                "cart",
                list(Shape::Record(vec![
                    req("product_id", Shape::NonEmpty),
                    opt("options", Shape::Map(Box::new(Shape::NonEmpty))),
                    req("quantity", Shape::Quantity),
                ])),
            ),
        ],
    }
}

/// Shape of one app section. In `strict` mode (inside a full config set) the
/// page text, language and labels are required; a standalone app file may
/// omit them.
pub(crate) fn app_shape(app: AppId, strict: bool) -> Shape {
    let field = if strict { req } else { opt };
    let mut fields = vec![
        req("style", style(app)),
        field(
            "page",
            Shape::Record(vec![
                req("title", Shape::NonEmpty),
                req("description", Shape::Str),
                opt("details", Shape::Str),
            ]),
        ),
        field("language", Shape::NonEmpty),
        field("labels", Shape::Map(Box::new(Shape::Str))),
    ];
    fields.extend(data_fields(app));
    Shape::Record(fields)
}

pub(crate) fn config_set_shape() -> Shape {
    Shape::Record(vec![
        req("schema_version", Shape::Version),
        req(
            "globals",
            Shape::Record(vec![
                req("today", Shape::Date),
                req("home_title", Shape::NonEmpty),
                req("home_description", Shape::Str),
            ]),
        ),
        req(
            "apps",
            Shape::Record(AppId::ALL.iter().map(|a| req(a.as_str(), app_shape(*a, true))).collect()),
        ),
    ])
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Sequence(_) => "a list",
        Value::Mapping(_) => "a mapping",
        Value::Tagged(_) => "a tagged value",
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

pub(crate) fn is_hex_color(s: &str) -> bool {
    s.strip_prefix('#').is_some_and(|h| {
        matches!(h.len(), 3 | 4 | 6 | 8) && h.bytes().all(|b| b.is_ascii_hexdigit())
    })
}

/// Every space-separated part is `0` or a number followed by a CSS unit.
pub(crate) fn is_css_size(s: &str) -> bool {
    const UNITS: &[&str] = &["px", "rem", "em", "%", "vh", "vw", "pt", "ch"];
    let parts: Vec<&str> = s.split_whitespace().collect();
    !parts.is_empty()
        && parts.iter().all(|p| {
            if *p == "0" {
                return true;
            }
            UNITS.iter().any(|u| {
                p.strip_suffix(u)
                    .is_some_and(|n| !n.is_empty() && n.parse::<f64>().is_ok_and(|x| x >= 0.0))
            })
        })
}

pub(crate) fn validate(value: &Value, shape: &Shape, path: &str, errors: &mut Vec<String>) {
    let at = if path.is_empty() { "<root>" } else { path };
    let mismatch = |errors: &mut Vec<String>| {
        errors.push(format!("{at}: expected {}, found {}", shape.describe(), kind_of(value)))
    };
    match shape {
        Shape::Str => {
            if !value.is_string() {
                mismatch(errors)
            }
        }
        Shape::NonEmpty => match value.as_str() {
            Some(s) if !s.trim().is_empty() => {}
            Some(_) => errors.push(format!("{at}: must not be empty")),
            None => mismatch(errors),
        },
        Shape::Color => match value.as_str() {
            Some(s) if is_hex_color(s) => {}
            Some(s) => errors.push(format!("{at}: `{s}` is not a hex color")),
            None => mismatch(errors),
        },
        Shape::Size => match value.as_str() {
            Some(s) if is_css_size(s) => {}
            Some(s) => errors.push(format!("{at}: `{s}` is not a CSS size with a unit")),
            None => mismatch(errors),
        },
        Shape::Date => match value.as_str() {
            Some(s) if NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok() => {}
            Some(s) => errors.push(format!("{at}: `{s}` is not a valid YYYY-MM-DD date")),
            None => mismatch(errors),
        },
        Shape::Bool => {
            if !value.is_bool() {
                mismatch(errors)
            }
        }
        Shape::Quantity => match value.as_u64() {
            Some(n) if n >= 1 && n <= u32::MAX as u64 => {}
            _ => mismatch(errors),
        },
        Shape::Version => {
            if value.as_u64() != Some(1) {
                errors.push(format!("{at}: unsupported schema_version, expected 1"));
            }
        }
        Shape::Enum(vals) => match value.as_str() {
            Some(s) if vals.contains(&s) => {}
            _ => mismatch(errors),
        },
        Shape::Nullable(inner) => {
            if !value.is_null() {
                validate(value, inner, path, errors)
            }
        }
        Shape::List(inner) => match value.as_sequence() {
            Some(items) => {
                for (i, item) in items.iter().enumerate() {
                    validate(item, inner, &join(path, &i.to_string()), errors);
                }
            }
            None => mismatch(errors),
        },
        Shape::Map(inner) => match value.as_mapping() {
            Some(m) => {
                for (k, v) in m {
                    match k.as_str() {
                        Some(k) => validate(v, inner, &join(path, k), errors),
                        None => errors.push(format!("{at}: keys must be strings")),
                    }
                }
            }
            None => mismatch(errors),
        },
        Shape::Record(fields) => {
            let empty = serde_yaml::Mapping::new();
            let m = match value {
                Value::Mapping(m) => m,
                // an empty document reports every missing key below
                Value::Null if path.is_empty() => &empty,
                _ => return mismatch(errors),
            };
            for f in fields {
                match m.get(f.key.as_str()) {
                    Some(v) => validate(v, &f.shape, &join(path, &f.key), errors),
                    None if f.required => errors.push(format!(
                        "{}: missing required key (expected {})",
                        join(path, &f.key),
                        f.shape.describe()
                    )),
                    None => {}
                }
            }
            for k in m.keys() {
                let known = k.as_str().is_some_and(|k| fields.iter().any(|f| f.key == k));
                if !known {
                    let name = k.as_str().map(str::to_string).unwrap_or_else(|| format!("{k:?}"));
                    errors.push(format!("{}: unknown key", join(path, &name)));
                }
            }
        }
        Shape::FileTree => match value.as_sequence() {
            Some(items) => {
                let entry = Shape::Record(vec![
                    req("name", Shape::NonEmpty),
                    req("kind", Shape::Enum(&["file", "folder"])),
                    opt("children", Shape::FileTree),
                ]);
                for (i, item) in items.iter().enumerate() {
                    let p = join(path, &i.to_string());
                    validate(item, &entry, &p, errors);
                    let is_file = item.get("kind").and_then(Value::as_str) == Some("file");
                    let has_children = item
                        .get("children")
                        .and_then(Value::as_sequence)
                        .is_some_and(|c| !c.is_empty());
                    if is_file && has_children {
                        errors.push(format!("{p}: a file cannot have children"));
                    }
                }
            }
            None => mismatch(errors),
        },
    }
}

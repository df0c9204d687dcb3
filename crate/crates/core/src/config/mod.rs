//! App configuration: schema, loading and the initial state it defines.

mod enumerate;
mod schema;
mod variation;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_yaml::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::state::{
    AppId, CalendarEvent, CartItem, Direction, EnvState, FileNode, Message, Product, SavedPlace,
    TodoItem,
};

pub use enumerate::{axes, enumerate_variants, Axis, EnumerateLimits, Variant, VariantStream};
pub use variation::{apply_variation, compose_variations, Catalog, Variation, VariationKind};


pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("YAML parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema errors:\n  {}", .0.join("\n  "))]
    Schema(Vec<String>),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("unknown variation `{0}`")]
    UnknownVariation(String),
    #[error("unknown bundle `{0}`")]
    UnknownBundle(String),
    #[error("variation `{variation}`: {reason}")]
    BadPatch { variation: String, reason: String },
    #[error("variations `{first}` and `{second}` both set `{path}` to different values")]
    Conflict { path: String, first: String, second: String },
    #[error("{0}")]
    Io(String),
}

impl ConfigError {
    pub(crate) fn parse(e: &serde_yaml::Error) -> Self {
        let (line, column) = e.location().map_or((0, 0), |l| (l.line(), l.column()));
        ConfigError::Parse { line, column, message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormDisplay {
    pub placeholder: BTreeMap<String, String>,
    pub aria_label: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Colors {
    pub primary: String,
    pub primary_hover: String,
    pub secondary: String,
    pub background: String,
    pub text: String,
    pub error: String,
    pub border: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Typography {
    pub font_family: String,
    pub heading_font: String,
    pub base_font_size: String,
    pub heading_size: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Buttons {
    pub border_radius: String,
    pub padding: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutStyle {
    pub container_width: String,
    pub spacing: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Style {
    /// The app's form section, e.g. `add_event_display`.
    #[serde(flatten)]
    pub displays: BTreeMap<String, FormDisplay>,
    pub colors: Colors,
    pub typography: Typography,
    pub buttons: Buttons,
    pub layout: LayoutStyle,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageText {
    pub title: String,
    pub description: String,
    /// Extra prose under the description; description variations fill it.
    #[serde(default)]
    pub details: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationConfig {
    pub peer: String,
    #[serde(default)]
    pub messages: Vec<MessageConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageConfig {
    pub direction: Direction,
    pub body: String,
}

fn default_language() -> String {
    "en".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppConfig {
    pub style: Style,
    #[serde(default)]
    pub page: PageText,
    #[serde(default = "default_language")]
    pub language: String,
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<CalendarEvent>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub todos: Option<Vec<TodoItem>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conversations: Option<Vec<ConversationConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub places: Option<Vec<SavedPlace>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub files: Option<Vec<FileNode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub products: Option<Vec<Product>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cart: Option<Vec<CartItem>>,
}

impl AppConfig {
    /// Label text for a UI string key, falling back to the built-in English text.
    pub fn label<'a>(&'a self, key: &'a str) -> &'a str {
        self.labels
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| default_label(key))
    }

    /// The single form section of this app.
    pub fn display(&self) -> Option<&FormDisplay> {
        self.style.displays.values().next()
    }

    pub fn aria_label(&self, field: &str) -> Option<&str> {
        self.display()?.aria_label.get(field).map(String::as_str)
    }

    pub fn placeholder(&self, field: &str) -> Option<&str> {
        self.display()?.placeholder.get(field).map(String::as_str)
    }
}

fn default_label(key: &str) -> &str {
    match key {
        "list_heading" => "Items",
        "add_event" => "Add event",
        "save" => "Save",
        "cancel" => "Cancel",
        "duplicate" => "Duplicate",
        "delete" => "Delete",
        "add" => "Add",
        "contacts_heading" => "Contacts",
        "back" => "Back",
        "send" => "Send",
        "forward" => "Forward",
        "forward_heading" => "Forward to",
        "you" => "You",
        "search" => "Search",
        "result" => "Result",
        "saved_heading" => "Saved Locations",
        "remove" => "Remove",
        "explorer_heading" => "Explorer",
        "new_file" => "New file",
        "new_folder" => "New folder",
        "create" => "Create",
        "products_heading" => "Products",
        "view" => "View",
        "add_to_cart" => "Add to cart",
        "cart" => "Cart",
        "remove_all" => "Remove all",
        "empty_cart" => "Your cart is empty",
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Globals {
    pub today: NaiveDate,
    pub home_title: String,
    pub home_description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Apps {
    pub calendar: AppConfig,
    pub todo: AppConfig,
    pub messenger: AppConfig,
    pub maps: AppConfig,
    pub codeeditor: AppConfig,
    pub shop: AppConfig,
}

impl Apps {
    pub fn get(&self, app: AppId) -> &AppConfig {
        match app {
            AppId::Calendar => &self.calendar,
            AppId::Todo => &self.todo,
            AppId::Messenger => &self.messenger,
            AppId::Maps => &self.maps,
            AppId::CodeEditor => &self.codeeditor,
            AppId::Shop => &self.shop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppConfigSet {
    pub schema_version: u32,
    pub globals: Globals,
    pub apps: Apps,
}

impl AppConfigSet {
    pub fn to_yaml(&self) -> String {
        crate::yaml::to_canonical_string(self).expect("config serializes")
    }

    pub fn to_value(&self) -> Value {
        serde_yaml::to_value(self).expect("config serializes")
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_yaml().as_bytes()))
    }

    /// Validate a raw value and convert it.
    pub fn from_value(value: &Value) -> Result<Self, ConfigError> {
        let mut errors = Vec::new();
        schema::validate(value, &schema::config_set_shape(), "", &mut errors);
        if !errors.is_empty() {
            return Err(ConfigError::Schema(errors));
        }
        let set: AppConfigSet =
            serde_yaml::from_value(value.clone()).map_err(|e| ConfigError::Schema(vec![e.to_string()]))?;
        let problems = set.semantic_errors();
        if !problems.is_empty() {
            return Err(ConfigError::Invalid(problems));
        }
        Ok(set)
    }

    fn semantic_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let mut peers = std::collections::BTreeSet::new();
        for c in self.apps.messenger.conversations.iter().flatten() {
            if !peers.insert(c.peer.as_str()) {
                errors.push(format!("apps.messenger.conversations: duplicate peer `{}`", c.peer));
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for p in self.apps.shop.products.iter().flatten() {
            if !ids.insert(p.id.as_str()) {
                errors.push(format!("apps.shop.products: duplicate product id `{}`", p.id));
            }
        }
        errors.extend(init_state(self).violations());
        errors
    }
}

/// The configuration shipped with the engine.
pub const DEFAULT_CONFIG_YAML: &str = include_str!("../../data/default_config.yaml");

pub fn default_config() -> AppConfigSet {
    load_config(DEFAULT_CONFIG_YAML).expect("shipped config is valid")
}

/// Parse and validate a full configuration set.
pub fn load_config(text: &str) -> Result<AppConfigSet, ConfigError> {
    let value: Value = serde_yaml::from_str(text).map_err(|e| ConfigError::parse(&e))?;
    let mut value = value;
    value.apply_merge().map_err(|e| ConfigError::parse(&e))?;
    AppConfigSet::from_value(&value)
}

/// Parse and validate one app's configuration file. Page text, language and
/// labels may be omitted here.
pub fn load_app_config(app: AppId, text: &str) -> Result<AppConfig, ConfigError> {
    let value: Value = serde_yaml::from_str(text).map_err(|e| ConfigError::parse(&e))?;
    let mut errors = Vec::new();
    schema::validate(&value, &schema::app_shape(app, false), "", &mut errors);
    if !errors.is_empty() {
        return Err(ConfigError::Schema(errors));
    }
    serde_yaml::from_value(value).map_err(|e| ConfigError::Schema(vec![e.to_string()]))
}

/// The initial state s0 defined by a configuration.
pub fn init_state(configs: &AppConfigSet) -> EnvState {
    let apps = &configs.apps;
    let mut s = EnvState::empty(configs.globals.today);
    s.calendar = apps.calendar.events.clone().unwrap_or_default();
    s.todos = apps.todo.todos.clone().unwrap_or_default();
    for c in apps.messenger.conversations.iter().flatten() {
        let msgs = c
            .messages
            .iter()
            .enumerate()
            .map(|(i, m)| Message {
                peer: c.peer.clone(),
                direction: m.direction,
                body: m.body.clone(),
                seq: i as u64 + 1,
            })
            .collect();
        s.conversations.insert(c.peer.clone(), msgs);
    }
    s.places = apps.maps.places.clone().unwrap_or_default();
    s.files = FileNode::root(apps.codeeditor.files.clone().unwrap_or_default());
    s.catalog = apps.shop.products.clone().unwrap_or_default();
    s.cart = apps.shop.cart.clone().unwrap_or_default();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::canonicalize;

    #[test]
    fn default_loads_and_round_trips() {
        let cfg = default_config();
        let again = load_config(&cfg.to_yaml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.to_yaml(), again.to_yaml());
    }

    #[test]
    fn init_state_matches_content() {
        let cfg = default_config();
        let s = init_state(&cfg);
        assert_eq!(s.logical_clock, 0);
        assert_eq!(s.nav.route, crate::state::Route::Home);
        assert_eq!(s.today, NaiveDate::from_ymd_opt(2025, 7, 1).unwrap());
        assert_eq!(s.calendar[0].title, "WACV 2026 Abstract Deadline");
        assert_eq!(s.todos.len(), 5);
        assert_eq!(s.conversations["Bob"].last().unwrap().seq, 3);
        assert!(s.violations().is_empty());
        assert_eq!(canonicalize(&s), canonicalize(&init_state(&cfg)));
    }

    #[test]
    fn bad_values_are_reported_with_paths() {
        let text = DEFAULT_CONFIG_YAML
            .replace("primary: '#1095c1'", "primary: 'blue'")
            .replace("base_font_size: '16px'", "base_font_size: '16'")
            .replace("date: 2025-07-18", "date: 2025-13-18");
        let err = load_config(&text).unwrap_err();
        let ConfigError::Schema(errors) = err else { panic!("{err}") };
        assert!(errors.contains(&"apps.calendar.style.colors.primary: `blue` is not a hex color".to_string()));
        assert!(errors.iter().any(|e| e.starts_with("apps.calendar.style.typography.base_font_size")));
        assert!(errors.iter().any(|e| e.starts_with("apps.calendar.events.1.date")));
    }

    #[test]
    fn yaml_syntax_errors_carry_location() {
        let err = load_config("a: [1, 2\nb: 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line, .. } if line > 0), "{err}");
    }

    #[test]
    fn cart_must_reference_known_options() {
        let text = DEFAULT_CONFIG_YAML.replace("size: 60ml\n        quantity: 2", "size: 90ml\n        quantity: 2");
        assert!(matches!(load_config(&text), Err(ConfigError::Invalid(_))));
    }
}

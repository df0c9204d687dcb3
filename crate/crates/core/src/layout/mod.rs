//! Deterministic page layout, observations and hit-testing.
//!
//! Pages are a single column. Every row is one node; row height comes from
//! the app's font size, font family and spacing. Labels never wrap, so the
//! vertical geometry does not depend on the viewport width.

mod html;
mod pages;
mod resolve;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{AppConfig, AppConfigSet};
use crate::state::{Control, EnvState, FieldId, Route};

pub use resolve::resolve;

/// Serialized as `WIDTHxHEIGHT`; presets are accepted on input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Viewport {
    pub width: u32,
    pub height: u32,
}

impl Viewport {
    pub const MIN: u32 = 240;
    pub const FHD: Viewport = Viewport { width: 1920, height: 1080 };
    pub const HD: Viewport = Viewport { width: 1280, height: 720 };
    pub const HVGA: Viewport = Viewport { width: 480, height: 320 };
    pub const PRESETS: [(&'static str, Viewport); 3] =
        [("fhd", Viewport::FHD), ("hd", Viewport::HD), ("hvga", Viewport::HVGA)];

    pub fn new(width: u32, height: u32) -> Result<Self, String> {
        if width < Self::MIN || height < Self::MIN {
            return Err(format!("viewport {width}x{height} is below the {0}x{0} minimum", Self::MIN));
        }
        Ok(Viewport { width, height })
    }
}

impl Default for Viewport {
    fn default() -> Self {
        Viewport::HD
    }
}

impl fmt::Display for Viewport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// `fhd`, `hd`, `hvga` or `WIDTHxHEIGHT`.
impl FromStr for Viewport {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some((_, v)) = Viewport::PRESETS.iter().find(|(n, _)| *n == lower) {
            return Ok(*v);
        }
        let (w, h) = lower
            .split_once('x')
            .ok_or_else(|| format!("`{s}` is not a viewport (fhd, hd, hvga or WxH)"))?;
        let parse = |t: &str| t.trim().parse::<u32>().map_err(|_| format!("`{s}` is not a viewport"));
        Viewport::new(parse(w)?, parse(h)?)
    }
}

impl Serialize for Viewport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Viewport {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Button,
    Link,
    Textbox,
    Checkbox,
    Option,
    Listitem,
    Section,
    Heading,
    Image,
    Text,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Button => "button",
            Role::Link => "link",
            Role::Textbox => "textbox",
            Role::Checkbox => "checkbox",
            Role::Option => "option",
            Role::Listitem => "listitem",
            Role::Section => "section",
            Role::Heading => "heading",
            Role::Image => "image",
            Role::Text => "text",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub fn contains(&self, px: u32, py: u32) -> bool {
        px >= self.x && px < self.x + self.w && py >= self.y && py < self.y + self.h
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.x + other.w <= self.x + self.w
            && other.y + other.h <= self.y + self.h
    }

    pub fn center(&self) -> (u32, u32) {
        (self.x + self.w / 2, self.y + self.h / 2)
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UiNode {
    pub bid: String,
    pub role: Role,
    pub label: String,
    pub bbox: BBox,
    pub interactive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placeholder: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub href: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checked: Option<bool>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub selected: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub focused: bool,
    /// What activating this node does.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<Control>,
    /// The text field this node edits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<UiNode>,
}

impl UiNode {
    pub fn new(role: Role, label: impl Into<String>) -> Self {
        UiNode {
            bid: String::new(),
            role,
            label: label.into(),
            bbox: BBox::default(),
            interactive: false,
            value: None,
            placeholder: None,
            href: None,
            checked: None,
            selected: false,
            focused: false,
            control: None,
            field: None,
            children: Vec::new(),
        }
    }

    /// Pre-order traversal with depth.
    pub fn walk<'a>(&'a self, depth: usize, f: &mut dyn FnMut(&'a UiNode, usize)) {
        f(self, depth);
        for c in &self.children {
            c.walk(depth + 1, f);
        }
    }

    pub fn flatten(&self) -> Vec<&UiNode> {
        let mut out = Vec::new();
        self.walk(0, &mut |n, _| out.push(n));
        out
    }
}

/// Number every node in depth-first pre-order: root "0", then "1", ...
pub fn assign_bids(root: &mut UiNode) {
    fn go(n: &mut UiNode, next: &mut usize) {
        n.bid = next.to_string();
        *next += 1;
        for c in &mut n.children {
            go(c, next);
        }
    }
    let mut next = 0;
    go(root, &mut next);
}

/// Pixel metrics derived from an app's style.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Metrics {
    pub font_px: f64,
    pub heading_px: f64,
    pub row: u32,
    pub heading_row: u32,
    pub pad: u32,
    pub indent: u32,
    pub margin: u32,
}

const ROOT_FONT_PX: f64 = 16.0;

/// First component of a CSS size in pixels; `percent_of` resolves `%`.
pub(crate) fn css_px(size: &str, em: f64, percent_of: f64) -> f64 {
    let first = size.split_whitespace().next().unwrap_or("0");
    let num = |suffix: &str| first.strip_suffix(suffix).and_then(|n| n.parse::<f64>().ok());
    if let Some(n) = num("px") {
        n
    } else if let Some(n) = num("rem") {
        n * ROOT_FONT_PX
    } else if let Some(n) = num("em") {
        n * em
    } else if let Some(n) = num("%") {
        n * percent_of / 100.0
    } else if let Some(n) = num("pt") {
        n * 4.0 / 3.0
    } else if let Some(n) = num("ch") {
        n * em * 0.5
    } else {
        first.parse::<f64>().unwrap_or(0.0)
    }
}

/// Script faces are taller than regular text at the same size.
fn line_factor(family: &str) -> f64 {
    if family.to_ascii_lowercase().contains("brush script") {
        1.9
    } else {
        1.5
    }
}

impl Metrics {
    pub(crate) fn of(app: &AppConfig) -> Self {
        let t = &app.style.typography;
        let font_px = css_px(&t.base_font_size, ROOT_FONT_PX, ROOT_FONT_PX).clamp(6.0, 96.0);
        let heading_px = css_px(&t.heading_size, font_px, font_px).clamp(6.0, 128.0);
        let spacing = css_px(&app.style.layout.spacing, font_px, font_px).clamp(0.0, 128.0);
        Metrics {
            font_px,
            heading_px,
            row: ((font_px * line_factor(&t.font_family) + spacing / 2.0).ceil() as u32).max(12),
            heading_row: ((heading_px * line_factor(&t.heading_font) + spacing / 2.0).ceil() as u32)
                .max(12),
            pad: (spacing / 4.0).round() as u32,
            indent: ((spacing / 2.0).round() as u32).max(4),
            margin: (spacing.round() as u32).min(64),
        }
    }
}

fn place(node: &mut UiNode, x: u32, y: u32, w: u32, m: &Metrics) -> u32 {
    let h = match node.role {
        Role::Section | Role::Listitem if !node.children.is_empty() => {
            let mut cy = y + m.pad;
            let cw = w.saturating_sub(m.indent).max(1);
            for c in &mut node.children {
                cy += place(c, x + m.indent.min(w.saturating_sub(1)), cy, cw, m);
            }
            cy + m.pad - y
        }
        Role::Heading => m.heading_row,
        _ => m.row,
    };
    node.bbox = BBox { x, y, w, h };
    h
}

/// The app whose style a route uses. Home and external pages use the
/// calendar style.
pub fn style_app(route: &Route) -> crate::state::AppId {
    route.app().unwrap_or(crate::state::AppId::Calendar)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub url: String,
    pub route: Route,
    pub viewport: Viewport,
    /// Effective scroll position, clamped to the page.
    pub scroll_offset: u32,
    pub page_height: u32,
    pub ax_tree: String,
    pub html: String,
    pub root: UiNode,
}

impl Observation {
    pub fn max_scroll(&self) -> u32 {
        self.page_height.saturating_sub(self.viewport.height)
    }

    pub fn find(&self, bid: &str) -> Option<&UiNode> {
        let mut found = None;
        self.root.walk(0, &mut |n, _| {
            if found.is_none() && n.bid == bid {
                found = Some(n);
            }
        });
        found
    }

    pub fn nodes(&self) -> Vec<&UiNode> {
        self.root.flatten()
    }

    pub fn interactive(&self) -> Vec<&UiNode> {
        self.nodes().into_iter().filter(|n| n.interactive).collect()
    }

    pub fn is_visible(&self, node: &UiNode) -> bool {
        let top = self.scroll_offset;
        let bottom = top + self.viewport.height;
        node.bbox.y < bottom && node.bbox.y + node.bbox.h > top
    }

    /// Deepest interactive node containing a page point.
    pub fn hit_test(&self, px: u32, py: u32) -> Option<&UiNode> {
        let mut hit = None;
        self.root.walk(0, &mut |n, _| {
            if n.interactive && n.bbox.contains(px, py) {
                hit = Some(n);
            }
        });
        hit
    }

    /// Scroll offset that brings the node's center into the middle of the
    /// viewport, clamped to the page.
    pub fn scroll_to_show(&self, node: &UiNode) -> u32 {
        let (_, cy) = node.bbox.center();
        cy.saturating_sub(self.viewport.height / 2).min(self.max_scroll())
    }
}

fn escape_label(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
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
    out
}

/// One line per node, `bid role 'label'`, two spaces of indent per level.
pub fn ax_tree_text(root: &UiNode) -> String {
    let mut out = String::new();
    root.walk(0, &mut |n, depth| {
        for _ in 0..depth {
            out.push_str("  ");
        }
        out.push_str(&format!("{} {} '{}'", n.bid, n.role, escape_label(&n.label)));
        if let Some(v) = n.value.as_deref().filter(|v| !v.is_empty()) {
            out.push_str(&format!(" value='{}'", escape_label(v)));
        }
        if n.checked == Some(true) {
            out.push_str(" checked");
        }
        if n.selected {
            out.push_str(" selected");
        }
        if n.focused {
            out.push_str(" focused");
        }
        out.push('\n');
    });
    out
}

/// Laid-out tree with bids, before text rendering.
pub fn layout_tree(state: &EnvState, config: &AppConfigSet, viewport: Viewport) -> (UiNode, u32) {
    let route = &state.nav.route;
    let app = config.apps.get(style_app(route));
    let m = Metrics::of(app);
    let mut root = pages::build(state, config);
    let cw = css_px(&app.style.layout.container_width, m.font_px, viewport.width as f64)
        .clamp(1.0, viewport.width as f64)
        .round() as u32;
    let left = (viewport.width - cw) / 2 + m.margin.min(cw / 4);
    let width = cw.saturating_sub(2 * m.margin.min(cw / 4)).max(1);
    let h = place(&mut root, left, m.margin, width, &m);
    assign_bids(&mut root);
    (root, m.margin + h + m.margin)
}

pub fn render(state: &EnvState, config: &AppConfigSet, viewport: Viewport) -> Observation {
    let (root, page_height) = layout_tree(state, config, viewport);
    let scroll_offset = state.nav.scroll_offset.min(page_height.saturating_sub(viewport.height));
    let ax_tree = ax_tree_text(&root);
    let app = config.apps.get(style_app(&state.nav.route));
    let html = html::render_html(&root, app, &state.nav.route, viewport, page_height);
    Observation {
        url: state.nav.route.url(),
        route: state.nav.route.clone(),
        viewport,
        scroll_offset,
        page_height,
        ax_tree,
        html,
        root,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{default_config, init_state, Catalog};
    use crate::state::{AppId, TodoItem};
    use std::collections::BTreeSet;

    fn page(route: Route) -> (EnvState, AppConfigSet) {
        let cfg = default_config();
        let mut s = init_state(&cfg);
        s.nav.route = route;
        (s, cfg)
    }

    #[test]
    fn todo_items_have_checkbox_and_delete() {
        let (mut s, cfg) = page(Route::Todo);
        s.todos.truncate(3);
        let obs = render(&s, &cfg, Viewport::HD);
        let items: Vec<&UiNode> = obs.nodes().into_iter().filter(|n| n.role == Role::Listitem).collect();
        assert_eq!(items.len(), 3);
        for it in items {
            assert_eq!(it.children.iter().filter(|c| c.role == Role::Checkbox).count(), 1);
            assert_eq!(it.children.iter().filter(|c| c.role == Role::Button).count(), 1);
        }
    }

    #[test]
    fn single_button_page_bids() {
        let mut root = UiNode::new(Role::Section, "page");
        root.children.push(UiNode::new(Role::Button, "ok"));
        assign_bids(&mut root);
        assert_eq!(root.bid, "0");
        assert_eq!(root.children[0].bid, "1");
    }

    #[test]
    fn inserting_an_item_shifts_later_bids_by_a_constant() {
        let (s, cfg) = page(Route::Todo);
        let before = render(&s, &cfg, Viewport::HD);
        let mut s2 = s.clone();
        s2.todos.insert(2, TodoItem { text: "new".into(), done: false });
        let after = render(&s2, &cfg, Viewport::HD);
        let labels = |o: &Observation| {
            o.nodes().iter().map(|n| (n.role, n.label.clone(), n.bid.parse::<i64>().unwrap())).collect::<Vec<_>>()
        };
        let (b, a) = (labels(&before), labels(&after));
        let inserted = a.len() - b.len();
        assert_eq!(inserted, 3);
        let last_b = b.last().unwrap();
        let last_a = a.last().unwrap();
        assert_eq!((last_a.0, &last_a.1), (last_b.0, &last_b.1));
        assert_eq!(last_a.2 - last_b.2, inserted as i64);
    }

    #[test]
    fn viewport_changes_visibility_not_structure() {
        let (s, cfg) = page(Route::Calendar);
        let big = render(&s, &cfg, Viewport::FHD);
        let small = render(&s, &cfg, Viewport::HVGA);
        let key = |o: &Observation| o.nodes().iter().map(|n| (n.bid.clone(), n.role, n.label.clone())).collect::<Vec<_>>();
        assert_eq!(key(&big), key(&small));
        let vis = |o: &Observation| o.nodes().iter().filter(|n| o.is_visible(n)).count();
        assert!(vis(&small) < vis(&big));
    }

    #[test]
    fn geometry_invariants_hold_everywhere() {
        let cfg = default_config();
        for v in Catalog::shipped().variations {
            let c = crate::config::apply_variation(&cfg, &v).unwrap();
            for route in [Route::Home, Route::Calendar, Route::Todo, Route::Messenger, Route::Maps, Route::CodeEditor, Route::Shop, Route::Cart] {
                let mut s = init_state(&c);
                s.nav.route = route.clone();
                for (_, vp) in Viewport::PRESETS {
                    let obs = render(&s, &c, vp);
                    let mut bids = BTreeSet::new();
                    obs.root.walk(0, &mut |n, _| {
                        assert!(bids.insert(n.bid.clone()));
                        if n.interactive {
                            assert!(n.bbox.area() > 0, "{route} {}", n.label);
                        }
                        for ch in &n.children {
                            assert!(n.bbox.contains_box(&ch.bbox), "{route} {vp} {} in {}", ch.label, n.label);
                        }
                    });
                    assert!(obs.root.bbox.x + obs.root.bbox.w <= vp.width);
                }
            }
        }
    }

    #[test]
    fn brush_script_rows_are_taller() {
        let cfg = default_config();
        let font = Catalog::shipped();
        let brushed = crate::config::apply_variation(&cfg, font.get("challenging_font").unwrap()).unwrap();
        let a = Metrics::of(cfg.apps.get(AppId::Todo));
        let b = Metrics::of(brushed.apps.get(AppId::Todo));
        assert!(b.row > a.row);
    }

    #[test]
    fn render_is_deterministic() {
        let (s, cfg) = page(Route::Shop);
        assert_eq!(render(&s, &cfg, Viewport::HD), render(&s, &cfg, Viewport::HD));
    }

    #[test]
    fn viewport_parsing() {
        assert_eq!("FHD".parse::<Viewport>().unwrap(), Viewport::FHD);
        assert_eq!("800x600".parse::<Viewport>().unwrap(), Viewport { width: 800, height: 600 });
        assert!("100x600".parse::<Viewport>().is_err());
    }

    #[test]
    fn labels_are_escaped() {
        let mut n = UiNode::new(Role::Text, "it's a\nline");
        n.bid = "0".into();
        assert_eq!(ax_tree_text(&n), "0 text 'it\\'s a\\nline'\n");
    }
}

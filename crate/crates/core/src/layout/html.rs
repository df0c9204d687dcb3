//! Self-contained HTML for a laid-out page. Every element is absolutely
//! positioned at its layout box, so a browser screenshot matches the tree.

use std::fmt::Write;

use crate::config::AppConfig;
use crate::state::Route;

use super::{Role, UiNode, Viewport};

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn font_stack(family: &str) -> String {
    let fam = family.replace(['"', ';', '<', '>'], "");
    if matches!(fam.as_str(), "serif" | "sans-serif" | "monospace" | "cursive") {
        fam
    } else {
        format!("'{}', sans-serif", fam.replace('\'', ""))
    }
}

fn node_html(n: &UiNode, parent: (u32, u32), app: &AppConfig, out: &mut String) {
    let c = &app.style.colors;
    let b = &app.style.buttons;
    let pos = format!(
        "position:absolute;left:{}px;top:{}px;width:{}px;height:{}px;margin:0;box-sizing:border-box;",
        n.bbox.x - parent.0,
        n.bbox.y - parent.1,
        n.bbox.w,
        n.bbox.h
    );
    let label = escape(&n.label);
    let bid = &n.bid;
    match n.role {
        Role::Button | Role::Option => {
            let (bg, fg) = if n.role == Role::Option && !n.selected {
                (c.background.as_str(), c.primary.as_str())
            } else {
                (c.primary.as_str(), c.background.as_str())
            };
            let role = if n.role == Role::Option {
                format!(" role=\"option\" aria-selected=\"{}\"", n.selected)
            } else {
                String::new()
            };
            let _ = writeln!(
                out,
                "<button data-bid=\"{bid}\"{role} style=\"{pos}background:{bg};color:{fg};border:1px solid {};border-radius:{};padding:{};text-align:left;font:inherit\">{label}</button>",
                c.primary, b.border_radius, b.padding
            );
        }
        Role::Link => {
            let href = escape(n.href.as_deref().unwrap_or("#"));
            let _ = writeln!(
                out,
                "<a data-bid=\"{bid}\" href=\"{href}\" style=\"{pos}color:{};display:block\">{label}</a>",
                c.primary
            );
        }
        Role::Textbox => {
            let value = escape(n.value.as_deref().unwrap_or(""));
            let ph = escape(n.placeholder.as_deref().unwrap_or(""));
            let focus = if n.focused { " autofocus" } else { "" };
            let _ = writeln!(
                out,
                "<input data-bid=\"{bid}\" type=\"text\" aria-label=\"{label}\" placeholder=\"{ph}\" value=\"{value}\"{focus} style=\"{pos}color:{};background:{};border:1px solid {};font:inherit\">",
                c.text, c.background, c.border
            );
        }
        Role::Checkbox => {
            let checked = if n.checked == Some(true) { " checked" } else { "" };
            let _ = writeln!(
                out,
                "<label data-bid=\"{bid}\" style=\"{pos}display:block\"><input type=\"checkbox\"{checked} style=\"accent-color:{}\"> {label}</label>",
                c.primary
            );
        }
        Role::Heading => {
            let t = &app.style.typography;
            let _ = writeln!(
                out,
                "<h2 data-bid=\"{bid}\" style=\"{pos}font-family:{};font-size:{}\">{label}</h2>",
                escape(&font_stack(&t.heading_font)),
                t.heading_size
            );
        }
        Role::Text => {
            let _ = writeln!(
                out,
                "<p data-bid=\"{bid}\" style=\"{pos}white-space:pre;overflow:hidden\">{label}</p>"
            );
        }
        Role::Image => {
            let _ = writeln!(
                out,
                "<div data-bid=\"{bid}\" role=\"img\" aria-label=\"{label}\" style=\"{pos}background:{};border:1px solid {}\"></div>",
                c.secondary, c.border
            );
        }
        Role::Section | Role::Listitem => {
            let (tag, border) = if n.role == Role::Listitem {
                ("li", format!("border-bottom:1px solid {};list-style:none;", c.border))
            } else {
                ("section", String::new())
            };
            let _ = writeln!(
                out,
                "<{tag} data-bid=\"{bid}\" aria-label=\"{label}\" style=\"{pos}{border}\">"
            );
            for ch in &n.children {
                node_html(ch, (n.bbox.x, n.bbox.y), app, out);
            }
            let _ = writeln!(out, "</{tag}>");
        }
    }
}

pub(crate) fn render_html(
    root: &UiNode,
    app: &AppConfig,
    route: &Route,
    viewport: Viewport,
    page_height: u32,
) -> String {
    let c = &app.style.colors;
    let t = &app.style.typography;
    let mut out = String::new();
    let _ = writeln!(out, "<!DOCTYPE html>");
    let _ = writeln!(out, "<html lang=\"{}\">", escape(&app.language));
    let _ = writeln!(out, "<head>");
    let _ = writeln!(out, "<meta charset=\"utf-8\">");
    let _ = writeln!(
        out,
        "<meta name=\"viewport\" content=\"width={}, height={}\">",
        viewport.width, viewport.height
    );
    let _ = writeln!(out, "<title>{}</title>", escape(&root.label));
    let _ = writeln!(
        out,
        "<style>html,body{{margin:0;padding:0}}body{{position:relative;min-height:{page_height}px;background:{};color:{};font-family:{};font-size:{}}}</style>",
        c.background,
        c.text,
        escape(&font_stack(&t.font_family)),
        t.base_font_size
    );
    let _ = writeln!(out, "</head>");
    let _ = writeln!(out, "<body data-url=\"{}\">", escape(&route.url()));
    node_html(root, (0, 0), app, &mut out);
    let _ = writeln!(out, "</body>");
    let _ = writeln!(out, "</html>");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{apply_variation, default_config, init_state, Catalog};
    use crate::layout::{render, Viewport};

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("<a href='x'>&</a>"), "&lt;a href=&#39;x&#39;&gt;&amp;&lt;/a&gt;");
    }

    #[test]
    fn every_node_is_tagged_and_dark_theme_shows_up() {
        let cfg = default_config();
        let dark = apply_variation(&cfg, Catalog::shipped().get("dark_theme").unwrap()).unwrap();
        let mut s = init_state(&cfg);
        s.nav.route = Route::Todo;
        let obs = render(&s, &dark, Viewport::HD);
        for n in obs.nodes() {
            assert!(obs.html.contains(&format!("data-bid=\"{}\"", n.bid)));
        }
        assert!(obs.html.contains("background:#121212"));
    }
}

//! Total parser for `name(args)` commands.
//!
//! Classification order: outer shape, then action name, then argument
//! tokens, then the signature check.

use super::{signature, Action, ActionProfile, ArgValue, InvalidAction, InvalidCategory};

const MAX_DEPTH: usize = 32;

fn invalid(raw: &str, category: InvalidCategory, detail: impl Into<String>) -> InvalidAction {
    InvalidAction { raw: raw.to_string(), category, detail: detail.into() }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Byte index just past the `)` matching the `(` at `open`, skipping quoted
/// strings. `None` when unbalanced.
fn matching_close(s: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in s[open..].char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            '(' | '[' => depth += 1,
            ')' | ']' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return (c == ')').then_some(open + i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

pub fn parse_action(text: &str, profile: ActionProfile) -> Result<Action, InvalidAction> {
    use InvalidCategory::*;
    let s = text.trim();
    let name_len = s
        .char_indices()
        .find(|(_, c)| !is_ident_char(*c))
        .map_or(s.len(), |(i, _)| i);
    if name_len == 0 || !s.starts_with(is_ident_start) {
        return Err(invalid(text, Malformed, "expected an action name followed by `(`"));
    }
    let name = &s[..name_len];
    let rest = &s[name_len..];
    let open = name_len + (rest.len() - rest.trim_start().len());
    if !s[open..].starts_with('(') {
        let detail = if open == s.len() {
            format!("`{name}` has no argument list")
        } else {
            format!("expected `(` after `{name}`")
        };
        return Err(invalid(text, Malformed, detail));
    }
    let close = matching_close(s, open)
        .ok_or_else(|| invalid(text, Malformed, "unbalanced brackets or unterminated string"))?;
    if close != s.len() {
        return Err(invalid(
            text,
            Malformed,
            format!("unexpected text after the call: {:?}", truncate(&s[close..], 40)),
        ));
    }

    if !profile.allows(name) {
        let detail = if signature(name).is_some() {
            format!("`{name}` is not available in the {profile} profile")
        } else {
            format!("`{name}` is not a supported action")
        };
        return Err(invalid(text, UnknownAction, detail));
    }

    let inner = &s[open + 1..close - 1];
    let raw_args = ArgLexer::new(inner).args().map_err(|e| invalid(text, Malformed, e))?;
    bind(name, raw_args).map_err(|e| invalid(text, BadArguments, e))
}

fn truncate(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        format!("{}...", s.chars().take(n).collect::<String>())
    }
}

type RawArgs = Vec<(Option<String>, ArgValue)>;

fn bind(name: &str, raw: RawArgs) -> Result<Action, String> {
    let sig = signature(name).expect("allowed names have signatures");
    let mut slots: Vec<Option<ArgValue>> = vec![None; sig.params.len()];
    let mut positional = 0;
    for (key, value) in raw {
        let idx = match key {
            None => {
                positional += 1;
                if positional > sig.params.len() {
                    return Err(format!(
                        "`{name}` takes at most {} argument(s)",
                        sig.params.len()
                    ));
                }
                positional - 1
            }
            Some(k) => sig
                .params
                .iter()
                .position(|p| p.name == k)
                .ok_or_else(|| format!("`{name}` has no parameter `{k}`"))?,
        };
        if slots[idx].is_some() {
            return Err(format!("parameter `{}` given more than once", sig.params[idx].name));
        }
        slots[idx] = Some(value);
    }
    let mut args = Vec::new();
    for (param, slot) in sig.params.iter().zip(slots) {
        match slot {
            Some(v) => {
                v.check(param.ty).map_err(|e| format!("`{}`: {e}", param.name))?;
                args.push((param.name.to_string(), v));
            }
            None if param.required => {
                return Err(format!("missing required argument `{}`", param.name))
            }
            None => {}
        }
    }
    Ok(Action { name: name.to_string(), args })
}

struct ArgLexer {
    chars: Vec<char>,
    pos: usize,
}

impl ArgLexer {
    fn new(s: &str) -> Self {
        ArgLexer { chars: s.chars().collect(), pos: 0 }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn err<T>(&self, what: &str) -> Result<T, String> {
        match self.peek() {
            Some(c) => Err(format!("{what} at argument offset {}, found {c:?}", self.pos)),
            None => Err(format!("{what} at end of arguments")),
        }
    }

    fn args(mut self) -> Result<RawArgs, String> {
        let mut out: RawArgs = Vec::new();
        let mut seen_keyword = false;
        self.ws();
        if self.peek().is_none() {
            return Ok(out);
        }
        loop {
            self.ws();
            let (key, value) = self.arg()?;
            match &key {
                Some(k) => {
                    if out.iter().any(|(kk, _)| kk.as_deref() == Some(k)) {
                        return Err(format!("keyword `{k}` repeated"));
                    }
                    seen_keyword = true;
                }
                None if seen_keyword => {
                    return Err("positional argument follows keyword argument".into())
                }
                None => {}
            }
            out.push((key, value));
            self.ws();
            match self.peek() {
                None => return Ok(out),
                Some(',') => {
                    self.pos += 1;
                    self.ws();
                    if self.peek().is_none() {
                        return Ok(out);
                    }
                }
                Some(_) => return self.err("expected `,` or `)`"),
            }
        }
    }

    fn arg(&mut self) -> Result<(Option<String>, ArgValue), String> {
        if self.peek().is_some_and(is_ident_start) {
            let ident = self.ident();
            let after = self.pos;
            self.ws();
            if self.peek() == Some('=') && self.chars.get(self.pos + 1) != Some(&'=') {
                self.pos += 1;
                self.ws();
                let v = self.value(0)?;
                return Ok((Some(ident), v));
            }
            self.pos = after;
            return Ok((None, keyword_value(ident)));
        }
        Ok((None, self.value(0)?))
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(is_ident_char) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn value(&mut self, depth: usize) -> Result<ArgValue, String> {
        if depth > MAX_DEPTH {
            return Err("lists nested too deeply".into());
        }
        match self.peek() {
            Some('\'') | Some('"') => self.string(),
            Some('[') => self.list(depth),
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => self.number(),
            Some(c) if is_ident_start(c) => {
                let id = self.ident();
                Ok(keyword_value(id))
            }
            _ => self.err("expected a value"),
        }
    }

    fn string(&mut self) -> Result<ArgValue, String> {
        let q = self.chars[self.pos];
        self.pos += 1;
        let mut out = String::new();
        loop {
            match self.peek() {
                None => return Err("unterminated string".into()),
                Some(c) if c == q => {
                    self.pos += 1;
                    return Ok(ArgValue::Str(out));
                }
                Some('\\') => {
                    self.pos += 1;
                    match self.peek() {
                        None => return Err("unterminated string".into()),
                        Some(e) => {
                            self.pos += 1;
                            match e {
                                'n' => out.push('\n'),
                                't' => out.push('\t'),
                                'r' => out.push('\r'),
                                '\\' | '\'' | '"' => out.push(e),
                                other => {
                                    out.push('\\');
                                    out.push(other);
                                }
                            }
                        }
                    }
                }
                Some(c) => {
                    self.pos += 1;
                    out.push(c);
                }
            }
        }
    }

    fn list(&mut self, depth: usize) -> Result<ArgValue, String> {
        self.pos += 1;
        let mut items = Vec::new();
        loop {
            self.ws();
            if self.peek() == Some(']') {
                self.pos += 1;
                return Ok(ArgValue::List(items));
            }
            items.push(self.value(depth + 1)?);
            self.ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(']') => {}
                _ => return self.err("expected `,` or `]` in list"),
            }
        }
    }

    fn number(&mut self) -> Result<ArgValue, String> {
        let start = self.pos;
        if matches!(self.peek(), Some('-') | Some('+')) {
            self.pos += 1;
        }
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.peek().is_some_and(|c| c.is_ascii_digit()) {
                lx.pos += 1;
            }
            lx.pos > s
        };
        let int_part = digits(self);
        let mut float = false;
        if self.peek() == Some('.') {
            self.pos += 1;
            float = true;
            let frac = digits(self);
            if !int_part && !frac {
                return self.err("malformed number");
            }
        } else if !int_part {
            return self.err("malformed number");
        }
        if matches!(self.peek(), Some('e') | Some('E')) {
            self.pos += 1;
            float = true;
            if matches!(self.peek(), Some('-') | Some('+')) {
                self.pos += 1;
            }
            if !digits(self) {
                return self.err("malformed exponent");
            }
        }
        if self.peek().is_some_and(|c| is_ident_char(c) || c == '.') {
            return self.err("malformed number");
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        if !float {
            if let Ok(i) = text.parse::<i64>() {
                return Ok(ArgValue::Int(i));
            }
        }
        match text.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(ArgValue::Float(x)),
            _ => Err(format!("number `{text}` out of range")),
        }
    }
}

fn keyword_value(ident: String) -> ArgValue {
    match ident.as_str() {
        "True" | "true" => ArgValue::Bool(true),
        "False" | "false" => ArgValue::Bool(false),
        "None" => ArgValue::Null,
        _ => ArgValue::Ident(ident),
    }
}

/// Split text made of back-to-back calls, e.g. `click(47)click(47)`, into the
/// individual call strings. Text that is not a call is returned as one piece.
pub fn split_concatenated_calls(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let end = rest
            .find('(')
            .and_then(|open| matching_close(rest, open))
            .unwrap_or(rest.len());
        out.push(rest[..end].trim().to_string());
        rest = rest[end..].trim_start();
    }
    out
}

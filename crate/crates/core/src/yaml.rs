//! Byte-stable YAML emitter.
//!
//! Output rules: UTF-8, LF line endings, two-space indentation, keys in the
//! order they appear in the value, strings always double-quoted with JSON
//! escapes, block sequences indented under their key. Golden files depend on
//! this exact layout.

use serde::Serialize;
use serde_yaml::{Mapping, Value};

/// Serialize any value through serde and emit it in canonical layout. Enum
/// variants come out as single-key maps rather than YAML tags.
pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String, serde_yaml::Error> {
    let json = serde_json::to_value(value).map_err(<serde_yaml::Error as serde::ser::Error>::custom)?;
    let v = serde_yaml::to_value(json)?;
    Ok(emit(&v))
}

pub fn emit(value: &Value) -> String {
    let mut out = String::new();
    match value {
        Value::Mapping(m) if !m.is_empty() => emit_map(m, 0, &mut out),
        Value::Sequence(s) if !s.is_empty() => emit_seq(s, 0, &mut out),
        other => {
            out.push_str(&scalar(other));
            out.push('\n');
        }
    }
    out
}

fn is_block(v: &Value) -> bool {
    match v {
        Value::Mapping(m) => !m.is_empty(),
        Value::Sequence(s) => !s.is_empty(),
        Value::Tagged(t) => is_block(&t.value),
        _ => false,
    }
}

fn emit_map(m: &Mapping, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    for (k, v) in m {
        out.push_str(&pad);
        out.push_str(&key(k));
        out.push(':');
        match v {
            Value::Mapping(inner) if !inner.is_empty() => {
                out.push('\n');
                emit_map(inner, indent + 2, out);
            }
            Value::Sequence(inner) if !inner.is_empty() => {
                out.push('\n');
                emit_seq(inner, indent + 2, out);
            }
            other => {
                out.push(' ');
                out.push_str(&scalar(other));
                out.push('\n');
            }
        }
    }
}

fn emit_seq(s: &[Value], indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    for item in s {
        match item {
            Value::Mapping(inner) if !inner.is_empty() => {
                let mut block = String::new();
                emit_map(inner, indent + 2, &mut block);
                // first line of the nested map shares the dash line
                out.push_str(&pad);
                out.push_str("- ");
                out.push_str(&block[indent + 2..]);
            }
            Value::Sequence(inner) if !inner.is_empty() => {
                out.push_str(&pad);
                out.push_str("-\n");
                emit_seq(inner, indent + 2, out);
            }
            other => {
                debug_assert!(!is_block(other));
                out.push_str(&pad);
                out.push_str("- ");
                out.push_str(&scalar(other));
                out.push('\n');
            }
        }
    }
}

fn key(k: &Value) -> String {
    match k {
        Value::String(s) if is_plain_key(s) => s.clone(),
        Value::String(s) => quote(s),
        other => scalar(other),
    }
}

fn is_plain_key(s: &str) -> bool {
    const RESERVED: &[&str] = &["null", "true", "false", "yes", "no", "on", "off", "y", "n", "~"];
    !s.is_empty()
        && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
        && !s.as_bytes()[0].is_ascii_digit()
        && !RESERVED.contains(&s.to_ascii_lowercase().as_str())
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization is infallible")
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => quote(s),
        Value::Mapping(_) => "{}".into(),
        Value::Sequence(_) => "[]".into(),
        Value::Tagged(t) => scalar(&t.value),
    }
}

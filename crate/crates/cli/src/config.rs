//! `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys consist of ASCII
//! letters, digits, `-` and `_`; values run to the end of the line with
//! surrounding whitespace trimmed.

use std::collections::BTreeMap;

use dualapprox::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
    pub column: usize,
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Parses a config file into entries in file order; duplicate keys are errors.
pub fn parse(text: &str) -> Result<Vec<Entry>> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let indent = raw.len() - raw.trim_start().len();
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(parse_error(
                line,
                indent + body.chars().count() + 1,
                "expected `key = value`",
            ));
        };
        let key = body[..eq].trim_end();
        let column = indent + 1;
        if key.is_empty() {
            return Err(parse_error(line, column, "missing key before `=`"));
        }
        if let Some(pos) = key.find(|c: char| !(c.is_ascii_alphanumeric() || c == '-' || c == '_')) {
            let bad = key[pos..].chars().next().unwrap();
            return Err(parse_error(
                line,
                column + key[..pos].chars().count(),
                format!("invalid character {bad:?} in key"),
            ));
        }
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(parse_error(
                line,
                column,
                format!("duplicate key `{key}` (first set on line {first})"),
            ));
        }
        entries.push(Entry {
            key: key.to_string(),
            value: body[eq + 1..].trim().to_string(),
            line,
            column,
        });
    }
    Ok(entries)
}

/// Canonical text form: one `key = value` line per entry in key order.
pub fn render(map: &BTreeMap<String, String>) -> String {
    map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

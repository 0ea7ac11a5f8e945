//! `key = value` documents with optional `[section]` headers and `#` comments.

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    /// `None` for entries before the first header.
    pub name: Option<String>,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.key == key).map(|e| e.value.as_str())
    }
}

/// The first section is always the unnamed top level, possibly empty.
pub fn parse(text: &str, origin: &str) -> CliResult<Vec<Section>> {
    let mut sections = vec![Section {
        name: None,
        line: 0,
        entries: Vec::new(),
    }];
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| CliError::input(format!("{origin}: line {line}: unterminated section header")))?;
            sections.push(Section {
                name: Some(name.trim().to_string()),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("{origin}: line {line}: expected `key = value`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::input(format!("{origin}: line {line}: empty key")));
        }
        let current = sections.last_mut().expect("top-level section");
        if current.entries.iter().any(|e| e.key == key) {
            return Err(CliError::input(format!("{origin}: line {line}: duplicate key `{key}`")));
        }
        current.entries.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(sections)
}

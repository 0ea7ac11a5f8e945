//! Feature documents (`name = value` lines plus a `[meta]` block) and
//! feature tables (one CSV row per recording).

use std::fmt::{self, Write as _};

use tapkin_core::cycles::CycleSource;
use tapkin_core::features::FeatureVector;
use tapkin_core::landmarks::SourceMeta;

use crate::error::{CliError, CliResult};
use crate::kv;

/// Where the cycle events behind a feature vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSource {
    Auto,
    Manual,
    /// Computed in closed form by the signal generator.
    Analytic,
}

impl FeatureSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureSource::Auto => "auto",
            FeatureSource::Manual => "manual",
            FeatureSource::Analytic => "analytic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [FeatureSource::Auto, FeatureSource::Manual, FeatureSource::Analytic]
            .into_iter()
            .find(|f| f.as_str() == s)
    }
}

impl From<CycleSource> for FeatureSource {
    fn from(s: CycleSource) -> Self {
        match s {
            CycleSource::Auto => FeatureSource::Auto,
            CycleSource::Manual => FeatureSource::Manual,
        }
    }
}

impl fmt::Display for FeatureSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDocument {
    pub features: FeatureVector,
    pub source: FeatureSource,
    pub meta: Option<SourceMeta>,
}

impl FeatureDocument {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, value) in self.features.iter() {
            writeln!(out, "{name} = {value}").unwrap();
        }
        out.push_str("\n[meta]\n");
        writeln!(out, "source = {}", self.source).unwrap();
        if let Some(m) = &self.meta {
            writeln!(out, "subject_id = {}", m.subject_id).unwrap();
            writeln!(out, "hand = {}", m.hand).unwrap();
            writeln!(out, "condition = {}", m.condition).unwrap();
            writeln!(out, "stim_state = {}", m.stim_state).unwrap();
        }
        out
    }

    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let sections = kv::parse(text, origin)?;
        let bad = |line: usize, msg: String| CliError::input(format!("{origin}: line {line}: {msg}"));
        let top = &sections[0];
        let mut values = [f64::NAN; 11];
        for e in &top.entries {
            let i = FeatureVector::NAMES
                .iter()
                .position(|n| *n == e.key)
                .ok_or_else(|| bad(e.line, format!("unknown feature `{}`", e.key)))?;
            values[i] = e.value.parse().map_err(|_| bad(e.line, format!("invalid number {:?}", e.value)))?;
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(CliError::input(format!("{origin}: missing feature `{}`", FeatureVector::NAMES[i])));
        }
        let meta_section = sections
            .iter()
            .skip(1)
            .find(|s| s.name.as_deref() == Some("meta"))
            .ok_or_else(|| CliError::input(format!("{origin}: missing [meta] block")))?;
        let source_text = meta_section
            .get("source")
            .ok_or_else(|| bad(meta_section.line, "[meta] lacks `source`".into()))?;
        let source = FeatureSource::parse(source_text)
            .ok_or_else(|| bad(meta_section.line, format!("unknown source {source_text:?}")))?;
        let meta = match meta_section.get("subject_id") {
            None => None,
            Some(subject) => {
                let field = |k: &str| {
                    meta_section
                        .get(k)
                        .ok_or_else(|| bad(meta_section.line, format!("[meta] lacks `{k}`")))
                };
                let parsed = |k: &str| -> CliResult<String> { field(k).map(str::to_string) };
                Some(SourceMeta {
                    subject_id: subject.to_string(),
                    hand: parsed("hand")?.parse().map_err(|m: String| bad(meta_section.line, m))?,
                    condition: parsed("condition")?.parse().map_err(|m: String| bad(meta_section.line, m))?,
                    stim_state: parsed("stim_state")?.parse().map_err(|m: String| bad(meta_section.line, m))?,
                })
            }
        };
        Ok(FeatureDocument {
            features: FeatureVector::from_values(values),
            source,
            meta,
        })
    }
}

pub const TABLE_KEYS: [&str; 5] = ["subject", "hand", "condition", "stim_state", "source"];

/// Rows keyed by arbitrary text columns followed by the eleven features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub key_columns: Vec<String>,
    pub rows: Vec<(Vec<String>, FeatureVector)>,
}

impl FeatureTable {
    pub fn from_documents(docs: &[(String, FeatureDocument)]) -> Self {
        let rows = docs
            .iter()
            .map(|(fallback_subject, d)| {
                let keys = match &d.meta {
                    Some(m) => vec![
                        m.subject_id.clone(),
                        m.hand.to_string(),
                        m.condition.to_string(),
                        m.stim_state.to_string(),
                    ],
                    None => vec![fallback_subject.clone(), String::new(), String::new(), String::new()],
                };
                let mut keys = keys;
                keys.push(d.source.to_string());
                (keys, d.features)
            })
            .collect();
        FeatureTable {
            key_columns: TABLE_KEYS.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.key_columns.iter().position(|c| c == name)
    }

    pub fn render(&self) -> CliResult<Vec<u8>> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = self
            .key_columns
            .iter()
            .map(String::as_str)
            .chain(FeatureVector::NAMES)
            .collect();
        let internal = |e: csv::Error| CliError::Internal(e.to_string());
        wtr.write_record(&header).map_err(internal)?;
        for (keys, f) in &self.rows {
            let record: Vec<String> = keys.iter().cloned().chain(f.values().iter().map(|v| v.to_string())).collect();
            wtr.write_record(&record).map_err(internal)?;
        }
        wtr.into_inner().map_err(|e| CliError::Internal(e.to_string()))
    }

    pub fn parse(bytes: &[u8], origin: &str) -> CliResult<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let headers = rdr
            .headers()
            .map_err(|e| CliError::input(format!("{origin}: line 1: {e}")))?
            .clone();
        let mut feature_cols = [usize::MAX; 11];
        let mut key_columns = Vec::new();
        let mut key_idx = Vec::new();
        for (i, h) in headers.iter().enumerate() {
            match FeatureVector::NAMES.iter().position(|n| *n == h) {
                Some(f) => feature_cols[f] = i,
                None => {
                    key_columns.push(h.to_string());
                    key_idx.push(i);
                }
            }
        }
        if let Some(f) = feature_cols.iter().position(|c| *c == usize::MAX) {
            return Err(CliError::input(format!(
                "{origin}: line 1: missing feature column `{}`",
                FeatureVector::NAMES[f]
            )));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| CliError::input(format!("{origin}: line {line}: {e}")))?;
            let mut values = [0.0; 11];
            for (f, &c) in feature_cols.iter().enumerate() {
                let text = &rec[c];
                values[f] = text
                    .parse()
                    .map_err(|_| CliError::input(format!("{origin}: line {line}: invalid number {text:?}")))?;
            }
            rows.push((key_idx.iter().map(|&c| rec[c].to_string()).collect(), FeatureVector::from_values(values)));
        }
        Ok(FeatureTable { key_columns, rows })
    }
}

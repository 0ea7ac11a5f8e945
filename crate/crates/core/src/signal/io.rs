//! Distance signal CSV: `#`-prefixed `key = value` provenance lines, then a
//! `t,value` table.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{DistanceSignal, Provenance, Smoothing};
use crate::error::{Error, Result};
use crate::landmarks::SourceMeta;

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceFile {
    pub signal: DistanceSignal,
    pub meta: Option<SourceMeta>,
}

fn malformed(line: usize, message: impl Into<String>) -> Error {
    Error::MalformedRecord {
        line,
        message: message.into(),
    }
}

pub fn write_distance<W: Write>(signal: &DistanceSignal, meta: Option<&SourceMeta>, mut out: W) -> std::io::Result<()> {
    let p = signal.provenance();
    writeln!(out, "# fs = {}", signal.fs())?;
    writeln!(out, "# t0 = {}", signal.t0())?;
    writeln!(out, "# resampled = {}", p.resampled)?;
    match p.smoothing {
        Some(s) => writeln!(out, "# smoothed = {},{}", s.window, s.poly_order)?,
        None => writeln!(out, "# smoothed = none")?,
    }
    writeln!(out, "# normalized = {}", p.normalized)?;
    if let Some(m) = meta {
        writeln!(out, "# subject_id = {}", m.subject_id)?;
        writeln!(out, "# hand = {}", m.hand)?;
        writeln!(out, "# condition = {}", m.condition)?;
        writeln!(out, "# stim_state = {}", m.stim_state)?;
    }
    writeln!(out, "t,value")?;
    for (i, v) in signal.values().iter().enumerate() {
        writeln!(out, "{},{}", signal.time_at(i), v)?;
    }
    out.flush()
}

pub fn write_distance_file(signal: &DistanceSignal, meta: Option<&SourceMeta>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_distance(signal, meta, BufWriter::new(file)).map_err(io_err)
}

#[derive(Default)]
struct MetaFields {
    subject_id: Option<String>,
    hand: Option<String>,
    condition: Option<String>,
    stim_state: Option<String>,
}

pub fn parse_distance<R: BufRead>(reader: R) -> Result<DistanceFile> {
    let mut fs: Option<f64> = None;
    let mut t0: Option<f64> = None;
    let mut provenance = Provenance::default();
    let mut meta = MetaFields::default();
    let mut header_seen = false;
    let mut times = Vec::new();
    let mut values = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| malformed(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let Some((key, value)) = comment.split_once('=') else {
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let bool_of = |v: &str| {
                v.parse::<bool>()
                    .map_err(|_| malformed(lineno, format!("`{key}` must be true or false")))
            };
            let float_of = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| malformed(lineno, format!("`{key}` must be a number")))
            };
            match key {
                "fs" => fs = Some(float_of(value)?),
                "t0" => t0 = Some(float_of(value)?),
                "resampled" => provenance.resampled = bool_of(value)?,
                "normalized" => provenance.normalized = bool_of(value)?,
                "smoothed" => {
                    provenance.smoothing = if value == "none" {
                        None
                    } else {
                        let (w, p) = value
                            .split_once(',')
                            .ok_or_else(|| malformed(lineno, "`smoothed` must be `window,order` or `none`"))?;
                        let parse = |s: &str| {
                            s.trim()
                                .parse::<usize>()
                                .map_err(|_| malformed(lineno, "`smoothed` must be `window,order` or `none`"))
                        };
                        Some(Smoothing {
                            window: parse(w)?,
                            poly_order: parse(p)?,
                        })
                    }
                }
                "subject_id" => meta.subject_id = Some(value.to_string()),
                "hand" => meta.hand = Some(value.to_string()),
                "condition" => meta.condition = Some(value.to_string()),
                "stim_state" => meta.stim_state = Some(value.to_string()),
                _ => {}
            }
            continue;
        }
        if !header_seen {
            if line.replace(' ', "") != "t,value" {
                return Err(malformed(lineno, "expected header `t,value`"));
            }
            header_seen = true;
            continue;
        }
        let (t, v) = line
            .split_once(',')
            .ok_or_else(|| malformed(lineno, "expected `t,value`"))?;
        let t: f64 = t.trim().parse().map_err(|_| malformed(lineno, "bad time"))?;
        let v: f64 = v.trim().parse().map_err(|_| malformed(lineno, "bad value"))?;
        if !v.is_finite() || !t.is_finite() {
            return Err(malformed(lineno, "non-finite number"));
        }
        times.push(t);
        values.push(v);
    }

    if !header_seen {
        return Err(malformed(1, "missing `t,value` header"));
    }
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    let t0 = t0.unwrap_or(times[0]);
    let fs = match fs {
        Some(fs) => fs,
        None if times.len() >= 2 => (times.len() - 1) as f64 / (times[times.len() - 1] - times[0]),
        None => return Err(malformed(1, "cannot infer sampling rate from a single sample")),
    };
    let signal = DistanceSignal::with_provenance(t0, fs, values, provenance)?;

    let meta = match meta {
        MetaFields {
            subject_id: Some(subject_id),
            hand: Some(hand),
            condition: Some(condition),
            stim_state: Some(stim_state),
        } => {
            let bad = |e: String| malformed(1, e);
            Some(SourceMeta {
                subject_id,
                hand: hand.parse().map_err(bad)?,
                condition: condition.parse().map_err(bad)?,
                stim_state: stim_state.parse().map_err(bad)?,
            })
        }
        _ => None,
    };
    Ok(DistanceFile { signal, meta })
}

pub fn read_distance_file(path: impl AsRef<Path>) -> Result<DistanceFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_distance(BufReader::new(file))
}

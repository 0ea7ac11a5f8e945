//! Truth-versus-estimate accuracy: per-recording R², per-condition summaries
//! and the normality-gated comparison between conditions.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use tapkin_core::stats::{compare_groups, shapiro_wilk, spearman, TTestVariant, TestResult};
use tapkin_core::synthlab::r2_on_clean_grid;

use crate::error::{CliError, CliResult};
use crate::inputs::{load, Processed};
use crate::settings::Settings;
use crate::svg::{self, Chart, Mark, Series};

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct ManifestRecord {
    truth_path: PathBuf,
    estimate_path: PathBuf,
    condition: String,
    subject: String,
    hand: String,
}

/// One truth/estimate pairing; paths are resolved against the manifest's
/// directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub truth: PathBuf,
    pub estimate: PathBuf,
    pub condition: String,
    pub subject: String,
    pub hand: String,
}

impl ManifestEntry {
    pub fn recording_id(&self) -> String {
        format!("{}_{}_{}", self.subject, self.hand, self.condition)
    }
}

pub fn read_manifest(path: &Path) -> CliResult<Vec<ManifestEntry>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes.as_slice());
    let expected = ["truth_path", "estimate_path", "condition", "subject", "hand"];
    let headers = rdr
        .headers()
        .map_err(|e| CliError::input(format!("{}: line 1: {e}", path.display())))?;
    if headers.iter().ne(expected) {
        return Err(CliError::input(format!(
            "{}: line 1: expected header `{}`",
            path.display(),
            expected.join(",")
        )));
    }
    let mut entries = Vec::new();
    for (i, rec) in rdr.deserialize::<ManifestRecord>().enumerate() {
        let r = rec.map_err(|e| CliError::input(format!("{}: line {}: {e}", path.display(), i + 2)))?;
        entries.push(ManifestEntry {
            truth: base.join(r.truth_path),
            estimate: base.join(r.estimate_path),
            condition: r.condition,
            subject: r.subject,
            hand: r.hand,
        });
    }
    if entries.is_empty() {
        return Err(CliError::input(format!("{}: manifest has no recordings", path.display())));
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub recording: String,
    pub condition: String,
    pub subject: String,
    pub hand: String,
    /// Maximum speed of the truth signal, normalized units per second.
    pub max_speed: f64,
    pub r2: f64,
}

#[derive(Debug, Clone)]
pub struct Evaluated {
    pub row: AccuracyRow,
    pub truth: Processed,
    pub estimate: Processed,
}

/// Rows come back in manifest order whatever the scheduling.
pub fn evaluate(entries: &[ManifestEntry], settings: &Settings) -> CliResult<Vec<Evaluated>> {
    entries
        .par_iter()
        .map(|e| {
            let truth = load(&e.truth, settings)?;
            let estimate = load(&e.estimate, settings)?;
            let r2 = r2_on_clean_grid(&truth.signal, &estimate.signal).map_err(|err| {
                CliError::at(&e.estimate, err)
            })?;
            Ok(Evaluated {
                row: AccuracyRow {
                    recording: e.recording_id(),
                    condition: e.condition.clone(),
                    subject: e.subject.clone(),
                    hand: e.hand.clone(),
                    max_speed: truth.derivatives.max_abs_velocity(),
                    r2,
                },
                truth,
                estimate,
            })
        })
        .collect()
}

pub fn render_report(rows: &[AccuracyRow]) -> CliResult<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for r in rows {
        wtr.serialize(r).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    wtr.into_inner().map_err(|e| CliError::Internal(e.to_string()))
}

pub fn read_report(path: &Path) -> CliResult<Vec<AccuracyRow>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let rows = rdr
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| CliError::input(format!("{}: line {}: {e}", path.display(), i + 2))))
        .collect::<CliResult<Vec<AccuracyRow>>>()?;
    if rows.is_empty() {
        return Err(CliError::input(format!("{}: report has no rows", path.display())));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSummary {
    pub condition: String,
    pub r2: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// `None` when the sample is too small or constant.
    pub normality: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub first: String,
    pub second: String,
    pub both_normal: bool,
    pub test: TestResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracySummary {
    pub alpha: f64,
    pub conditions: Vec<ConditionSummary>,
    pub comparisons: Vec<Comparison>,
    /// Spearman correlation of maximum speed with R² over all recordings,
    /// or the reason it is undefined.
    pub speed: std::result::Result<TestResult, String>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Conditions appear in order of first occurrence; every pair of conditions
/// is compared.
pub fn summarize(rows: &[AccuracyRow], alpha: f64, variant: TTestVariant) -> CliResult<AccuracySummary> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.condition.as_str()) {
            names.push(&r.condition);
        }
    }
    let conditions: Vec<ConditionSummary> = names
        .iter()
        .map(|&c| {
            let r2: Vec<f64> = rows.iter().filter(|r| r.condition == c).map(|r| r.r2).collect();
            let (mean, std) = mean_std(&r2);
            ConditionSummary {
                condition: c.to_string(),
                normality: shapiro_wilk(&r2).ok(),
                r2,
                mean,
                std,
            }
        })
        .collect();
    let mut comparisons = Vec::new();
    for i in 0..conditions.len() {
        for j in i + 1..conditions.len() {
            let (a, b) = (&conditions[i], &conditions[j]);
            let g = compare_groups(&a.r2, &b.r2, alpha, variant)?;
            comparisons.push(Comparison {
                first: a.condition.clone(),
                second: b.condition.clone(),
                both_normal: g.both_normal(alpha),
                test: g.test,
            });
        }
    }
    let speeds: Vec<f64> = rows.iter().map(|r| r.max_speed).collect();
    let r2s: Vec<f64> = rows.iter().map(|r| r.r2).collect();
    let speed = spearman(&speeds, &r2s).map_err(|e| e.to_string());
    Ok(AccuracySummary {
        alpha,
        conditions,
        comparisons,
        speed,
    })
}

impl AccuracySummary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "alpha = {}", self.alpha).unwrap();
        for c in &self.conditions {
            writeln!(s, "\n[condition {}]", c.condition).unwrap();
            writeln!(s, "n = {}", c.r2.len()).unwrap();
            writeln!(s, "mean_r2 = {}", c.mean).unwrap();
            writeln!(s, "std_r2 = {}", c.std).unwrap();
            match &c.normality {
                Some(t) => {
                    writeln!(s, "shapiro_w = {}", t.statistic).unwrap();
                    writeln!(s, "shapiro_p = {}", t.p_value).unwrap();
                    writeln!(s, "normal = {}", t.p_value >= self.alpha).unwrap();
                }
                None => writeln!(s, "normal = unknown").unwrap(),
            }
        }
        for c in &self.comparisons {
            writeln!(s, "\n[comparison {} vs {}]", c.first, c.second).unwrap();
            writeln!(s, "both_normal = {}", c.both_normal).unwrap();
            writeln!(s, "method = {}", c.test.method).unwrap();
            writeln!(s, "statistic = {}", c.test.statistic).unwrap();
            writeln!(s, "p_value = {}", c.test.p_value).unwrap();
            writeln!(s, "significant = {}", c.test.significant(self.alpha)).unwrap();
        }
        s.push_str("\n[speed]\n");
        match &self.speed {
            Ok(t) => {
                writeln!(s, "method = {}", t.method).unwrap();
                writeln!(s, "rho = {}", t.statistic).unwrap();
                writeln!(s, "p_value = {}", t.p_value).unwrap();
                writeln!(s, "significant = {}", t.significant(self.alpha)).unwrap();
            }
            Err(reason) => writeln!(s, "unavailable = {reason}").unwrap(),
        }
        s
    }
}

/// Maximum speed against R², one point group and fitted line per condition.
pub fn scatter_svg(rows: &[AccuracyRow]) -> String {
    let mut series: Vec<Series> = Vec::new();
    for r in rows {
        let idx = match series.iter().position(|s| s.name == r.condition) {
            Some(i) => i,
            None => {
                series.push(Series {
                    name: r.condition.clone(),
                    points: Vec::new(),
                    mark: Mark::Points,
                    fit: true,
                });
                series.len() - 1
            }
        };
        series[idx].points.push((r.max_speed, r.r2));
    }
    svg::render(&Chart {
        title: "Maximum speed vs R²".into(),
        x_label: "maximum speed (1/s)".into(),
        y_label: "R²".into(),
        series,
    })
}

/// Truth and estimate distance signals over time for one recording.
pub fn overlay_svg(e: &Evaluated) -> String {
    let line = |name: &str, p: &Processed| Series {
        name: name.into(),
        points: p
            .signal
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| (p.signal.time_at(i), *v))
            .collect(),
        mark: Mark::Line,
        fit: false,
    };
    svg::render(&Chart {
        title: format!("{} (R² = {:.3})", e.row.recording, e.row.r2),
        x_label: "time (s)".into(),
        y_label: "normalized distance".into(),
        series: vec![line("truth", &e.truth), line("estimate", &e.estimate)],
    })
}

/// File-name-safe form of a recording id.
pub fn file_stem(index: usize, recording: &str) -> String {
    let clean: String = recording
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{index:03}_{clean}")
}

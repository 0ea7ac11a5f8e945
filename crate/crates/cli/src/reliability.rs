//! Per-feature ICC(2,1) between a truth feature table and an estimate
//! feature table, optionally split into groups.

use tapkin_core::features::FeatureVector;
use tapkin_core::stats::{IccResult, IccThresholds};
use tapkin_core::synthlab::feature_iccs;
use tapkin_core::Error;

use crate::error::{CliError, CliResult};
use crate::featuredoc::FeatureTable;

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityRow {
    pub group: String,
    pub feature: &'static str,
    pub icc: IccResult,
}

fn columns(table: &FeatureTable, names: &[String], which: &str) -> CliResult<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            table.column(n).ok_or_else(|| {
                CliError::input(format!(
                    "{which} table has no column `{n}` (columns: {})",
                    table.key_columns.join(", ")
                ))
            })
        })
        .collect()
}

fn project(keys: &[String], idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| keys[i].clone()).collect()
}

fn group_label(names: &[String], values: &[String]) -> String {
    if names.is_empty() {
        return "all".into();
    }
    names
        .iter()
        .zip(values)
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

type Targets = Vec<(Vec<String>, FeatureVector)>;

fn targets(table: &FeatureTable, key_idx: &[usize], group_idx: &[usize], group: &[String], which: &str) -> CliResult<Targets> {
    let mut out: Targets = Vec::new();
    for (keys, f) in &table.rows {
        if project(keys, group_idx) != group {
            continue;
        }
        let k = project(keys, key_idx);
        if out.iter().any(|(seen, _)| *seen == k) {
            return Err(CliError::input(format!("{which} table lists target {} twice", k.join("/"))));
        }
        out.push((k, *f));
    }
    Ok(out)
}

/// Targets are matched on `keys` within each group; groups follow their
/// first appearance in the truth table. A target present in only one
/// table is a missing cell.
pub fn compute(
    truth: &FeatureTable,
    estimate: &FeatureTable,
    keys: &[String],
    group_by: &[String],
    thresholds: &IccThresholds,
) -> CliResult<Vec<ReliabilityRow>> {
    if keys.is_empty() {
        return Err(CliError::input("at least one key column is required"));
    }
    let (tk, tg) = (columns(truth, keys, "truth")?, columns(truth, group_by, "truth")?);
    let (ek, eg) = (columns(estimate, keys, "estimate")?, columns(estimate, group_by, "estimate")?);

    let mut groups: Vec<Vec<String>> = Vec::new();
    for (k, _) in &truth.rows {
        let g = project(k, &tg);
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    if let Some((k, _)) = estimate.rows.iter().find(|(k, _)| !groups.contains(&project(k, &eg))) {
        return Err(CliError::input(format!(
            "{}: group {} is absent from the truth table",
            Error::MissingCells,
            group_label(group_by, &project(k, &eg))
        )));
    }

    let mut rows = Vec::new();
    for g in &groups {
        let label = group_label(group_by, g);
        let t = targets(truth, &tk, &tg, g, "truth")?;
        let e = targets(estimate, &ek, &eg, g, "estimate")?;
        let mut first = Vec::new();
        let mut second = Vec::new();
        for (k, f) in &t {
            let m = e.iter().find(|(ek, _)| ek == k).ok_or_else(|| {
                CliError::input(format!("{}: group {label}: target {} has no estimate", Error::MissingCells, k.join("/")))
            })?;
            first.push(*f);
            second.push(m.1);
        }
        if let Some((k, _)) = e.iter().find(|(ek, _)| !t.iter().any(|(tk, _)| tk == ek)) {
            return Err(CliError::input(format!(
                "{}: group {label}: target {} has no truth",
                Error::MissingCells,
                k.join("/")
            )));
        }
        let iccs = feature_iccs(&first, &second, thresholds).map_err(|err| CliError::input(format!("group {label}: {err}")))?;
        rows.extend(iccs.into_iter().map(|r| ReliabilityRow {
            group: label.clone(),
            feature: r.feature,
            icc: r.icc,
        }));
    }
    Ok(rows)
}

pub fn render(rows: &[ReliabilityRow]) -> CliResult<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(e.to_string());
    wtr.write_record(["group", "feature", "icc", "raw_icc", "label", "n_targets", "k_raters"])
        .map_err(internal)?;
    for r in rows {
        wtr.write_record([
            r.group.clone(),
            r.feature.to_string(),
            r.icc.icc.to_string(),
            r.icc.raw_icc.to_string(),
            r.icc.label.to_string(),
            r.icc.n_targets.to_string(),
            r.icc.k_raters.to_string(),
        ])
        .map_err(internal)?;
    }
    wtr.into_inner().map_err(|e| CliError::Internal(e.to_string()))
}

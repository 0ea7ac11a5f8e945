//! ICC(2,1): two-way random effects, absolute agreement, single rater.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReliabilityLabel {
    Poor,
    Moderate,
    Good,
    Excellent,
}

impl ReliabilityLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReliabilityLabel::Poor => "poor",
            ReliabilityLabel::Moderate => "moderate",
            ReliabilityLabel::Good => "good",
            ReliabilityLabel::Excellent => "excellent",
        }
    }
}

impl fmt::Display for ReliabilityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReliabilityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poor" => Ok(ReliabilityLabel::Poor),
            "moderate" => Ok(ReliabilityLabel::Moderate),
            "good" => Ok(ReliabilityLabel::Good),
            "excellent" => Ok(ReliabilityLabel::Excellent),
            other => Err(Error::ConfigInvalid(format!("unknown reliability label '{other}'"))),
        }
    }
}

/// Koo–Li cut points. `good` is closed at both ends: an ICC of exactly
/// `excellent` is still labeled good.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IccThresholds {
    pub moderate: f64,
    pub good: f64,
    pub excellent: f64,
}

impl Default for IccThresholds {
    fn default() -> Self {
        IccThresholds {
            moderate: 0.50,
            good: 0.75,
            excellent: 0.90,
        }
    }
}

impl IccThresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.moderate, self.good, self.excellent].iter().all(|v| v.is_finite())
            && self.moderate <= self.good
            && self.good <= self.excellent;
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(format!(
                "ICC cut points must be finite and ordered, got {}, {}, {}",
                self.moderate, self.good, self.excellent
            )))
        }
    }

    pub fn label(&self, icc: f64) -> ReliabilityLabel {
        if icc < self.moderate {
            ReliabilityLabel::Poor
        } else if icc < self.good {
            ReliabilityLabel::Moderate
        } else if icc <= self.excellent {
            ReliabilityLabel::Good
        } else {
            ReliabilityLabel::Excellent
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IccResult {
    pub icc: f64,
    pub raw_icc: f64,
    pub label: ReliabilityLabel,
    pub n_targets: usize,
    pub k_raters: usize,
}

/// `matrix[i][j]` is rater `j`'s measurement of target `i`. A matrix with no
/// variation at all is perfect agreement and yields 1.
pub fn icc_2_1(matrix: &[Vec<f64>], thresholds: &IccThresholds) -> Result<IccResult> {
    let n = matrix.len();
    if n < 3 {
        return Err(Error::TooFewTargets { n });
    }
    let k = matrix[0].len();
    if matrix.iter().any(|row| row.len() != k || row.iter().any(|v| !v.is_finite())) {
        return Err(Error::MissingCells);
    }
    if k < 2 {
        return Err(Error::TooFewRaters { k });
    }
    let (nf, kf) = (n as f64, k as f64);

    let row_means: Vec<f64> = matrix.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let col_means: Vec<f64> = (0..k)
        .map(|j| matrix.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();
    let grand = col_means.iter().sum::<f64>() / kf;

    let ss_rows = kf * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_cols = nf * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let mut ss_err = 0.0;
    for (row, rm) in matrix.iter().zip(&row_means) {
        for (x, cm) in row.iter().zip(&col_means) {
            ss_err += ((x - rm) - (cm - grand)).powi(2);
        }
    }
    let ms_r = ss_rows / (nf - 1.0);
    let ms_c = ss_cols / (kf - 1.0);
    let ms_e = ss_err / ((nf - 1.0) * (kf - 1.0));

    let num = ms_r - ms_e;
    let den = ms_r + (kf - 1.0) * ms_e + kf / nf * (ms_c - ms_e);
    let raw_icc = if num == 0.0 && den == 0.0 { 1.0 } else { num / den };
    let icc = raw_icc.max(0.0);
    Ok(IccResult {
        icc,
        raw_icc,
        label: thresholds.label(icc),
        n_targets: n,
        k_raters: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_columns(a: &[f64], b: &[f64]) -> Vec<Vec<f64>> {
        a.iter().zip(b).map(|(x, y)| vec![*x, *y]).collect()
    }

    #[test]
    fn identical_columns() {
        let col = [1.0, 2.5, 3.0, 7.0, 4.0];
        let r = icc_2_1(&two_columns(&col, &col), &IccThresholds::default()).unwrap();
        assert_eq!(r.raw_icc, 1.0);
        assert_eq!(r.label, ReliabilityLabel::Excellent);
    }

    #[test]
    fn offset_penalized() {
        // targets 1..6 with a +1 offset: MSR = 7, MSE = 0, MSC = 3 → 7 / (7 + 1) = 0.875
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b: Vec<f64> = a.iter().map(|v| v + 1.0).collect();
        let r = icc_2_1(&two_columns(&a, &b), &IccThresholds::default()).unwrap();
        assert!((r.raw_icc - 0.875).abs() < 1e-12);
        assert_eq!(r.label, ReliabilityLabel::Good);
    }

    #[test]
    fn negative_clamped() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [4.0, 3.0, 2.0, 1.0];
        let r = icc_2_1(&two_columns(&a, &b), &IccThresholds::default()).unwrap();
        assert!(r.raw_icc < 0.0);
        assert_eq!(r.icc, 0.0);
        assert_eq!(r.label, ReliabilityLabel::Poor);
    }

    #[test]
    fn labels_at_cut_points() {
        let t = IccThresholds::default();
        assert_eq!(t.label(0.4999), ReliabilityLabel::Poor);
        assert_eq!(t.label(0.50), ReliabilityLabel::Moderate);
        assert_eq!(t.label(0.7499), ReliabilityLabel::Moderate);
        assert_eq!(t.label(0.75), ReliabilityLabel::Good);
        assert_eq!(t.label(0.90), ReliabilityLabel::Good);
        assert_eq!(t.label(0.9001), ReliabilityLabel::Excellent);
    }

    #[test]
    fn shape_errors() {
        let t = IccThresholds::default();
        assert!(matches!(icc_2_1(&[vec![1.0, 2.0], vec![2.0, 3.0]], &t), Err(Error::TooFewTargets { n: 2 })));
        let ragged = vec![vec![1.0, 2.0], vec![2.0], vec![3.0, 4.0]];
        assert!(matches!(icc_2_1(&ragged, &t), Err(Error::MissingCells)));
        let nan = vec![vec![1.0, 2.0], vec![f64::NAN, 3.0], vec![3.0, 4.0]];
        assert!(matches!(icc_2_1(&nan, &t), Err(Error::MissingCells)));
        let single = vec![vec![1.0], vec![2.0], vec![3.0]];
        assert!(matches!(icc_2_1(&single, &t), Err(Error::TooFewRaters { k: 1 })));
    }

    #[test]
    fn all_equal_is_perfect() {
        let m = vec![vec![2.0, 2.0]; 4];
        assert_eq!(icc_2_1(&m, &IccThresholds::default()).unwrap().icc, 1.0);
    }
}

//! Accuracy and reliability statistics.

mod dist;
mod icc;
mod shapiro;

pub use dist::{normal_cdf, normal_quantile, normal_sf, student_t_two_sided};
pub use icc::{icc_2_1, IccResult, IccThresholds, ReliabilityLabel};
pub use shapiro::shapiro_wilk;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global significance level.
pub const ALPHA: f64 = 0.05;

/// Largest group sizes for which Mann–Whitney p-values are computed exactly.
pub const MWU_EXACT_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ShapiroWilk,
    WelchT,
    PooledT,
    MannWhitneyExact,
    MannWhitneyNormal,
    Spearman,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ShapiroWilk => "shapiro_wilk",
            Method::WelchT => "welch_t",
            Method::PooledT => "pooled_t",
            Method::MannWhitneyExact => "mann_whitney_exact",
            Method::MannWhitneyNormal => "mann_whitney_normal",
            Method::Spearman => "spearman",
        }
    }

    pub fn is_t_test(&self) -> bool {
        matches!(self, Method::WelchT | Method::PooledT)
    }

    pub fn is_mann_whitney(&self) -> bool {
        matches!(self, Method::MannWhitneyExact | Method::MannWhitneyNormal)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of a hypothesis test; p-values are two-sided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: Method,
    pub n: Vec<usize>,
}

impl TestResult {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TTestVariant {
    #[default]
    Welch,
    Pooled,
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::ConfigInvalid("sample contains non-finite values".into()))
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

/// Coefficient of determination of `estimate` against `truth`. Negative when
/// the estimate is worse than predicting the truth mean.
pub fn r2_score(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: estimate.len(),
        });
    }
    if truth.len() < 3 {
        return Err(Error::SampleTooSmall { n: truth.len(), min: 3 });
    }
    let m = mean(truth);
    let ss_tot: f64 = truth.iter().map(|y| (y - m).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ConstantTruth);
    }
    let ss_res: f64 = truth.iter().zip(estimate).map(|(y, e)| (y - e).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn t_test(a: &[f64], b: &[f64], variant: TTestVariant) -> Result<TestResult> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::SampleTooSmall { n: s.len(), min: 2 });
        }
        check_finite(s)?;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a), variance(b));
    let diff = mean(a) - mean(b);
    let (se, df) = match variant {
        TTestVariant::Pooled => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            ((pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
        TTestVariant::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let se2 = qa + qb;
            let df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
            (se2.sqrt(), df)
        }
    };
    let (t, p) = if se == 0.0 {
        if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = diff / se;
        (t, student_t_two_sided(t, df))
    };
    Ok(TestResult {
        statistic: t,
        p_value: p,
        method: match variant {
            TTestVariant::Welch => Method::WelchT,
            TTestVariant::Pooled => Method::PooledT,
        },
        n: vec![a.len(), b.len()],
    })
}

/// Average (mid) ranks, 1-based, plus the tie group sizes.
pub fn rank_average(x: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0.0; x.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Probabilities of `U = 0..=m*n` under the null for group sizes `m`, `n`
/// without ties (the Mann–Whitney frequency recursion).
pub fn mann_whitney_exact_distribution(m: usize, n: usize) -> Vec<f64> {
    // counts[i][j][u] built up one group size at a time; only need j-row reuse
    let max_u = m * n;
    // table[j] holds counts for the current i and each j
    let mut table: Vec<Vec<f64>> = (0..=n).map(|_| vec![1.0]).collect();
    for i in 1..=m {
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        next.push(vec![1.0]);
        for j in 1..=n {
            let mut counts = vec![0.0; i * j + 1];
            // largest value from the first group: it beats all j of the second
            for (u, c) in table[j].iter().enumerate() {
                counts[u + j] += c;
            }
            // largest value from the second group
            for (u, c) in next[j - 1].iter().enumerate() {
                counts[u] += c;
            }
            next.push(counts);
        }
        table = next;
    }
    let counts = &table[n];
    debug_assert_eq!(counts.len(), max_u + 1);
    let total: f64 = counts.iter().sum();
    counts.iter().map(|c| c / total).collect()
}

/// Two-sided Mann–Whitney U test. The statistic is U for `a`: the number of
/// (a, b) pairs with a > b, ties counting one half.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult> {
    for s in [a, b] {
        if s.is_empty() {
            return Err(Error::SampleTooSmall { n: 0, min: 1 });
        }
        check_finite(s)?;
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = rank_average(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u = rank_sum_a - (na * (na + 1)) as f64 / 2.0;

    if na <= MWU_EXACT_MAX && nb <= MWU_EXACT_MAX && ties.is_empty() {
        let probs = mann_whitney_exact_distribution(na, nb);
        let k = u.round() as usize;
        let lower: f64 = probs[..=k].iter().sum();
        let upper: f64 = probs[k..].iter().sum();
        return Ok(TestResult {
            statistic: u,
            p_value: (2.0 * lower.min(upper)).min(1.0),
            method: Method::MannWhitneyExact,
            n: vec![na, nb],
        });
    }

    let (m, n) = (na as f64, nb as f64);
    let total = m + n;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (total * (total - 1.0));
    let sigma = (m * n / 12.0 * ((total + 1.0) - tie_term)).sqrt();
    let deviation = (u - m * n / 2.0).abs();
    let p = if sigma == 0.0 {
        1.0
    } else {
        (2.0 * normal_sf((deviation - 0.5).max(0.0) / sigma)).min(1.0)
    };
    Ok(TestResult {
        statistic: u,
        p_value: p,
        method: Method::MannWhitneyNormal,
        n: vec![na, nb],
    })
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with a t-distribution p-value (n − 2 df).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<TestResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 4 {
        return Err(Error::SampleTooSmall { n: x.len(), min: 4 });
    }
    check_finite(x)?;
    check_finite(y)?;
    let (rx, _) = rank_average(x);
    let (ry, _) = rank_average(y);
    let rho = pearson(&rx, &ry).ok_or(Error::ConstantInput)?;
    let df = (x.len() - 2) as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        student_t_two_sided(t, df)
    };
    Ok(TestResult {
        statistic: rho,
        p_value: p,
        method: Method::Spearman,
        n: vec![x.len()],
    })
}

/// Two-group comparison gated on normality: a t-test when Shapiro–Wilk does not
/// reject normality (p ≥ alpha) for both groups, otherwise Mann–Whitney U.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupComparison {
    /// `None` when normality could not be assessed (too few or all-equal values).
    pub normality: [Option<TestResult>; 2],
    pub test: TestResult,
}

impl GroupComparison {
    pub fn both_normal(&self, alpha: f64) -> bool {
        self.normality
            .iter()
            .all(|r| r.as_ref().is_some_and(|r| r.p_value >= alpha))
    }
}

pub fn compare_groups(a: &[f64], b: &[f64], alpha: f64, variant: TTestVariant) -> Result<GroupComparison> {
    let normality = [shapiro_wilk(a).ok(), shapiro_wilk(b).ok()];
    let gate = |r: &Option<TestResult>| r.as_ref().is_some_and(|r| r.p_value >= alpha);
    let test = if normality.iter().all(gate) {
        t_test(a, b, variant)?
    } else {
        mann_whitney_u(a, b)?
    };
    Ok(GroupComparison { normality, test })
}

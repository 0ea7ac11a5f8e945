//! Statistics checked against independent references: scipy values frozen
//! from tests/data/shapiro_reference.py, brute-force enumeration, and a
//! separately written ANOVA decomposition.

use tapkin_core::stats::{
    icc_2_1, mann_whitney_exact_distribution, mann_whitney_u, normal_quantile, r2_score, shapiro_wilk, spearman, t_test,
    IccThresholds, Method, ReliabilityLabel, TTestVariant,
};

const PHI: f64 = 0.618_033_988_749_894_9;

fn frac(x: f64) -> f64 {
    x - x.floor()
}

fn seq(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..n).map(|i| f(i as f64)).collect()
}

/// Same closed forms as tests/data/shapiro_reference.py.
fn shapiro_samples() -> Vec<Vec<f64>> {
    let q20 = seq(20, |i| normal_quantile((i + 1.0) / 21.0));
    vec![
        q20.clone(),
        q20.iter().map(|v| v.exp()).collect(),
        vec![1.0, 2.0, 4.0],
        vec![0.1, 0.5, 0.6, 2.0],
        seq(5, |i| frac(i * PHI)),
        seq(7, |i| i * i),
        seq(11, |i| (i * 1.7).sin()),
        seq(12, |i| (i * 1.7).sin() + 0.05 * i),
        seq(15, |i| (i + 1.0).ln()),
        seq(25, |i| 2.0 * frac(i * 0.754_877_666_2) - 1.0),
        seq(30, |i| (i * 0.9).sin().powi(3)),
        seq(50, |i| normal_quantile((i + 0.5) / 50.0) + 0.3 * (i * 2.1).sin()),
        seq(64, |i| i % 7.0),
        seq(100, |i| (0.5 * normal_quantile((i + 1.0) / 101.0)).exp()),
        seq(150, |i| normal_quantile(frac(i * PHI) * 0.98 + 0.01).powi(3)),
        seq(200, |i| i.sqrt()),
        seq(333, |i| i.sin() * (i * 0.37).cos()),
        seq(500, |i| normal_quantile(frac(i * PHI) * 0.98 + 0.01)),
        seq(1000, |i| normal_quantile((i + 0.5) / 1000.0) * (1.0 + 0.001 * i)),
        seq(4000, |i| frac(i * PHI).powi(2)),
    ]
}

/// scipy.stats.shapiro: (sample, W, p).
const SHAPIRO_REFERENCE: [(usize, f64, f64); 20] = [
    (0, 9.933_329_383_087_96e-1, 9.999_007_805_039_322e-1),
    (1, 8.242_114_149_644_039e-1, 2.030_668_447_075_252e-3),
    (2, 9.642_857_142_857_142e-1, 6.368_868_450_289_689e-1),
    (3, 8.489_497_100_236_948e-1, 2.227_769_342_455_221e-1),
    (4, 9.911_143_152_787_089e-1, 9.834_476_502_573_659e-1),
    (5, 9.027_707_348_662_862e-1, 3.480_906_627_153_116e-1),
    (6, 9.068_631_035_790_151e-1, 2.237_916_293_710_532e-1),
    (7, 9.262_800_371_789_163e-1, 3.423_440_421_051_458e-1),
    (8, 8.980_729_675_269_821e-1, 8.894_091_672_358_29e-2),
    (9, 9.195_868_798_015_396e-1, 5.013_576_397_337_497e-2),
    (10, 9.321_276_425_011_478e-1, 5.594_094_688_760_251e-2),
    (11, 9.981_896_759_551_293e-1, 9.999_999_254_580_625e-1),
    (12, 9.154_334_271_792_774e-1, 3.221_074_347_098_13e-4),
    (13, 9.152_329_744_581_218e-1, 7.931_721_329_922_162e-6),
    (14, 7.501_600_759_643_299e-1, 1.091_792_849_711_666e-14),
    (15, 9.468_343_640_179_807e-1, 9.455_981_629_306_125e-7),
    (16, 9.808_197_741_092_837e-1, 2.005_192_728_959_142e-4),
    (17, 9.958_113_150_492_955e-1, 2.048_850_961_965_79e-1),
    (18, 9.592_117_933_562_425e-1, 4.417_460_642_508_112e-16),
    (19, 8.952_220_357_061_08e-1, 4.783_498_449_264_023e-46),
];

#[test]
fn shapiro_matches_reference_implementation() {
    let samples = shapiro_samples();
    for (k, w, p) in SHAPIRO_REFERENCE {
        let r = shapiro_wilk(&samples[k]).unwrap();
        assert!((r.statistic - w).abs() < 1e-4, "sample {k}: W {} vs {w}", r.statistic);
        // p-values agree closely too; compare on the log scale for the tiny ones
        let (lp, lq) = (r.p_value.max(1e-300).ln(), p.ln());
        assert!((lp - lq).abs() < 1e-3 * lq.abs().max(1.0), "sample {k}: p {} vs {p}", r.p_value);
    }
}

#[test]
fn shapiro_normal_and_skewed_quantiles() {
    let samples = shapiro_samples();
    let normal = shapiro_wilk(&samples[0]).unwrap();
    assert!(normal.statistic > 0.95 && normal.p_value > 0.05);
    let skewed = shapiro_wilk(&samples[1]).unwrap();
    assert!(skewed.p_value < 0.05);
}

#[test]
fn shapiro_affine_invariance() {
    for x in shapiro_samples().iter().take(12) {
        let w = shapiro_wilk(x).unwrap().statistic;
        let y: Vec<f64> = x.iter().map(|v| -3.5 * v + 100.0).collect();
        assert!((shapiro_wilk(&y).unwrap().statistic - w).abs() < 1e-10);
    }
}

/// U for every way of choosing which of the m + n ranks belong to the first group.
fn enumerate_u(m: usize, n: usize) -> Vec<f64> {
    let total = m + n;
    let mut counts = vec![0u64; m * n + 1];
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let rank_sum: usize = (0..total).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).sum();
        counts[rank_sum - m * (m + 1) / 2] += 1;
    }
    let all: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / all as f64).collect()
}

#[test]
fn mann_whitney_exact_matches_enumeration() {
    for m in 1..=8 {
        for n in 1..=8 {
            let probs = mann_whitney_exact_distribution(m, n);
            let brute = enumerate_u(m, n);
            assert_eq!(probs.len(), brute.len());
            for (a, b) in probs.iter().zip(&brute) {
                assert!((a - b).abs() < 1e-15, "m={m} n={n}");
            }
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn mann_whitney_reference_values() {
    let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert!((r.p_value - 2.0 / 6.0).abs() < 1e-12);

    // scipy.stats.mannwhitneyu(method="exact")
    let a = [0.3, 1.7, 2.2, 5.0, 0.1, 3.3, 2.8];
    let b = [1.0, 2.0, 0.2, 4.4, 6.1, 5.5];
    let r = mann_whitney_u(&a, &b).unwrap();
    assert_eq!(r.method, Method::MannWhitneyExact);
    assert_eq!(r.statistic, 16.0);
    assert!((r.p_value - 0.533_799_533_799_533_8).abs() < 1e-12);

    // ties force the asymptotic path; scipy with tie and continuity correction
    let c = [1.0, 2.0, 2.0, 3.0, 3.0, 3.0, 4.0, 5.0, 5.0, 6.0, 7.0, 8.0];
    let d = [3.0, 4.0, 4.0, 5.0, 6.0, 6.0, 7.0, 8.0, 9.0, 9.0, 10.0, 11.0];
    let r = mann_whitney_u(&c, &d).unwrap();
    assert_eq!(r.method, Method::MannWhitneyNormal);
    assert_eq!(r.statistic, 29.5);
    assert!((r.p_value - 0.014_740_434_837_801_814).abs() < 1e-12);
}

#[test]
fn t_test_reference_values() {
    let r = t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0], TTestVariant::Pooled).unwrap();
    assert!((r.statistic + 1.0).abs() < 1e-9);
    assert!((r.p_value - 0.346_593_507_087_334_3).abs() < 1e-6);

    // scipy.stats.ttest_ind
    let a = [0.3, 1.7, 2.2, 5.0, 0.1, 3.3, 2.8];
    let b = [1.0, 2.0, 0.2, 4.4, 6.1, 5.5];
    let welch = t_test(&a, &b, TTestVariant::Welch).unwrap();
    assert!((welch.statistic + 0.834_797_722_210_614_9).abs() < 1e-12);
    assert!((welch.p_value - 0.426_021_965_789_677_1).abs() < 1e-10);
    let pooled = t_test(&a, &b, TTestVariant::Pooled).unwrap();
    assert!((pooled.statistic + 0.859_561_140_483_892_3).abs() < 1e-12);
    assert!((pooled.p_value - 0.408_373_375_484_457_96).abs() < 1e-10);
}

#[test]
fn spearman_reference_values() {
    let r = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 3.0, 2.0, 5.0, 4.0]).unwrap();
    assert!((r.statistic - 0.8).abs() < 1e-9);

    let x: Vec<f64> = (1..=12).map(f64::from).collect();
    let y = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0, 8.0, 7.0, 10.0, 12.0, 9.0, 11.0];
    let r = spearman(&x, &y).unwrap();
    assert!((r.statistic - 0.937_062_937_062_937_2).abs() < 1e-12);
    assert!((r.p_value - 6.993_164_953_210_54e-6).abs() < 1e-12);
}

#[test]
fn r2_reference_values() {
    assert!((r2_score(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 2.0, 5.0]).unwrap() - 0.2).abs() < 1e-12);
}

/// ICC(2,1) from SS_total = SS_rows + SS_cols + SS_error.
fn anova_icc(m: &[Vec<f64>]) -> f64 {
    let n = m.len() as f64;
    let k = m[0].len() as f64;
    let all: Vec<f64> = m.iter().flatten().copied().collect();
    let grand = all.iter().sum::<f64>() / (n * k);
    let ss_total: f64 = all.iter().map(|v| (v - grand).powi(2)).sum();
    let ss_rows: f64 = m.iter().map(|r| k * (r.iter().sum::<f64>() / k - grand).powi(2)).sum();
    let ss_cols: f64 = (0..m[0].len())
        .map(|j| n * (m.iter().map(|r| r[j]).sum::<f64>() / n - grand).powi(2))
        .sum();
    let ss_err = ss_total - ss_rows - ss_cols;
    let msr = ss_rows / (n - 1.0);
    let msc = ss_cols / (k - 1.0);
    let mse = ss_err / ((n - 1.0) * (k - 1.0));
    (msr - mse) / (msr + (k - 1.0) * mse + k / n * (msc - mse))
}

fn matrix(rows: &[&[f64]]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.to_vec()).collect()
}

#[test]
fn icc_matches_anova_oracle() {
    let thresholds = IccThresholds::default();
    let cases = [
        // classic six targets by four judges
        matrix(&[
            &[9.0, 2.0, 5.0, 8.0],
            &[6.0, 1.0, 3.0, 2.0],
            &[8.0, 4.0, 6.0, 8.0],
            &[7.0, 1.0, 2.0, 6.0],
            &[10.0, 5.0, 6.0, 9.0],
            &[6.0, 2.0, 4.0, 7.0],
        ]),
        matrix(&[&[1.0, 1.4], &[2.0, 2.1], &[3.0, 3.9], &[4.0, 3.8], &[5.0, 5.6], &[6.0, 6.2]]),
        matrix(&[&[1.0, 2.0], &[2.0, 3.0], &[3.0, 4.0], &[4.0, 5.0], &[5.0, 6.0], &[6.0, 7.0]]),
        matrix(&[&[0.3, 0.1, 0.2], &[0.9, 1.1, 1.0], &[0.5, 0.2, 0.6], &[1.4, 1.5, 1.2]]),
    ];
    for m in &cases {
        let r = icc_2_1(m, &thresholds).unwrap();
        assert!((r.raw_icc - anova_icc(m)).abs() < 1e-10);
    }
    // numpy on the same matrices
    assert!((icc_2_1(&cases[0], &thresholds).unwrap().raw_icc - 0.289_763_779_527_559_2).abs() < 1e-10);
    assert!((icc_2_1(&cases[1], &thresholds).unwrap().raw_icc - 0.966_744_730_679_156_8).abs() < 1e-10);
    assert!((icc_2_1(&cases[2], &thresholds).unwrap().raw_icc - 0.875).abs() < 1e-10);
}

#[test]
fn icc_clamps_and_labels() {
    let t = IccThresholds::default();
    let anti = matrix(&[&[1.0, 6.0], &[2.0, 5.0], &[3.0, 4.0], &[4.0, 3.0], &[5.0, 2.0], &[6.0, 1.0]]);
    let r = icc_2_1(&anti, &t).unwrap();
    assert!(r.raw_icc < 0.0);
    assert_eq!(r.icc, 0.0);
    assert_eq!(r.label, ReliabilityLabel::Poor);

    for (v, label) in [
        (0.0, ReliabilityLabel::Poor),
        (0.499_999_999, ReliabilityLabel::Poor),
        (0.5, ReliabilityLabel::Moderate),
        (0.749_999_999, ReliabilityLabel::Moderate),
        (0.75, ReliabilityLabel::Good),
        (0.9, ReliabilityLabel::Good),
        (0.900_000_001, ReliabilityLabel::Excellent),
        (1.0, ReliabilityLabel::Excellent),
    ] {
        assert_eq!(t.label(v), label, "{v}");
    }
}

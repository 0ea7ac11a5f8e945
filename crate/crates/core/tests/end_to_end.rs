use std::f64::consts::PI;

use tapkin_core::cycles::{detect_cycles, DetectConfig};
use tapkin_core::error::Error;
use tapkin_core::features::extract_features;
use tapkin_core::landmarks::SourceMeta;
use tapkin_core::signal::{pipeline, process_uniform, DistanceSignal, PipelineConfig, PipelineInput};
use tapkin_core::stats::ReliabilityLabel;
use tapkin_core::synthlab::{
    default_freq_grid, default_subjects, experiment_reliability, experiment_speed_accuracy, generate, landmarks_from_samples,
    oracle_configs, recover_truth, speed_accuracy_rows, truth_deviations, DegradationConfig, ExperimentSettings, SynthConfig,
};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn generated_truth_is_recovered() {
    let settings = ExperimentSettings::default();
    for cfg in oracle_configs(60, 11) {
        let (truth, measured) = recover_truth(&cfg, &settings).unwrap();
        for (name, ratio) in truth_deviations(&truth, &measured) {
            assert!(ratio <= 1.0, "{name}: truth {truth:?} measured {measured:?} for {cfg:?}");
        }
    }
}

#[test]
fn sinusoid_roughness_is_one() {
    for (period, fs) in [(0.25, 100.0), (0.5, 100.0), (0.8, 60.0), (0.4, 120.0)] {
        let g = generate(&SynthConfig {
            base_period: period,
            fs,
            ..SynthConfig::default()
        })
        .unwrap();
        let (sig, d) = process_uniform(&g.signal, &PipelineConfig::default()).unwrap();
        let f = extract_features(&sig, &d, &detect_cycles(&sig, &DetectConfig::default()).unwrap()).unwrap();
        assert!((f.roughness - 1.0).abs() < 0.02, "period {period}: {}", f.roughness);
        assert!((f.mean_freq - 1.0 / period).abs() < 0.02 / period);
    }
}

#[test]
fn linear_envelope_decrement() {
    // A_i = 1 - 0.02 i; the detector measures the 19 closing sweeps between
    // the first and last peak, whose mean is 0.82 and slope -0.04 per second.
    let fs = 100.0;
    let mut values = Vec::new();
    for i in 0..20 {
        let a = 1.0 - 0.02 * i as f64;
        values.extend((0..50).map(|k| 0.5 * a * (1.0 - (2.0 * PI * k as f64 / 50.0).cos())));
    }
    values.push(0.0);
    let raw = DistanceSignal::new(0.0, fs, values).unwrap();
    let (sig, d) = process_uniform(&raw, &PipelineConfig::default()).unwrap();
    let f = extract_features(&sig, &d, &detect_cycles(&sig, &DetectConfig::default()).unwrap()).unwrap();
    let expected = -0.04 / 0.82;
    assert!((f.decrement_amp - expected).abs() < 0.05 * expected.abs(), "{}", f.decrement_amp);
}

#[test]
fn landmark_route_max_speed() {
    let g = generate(&SynthConfig {
        n_cycles: 20,
        ..SynthConfig::default()
    })
    .unwrap();
    let series = landmarks_from_samples(&g.signal.samples(), 100.0, SourceMeta::synthetic("s01")).unwrap();
    let (sig, d) = pipeline(PipelineInput::Landmarks(&series), &PipelineConfig::default()).unwrap();
    let lo = sig.values().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sig.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    let analytic = PI * 2.0;
    assert!((d.max_abs_velocity() - analytic).abs() < 0.02 * analytic, "{}", d.max_abs_velocity());
}

#[test]
fn faster_tapping_loses_more_accuracy() {
    let settings = ExperimentSettings::default();
    let grid = default_freq_grid();
    let n_seeds = 20;
    let rows = speed_accuracy_rows(&grid, &SynthConfig::default(), &DegradationConfig::zoom_like(3), n_seeds, &settings).unwrap();
    let medians: Vec<f64> = rows.chunks(n_seeds).map(|c| median(c.iter().map(|r| r.r2).collect())).collect();
    for w in medians.windows(2) {
        assert!(w[1] < w[0], "{medians:?}");
    }
}

#[test]
fn speed_accuracy_correlation() {
    let settings = ExperimentSettings::default();
    let out = experiment_speed_accuracy(
        &default_freq_grid(),
        &SynthConfig::default(),
        &DegradationConfig::zoom_like(7),
        10,
        &settings,
    )
    .unwrap();
    assert_eq!(out.rows.len(), 100);
    assert!(out.spearman.statistic < -0.5 && out.spearman.p_value < 0.05);
}

#[test]
fn clean_channel_keeps_accuracy() {
    let rows = speed_accuracy_rows(
        &default_freq_grid(),
        &SynthConfig::default(),
        &DegradationConfig::identity(0),
        10,
        &ExperimentSettings::default(),
    )
    .unwrap();
    assert!(rows.iter().all(|r| r.r2 > 0.99));
}

#[test]
fn baseline_noise_alone_has_no_speed_effect() {
    let deg = DegradationConfig {
        baseline_noise_sigma: 0.01,
        ..DegradationConfig::identity(5)
    };
    let out = experiment_speed_accuracy(&default_freq_grid(), &SynthConfig::default(), &deg, 10, &ExperimentSettings::default()).unwrap();
    assert!(!(out.spearman.statistic < 0.0 && out.spearman.p_value < 0.05), "{:?}", out.spearman);
}

#[test]
fn single_frequency_is_degenerate() {
    let err = experiment_speed_accuracy(
        &[2.0],
        &SynthConfig::default(),
        &DegradationConfig::zoom_like(1),
        10,
        &ExperimentSettings::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::ConstantInput), "{err}");
}

#[test]
fn experiments_are_deterministic() {
    let settings = ExperimentSettings::default();
    let run = || {
        speed_accuracy_rows(&[1.5, 3.0], &SynthConfig::default(), &DegradationConfig::zoom_like(9), 4, &settings).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn clean_reliability_is_perfect() {
    let r = experiment_reliability(&default_subjects(8, 4), &DegradationConfig::identity(0), &ExperimentSettings::default()).unwrap();
    for f in &r.per_feature {
        assert_eq!(f.icc.icc, 1.0, "{}", f.feature);
        assert_eq!(f.icc.label, ReliabilityLabel::Excellent);
    }
}

fn timing_beats_shape(r: &tapkin_core::synthlab::ReliabilityExperiment) -> bool {
    let icc = |n: &str| r.icc(n).unwrap().icc;
    ["mean_freq", "period_range"]
        .iter()
        .all(|t| ["cv_amp", "cv_speed"].iter().all(|s| icc(t) >= icc(s)))
}

#[test]
fn streaming_reliability_ordering() {
    let settings = ExperimentSettings::default();
    let r = experiment_reliability(&default_subjects(12, 0), &DegradationConfig::zoom_like(0), &settings).unwrap();
    assert!(timing_beats_shape(&r), "{:?}", r.per_feature);
    let held = (0..20u64)
        .filter(|&seed| {
            let r = experiment_reliability(&default_subjects(12, seed), &DegradationConfig::zoom_like(seed), &settings).unwrap();
            timing_beats_shape(&r)
        })
        .count();
    assert!(held >= 16, "ordering held for {held} of 20 seeds");
    let mean_freq_wins = (0..20u64)
        .filter(|&seed| {
            let r = experiment_reliability(&default_subjects(12, seed), &DegradationConfig::zoom_like(seed), &settings).unwrap();
            let icc = |n: &str| r.icc(n).unwrap().icc;
            icc("mean_freq") >= icc("cv_amp") && icc("mean_freq") >= icc("cv_speed")
        })
        .count();
    assert_eq!(mean_freq_wins, 20);
}

#[test]
fn too_few_subjects() {
    let err = experiment_reliability(&default_subjects(2, 0), &DegradationConfig::zoom_like(0), &ExperimentSettings::default()).unwrap_err();
    assert!(matches!(err, Error::TooFewTargets { n: 2 }));
}

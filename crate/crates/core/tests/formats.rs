use std::fs;

use tapkin_core::cycles::{detect_cycles, read_cycle_file, write_cycle_file, DetectConfig, EventKind};
use tapkin_core::landmarks::{
    annotation_distance, fingertip_distance, read_annotation_file, read_landmark_file, write_annotations, write_landmark_file,
    Annotation, AnnotationTrack, LandmarkFrame, LandmarkSeries, SourceMeta,
};
use tapkin_core::signal::{process_uniform, read_distance_file, write_distance_file, PipelineConfig};
use tapkin_core::synthlab::{generate, landmarks_from_samples, SynthConfig};
use tapkin_core::Error;

fn synthetic_series() -> LandmarkSeries {
    let g = generate(&SynthConfig {
        n_cycles: 6,
        period_jitter_cv: 0.07,
        noise_sigma: 0.01,
        seed: 42,
        ..SynthConfig::default()
    })
    .unwrap();
    landmarks_from_samples(&g.signal.samples(), 100.0, SourceMeta::synthetic("s07")).unwrap()
}

#[test]
fn landmark_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    let series = synthetic_series();
    write_landmark_file(&series, &a).unwrap();
    let back = read_landmark_file(&a).unwrap();
    assert_eq!(back, series);
    write_landmark_file(&back, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn landmark_dropouts_survive() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("drop.jsonl");
    let mut frames = synthetic_series().frames().to_vec();
    frames[3] = LandmarkFrame::dropout(frames[3].t(), Some(0.1)).unwrap();
    let series = LandmarkSeries::new(frames, 100.0, SourceMeta::synthetic("s07")).unwrap();
    write_landmark_file(&series, &path).unwrap();
    let back = read_landmark_file(&path).unwrap();
    assert!(back.frames()[3].is_dropout());
    assert_eq!(fingertip_distance(&back).unwrap().len(), series.len() - 1);
}

#[test]
fn distance_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let g = generate(&SynthConfig {
        noise_sigma: 0.02,
        seed: 3,
        ..SynthConfig::default()
    })
    .unwrap();
    let (sig, _) = process_uniform(&g.signal.time_shifted(0.37), &PipelineConfig::default()).unwrap();
    let meta = SourceMeta::synthetic("s02");
    write_distance_file(&sig, Some(&meta), &a).unwrap();
    let back = read_distance_file(&a).unwrap();
    assert_eq!(back.signal, sig);
    assert_eq!(back.meta.as_ref(), Some(&meta));
    write_distance_file(&back.signal, back.meta.as_ref(), &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn cycle_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cycles.csv");
    let g = generate(&SynthConfig {
        period_jitter_cv: 0.05,
        seed: 8,
        ..SynthConfig::default()
    })
    .unwrap();
    let (sig, _) = process_uniform(&g.signal, &PipelineConfig::default()).unwrap();
    let cycles = detect_cycles(&sig, &DetectConfig::default()).unwrap();
    write_cycle_file(&cycles, &path).unwrap();
    let records = read_cycle_file(&path).unwrap();
    assert_eq!(records.len(), cycles.events().len());
    for (r, e) in records.iter().zip(cycles.events()) {
        assert_eq!((r.t.to_bits(), r.value.to_bits(), r.kind), (e.t.to_bits(), e.value.to_bits(), e.kind));
    }
    assert_eq!(records[0].kind, EventKind::Peak);
}

#[test]
fn annotation_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ann.csv");
    let track = AnnotationTrack::new(
        (0..10)
            .map(|i| Annotation {
                t: i as f64 / 30.0,
                thumb_x: 100.0 + 0.1 * i as f64,
                thumb_y: 200.0,
                index_x: 130.0 + (i as f64).sin() * 20.0,
                index_y: 160.0 - 1.0 / 3.0 * i as f64,
            })
            .collect(),
    )
    .unwrap();
    write_annotations(&track, fs::File::create(&path).unwrap()).unwrap();
    let back = read_annotation_file(&path).unwrap();
    assert_eq!(back, track);
    assert_eq!(annotation_distance(&back).unwrap().len(), 10);
}

#[test]
fn missing_file_names_path() {
    let err = read_landmark_file("/nonexistent/landmarks.jsonl").unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/landmarks.jsonl"));
}

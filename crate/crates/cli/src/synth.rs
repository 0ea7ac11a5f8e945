//! Synthetic dataset directories: noiseless truth, an on-device-like
//! estimate and a degraded estimate per simulated subject.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use tapkin_core::cycles::detect_cycles;
use tapkin_core::features::extract_features_with;
use tapkin_core::landmarks::{write_annotations, write_landmarks, Annotation, AnnotationTrack, Condition, LandmarkSeries, SourceMeta};
use tapkin_core::signal::{self, write_distance};
use tapkin_core::synthlab::{default_subjects, degrade, generate, landmarks_from_samples, mix_seed, oracle_configs, Preset, SynthConfig};
use tapkin_core::Result;

use crate::error::{CliError, CliResult};
use crate::featuredoc::{FeatureDocument, FeatureSource, FeatureTable};
use crate::inputs::Recording;
use crate::output::write_atomic;
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cohort {
    /// Subjects spread over tapping rate, rhythm variability and decrement.
    Default,
    /// Subjects from the domain where every feature is recoverable from a
    /// noiseless signal.
    Oracle,
}

impl std::str::FromStr for Cohort {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "default" => Ok(Cohort::Default),
            "oracle" => Ok(Cohort::Oracle),
            _ => Err(format!("unknown cohort {s:?} (expected default or oracle)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub out: PathBuf,
    pub subjects: usize,
    pub seed: u64,
    pub preset: Preset,
    pub cohort: Cohort,
    pub n_cycles: Option<usize>,
}

struct Variant {
    label: &'static str,
    preset: Preset,
    condition: Condition,
}

struct SubjectFiles {
    id: String,
    config: SynthConfig,
    truth_annotations: Vec<u8>,
    truth_doc: FeatureDocument,
    truth_measured: FeatureDocument,
    estimates: Vec<EstimateFiles>,
}

struct EstimateFiles {
    landmarks: Vec<u8>,
    distance: Vec<u8>,
    features: FeatureDocument,
}

fn variants(preset: Preset) -> Vec<Variant> {
    let mut v = vec![Variant {
        label: Preset::OnDevice.as_str(),
        preset: Preset::OnDevice,
        condition: Condition::OnDevice,
    }];
    if preset != Preset::OnDevice {
        v.push(Variant {
            label: preset.as_str(),
            preset,
            condition: match preset {
                Preset::ZoomLike => Condition::Streaming,
                _ => Condition::Synthetic,
            },
        });
    }
    v
}

fn measured(rec: &Recording, meta: SourceMeta, settings: &Settings) -> Result<(Vec<u8>, FeatureDocument)> {
    let p = rec.process(settings)?;
    let cycles = detect_cycles(&p.signal, &settings.detect)?;
    let features = extract_features_with(&p.signal, &p.derivatives, &cycles, &settings.features)?;
    let mut distance = Vec::new();
    write_distance(&p.signal, Some(&meta), &mut distance).expect("writing to memory");
    Ok((
        distance,
        FeatureDocument {
            features,
            source: cycles.source().into(),
            meta: Some(meta),
        },
    ))
}

fn annotations_of(series: &LandmarkSeries) -> Result<AnnotationTrack> {
    let entries = series
        .frames()
        .iter()
        .filter_map(|f| {
            f.points().map(|p| Annotation {
                t: f.t(),
                thumb_x: p[tapkin_core::landmarks::THUMB_TIP].x,
                thumb_y: p[tapkin_core::landmarks::THUMB_TIP].y,
                index_x: p[tapkin_core::landmarks::INDEX_TIP].x,
                index_y: p[tapkin_core::landmarks::INDEX_TIP].y,
            })
        })
        .collect();
    AnnotationTrack::new(entries)
}

fn subject(i: usize, cfg: &SynthConfig, opts: &SynthOptions, settings: &Settings) -> Result<SubjectFiles> {
    let id = format!("s{:02}", i + 1);
    let synthetic = generate(cfg)?;
    let raw = &synthetic.signal;
    let raw_derivs = signal::derivatives(raw, &settings.pipeline)?;

    let truth_meta = SourceMeta::synthetic(id.clone());
    let truth_track = annotations_of(&landmarks_from_samples(&raw.samples(), raw.fs(), truth_meta.clone())?)?;
    let mut truth_annotations = Vec::new();
    write_annotations(&truth_track, &mut truth_annotations).expect("writing to memory");
    let (_, truth_measured) = measured(&Recording::Annotations(truth_track), truth_meta.clone(), settings)?;

    let mut estimates = Vec::new();
    for (k, v) in variants(opts.preset).iter().enumerate() {
        let deg = v.preset.config(mix_seed(opts.seed, i as u64, 10 + k as u64));
        let samples = degrade(raw, &raw_derivs, &deg)?;
        let meta = SourceMeta {
            condition: v.condition,
            ..truth_meta.clone()
        };
        let series = landmarks_from_samples(&samples, deg.target_fps.unwrap_or(raw.fs()), meta.clone())?;
        let mut landmarks = Vec::new();
        write_landmarks(&series, &mut landmarks).expect("writing to memory");
        let (distance, features) = measured(&Recording::Landmarks(series), meta, settings)?;
        estimates.push(EstimateFiles {
            landmarks,
            distance,
            features,
        });
    }
    Ok(SubjectFiles {
        id,
        config: cfg.clone(),
        truth_annotations,
        truth_doc: FeatureDocument {
            features: synthetic.truth,
            source: FeatureSource::Analytic,
            meta: Some(truth_meta),
        },
        truth_measured,
        estimates,
    })
}

fn subjects_csv(files: &[SubjectFiles]) -> String {
    let mut s = String::from(
        "subject,n_cycles,base_period,period_jitter_cv,base_amp,amp_decrement_per_cycle,speed_decrement_per_cycle,noise_sigma,fs,seed\n",
    );
    for f in files {
        let c = &f.config;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            f.id,
            c.n_cycles,
            c.base_period,
            c.period_jitter_cv,
            c.base_amp,
            c.amp_decrement_per_cycle,
            c.speed_decrement_per_cycle,
            c.noise_sigma,
            c.fs,
            c.seed
        )
        .unwrap();
    }
    s
}

/// Writes the dataset and returns the manifest path. Output depends only on
/// the options and settings.
pub fn build(opts: &SynthOptions, settings: &Settings) -> CliResult<PathBuf> {
    if opts.subjects == 0 {
        return Err(CliError::input("at least one subject is required"));
    }
    let mut configs = match opts.cohort {
        Cohort::Default => default_subjects(opts.subjects, opts.seed),
        Cohort::Oracle => oracle_configs(opts.subjects, opts.seed),
    };
    if let Some(n) = opts.n_cycles {
        for c in &mut configs {
            c.n_cycles = n;
        }
    }
    let files = configs
        .par_iter()
        .enumerate()
        .map(|(i, c)| subject(i, c, opts, settings).map_err(CliError::from))
        .collect::<CliResult<Vec<_>>>()?;

    let out = &opts.out;
    let put = |rel: &str, bytes: &[u8]| write_atomic(&out.join(rel), bytes);
    put("subjects.csv", subjects_csv(&files).as_bytes())?;
    let variants = variants(opts.preset);
    let mut manifest = String::from("truth_path,estimate_path,condition,subject,hand\n");
    for f in &files {
        put(&format!("truth/{}.annotations.csv", f.id), &f.truth_annotations)?;
        put(&format!("truth/{}.features", f.id), f.truth_doc.render().as_bytes())?;
        for (v, e) in variants.iter().zip(&f.estimates) {
            put(&format!("{}/{}.landmarks.jsonl", v.label, f.id), &e.landmarks)?;
            put(&format!("{}/{}.distance.csv", v.label, f.id), &e.distance)?;
            put(&format!("{}/{}.features", v.label, f.id), e.features.render().as_bytes())?;
        }
    }
    for (k, v) in variants.iter().enumerate() {
        for f in &files {
            writeln!(
                manifest,
                "truth/{id}.annotations.csv,{label}/{id}.landmarks.jsonl,{label},{id},right",
                id = f.id,
                label = v.label
            )
            .unwrap();
        }
        let docs: Vec<(String, FeatureDocument)> = files.iter().map(|f| (f.id.clone(), f.estimates[k].features.clone())).collect();
        put(&format!("features_{}.csv", v.label), &FeatureTable::from_documents(&docs).render()?)?;
    }
    let truth_docs: Vec<(String, FeatureDocument)> = files.iter().map(|f| (f.id.clone(), f.truth_measured.clone())).collect();
    put("features_truth.csv", &FeatureTable::from_documents(&truth_docs).render()?)?;
    let analytic: Vec<(String, FeatureDocument)> = files.iter().map(|f| (f.id.clone(), f.truth_doc.clone())).collect();
    put("features_analytic.csv", &FeatureTable::from_documents(&analytic).render()?)?;
    let manifest_path = out.join("manifest.csv");
    write_atomic(&manifest_path, manifest.as_bytes())?;
    Ok(manifest_path)
}


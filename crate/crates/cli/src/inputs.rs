//! Recording files of any supported kind, turned into processed signals.

use std::fs;
use std::path::Path;

use tapkin_core::landmarks::{parse_annotations, parse_landmarks, AnnotationTrack, LandmarkSeries, SourceMeta};
use tapkin_core::signal::{derivatives, parse_distance, pipeline, process_uniform, DerivativeSet, DistanceFile, DistanceSignal, PipelineInput};
use tapkin_core::Result;

use crate::error::{CliError, CliResult};
use crate::settings::Settings;

#[derive(Debug, Clone)]
pub enum Recording {
    Landmarks(LandmarkSeries),
    Annotations(AnnotationTrack),
    Distance(DistanceFile),
}

#[derive(Debug, Clone)]
pub struct Processed {
    pub signal: DistanceSignal,
    pub derivatives: DerivativeSet,
    pub meta: Option<SourceMeta>,
}

/// Landmark files start with a JSON record, annotation files with their
/// CSV header; anything else is read as a distance signal.
pub fn read_recording(path: &Path) -> CliResult<Recording> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = String::from_utf8_lossy(&bytes);
    let head = text.trim_start();
    let rec = if head.starts_with('{') {
        parse_landmarks(bytes.as_slice()).map(Recording::Landmarks)
    } else if head.starts_with("t,thumb_x") {
        parse_annotations(bytes.as_slice()).map(Recording::Annotations)
    } else {
        parse_distance(bytes.as_slice()).map(Recording::Distance)
    };
    rec.map_err(|e| CliError::at(path, e))
}

impl Recording {
    pub fn meta(&self) -> Option<&SourceMeta> {
        match self {
            Recording::Landmarks(s) => Some(s.meta()),
            Recording::Annotations(_) => None,
            Recording::Distance(d) => d.meta.as_ref(),
        }
    }

    /// Landmarks and annotations go through the whole pipeline. A distance
    /// signal that is already smoothed and normalized only gets derivatives;
    /// any other distance signal is smoothed (and normalized) first.
    pub fn process(&self, settings: &Settings) -> Result<Processed> {
        let cfg = &settings.pipeline;
        let (signal, derivatives) = match self {
            Recording::Landmarks(s) => pipeline(PipelineInput::Landmarks(s), cfg)?,
            Recording::Annotations(a) => pipeline(PipelineInput::Annotations(a), cfg)?,
            Recording::Distance(d) => {
                let p = d.signal.provenance();
                if p.smoothing.is_some() && p.normalized {
                    (d.signal.clone(), derivatives(&d.signal, cfg)?)
                } else {
                    process_uniform(&d.signal, cfg)?
                }
            }
        };
        Ok(Processed {
            signal,
            derivatives,
            meta: self.meta().cloned(),
        })
    }
}

pub fn load(path: &Path, settings: &Settings) -> CliResult<Processed> {
    read_recording(path)?.process(settings).map_err(|e| CliError::at(path, e))
}

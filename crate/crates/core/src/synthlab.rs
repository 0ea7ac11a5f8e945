//! Synthetic tapping signals with analytic ground truth, and a streaming
//! degradation simulator.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycles::{detect_cycles, CycleEvent, CycleSet, CycleSource, DetectConfig, EventKind};
use crate::error::{Error, Result};
use crate::features::{self, extract_features_with, FeatureConfig, FeatureVector};
use crate::landmarks::{LandmarkFrame, LandmarkSeries, Point, SourceMeta, INDEX_TIP, NUM_LANDMARKS, THUMB_TIP};
use crate::signal::{self, pipeline, DerivativeSet, DistanceSignal, PipelineConfig, PipelineInput, Sample};
use crate::stats::{icc_2_1, r2_score, spearman, IccResult, IccThresholds, TestResult};

/// Normal draws are clipped to this many standard deviations.
pub const CLIP_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_cycles: usize,
    pub base_period: f64,
    pub period_jitter_cv: f64,
    pub base_amp: f64,
    pub amp_decrement_per_cycle: f64,
    pub speed_decrement_per_cycle: f64,
    pub noise_sigma: f64,
    pub fs: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_cycles: 20,
            base_period: 0.5,
            period_jitter_cv: 0.0,
            base_amp: 1.0,
            amp_decrement_per_cycle: 0.0,
            speed_decrement_per_cycle: 0.0,
            noise_sigma: 0.0,
            fs: 100.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.n_cycles < 4 {
            return bad(format!("n_cycles must be at least 4, got {}", self.n_cycles));
        }
        if !(self.base_period.is_finite() && self.base_period > 0.0) {
            return bad(format!("base_period must be positive, got {}", self.base_period));
        }
        if !(self.fs.is_finite() && self.fs * self.base_period >= 4.0) {
            return bad(format!(
                "fs must give at least 4 samples per cycle, got {} Hz for a {} s period",
                self.fs, self.base_period
            ));
        }
        if !(self.period_jitter_cv >= 0.0 && self.period_jitter_cv * CLIP_SIGMAS < 1.0) {
            return bad(format!(
                "period_jitter_cv must be in [0, {:.4}), got {}",
                1.0 / CLIP_SIGMAS,
                self.period_jitter_cv
            ));
        }
        if !(self.base_amp.is_finite() && self.base_amp > 0.0) {
            return bad(format!("base_amp must be positive, got {}", self.base_amp));
        }
        for (name, v) in [
            ("amp_decrement_per_cycle", self.amp_decrement_per_cycle),
            ("speed_decrement_per_cycle", self.speed_decrement_per_cycle),
        ] {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1), got {v}"));
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be non-negative, got {}", self.noise_sigma));
        }
        Ok(())
    }
}

/// Generated recording with its analytic description.
#[derive(Debug, Clone)]
pub struct Synthetic {
    /// Raw signal in generator units (peak height `base_amp`), noise included.
    pub signal: DistanceSignal,
    /// True extrema, in generator units.
    pub cycles: CycleSet,
    /// Features as the pipeline should measure them, in normalized units.
    pub truth: FeatureVector,
    pub periods: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

/// Per-cycle raised cosines `0.5 A_i (1 - cos 2πφ)`, each starting and ending
/// at a closed valley. Cycle periods are scaled so that amplitude shrinks by
/// `amp_decrement_per_cycle` and peak speed by `speed_decrement_per_cycle`
/// per cycle.
pub fn generate(cfg: &SynthConfig) -> Result<Synthetic> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ratio = (1.0 - cfg.amp_decrement_per_cycle) / (1.0 - cfg.speed_decrement_per_cycle);
    let periods: Vec<f64> = (0..cfg.n_cycles)
        .map(|i| {
            let jitter = cfg.period_jitter_cv * clipped_normal(&mut rng);
            cfg.base_period * (1.0 + jitter) * ratio.powi(i as i32)
        })
        .collect();
    let min_period = periods.iter().copied().fold(f64::INFINITY, f64::min);
    if min_period * cfg.fs < 4.0 {
        return Err(Error::ConfigInvalid(format!(
            "shortest cycle ({min_period:.4} s) has fewer than 4 samples at {} Hz",
            cfg.fs
        )));
    }
    let amplitudes: Vec<f64> = (0..cfg.n_cycles)
        .map(|i| cfg.base_amp * (1.0 - cfg.amp_decrement_per_cycle).powi(i as i32))
        .collect();
    let starts: Vec<f64> = periods
        .iter()
        .scan(0.0, |acc, p| {
            let s = *acc;
            *acc += p;
            Some(s)
        })
        .collect();
    let total = starts[cfg.n_cycles - 1] + periods[cfg.n_cycles - 1];

    let n = (total * cfg.fs + 1e-9).floor() as usize + 1;
    let mut cycle = 0;
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 / cfg.fs;
        while cycle + 1 < cfg.n_cycles && t >= starts[cycle + 1] {
            cycle += 1;
        }
        let phase = ((t - starts[cycle]) / periods[cycle]).min(1.0);
        values.push(0.5 * amplitudes[cycle] * (1.0 - (2.0 * PI * phase).cos()));
    }
    if cfg.noise_sigma > 0.0 {
        for v in &mut values {
            *v += cfg.noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let signal = DistanceSignal::new(0.0, cfg.fs, values)?;

    let mut events = Vec::with_capacity(2 * cfg.n_cycles + 1);
    let mut push = |t: f64, value: f64, kind: EventKind| {
        events.push(CycleEvent {
            t,
            value,
            kind,
            index: signal.nearest_index(t),
        })
    };
    for i in 0..cfg.n_cycles {
        push(starts[i], 0.0, EventKind::Valley);
        push(starts[i] + periods[i] / 2.0, amplitudes[i], EventKind::Peak);
    }
    if total <= signal.end_time() + 0.5 / cfg.fs {
        push(total, 0.0, EventKind::Valley);
    }
    let cycles = CycleSet::new(events, CycleSource::Manual)?;
    let truth = analytic_features(&periods, &amplitudes, &starts);
    Ok(Synthetic {
        signal,
        cycles,
        truth,
        periods,
        amplitudes,
    })
}

/// Features of a noiseless raised-cosine train as measured peak to peak, in
/// units normalized by the largest amplitude.
fn analytic_features(periods: &[f64], amplitudes: &[f64], starts: &[f64]) -> FeatureVector {
    let a_max = amplitudes.iter().copied().fold(0.0, f64::max);
    let amp: Vec<f64> = amplitudes.iter().map(|a| a / a_max).collect();
    let peak_speed: Vec<f64> = amp.iter().zip(periods).map(|(a, t)| PI * a / t).collect();

    let m = periods.len() - 1;
    let measured_periods: Vec<f64> = (0..m).map(|j| 0.5 * (periods[j] + periods[j + 1])).collect();
    let freqs: Vec<f64> = measured_periods.iter().map(|t| 1.0 / t).collect();
    let amps = amp[..m].to_vec();
    let speeds: Vec<f64> = (0..m).map(|j| peak_speed[j].max(peak_speed[j + 1])).collect();
    let peak_times: Vec<f64> = (0..m).map(|j| starts[j] + periods[j] / 2.0).collect();

    // velocity 0.5 A ω sin(ωt), jerk -0.5 A ω³ sin(ωt); sin² averages 1/2 over
    // whole and half cycles, and the window holds half of the first and last
    let (mut v2, mut j2) = (0.0, 0.0);
    for (i, (a, t)) in amp.iter().zip(periods).enumerate() {
        let w = if i == 0 || i == periods.len() - 1 { 0.5 } else { 1.0 };
        let omega = 2.0 * PI / t;
        let base = w * t * 0.5 * (0.5 * a * omega).powi(2);
        v2 += base;
        j2 += base * omega.powi(4);
    }
    let mean_freq = features::mean(&freqs);
    let omega_bar = 2.0 * PI * mean_freq;
    let mean_amp = features::mean(&amps);
    let mean_speed = features::mean(&speeds);
    let (lo, hi) = measured_periods
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));

    FeatureVector {
        mean_freq,
        cv_freq: features::cv(&freqs),
        mean_amp,
        cv_amp: features::cv(&amps),
        mean_speed,
        cv_speed: features::cv(&speeds),
        period_range: hi - lo,
        roughness: (j2 / v2).sqrt() / (omega_bar * omega_bar),
        decrement_amp: features::ols_slope(&peak_times, &amps) / mean_amp,
        decrement_speed: features::ols_slope(&peak_times, &speeds) / mean_speed,
        max_speed: peak_speed.iter().copied().fold(0.0, f64::max),
    }
}

fn clipped_normal(rng: &mut ChaCha8Rng) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z.clamp(-CLIP_SIGMAS, CLIP_SIGMAS)
}

/// Pixel geometry used to render distances as landmark frames.
const THUMB_ANCHOR: Point = Point::new(320.0, 240.0);
const CLOSED_GAP_PX: f64 = 12.0;
const OPEN_SPAN_PX: f64 = 160.0;

/// Renders distance samples as 21-point frames: a static hand with the
/// index tip `12 + 160 d` pixels from the thumb tip.
pub fn landmarks_from_samples(samples: &[Sample], nominal_fps: f64, meta: SourceMeta) -> Result<LandmarkSeries> {
    let (dir_x, dir_y) = ((-PI / 3.0).cos(), (-PI / 3.0).sin());
    let template: Vec<Point> = (0..NUM_LANDMARKS)
        .map(|i| {
            let ring = i as f64;
            Point::new(300.0 + 9.0 * ring, 330.0 - 6.0 * ring)
        })
        .collect();
    let frames = samples
        .iter()
        .map(|s| {
            let mut points = template.clone();
            let gap = CLOSED_GAP_PX + OPEN_SPAN_PX * s.value;
            points[THUMB_TIP] = THUMB_ANCHOR;
            points[INDEX_TIP] = Point::new(THUMB_ANCHOR.x + gap * dir_x, THUMB_ANCHOR.y + gap * dir_y);
            LandmarkFrame::new(s.t, points, Some(1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    LandmarkSeries::new(frames, nominal_fps, meta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationConfig {
    /// `None` keeps the source rate.
    pub target_fps: Option<f64>,
    pub dup_prob: f64,
    pub timestamp_jitter_sigma: f64,
    pub blur_noise_gain: f64,
    pub baseline_noise_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    None,
    OnDevice,
    ZoomLike,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::None, Preset::OnDevice, Preset::ZoomLike];

    pub fn as_str(&self) -> &'static str {
        match self {
            Preset::None => "none",
            Preset::OnDevice => "on-device",
            Preset::ZoomLike => "zoom-like",
        }
    }

    pub fn config(&self, seed: u64) -> DegradationConfig {
        match self {
            Preset::None => DegradationConfig::identity(seed),
            Preset::OnDevice => DegradationConfig {
                target_fps: None,
                dup_prob: 0.0,
                timestamp_jitter_sigma: 0.0,
                blur_noise_gain: 0.001,
                baseline_noise_sigma: 0.003,
                seed,
            },
            Preset::ZoomLike => DegradationConfig {
                target_fps: Some(25.0),
                dup_prob: 0.15,
                timestamp_jitter_sigma: 0.005,
                blur_noise_gain: 0.01,
                baseline_noise_sigma: 0.01,
                seed,
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| {
            let names: Vec<&str> = Preset::ALL.iter().map(|p| p.as_str()).collect();
            Error::ConfigInvalid(format!("unknown preset '{s}'; valid presets: {}", names.join(", ")))
        })
    }
}

impl DegradationConfig {
    pub fn identity(seed: u64) -> Self {
        DegradationConfig {
            target_fps: None,
            dup_prob: 0.0,
            timestamp_jitter_sigma: 0.0,
            blur_noise_gain: 0.0,
            baseline_noise_sigma: 0.0,
            seed,
        }
    }

    pub fn zoom_like(seed: u64) -> Self {
        Preset::ZoomLike.config(seed)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(fps) = self.target_fps {
            if !(fps.is_finite() && fps > 0.0) {
                return Err(Error::InvalidRate(fps));
            }
        }
        if !(0.0..1.0).contains(&self.dup_prob) {
            return Err(Error::ConfigInvalid(format!("dup_prob must be in [0, 1), got {}", self.dup_prob)));
        }
        for (name, v) in [
            ("timestamp_jitter_sigma", self.timestamp_jitter_sigma),
            ("blur_noise_gain", self.blur_noise_gain),
            ("baseline_noise_sigma", self.baseline_noise_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::ConfigInvalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Linear interpolation on the uniform grid, exact at grid points.
fn grid_value(signal: &DistanceSignal, values: &[f64], t: f64) -> f64 {
    let pos = (t - signal.t0()) * signal.fs();
    let nearest = pos.round();
    if (pos - nearest).abs() < 1e-9 {
        return values[(nearest as usize).min(values.len() - 1)];
    }
    let i = (pos.floor().max(0.0) as usize).min(values.len() - 2);
    let frac = pos - i as f64;
    values[i] + frac * (values[i + 1] - values[i])
}

/// Simulates a streamed recording of `signal`: decimation, repeated frames,
/// timestamp jitter and speed-dependent blur noise.
///
/// A repeated frame copies the previous output value exactly. Jittered
/// timestamps are kept non-decreasing and non-negative.
pub fn degrade(signal: &DistanceSignal, derivatives: &DerivativeSet, cfg: &DegradationConfig) -> Result<Vec<Sample>> {
    cfg.validate()?;
    if derivatives.len() != signal.len() {
        return Err(Error::LengthMismatch {
            left: signal.len(),
            right: derivatives.len(),
        });
    }
    if signal.len() < 2 {
        return Err(Error::TooFewSamples {
            found: signal.len(),
            required: 2,
        });
    }
    let fps = cfg.target_fps.unwrap_or(signal.fs());
    if fps > signal.fs() * (1.0 + 1e-12) {
        return Err(Error::UpsampleRequested {
            target: fps,
            source_fs: signal.fs(),
        });
    }
    let n = (signal.duration() * fps + 1e-9).floor() as usize + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out: Vec<Sample> = Vec::with_capacity(n);
    for k in 0..n {
        let u: f64 = rng.random();
        let jitter = clipped_normal(&mut rng);
        let noise: f64 = rng.sample(StandardNormal);

        let grid_t = signal.t0() + k as f64 / fps;
        let mut t = grid_t + cfg.timestamp_jitter_sigma * jitter;
        if let Some(prev) = out.last() {
            t = t.max(prev.t);
        }
        t = t.max(0.0);

        let value = match out.last() {
            Some(prev) if u < cfg.dup_prob => prev.value,
            _ => {
                let v = grid_value(signal, signal.values(), grid_t);
                let speed = grid_value(signal, &derivatives.velocity, grid_t).abs();
                v + (cfg.baseline_noise_sigma + cfg.blur_noise_gain * speed) * noise
            }
        };
        out.push(Sample { t, value });
    }
    Ok(out)
}

/// SplitMix64 finalizer, used to derive independent per-run seeds.
pub fn mix_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub pipeline: PipelineConfig,
    pub detect: DetectConfig,
    pub features: FeatureConfig,
    pub thresholds: IccThresholds,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            pipeline: PipelineConfig {
                dedupe: true,
                ..PipelineConfig::default()
            },
            detect: DetectConfig::default(),
            features: FeatureConfig::default(),
            thresholds: IccThresholds::default(),
        }
    }
}

/// One synthetic recording processed cleanly and through the degradation.
#[derive(Debug, Clone)]
pub struct RecordingPair {
    pub synthetic: Synthetic,
    pub degraded_samples: Vec<Sample>,
    pub clean: (DistanceSignal, DerivativeSet),
    pub degraded: (DistanceSignal, DerivativeSet),
}

impl RecordingPair {
    /// R² of the degraded estimate against the clean signal on the clean grid,
    /// over the span both cover.
    pub fn r2(&self) -> Result<f64> {
        r2_on_clean_grid(&self.clean.0, &self.degraded.0)
    }
}

pub fn r2_on_clean_grid(truth: &DistanceSignal, estimate: &DistanceSignal) -> Result<f64> {
    let interp = estimate.interpolant()?;
    let (lo, hi) = (estimate.t0() - 1e-9, estimate.end_time() + 1e-9);
    let (mut ys, mut es) = (Vec::new(), Vec::new());
    for (i, &y) in truth.values().iter().enumerate() {
        let t = truth.time_at(i);
        if t >= lo && t <= hi {
            ys.push(y);
            es.push(interp.eval(t));
        }
    }
    r2_score(&ys, &es)
}

/// Both raters see the generated samples through the same pipeline; the
/// second sees them after degradation, resampled back to the generator rate.
pub fn simulate_pair(synth: &SynthConfig, degradation: &DegradationConfig, settings: &ExperimentSettings) -> Result<RecordingPair> {
    let synthetic = generate(synth)?;
    let raw = &synthetic.signal;
    let raw_derivs = signal::derivatives(raw, &settings.pipeline)?;
    let degraded_samples = degrade(raw, &raw_derivs, degradation)?;
    let cfg = PipelineConfig {
        resample_fps: Some(raw.fs()),
        ..settings.pipeline.clone()
    };
    let clean = pipeline(PipelineInput::Samples(&raw.samples()), &cfg)?;
    let degraded = pipeline(PipelineInput::Samples(&degraded_samples), &cfg)?;
    Ok(RecordingPair {
        synthetic,
        degraded_samples,
        clean,
        degraded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedAccuracyRow {
    pub freq: f64,
    pub seed_index: usize,
    pub max_speed: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedAccuracy {
    pub rows: Vec<SpeedAccuracyRow>,
    pub spearman: TestResult,
}

/// Default sweep: ten tapping rates from 1 to 4 Hz.
pub fn default_freq_grid() -> Vec<f64> {
    (0..10).map(|i| 1.0 + i as f64 / 3.0).collect()
}

/// For every (frequency, seed): generate, degrade, re-process and score R²
/// against the clean pipeline output. Rows are ordered by frequency, then seed.
pub fn speed_accuracy_rows(
    freq_grid: &[f64],
    synth: &SynthConfig,
    degradation: &DegradationConfig,
    n_seeds: usize,
    settings: &ExperimentSettings,
) -> Result<Vec<SpeedAccuracyRow>> {
    let jobs: Vec<(usize, f64, usize)> = freq_grid
        .iter()
        .enumerate()
        .flat_map(|(fi, &f)| (0..n_seeds).map(move |si| (fi, f, si)))
        .collect();
    jobs.par_iter()
        .map(|&(fi, freq, si)| {
            if !(freq.is_finite() && freq > 0.0) {
                return Err(Error::ConfigInvalid(format!("frequency must be positive, got {freq}")));
            }
            let cfg = SynthConfig {
                base_period: 1.0 / freq,
                seed: mix_seed(synth.seed, fi as u64, si as u64),
                ..synth.clone()
            };
            let deg = DegradationConfig {
                seed: mix_seed(degradation.seed, fi as u64, si as u64),
                ..degradation.clone()
            };
            let pair = simulate_pair(&cfg, &deg, settings)?;
            Ok(SpeedAccuracyRow {
                freq,
                seed_index: si,
                max_speed: pair.clean.1.max_abs_velocity(),
                r2: pair.r2()?,
            })
        })
        .collect()
}

/// [`speed_accuracy_rows`] plus the Spearman correlation of clean maximum
/// speed with R². A constant column (one frequency, or a lossless channel)
/// surfaces as `ConstantInput`.
pub fn experiment_speed_accuracy(
    freq_grid: &[f64],
    synth: &SynthConfig,
    degradation: &DegradationConfig,
    n_seeds: usize,
    settings: &ExperimentSettings,
) -> Result<SpeedAccuracy> {
    let rows = speed_accuracy_rows(freq_grid, synth, degradation, n_seeds, settings)?;
    let speeds: Vec<f64> = rows.iter().map(|r| r.max_speed).collect();
    let r2s: Vec<f64> = rows.iter().map(|r| r.r2).collect();
    let spearman = spearman(&speeds, &r2s)?;
    Ok(SpeedAccuracy { rows, spearman })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureReliability {
    pub feature: &'static str,
    pub icc: IccResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityExperiment {
    pub clean: Vec<FeatureVector>,
    pub degraded: Vec<FeatureVector>,
    pub per_feature: Vec<FeatureReliability>,
}

impl ReliabilityExperiment {
    pub fn icc(&self, feature: &str) -> Option<&IccResult> {
        self.per_feature.iter().find(|r| r.feature == feature).map(|r| &r.icc)
    }
}

/// Six or more distinct simulated subjects spanning tapping rate, rhythm
/// variability and decrement.
pub fn default_subjects(n: usize, seed: u64) -> Vec<SynthConfig> {
    (0..n)
        .map(|i| {
            let x = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
            let y = ((i * 7 + 3) % n.max(1)) as f64 / n.max(1) as f64;
            SynthConfig {
                n_cycles: 20,
                base_period: 0.3 + 0.35 * x,
                period_jitter_cv: 0.02 + 0.18 * y,
                base_amp: 1.0,
                amp_decrement_per_cycle: 0.005 + 0.02 * (1.0 - y),
                speed_decrement_per_cycle: 0.005 + 0.015 * x,
                noise_sigma: 0.0,
                fs: 100.0,
                seed: mix_seed(seed, i as u64, 0),
            }
        })
        .collect()
}

pub fn features_of(signal: &DistanceSignal, derivatives: &DerivativeSet, settings: &ExperimentSettings) -> Result<FeatureVector> {
    let cycles = detect_cycles(signal, &settings.detect)?;
    extract_features_with(signal, derivatives, &cycles, &settings.features)
}

/// Per-feature ICC(2,1) with the clean-signal features as the first rater
/// and the degraded-signal features as the second.
pub fn experiment_reliability(
    subjects: &[SynthConfig],
    degradation: &DegradationConfig,
    settings: &ExperimentSettings,
) -> Result<ReliabilityExperiment> {
    let pairs = subjects
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let deg = DegradationConfig {
                seed: mix_seed(degradation.seed, i as u64, 1),
                ..degradation.clone()
            };
            let pair = simulate_pair(s, &deg, settings)?;
            let clean = features_of(&pair.clean.0, &pair.clean.1, settings)?;
            let degraded = features_of(&pair.degraded.0, &pair.degraded.1, settings)?;
            Ok((clean, degraded))
        })
        .collect::<Result<Vec<_>>>()?;
    let (clean, degraded): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let per_feature = feature_iccs(&clean, &degraded, &settings.thresholds)?;
    Ok(ReliabilityExperiment {
        clean,
        degraded,
        per_feature,
    })
}

/// ICC(2,1) per feature for two raters measuring the same targets in order.
pub fn feature_iccs(first: &[FeatureVector], second: &[FeatureVector], thresholds: &IccThresholds) -> Result<Vec<FeatureReliability>> {
    if first.len() != second.len() {
        return Err(Error::MissingCells);
    }
    FeatureVector::NAMES
        .iter()
        .enumerate()
        .map(|(f, &name)| {
            let matrix: Vec<Vec<f64>> = first
                .iter()
                .zip(second)
                .map(|(a, b)| vec![a.values()[f], b.values()[f]])
                .collect();
            Ok(FeatureReliability {
                feature: name,
                icc: icc_2_1(&matrix, thresholds)?,
            })
        })
        .collect()
}

/// Relative tolerance and magnitude floor for recovering each ground-truth
/// feature from a noiseless generated signal. Roughness has no entry: its
/// analytic value assumes the unsmoothed waveform.
pub fn truth_tolerance(feature: &str) -> Option<Tolerance> {
    let t = |relative, floor| Some(Tolerance { relative, floor });
    match feature {
        "mean_freq" | "mean_amp" => t(0.02, 0.0),
        "cv_freq" => t(0.02, 0.05),
        "period_range" => t(0.02, 0.05),
        "mean_speed" | "max_speed" => t(0.05, 0.0),
        "decrement_amp" | "decrement_speed" => t(0.05, 0.05),
        "cv_amp" | "cv_speed" => t(0.0, 0.005),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub relative: f64,
    pub floor: f64,
}

impl Tolerance {
    /// Allowed absolute error around `truth`. With zero relative part the
    /// floor is itself the absolute bound.
    pub fn allowed(&self, truth: f64) -> f64 {
        if self.relative == 0.0 {
            self.floor
        } else {
            self.relative * truth.abs().max(self.floor)
        }
    }
}

/// Error over allowed error for every toleranced feature; all entries ≤ 1
/// means the measurement recovers the truth.
pub fn truth_deviations(truth: &FeatureVector, measured: &FeatureVector) -> Vec<(&'static str, f64)> {
    truth
        .iter()
        .zip(measured.iter())
        .filter_map(|((name, t), (_, m))| truth_tolerance(name).map(|tol| (name, (m - t).abs() / tol.allowed(t))))
        .collect()
}

/// Seeded configurations from the domain where the smoothing filter leaves
/// every toleranced feature recoverable: 0.4 to 0.7 s periods, jitter under
/// 5%, decrements under 1% per cycle.
pub fn oracle_configs(n: usize, seed: u64) -> Vec<SynthConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| SynthConfig {
            n_cycles: rng.random_range(10..=30),
            base_period: rng.random_range(0.4..0.7),
            period_jitter_cv: rng.random_range(0.0..0.05),
            base_amp: rng.random_range(0.5..1.0),
            amp_decrement_per_cycle: rng.random_range(0.0..0.01),
            speed_decrement_per_cycle: rng.random_range(0.0..0.01),
            noise_sigma: 0.0,
            fs: [60.0, 100.0, 120.0][rng.random_range(0..3)],
            seed: mix_seed(seed, i as u64, 2),
        })
        .collect()
}

/// Generate, run the default pipeline with automatic detection, and score
/// against the analytic truth.
pub fn recover_truth(cfg: &SynthConfig, settings: &ExperimentSettings) -> Result<(FeatureVector, FeatureVector)> {
    let synthetic = generate(cfg)?;
    let (sig, derivs) = signal::process_uniform(&synthetic.signal, &settings.pipeline)?;
    let measured = features_of(&sig, &derivs, settings)?;
    Ok((synthetic.truth, measured))
}

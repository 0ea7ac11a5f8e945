//! Uniform distance signals: resampling, smoothing, normalization and derivatives.

mod interp;
mod io;
mod savgol;

pub use interp::MonotoneCubic;
pub use io::{parse_distance, read_distance_file, write_distance, write_distance_file, DistanceFile};
pub use savgol::SavitzkyGolay;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmarks::{annotation_distance, fingertip_distance, AnnotationTrack, LandmarkSeries};

/// A raw (possibly irregular) distance sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Smoothing {
    pub window: usize,
    pub poly_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Provenance {
    pub resampled: bool,
    pub smoothing: Option<Smoothing>,
    pub normalized: bool,
}

/// Uniformly sampled thumb–index distance; sample `i` sits at `t0 + i / fs`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSignal {
    t0: f64,
    fs: f64,
    values: Vec<f64>,
    provenance: Provenance,
}

impl DistanceSignal {
    pub fn new(t0: f64, fs: f64, values: Vec<f64>) -> Result<Self> {
        Self::with_provenance(t0, fs, values, Provenance::default())
    }

    pub fn with_provenance(t0: f64, fs: f64, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidRate(fs));
        }
        if !t0.is_finite() {
            return Err(Error::ConfigInvalid(format!("signal start time must be finite, got {t0}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invariant(format!("signal value {i} is not finite")));
        }
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        Ok(Self {
            t0,
            fs,
            values,
            provenance,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.fs
    }

    pub fn end_time(&self) -> f64 {
        self.time_at(self.len() - 1)
    }

    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 / self.fs
    }

    /// Index of the grid sample nearest to `t`, clamped to the signal.
    pub fn nearest_index(&self, t: f64) -> usize {
        let pos = ((t - self.t0) * self.fs).round();
        if pos <= 0.0 {
            0
        } else {
            (pos as usize).min(self.len() - 1)
        }
    }

    pub fn samples(&self) -> Vec<Sample> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &value)| Sample {
                t: self.time_at(i),
                value,
            })
            .collect()
    }

    pub fn time_shifted(&self, dt: f64) -> Self {
        Self {
            t0: self.t0 + dt,
            ..self.clone()
        }
    }

    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            values,
            ..self.clone()
        }
    }

    /// Monotone-cubic interpolant through the grid samples.
    pub fn interpolant(&self) -> Result<MonotoneCubic> {
        let xs = (0..self.len()).map(|i| self.time_at(i)).collect();
        MonotoneCubic::new(xs, self.values.clone())
    }
}

/// Velocity, acceleration and jerk of a distance signal (units 1/s, 1/s², 1/s³
/// of normalized distance when derived from a normalized signal).
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeSet {
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
    pub jerk: Vec<f64>,
}

impl DerivativeSet {
    pub fn len(&self) -> usize {
        self.velocity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocity.is_empty()
    }

    pub fn max_abs_velocity(&self) -> f64 {
        self.velocity.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Resamples irregular samples onto `t0 + k / target_fs` over the input span.
///
/// Samples sharing a timestamp keep only the first. With `dedupe`, runs of
/// consecutive samples with identical distance (repeated video frames) are
/// collapsed to their first occurrence before interpolating.
pub fn resample_uniform(samples: &[Sample], target_fs: f64, dedupe: bool) -> Result<Vec<Sample>> {
    if !(target_fs.is_finite() && target_fs > 0.0) {
        return Err(Error::InvalidRate(target_fs));
    }
    if samples.len() < 4 {
        return Err(Error::TooFewSamples {
            found: samples.len(),
            required: 4,
        });
    }
    for (i, w) in samples.windows(2).enumerate() {
        if w[1].t < w[0].t {
            return Err(Error::NonMonotoneTimestamps {
                line: i + 2,
                t: w[1].t,
                prev: w[0].t,
            });
        }
    }
    let start = samples[0].t;
    let end = samples[samples.len() - 1].t;
    if !(end > start) {
        return Err(Error::ZeroDuration);
    }

    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        if i > 0 && dedupe && s.value == samples[i - 1].value {
            continue;
        }
        if xs.last().is_some_and(|&last| s.t <= last) {
            continue;
        }
        xs.push(s.t);
        ys.push(s.value);
    }
    let interp = MonotoneCubic::new(xs, ys)?;

    let n = ((end - start) * target_fs + 1e-9).floor() as usize + 1;
    Ok((0..n)
        .map(|k| {
            let t = start + k as f64 / target_fs;
            Sample {
                t,
                value: interp.eval(t),
            }
        })
        .collect())
}

/// Default smoothing window: the odd sample count nearest to 0.15 s, at least 5.
pub fn default_window(fs: f64) -> usize {
    let target = 0.15 * fs;
    let odd = 2.0 * ((target - 1.0) / 2.0).round() + 1.0;
    (odd.max(5.0)) as usize
}

pub fn savgol_smooth(signal: &DistanceSignal, window: usize, poly_order: usize) -> Result<DistanceSignal> {
    let sg = SavitzkyGolay::new(window, poly_order, signal.len())?;
    let values = sg.apply(&signal.values, 0, signal.fs)?;
    let provenance = Provenance {
        smoothing: Some(Smoothing { window, poly_order }),
        ..signal.provenance
    };
    DistanceSignal::with_provenance(signal.t0, signal.fs, values, provenance)
}

pub fn savgol_derivative(signal: &DistanceSignal, window: usize, poly_order: usize, order: usize) -> Result<Vec<f64>> {
    if !(1..=3).contains(&order) {
        return Err(Error::ConfigInvalid(format!("derivative order must be 1, 2 or 3, got {order}")));
    }
    let sg = SavitzkyGolay::new(window, poly_order, signal.len())?;
    sg.apply(&signal.values, order, signal.fs)
}

pub fn normalize_unit(signal: &DistanceSignal) -> Result<DistanceSignal> {
    let (lo, hi) = signal
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Err(Error::ConstantSignal);
    }
    let range = hi - lo;
    let values = signal.values.iter().map(|v| (v - lo) / range).collect();
    let provenance = Provenance {
        normalized: true,
        ..signal.provenance
    };
    DistanceSignal::with_provenance(signal.t0, signal.fs, values, provenance)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Smoothing window in samples; `None` picks [`default_window`] for the rate.
    pub smooth_window: Option<usize>,
    pub poly_order: usize,
    /// Polynomial order of the local fit used for velocity, acceleration and jerk.
    pub derivative_poly_order: usize,
    /// Output rate; `None` uses the landmark nominal rate, or the median frame
    /// interval for bare samples and annotations.
    pub resample_fps: Option<f64>,
    pub dedupe: bool,
    pub normalize: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            smooth_window: None,
            poly_order: 3,
            derivative_poly_order: 5,
            resample_fps: None,
            dedupe: false,
            normalize: true,
        }
    }
}

impl PipelineConfig {
    pub fn window_for(&self, fs: f64) -> usize {
        self.smooth_window.unwrap_or_else(|| default_window(fs))
    }

    /// Derivative window: the smoothing window, widened if the derivative
    /// polynomial needs more support.
    pub fn derivative_window_for(&self, fs: f64) -> usize {
        let min = self.derivative_poly_order + 2;
        let min_odd = if min.is_multiple_of(2) { min + 1 } else { min };
        self.window_for(fs).max(min_odd)
    }
}

pub enum PipelineInput<'a> {
    Landmarks(&'a LandmarkSeries),
    Annotations(&'a AnnotationTrack),
    Samples(&'a [Sample]),
}

/// distance → (dedupe) → resample → smooth → normalize → derivatives.
pub fn pipeline(input: PipelineInput<'_>, cfg: &PipelineConfig) -> Result<(DistanceSignal, DerivativeSet)> {
    let (samples, nominal) = match input {
        PipelineInput::Landmarks(series) => (fingertip_distance(series)?, Some(series.nominal_fps())),
        PipelineInput::Annotations(track) => (annotation_distance(track)?, None),
        PipelineInput::Samples(s) => {
            if s.is_empty() {
                return Err(Error::EmptySeries);
            }
            (s.to_vec(), None)
        }
    };
    let fs = match cfg.resample_fps.or(nominal) {
        Some(fs) => fs,
        None => estimate_rate(&samples)?,
    };
    let uniform = resample_uniform(&samples, fs, cfg.dedupe)?;
    let signal = DistanceSignal::with_provenance(
        uniform[0].t,
        fs,
        uniform.into_iter().map(|s| s.value).collect(),
        Provenance {
            resampled: true,
            ..Provenance::default()
        },
    )?;
    process_uniform(&signal, cfg)
}

/// smooth → normalize → derivatives, for a signal that is already uniform.
pub fn process_uniform(signal: &DistanceSignal, cfg: &PipelineConfig) -> Result<(DistanceSignal, DerivativeSet)> {
    let smoothed = savgol_smooth(signal, cfg.window_for(signal.fs), cfg.poly_order)?;
    let out = if cfg.normalize {
        normalize_unit(&smoothed)?
    } else {
        smoothed
    };
    let derivatives = derivatives(&out, cfg)?;
    Ok((out, derivatives))
}

pub fn derivatives(signal: &DistanceSignal, cfg: &PipelineConfig) -> Result<DerivativeSet> {
    let window = cfg.derivative_window_for(signal.fs);
    let sg = SavitzkyGolay::new(window, cfg.derivative_poly_order, signal.len())?;
    Ok(DerivativeSet {
        velocity: sg.apply(&signal.values, 1, signal.fs)?,
        acceleration: sg.apply(&signal.values, 2, signal.fs)?,
        jerk: sg.apply(&signal.values, 3, signal.fs)?,
    })
}

/// Sampling rate implied by the median positive frame interval.
pub fn estimate_rate(samples: &[Sample]) -> Result<f64> {
    let mut dts: Vec<f64> = samples
        .windows(2)
        .map(|w| w[1].t - w[0].t)
        .filter(|dt| *dt > 0.0)
        .collect();
    if dts.is_empty() {
        return Err(Error::ZeroDuration);
    }
    dts.sort_by(f64::total_cmp);
    let median = dts[dts.len() / 2];
    Ok(1.0 / median)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn uniform(fs: f64, n: usize, f: impl Fn(f64) -> f64) -> DistanceSignal {
        DistanceSignal::new(0.0, fs, (0..n).map(|i| f(i as f64 / fs)).collect()).unwrap()
    }

    #[test]
    fn default_window_values() {
        assert_eq!(default_window(100.0), 15);
        assert_eq!(default_window(60.0), 9);
        assert_eq!(default_window(25.0), 5);
        assert_eq!(default_window(10.0), 5);
    }

    #[test]
    fn resample_identity_on_uniform_input() {
        let samples: Vec<Sample> = (0..200)
            .map(|i| Sample {
                t: i as f64 / 100.0,
                value: (i as f64 * 0.1).sin(),
            })
            .collect();
        let out = resample_uniform(&samples, 100.0, false).unwrap();
        assert_eq!(out.len(), samples.len());
        for (a, b) in out.iter().zip(&samples) {
            assert!((a.t - b.t).abs() < 1e-12);
            assert_eq!(a.value, b.value);
        }
    }

    #[test]
    fn resample_reproduces_a_line_at_irregular_times() {
        let ts = [0.0, 0.013, 0.05, 0.07, 0.11, 0.2, 0.21, 0.33, 0.4];
        let samples: Vec<Sample> = ts.iter().map(|&t| Sample { t, value: 2.0 - 5.0 * t }).collect();
        for fs in [7.0, 30.0, 100.0, 333.0] {
            for s in resample_uniform(&samples, fs, false).unwrap() {
                assert!((s.value - (2.0 - 5.0 * s.t)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn resample_sine_100_to_25_hz() {
        let samples: Vec<Sample> = (0..500)
            .map(|i| {
                let t = i as f64 / 100.0;
                Sample { t, value: (2.0 * PI * 2.0 * t).sin() }
            })
            .collect();
        let out = resample_uniform(&samples, 25.0, false).unwrap();
        let err = out
            .iter()
            .map(|s| (s.value - (2.0 * PI * 2.0 * s.t).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.01, "max error {err}");
    }

    #[test]
    fn resample_dedupe_collapses_repeats() {
        // the repeated 1.0 at t=0.2 would flatten the ramp without dedupe
        let samples: Vec<Sample> = [(0.0, 0.0), (0.1, 1.0), (0.2, 1.0), (0.3, 3.0), (0.4, 4.0)]
            .iter()
            .map(|&(t, value)| Sample { t, value })
            .collect();
        let kept = resample_uniform(&samples, 10.0, false).unwrap();
        let deduped = resample_uniform(&samples, 10.0, true).unwrap();
        assert_eq!(kept[2].value, 1.0);
        assert!(deduped[2].value > 1.0 && deduped[2].value < 3.0);
    }

    #[test]
    fn resample_errors() {
        let s = |t: f64| Sample { t, value: 1.0 };
        assert!(matches!(
            resample_uniform(&[s(0.0), s(0.1), s(0.2)], 10.0, false),
            Err(Error::TooFewSamples { found: 3, .. })
        ));
        assert!(matches!(
            resample_uniform(&[s(0.0); 5], 10.0, false),
            Err(Error::ZeroDuration)
        ));
    }

    #[test]
    fn duplicate_timestamps_keep_first() {
        let samples: Vec<Sample> = [(0.0, 0.0), (0.04, 1.0), (0.04, 9.0), (0.08, 2.0), (0.12, 3.0)]
            .iter()
            .map(|&(t, value)| Sample { t, value })
            .collect();
        let out = resample_uniform(&samples, 25.0, false).unwrap();
        assert_eq!(out[1].value, 1.0);
    }

    #[test]
    fn smoothing_preserves_constants_and_cubics() {
        let c = uniform(100.0, 50, |_| 3.25);
        let s = savgol_smooth(&c, 9, 3).unwrap();
        assert!(s.values().iter().all(|v| (v - 3.25).abs() < 1e-12));

        let cubic = |t: f64| 0.3 - 2.0 * t + 4.0 * t * t - 7.0 * t * t * t;
        let x = uniform(50.0, 60, cubic);
        let s = savgol_smooth(&x, 11, 3).unwrap();
        for (a, b) in s.values().iter().zip(x.values()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(s.provenance().smoothing, Some(Smoothing { window: 11, poly_order: 3 }));
    }

    #[test]
    fn smoothing_reduces_noise() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let clean: Vec<f64> = (0..400).map(|i| (2.0 * PI * i as f64 / 100.0).sin()).collect();
        let noisy: Vec<f64> = clean.iter().map(|c| c + noise.sample(&mut rng)).collect();
        let rms = |a: &[f64]| (a.iter().map(|e| e * e).sum::<f64>() / a.len() as f64).sqrt();
        let noise_rms = rms(&noisy.iter().zip(&clean).map(|(n, c)| n - c).collect::<Vec<_>>());
        let smoothed = savgol_smooth(&DistanceSignal::new(0.0, 100.0, noisy).unwrap(), 9, 3).unwrap();
        let err = rms(&smoothed.values().iter().zip(&clean).map(|(s, c)| s - c).collect::<Vec<_>>());
        assert!(err < noise_rms, "{err} vs {noise_rms}");
    }

    #[test]
    fn derivative_of_ramp_and_constant() {
        let ramp = uniform(100.0, 80, |t| 1.5 + 0.75 * t);
        let d = savgol_derivative(&ramp, 11, 3, 1).unwrap();
        assert!(d.iter().all(|v| (v - 0.75).abs() < 1e-9));
        let c = uniform(100.0, 80, |_| 2.0);
        let a = savgol_derivative(&c, 11, 3, 2).unwrap();
        assert!(a.iter().all(|v| v.abs() < 1e-9));
        assert!(matches!(
            savgol_derivative(&c, 11, 2, 3),
            Err(Error::OrderTooHigh { .. })
        ));
    }

    #[test]
    fn derivative_of_sine_matches_cosine() {
        let x = uniform(100.0, 300, |t| (2.0 * PI * t).sin());
        let d = savgol_derivative(&x, 15, 3, 1).unwrap();
        let interior = 7..300 - 7;
        let (mut num, mut den) = (0.0, 0.0);
        for i in interior {
            let t = i as f64 / 100.0;
            let truth = 2.0 * PI * (2.0 * PI * t).cos();
            num += (d[i] - truth).powi(2);
            den += truth * truth;
        }
        assert!((num / den).sqrt() < 0.01);
    }

    #[test]
    fn normalize_examples() {
        let x = DistanceSignal::new(0.0, 1.0, vec![2.0, 4.0, 6.0]).unwrap();
        let n = normalize_unit(&x).unwrap();
        assert_eq!(n.values(), &[0.0, 0.5, 1.0]);
        assert!(n.provenance().normalized);
        assert_eq!(normalize_unit(&n).unwrap().values(), n.values());
        let flat = DistanceSignal::new(0.0, 1.0, vec![5.0; 3]).unwrap();
        assert!(matches!(normalize_unit(&flat), Err(Error::ConstantSignal)));
    }

    #[test]
    fn pipeline_rejects_empty_input() {
        assert!(matches!(
            pipeline(PipelineInput::Samples(&[]), &PipelineConfig::default()),
            Err(Error::EmptySeries)
        ));
    }
}

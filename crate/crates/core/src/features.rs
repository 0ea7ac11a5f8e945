//! Bradykinesia features of the finger-tapping distance signal.
//!
//! All per-cycle quantities are measured between consecutive peaks. The
//! definitions:
//!
//! | feature           | definition                                                       |
//! |-------------------|------------------------------------------------------------------|
//! | `mean_freq`       | mean of per-cycle frequencies `f_i = 1 / T_i`                     |
//! | `cv_freq`         | sample std / mean of `f_i`                                        |
//! | `mean_amp`        | mean of `A_i` = peak minus the following valley                    |
//! | `cv_amp`          | sample std / mean of `A_i`                                        |
//! | `mean_speed`      | mean of `s_i` = max \|velocity\| in `[peak_i, peak_i+1)`            |
//! | `cv_speed`        | sample std / mean of `s_i`                                        |
//! | `period_range`    | `max T_i - min T_i`                                               |
//! | `roughness`       | `rms(jerk) / (rms(velocity) * (2π mean_freq)²)` between first and last peak |
//! | `decrement_amp`   | OLS slope of `A_i` against peak time, divided by `mean_amp`        |
//! | `decrement_speed` | OLS slope of `s_i` against peak time, divided by `mean_speed`      |
//! | `max_speed`       | max \|velocity\| over the whole signal                             |
//!
//! Roughness is 1 for a pure sinusoid and grows with hesitations and tremor.
//! Negative decrements mean the movement shrinks or slows over the recording.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cycles::{CycleEvent, CycleSet, EventKind};
use crate::error::{Error, Result};
use crate::signal::{DerivativeSet, DistanceSignal};

/// Minimum number of peaks (three full cycles).
pub const MIN_FEATURE_PEAKS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudePairing {
    /// Peak minus the valley that follows it (closing sweep).
    #[default]
    FollowingValley,
    /// Peak minus the valley that precedes it (opening sweep). The first
    /// cycle uses the signal minimum before its peak.
    PrecedingValley,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureConfig {
    pub amplitude_pairing: AmplitudePairing,
}

/// Per-cycle measurements; cycle `i` runs from peak `i` to peak `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleMeasures {
    pub periods: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub speeds: Vec<f64>,
    pub peak_times: Vec<f64>,
}

impl CycleMeasures {
    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }
}

pub fn cycle_measures(
    signal: &DistanceSignal,
    derivatives: &DerivativeSet,
    cycles: &CycleSet,
    cfg: &FeatureConfig,
) -> Result<CycleMeasures> {
    if derivatives.len() != signal.len() {
        return Err(Error::LengthMismatch {
            left: signal.len(),
            right: derivatives.len(),
        });
    }
    let events = cycles.events();
    let peak_pos: Vec<usize> = events
        .iter()
        .enumerate()
        .filter_map(|(i, e)| (e.kind == EventKind::Peak).then_some(i))
        .collect();
    if peak_pos.len() < MIN_FEATURE_PEAKS {
        return Err(Error::TooFewCycles {
            found: peak_pos.len(),
            required: MIN_FEATURE_PEAKS,
        });
    }

    let x = signal.values();
    let n_cycles = peak_pos.len() - 1;
    let mut m = CycleMeasures {
        periods: Vec::with_capacity(n_cycles),
        frequencies: Vec::with_capacity(n_cycles),
        amplitudes: Vec::with_capacity(n_cycles),
        speeds: Vec::with_capacity(n_cycles),
        peak_times: Vec::with_capacity(n_cycles),
    };
    for k in 0..n_cycles {
        let (pi, pj) = (peak_pos[k], peak_pos[k + 1]);
        let (peak, next) = (&events[pi], &events[pj]);
        let period = next.t - peak.t;

        let following = valley_between(events, pi, pj)?;
        let valley_value = match cfg.amplitude_pairing {
            AmplitudePairing::FollowingValley => following.value,
            AmplitudePairing::PrecedingValley => match pi.checked_sub(1).map(|i| &events[i]) {
                Some(prev) if prev.kind == EventKind::Valley => prev.value,
                _ if peak.index > 0 => x[..peak.index].iter().copied().fold(f64::INFINITY, f64::min),
                _ => following.value,
            },
        };

        let (lo, hi) = (peak.index, next.index.max(peak.index + 1));
        let speed = derivatives.velocity[lo..hi].iter().fold(0.0_f64, |s, v| s.max(v.abs()));

        m.periods.push(period);
        m.frequencies.push(1.0 / period);
        m.amplitudes.push(peak.value - valley_value);
        m.speeds.push(speed);
        m.peak_times.push(peak.t);
    }
    Ok(m)
}

fn valley_between(events: &[CycleEvent], from: usize, to: usize) -> Result<&CycleEvent> {
    events[from + 1..to]
        .iter()
        .find(|e| e.kind == EventKind::Valley)
        .ok_or_else(|| Error::Invariant(format!("no valley between peaks at t = {} and t = {}", events[from].t, events[to].t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mean_freq: f64,
    pub cv_freq: f64,
    pub mean_amp: f64,
    pub cv_amp: f64,
    pub mean_speed: f64,
    pub cv_speed: f64,
    pub period_range: f64,
    pub roughness: f64,
    pub decrement_amp: f64,
    pub decrement_speed: f64,
    pub max_speed: f64,
}

impl FeatureVector {
    pub const NAMES: [&'static str; 11] = [
        "mean_freq",
        "cv_freq",
        "mean_amp",
        "cv_amp",
        "mean_speed",
        "cv_speed",
        "period_range",
        "roughness",
        "decrement_amp",
        "decrement_speed",
        "max_speed",
    ];

    pub const UNITS: [&'static str; 11] = ["Hz", "1", "1", "1", "1/s", "1", "s", "1", "1/s", "1/s", "1/s"];

    pub fn values(&self) -> [f64; 11] {
        [
            self.mean_freq,
            self.cv_freq,
            self.mean_amp,
            self.cv_amp,
            self.mean_speed,
            self.cv_speed,
            self.period_range,
            self.roughness,
            self.decrement_amp,
            self.decrement_speed,
            self.max_speed,
        ]
    }

    pub fn from_values(v: [f64; 11]) -> Self {
        Self {
            mean_freq: v[0],
            cv_freq: v[1],
            mean_amp: v[2],
            cv_amp: v[3],
            mean_speed: v[4],
            cv_speed: v[5],
            period_range: v[6],
            roughness: v[7],
            decrement_amp: v[8],
            decrement_speed: v[9],
            max_speed: v[10],
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::NAMES.iter().position(|n| *n == name).map(|i| self.values()[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> {
        Self::NAMES.into_iter().zip(self.values())
    }
}

pub fn extract_features(signal: &DistanceSignal, derivatives: &DerivativeSet, cycles: &CycleSet) -> Result<FeatureVector> {
    extract_features_with(signal, derivatives, cycles, &FeatureConfig::default())
}

pub fn extract_features_with(
    signal: &DistanceSignal,
    derivatives: &DerivativeSet,
    cycles: &CycleSet,
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    let m = cycle_measures(signal, derivatives, cycles, cfg)?;
    Ok(features_from(&m, signal, derivatives, cycles))
}

fn features_from(m: &CycleMeasures, signal: &DistanceSignal, d: &DerivativeSet, cycles: &CycleSet) -> FeatureVector {
    let mean_freq = mean(&m.frequencies);
    let mean_amp = mean(&m.amplitudes);
    let mean_speed = mean(&m.speeds);
    let (t_min, t_max) = min_max(&m.periods);

    let first = cycles.peaks().next().map_or(0, |e| e.index);
    let last = cycles.peaks().last().map_or(signal.len() - 1, |e| e.index);
    let window = first..=last.max(first);
    let omega = 2.0 * PI * mean_freq;
    let roughness = rms(&d.jerk[window.clone()]) / (rms(&d.velocity[window]) * omega * omega);

    FeatureVector {
        mean_freq,
        cv_freq: cv(&m.frequencies),
        mean_amp,
        cv_amp: cv(&m.amplitudes),
        mean_speed,
        cv_speed: cv(&m.speeds),
        period_range: t_max - t_min,
        roughness,
        decrement_amp: ols_slope(&m.peak_times, &m.amplitudes) / mean_amp,
        decrement_speed: ols_slope(&m.peak_times, &m.speeds) / mean_speed,
        max_speed: d.max_abs_velocity(),
    }
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample (n − 1) standard deviation.
pub(crate) fn sample_std(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

pub(crate) fn cv(x: &[f64]) -> f64 {
    sample_std(x) / mean(x)
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Least-squares slope of `y` against `x`.
pub(crate) fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    // cycle times strictly increase, so sxx > 0 whenever there are two cycles
    assert!(sxx > 0.0, "degenerate regression: all peak times equal");
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    sxy / sxx
}

//! Tap cycles: peaks (maximum opening) and valleys (maximum closing).

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::DistanceSignal;

/// Minimum number of peaks for a usable recording.
pub const MIN_PEAKS: usize = 3;

/// Minimum autocorrelation value for a lag to count as the tapping period.
const PERIOD_MIN_CORRELATION: f64 = 0.1;

/// Minimum analysed duration, seconds.
const MIN_DURATION: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Peak,
    Valley,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Peak => "peak",
            EventKind::Valley => "valley",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "peak" => Ok(EventKind::Peak),
            "valley" => Ok(EventKind::Valley),
            other => Err(format!("unknown event kind {other:?} (expected peak or valley)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CycleSource {
    Auto,
    Manual,
}

impl fmt::Display for CycleSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CycleSource::Auto => "auto",
            CycleSource::Manual => "manual",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleEvent {
    pub t: f64,
    pub value: f64,
    pub kind: EventKind,
    /// Grid sample nearest to `t`.
    pub index: usize,
}

/// Alternating peak/valley events with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSet {
    events: Vec<CycleEvent>,
    source: CycleSource,
}

impl CycleSet {
    pub fn new(events: Vec<CycleEvent>, source: CycleSource) -> Result<Self> {
        validate(&events)?;
        Ok(Self { events, source })
    }

    pub fn events(&self) -> &[CycleEvent] {
        &self.events
    }

    pub fn source(&self) -> CycleSource {
        self.source
    }

    pub fn peaks(&self) -> impl Iterator<Item = &CycleEvent> {
        self.events.iter().filter(|e| e.kind == EventKind::Peak)
    }

    pub fn valleys(&self) -> impl Iterator<Item = &CycleEvent> {
        self.events.iter().filter(|e| e.kind == EventKind::Valley)
    }

    pub fn peak_count(&self) -> usize {
        self.peaks().count()
    }
}

fn validate(events: &[CycleEvent]) -> Result<()> {
    for w in events.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if !(b.t > a.t) {
            return Err(Error::InvalidCycles(format!(
                "event times must increase strictly ({} then {})",
                a.t, b.t
            )));
        }
        if a.kind == b.kind {
            return Err(Error::NonAlternating { t: b.t });
        }
        let (peak, valley) = if a.kind == EventKind::Peak { (a, b) } else { (b, a) };
        if !(peak.value > valley.value) {
            return Err(Error::InvalidCycles(format!(
                "peak at t = {} is not above the adjacent valley at t = {}",
                peak.t, valley.t
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    /// Minimum peak prominence, normalized distance units.
    pub min_prominence: f64,
    /// Minimum peak spacing as a fraction of the dominant period.
    pub min_separation_fraction: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            min_prominence: 0.2,
            min_separation_fraction: 0.5,
        }
    }
}

/// Lag (seconds) of the first significant autocorrelation maximum.
///
/// Returns `Ok(None)` when the signal varies but has no repeating structure,
/// and [`Error::NoDominantPeriod`] when it does not vary at all.
pub fn dominant_period(signal: &DistanceSignal) -> Result<Option<f64>> {
    let x = signal.values();
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let energy: f64 = centred.iter().map(|v| v * v).sum();
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    if energy <= (1e-12 * scale).powi(2) * n as f64 {
        return Err(Error::NoDominantPeriod);
    }

    let max_lag = n / 2;
    let acf: Vec<f64> = (0..=max_lag)
        .map(|k| centred[..n - k].iter().zip(&centred[k..]).map(|(a, b)| a * b).sum::<f64>() / energy)
        .collect();

    // skip the central lobe: wait until the correlation has gone non-positive
    let Some(first_dip) = acf.iter().position(|&r| r <= 0.0) else {
        return Ok(None);
    };
    for k in first_dip.max(1)..max_lag {
        if acf[k] >= PERIOD_MIN_CORRELATION && acf[k] >= acf[k - 1] && acf[k] > acf[k + 1] {
            let offset = parabolic_offset(acf[k - 1], acf[k], acf[k + 1]);
            return Ok(Some((k as f64 + offset) / signal.fs()));
        }
    }
    Ok(None)
}

/// Vertex offset in (-0.5, 0.5) of the parabola through three equally spaced points.
fn parabolic_offset(left: f64, centre: f64, right: f64) -> f64 {
    let denom = left - 2.0 * centre + right;
    if denom == 0.0 {
        return 0.0;
    }
    (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
}

/// Indices of local maxima; a flat top reports its (lower) middle sample.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut peaks = Vec::new();
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead + 1 < n && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                peaks.push((i + ahead - 1) / 2);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    peaks
}

/// Topographic prominence of the peak at `i`.
fn prominence(x: &[f64], i: usize) -> f64 {
    let h = x[i];
    let mut left_min = h;
    for j in (0..i).rev() {
        if x[j] > h {
            break;
        }
        left_min = left_min.min(x[j]);
    }
    let mut right_min = h;
    for &v in &x[i + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Keeps the highest peaks such that no two retained peaks are closer than
/// `min_distance` samples.
fn enforce_separation(x: &[f64], peaks: &[usize], min_distance: usize) -> Vec<usize> {
    if min_distance <= 1 {
        return peaks.to_vec();
    }
    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by(|&a, &b| x[peaks[b]].total_cmp(&x[peaks[a]]).then(a.cmp(&b)));
    let mut keep = vec![true; peaks.len()];
    for &p in &order {
        if !keep[p] {
            continue;
        }
        let mut j = p;
        while j > 0 && peaks[p] - peaks[j - 1] < min_distance {
            j -= 1;
            keep[j] = false;
        }
        let mut j = p + 1;
        while j < peaks.len() && peaks[j] - peaks[p] < min_distance {
            keep[j] = false;
            j += 1;
        }
    }
    peaks
        .iter()
        .zip(keep)
        .filter_map(|(&p, k)| k.then_some(p))
        .collect()
}

fn argmin(x: &[f64], from: usize, to: usize) -> usize {
    (from..to).fold(from, |best, i| if x[i] < x[best] { i } else { best })
}

fn event_at(signal: &DistanceSignal, index: usize, kind: EventKind) -> CycleEvent {
    let x = signal.values();
    let offset = if index > 0 && index + 1 < x.len() {
        parabolic_offset(x[index - 1], x[index], x[index + 1])
    } else {
        0.0
    };
    CycleEvent {
        t: signal.t0() + (index as f64 + offset) / signal.fs(),
        value: x[index],
        kind,
        index,
    }
}

/// Detects tap cycles on a normalized distance signal.
///
/// Event times are refined to sub-sample precision by parabolic interpolation;
/// event values are the grid samples. The set starts at the first retained peak
/// and ends at the last one.
pub fn detect_cycles(signal: &DistanceSignal, cfg: &DetectConfig) -> Result<CycleSet> {
    let x = signal.values();
    let period = dominant_period(signal)?;
    if signal.duration() < MIN_DURATION {
        return Err(Error::TooFewCycles {
            found: 0,
            required: MIN_PEAKS,
        });
    }

    let candidates: Vec<usize> = local_maxima(x)
        .into_iter()
        .filter(|&i| prominence(x, i) >= cfg.min_prominence)
        .collect();
    let min_distance = period
        .map(|p| (cfg.min_separation_fraction * p * signal.fs()).ceil() as usize)
        .unwrap_or(1);
    let mut peaks = enforce_separation(x, &candidates, min_distance);

    // A flat stretch between two peaks can leave a valley level with a peak;
    // drop the lower peak until every valley sits strictly below its neighbours.
    let valleys = loop {
        let valleys: Vec<usize> = peaks.windows(2).map(|w| argmin(x, w[0] + 1, w[1])).collect();
        let clash = valleys.iter().enumerate().find(|&(k, &v)| {
            !(x[peaks[k]] > x[v] && x[peaks[k + 1]] > x[v])
        });
        match clash {
            Some((k, _)) => {
                let drop = if x[peaks[k]] < x[peaks[k + 1]] { k } else { k + 1 };
                peaks.remove(drop);
            }
            None => break valleys,
        }
    };

    if peaks.len() < MIN_PEAKS {
        return Err(Error::TooFewCycles {
            found: peaks.len(),
            required: MIN_PEAKS,
        });
    }

    let mut events = Vec::with_capacity(peaks.len() + valleys.len());
    for (k, &p) in peaks.iter().enumerate() {
        events.push(event_at(signal, p, EventKind::Peak));
        if let Some(&v) = valleys.get(k) {
            events.push(event_at(signal, v, EventKind::Valley));
        }
    }
    CycleSet::new(events, CycleSource::Auto)
}

/// Builds a cycle set from manual annotations. Values are read from the signal
/// at the nearest grid sample; the annotated sequence is validated, not repaired.
pub fn import_cycles(signal: &DistanceSignal, annotations: &[(f64, EventKind)]) -> Result<CycleSet> {
    let half_step = 0.5 / signal.fs();
    let (start, end) = (signal.t0(), signal.end_time());
    let mut events = Vec::with_capacity(annotations.len());
    for &(t, kind) in annotations {
        if !(t >= start - half_step && t <= end + half_step) {
            return Err(Error::OutOfSpan { t, start, end });
        }
        let index = signal.nearest_index(t);
        events.push(CycleEvent {
            t,
            value: signal.values()[index],
            kind,
            index,
        });
    }
    CycleSet::new(events, CycleSource::Manual)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub t: f64,
    pub value: f64,
    pub kind: EventKind,
}

pub fn write_cycles<W: Write>(cycles: &CycleSet, out: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["t", "value", "kind"])?;
    for e in &cycles.events {
        wtr.write_record([e.t.to_string(), e.value.to_string(), e.kind.to_string()])?;
    }
    wtr.flush()
}

pub fn write_cycle_file(cycles: &CycleSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_cycles(cycles, BufWriter::new(file)).map_err(io_err)
}

pub fn parse_cycles<R: Read>(reader: R) -> Result<Vec<CycleRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::MalformedRecord {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.iter().ne(["t", "value", "kind"]) {
        return Err(Error::MalformedRecord {
            line: 1,
            message: "expected header `t,value,kind`".into(),
        });
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::MalformedRecord {
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_cycle_file(path: impl AsRef<Path>) -> Result<Vec<CycleRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_cycles(BufReader::new(file))
}

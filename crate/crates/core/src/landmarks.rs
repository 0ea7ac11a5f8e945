//! Hand-landmark time series and manual fingertip annotations.
//!
//! Landmark files are line-delimited JSON: one header record carrying the
//! source metadata, then one record per video frame with 21 `[x, y]` points.
//! Frames where the pose estimator lost the hand carry `"points": null`.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Sample;

pub const NUM_LANDMARKS: usize = 21;
pub const WRIST: usize = 0;
pub const THUMB_TIP: usize = 4;
pub const INDEX_TIP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hand {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    OnDevice,
    Streaming,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StimState {
    On,
    Off,
    None,
}

macro_rules! text_enum {
    ($ty:ty { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self { $(Self::$variant => $text),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                match s {
                    $($text => Ok(Self::$variant),)+
                    other => Err(format!(
                        "unknown value {other:?} (expected one of: {})",
                        [$($text),+].join(", ")
                    )),
                }
            }
        }
    };
}

text_enum!(Hand { Left => "left", Right => "right" });
text_enum!(Condition { OnDevice => "on_device", Streaming => "streaming", Synthetic => "synthetic" });
text_enum!(StimState { On => "on", Off => "off", None => "none" });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceMeta {
    pub subject_id: String,
    pub hand: Hand,
    pub condition: Condition,
    pub stim_state: StimState,
}

impl SourceMeta {
    pub fn synthetic(subject_id: impl Into<String>) -> Self {
        SourceMeta {
            subject_id: subject_id.into(),
            hand: Hand::Right,
            condition: Condition::Synthetic,
            stim_state: StimState::None,
        }
    }
}

/// One video frame. `points` is `None` when the estimator detected no hand.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkFrame {
    t: f64,
    points: Option<Box<[Point; NUM_LANDMARKS]>>,
    confidence: Option<f64>,
}

impl LandmarkFrame {
    pub fn new(t: f64, points: Vec<Point>, confidence: Option<f64>) -> Result<Self> {
        let frame = Self::dropout(t, confidence)?;
        let found = points.len();
        let points: Box<[Point; NUM_LANDMARKS]> = points
            .into_boxed_slice()
            .try_into()
            .map_err(|_| Error::WrongPointCount { line: 0, found })?;
        Ok(Self {
            points: Some(points),
            ..frame
        })
    }

    pub fn dropout(t: f64, confidence: Option<f64>) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::MalformedRecord {
                line: 0,
                message: format!("timestamp must be finite and non-negative, got {t}"),
            });
        }
        if let Some(c) = confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::MalformedRecord {
                    line: 0,
                    message: format!("confidence must lie in [0, 1], got {c}"),
                });
            }
        }
        Ok(Self {
            t,
            points: None,
            confidence,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn points(&self) -> Option<&[Point; NUM_LANDMARKS]> {
        self.points.as_deref()
    }

    pub fn confidence(&self) -> Option<f64> {
        self.confidence
    }

    pub fn is_dropout(&self) -> bool {
        self.points.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSeries {
    frames: Vec<LandmarkFrame>,
    nominal_fps: f64,
    meta: SourceMeta,
}

impl LandmarkSeries {
    pub fn new(frames: Vec<LandmarkFrame>, nominal_fps: f64, meta: SourceMeta) -> Result<Self> {
        if !(nominal_fps.is_finite() && nominal_fps > 0.0) {
            return Err(Error::InvalidRate(nominal_fps));
        }
        check_monotone(frames.iter().map(LandmarkFrame::t), 1)?;
        Ok(Self {
            frames,
            nominal_fps,
            meta,
        })
    }

    pub fn frames(&self) -> &[LandmarkFrame] {
        &self.frames
    }

    pub fn nominal_fps(&self) -> f64 {
        self.nominal_fps
    }

    pub fn meta(&self) -> &SourceMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

fn check_monotone(ts: impl Iterator<Item = f64>, first_line: usize) -> Result<()> {
    let mut prev: Option<f64> = None;
    for (i, t) in ts.enumerate() {
        if let Some(p) = prev {
            if t < p {
                return Err(Error::NonMonotoneTimestamps {
                    line: first_line + i,
                    t,
                    prev: p,
                });
            }
        }
        prev = Some(t);
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct HeaderRecord {
    meta: HeaderMeta,
}

#[derive(Serialize, Deserialize)]
struct HeaderMeta {
    subject_id: String,
    hand: Hand,
    condition: Condition,
    stim_state: StimState,
    nominal_fps: f64,
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    t: f64,
    points: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conf: Option<f64>,
}

fn malformed(line: usize, err: impl fmt::Display) -> Error {
    Error::MalformedRecord {
        line,
        message: err.to_string(),
    }
}

/// Parses a landmark file from any buffered reader. Line numbers in errors are 1-based.
pub fn parse_landmarks<R: BufRead>(reader: R) -> Result<LandmarkSeries> {
    let mut header: Option<HeaderMeta> = None;
    let mut frames = Vec::new();
    let mut prev_t: Option<f64> = None;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| malformed(lineno, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if header.is_none() {
            let rec: HeaderRecord = serde_json::from_str(trimmed)
                .map_err(|e| malformed(lineno, format!("expected header record: {e}")))?;
            header = Some(rec.meta);
            continue;
        }

        let rec: FrameRecord = serde_json::from_str(trimmed).map_err(|e| malformed(lineno, e))?;
        if let Some(p) = prev_t {
            if rec.t < p {
                return Err(Error::NonMonotoneTimestamps {
                    line: lineno,
                    t: rec.t,
                    prev: p,
                });
            }
        }
        prev_t = Some(rec.t);

        let frame = match rec.points {
            Some(points) => LandmarkFrame::new(rec.t, points, rec.conf),
            None => LandmarkFrame::dropout(rec.t, rec.conf),
        }
        .map_err(|e| match e {
            Error::WrongPointCount { found, .. } => Error::WrongPointCount {
                line: lineno,
                found,
            },
            Error::MalformedRecord { message, .. } => Error::MalformedRecord {
                line: lineno,
                message,
            },
            other => other,
        })?;
        frames.push(frame);
    }

    let header = header.ok_or_else(|| malformed(1, "missing header record"))?;
    let meta = SourceMeta {
        subject_id: header.subject_id,
        hand: header.hand,
        condition: header.condition,
        stim_state: header.stim_state,
    };
    LandmarkSeries::new(frames, header.nominal_fps, meta)
}

pub fn read_landmark_file(path: impl AsRef<Path>) -> Result<LandmarkSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_landmarks(BufReader::new(file))
}

pub fn write_landmarks<W: Write>(series: &LandmarkSeries, mut out: W) -> std::io::Result<()> {
    let header = HeaderRecord {
        meta: HeaderMeta {
            subject_id: series.meta.subject_id.clone(),
            hand: series.meta.hand,
            condition: series.meta.condition,
            stim_state: series.meta.stim_state,
            nominal_fps: series.nominal_fps,
        },
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for frame in &series.frames {
        let rec = FrameRecord {
            t: frame.t,
            points: frame.points.as_ref().map(|p| p.to_vec()),
            conf: frame.confidence,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_landmark_file(series: &LandmarkSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_landmarks(series, BufWriter::new(file)).map_err(io_err)
}

/// Thumb-tip to index-tip Euclidean distance for every frame with a detected hand.
///
/// Dropout frames are skipped, so the output has one sample per detected frame.
pub fn fingertip_distance(series: &LandmarkSeries) -> Result<Vec<Sample>> {
    let samples: Vec<Sample> = series
        .frames
        .iter()
        .filter_map(|f| {
            f.points().map(|p| Sample {
                t: f.t,
                value: p[THUMB_TIP].distance(&p[INDEX_TIP]),
            })
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub t: f64,
    pub thumb_x: f64,
    pub thumb_y: f64,
    pub index_x: f64,
    pub index_y: f64,
}

impl Annotation {
    pub fn thumb_tip(&self) -> Point {
        Point::new(self.thumb_x, self.thumb_y)
    }

    pub fn index_tip(&self) -> Point {
        Point::new(self.index_x, self.index_y)
    }
}

/// Manually localised fingertips, one entry per annotated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationTrack {
    entries: Vec<Annotation>,
}

impl AnnotationTrack {
    pub fn new(entries: Vec<Annotation>) -> Result<Self> {
        // header is line 1
        check_monotone(entries.iter().map(|a| a.t), 2)?;
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Annotation] {
        &self.entries
    }
}

pub fn parse_annotations<R: std::io::Read>(reader: R) -> Result<AnnotationTrack> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| malformed(1, e))?.clone();
    let expected = ["t", "thumb_x", "thumb_y", "index_x", "index_y"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(malformed(
            1,
            format!("expected header `{}`", expected.join(",")),
        ));
    }
    let mut entries = Vec::new();
    for (i, rec) in rdr.deserialize::<Annotation>().enumerate() {
        let lineno = i + 2;
        let a = rec.map_err(|e| malformed(lineno, e))?;
        if !a.t.is_finite() || a.t < 0.0 {
            return Err(malformed(lineno, "timestamp must be finite and non-negative"));
        }
        entries.push(a);
    }
    AnnotationTrack::new(entries)
}

pub fn read_annotation_file(path: impl AsRef<Path>) -> Result<AnnotationTrack> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_annotations(BufReader::new(file))
}

pub fn write_annotations<W: Write>(track: &AnnotationTrack, out: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for a in &track.entries {
        wtr.serialize(a)?;
    }
    wtr.flush()
}

pub fn annotation_distance(track: &AnnotationTrack) -> Result<Vec<Sample>> {
    if track.entries.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(track
        .entries
        .iter()
        .map(|a| Sample {
            t: a.t,
            value: a.thumb_tip().distance(&a.index_tip()),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> SourceMeta {
        SourceMeta {
            subject_id: "s01".into(),
            hand: Hand::Right,
            condition: Condition::OnDevice,
            stim_state: StimState::None,
        }
    }

    fn hand_with_tips(thumb: Point, index: Point) -> Vec<Point> {
        let mut pts = vec![Point::new(0.0, 0.0); NUM_LANDMARKS];
        pts[THUMB_TIP] = thumb;
        pts[INDEX_TIP] = index;
        pts
    }

    fn series_of(tips: &[(f64, Point, Point)]) -> LandmarkSeries {
        let frames = tips
            .iter()
            .map(|&(t, a, b)| LandmarkFrame::new(t, hand_with_tips(a, b), None).unwrap())
            .collect();
        LandmarkSeries::new(frames, 100.0, meta()).unwrap()
    }

    const HEADER: &str = r#"{"meta":{"subject_id":"s01","hand":"right","condition":"streaming","stim_state":"off","nominal_fps":25.0}}"#;

    fn frame_line(t: f64, n: usize) -> String {
        let pts: Vec<String> = (0..n).map(|i| format!("[{i}.5,{}.25]", i * 2)).collect();
        format!(r#"{{"t":{t},"points":[{}]}}"#, pts.join(","))
    }

    #[test]
    fn reads_two_frames() {
        let text = format!("{HEADER}\n{}\n{}\n", frame_line(0.0, 21), frame_line(0.04, 21));
        let s = parse_landmarks(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.nominal_fps(), 25.0);
        assert_eq!(s.meta().condition, Condition::Streaming);
        assert_eq!(s.meta().stim_state, StimState::Off);
        assert_eq!(s.frames()[1].points().unwrap()[3], Point::new(3.5, 6.25));
    }

    #[test]
    fn twenty_points_is_rejected_with_line() {
        let text = format!("{HEADER}\n{}\n{}\n", frame_line(0.0, 21), frame_line(0.04, 20));
        match parse_landmarks(text.as_bytes()) {
            Err(Error::WrongPointCount { line: 3, found: 20 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_timestamps_are_accepted() {
        let lines: Vec<String> = [0.0, 0.04, 0.04, 0.08]
            .iter()
            .map(|&t| frame_line(t, 21))
            .collect();
        let text = format!("{HEADER}\n{}\n", lines.join("\n"));
        assert_eq!(parse_landmarks(text.as_bytes()).unwrap().len(), 4);
    }

    #[test]
    fn decreasing_timestamps_are_rejected() {
        let text = format!("{HEADER}\n{}\n{}\n", frame_line(0.08, 21), frame_line(0.04, 21));
        assert!(matches!(
            parse_landmarks(text.as_bytes()),
            Err(Error::NonMonotoneTimestamps { line: 3, .. })
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{HEADER}\n{}\n{{\"t\": oops}}\n", frame_line(0.0, 21));
        assert!(matches!(
            parse_landmarks(text.as_bytes()),
            Err(Error::MalformedRecord { line: 3, .. })
        ));
    }

    #[test]
    fn missing_header_is_malformed() {
        let text = format!("{}\n", frame_line(0.0, 21));
        assert!(matches!(
            parse_landmarks(text.as_bytes()),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn null_points_is_a_dropout_frame() {
        let text = format!(
            "{HEADER}\n{}\n{{\"t\":0.04,\"points\":null}}\n{}\n",
            frame_line(0.0, 21),
            frame_line(0.08, 21)
        );
        let s = parse_landmarks(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.frames()[1].is_dropout());
        let d = fingertip_distance(&s).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[1].t, 0.08);
    }

    #[test]
    fn distance_examples() {
        let s = series_of(&[
            (0.0, Point::new(0.0, 0.0), Point::new(3.0, 4.0)),
            (0.01, Point::new(2.0, 2.0), Point::new(2.0, 2.0)),
            (0.02, Point::new(1.0, 1.0), Point::new(4.0, 5.0)),
        ]);
        let d = fingertip_distance(&s).unwrap();
        let values: Vec<f64> = d.iter().map(|s| s.value).collect();
        assert_eq!(values, vec![5.0, 0.0, 5.0]);
    }

    #[test]
    fn empty_series_is_an_error() {
        let s = LandmarkSeries::new(vec![], 30.0, meta()).unwrap();
        assert!(matches!(fingertip_distance(&s), Err(Error::EmptySeries)));
        let track = AnnotationTrack::new(vec![]).unwrap();
        assert!(matches!(annotation_distance(&track), Err(Error::EmptySeries)));
    }

    #[test]
    fn annotation_examples() {
        let csv = "t,thumb_x,thumb_y,index_x,index_y\n0,0,0,3,4\n0.01,2,2,2,2\n0.02,1,1,4,5\n";
        let track = parse_annotations(csv.as_bytes()).unwrap();
        let values: Vec<f64> = annotation_distance(&track)
            .unwrap()
            .iter()
            .map(|s| s.value)
            .collect();
        assert_eq!(values, vec![5.0, 0.0, 5.0]);
    }

    #[test]
    fn annotation_header_is_checked() {
        let csv = "time,a,b,c,d\n0,0,0,3,4\n";
        assert!(matches!(
            parse_annotations(csv.as_bytes()),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn landmark_round_trip_is_bit_exact() {
        let frames = vec![
            LandmarkFrame::new(
                0.0,
                (0..21).map(|i| Point::new(0.1 * i as f64, 1.0 / 3.0 + i as f64)).collect(),
                Some(0.87),
            )
            .unwrap(),
            LandmarkFrame::dropout(0.04, None).unwrap(),
            LandmarkFrame::new(
                0.04,
                (0..21).map(|i| Point::new(std::f64::consts::PI * i as f64, -1e-17)).collect(),
                None,
            )
            .unwrap(),
        ];
        let series = LandmarkSeries::new(frames, 25.0, meta()).unwrap();
        let mut buf = Vec::new();
        write_landmarks(&series, &mut buf).unwrap();
        let back = parse_landmarks(buf.as_slice()).unwrap();
        assert_eq!(back, series);
        let mut again = Vec::new();
        write_landmarks(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }
}

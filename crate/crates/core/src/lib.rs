//! Kinematic analysis of the finger-tapping test from hand-landmark time series.
//!
//! The crate is organised as a pipeline:
//!
//! - [`landmarks`]: 21-point hand landmark files and manual fingertip annotations,
//!   reduced to raw thumb–index distance samples.
//! - [`signal`]: resampling onto a uniform grid, Savitzky–Golay smoothing and
//!   differentiation, and 0–1 normalization.
//! - [`cycles`]: peaks (maximum opening) and valleys (maximum closing), detected
//!   automatically or imported from annotations.
//! - [`features`]: the ten bradykinesia features plus maximum speed.
//! - [`stats`]: R², Shapiro–Wilk, t-tests, Mann–Whitney U, Spearman and ICC(2,1).
//! - [`synthlab`]: a parametric tapping generator with analytic ground truth and a
//!   simulator of videoconference streaming degradation.

pub mod cycles;
pub mod error;
pub mod features;
pub mod landmarks;
pub mod signal;
pub mod stats;
pub mod synthlab;

pub use error::{Error, Result};

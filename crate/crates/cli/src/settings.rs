//! Analysis settings: defaults, then an optional config file, then flags.

use std::fs;
use std::path::Path;

use tapkin_core::cycles::DetectConfig;
use tapkin_core::features::{AmplitudePairing, FeatureConfig};
use tapkin_core::signal::PipelineConfig;
use tapkin_core::stats::{IccThresholds, TTestVariant, ALPHA};
use tapkin_core::synthlab::ExperimentSettings;

use crate::error::{CliError, CliResult};
use crate::kv;

pub const KEYS: [&str; 14] = [
    "smooth_window",
    "poly_order",
    "derivative_poly_order",
    "resample_fps",
    "dedupe",
    "normalize",
    "min_prominence",
    "min_separation",
    "amplitude_pairing",
    "alpha",
    "t_test",
    "icc_moderate",
    "icc_good",
    "icc_excellent",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub pipeline: PipelineConfig,
    pub detect: DetectConfig,
    pub features: FeatureConfig,
    pub alpha: f64,
    pub t_test: TTestVariant,
    pub thresholds: IccThresholds,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            pipeline: PipelineConfig::default(),
            detect: DetectConfig::default(),
            features: FeatureConfig::default(),
            alpha: ALPHA,
            t_test: TTestVariant::default(),
            thresholds: IccThresholds::default(),
        }
    }
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("invalid value {value:?} for {key}"))
}

fn flag(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("invalid value {value:?} for {key} (expected true or false)")),
    }
}

pub fn parse_t_test(value: &str) -> Result<TTestVariant, String> {
    match value {
        "welch" => Ok(TTestVariant::Welch),
        "pooled" => Ok(TTestVariant::Pooled),
        _ => Err(format!("unknown t-test variant {value:?} (expected welch or pooled)")),
    }
}

impl Settings {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let origin = path.display().to_string();
        let sections = kv::parse(&text, &origin)?;
        if let Some(s) = sections.iter().find(|s| s.name.is_some()) {
            return Err(CliError::input(format!("{origin}: line {}: sections are not allowed in config files", s.line)));
        }
        let mut settings = Settings::default();
        for e in &sections[0].entries {
            settings
                .set(&e.key, &e.value)
                .map_err(|m| CliError::input(format!("{origin}: line {}: {m}", e.line)))?;
        }
        Ok(settings)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "smooth_window" => self.pipeline.smooth_window = Some(number(key, value)?),
            "poly_order" => self.pipeline.poly_order = number(key, value)?,
            "derivative_poly_order" => self.pipeline.derivative_poly_order = number(key, value)?,
            "resample_fps" => self.pipeline.resample_fps = Some(number(key, value)?),
            "dedupe" => self.pipeline.dedupe = flag(key, value)?,
            "normalize" => self.pipeline.normalize = flag(key, value)?,
            "min_prominence" => self.detect.min_prominence = number(key, value)?,
            "min_separation" => self.detect.min_separation_fraction = number(key, value)?,
            "amplitude_pairing" => {
                self.features.amplitude_pairing = match value {
                    "following" => AmplitudePairing::FollowingValley,
                    "preceding" => AmplitudePairing::PrecedingValley,
                    _ => return Err(format!("unknown amplitude pairing {value:?} (expected following or preceding)")),
                }
            }
            "alpha" => self.alpha = number(key, value)?,
            "t_test" => self.t_test = parse_t_test(value)?,
            "icc_moderate" => self.thresholds.moderate = number(key, value)?,
            "icc_good" => self.thresholds.good = number(key, value)?,
            "icc_excellent" => self.thresholds.excellent = number(key, value)?,
            _ => return Err(format!("unknown setting `{key}` (known: {})", KEYS.join(", "))),
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::input(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.detect.min_prominence >= 0.0 && self.detect.min_separation_fraction >= 0.0) {
            return Err(CliError::input("peak prominence and separation must be non-negative"));
        }
        if let Some(fs) = self.pipeline.resample_fps {
            if !(fs.is_finite() && fs > 0.0) {
                return Err(CliError::input(format!("resample rate must be positive, got {fs}")));
            }
        }
        self.thresholds.validate()?;
        Ok(())
    }

    pub fn experiment(&self) -> ExperimentSettings {
        ExperimentSettings {
            pipeline: self.pipeline.clone(),
            detect: self.detect,
            features: self.features,
            thresholds: self.thresholds,
        }
    }
}

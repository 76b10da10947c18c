//! Pipeline configuration, loadable from a TOML file.
//!
//! ```toml
//! [color]
//! target = [200, 40, 40]
//! tolerance = 60.0
//!
//! [blur]
//! size = 9
//! sigma = 2.0
//!
//! [window]
//! w = 64
//! h = 64
//! stride = 32
//! min_patch_pixels = 8
//! ```
//!
//! Every section and key is optional; missing values take the defaults. The
//! detector fits at most quadratics unless `fit.max_degree` says otherwise.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curvefit::FitConfig;
use crate::error::{Error, Result};
use crate::preprocess::{BlurConfig, ColorTarget};
use crate::tracer::Connectivity;
use crate::verdict::{DecideConfig, MergeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColorConfig {
    pub target: Option<[u8; 3]>,
    pub tolerance: f64,
}

impl Default for ColorConfig {
    fn default() -> Self {
        Self {
            target: None,
            tolerance: ColorTarget::DEFAULT_TOLERANCE,
        }
    }
}

impl ColorConfig {
    pub fn target(&self) -> Result<Option<ColorTarget>> {
        self.target.map(|rgb| ColorTarget::new(rgb, self.tolerance)).transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub w: usize,
    pub h: usize,
    pub stride: usize,
    pub min_patch_pixels: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            w: 64,
            h: 64,
            stride: 32,
            min_patch_pixels: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub connectivity: Connectivity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntersectConfig {
    /// Crossings flatter than this are dropped. Two edges of one wire, or the
    /// two halves of a wire split by an occlusion gap, are near-parallel and
    /// would otherwise "cross" somewhere along their length.
    pub min_angle_deg: f64,
    /// Largest total distance the two fits may be extended past their own
    /// midpoints to reach the crossing.
    pub max_extrapolation_px: f64,
    /// Patches shorter than this along their principal axis take no part in
    /// crossings; their orientation is too noisy.
    pub min_patch_length_px: f64,
}

impl Default for IntersectConfig {
    fn default() -> Self {
        Self {
            min_angle_deg: 15.0,
            max_extrapolation_px: 16.0,
            min_patch_length_px: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub color: ColorConfig,
    pub blur: BlurConfig,
    pub window: WindowConfig,
    pub trace: TraceConfig,
    pub fit: FitConfig,
    pub intersect: IntersectConfig,
    pub decide: DecideConfig,
    pub merge: MergeConfig,
}

/// Highest polynomial degree used by the detector. Window-sized patches of
/// straight or gently bent wire rarely need more, and higher degrees swing
/// wide when extended across an occlusion gap.
pub const PIPELINE_MAX_DEGREE: usize = 2;

impl Default for Config {
    fn default() -> Self {
        Self {
            color: ColorConfig::default(),
            blur: BlurConfig::default(),
            window: WindowConfig::default(),
            trace: TraceConfig::default(),
            fit: FitConfig {
                max_degree: PIPELINE_MAX_DEGREE,
                ..FitConfig::default()
            },
            intersect: IntersectConfig::default(),
            decide: DecideConfig::default(),
            merge: MergeConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        self.color.target()?;
        self.blur.validate()?;
        let w = &self.window;
        if w.w == 0 || w.h == 0 || w.stride == 0 {
            return Err(Error::InvalidConfig("window size and stride must be positive".into()));
        }
        if self.fit.max_degree == 0 || self.fit.max_degree > 5 {
            return Err(Error::InvalidConfig(format!(
                "fit.max_degree must be within 1..=5, got {}",
                self.fit.max_degree
            )));
        }
        let non_negative = [
            ("color.tolerance", self.color.tolerance),
            ("fit.tolerance_px", self.fit.tolerance_px),
            ("fit.max_condition", self.fit.max_condition),
            ("intersect.min_angle_deg", self.intersect.min_angle_deg),
            ("intersect.max_extrapolation_px", self.intersect.max_extrapolation_px),
            ("intersect.min_patch_length_px", self.intersect.min_patch_length_px),
            ("decide.tie_epsilon_px", self.decide.tie_epsilon_px),
            ("merge.radius_px", self.merge.radius_px),
        ];
        for (key, value) in non_negative {
            if !(value >= 0.0) {
                return Err(Error::InvalidConfig(format!("{key} must be non-negative, got {value}")));
            }
        }
        Ok(())
    }
}

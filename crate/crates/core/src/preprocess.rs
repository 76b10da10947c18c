//! Color isolation of the wire of interest and Gaussian smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{convolve_plane, GrayImage, Kernel, RgbImage};

/// Target wire color and the Euclidean RGB radius accepted around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorTarget {
    pub rgb: [u8; 3],
    pub tolerance: f64,
}

impl ColorTarget {
    pub const DEFAULT_TOLERANCE: f64 = 60.0;

    pub fn new(rgb: [u8; 3], tolerance: f64) -> Result<Self> {
        if !(tolerance >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "color tolerance must be non-negative, got {tolerance}"
            )));
        }
        Ok(Self { rgb, tolerance })
    }

    pub fn distance(&self, pixel: [u8; 3]) -> f64 {
        pixel
            .iter()
            .zip(self.rgb)
            .map(|(&p, t)| (f64::from(p) - f64::from(t)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn matches(&self, pixel: [u8; 3]) -> bool {
        self.distance(pixel) <= self.tolerance
    }
}

/// Keeps pixels within `target.tolerance` of the target color and blackens
/// the rest. `None` passes the image through untouched.
pub fn isolate_color(image: &RgbImage, target: Option<&ColorTarget>) -> RgbImage {
    match target {
        None => image.clone(),
        Some(t) => image.map_pixels(|p| if t.matches(p) { p } else { [0, 0, 0] }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlurConfig {
    pub size: usize,
    pub sigma: f64,
}

impl BlurConfig {
    pub const INDOOR: Self = Self {
        size: 5,
        sigma: 1.0,
    };
    /// Heavier smoothing for textured outdoor scenes.
    pub const OUTDOOR: Self = Self {
        size: 9,
        sigma: 2.0,
    };

    pub fn new(size: usize, sigma: f64) -> Result<Self> {
        let cfg = Self { size, sigma };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 || self.size % 2 == 0 {
            return Err(Error::EvenKernel(self.size));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidSigma(self.sigma));
        }
        Ok(())
    }
}

impl Default for BlurConfig {
    fn default() -> Self {
        Self::INDOOR
    }
}

/// Samples the 2-D Gaussian at integer offsets from the kernel centre and
/// normalizes the coefficients to sum to one.
pub fn gaussian_kernel(config: &BlurConfig) -> Result<Kernel> {
    config.validate()?;
    let c = (config.size / 2) as f64;
    let two_var = 2.0 * config.sigma * config.sigma;
    let norm = 1.0 / (std::f64::consts::PI * two_var);
    let mut coefficients = Vec::with_capacity(config.size * config.size);
    for j in 0..config.size {
        for i in 0..config.size {
            let (x, y) = (i as f64 - c, j as f64 - c);
            coefficients.push(norm * (-(x * x + y * y) / two_var).exp());
        }
    }
    let total: f64 = coefficients.iter().sum();
    coefficients.iter_mut().for_each(|v| *v /= total);
    Kernel::new(config.size, coefficients)
}

/// Per-channel Gaussian blur with replicated borders, clamped to 0–255.
pub fn gaussian_blur(image: &RgbImage, config: &BlurConfig) -> Result<RgbImage> {
    let kernel = gaussian_kernel(config)?;
    let [r, g, b] = image.channels();
    let blurred = [
        convolve_plane(&r, &kernel)?,
        convolve_plane(&g, &kernel)?,
        convolve_plane(&b, &kernel)?,
    ];
    Ok(RgbImage::from_channels(&blurred))
}

pub fn gaussian_blur_gray(image: &GrayImage, config: &BlurConfig) -> Result<GrayImage> {
    let kernel = gaussian_kernel(config)?;
    let out = convolve_plane(&image.to_plane(), &kernel)?;
    let data = out
        .as_slice()
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::from_raw(image.width(), image.height(), data)
}

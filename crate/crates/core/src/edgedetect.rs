//! Directional edge maps from the eight Robinson compass masks, binarized with
//! Otsu's between-class variance criterion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{convolve, BinaryImage, GrayImage, Kernel, Plane};

/// One of the eight compass orientations. Declaration order is the
/// tie-break order used when merging detections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CompassDirection {
    N,
    S,
    E,
    W,
    NE,
    NW,
    SE,
    SW,
}

impl CompassDirection {
    pub const ALL: [CompassDirection; 8] = [
        CompassDirection::N,
        CompassDirection::S,
        CompassDirection::E,
        CompassDirection::W,
        CompassDirection::NE,
        CompassDirection::NW,
        CompassDirection::SE,
        CompassDirection::SW,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CompassDirection::N => "N",
            CompassDirection::S => "S",
            CompassDirection::E => "E",
            CompassDirection::W => "W",
            CompassDirection::NE => "NE",
            CompassDirection::NW => "NW",
            CompassDirection::SE => "SE",
            CompassDirection::SW => "SW",
        }
    }

    /// Number of 45° clockwise ring rotations taking the N mask to this one.
    fn rotation_steps(self) -> usize {
        match self {
            CompassDirection::N => 0,
            CompassDirection::NE => 1,
            CompassDirection::E => 2,
            CompassDirection::SE => 3,
            CompassDirection::S => 4,
            CompassDirection::SW => 5,
            CompassDirection::W => 6,
            CompassDirection::NW => 7,
        }
    }

    /// Unit vector (image coordinates, y down) pointing toward the mask's
    /// positive lobe. Under correlation the mask responds most strongly to an
    /// edge whose bright side lies in this direction.
    pub fn gradient(self) -> (f64, f64) {
        let d = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            CompassDirection::N => (0.0, 1.0),
            CompassDirection::S => (0.0, -1.0),
            CompassDirection::E => (-1.0, 0.0),
            CompassDirection::W => (1.0, 0.0),
            CompassDirection::NE => (-d, d),
            CompassDirection::NW => (d, d),
            CompassDirection::SE => (-d, -d),
            CompassDirection::SW => (d, -d),
        }
    }
}

impl fmt::Display for CompassDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CompassDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CompassDirection::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown compass direction {s:?}")))
    }
}

// Outer ring of the N mask, clockwise from the top-left cell.
const N_RING: [f64; 8] = [-1.0, -2.0, -1.0, 0.0, 1.0, 2.0, 1.0, 0.0];
// (column, row) of each ring position, same clockwise order.
const RING_CELLS: [(usize, usize); 8] = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

/// The Robinson mask for one direction, produced by rotating the N mask's
/// outer ring in 45° steps.
pub fn robinson_mask(direction: CompassDirection) -> Kernel {
    let k = direction.rotation_steps();
    let mut coefficients = vec![0.0; 9];
    for (pos, &(col, row)) in RING_CELLS.iter().enumerate() {
        coefficients[row * 3 + col] = N_RING[(pos + 8 - k) % 8];
    }
    Kernel::new(3, coefficients).expect("3x3 mask")
}

pub fn robinson_masks() -> [(CompassDirection, Kernel); 8] {
    CompassDirection::ALL.map(|d| (d, robinson_mask(d)))
}

/// Signed correlation response of `image` with the direction's mask.
pub fn edge_response_raw(image: &GrayImage, direction: CompassDirection) -> Plane {
    convolve(image, &robinson_mask(direction)).expect("robinson masks are 3x3")
}

/// Absolute mask response rescaled so the strongest response maps to 255.
pub fn edge_response(image: &GrayImage, direction: CompassDirection) -> GrayImage {
    rectify_and_rescale(&edge_response_raw(image, direction))
}

pub fn rectify_and_rescale(response: &Plane) -> GrayImage {
    let peak = response.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { 255.0 / peak } else { 0.0 };
    let data = response
        .as_slice()
        .iter()
        .map(|v| (v.abs() * scale).round().min(255.0) as u8)
        .collect();
    GrayImage::from_raw(response.width(), response.height(), data).expect("same dimensions")
}

/// 256-bin intensity histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: [u64; 256],
    total: u64,
}

impl Histogram {
    pub fn from_image(image: &GrayImage) -> Self {
        Self::from_values(image.as_raw().iter().copied())
    }

    pub fn from_values(values: impl IntoIterator<Item = u8>) -> Self {
        let mut counts = [0u64; 256];
        for v in values {
            counts[v as usize] += 1;
        }
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Normalized frequency p(i).
    pub fn p(&self, i: usize) -> f64 {
        self.counts[i] as f64 / self.total as f64
    }
}

/// Per-threshold terms of the Otsu criterion for a candidate T. Class B holds
/// intensities below T, class O those at or above it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtsuTerms {
    pub threshold: u8,
    pub weight_below: f64,
    pub weight_above: f64,
    pub mean_below: f64,
    pub mean_above: f64,
    pub var_below: f64,
    pub var_above: f64,
    pub within: f64,
    pub between: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtsuResult {
    pub threshold: u8,
    pub between_class_variance: f64,
}

/// Evaluates the within/between-class decomposition for every T in 1..=255.
pub fn otsu_terms(hist: &Histogram) -> Vec<OtsuTerms> {
    let p: Vec<f64> = (0..256).map(|i| hist.p(i)).collect();
    let mean: f64 = p.iter().enumerate().map(|(i, &pi)| i as f64 * pi).sum();
    let variance: f64 = p
        .iter()
        .enumerate()
        .map(|(i, &pi)| (i as f64 - mean).powi(2) * pi)
        .sum();

    (1..256usize)
        .map(|t| {
            let class_stats = |range: std::ops::Range<usize>| {
                let w: f64 = p[range.clone()].iter().sum();
                if w == 0.0 {
                    return (0.0, 0.0, 0.0);
                }
                let mu = range.clone().map(|i| i as f64 * p[i]).sum::<f64>() / w;
                let var = range.map(|i| (i as f64 - mu).powi(2) * p[i]).sum::<f64>() / w;
                (w, mu, var)
            };
            let (weight_below, mean_below, var_below) = class_stats(0..t);
            let (weight_above, mean_above, var_above) = class_stats(t..256);
            let within = weight_below * var_below + weight_above * var_above;
            OtsuTerms {
                threshold: t as u8,
                weight_below,
                weight_above,
                mean_below,
                mean_above,
                var_below,
                var_above,
                within,
                between: variance - within,
            }
        })
        .collect()
}

/// Picks the smallest T maximizing the between-class variance and binarizes
/// `image` with foreground = intensity ≥ T.
pub fn otsu_threshold(image: &GrayImage) -> Result<(OtsuResult, BinaryImage)> {
    let hist = Histogram::from_image(image);
    if let Some(level) = hist.counts.iter().position(|&c| c == hist.total) {
        return Err(Error::DegenerateHistogram(level as u8));
    }
    let mut best = OtsuResult {
        threshold: 1,
        between_class_variance: f64::NEG_INFINITY,
    };
    for terms in otsu_terms(&hist) {
        if terms.between > best.between_class_variance {
            best = OtsuResult {
                threshold: terms.threshold,
                between_class_variance: terms.between,
            };
        }
    }
    best.between_class_variance = best.between_class_variance.max(0.0);
    let binary = BinaryImage::from_fn(image.width(), image.height(), |x, y| {
        image.get(x, y) >= best.threshold
    })?;
    Ok((best, binary))
}

/// Edge map for one direction: response, rectification, rescale, Otsu.
pub fn edge_map(image: &GrayImage, direction: CompassDirection) -> Result<(OtsuResult, BinaryImage)> {
    otsu_threshold(&edge_response(image, direction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rows(k: &Kernel) -> [[f64; 3]; 3] {
        std::array::from_fn(|j| std::array::from_fn(|i| k.at(i, j)))
    }

    #[test]
    fn masks_match_published_table() {
        use CompassDirection::*;
        let table: [(CompassDirection, [[f64; 3]; 3]); 8] = [
            (N, [[-1., -2., -1.], [0., 0., 0.], [1., 2., 1.]]),
            (S, [[1., 2., 1.], [0., 0., 0.], [-1., -2., -1.]]),
            // bottom row corrected from the printed [1, 1, -2]
            (E, [[1., 0., -1.], [2., 0., -2.], [1., 0., -1.]]),
            (W, [[-1., 0., 1.], [-2., 0., 2.], [-1., 0., 1.]]),
            (NE, [[0., -1., -2.], [1., 0., -1.], [2., 1., 0.]]),
            (NW, [[-2., -1., 0.], [-1., 0., 1.], [0., 1., 2.]]),
            (SE, [[2., 1., 0.], [1., 0., -1.], [0., -1., -2.]]),
            (SW, [[0., 1., 2.], [-1., 0., 1.], [-2., -1., 0.]]),
        ];
        for (d, expected) in table {
            assert_eq!(rows(&robinson_mask(d)), expected, "{d}");
        }
    }

    #[test]
    fn masks_are_balanced_and_share_coefficients() {
        let mut reference: Vec<f64> = robinson_mask(CompassDirection::N).coefficients().to_vec();
        reference.sort_by(f64::total_cmp);
        for (d, k) in robinson_masks() {
            assert_eq!(k.sum(), 0.0, "{d}");
            let mut c = k.coefficients().to_vec();
            c.sort_by(f64::total_cmp);
            assert_eq!(c, reference);
        }
    }

    #[test]
    fn s_is_negated_n() {
        let n = robinson_mask(CompassDirection::N);
        let s = robinson_mask(CompassDirection::S);
        for (a, b) in n.coefficients().iter().zip(s.coefficients()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn direction_names_roundtrip() {
        for d in CompassDirection::ALL {
            assert_eq!(d.name().parse::<CompassDirection>().unwrap(), d);
        }
        assert!("up".parse::<CompassDirection>().is_err());
    }

    #[test]
    fn constant_image_has_zero_response() {
        let img = GrayImage::from_fn(8, 8, |_, _| 77).unwrap();
        for d in CompassDirection::ALL {
            assert!(edge_response(&img, d).as_raw().iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn horizontal_step_peaks_on_step_rows() {
        let img = GrayImage::from_fn(12, 12, |_, y| if y >= 6 { 200 } else { 20 }).unwrap();
        let resp = edge_response(&img, CompassDirection::N);
        for x in 0..12 {
            assert_eq!(resp.get(x, 5), 255);
            assert_eq!(resp.get(x, 6), 255);
            assert_eq!(resp.get(x, 1), 0);
            assert_eq!(resp.get(x, 10), 0);
        }
    }

    #[test]
    fn horizontal_step_prefers_n_over_e() {
        // N on rows (20,200,200): 4*180; E mask has zero-sum columns so a
        // horizontal step gives nothing at all
        let img = GrayImage::from_fn(12, 12, |_, y| if y >= 6 { 200 } else { 20 }).unwrap();
        let n = edge_response_raw(&img, CompassDirection::N);
        let e = edge_response_raw(&img, CompassDirection::E);
        assert_eq!(n.get(5, 6), 720.0);
        assert!(e.get(5, 6).abs() < n.get(5, 6).abs());
        assert_eq!(e.get(5, 6), 0.0);
    }

    #[test]
    fn two_level_image_ties_resolve_to_smallest() {
        let img = GrayImage::from_fn(10, 10, |x, _| if x < 5 { 0 } else { 255 }).unwrap();
        let (res, bin) = otsu_threshold(&img).unwrap();
        assert_eq!(res.threshold, 1);
        for y in 0..10 {
            for x in 0..10 {
                assert_eq!(bin.get(x, y), x >= 5);
            }
        }
    }

    #[test]
    fn unbalanced_two_level_image() {
        let img = GrayImage::from_fn(10, 10, |x, y| if y * 10 + x < 40 { 50 } else { 200 }).unwrap();
        let (res, bin) = otsu_threshold(&img).unwrap();
        assert_eq!(res.threshold, 51);
        assert_eq!(bin.count_foreground(), 60);
        // w_B w_O (mu_B - mu_O)^2 = 0.4 * 0.6 * 150^2
        assert!((res.between_class_variance - 5400.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_image_is_degenerate() {
        let img = GrayImage::from_fn(5, 5, |_, _| 128).unwrap();
        assert!(matches!(otsu_threshold(&img), Err(Error::DegenerateHistogram(128))));
    }

    #[test]
    fn rescale_of_zero_response_is_zero() {
        let plane = Plane::from_raw(2, 2, vec![0.0; 4]).unwrap();
        assert!(rectify_and_rescale(&plane).as_raw().iter().all(|&v| v == 0));
    }

    proptest! {
        #[test]
        fn rescaled_response_spans_to_255(values in prop::collection::vec(-500.0f64..500.0, 4..64)) {
            let n = values.len();
            let plane = Plane::from_raw(n, 1, values.clone()).unwrap();
            let out = rectify_and_rescale(&plane);
            let any_nonzero = values.iter().any(|&v| v != 0.0);
            prop_assert_eq!(out.as_raw().iter().copied().max() == Some(255), any_nonzero);
        }

        #[test]
        fn within_plus_between_is_total(values in prop::collection::vec(any::<u8>(), 2..200)) {
            let hist = Histogram::from_values(values.iter().copied());
            let n = values.len() as f64;
            let mean = values.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
            let total = values.iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
            for t in otsu_terms(&hist) {
                let product_form = t.weight_below * t.weight_above * (t.mean_below - t.mean_above).powi(2);
                prop_assert!((t.within + product_form - total).abs() < 1e-9 * total.max(1.0));
            }
        }
    }
}

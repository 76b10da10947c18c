//! End-to-end detection: image in, merged tangles out.

use rayon::prelude::*;

use crate::curvefit::{fit_polynomial, intersect, pair_midpoints, PatchAnalysis};
use crate::edgedetect::{edge_map, CompassDirection};
use crate::error::{Error, Result};
use crate::harness::config::Config;
use crate::harness::eval::orientation_gap;
use crate::preprocess::{gaussian_blur, isolate_color};
use crate::raster::{to_grayscale, BinaryImage, GrayImage, RgbImage};
use crate::scanner::{extract_patches, windows, WindowRect};
use crate::tracer::{find_start, trace_contour};
use crate::verdict::{decide_window, merge_candidates, Tangle, TangleCandidate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecutionMode {
    Sequential,
    /// Directions and windows fan out over the rayon pool.
    #[default]
    Parallel,
}

/// Full pipeline output, including the per-window candidates behind the
/// merged tangles.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub tangles: Vec<Tangle>,
    pub candidates: Vec<TangleCandidate>,
    /// Directions whose edge response had a single grey level.
    pub skipped_directions: Vec<CompassDirection>,
}

/// Patch geometry for one window, in image coordinates. Patches that cannot
/// be fitted are left out.
pub fn analyze_window(edges: &BinaryImage, rect: &WindowRect, config: &Config) -> Result<Vec<PatchAnalysis>> {
    let mut out = Vec::new();
    for patch in extract_patches(edges, rect, config.window.min_patch_pixels) {
        let mask = patch.mask(rect);
        let start = find_start(&mask).expect("patch is non-empty");
        let contour = trace_contour(&mask, start, config.trace.connectivity)?;
        let midpoints = pair_midpoints(&contour)?.translate(rect.x0 as f64, rect.y0 as f64);
        match fit_polynomial(&midpoints, &config.fit) {
            Ok(poly) => out.push(PatchAnalysis {
                patch_id: patch.id,
                midpoints,
                poly,
            }),
            Err(Error::UnfittablePatch(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Candidates from every patch pair crossing inside the window.
pub fn window_candidates(
    edges: &BinaryImage,
    rect: &WindowRect,
    direction: CompassDirection,
    config: &Config,
) -> Result<Vec<TangleCandidate>> {
    let analyses = analyze_window(edges, rect, config)?;
    let min_len = config.intersect.min_patch_length_px;
    let long: Vec<bool> = analyses.iter().map(|a| a.length() >= min_len).collect();
    let mut out = Vec::new();
    for (i, a) in analyses.iter().enumerate() {
        if !long[i] {
            continue;
        }
        for (j, b) in analyses.iter().enumerate().skip(i + 1) {
            if !long[j] {
                continue;
            }
            let Some(ip) = intersect(a, b, rect) else {
                continue;
            };
            let axis_gap = orientation_gap(a.principal_angle(), b.principal_angle());
            if axis_gap < config.intersect.min_angle_deg
                || a.extrapolation(ip.position) + b.extrapolation(ip.position) > config.intersect.max_extrapolation_px
            {
                continue;
            }
            out.extend(decide_window(&analyses, &ip, rect, direction, &config.decide));
        }
    }
    Ok(out)
}

fn direction_edges(gray: &GrayImage, direction: CompassDirection) -> Result<Option<BinaryImage>> {
    match edge_map(gray, direction) {
        Ok((_, edges)) => Ok(Some(edges)),
        Err(Error::DegenerateHistogram(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn direction_candidates(
    edges: &BinaryImage,
    direction: CompassDirection,
    rects: &[WindowRect],
    config: &Config,
    mode: ExecutionMode,
) -> Result<Vec<TangleCandidate>> {
    let per_window: Vec<Vec<TangleCandidate>> = match mode {
        ExecutionMode::Sequential => rects
            .iter()
            .map(|r| window_candidates(edges, r, direction, config))
            .collect::<Result<_>>()?,
        ExecutionMode::Parallel => rects
            .par_iter()
            .map(|r| window_candidates(edges, r, direction, config))
            .collect::<Result<_>>()?,
    };
    Ok(per_window.into_iter().flatten().collect())
}

pub fn detect(image: &RgbImage, config: &Config, mode: ExecutionMode) -> Result<Detection> {
    config.validate()?;
    let target = config.color.target()?;
    let isolated = isolate_color(image, target.as_ref());
    let blurred = gaussian_blur(&isolated, &config.blur)?;
    let gray = to_grayscale(&blurred);
    let w = &config.window;
    let rects = windows(gray.width(), gray.height(), w.w, w.h, w.stride);

    let edges: Vec<Option<BinaryImage>> = match mode {
        ExecutionMode::Sequential => CompassDirection::ALL
            .iter()
            .map(|&d| direction_edges(&gray, d))
            .collect::<Result<_>>()?,
        ExecutionMode::Parallel => CompassDirection::ALL
            .par_iter()
            .map(|&d| direction_edges(&gray, d))
            .collect::<Result<_>>()?,
    };

    // Opposite masks differ only in sign, so after rectification their edge
    // maps coincide. Each distinct map is scanned once.
    let mut distinct: Vec<usize> = Vec::new();
    let mut source = Vec::with_capacity(edges.len());
    for (i, e) in edges.iter().enumerate() {
        let Some(e) = e else {
            source.push(None);
            continue;
        };
        match distinct.iter().find(|&&j| edges[j].as_ref() == Some(e)) {
            Some(&j) => source.push(Some(j)),
            None => {
                distinct.push(i);
                source.push(Some(i));
            }
        }
    }
    let scan = |&i: &usize| {
        let e = edges[i].as_ref().expect("distinct maps are present");
        direction_candidates(e, CompassDirection::ALL[i], &rects, config, mode).map(|c| (i, c))
    };
    let scanned: Vec<(usize, Vec<TangleCandidate>)> = match mode {
        ExecutionMode::Sequential => distinct.iter().map(scan).collect::<Result<_>>()?,
        ExecutionMode::Parallel => distinct.par_iter().map(scan).collect::<Result<_>>()?,
    };

    let mut candidates = Vec::new();
    let mut skipped_directions = Vec::new();
    for (d, src) in CompassDirection::ALL.into_iter().zip(source) {
        let Some(j) = src else {
            skipped_directions.push(d);
            continue;
        };
        let found = &scanned.iter().find(|(i, _)| *i == j).expect("every source was scanned").1;
        candidates.extend(found.iter().map(|c| TangleCandidate {
            direction: d,
            ..c.clone()
        }));
    }
    let tangles = merge_candidates(&candidates, &config.merge)
        .into_iter()
        .filter(|t| t.contributing_candidate_count >= config.merge.min_support)
        .collect();
    Ok(Detection {
        tangles,
        candidates,
        skipped_directions,
    })
}

/// Merged tangles for an image, computed in parallel.
pub fn run_pipeline(image: &RgbImage, config: &Config) -> Result<Vec<Tangle>> {
    Ok(detect(image, config, ExecutionMode::Parallel)?.tangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scene::{generate_scene, x_crossing_spec, XCrossingParams};

    #[test]
    fn blank_image_has_no_tangles() {
        let img = RgbImage::filled(96, 80, [40, 40, 40]).unwrap();
        let det = detect(&img, &Config::default(), ExecutionMode::Sequential).unwrap();
        assert!(det.tangles.is_empty());
        assert_eq!(det.skipped_directions.len(), 8);
    }

    #[test]
    fn straight_bar_gives_no_crossing() {
        let img = RgbImage::from_raw(
            96,
            64,
            (0..64)
                .flat_map(|y| (0..96).flat_map(move |_| if (30..34).contains(&y) { [220u8; 3] } else { [30; 3] }))
                .collect(),
        )
        .unwrap();
        let det = detect(&img, &Config::default(), ExecutionMode::Sequential).unwrap();
        assert!(det.tangles.is_empty(), "{:?}", det.tangles);
    }

    #[test]
    fn finds_the_crossing_in_a_synthetic_scene() {
        let spec = x_crossing_spec(0, &XCrossingParams::default());
        let (img, truth) = generate_scene(&spec).unwrap();
        let tangles = run_pipeline(&img, &Config::default()).unwrap();
        let c = truth.crossings[0].position();
        assert!(!tangles.is_empty());
        assert!(tangles[0].position.distance(c) <= 10.0, "{:?} vs {c:?}", tangles[0].position);
    }
}

//! Over/under decisions at centerline crossings and their aggregation into
//! final tangles.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::curvefit::{IntersectionPoint, PatchAnalysis};
use crate::edgedetect::CompassDirection;
use crate::point::Point;
use crate::scanner::WindowRect;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecideConfig {
    pub tie_epsilon_px: f64,
}

impl Default for DecideConfig {
    fn default() -> Self {
        Self { tie_epsilon_px: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MergeConfig {
    pub radius_px: f64,
    /// Tangles backed by fewer candidates are dropped after merging. Opposite
    /// masks give identical edge maps, so a lone window call counts twice.
    pub min_support: usize,
}

impl Default for MergeConfig {
    fn default() -> Self {
        Self {
            radius_px: 10.0,
            min_support: 6,
        }
    }
}

/// One over/under call from a single window under a single mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TangleCandidate {
    pub position: Point,
    pub over_patch: usize,
    /// Remaining patch ids by ascending distance. The order beyond the first
    /// is reported as-is and is not a depth claim.
    pub under_patches: Vec<usize>,
    pub d_over: f64,
    pub confidence: f64,
    pub direction: CompassDirection,
    pub window: WindowRect,
    /// Principal orientation of the over patch, degrees in [0, 180).
    pub over_axis_deg: f64,
    pub crossing_angle: f64,
}

/// Where the winning over-wire decision came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchRef {
    pub direction: CompassDirection,
    pub window: WindowRect,
    pub patch_id: usize,
    pub axis_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tangle {
    pub position: Point,
    pub over_patch: PatchRef,
    pub under_patches: Vec<usize>,
    pub confidence: f64,
    pub contributing_candidate_count: usize,
}

/// Confidence of an over-wire call: (d_w - d) / d_w with d_w the window diagonal.
pub fn confidence(d_over: f64, rect: &WindowRect) -> f64 {
    let dw = rect.diagonal();
    (dw - d_over) / dw
}

/// Picks the patch whose midpoint mean lies closest to the crossing as the
/// over-wire. Returns `None` when fewer than two patches are given or the two
/// nearest are within `tie_epsilon_px` of each other.
pub fn decide_window(
    analyses: &[PatchAnalysis],
    ip: &IntersectionPoint,
    rect: &WindowRect,
    direction: CompassDirection,
    config: &DecideConfig,
) -> Option<TangleCandidate> {
    if analyses.len() < 2 {
        return None;
    }
    let mut ranked: Vec<(f64, &PatchAnalysis)> = analyses
        .iter()
        .map(|a| (a.midpoints.mean.distance(ip.position), a))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.patch_id.cmp(&b.1.patch_id)));
    let (d_over, over) = ranked[0];
    if ranked[1].0 - d_over <= config.tie_epsilon_px {
        return None;
    }
    Some(TangleCandidate {
        position: ip.position,
        over_patch: over.patch_id,
        under_patches: ranked[1..].iter().map(|(_, a)| a.patch_id).collect(),
        d_over,
        confidence: confidence(d_over, rect),
        direction,
        window: *rect,
        over_axis_deg: over.principal_angle(),
        crossing_angle: ip.crossing_angle,
    })
}

fn window_order(a: &WindowRect, b: &WindowRect) -> Ordering {
    (a.y0, a.x0, a.h, a.w).cmp(&(b.y0, b.x0, b.h, b.w))
}

/// Representative order: confidence descending, then direction in
/// declaration order, then raster window order. The trailing keys only make
/// the order total so input permutation cannot leak into the output.
fn precedence(a: &TangleCandidate, b: &TangleCandidate) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(a.direction.cmp(&b.direction))
        .then(window_order(&a.window, &b.window))
        .then(a.position.x.total_cmp(&b.position.x))
        .then(a.position.y.total_cmp(&b.position.y))
        .then(a.over_patch.cmp(&b.over_patch))
        .then(a.under_patches.cmp(&b.under_patches))
        .then(a.over_axis_deg.total_cmp(&b.over_axis_deg))
        .then(a.crossing_angle.total_cmp(&b.crossing_angle))
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Single-linkage clustering of candidate positions; each cluster becomes one
/// tangle carrying its highest-precedence member's position and decision.
pub fn merge_candidates(candidates: &[TangleCandidate], config: &MergeConfig) -> Vec<Tangle> {
    let mut sorted: Vec<&TangleCandidate> = candidates.iter().collect();
    sorted.sort_by(|a, b| precedence(a, b));

    let n = sorted.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if sorted[i].position.distance(sorted[j].position) <= config.radius_px {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                // the lower index is the higher-precedence member, keep it as root
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    let mut counts = vec![0usize; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        counts[r] += 1;
    }
    // roots are visited in precedence order, which is descending confidence
    (0..n)
        .filter(|&i| parent[i] == i)
        .map(|i| {
            let c = sorted[i];
            Tangle {
                position: c.position,
                over_patch: PatchRef {
                    direction: c.direction,
                    window: c.window,
                    patch_id: c.over_patch,
                    axis_deg: c.over_axis_deg,
                },
                under_patches: c.under_patches.clone(),
                confidence: c.confidence,
                contributing_candidate_count: counts[i],
            }
        })
        .collect()
}

//! Window-level confusion rates against synthetic ground truth.

use serde::{Deserialize, Serialize};

use crate::harness::scene::{Crossing, GroundTruth};
use crate::scanner::WindowRect;
use crate::verdict::Tangle;

/// Confusion counts, possibly fractional.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: f64,
    pub tn: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
}

impl ConfusionCounts {
    pub fn total(&self) -> f64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    pub fn rates(&self) -> ConfusionRates {
        ConfusionRates::from_rates(self.tp, self.tn, self.fp, self.fn_)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionRates {
    pub tp: f64,
    pub tn: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub accuracy: f64,
}

impl ConfusionRates {
    /// Normalizes the four values by their sum and computes
    /// accuracy = (TP + TN) / (TP + TN + FP + FN). An all-zero input is
    /// treated as a perfect empty evaluation.
    pub fn from_rates(tp: f64, tn: f64, fp: f64, fn_: f64) -> Self {
        let total = tp + tn + fp + fn_;
        if total == 0.0 {
            return Self {
                tp: 0.0,
                tn: 1.0,
                fp: 0.0,
                fn_: 0.0,
                accuracy: 1.0,
            };
        }
        Self {
            tp: tp / total,
            tn: tn / total,
            fp: fp / total,
            fn_: fn_ / total,
            accuracy: (tp + tn) / total,
        }
    }

    /// Accuracy cut (not rounded) to three decimals, the way rates are
    /// usually tabulated.
    pub fn accuracy_3dp(&self) -> f64 {
        (self.accuracy * 1000.0 + 1e-9).floor() / 1000.0
    }
}

/// Smallest angle between two undirected orientations, in degrees.
pub fn orientation_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

/// Whether a detection localizes `crossing` and picks its over-wire: its
/// over-patch orientation must sit closer to the over wire than the under wire.
pub fn matches(t: &Tangle, crossing: &Crossing, match_radius: f64) -> bool {
    t.position.distance(crossing.position()) <= match_radius
        && orientation_gap(t.over_patch.axis_deg, crossing.over_angle_deg)
            < orientation_gap(t.over_patch.axis_deg, crossing.under_angle_deg)
}

/// Per-window counts. A window holding a crossing is positive; it scores TP
/// when a detection inside it matches one of its crossings, FN when it holds
/// no detection, and half FP plus half FN when its detections all miss. A
/// window without crossings is FP if it holds a detection and TN otherwise.
pub fn evaluate_counts(
    detections: &[Tangle],
    truth: &GroundTruth,
    windows: &[WindowRect],
    match_radius: f64,
) -> ConfusionCounts {
    let mut counts = ConfusionCounts::default();
    for rect in windows {
        let crossings: Vec<&Crossing> = truth.crossings.iter().filter(|c| rect.contains(c.position())).collect();
        let claimed: Vec<&Tangle> = detections.iter().filter(|t| rect.contains(t.position)).collect();
        match (crossings.is_empty(), claimed.is_empty()) {
            (true, true) => counts.tn += 1.0,
            (true, false) => counts.fp += 1.0,
            (false, true) => counts.fn_ += 1.0,
            (false, false) => {
                let hit = claimed
                    .iter()
                    .any(|t| crossings.iter().any(|c| matches(t, c, match_radius)));
                if hit {
                    counts.tp += 1.0;
                } else {
                    counts.fp += 0.5;
                    counts.fn_ += 0.5;
                }
            }
        }
    }
    counts
}

pub fn evaluate(detections: &[Tangle], truth: &GroundTruth, windows: &[WindowRect], match_radius: f64) -> ConfusionRates {
    evaluate_counts(detections, truth, windows, match_radius).rates()
}

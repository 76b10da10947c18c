//! Detection JSON.
//!
//! `{"tangles":[{"x":..,"y":..,"over_patch":{"direction":"N","window":[x0,y0,w,h],
//! "patch_id":..,"axis_deg":..},"confidence":..}]}`. Key order is fixed.

use serde::{Deserialize, Serialize};

use crate::edgedetect::CompassDirection;
use crate::error::Result;
use crate::point::Point;
use crate::scanner::WindowRect;
use crate::verdict::{PatchRef, Tangle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchRecord {
    pub direction: CompassDirection,
    pub window: [usize; 4],
    pub patch_id: usize,
    pub axis_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangleRecord {
    pub x: f64,
    pub y: f64,
    pub over_patch: PatchRecord,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionReport {
    pub tangles: Vec<TangleRecord>,
}

impl From<&Tangle> for TangleRecord {
    fn from(t: &Tangle) -> Self {
        let p = &t.over_patch;
        Self {
            x: t.position.x,
            y: t.position.y,
            over_patch: PatchRecord {
                direction: p.direction,
                window: p.window.as_array(),
                patch_id: p.patch_id,
                axis_deg: p.axis_deg,
            },
            confidence: t.confidence,
        }
    }
}

impl TangleRecord {
    /// Rebuilds a tangle. Fields the record does not carry come back empty.
    pub fn to_tangle(&self) -> Tangle {
        let [x0, y0, w, h] = self.over_patch.window;
        Tangle {
            position: Point::new(self.x, self.y),
            over_patch: PatchRef {
                direction: self.over_patch.direction,
                window: WindowRect::new(x0, y0, w, h),
                patch_id: self.over_patch.patch_id,
                axis_deg: self.over_patch.axis_deg,
            },
            under_patches: Vec::new(),
            confidence: self.confidence,
            contributing_candidate_count: 1,
        }
    }
}

impl DetectionReport {
    pub fn new(tangles: &[Tangle]) -> Self {
        Self {
            tangles: tangles.iter().map(TangleRecord::from).collect(),
        }
    }

    pub fn to_tangles(&self) -> Vec<Tangle> {
        self.tangles.iter().map(TangleRecord::to_tangle).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_order_is_stable() {
        let t = Tangle {
            position: Point::new(1.5, 2.0),
            over_patch: PatchRef {
                direction: CompassDirection::SE,
                window: WindowRect::new(32, 0, 64, 64),
                patch_id: 3,
                axis_deg: 45.0,
            },
            under_patches: vec![1],
            confidence: 0.75,
            contributing_candidate_count: 4,
        };
        let json = DetectionReport::new(std::slice::from_ref(&t)).to_json();
        assert_eq!(
            json,
            r#"{"tangles":[{"x":1.5,"y":2.0,"over_patch":{"direction":"SE","window":[32,0,64,64],"patch_id":3,"axis_deg":45.0},"confidence":0.75}]}"#
        );
        let back = DetectionReport::from_json(&json).unwrap().to_tangles();
        assert_eq!(back[0].position, t.position);
        assert_eq!(back[0].over_patch, t.over_patch);
    }

    #[test]
    fn empty_report() {
        assert_eq!(DetectionReport::new(&[]).to_json(), r#"{"tangles":[]}"#);
    }
}

//! Wire tangle detection: finds places where one wire crosses another in an
//! image and decides which wire lies on top.
//!
//! The pipeline isolates a wire color, smooths, builds eight directional edge
//! maps, slides a window over each, traces every edge patch, fits a
//! centerline polynomial and intersects centerlines pairwise. The patch whose
//! centerline midpoint lies nearest a crossing is called the over-wire.

pub mod curvefit;
pub mod edgedetect;
pub mod error;
pub mod harness;
pub mod point;
pub mod preprocess;
pub mod raster;
pub mod scanner;
pub mod tracer;
pub mod verdict;

pub use error::{Error, Result};
pub use point::Point;

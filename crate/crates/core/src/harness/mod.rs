//! Scene synthesis, the detection driver, evaluation and I/O glue.

pub mod config;
pub mod eval;
pub mod pipeline;
pub mod report;
pub mod scene;

pub use config::Config;
pub use eval::{evaluate, ConfusionCounts, ConfusionRates};
pub use pipeline::{detect, run_pipeline, Detection, ExecutionMode};
pub use report::DetectionReport;
pub use scene::{generate_scene, x_crossing_spec, GroundTruth, SceneSpec, XCrossingParams};

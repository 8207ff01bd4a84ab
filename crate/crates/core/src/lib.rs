//! Multi-view stereo reconstruction with optional low-quality depth priors.
//!
//! Per-view depth maps are estimated by a coarse-to-fine plane-sweep
//! cascade, optionally densified by guided propagation and refined with
//! per-pixel Gauss-Newton against a photometric error, then fused into a
//! point cloud by cross-view consistency. A depth prior can recenter the
//! first-stage hypothesis range (`PriorMode::Range`) or fill unreliable
//! sparse estimates before propagation (`PriorMode::Init`).

pub mod dataio;
pub mod densify;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod geometry;
pub mod matcher;
pub mod pipeline;
pub mod raster;
pub mod refine;
pub mod rng;
pub mod sensor_sim;
pub mod synthscene;

pub use error::{Error, Result};

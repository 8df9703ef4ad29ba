//! Piece-wise planar depthmap toolkit.
//!
//! - [`geometry`]: pinhole camera, closest-point plane encoding, plane fitting.
//! - [`ransac`] and [`manhattan`]: plane hypothesis extraction and dominant directions.
//! - [`gt`]: mesh-to-frame ground-truth generation.
//! - [`segmentation`]: MRF baseline labeling and dense-CRF mask refinement.
//! - [`losses`]: plane, segmentation and depth training objectives with gradients.
//! - [`evaluation`]: plane/pixel recall curves and depth accuracy statistics.
//! - [`layout`]: room layout estimation from planes and masks.
//! - [`synth`]: analytic synthetic scenes used as ground truth.
//! - [`io`]: file formats.

pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod gt;
pub mod io;
pub mod layout;
pub mod losses;
pub mod mesh;
pub mod manhattan;
pub mod maps;
pub mod ransac;
pub mod segmentation;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{CameraIntrinsics, Plane, PlaneEquation, Point3Set, Pose, Vec3};
pub use maps::{DepthMap, LabelMap, ProbMaskStack, RgbImage};

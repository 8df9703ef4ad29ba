//! Mesh-to-frame ground-truth generation: per-label RANSAC on mesh vertices,
//! cross-label merging, z-buffered projection into frames, and plane/frame
//! filtering.

mod dataset;
mod filter;
mod fit;
mod raster;

pub use dataset::{
    build_dataset, fit_scene, generate_sample, Dataset, DatasetConfig, DatasetSample, FrameRecord, Manifest,
    SceneInput, Split,
};
pub use filter::{filter_sample, FilterConfig, GroundTruthSample, Rejection};
pub use fit::{fit_semantic_planes, merge_planes, merge_score, FittedMeshPlanes, MergeConfig};
pub use raster::{rasterize_frame, NEAR_PLANE};

//! Sample directory layout.

use std::path::{Path, PathBuf};

use planekit::io::{self, PlanesDocument};
use planekit::{CameraIntrinsics, DepthMap, Error, LabelMap, Plane, Result};

pub const RGB: &str = "rgb.png";
pub const DEPTH: &str = "depth.png";
pub const SENSOR_DEPTH: &str = "sensor_depth.png";
pub const LABELS: &str = "labels.png";
pub const PLANES: &str = "planes.json";
pub const INTRINSICS: &str = "intrinsics.json";
pub const ROLES: &str = "roles.png";
pub const SCENE: &str = "scene.json";
pub const MESH: &str = "mesh.ply";
pub const TRAJECTORY: &str = "trajectory.json";
pub const MANIFEST: &str = "manifest.json";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// The depth a pipeline step should consume: an explicit path, else the
/// sensor depth when present, else the clean depth.
pub fn input_depth(dir: &Path, explicit: Option<&Path>) -> Result<DepthMap> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None if dir.join(SENSOR_DEPTH).exists() => dir.join(SENSOR_DEPTH),
        None => dir.join(DEPTH),
    };
    io::read_depth_png(path)
}

pub fn intrinsics(dir: &Path) -> Result<CameraIntrinsics> {
    io::read_intrinsics(dir.join(INTRINSICS))
}

pub fn check_size(k: &CameraIntrinsics, size: (usize, usize), what: &str) -> Result<()> {
    if (k.width, k.height) != size {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{} but the intrinsics are {}x{}",
            size.0, size.1, k.width, k.height
        )));
    }
    Ok(())
}

/// Planes, labels and depth of one sample (prediction or ground truth).
pub struct PlanarSample {
    pub planes: Vec<Plane>,
    pub labels: LabelMap,
    pub depth: Option<DepthMap>,
}

pub fn load_planar(dir: &Path) -> Result<PlanarSample> {
    let doc = PlanesDocument::read(dir.join(PLANES))?;
    let planes = doc.planes.planes().to_vec();
    let labels = io::read_label_png(dir.join(LABELS), Some(planes.len()))?;
    let depth_path = dir.join(DEPTH);
    let depth = if depth_path.exists() { Some(io::read_depth_png(depth_path)?) } else { None };
    if let Some(d) = &depth {
        if d.size() != labels.size() {
            return Err(Error::DimensionMismatch(format!("{}: depth and labels differ in size", dir.display())));
        }
    }
    Ok(PlanarSample { planes, labels, depth })
}

/// Sample directories (those holding a planes file) under `root`, as paths
/// relative to it, sorted. `root` itself yields a single empty path.
pub fn find_samples(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join(PLANES).is_file() {
        return Ok(vec![PathBuf::new()]);
    }
    if !root.is_dir() {
        return Err(Error::InvalidInput(format!("{} is not a directory", root.display())));
    }
    let mut out = Vec::new();
    let mut stack = vec![PathBuf::new()];
    while let Some(rel) = stack.pop() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(root.join(&rel))?
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().map(|t| t.is_dir()).unwrap_or(false))
            .map(|e| rel.join(e.file_name()))
            .collect();
        entries.sort();
        for e in entries {
            if root.join(&e).join(PLANES).is_file() {
                out.push(e);
            } else {
                stack.push(e);
            }
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::InvalidInput(format!("no sample directories under {}", root.display())));
    }
    Ok(out)
}

//! File formats: 16-bit millimeter depth PNGs, 8-bit label and role PNGs,
//! RGB PNGs, plane/intrinsics/trajectory JSON, ASCII PLY and OBJ meshes,
//! NPY arrays and run configuration files.
//!
//! Every writer goes through [`write_atomic`], and every decoder has a
//! byte-level entry point that is safe on arbitrary input.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

mod config;
mod json;
mod mesh;
mod npy;
mod png;

pub use config::{GradCheckConfig, RunConfig};
pub use json::{
    from_json, parse_intrinsics, parse_trajectory, read_intrinsics, read_json, read_trajectory, to_json,
    trajectory_to_json, write_json, PlanesDocument, CAMERA_FRAME,
};
pub use mesh::{
    obj_to_strings, parse_labels, parse_obj, parse_obj_geometry, parse_ply, ply_to_string, read_mesh, read_obj,
    read_ply, write_obj, write_ply,
};
pub use npy::{
    decode_depth_npy, decode_masks_npy, encode_depth_npy, encode_masks_npy, read_depth_npy, read_masks_npy,
    write_depth_npy, write_masks_npy,
};
pub use png::{
    decode_depth_png, decode_label_png, decode_rgb_png, decode_role_png, depth_to_code, encode_depth_png,
    encode_label_png, encode_rgb_png, encode_role_png, read_depth_png, read_label_png, read_rgb_png, read_role_png,
    write_depth_png, write_label_png, write_rgb_png, write_role_png, DEPTH_UNITS_PER_METER, MAX_PNG_DEPTH, NO_LABEL,
};

/// Writes through a temporary file in the destination directory and renames
/// it into place, so readers never observe a partial file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub(crate) fn read_file(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    std::fs::read(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

use std::path::Path;

use ndarray::{Array2, Array3, ArrayView2, ArrayView3};
use ndarray_npy::{ViewNpyExt, WriteNpyExt};

use crate::error::{Error, Result};
use crate::maps::{DepthMap, ProbMaskStack};

use super::{read_file, write_atomic};

fn npy_bytes(write: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), ndarray_npy::WriteNpyError>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write(&mut out).map_err(|e| Error::BadFormat(format!("npy encode: {e}")))?;
    Ok(out)
}

/// Copies `bytes` to an 8-byte aligned buffer so the payload can be viewed in
/// place. Viewing checks the header's shape against the actual length before
/// any allocation, so a hostile header cannot request a huge buffer.
fn with_aligned<T>(bytes: &[u8], f: impl FnOnce(&[u8]) -> Result<T>) -> Result<T> {
    let mut buf = vec![0u8; bytes.len() + 8];
    let off = buf.as_ptr().align_offset(8).min(8);
    buf[off..off + bytes.len()].copy_from_slice(bytes);
    f(&buf[off..off + bytes.len()])
}

/// `<f8` array of shape `(height, width)`; invalid pixels are NaN.
pub fn encode_depth_npy(depth: &DepthMap) -> Result<Vec<u8>> {
    let values: Vec<f64> = depth.iter().map(|d| d.unwrap_or(f64::NAN)).collect();
    let arr = Array2::from_shape_vec((depth.height(), depth.width()), values).expect("shape");
    npy_bytes(|w| arr.write_npy(w))
}

/// Non-finite and non-positive entries decode as invalid pixels.
pub fn decode_depth_npy(bytes: &[u8]) -> Result<DepthMap> {
    with_aligned(bytes, |b| {
        let view = ArrayView2::<f64>::view_npy(b).map_err(|e| Error::BadFormat(format!("npy: {e}")))?;
        let (h, w) = view.dim();
        let values: Vec<Option<f64>> = view.iter().map(|&d| (d.is_finite() && d > 0.0).then_some(d)).collect();
        DepthMap::from_options(w, h, &values)
    })
}

/// `<f8` array of shape `(height, width, channels)`.
pub fn encode_masks_npy(masks: &ProbMaskStack) -> Result<Vec<u8>> {
    let arr = Array3::from_shape_vec((masks.height(), masks.width(), masks.channels()), masks.data().to_vec())
        .expect("shape");
    npy_bytes(|w| arr.write_npy(w))
}

pub fn decode_masks_npy(bytes: &[u8]) -> Result<ProbMaskStack> {
    with_aligned(bytes, |b| {
        let view = ArrayView3::<f64>::view_npy(b).map_err(|e| Error::BadFormat(format!("npy: {e}")))?;
        let (h, w, c) = view.dim();
        ProbMaskStack::new(w, h, c, view.iter().copied().collect())
    })
}

pub fn write_depth_npy(path: impl AsRef<Path>, depth: &DepthMap) -> Result<()> {
    write_atomic(path, &encode_depth_npy(depth)?)
}

pub fn read_depth_npy(path: impl AsRef<Path>) -> Result<DepthMap> {
    decode_depth_npy(&read_file(path)?)
}

pub fn write_masks_npy(path: impl AsRef<Path>, masks: &ProbMaskStack) -> Result<()> {
    write_atomic(path, &encode_masks_npy(masks)?)
}

pub fn read_masks_npy(path: impl AsRef<Path>) -> Result<ProbMaskStack> {
    decode_masks_npy(&read_file(path)?)
}

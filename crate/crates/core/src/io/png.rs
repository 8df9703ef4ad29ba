use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

use crate::error::{Error, Result};
use crate::layout::{Role, RoleMap};
use crate::maps::{DepthMap, LabelMap, RgbImage};

use super::{read_file, write_atomic};

/// Depth PNG quantum: one millimeter.
pub const DEPTH_UNITS_PER_METER: f64 = 1000.0;
/// Largest depth representable in a 16-bit millimeter PNG, meters.
pub const MAX_PNG_DEPTH: f64 = 65.535;
/// Pixel value of unlabeled / non-planar pixels in 8-bit label and role PNGs.
pub const NO_LABEL: u8 = 255;

fn encode<P, C>(buf: ImageBuffer<P, C>) -> Result<Vec<u8>>
where
    P: image::Pixel + image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png).map_err(|e| Error::BadFormat(format!("png encode: {e}")))?;
    Ok(out.into_inner())
}

fn decode(bytes: &[u8]) -> Result<DynamicImage> {
    image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| Error::BadFormat(format!("png: {e}")))
}

fn dims(width: usize, height: usize) -> Result<(u32, u32)> {
    match (u32::try_from(width), u32::try_from(height)) {
        (Ok(w), Ok(h)) if w > 0 && h > 0 => Ok((w, h)),
        _ => Err(Error::OutOfRange(format!("image size {width}x{height}"))),
    }
}

/// Millimeter code of a valid depth.
pub fn depth_to_code(depth: f64) -> Result<u16> {
    let mm = (depth * DEPTH_UNITS_PER_METER).round();
    if !(mm >= 1.0 && mm <= u16::MAX as f64) {
        return Err(Error::OutOfRange(format!("depth {depth} m does not fit a 16-bit millimeter PNG")));
    }
    Ok(mm as u16)
}

/// 16-bit grayscale PNG, millimeters, 0 = invalid.
pub fn encode_depth_png(depth: &DepthMap) -> Result<Vec<u8>> {
    let (w, h) = dims(depth.width(), depth.height())?;
    let codes = depth.iter().map(|d| d.map_or(Ok(0), depth_to_code)).collect::<Result<Vec<u16>>>()?;
    encode(ImageBuffer::<Luma<u16>, _>::from_raw(w, h, codes).expect("buffer size"))
}

pub fn decode_depth_png(bytes: &[u8]) -> Result<DepthMap> {
    let DynamicImage::ImageLuma16(img) = decode(bytes)? else {
        return Err(Error::BadFormat("depth PNG must be 16-bit grayscale".into()));
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<Option<f64>> =
        img.into_raw().into_iter().map(|c| (c > 0).then(|| c as f64 / DEPTH_UNITS_PER_METER)).collect();
    DepthMap::from_options(w, h, &values)
}

/// 8-bit grayscale PNG of plane ids, [`NO_LABEL`] for non-planar pixels.
pub fn encode_label_png(labels: &LabelMap) -> Result<Vec<u8>> {
    if labels.num_planes() >= NO_LABEL as usize {
        return Err(Error::OutOfRange(format!("{} planes do not fit an 8-bit label PNG", labels.num_planes())));
    }
    let (w, h) = dims(labels.width(), labels.height())?;
    let codes: Vec<u8> = (0..labels.len()).map(|i| labels.at(i).map_or(NO_LABEL, |l| l as u8)).collect();
    encode(ImageBuffer::<Luma<u8>, _>::from_raw(w, h, codes).expect("buffer size"))
}

/// Decodes a label PNG. Without `num_planes` the plane count is one more than
/// the largest id present.
pub fn decode_label_png(bytes: &[u8], num_planes: Option<usize>) -> Result<LabelMap> {
    let DynamicImage::ImageLuma8(img) = decode(bytes)? else {
        return Err(Error::BadFormat("label PNG must be 8-bit grayscale".into()));
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let codes = img.into_raw();
    let present = codes.iter().filter(|&&c| c != NO_LABEL).map(|&c| c as usize + 1).max().unwrap_or(0);
    let n = num_planes.unwrap_or(present);
    if present > n {
        return Err(Error::LabelOutOfRange { label: present - 1, max: n });
    }
    LabelMap::from_raw(w, h, n, codes.into_iter().map(|c| if c == NO_LABEL { n } else { c as usize }).collect())
}

/// 8-bit grayscale PNG of role indices, [`NO_LABEL`] for pixels without a role.
pub fn encode_role_png(roles: &RoleMap) -> Result<Vec<u8>> {
    let (w, h) = dims(roles.width(), roles.height())?;
    let codes: Vec<u8> = roles.roles().iter().map(|r| r.map_or(NO_LABEL, |r| r.index() as u8)).collect();
    encode(ImageBuffer::<Luma<u8>, _>::from_raw(w, h, codes).expect("buffer size"))
}

pub fn decode_role_png(bytes: &[u8]) -> Result<RoleMap> {
    let DynamicImage::ImageLuma8(img) = decode(bytes)? else {
        return Err(Error::BadFormat("role PNG must be 8-bit grayscale".into()));
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let roles = img
        .into_raw()
        .into_iter()
        .map(|c| match c {
            NO_LABEL => Ok(None),
            c => Role::from_index(c as usize)
                .map(Some)
                .ok_or(Error::LabelOutOfRange { label: c as usize, max: Role::ALL.len() - 1 }),
        })
        .collect::<Result<Vec<_>>>()?;
    RoleMap::new(w, h, roles)
}

/// 8-bit RGB PNG; channels are rounded and clamped to 0..=255.
pub fn encode_rgb_png(image: &RgbImage) -> Result<Vec<u8>> {
    let (w, h) = dims(image.width(), image.height())?;
    let bytes: Vec<u8> =
        image.pixels().iter().flat_map(|px| px.map(|c| c.round().clamp(0.0, 255.0) as u8)).collect();
    encode(ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, bytes).expect("buffer size"))
}

/// Any PNG color type, converted to 8-bit RGB.
pub fn decode_rgb_png(bytes: &[u8]) -> Result<RgbImage> {
    let img = decode(bytes)?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.pixels().map(|p| p.0.map(f64::from)).collect();
    RgbImage::new(w, h, data)
}

pub fn write_depth_png(path: impl AsRef<Path>, depth: &DepthMap) -> Result<()> {
    write_atomic(path, &encode_depth_png(depth)?)
}

pub fn read_depth_png(path: impl AsRef<Path>) -> Result<DepthMap> {
    decode_depth_png(&read_file(path)?)
}

pub fn write_label_png(path: impl AsRef<Path>, labels: &LabelMap) -> Result<()> {
    write_atomic(path, &encode_label_png(labels)?)
}

pub fn read_label_png(path: impl AsRef<Path>, num_planes: Option<usize>) -> Result<LabelMap> {
    decode_label_png(&read_file(path)?, num_planes)
}

pub fn write_role_png(path: impl AsRef<Path>, roles: &RoleMap) -> Result<()> {
    write_atomic(path, &encode_role_png(roles)?)
}

pub fn read_role_png(path: impl AsRef<Path>) -> Result<RoleMap> {
    decode_role_png(&read_file(path)?)
}

pub fn write_rgb_png(path: impl AsRef<Path>, image: &RgbImage) -> Result<()> {
    write_atomic(path, &encode_rgb_png(image)?)
}

pub fn read_rgb_png(path: impl AsRef<Path>) -> Result<RgbImage> {
    decode_rgb_png(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_round_trip_in_millimeters() {
        let values = [Some(2.0), None, Some(0.001), Some(65.535), Some(1.2344)];
        let d = DepthMap::from_options(5, 1, &values).unwrap();
        let back = decode_depth_png(&encode_depth_png(&d).unwrap()).unwrap();
        let got: Vec<Option<f64>> = back.iter().collect();
        assert_eq!(got, vec![Some(2.0), None, Some(0.001), Some(65.535), Some(1.234)]);
        // quantized maps round trip bit-exactly
        assert_eq!(decode_depth_png(&encode_depth_png(&back).unwrap()).unwrap(), back);
    }

    #[test]
    fn depth_out_of_range() {
        let far = DepthMap::from_values(1, 1, vec![70.0]).unwrap();
        assert!(matches!(encode_depth_png(&far), Err(Error::OutOfRange(_))));
        let near = DepthMap::from_values(1, 1, vec![0.0004]).unwrap();
        assert!(matches!(encode_depth_png(&near), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn label_and_role_round_trip() {
        let labels = LabelMap::from_raw(3, 2, 4, vec![0, 1, 4, 3, 2, 4]).unwrap();
        assert_eq!(decode_label_png(&encode_label_png(&labels).unwrap(), Some(4)).unwrap(), labels);
        let inferred = decode_label_png(&encode_label_png(&labels).unwrap(), None).unwrap();
        assert_eq!(inferred.num_planes(), 4);
        assert!(matches!(
            decode_label_png(&encode_label_png(&labels).unwrap(), Some(2)),
            Err(Error::LabelOutOfRange { .. })
        ));
        let roles = RoleMap::new(3, 1, vec![Some(Role::Floor), None, Some(Role::WallRight)]).unwrap();
        assert_eq!(decode_role_png(&encode_role_png(&roles).unwrap()).unwrap(), roles);
    }

    #[test]
    fn wrong_bit_depth_is_rejected() {
        let labels = LabelMap::unlabeled(2, 2, 1);
        assert!(matches!(decode_depth_png(&encode_label_png(&labels).unwrap()), Err(Error::BadFormat(_))));
        assert!(matches!(decode_depth_png(b"not a png"), Err(Error::BadFormat(_))));
    }

    #[test]
    fn rgb_round_trip_of_integer_images() {
        let img = RgbImage::new(2, 1, vec![[0.0, 128.0, 255.0], [17.0, 3.0, 99.0]]).unwrap();
        assert_eq!(decode_rgb_png(&encode_rgb_png(&img).unwrap()).unwrap(), img);
    }
}

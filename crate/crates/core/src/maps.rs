//! Per-pixel grids: depth maps, plane label maps, probability mask stacks and images.

use crate::error::{Error, Result};

fn check_len(what: &str, len: usize, width: usize, height: usize, per_pixel: usize) -> Result<()> {
    if len != width * height * per_pixel {
        return Err(Error::DimensionMismatch(format!(
            "{what}: {len} values for a {width}x{height}x{per_pixel} grid"
        )));
    }
    Ok(())
}

pub(crate) fn same_size(a: (usize, usize), b: (usize, usize), what: &str) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{what}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1)));
    }
    Ok(())
}

/// Metric camera-space depth with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl DepthMap {
    pub fn invalid(width: usize, height: usize) -> Self {
        Self { width, height, values: vec![0.0; width * height], valid: vec![false; width * height] }
    }

    /// Builds a map from raw values; non-finite or non-positive entries become invalid.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_len("depth", values.len(), width, height, 1)?;
        let valid = values.iter().map(|&z| z.is_finite() && z > 0.0).collect();
        let values = values.into_iter().map(|z| if z.is_finite() && z > 0.0 { z } else { 0.0 }).collect();
        Ok(Self { width, height, values, valid })
    }

    pub fn from_options(width: usize, height: usize, values: &[Option<f64>]) -> Result<Self> {
        check_len("depth", values.len(), width, height, 1)?;
        Self::from_values(width, height, values.iter().map(|z| z.unwrap_or(0.0)).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        self.at(v * self.width + u)
    }

    #[inline]
    pub fn at(&self, index: usize) -> Option<f64> {
        self.valid[index].then(|| self.values[index])
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.valid[v * self.width + u]
    }

    /// Sets a depth; non-finite or non-positive values mark the pixel invalid.
    pub fn set(&mut self, u: usize, v: usize, depth: f64) {
        self.set_at(v * self.width + u, Some(depth));
    }

    pub fn set_at(&mut self, index: usize, depth: Option<f64>) {
        match depth {
            Some(z) if z.is_finite() && z > 0.0 => {
                self.values[index] = z;
                self.valid[index] = true;
            }
            _ => {
                self.values[index] = 0.0;
                self.valid[index] = false;
            }
        }
    }

    pub fn invalidate(&mut self, index: usize) {
        self.set_at(index, None);
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Per-pixel `Option<f64>` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        (0..self.values.len()).map(move |i| self.at(i))
    }

    pub fn map_valid(&self, f: impl Fn(f64) -> f64) -> DepthMap {
        let mut out = DepthMap::invalid(self.width, self.height);
        for (i, z) in self.iter().enumerate() {
            out.set_at(i, z.map(&f));
        }
        out
    }
}

/// Per-pixel plane ids `0..num_planes`; the value `num_planes` marks non-planar
/// or unlabeled pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    num_planes: usize,
    labels: Vec<usize>,
}

impl LabelMap {
    pub fn unlabeled(width: usize, height: usize, num_planes: usize) -> Self {
        Self { width, height, num_planes, labels: vec![num_planes; width * height] }
    }

    pub fn from_raw(width: usize, height: usize, num_planes: usize, labels: Vec<usize>) -> Result<Self> {
        check_len("labels", labels.len(), width, height, 1)?;
        if let Some(&bad) = labels.iter().find(|&&l| l > num_planes) {
            return Err(Error::LabelOutOfRange { label: bad, max: num_planes });
        }
        Ok(Self { width, height, num_planes, labels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_planes(&self) -> usize {
        self.num_planes
    }

    /// The non-planar label value, equal to [`Self::num_planes`].
    pub fn non_planar(&self) -> usize {
        self.num_planes
    }

    pub fn raw(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<usize> {
        self.at(v * self.width + u)
    }

    #[inline]
    pub fn at(&self, index: usize) -> Option<usize> {
        let l = self.labels[index];
        (l < self.num_planes).then_some(l)
    }

    pub fn set(&mut self, u: usize, v: usize, label: Option<usize>) {
        self.set_at(v * self.width + u, label);
    }

    pub fn set_at(&mut self, index: usize, label: Option<usize>) {
        let l = label.unwrap_or(self.num_planes);
        assert!(l <= self.num_planes, "label {l} out of range");
        self.labels[index] = l;
    }

    /// Pixel count per plane id.
    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0; self.num_planes];
        for &l in &self.labels {
            if l < self.num_planes {
                areas[l] += 1;
            }
        }
        areas
    }

    pub fn planar_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l < self.num_planes).count()
    }

    /// Rewrites plane ids through `mapping` (old id -> new id or `None` for unlabeled).
    pub fn relabel(&self, mapping: &[Option<usize>], num_planes: usize) -> LabelMap {
        let labels = self
            .labels
            .iter()
            .map(|&l| if l < self.num_planes { mapping[l].unwrap_or(num_planes) } else { num_planes })
            .collect();
        LabelMap { width: self.width, height: self.height, num_planes, labels }
    }

    /// True for pixels with a 4-neighbor carrying a different label.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let (w, h) = (self.width, self.height);
        let mut mask = vec![false; w * h];
        for v in 0..h {
            for u in 0..w {
                let i = v * w + u;
                let l = self.labels[i];
                let differs = (u + 1 < w && self.labels[i + 1] != l) || (v + 1 < h && self.labels[i + w] != l);
                if differs {
                    mask[i] = true;
                    if u + 1 < w && self.labels[i + 1] != l {
                        mask[i + 1] = true;
                    }
                    if v + 1 < h && self.labels[i + w] != l {
                        mask[i + w] = true;
                    }
                }
            }
        }
        mask
    }

    /// Pixels within `radius` (Euclidean, pixels) of a label boundary pixel.
    pub fn boundary_band(&self, radius: f64) -> Vec<bool> {
        let boundary = self.boundary_mask();
        dilate(&boundary, self.width, self.height, radius)
    }
}

pub(crate) fn dilate(mask: &[bool], width: usize, height: usize, radius: f64) -> Vec<bool> {
    let r = radius.max(0.0).floor() as isize;
    let r2 = radius * radius;
    let mut out = vec![false; mask.len()];
    for v in 0..height as isize {
        for u in 0..width as isize {
            if !mask[v as usize * width + u as usize] {
                continue;
            }
            for dv in -r..=r {
                for du in -r..=r {
                    let (x, y) = (u + du, v + dv);
                    if x < 0 || y < 0 || x >= width as isize || y >= height as isize {
                        continue;
                    }
                    if ((du * du + dv * dv) as f64) <= r2 {
                        out[y as usize * width + x as usize] = true;
                    }
                }
            }
        }
    }
    out
}

/// `H×W×C` per-pixel probability distributions, pixel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMaskStack {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

impl ProbMaskStack {
    /// Validates nonnegativity and per-pixel normalization to 1e-6.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidInput("mask stack needs at least one channel".into()));
        }
        check_len("masks", data.len(), width, height, channels)?;
        let stack = Self { width, height, channels, data };
        stack.check_normalized()?;
        Ok(stack)
    }

    pub(crate) fn from_raw_unchecked(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        Self { width, height, channels, data }
    }

    pub fn check_normalized(&self) -> Result<()> {
        for (i, px) in self.data.chunks_exact(self.channels).enumerate() {
            if px.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
                return Err(Error::InvalidInput(format!("negative or non-finite probability at pixel {i}")));
            }
            let sum: f64 = px.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::InvalidInput(format!("pixel {i} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn uniform(width: usize, height: usize, channels: usize) -> Self {
        Self { width, height, channels, data: vec![1.0 / channels as f64; width * height * channels] }
    }

    /// One-hot masks from a label map; channel `num_planes` is the non-planar channel.
    pub fn one_hot(labels: &LabelMap) -> Self {
        let channels = labels.num_planes() + 1;
        let mut data = vec![0.0; labels.len() * channels];
        for (i, &l) in labels.raw().iter().enumerate() {
            data[i * channels + l] = 1.0;
        }
        Self { width: labels.width(), height: labels.height(), channels, data }
    }

    /// Per-pixel softmax of logits laid out like the stack.
    pub fn softmax(width: usize, height: usize, channels: usize, logits: &[f64]) -> Result<Self> {
        check_len("logits", logits.len(), width, height, channels)?;
        let mut data = logits.to_vec();
        for px in data.chunks_exact_mut(channels) {
            softmax_in_place(px);
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, index: usize) -> &[f64] {
        &self.data[index * self.channels..(index + 1) * self.channels]
    }

    pub fn pixel_mut(&mut self, index: usize) -> &mut [f64] {
        &mut self.data[index * self.channels..(index + 1) * self.channels]
    }

    /// Reorders channels: output channel `i` takes input channel `perm[i]`.
    pub fn permute_channels(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.channels);
        let mut data = vec![0.0; self.data.len()];
        for (dst, src) in data.chunks_exact_mut(self.channels).zip(self.data.chunks_exact(self.channels)) {
            for (i, &p) in perm.iter().enumerate() {
                dst[i] = src[p];
            }
        }
        Self { data, ..*self }
    }
}

pub(crate) fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
}

/// RGB image with `f64` channels in the 0..255 range.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        check_len("image", data.len(), width, height, 1)?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, color: [f64; 3]) -> Self {
        Self { width, height, data: vec![color; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn at(&self, index: usize) -> [f64; 3] {
        self.data[index]
    }

    pub fn set_at(&mut self, index: usize, color: [f64; 3]) {
        self.data[index] = color;
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }

    #[inline]
    pub fn color_distance_sq(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.data[a], self.data[b]);
        (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_map_marks_nonpositive_invalid() {
        let m = DepthMap::from_values(2, 2, vec![1.0, 0.0, -1.0, f64::NAN]).unwrap();
        assert_eq!(m.valid_count(), 1);
        assert_eq!(m.get(0, 0), Some(1.0));
        assert_eq!(m.get(1, 0), None);
        assert!(DepthMap::from_values(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn label_map_areas_and_relabel() {
        let m = LabelMap::from_raw(3, 1, 2, vec![0, 1, 2]).unwrap();
        assert_eq!(m.areas(), vec![1, 1]);
        assert_eq!(m.get(2, 0), None);
        let r = m.relabel(&[None, Some(0)], 1);
        assert_eq!(r.raw(), &[1, 0, 1]);
        assert!(LabelMap::from_raw(1, 1, 2, vec![3]).is_err());
    }

    #[test]
    fn boundary_band_covers_neighbors() {
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i % 10 >= 5)).collect();
        let m = LabelMap::from_raw(10, 2, 2, labels).unwrap();
        let band = m.boundary_band(1.0);
        let row: Vec<bool> = band[..10].to_vec();
        assert_eq!(row, vec![false, false, false, true, true, true, true, false, false, false]);
    }

    #[test]
    fn mask_stack_validates_normalization() {
        assert!(ProbMaskStack::new(1, 1, 2, vec![0.5, 0.5]).is_ok());
        assert!(ProbMaskStack::new(1, 1, 2, vec![0.5, 0.6]).is_err());
        assert!(ProbMaskStack::new(1, 1, 2, vec![-0.5, 1.5]).is_err());
        let s = ProbMaskStack::softmax(1, 1, 3, &[1000.0, 0.0, 1000.0]).unwrap();
        assert_eq!(s.pixel(0), &[0.5, 0.0, 0.5]);
    }
}

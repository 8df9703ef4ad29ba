use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{same_size, softmax_in_place, ProbMaskStack, RgbImage};

/// Largest pixel count handled by exact dense message passing in `Auto` mode.
pub const EXACT_PIXEL_LIMIT: usize = 128 * 96;

/// Probabilities are clamped into `[MIN_PROB, 1]` before taking logs.
const MIN_PROB: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DcrfMode {
    /// Exact up to [`EXACT_PIXEL_LIMIT`] pixels, truncated above.
    #[default]
    Auto,
    Exact,
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DcrfConfig {
    pub iterations: usize,
    pub spatial_sigma: f64,
    pub bilateral_spatial_sigma: f64,
    pub bilateral_color_sigma: f64,
    pub spatial_weight: f64,
    pub bilateral_weight: f64,
    pub mode: DcrfMode,
}

impl Default for DcrfConfig {
    fn default() -> Self {
        Self::test()
    }
}

impl DcrfConfig {
    /// Five mean-field iterations.
    pub fn train() -> Self {
        Self { iterations: 5, ..Self::test() }
    }

    /// Ten mean-field iterations.
    pub fn test() -> Self {
        Self {
            iterations: 10,
            spatial_sigma: 3.0,
            bilateral_spatial_sigma: 60.0,
            bilateral_color_sigma: 10.0,
            spatial_weight: 3.0,
            bilateral_weight: 10.0,
            mode: DcrfMode::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !pos(self.spatial_sigma) || !pos(self.bilateral_spatial_sigma) || !pos(self.bilateral_color_sigma) {
            return Err(Error::InvalidConfig("DCRF bandwidths must be positive".into()));
        }
        if !nonneg(self.spatial_weight) || !nonneg(self.bilateral_weight) {
            return Err(Error::InvalidConfig("DCRF kernel weights must be nonnegative".into()));
        }
        Ok(())
    }
}

/// One neighbor offset with its spatial Gaussian and sampling weight folded in.
#[derive(Clone, Copy)]
struct Tap {
    du: i64,
    dv: i64,
    weight: f64,
}

/// Offsets within `3 sigma`. Offsets inside the inner box of half-width
/// `2 * stride` are all taken; outside it only every `stride`-th offset is
/// taken, weighted by `stride^2` to preserve the kernel mass.
fn taps(sigma: f64) -> Vec<Tap> {
    let radius = (3.0 * sigma).ceil() as i64;
    let stride = ((sigma / 10.0).round() as i64).max(1);
    let inner = 2 * stride;
    let mut out = Vec::new();
    for dv in -radius..=radius {
        for du in -radius..=radius {
            let d2 = (du * du + dv * dv) as f64;
            if (du == 0 && dv == 0) || d2 > 9.0 * sigma * sigma {
                continue;
            }
            let sample = if du.abs() <= inner && dv.abs() <= inner {
                1.0
            } else if du % stride == 0 && dv % stride == 0 {
                (stride * stride) as f64
            } else {
                continue;
            };
            out.push(Tap { du, dv, weight: sample * (-d2 / (2.0 * sigma * sigma)).exp() });
        }
    }
    out
}

struct Kernels<'a> {
    image: &'a RgbImage,
    cfg: &'a DcrfConfig,
    width: usize,
    height: usize,
    channels: usize,
}

impl Kernels<'_> {
    fn pairwise(&self, i: usize, j: usize, d2: f64) -> f64 {
        let c = self.cfg;
        let s = c.spatial_weight * (-d2 / (2.0 * c.spatial_sigma * c.spatial_sigma)).exp();
        let b = c.bilateral_weight
            * (-d2 / (2.0 * c.bilateral_spatial_sigma * c.bilateral_spatial_sigma)
                - self.image.color_distance_sq(i, j) / (2.0 * c.bilateral_color_sigma * c.bilateral_color_sigma))
                .exp();
        s + b
    }

    /// Exact dense messages `m_i(l) = sum_{j != i} k(i, j) Q_j(l)`.
    fn exact(&self, q: &[f64], i: usize, out: &mut [f64]) {
        out.fill(0.0);
        let (ui, vi) = ((i % self.width) as f64, (i / self.width) as f64);
        for j in 0..self.width * self.height {
            if j == i {
                continue;
            }
            let (du, dv) = ((j % self.width) as f64 - ui, (j / self.width) as f64 - vi);
            let k = self.pairwise(i, j, du * du + dv * dv);
            for (o, qj) in out.iter_mut().zip(&q[j * self.channels..(j + 1) * self.channels]) {
                *o += k * qj;
            }
        }
    }

    fn truncated(&self, q: &[f64], i: usize, spatial: &[Tap], bilateral: &[Tap], out: &mut [f64]) {
        out.fill(0.0);
        let c = self.cfg;
        let two_color = 2.0 * c.bilateral_color_sigma * c.bilateral_color_sigma;
        let (ui, vi) = ((i % self.width) as i64, (i / self.width) as i64);
        let mut visit = |taps: &[Tap], bilateral: bool| {
            for t in taps {
                let (u, v) = (ui + t.du, vi + t.dv);
                if u < 0 || v < 0 || u >= self.width as i64 || v >= self.height as i64 {
                    continue;
                }
                let j = v as usize * self.width + u as usize;
                let k = if bilateral {
                    c.bilateral_weight * t.weight * (-self.image.color_distance_sq(i, j) / two_color).exp()
                } else {
                    c.spatial_weight * t.weight
                };
                for (o, qj) in out.iter_mut().zip(&q[j * self.channels..(j + 1) * self.channels]) {
                    *o += k * qj;
                }
            }
        };
        if c.spatial_weight > 0.0 {
            visit(spatial, false);
        }
        if c.bilateral_weight > 0.0 {
            visit(bilateral, true);
        }
    }
}

/// Mean-field refinement with a per-iteration observer receiving the
/// 1-based iteration index and the current distribution.
pub fn dcrf_refine_traced(
    masks: &ProbMaskStack,
    image: &RgbImage,
    cfg: &DcrfConfig,
    mut observe: impl FnMut(usize, &ProbMaskStack),
) -> Result<ProbMaskStack> {
    cfg.validate()?;
    same_size(masks.size(), image.size(), "masks and image")?;
    masks.check_normalized()?;
    if cfg.iterations == 0 {
        return Ok(masks.clone());
    }
    let (width, height) = masks.size();
    let channels = masks.channels();
    let n = width * height;
    let neg_unary: Vec<f64> = masks.data().iter().map(|m| m.clamp(MIN_PROB, 1.0).ln()).collect();

    let mut q = neg_unary.clone();
    for px in q.chunks_exact_mut(channels) {
        softmax_in_place(px);
    }
    let exact = match cfg.mode {
        DcrfMode::Exact => true,
        DcrfMode::Truncated => false,
        DcrfMode::Auto => n <= EXACT_PIXEL_LIMIT,
    };
    let spatial = if exact { Vec::new() } else { taps(cfg.spatial_sigma) };
    let bilateral = if exact { Vec::new() } else { taps(cfg.bilateral_spatial_sigma) };
    let kernels = Kernels { image, cfg, width, height, channels };

    let mut out = ProbMaskStack::from_raw_unchecked(width, height, channels, q.clone());
    for iter in 1..=cfg.iterations {
        let next: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut m = vec![0.0; channels];
                if exact {
                    kernels.exact(&q, i, &mut m);
                } else {
                    kernels.truncated(&q, i, &spatial, &bilateral, &mut m);
                }
                for (mi, u) in m.iter_mut().zip(&neg_unary[i * channels..(i + 1) * channels]) {
                    *mi += u;
                }
                softmax_in_place(&mut m);
                m
            })
            .collect();
        q = next;
        out = ProbMaskStack::from_raw_unchecked(width, height, channels, q.clone());
        observe(iter, &out);
    }
    Ok(out)
}

/// Fully connected CRF refinement of probabilistic masks: one spatial and one
/// bilateral Gaussian kernel, Potts compatibility, unary `-log(mask)`.
pub fn dcrf_refine(masks: &ProbMaskStack, image: &RgbImage, cfg: &DcrfConfig) -> Result<ProbMaskStack> {
    dcrf_refine_traced(masks, image, cfg, |_, _| {})
}

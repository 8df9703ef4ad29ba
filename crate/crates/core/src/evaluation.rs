//! Plane and pixel recall curves and depth accuracy statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{plane_depth, CameraIntrinsics, Plane};
use crate::maps::{same_size, DepthMap, LabelMap};

/// Minimum IoU (exclusive) for a prediction to match a ground-truth plane.
pub const IOU_GATE: f64 = 0.5;
/// Default edge-band half width, pixels.
pub const EDGE_BAND_PX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneMatch {
    pub gt_index: usize,
    pub pred_index: usize,
    pub iou: f64,
    /// Mean absolute difference of the two plane-induced depths over the
    /// intersection, meters; infinite when neither plane is defined there.
    pub mean_depth_diff: f64,
    /// Pixels in the intersection of the two masks.
    pub intersection: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Each prediction matches at most one ground-truth plane.
    #[default]
    OneToOne,
    /// A prediction may match several ground-truth planes.
    ManyToOne,
}

/// Matches ground-truth planes to predictions by mask IoU.
///
/// Ground-truth planes are visited by descending area (ties: lower index).
/// Each takes the available prediction with the highest IoU above
/// [`IOU_GATE`] (ties: lower prediction index).
pub fn match_planes(
    gt_labels: &LabelMap,
    gt_planes: &[Plane],
    pred_labels: &LabelMap,
    pred_planes: &[Plane],
    k: &CameraIntrinsics,
    mode: MatchMode,
) -> Result<Vec<PlaneMatch>> {
    same_size(gt_labels.size(), pred_labels.size(), "label maps")?;
    same_size(gt_labels.size(), (k.width, k.height), "label map and intrinsics")?;
    if gt_planes.len() != gt_labels.num_planes() || pred_planes.len() != pred_labels.num_planes() {
        return Err(Error::DimensionMismatch("plane lists do not match their label maps".into()));
    }
    let (ng, np) = (gt_planes.len(), pred_planes.len());
    let mut inter = vec![0usize; ng * np];
    for (g, p) in gt_labels.raw().iter().zip(pred_labels.raw()) {
        if *g < ng && *p < np {
            inter[g * np + p] += 1;
        }
    }
    let gt_area = gt_labels.areas();
    let pred_area = pred_labels.areas();
    let mut order: Vec<usize> = (0..ng).filter(|&g| gt_area[g] > 0).collect();
    order.sort_by(|&a, &b| gt_area[b].cmp(&gt_area[a]).then(a.cmp(&b)));

    let mut used = vec![false; np];
    let mut matches = Vec::new();
    for g in order {
        let mut best: Option<(usize, f64)> = None;
        for p in 0..np {
            let i = inter[g * np + p];
            if i == 0 || (mode == MatchMode::OneToOne && used[p]) {
                continue;
            }
            let iou = i as f64 / (gt_area[g] + pred_area[p] - i) as f64;
            if iou > IOU_GATE && best.is_none_or(|(_, b)| iou > b) {
                best = Some((p, iou));
            }
        }
        let Some((p, iou)) = best else { continue };
        used[p] = true;
        let w = k.width;
        let (mut sum, mut count) = (0.0, 0usize);
        for (idx, (gl, pl)) in gt_labels.raw().iter().zip(pred_labels.raw()).enumerate() {
            if *gl != g || *pl != p {
                continue;
            }
            let (u, v) = ((idx % w) as f64, (idx / w) as f64);
            if let (Some(a), Some(b)) = (plane_depth(&gt_planes[g], u, v, k), plane_depth(&pred_planes[p], u, v, k)) {
                sum += (a - b).abs();
                count += 1;
            }
        }
        let mean_depth_diff = if count == 0 { f64::INFINITY } else { sum / count as f64 };
        matches.push(PlaneMatch { gt_index: g, pred_index: p, iou, mean_depth_diff, intersection: inter[g * np + p] });
    }
    Ok(matches)
}

/// `0, 0.05, ..., 0.60` meters.
pub fn default_thresholds() -> Vec<f64> {
    (0..=12).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Mean depth difference thresholds, meters, strictly ascending.
    pub thresholds: Vec<f64>,
    pub match_mode: MatchMode,
    pub averaging: Averaging,
    /// Half width of the edge band, pixels.
    pub edge_band_px: f64,
    /// Ground-truth planes below this fraction of the image are treated as
    /// non-planar before matching.
    pub min_gt_area: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            thresholds: default_thresholds(),
            match_mode: MatchMode::OneToOne,
            averaging: Averaging::Micro,
            edge_band_px: EDGE_BAND_PX,
            min_gt_area: 0.01,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        check_thresholds(&self.thresholds).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if !(self.edge_band_px >= 0.0) || !self.edge_band_px.is_finite() {
            return Err(Error::InvalidConfig("edge_band_px must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.min_gt_area) {
            return Err(Error::InvalidConfig("min_gt_area must be within [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallCurve {
    pub thresholds: Vec<f64>,
    pub plane_recall: Vec<f64>,
    pub pixel_recall: Vec<f64>,
}

impl RecallCurve {
    /// Plane and pixel recall at the first threshold not below `t`.
    pub fn at(&self, t: f64) -> Option<(f64, f64)> {
        let i = self.thresholds.iter().position(|&x| x >= t - 1e-12)?;
        Some((self.plane_recall[i], self.pixel_recall[i]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Pool numerators and denominators over images.
    #[default]
    Micro,
    /// Average per-image curves.
    Macro,
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty()
        || thresholds.iter().any(|t| !t.is_finite() || *t < 0.0)
        || thresholds.windows(2).any(|w| !(w[0] < w[1]))
    {
        return Err(Error::InvalidInput("recall thresholds must be non-empty and strictly ascending".into()));
    }
    Ok(())
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accumulates recall counts over a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallAccumulator {
    thresholds: Vec<f64>,
    matched_planes: Vec<usize>,
    matched_pixels: Vec<usize>,
    gt_planes: usize,
    gt_pixels: usize,
    per_image: Vec<RecallCurve>,
}

impl RecallAccumulator {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        check_thresholds(&thresholds)?;
        let n = thresholds.len();
        Ok(Self {
            thresholds,
            matched_planes: vec![0; n],
            matched_pixels: vec![0; n],
            gt_planes: 0,
            gt_pixels: 0,
            per_image: Vec::new(),
        })
    }

    /// Adds one image. Ground-truth planes without pixels are not counted.
    pub fn add(&mut self, matches: &[PlaneMatch], gt_labels: &LabelMap) {
        let areas = gt_labels.areas();
        let planes = areas.iter().filter(|&&a| a > 0).count();
        let pixels = gt_labels.planar_count();
        let mut mp = vec![0; self.thresholds.len()];
        let mut mx = vec![0; self.thresholds.len()];
        for (i, &t) in self.thresholds.iter().enumerate() {
            for m in matches.iter().filter(|m| m.mean_depth_diff <= t) {
                mp[i] += 1;
                mx[i] += m.intersection;
            }
        }
        self.per_image.push(RecallCurve {
            thresholds: self.thresholds.clone(),
            plane_recall: mp.iter().map(|&m| ratio(m, planes)).collect(),
            pixel_recall: mx.iter().map(|&m| ratio(m, pixels)).collect(),
        });
        for i in 0..self.thresholds.len() {
            self.matched_planes[i] += mp[i];
            self.matched_pixels[i] += mx[i];
        }
        self.gt_planes += planes;
        self.gt_pixels += pixels;
    }

    pub fn images(&self) -> usize {
        self.per_image.len()
    }

    pub fn curve(&self, averaging: Averaging) -> RecallCurve {
        match averaging {
            Averaging::Micro => RecallCurve {
                thresholds: self.thresholds.clone(),
                plane_recall: self.matched_planes.iter().map(|&m| ratio(m, self.gt_planes)).collect(),
                pixel_recall: self.matched_pixels.iter().map(|&m| ratio(m, self.gt_pixels)).collect(),
            },
            Averaging::Macro => {
                let n = self.per_image.len().max(1) as f64;
                let mean = |f: fn(&RecallCurve) -> &Vec<f64>| {
                    (0..self.thresholds.len())
                        .map(|i| self.per_image.iter().map(|c| f(c)[i]).sum::<f64>() / n)
                        .collect()
                };
                RecallCurve {
                    thresholds: self.thresholds.clone(),
                    plane_recall: mean(|c| &c.plane_recall),
                    pixel_recall: mean(|c| &c.pixel_recall),
                }
            }
        }
    }
}

/// Recall curves of a single image. Comparisons with thresholds are inclusive.
pub fn recall_curves(matches: &[PlaneMatch], gt_labels: &LabelMap, thresholds: &[f64]) -> Result<RecallCurve> {
    let mut acc = RecallAccumulator::new(thresholds.to_vec())?;
    acc.add(matches, gt_labels);
    Ok(acc.curve(Averaging::Micro))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthStats {
    pub rel: f64,
    pub rel_sqr: f64,
    pub log10: f64,
    pub rmse_lin: f64,
    pub rmse_log: f64,
    /// Percentages of pixels with `max(d/d*, d*/d) < 1.25^k`.
    pub delta_1: f64,
    pub delta_2: f64,
    pub delta_3: f64,
    pub count: usize,
}

impl DepthStats {
    /// Metric names and values in table order.
    pub fn rows(&self) -> [(&'static str, f64); 8] {
        [
            ("rel", self.rel),
            ("rel_sqr", self.rel_sqr),
            ("log10", self.log10),
            ("rmse_lin", self.rmse_lin),
            ("rmse_log", self.rmse_log),
            ("delta_1", self.delta_1),
            ("delta_2", self.delta_2),
            ("delta_3", self.delta_3),
        ]
    }
}

/// Depth statistics over paired samples `(pred, gt)`.
pub fn depth_stats_pairs(pairs: &[(f64, f64)]) -> Result<DepthStats> {
    if pairs.is_empty() {
        return Err(Error::EmptyRegion("no valid depth pairs".into()));
    }
    let (mut rel, mut rel_sqr, mut log10, mut sq, mut sq_log) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut deltas = [0usize; 3];
    for (index, &(d, g)) in pairs.iter().enumerate() {
        for value in [d, g] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveDepth { index, value });
            }
        }
        let diff = d - g;
        rel += diff.abs() / g;
        rel_sqr += diff * diff / g;
        log10 += (d.log10() - g.log10()).abs();
        sq += diff * diff;
        sq_log += (d.ln() - g.ln()).powi(2);
        let ratio = (d / g).max(g / d);
        let mut bound = 1.0;
        for slot in deltas.iter_mut() {
            bound *= 1.25;
            if ratio < bound {
                *slot += 1;
            }
        }
    }
    let n = pairs.len() as f64;
    Ok(DepthStats {
        rel: rel / n,
        rel_sqr: rel_sqr / n,
        log10: log10 / n,
        rmse_lin: (sq / n).sqrt(),
        rmse_log: (sq_log / n).sqrt(),
        delta_1: 100.0 * deltas[0] as f64 / n,
        delta_2: 100.0 * deltas[1] as f64 / n,
        delta_3: 100.0 * deltas[2] as f64 / n,
        count: pairs.len(),
    })
}

fn masked_stats(pred: &DepthMap, gt: &DepthMap, keep: impl Fn(usize) -> bool) -> Result<DepthStats> {
    same_size(pred.size(), gt.size(), "depth maps")?;
    let pairs: Vec<(f64, f64)> =
        (0..gt.len()).filter(|&i| keep(i)).filter_map(|i| Some((pred.at(i)?, gt.at(i)?))).collect();
    depth_stats_pairs(&pairs)
}

/// Statistics over pixels valid in both maps.
pub fn depth_stats(pred: &DepthMap, gt: &DepthMap) -> Result<DepthStats> {
    masked_stats(pred, gt, |_| true)
}

/// Statistics over pixels on ground-truth planes.
pub fn planar_region_stats(pred: &DepthMap, gt: &DepthMap, gt_labels: &LabelMap) -> Result<DepthStats> {
    same_size(gt.size(), gt_labels.size(), "depth and labels")?;
    masked_stats(pred, gt, |i| gt_labels.at(i).is_some())
}

/// Statistics over pixels within `band_px` of a ground-truth label boundary.
pub fn edge_region_stats(pred: &DepthMap, gt: &DepthMap, gt_labels: &LabelMap, band_px: f64) -> Result<DepthStats> {
    same_size(gt.size(), gt_labels.size(), "depth and labels")?;
    let band = gt_labels.boundary_band(band_px);
    masked_stats(pred, gt, |i| band[i])
}

/// Relabels planes covering less than `min_fraction` of the image as
/// non-planar and drops them from the plane list, keeping the order of the rest.
pub fn drop_small_planes(labels: &LabelMap, planes: &[Plane], min_fraction: f64) -> Result<(LabelMap, Vec<Plane>)> {
    if planes.len() != labels.num_planes() {
        return Err(Error::DimensionMismatch("plane list does not match the label map".into()));
    }
    let min_area = min_fraction * labels.len() as f64;
    let areas = labels.areas();
    let mut mapping = vec![None; planes.len()];
    let mut kept = Vec::new();
    for (i, plane) in planes.iter().enumerate() {
        if areas[i] as f64 >= min_area && areas[i] > 0 {
            mapping[i] = Some(kept.len());
            kept.push(*plane);
        }
    }
    Ok((labels.relabel(&mapping, kept.len()), kept))
}

/// Piecewise-planar depth: plane depth on labeled pixels, `fallback` elsewhere.
pub fn compose_depth(labels: &LabelMap, planes: &[Plane], fallback: &DepthMap, k: &CameraIntrinsics) -> Result<DepthMap> {
    same_size(labels.size(), fallback.size(), "labels and fallback depth")?;
    same_size(labels.size(), (k.width, k.height), "labels and intrinsics")?;
    if planes.len() != labels.num_planes() {
        return Err(Error::DimensionMismatch("plane list does not match the label map".into()));
    }
    let mut out = fallback.clone();
    for i in 0..labels.len() {
        if let Some(l) = labels.at(i) {
            out.set_at(i, plane_depth(&planes[l], (i % k.width) as f64, (i / k.width) as f64, k));
        }
    }
    Ok(out)
}

/// Depth statistics over all valid pixels, ground-truth planar pixels and
/// the edge band. A region without pixels is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub all: Option<DepthStats>,
    pub planar: Option<DepthStats>,
    pub edge: Option<DepthStats>,
}

/// Dataset-level results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub images: usize,
    pub match_mode: MatchMode,
    pub averaging: Averaging,
    pub min_gt_area: f64,
    pub recall: RecallCurve,
    /// Depth samples are pooled over images.
    pub depth: RegionStats,
}

/// Ground truth or prediction of one image.
#[derive(Debug, Clone, Copy)]
pub struct PlanarView<'a> {
    pub labels: &'a LabelMap,
    pub planes: &'a [Plane],
    pub depth: &'a DepthMap,
}

/// Accumulates recall counts and pooled depth samples over images.
#[derive(Debug, Clone)]
pub struct Evaluator {
    cfg: EvalConfig,
    recall: RecallAccumulator,
    all: Vec<(f64, f64)>,
    planar: Vec<(f64, f64)>,
    edge: Vec<(f64, f64)>,
}

impl Evaluator {
    pub fn new(cfg: EvalConfig) -> Result<Self> {
        cfg.validate()?;
        let recall = RecallAccumulator::new(cfg.thresholds.clone())?;
        Ok(Self { cfg, recall, all: Vec::new(), planar: Vec::new(), edge: Vec::new() })
    }

    /// Adds one image and returns its plane matches.
    pub fn add(&mut self, gt: PlanarView, pred: PlanarView, k: &CameraIntrinsics) -> Result<Vec<PlaneMatch>> {
        same_size(gt.depth.size(), pred.depth.size(), "depth maps")?;
        same_size(gt.depth.size(), gt.labels.size(), "depth and labels")?;
        let (gt_labels, gt_planes) = drop_small_planes(gt.labels, gt.planes, self.cfg.min_gt_area)?;
        let matches = match_planes(&gt_labels, &gt_planes, pred.labels, pred.planes, k, self.cfg.match_mode)?;
        self.recall.add(&matches, &gt_labels);
        let band = gt.labels.boundary_band(self.cfg.edge_band_px);
        for i in 0..gt.depth.len() {
            let (Some(d), Some(g)) = (pred.depth.at(i), gt.depth.at(i)) else { continue };
            self.all.push((d, g));
            if gt.labels.at(i).is_some() {
                self.planar.push((d, g));
            }
            if band[i] {
                self.edge.push((d, g));
            }
        }
        Ok(matches)
    }

    pub fn finish(&self) -> Result<EvalSummary> {
        let stats = |pairs: &[(f64, f64)]| match depth_stats_pairs(pairs) {
            Ok(s) => Ok(Some(s)),
            Err(Error::EmptyRegion(_)) => Ok(None),
            Err(e) => Err(e),
        };
        Ok(EvalSummary {
            images: self.recall.images(),
            match_mode: self.cfg.match_mode,
            averaging: self.cfg.averaging,
            min_gt_area: self.cfg.min_gt_area,
            recall: self.recall.curve(self.cfg.averaging),
            depth: RegionStats { all: stats(&self.all)?, planar: stats(&self.planar)?, edge: stats(&self.edge)? },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use approx::assert_abs_diff_eq;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::centered(10.0, 10, 10).unwrap()
    }

    fn planes(n: usize) -> Vec<Plane> {
        (0..n).map(|i| Plane::from_param(Vec3::new(0.0, 0.0, 1.0 + i as f64)).unwrap()).collect()
    }

    /// Columns `0..a` label 0, `a..b` label 1, rest unlabeled.
    fn columns(a: usize, b: usize) -> LabelMap {
        let raw = (0..100).map(|i| if i % 10 < a { 0 } else if i % 10 < b { 1 } else { 2 }).collect();
        LabelMap::from_raw(10, 10, 2, raw).unwrap()
    }

    #[test]
    fn identical_inputs_match_perfectly() {
        let l = columns(4, 8);
        let m = match_planes(&l, &planes(2), &l, &planes(2), &k(), MatchMode::OneToOne).unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.iter().all(|m| m.iou == 1.0 && m.mean_depth_diff == 0.0));
        let c = recall_curves(&m, &l, &default_thresholds()).unwrap();
        assert_eq!(c.thresholds.len(), 13);
        assert!(c.plane_recall.iter().chain(&c.pixel_recall).all(|&r| r == 1.0));
    }

    #[test]
    fn iou_gate() {
        // pred covers 4 of 10 GT columns and nothing else: IoU 0.4
        let gt = LabelMap::from_raw(10, 10, 1, vec![0; 100]).unwrap();
        let pred = LabelMap::from_raw(10, 10, 1, (0..100).map(|i| usize::from(i % 10 >= 4)).collect()).unwrap();
        assert!(match_planes(&gt, &planes(1), &pred, &planes(1), &k(), MatchMode::OneToOne).unwrap().is_empty());
    }

    #[test]
    fn one_to_one_prefers_larger_gt() {
        // under many-to-one a shared prediction may serve two GT planes; one-to-one gives it to the larger
        let gt = columns(6, 10);
        let pred = LabelMap::from_raw(10, 10, 1, vec![0; 100]).unwrap();
        let gp = planes(2);
        let pp = planes(1);
        let m = match_planes(&gt, &gp, &pred, &pp, &k(), MatchMode::OneToOne).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].gt_index, 0);
        assert_abs_diff_eq!(m[0].iou, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn threshold_counting() {
        let l = columns(5, 10);
        let m = [
            PlaneMatch { gt_index: 0, pred_index: 0, iou: 1.0, mean_depth_diff: 0.12, intersection: 50 },
        ];
        let c = recall_curves(&m, &l, &default_thresholds()).unwrap();
        for (t, r) in c.thresholds.iter().zip(&c.plane_recall) {
            assert_eq!(*r, if *t < 0.12 { 0.0 } else { 0.5 });
        }
        assert!(c.plane_recall.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn small_planes_are_dropped() {
        // label 0: 95 px, label 1: 5 px
        let raw = (0..100).map(|i| usize::from(i >= 95)).collect();
        let l = LabelMap::from_raw(10, 10, 2, raw).unwrap();
        let (l2, p2) = drop_small_planes(&l, &planes(2), 0.06).unwrap();
        assert_eq!(p2, vec![planes(2)[0]]);
        assert_eq!(l2.areas(), vec![95]);
        assert_eq!(l2.at(99), None);
        let (l3, _) = drop_small_planes(&l, &planes(2), 0.05).unwrap();
        assert_eq!(l3, l);
    }

    #[test]
    fn depth_stats_formulas() {
        let s = depth_stats_pairs(&[(1.1, 1.0)]).unwrap();
        assert_abs_diff_eq!(s.rel, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(s.rel_sqr, 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(s.rmse_lin, 0.1, epsilon = 1e-12);
        assert_eq!(s.delta_1, 100.0);
        let s = depth_stats_pairs(&[(2.6, 2.0)]).unwrap();
        assert_eq!((s.delta_1, s.delta_2, s.delta_3), (0.0, 100.0, 100.0));
        assert!(matches!(depth_stats_pairs(&[(0.0, 1.0)]), Err(Error::NonPositiveDepth { .. })));
    }

    #[test]
    fn region_stats() {
        let gt = DepthMap::from_values(10, 10, vec![2.0; 100]).unwrap();
        let pred = DepthMap::from_values(10, 10, (0..100).map(|i| if i % 10 < 5 { 2.2 } else { 3.0 }).collect())
            .unwrap();
        let half = columns(5, 5);
        let s = planar_region_stats(&pred, &gt, &half).unwrap();
        assert_eq!(s.count, 50);
        assert_abs_diff_eq!(s.rel, 0.1, epsilon = 1e-12);
        let none = LabelMap::unlabeled(10, 10, 1);
        assert!(matches!(planar_region_stats(&pred, &gt, &none), Err(Error::EmptyRegion(_))));
        let all = LabelMap::from_raw(10, 10, 1, vec![0; 100]).unwrap();
        assert_eq!(planar_region_stats(&pred, &gt, &all).unwrap(), depth_stats(&pred, &gt).unwrap());
    }

    #[test]
    fn evaluator_pools_images() {
        let l = columns(4, 8);
        let p = planes(2);
        let fallback = DepthMap::from_values(10, 10, vec![5.0; 100]).unwrap();
        let depth = compose_depth(&l, &p, &fallback, &k()).unwrap();
        let mut e = Evaluator::new(EvalConfig::default()).unwrap();
        let view = PlanarView { labels: &l, planes: &p, depth: &depth };
        e.add(view, view, &k()).unwrap();
        e.add(view, view, &k()).unwrap();
        let s = e.finish().unwrap();
        assert_eq!(s.images, 2);
        assert!(s.recall.plane_recall.iter().all(|&r| r == 1.0));
        let all = s.depth.all.unwrap();
        assert_eq!((all.count, all.rel, all.delta_1), (200, 0.0, 100.0));
        assert_eq!(s.depth.planar.unwrap().count, 160);
        assert!(s.depth.edge.is_some());
    }

    #[test]
    fn evaluator_reports_empty_regions_as_none() {
        let l = LabelMap::unlabeled(10, 10, 0);
        let depth = DepthMap::from_values(10, 10, vec![2.0; 100]).unwrap();
        let view = PlanarView { labels: &l, planes: &[], depth: &depth };
        let mut e = Evaluator::new(EvalConfig::default()).unwrap();
        e.add(view, view, &k()).unwrap();
        let s = e.finish().unwrap();
        assert!(s.depth.all.is_some());
        assert!(s.depth.planar.is_none());
        assert!(s.depth.edge.is_none());
    }
}

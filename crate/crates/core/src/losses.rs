//! Training objectives on planes, segmentation masks and depth, with analytic
//! gradients, plus gradient-descent plane refinement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Plane, Vec3, MIN_RAY_DOT};
use crate::maps::{same_size, DepthMap, LabelMap, ProbMaskStack};

/// Default plane capacity per image.
pub const DEFAULT_CAPACITY: usize = 10;

/// Up to `capacity` planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneSet {
    planes: Vec<Plane>,
    capacity: usize,
}

impl PlaneSet {
    pub fn new(planes: Vec<Plane>, capacity: usize) -> Result<Self> {
        if planes.is_empty() || planes.len() > capacity {
            return Err(Error::InvalidInput(format!("{} planes for capacity {capacity}", planes.len())));
        }
        Ok(Self { planes, capacity })
    }

    /// Plane set with capacity `max(DEFAULT_CAPACITY, planes.len())`.
    pub fn with_default_capacity(planes: Vec<Plane>) -> Result<Self> {
        let capacity = DEFAULT_CAPACITY.max(planes.len());
        Self::new(planes, capacity)
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn params(&self) -> Vec<Vec3> {
        self.planes.iter().map(|p| p.param()).collect()
    }
}

/// A loss value, its per-element mean and its gradients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport<G> {
    pub value: f64,
    /// `value` divided by the number of summed terms (planes or pixels).
    pub mean: f64,
    pub gradients: G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChamferMode {
    /// Sum over ground-truth planes of the distance to the nearest prediction.
    #[default]
    Directional,
    /// Adds the sum over predictions of the distance to the nearest ground truth.
    Symmetric,
}

/// Index and squared distance of the nearest candidate; ties go to the lowest index.
fn nearest(x: &Vec3, candidates: &[Vec3]) -> (usize, f64) {
    candidates
        .iter()
        .enumerate()
        .map(|(j, c)| (j, (x - c).norm_squared()))
        .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
}

/// Sum in ascending order so the total does not depend on term order.
fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Order-agnostic plane parameter loss; gradients are w.r.t. the predicted
/// parameters.
pub fn chamfer_plane_loss(gt: &[Vec3], pred: &[Vec3], mode: ChamferMode) -> Result<LossReport<Vec<Vec3>>> {
    if gt.is_empty() || pred.is_empty() {
        return Err(Error::InvalidInput("chamfer loss needs non-empty plane sets".into()));
    }
    let mut grad = vec![Vec3::zeros(); pred.len()];
    let mut terms = Vec::with_capacity(gt.len() + pred.len());
    for g in gt {
        let (j, d2) = nearest(g, pred);
        terms.push(d2);
        grad[j] += 2.0 * (pred[j] - g);
    }
    if mode == ChamferMode::Symmetric {
        for (j, p) in pred.iter().enumerate() {
            let (i, d2) = nearest(p, gt);
            terms.push(d2);
            grad[j] += 2.0 * (p - gt[i]);
        }
    }
    let count = terms.len();
    let value = sorted_sum(terms);
    Ok(LossReport { value, mean: value / count as f64, gradients: grad })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentationForm {
    /// `-sum_p log M_{y_p}`.
    #[default]
    CrossEntropy,
    /// `sum_p log(1 - M_{y_p})`, with `1 - M` clamped at [`PRINTED_FORM_FLOOR`].
    Printed,
}

/// Lower clamp of `1 - M` in the printed form.
pub const PRINTED_FORM_FLOOR: f64 = 1e-12;
/// Lower clamp of `M` in the cross-entropy form.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Segmentation loss of probabilistic masks; gradients are w.r.t. the
/// pre-softmax logits that produced the masks.
pub fn segmentation_loss(masks: &ProbMaskStack, gt: &LabelMap, form: SegmentationForm) -> Result<LossReport<Vec<f64>>> {
    same_size(masks.size(), gt.size(), "masks and labels")?;
    let c = masks.channels();
    if gt.num_planes() + 1 > c {
        return Err(Error::LabelOutOfRange { label: gt.num_planes(), max: c - 1 });
    }
    let mut grad = masks.data().to_vec();
    let mut value = 0.0;
    for (i, &y) in gt.raw().iter().enumerate() {
        if y >= c {
            return Err(Error::LabelOutOfRange { label: y, max: c - 1 });
        }
        let m = masks.pixel(i);
        let g = &mut grad[i * c..(i + 1) * c];
        match form {
            SegmentationForm::CrossEntropy => {
                value -= m[y].max(PROBABILITY_FLOOR).ln();
                g[y] -= 1.0;
            }
            SegmentationForm::Printed => {
                let rest = 1.0 - m[y];
                if rest > PRINTED_FORM_FLOOR {
                    value += rest.ln();
                    // d log(1 - M_y) / dz_k = -M_y (delta_yk - M_k) / (1 - M_y)
                    let s = m[y] / rest;
                    for (k, gk) in g.iter_mut().enumerate() {
                        *gk = s * (m[k] - if k == y { 1.0 } else { 0.0 });
                    }
                } else {
                    value += PRINTED_FORM_FLOOR.ln();
                    g.fill(0.0);
                }
            }
        }
    }
    let n = gt.len().max(1);
    Ok(LossReport { value, mean: value / n as f64, gradients: grad })
}

/// [`segmentation_loss`] evaluated on logits laid out like a mask stack.
pub fn segmentation_loss_logits(
    width: usize,
    height: usize,
    channels: usize,
    logits: &[f64],
    gt: &LabelMap,
    form: SegmentationForm,
) -> Result<LossReport<Vec<f64>>> {
    let masks = ProbMaskStack::softmax(width, height, channels, logits)?;
    segmentation_loss(&masks, gt, form)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthLossConfig {
    /// Residual charged where a channel's depth is undefined, meters.
    pub undefined_residual: f64,
}

impl Default for DepthLossConfig {
    fn default() -> Self {
        Self { undefined_residual: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthGradients {
    /// Per plane parameter vector.
    pub planes: Vec<Vec3>,
    /// Per pixel of the non-planar depthmap.
    pub nonplanar: Vec<f64>,
    /// Per mask value, laid out like the mask stack.
    pub masks: Vec<f64>,
}

/// Depth along a ray with unit `z` and its gradient w.r.t. `P`, where
/// `z = |P|^2 / (P·r)`.
#[inline]
fn plane_depth_and_grad(p: &Vec3, r: &Vec3) -> Option<(f64, Vec3)> {
    let pr = p.dot(r);
    let d2 = p.norm_squared();
    if pr <= MIN_RAY_DOT * d2.sqrt() {
        return None;
    }
    Some((d2 / pr, p * (2.0 / pr) - r * (d2 / (pr * pr))))
}

/// Probability-weighted squared depth error over the plane channels and the
/// non-planar channel. Pixels with invalid ground truth are skipped.
pub fn weighted_depth_loss(
    masks: &ProbMaskStack,
    planes: &[Vec3],
    nonplanar: &DepthMap,
    gt: &DepthMap,
    k: &CameraIntrinsics,
    cfg: &DepthLossConfig,
) -> Result<LossReport<DepthGradients>> {
    same_size(masks.size(), gt.size(), "masks and ground-truth depth")?;
    same_size(nonplanar.size(), gt.size(), "non-planar and ground-truth depth")?;
    same_size(gt.size(), (k.width, k.height), "depth and intrinsics")?;
    let c = masks.channels();
    if c != planes.len() + 1 {
        return Err(Error::DimensionMismatch(format!("{c} mask channels for {} planes", planes.len())));
    }
    let w = k.width;
    let undefined_sq = cfg.undefined_residual * cfg.undefined_residual;
    let mut grads = DepthGradients {
        planes: vec![Vec3::zeros(); planes.len()],
        nonplanar: vec![0.0; gt.len()],
        masks: vec![0.0; masks.data().len()],
    };
    let mut value = 0.0;
    let mut count = 0usize;
    for i in 0..gt.len() {
        let Some(target) = gt.at(i) else { continue };
        count += 1;
        let m = masks.pixel(i);
        let r = k.ray((i % w) as f64, (i / w) as f64);
        let gm = &mut grads.masks[i * c..(i + 1) * c];
        for (j, p) in planes.iter().enumerate() {
            match plane_depth_and_grad(p, &r) {
                Some((z, dz)) => {
                    let res = z - target;
                    value += m[j] * res * res;
                    gm[j] = res * res;
                    grads.planes[j] += dz * (2.0 * m[j] * res);
                }
                None => {
                    value += m[j] * undefined_sq;
                    gm[j] = undefined_sq;
                }
            }
        }
        let np = c - 1;
        match nonplanar.at(i) {
            Some(z) => {
                let res = z - target;
                value += m[np] * res * res;
                gm[np] = res * res;
                grads.nonplanar[i] = 2.0 * m[np] * res;
            }
            None => {
                value += m[np] * undefined_sq;
                gm[np] = undefined_sq;
            }
        }
    }
    Ok(LossReport { value, mean: value / count.max(1) as f64, gradients: grads })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub steps: usize,
    pub step_size: f64,
    /// Maximum step halvings when a step increases the loss.
    pub max_halvings: usize,
    pub depth: DepthLossConfig,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { steps: 200, step_size: 0.25, max_halvings: 20, depth: DepthLossConfig::default() }
    }
}

/// Fixed-step gradient descent on the pixel-mean weighted depth loss w.r.t.
/// the plane parameters. A step that would increase the loss is halved up to
/// `max_halvings` times and skipped if it still does; descent stops at the
/// first skipped step.
pub fn refine_planes(
    init: &PlaneSet,
    masks: &ProbMaskStack,
    nonplanar: &DepthMap,
    gt: &DepthMap,
    k: &CameraIntrinsics,
    cfg: &RefineConfig,
) -> Result<PlaneSet> {
    if !(cfg.step_size.is_finite() && cfg.step_size > 0.0) {
        return Err(Error::InvalidConfig("step size must be positive".into()));
    }
    let loss = |params: &[Vec3]| weighted_depth_loss(masks, params, nonplanar, gt, k, &cfg.depth);
    let mut params = init.params();
    let mut current = loss(&params)?;
    for _ in 0..cfg.steps {
        let grad = &current.gradients.planes;
        if grad.iter().all(|g| *g == Vec3::zeros()) {
            break;
        }
        let mut eta = cfg.step_size;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let cand: Vec<Vec3> = params.iter().zip(grad).map(|(p, g)| p - g * eta).collect();
            if cand.iter().all(|p| Plane::from_param(*p).is_ok()) {
                let report = loss(&cand)?;
                if report.mean <= current.mean {
                    accepted = Some((cand, report));
                    break;
                }
            }
            eta *= 0.5;
        }
        match accepted {
            Some((cand, report)) => {
                params = cand;
                current = report;
            }
            None => break,
        }
    }
    let planes = params.into_iter().map(Plane::from_param).collect::<Result<Vec<_>>>()?;
    PlaneSet::new(planes, init.capacity())
}

/// Finite-difference validation of the analytic gradients.
pub mod gradcheck {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use serde::Serialize;

    use super::*;

    /// Central-difference step.
    pub const STEP: f64 = 1e-5;
    /// Largest accepted relative error.
    pub const TOLERANCE: f64 = 1e-5;

    /// Central differences of `f` at `x`.
    pub fn central_differences(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        let mut x = x.to_vec();
        (0..x.len())
            .map(|i| {
                let orig = x[i];
                x[i] = orig + h;
                let plus = f(&x);
                x[i] = orig - h;
                let minus = f(&x);
                x[i] = orig;
                (plus - minus) / (2.0 * h)
            })
            .collect()
    }

    /// `max |a - b| / max(max |a|, max |b|)`, or 0 when both vanish.
    pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
        let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let scale = a.iter().chain(b).map(|x| x.abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            0.0
        } else {
            diff / scale
        }
    }

    fn flatten(v: &[Vec3]) -> Vec<f64> {
        v.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
    }

    fn unflatten(x: &[f64]) -> Vec<Vec3> {
        x.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
    }

    fn random_param(rng: &mut ChaCha8Rng) -> Vec3 {
        Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(0.5..4.0))
    }

    /// Chamfer instance whose nearest-neighbor choices are separated by a margin.
    pub fn chamfer_instance(rng: &mut ChaCha8Rng, mode: ChamferMode) -> (Vec<Vec3>, Vec<Vec3>) {
        loop {
            let gt: Vec<Vec3> = (0..rng.random_range(1..=6)).map(|_| random_param(rng)).collect();
            let pred: Vec<Vec3> = (0..rng.random_range(1..=10)).map(|_| random_param(rng)).collect();
            let margin = |x: &Vec3, set: &[Vec3]| {
                let mut d: Vec<f64> = set.iter().map(|c| (x - c).norm()).collect();
                d.sort_by(f64::total_cmp);
                if d.len() < 2 {
                    f64::INFINITY
                } else {
                    d[1] - d[0]
                }
            };
            let ok_gt = gt.iter().all(|g| margin(g, &pred) > 1e-2);
            let ok_pred = mode == ChamferMode::Directional || pred.iter().all(|p| margin(p, &gt) > 1e-2);
            if ok_gt && ok_pred {
                return (gt, pred);
            }
        }
    }

    pub fn check_chamfer(gt: &[Vec3], pred: &[Vec3], mode: ChamferMode) -> Result<f64> {
        let analytic = flatten(&chamfer_plane_loss(gt, pred, mode)?.gradients);
        let fd = central_differences(&flatten(pred), STEP, |x| {
            chamfer_plane_loss(gt, &unflatten(x), mode).expect("non-empty").value
        });
        Ok(relative_error(&analytic, &fd))
    }

    pub struct SegmentationInstance {
        pub width: usize,
        pub height: usize,
        pub channels: usize,
        pub logits: Vec<f64>,
        pub labels: LabelMap,
    }

    pub fn segmentation_instance(rng: &mut ChaCha8Rng) -> SegmentationInstance {
        let (width, height, channels) = (rng.random_range(1..=5), rng.random_range(1..=4), rng.random_range(2..=11));
        let n = width * height;
        let logits = (0..n * channels).map(|_| rng.random_range(-3.0..3.0)).collect();
        let labels = (0..n).map(|_| rng.random_range(0..channels)).collect();
        let labels = LabelMap::from_raw(width, height, channels - 1, labels).expect("labels in range");
        SegmentationInstance { width, height, channels, logits, labels }
    }

    pub fn check_segmentation(inst: &SegmentationInstance, form: SegmentationForm) -> Result<f64> {
        let (w, h, c) = (inst.width, inst.height, inst.channels);
        let analytic = segmentation_loss_logits(w, h, c, &inst.logits, &inst.labels, form)?.gradients;
        let fd = central_differences(&inst.logits, STEP, |x| {
            segmentation_loss_logits(w, h, c, x, &inst.labels, form).expect("valid instance").value
        });
        Ok(relative_error(&analytic, &fd))
    }

    pub struct DepthInstance {
        pub intrinsics: CameraIntrinsics,
        pub masks: ProbMaskStack,
        pub planes: Vec<Vec3>,
        pub nonplanar: DepthMap,
        pub gt: DepthMap,
    }

    /// Small frame whose planes all face the camera over every pixel.
    pub fn depth_instance(rng: &mut ChaCha8Rng) -> DepthInstance {
        let (w, h) = (rng.random_range(2..=8), rng.random_range(2..=6));
        let k = CameraIntrinsics::centered(rng.random_range(4.0..10.0), w, h).expect("valid intrinsics");
        let planes: Vec<Vec3> = (0..rng.random_range(1..=4))
            .map(|_| {
                let n = Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), 1.0).normalize();
                n * rng.random_range(1.0..4.0)
            })
            .collect();
        let c = planes.len() + 1;
        let logits: Vec<f64> = (0..w * h * c).map(|_| rng.random_range(-2.0..2.0)).collect();
        let masks = ProbMaskStack::softmax(w, h, c, &logits).expect("sized logits");
        let nonplanar = (0..w * h).map(|_| if rng.random_bool(0.9) { rng.random_range(0.5..5.0) } else { 0.0 }).collect();
        let gt = (0..w * h).map(|_| if rng.random_bool(0.85) { rng.random_range(0.5..5.0) } else { 0.0 }).collect();
        DepthInstance {
            intrinsics: k,
            masks,
            planes,
            nonplanar: DepthMap::from_values(w, h, nonplanar).expect("sized"),
            gt: DepthMap::from_values(w, h, gt).expect("sized"),
        }
    }

    /// Relative errors of the plane, non-planar and mask gradients.
    pub fn check_depth(inst: &DepthInstance) -> Result<[f64; 3]> {
        let cfg = DepthLossConfig::default();
        let k = &inst.intrinsics;
        let report = weighted_depth_loss(&inst.masks, &inst.planes, &inst.nonplanar, &inst.gt, k, &cfg)?;
        let (w, h) = inst.gt.size();

        let fd_planes = central_differences(&flatten(&inst.planes), STEP, |x| {
            weighted_depth_loss(&inst.masks, &unflatten(x), &inst.nonplanar, &inst.gt, k, &cfg).expect("valid").value
        });
        let valid: Vec<usize> = (0..w * h).filter(|&i| inst.nonplanar.at(i).is_some()).collect();
        let x0: Vec<f64> = valid.iter().map(|&i| inst.nonplanar.at(i).expect("valid")).collect();
        let fd_nonplanar = central_differences(&x0, STEP, |x| {
            let mut np = inst.nonplanar.clone();
            for (&i, &z) in valid.iter().zip(x) {
                np.set_at(i, Some(z));
            }
            weighted_depth_loss(&inst.masks, &inst.planes, &np, &inst.gt, k, &cfg).expect("valid").value
        });
        let analytic_nonplanar: Vec<f64> = valid.iter().map(|&i| report.gradients.nonplanar[i]).collect();
        // masks enter linearly; perturb raw values without renormalizing
        let c = inst.masks.channels();
        let fd_masks = central_differences(inst.masks.data(), STEP, |x| {
            let m = ProbMaskStack::from_raw_unchecked(w, h, c, x.to_vec());
            weighted_depth_loss(&m, &inst.planes, &inst.nonplanar, &inst.gt, k, &cfg).expect("valid").value
        });
        Ok([
            relative_error(&flatten(&report.gradients.planes), &fd_planes),
            relative_error(&analytic_nonplanar, &fd_nonplanar),
            relative_error(&report.gradients.masks, &fd_masks),
        ])
    }

    /// Worst relative error per loss over a batch of random instances.
    #[derive(Debug, Clone, Copy, PartialEq, Serialize)]
    pub struct GradCheckSummary {
        pub instances: usize,
        pub chamfer: f64,
        pub chamfer_symmetric: f64,
        pub segmentation_ce: f64,
        pub segmentation_printed: f64,
        pub depth_planes: f64,
        pub depth_nonplanar: f64,
        pub depth_masks: f64,
    }

    impl GradCheckSummary {
        pub fn worst(&self) -> f64 {
            [
                self.chamfer,
                self.chamfer_symmetric,
                self.segmentation_ce,
                self.segmentation_printed,
                self.depth_planes,
                self.depth_nonplanar,
                self.depth_masks,
            ]
            .into_iter()
            .fold(0.0, f64::max)
        }
    }

    pub fn run(seed: u64, instances: usize) -> Result<GradCheckSummary> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = GradCheckSummary {
            instances,
            chamfer: 0.0,
            chamfer_symmetric: 0.0,
            segmentation_ce: 0.0,
            segmentation_printed: 0.0,
            depth_planes: 0.0,
            depth_nonplanar: 0.0,
            depth_masks: 0.0,
        };
        for _ in 0..instances {
            let (gt, pred) = chamfer_instance(&mut rng, ChamferMode::Directional);
            s.chamfer = s.chamfer.max(check_chamfer(&gt, &pred, ChamferMode::Directional)?);
            let (gt, pred) = chamfer_instance(&mut rng, ChamferMode::Symmetric);
            s.chamfer_symmetric = s.chamfer_symmetric.max(check_chamfer(&gt, &pred, ChamferMode::Symmetric)?);
            let inst = segmentation_instance(&mut rng);
            s.segmentation_ce = s.segmentation_ce.max(check_segmentation(&inst, SegmentationForm::CrossEntropy)?);
            s.segmentation_printed = s.segmentation_printed.max(check_segmentation(&inst, SegmentationForm::Printed)?);
            let [p, n, m] = check_depth(&depth_instance(&mut rng))?;
            s.depth_planes = s.depth_planes.max(p);
            s.depth_nonplanar = s.depth_nonplanar.max(n);
            s.depth_masks = s.depth_masks.max(m);
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn chamfer_exact_match_is_zero() {
        let gt = [v(0.0, 0.0, 1.0), v(1.0, 0.0, 0.0)];
        let pred = [v(1.0, 0.0, 0.0), v(0.0, 0.0, 1.0)];
        let r = chamfer_plane_loss(&gt, &pred, ChamferMode::Directional).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.gradients.iter().all(|g| *g == Vec3::zeros()));
    }

    #[test]
    fn chamfer_picks_nearest() {
        let r = chamfer_plane_loss(&[v(0.0, 0.0, 1.0)], &[v(0.0, 0.0, 2.0), v(0.0, 0.0, 1.2)], ChamferMode::Directional)
            .unwrap();
        // oracle: min over all pairs
        let oracle = [1.0f64, 0.2f64.powi(2)].into_iter().fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(r.value, oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(r.value, 0.04, epsilon = 1e-12);
        assert_eq!(r.gradients[0], Vec3::zeros());
        assert!(r.gradients[1].norm() > 0.0);
    }

    #[test]
    fn unmatched_predictions_are_free() {
        let gt = [v(0.3, -0.2, 2.0)];
        let mut pred: Vec<Vec3> = (0..9).map(|i| v(50.0 + i as f64, 50.0, 50.0)).collect();
        pred.push(gt[0]);
        assert_eq!(chamfer_plane_loss(&gt, &pred, ChamferMode::Directional).unwrap().value, 0.0);
    }

    #[test]
    fn symmetric_adds_reverse_term() {
        let gt = [v(0.0, 0.0, 1.0)];
        let pred = [v(0.0, 0.0, 2.0), v(0.0, 0.0, 1.2)];
        let r = chamfer_plane_loss(&gt, &pred, ChamferMode::Symmetric).unwrap();
        assert_abs_diff_eq!(r.value, 0.04 + 1.0 + 0.04, epsilon = 1e-12);
    }

    #[test]
    fn cross_entropy_values() {
        let masks = ProbMaskStack::new(1, 1, 2, vec![0.5, 0.5]).unwrap();
        let gt = LabelMap::from_raw(1, 1, 1, vec![0]).unwrap();
        let r = segmentation_loss(&masks, &gt, SegmentationForm::CrossEntropy).unwrap();
        assert_abs_diff_eq!(r.value, 2f64.ln(), epsilon = 1e-15);

        let masks = ProbMaskStack::uniform(4, 3, 11);
        let gt = LabelMap::from_raw(4, 3, 10, (0..12).map(|i| i % 11).collect()).unwrap();
        let r = segmentation_loss(&masks, &gt, SegmentationForm::CrossEntropy).unwrap();
        assert_abs_diff_eq!(r.mean, 11f64.ln(), epsilon = 1e-12);

        let one_hot = ProbMaskStack::one_hot(&gt);
        assert_eq!(segmentation_loss(&one_hot, &gt, SegmentationForm::CrossEntropy).unwrap().value, 0.0);
    }

    #[test]
    fn printed_form_value() {
        let masks = ProbMaskStack::new(1, 1, 2, vec![0.25, 0.75]).unwrap();
        let gt = LabelMap::from_raw(1, 1, 1, vec![1]).unwrap();
        let r = segmentation_loss(&masks, &gt, SegmentationForm::Printed).unwrap();
        assert_abs_diff_eq!(r.value, 0.25f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn label_out_of_range() {
        let masks = ProbMaskStack::uniform(1, 1, 2);
        let gt = LabelMap::from_raw(1, 1, 3, vec![2]).unwrap();
        assert!(matches!(
            segmentation_loss(&masks, &gt, SegmentationForm::CrossEntropy),
            Err(Error::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn depth_loss_single_pixel() {
        let k = CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 1, 1).unwrap();
        let masks = ProbMaskStack::new(1, 1, 2, vec![0.3, 0.7]).unwrap();
        let nonplanar = DepthMap::from_values(1, 1, vec![3.0]).unwrap();
        let gt = DepthMap::from_values(1, 1, vec![2.5]).unwrap();
        let r = weighted_depth_loss(&masks, &[v(0.0, 0.0, 2.0)], &nonplanar, &gt, &k, &DepthLossConfig::default())
            .unwrap();
        assert_abs_diff_eq!(r.value, 0.3 * 0.25 + 0.7 * 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(r.gradients.nonplanar[0], 2.0 * 0.7 * 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.gradients.masks[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn nonplanar_mass_zeroes_plane_gradient() {
        let k = CameraIntrinsics::centered(5.0, 4, 3).unwrap();
        let labels = LabelMap::from_raw(4, 3, 1, vec![1; 12]).unwrap();
        let masks = ProbMaskStack::one_hot(&labels);
        let gt = DepthMap::from_values(4, 3, vec![2.0; 12]).unwrap();
        let r = weighted_depth_loss(&masks, &[v(0.1, 0.2, 7.0)], &gt, &gt, &k, &DepthLossConfig::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.gradients.planes[0], Vec3::zeros());
    }

    #[test]
    fn undefined_depth_uses_clamped_residual() {
        let k = CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 1, 1).unwrap();
        let masks = ProbMaskStack::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
        let gt = DepthMap::from_values(1, 1, vec![2.0]).unwrap();
        // plane x = 1 is parallel to the central ray
        let r = weighted_depth_loss(&masks, &[v(1.0, 0.0, 0.0)], &gt, &gt, &k, &DepthLossConfig::default()).unwrap();
        assert_eq!(r.value, 100.0);
        assert_eq!(r.gradients.planes[0], Vec3::zeros());
    }

    #[test]
    fn refine_recovers_offset() {
        let k = CameraIntrinsics::centered(20.0, 16, 12).unwrap();
        let truth = 2.0;
        let gt = DepthMap::from_values(16, 12, vec![truth; 192]).unwrap();
        let labels = LabelMap::from_raw(16, 12, 1, vec![0; 192]).unwrap();
        let masks = ProbMaskStack::one_hot(&labels);
        let init = PlaneSet::with_default_capacity(vec![Plane::from_param(v(0.0, 0.0, truth + 0.05)).unwrap()]).unwrap();
        let out = refine_planes(&init, &masks, &gt, &gt, &k, &RefineConfig::default()).unwrap();
        // oracle: for a fixed frontal normal the loss is a convex parabola in d with minimum at the truth
        assert!((out.planes()[0].offset() - truth).abs() < 1e-3);

        let exact = PlaneSet::with_default_capacity(vec![Plane::from_param(v(0.0, 0.0, truth)).unwrap()]).unwrap();
        assert_eq!(refine_planes(&exact, &masks, &gt, &gt, &k, &RefineConfig::default()).unwrap(), exact);
    }

    #[test]
    fn zero_mass_plane_is_unchanged() {
        let k = CameraIntrinsics::centered(20.0, 8, 6).unwrap();
        let gt = DepthMap::from_values(8, 6, vec![2.0; 48]).unwrap();
        let labels = LabelMap::from_raw(8, 6, 2, vec![0; 48]).unwrap();
        let masks = ProbMaskStack::one_hot(&labels);
        let planes = vec![Plane::from_param(v(0.0, 0.0, 2.1)).unwrap(), Plane::from_param(v(0.5, 0.0, 3.0)).unwrap()];
        let init = PlaneSet::with_default_capacity(planes).unwrap();
        let out = refine_planes(&init, &masks, &gt, &gt, &k, &RefineConfig::default()).unwrap();
        assert_eq!(out.planes()[1], init.planes()[1]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let s = gradcheck::run(3, 10).unwrap();
        assert!(s.worst() < 1e-5, "{s:?}");
    }
}

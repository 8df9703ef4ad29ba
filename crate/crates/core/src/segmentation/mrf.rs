use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{backproject, CameraIntrinsics, Plane, Point3Set};
use crate::manhattan::{snap_to_manhattan, ManhattanConfig, ManhattanFrame};
use crate::maps::{same_size, DepthMap, LabelMap, RgbImage};

use super::maxflow::FlowGraph;

/// Pairwise scale applied along edges aligned with a projected Manhattan axis.
pub const MANHATTAN_EDGE_DISCOUNT: f64 = 0.2;
/// Alignment tolerance for the Manhattan edge discount, degrees.
pub const MANHATTAN_EDGE_ALIGN_DEG: f64 = 10.0;

/// Tolerance below which a move is not considered an improvement.
const MOVE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MrfSolver {
    #[default]
    Icm,
    AlphaExpansion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MrfConfig {
    /// Point-to-plane distances are truncated here, meters.
    pub unary_truncation: f64,
    /// Constant cost of the non-planar label, meters.
    pub nonplanar_unary: f64,
    pub pairwise_weight: f64,
    /// Intensity bandwidth of the contrast-sensitive pairwise term.
    pub edge_sigma: f64,
    pub solver: MrfSolver,
    pub max_sweeps: usize,
    /// Seeds the label visiting order of alpha-expansion.
    pub rng_seed: u64,
}

impl Default for MrfConfig {
    fn default() -> Self {
        Self {
            unary_truncation: 0.3,
            nonplanar_unary: 0.05,
            pairwise_weight: 5.0,
            edge_sigma: 10.0,
            solver: MrfSolver::Icm,
            max_sweeps: 10,
            rng_seed: 0,
        }
    }
}

impl MrfConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.unary_truncation) || !pos(self.nonplanar_unary) || !pos(self.edge_sigma) {
            return Err(Error::InvalidConfig("MRF truncation, non-planar cost and edge sigma must be positive".into()));
        }
        if !(self.pairwise_weight.is_finite() && self.pairwise_weight >= 0.0) {
            return Err(Error::InvalidConfig("MRF pairwise weight must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Grid labeling energy with a per-pixel unary table and Potts pairwise
/// weights on the 4-neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub struct MrfProblem {
    width: usize,
    height: usize,
    num_labels: usize,
    unary: Vec<f64>,
    right: Vec<f64>,
    down: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrfSolution {
    pub labels: Vec<usize>,
    pub energy: f64,
    /// Energy after initialization and after every sweep.
    pub energy_trace: Vec<f64>,
}

impl MrfProblem {
    /// `unary[p * num_labels + l]`; `right[p]` weights the edge to `p + 1` and
    /// `down[p]` the edge to `p + width` (ignored on the last column and row).
    pub fn new(
        width: usize,
        height: usize,
        num_labels: usize,
        unary: Vec<f64>,
        right: Vec<f64>,
        down: Vec<f64>,
    ) -> Result<Self> {
        let n = width * height;
        if num_labels == 0 || unary.len() != n * num_labels || right.len() != n || down.len() != n {
            return Err(Error::DimensionMismatch("MRF tables do not match the grid".into()));
        }
        if right.iter().chain(&down).any(|w| !(w.is_finite() && *w >= 0.0)) || unary.iter().any(|u| !u.is_finite()) {
            return Err(Error::InvalidInput("MRF costs must be finite with nonnegative pairwise weights".into()));
        }
        Ok(Self { width, height, num_labels, unary, right, down })
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn unary(&self, p: usize, l: usize) -> f64 {
        self.unary[p * self.num_labels + l]
    }

    /// Edges as `(p, q, weight)` in scan order.
    fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.width;
        (0..self.len()).flat_map(move |p| {
            let r = (p % w + 1 < w).then(|| (p, p + 1, self.right[p]));
            let d = (p / w + 1 < self.height).then(|| (p, p + w, self.down[p]));
            r.into_iter().chain(d)
        })
    }

    pub fn energy(&self, labels: &[usize]) -> f64 {
        let unary: f64 = labels.iter().enumerate().map(|(p, &l)| self.unary(p, l)).sum();
        let pairwise: f64 = self.edges().filter(|(p, q, _)| labels[*p] != labels[*q]).map(|(_, _, w)| w).sum();
        unary + pairwise
    }

    pub fn unary_argmin(&self) -> Vec<usize> {
        (0..self.len())
            .map(|p| {
                (0..self.num_labels).fold(0, |best, l| if self.unary(p, l) < self.unary(p, best) { l } else { best })
            })
            .collect()
    }

    /// Neighbors of `p` with their edge weights.
    fn neighbors(&self, p: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (w, u, v) = (self.width, p % self.width, p / self.width);
        let left = (u > 0).then(|| (p - 1, self.right[p - 1]));
        let right = (u + 1 < w).then(|| (p + 1, self.right[p]));
        let up = (v > 0).then(|| (p - w, self.down[p - w]));
        let down = (v + 1 < self.height).then(|| (p + w, self.down[p]));
        left.into_iter().chain(right).chain(up).chain(down)
    }

    /// Energy terms touching `p` when it takes label `l`.
    pub fn local_cost(&self, labels: &[usize], p: usize, l: usize) -> f64 {
        self.unary(p, l) + self.neighbors(p).filter(|(q, _)| labels[*q] != l).map(|(_, w)| w).sum::<f64>()
    }

    /// Iterated conditional modes in scan order. A pixel moves only when its
    /// local cost strictly decreases, so the energy never increases.
    pub fn icm(&self, init: Vec<usize>, max_sweeps: usize) -> MrfSolution {
        let mut labels = init;
        let mut trace = vec![self.energy(&labels)];
        for _ in 0..max_sweeps {
            let mut changed = false;
            for p in 0..self.len() {
                let current = self.local_cost(&labels, p, labels[p]);
                let (best, cost) = (0..self.num_labels)
                    .map(|l| (l, self.local_cost(&labels, p, l)))
                    .fold((labels[p], current), |b, c| if c.1 < b.1 - MOVE_EPS { c } else { b });
                if best != labels[p] && cost < current - MOVE_EPS {
                    labels[p] = best;
                    changed = true;
                }
            }
            let e = self.energy(&labels);
            debug_assert!(e <= trace[trace.len() - 1] + 1e-9);
            trace.push(e);
            if !changed {
                break;
            }
        }
        MrfSolution { energy: trace[trace.len() - 1], labels, energy_trace: trace }
    }

    /// Optimal expansion move for label `alpha` via a minimum s-t cut.
    fn expand(&self, labels: &[usize], alpha: usize) -> Vec<usize> {
        let n = self.len();
        let (s, t) = (n, n + 1);
        // e0: cost of keeping the label, e1: cost of switching to alpha
        let e0: Vec<f64> = (0..n).map(|p| self.unary(p, labels[p])).collect();
        let mut e1: Vec<f64> = (0..n).map(|p| self.unary(p, alpha)).collect();
        let mut g = FlowGraph::new(n + 2);
        for (p, q, w) in self.edges() {
            let a = if labels[p] != labels[q] { w } else { 0.0 };
            let b = if labels[p] != alpha { w } else { 0.0 };
            let c = if labels[q] != alpha { w } else { 0.0 };
            // E(xp, xq) = a + (c - a) xp + (0 - c) xq + (b + c - a)(1 - xp) xq
            e1[p] += c - a;
            e1[q] -= c;
            g.add_edge(p, q, (b + c - a).max(0.0), 0.0);
        }
        for p in 0..n {
            let m = e0[p].min(e1[p]);
            g.add_edge(s, p, e1[p] - m, 0.0);
            g.add_edge(p, t, e0[p] - m, 0.0);
        }
        g.max_flow(s, t);
        let source = g.source_side(s);
        (0..n).map(|p| if source[p] { labels[p] } else { alpha }).collect()
    }

    /// Alpha-expansion with a seeded label order per sweep; stops when a full
    /// sweep brings no improvement.
    pub fn alpha_expansion(&self, init: Vec<usize>, max_sweeps: usize, seed: u64) -> MrfSolution {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labels = init;
        let mut energy = self.energy(&labels);
        let mut trace = vec![energy];
        let mut order: Vec<usize> = (0..self.num_labels).collect();
        for _ in 0..max_sweeps {
            order.shuffle(&mut rng);
            let mut improved = false;
            for &alpha in &order {
                let candidate = self.expand(&labels, alpha);
                let e = self.energy(&candidate);
                if e < energy - MOVE_EPS {
                    labels = candidate;
                    energy = e;
                    improved = true;
                }
            }
            trace.push(energy);
            if !improved {
                break;
            }
        }
        MrfSolution { labels, energy, energy_trace: trace }
    }

    /// Exhaustive minimum over all labelings; only for tiny instances.
    pub fn brute_force(&self) -> MrfSolution {
        let n = self.len();
        let total = (self.num_labels as u128).checked_pow(n as u32).expect("instance too large");
        assert!(total <= 50_000_000, "instance too large for exhaustive search");
        let mut labels = vec![0; n];
        let mut best = (labels.clone(), self.energy(&labels));
        for _ in 1..total {
            for l in labels.iter_mut() {
                *l += 1;
                if *l < self.num_labels {
                    break;
                }
                *l = 0;
            }
            let e = self.energy(&labels);
            if e < best.1 {
                best = (labels.clone(), e);
            }
        }
        MrfSolution { energy: best.1, energy_trace: vec![best.1], labels: best.0 }
    }

    pub fn solve(&self, solver: MrfSolver, max_sweeps: usize, seed: u64) -> MrfSolution {
        let init = self.unary_argmin();
        match solver {
            MrfSolver::Icm => self.icm(init, max_sweeps),
            MrfSolver::AlphaExpansion => self.alpha_expansion(init, max_sweeps, seed),
        }
    }
}

fn check_inputs(depth: &DepthMap, image: &RgbImage, planes: &[Plane], k: &CameraIntrinsics) -> Result<()> {
    if planes.is_empty() {
        return Err(Error::InvalidInput("MRF segmentation needs at least one plane hypothesis".into()));
    }
    same_size(depth.size(), image.size(), "depth and image")?;
    same_size(depth.size(), (k.width, k.height), "depth and intrinsics")
}

/// Builds the labeling energy over planes `0..K` plus the non-planar label `K`.
///
/// `edge_scale(p, q)` multiplies the pairwise weight of each edge.
pub fn build_mrf_problem(
    depth: &DepthMap,
    image: &RgbImage,
    planes: &[Plane],
    k: &CameraIntrinsics,
    cfg: &MrfConfig,
    edge_scale: impl Fn(usize, usize) -> f64,
) -> Result<MrfProblem> {
    cfg.validate()?;
    check_inputs(depth, image, planes, k)?;
    let (w, h) = depth.size();
    let labels = planes.len() + 1;
    let equations: Vec<_> = planes.iter().map(|p| p.equation()).collect();
    let mut unary = vec![0.0; w * h * labels];
    for p in 0..w * h {
        let Some(z) = depth.at(p) else { continue };
        let x = backproject((p % w) as f64, (p / w) as f64, z, k)?;
        let row = &mut unary[p * labels..(p + 1) * labels];
        for (i, eq) in equations.iter().enumerate() {
            row[i] = eq.distance(&x).min(cfg.unary_truncation);
        }
        row[planes.len()] = cfg.nonplanar_unary;
    }
    let two_sigma_sq = 2.0 * cfg.edge_sigma * cfg.edge_sigma;
    let weight = |p: usize, q: usize| {
        cfg.pairwise_weight * (-image.color_distance_sq(p, q) / two_sigma_sq).exp() * edge_scale(p, q)
    };
    let right = (0..w * h).map(|p| if p % w + 1 < w { weight(p, p + 1) } else { 0.0 }).collect();
    let down = (0..w * h).map(|p| if p / w + 1 < h { weight(p, p + w) } else { 0.0 }).collect();
    MrfProblem::new(w, h, labels, unary, right, down)
}

/// MRF labeling of a depthmap against plane hypotheses, with its energy trace.
pub fn mrf_segment_detailed(
    depth: &DepthMap,
    image: &RgbImage,
    planes: &[Plane],
    k: &CameraIntrinsics,
    cfg: &MrfConfig,
) -> Result<(LabelMap, MrfSolution)> {
    let problem = build_mrf_problem(depth, image, planes, k, cfg, |_, _| 1.0)?;
    let sol = problem.solve(cfg.solver, cfg.max_sweeps, cfg.rng_seed);
    let (w, h) = depth.size();
    Ok((LabelMap::from_raw(w, h, planes.len(), sol.labels.clone())?, sol))
}

/// MRF labeling with truncated point-to-plane unaries and a contrast-sensitive
/// Potts pairwise term. Label `K` is non-planar.
pub fn mrf_segment(
    depth: &DepthMap,
    image: &RgbImage,
    planes: &[Plane],
    k: &CameraIntrinsics,
    cfg: &MrfConfig,
) -> Result<LabelMap> {
    Ok(mrf_segment_detailed(depth, image, planes, k, cfg)?.0)
}

/// Whether a label boundary through image point `(u, v)` with image direction
/// `dir` runs along the projection of a Manhattan axis.
fn aligned_with_axes(frame: &ManhattanFrame, k: &CameraIntrinsics, u: f64, v: f64, dir: (f64, f64)) -> bool {
    let x = (u - k.cx) / k.fx;
    let y = (v - k.cy) / k.fy;
    let cos_tol = MANHATTAN_EDGE_ALIGN_DEG.to_radians().cos();
    frame.axes().iter().any(|a| {
        // image-space direction of a 3D line with direction `a` through the pixel's ray
        let du = k.fx * (a.x - x * a.z);
        let dv = k.fy * (a.y - y * a.z);
        let norm = du.hypot(dv);
        norm > 1e-9 && (du * dir.0 + dv * dir.1).abs() / norm >= cos_tol
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MwsOutput {
    pub labels: LabelMap,
    /// Hypotheses after snapping to the Manhattan frame.
    pub planes: Vec<Plane>,
}

/// Manhattan-world variant of [`mrf_segment`].
///
/// Hypotheses are snapped to `frame` using the backprojected depth points;
/// pairwise weights are scaled by [`MANHATTAN_EDGE_DISCOUNT`] on edges whose
/// label boundary would run within [`MANHATTAN_EDGE_ALIGN_DEG`] of a
/// projected Manhattan axis.
pub fn mws_segment(
    depth: &DepthMap,
    image: &RgbImage,
    planes: &[Plane],
    k: &CameraIntrinsics,
    frame: &ManhattanFrame,
    cfg: &MrfConfig,
) -> Result<MwsOutput> {
    check_inputs(depth, image, planes, k)?;
    let w = depth.width();
    let points: Point3Set = (0..depth.len())
        .filter_map(|p| depth.at(p).map(|z| k.ray((p % w) as f64, (p / w) as f64) * z))
        .collect();
    let snapped = snap_to_manhattan(planes, frame, &points, &ManhattanConfig::default());
    let scale = |p: usize, q: usize| {
        let (u, v) = ((p % w) as f64, (p / w) as f64);
        // a horizontal neighbor pair is separated by a vertical boundary and vice versa
        let aligned = if q == p + 1 {
            aligned_with_axes(frame, k, u + 0.5, v, (0.0, 1.0))
        } else {
            aligned_with_axes(frame, k, u, v + 0.5, (1.0, 0.0))
        };
        if aligned {
            MANHATTAN_EDGE_DISCOUNT
        } else {
            1.0
        }
    };
    let problem = build_mrf_problem(depth, image, &snapped, k, cfg, scale)?;
    let sol = problem.solve(cfg.solver, cfg.max_sweeps, cfg.rng_seed);
    Ok(MwsOutput { labels: LabelMap::from_raw(w, depth.height(), snapped.len(), sol.labels)?, planes: snapped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use rand::{Rng, SeedableRng};

    fn random_problem(rng: &mut ChaCha8Rng, w: usize, h: usize, labels: usize) -> MrfProblem {
        let n = w * h;
        let unary = (0..n * labels).map(|_| rng.random_range(0.0..1.0)).collect();
        let right = (0..n).map(|_| rng.random_range(0.0..0.6)).collect();
        let down = (0..n).map(|_| rng.random_range(0.0..0.6)).collect();
        MrfProblem::new(w, h, labels, unary, right, down).unwrap()
    }

    #[test]
    fn icm_reaches_single_pixel_local_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let pb = random_problem(&mut rng, 32, 24, 4);
            let sol = pb.icm(pb.unary_argmin(), 1000);
            assert!(sol.energy_trace.windows(2).all(|w| w[1] <= w[0]));
            let mut labels = sol.labels.clone();
            for p in 0..pb.len() {
                let orig = labels[p];
                for l in 0..pb.num_labels() {
                    labels[p] = l;
                    assert!(pb.energy(&labels) >= sol.energy - 1e-9);
                }
                labels[p] = orig;
            }
        }
    }

    #[test]
    fn expansion_move_is_optimal_among_expansions() {
        // brute force over all expansion moves of a 3x3 grid
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let pb = random_problem(&mut rng, 3, 3, 3);
            let labels: Vec<usize> = (0..9).map(|_| rng.random_range(0..3)).collect();
            let alpha = rng.random_range(0..3);
            let moved = pb.expand(&labels, alpha);
            let mut best = f64::INFINITY;
            for mask in 0u32..512 {
                let cand: Vec<usize> = (0..9).map(|p| if mask >> p & 1 == 1 { alpha } else { labels[p] }).collect();
                best = best.min(pb.energy(&cand));
            }
            assert!((pb.energy(&moved) - best).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_pairwise_is_unary_argmin() {
        let k = CameraIntrinsics::centered(20.0, 16, 12).unwrap();
        let planes = [
            Plane::from_param(Vec3::new(0.0, 0.0, 2.0)).unwrap(),
            Plane::from_param(Vec3::new(0.0, 0.0, 2.5)).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let depth = DepthMap::from_values(16, 12, (0..192).map(|_| rng.random_range(1.8..2.7)).collect()).unwrap();
        let image = RgbImage::filled(16, 12, [0.0; 3]);
        let cfg = MrfConfig { pairwise_weight: 0.0, ..Default::default() };
        let labels = mrf_segment(&depth, &image, &planes, &k, &cfg).unwrap();
        for p in 0..192 {
            let z = depth.at(p).unwrap();
            let costs = [(z - 2.0).abs().min(0.3), (z - 2.5).abs().min(0.3), 0.05];
            let expected = (0..3).fold(0, |b, l| if costs[l] < costs[b] { l } else { b });
            assert_eq!(labels.raw()[p], expected);
        }
    }

    #[test]
    fn single_close_hypothesis_labels_everything() {
        let k = CameraIntrinsics::centered(20.0, 16, 12).unwrap();
        let planes = [Plane::from_param(Vec3::new(0.0, 0.0, 2.0)).unwrap()];
        let depth = DepthMap::from_values(16, 12, (0..192).map(|i| 2.0 + 0.0001 * (i % 7) as f64).collect()).unwrap();
        let image = RgbImage::filled(16, 12, [0.0; 3]);
        let labels = mrf_segment(&depth, &image, &planes, &k, &MrfConfig::default()).unwrap();
        assert!(labels.raw().iter().all(|&l| l == 0));
    }

    #[test]
    fn empty_hypotheses_rejected() {
        let k = CameraIntrinsics::centered(20.0, 4, 4).unwrap();
        let depth = DepthMap::from_values(4, 4, vec![1.0; 16]).unwrap();
        let image = RgbImage::filled(4, 4, [0.0; 3]);
        assert!(mrf_segment(&depth, &image, &[], &k, &MrfConfig::default()).is_err());
    }
}

//! Sequential RANSAC plane extraction with coverage-driven termination.
//!
//! Each round draws 3-point minimal samples from the points not yet covered,
//! scores hypotheses by their uncovered inlier count, refits the winner by
//! trimmed total least squares, and marks its inliers covered. Already covered
//! points stay eligible as inliers of later planes but never count toward new
//! coverage.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    depth_normals, depth_points, fit_plane_equation, plane_through, CameraIntrinsics, Plane, PlaneEquation, Point3Set, Vec3,
};
use crate::maps::DepthMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacConfig {
    /// Maximum point-to-plane distance of an inlier, meters.
    pub inlier_threshold: f64,
    /// Stop once this fraction of points is covered.
    pub coverage_target: f64,
    pub iterations_per_plane: usize,
    pub min_inliers: usize,
    pub rng_seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self { inlier_threshold: 0.05, coverage_target: 0.90, iterations_per_plane: 500, min_inliers: 30, rng_seed: 0 }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inlier_threshold > 0.0) || !self.inlier_threshold.is_finite() {
            return Err(Error::InvalidInput("inlier_threshold must be positive".into()));
        }
        if !(self.coverage_target > 0.0 && self.coverage_target <= 1.0) {
            return Err(Error::InvalidInput("coverage_target must be in (0, 1]".into()));
        }
        if self.iterations_per_plane == 0 || self.min_inliers == 0 {
            return Err(Error::InvalidInput("iterations_per_plane and min_inliers must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedPlane {
    pub equation: PlaneEquation,
    /// Indices into the input point set, ascending.
    pub inlier_indices: Vec<usize>,
    pub rms_residual: f64,
    /// Inliers that were not covered by an earlier plane.
    pub new_coverage: usize,
}

impl ExtractedPlane {
    /// Closest-point encoding; fails for planes through the origin.
    pub fn plane(&self) -> Result<Plane> {
        self.equation.to_plane()
    }
}

/// Fraction of points that are inliers of at least one plane.
pub fn coverage(planes: &[ExtractedPlane], num_points: usize) -> f64 {
    if num_points == 0 {
        return 0.0;
    }
    let mut covered = vec![false; num_points];
    for p in planes {
        for &i in &p.inlier_indices {
            covered[i] = true;
        }
    }
    covered.iter().filter(|&&c| c).count() as f64 / num_points as f64
}

/// Point-to-plane distance test, plus an orientation test for points with a
/// known surface normal.
#[derive(Clone, Copy)]
struct InlierTest<'a> {
    threshold: f64,
    normals: Option<&'a [Option<Vec3>]>,
    min_cos: f64,
    grid: Option<PixelGrid<'a>>,
}

/// Image positions of the points, for connectivity.
#[derive(Clone, Copy)]
struct PixelGrid<'a> {
    pixels: &'a [usize],
    width: usize,
    height: usize,
    stride: usize,
}

impl PixelGrid<'_> {
    /// Largest 8-connected component of `subset` on the sampling grid; ties go
    /// to the component containing the lowest index. Returns ascending indices.
    fn largest_component(&self, subset: &[usize]) -> Vec<usize> {
        let mut slot = vec![usize::MAX; self.width * self.height];
        for &i in subset {
            slot[self.pixels[i]] = i;
        }
        let s = self.stride as isize;
        let mut best: Vec<usize> = Vec::new();
        for &start in subset {
            if slot[self.pixels[start]] == usize::MAX {
                continue;
            }
            let mut comp = vec![start];
            slot[self.pixels[start]] = usize::MAX;
            let mut head = 0;
            while head < comp.len() {
                let p = self.pixels[comp[head]];
                head += 1;
                let (u, v) = ((p % self.width) as isize, (p / self.width) as isize);
                for (du, dv) in [(-s, -s), (0, -s), (s, -s), (-s, 0), (s, 0), (-s, s), (0, s), (s, s)] {
                    let (x, y) = (u + du, v + dv);
                    if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
                        continue;
                    }
                    let q = y as usize * self.width + x as usize;
                    if slot[q] != usize::MAX {
                        comp.push(slot[q]);
                        slot[q] = usize::MAX;
                    }
                }
            }
            if comp.len() > best.len() {
                best = comp;
            }
        }
        best.sort_unstable();
        best
    }
}

impl InlierTest<'_> {
    #[inline]
    fn accepts(&self, points: &Point3Set, i: usize, eq: &PlaneEquation) -> bool {
        if eq.distance(&points.points[i]) > self.threshold {
            return false;
        }
        match self.normals.and_then(|n| n[i]) {
            Some(n) => n.dot(&eq.normal).abs() >= self.min_cos,
            None => true,
        }
    }
}

pub fn extract_planes(points: &Point3Set, cfg: &RansacConfig) -> Result<Vec<ExtractedPlane>> {
    let test = InlierTest { threshold: cfg.inlier_threshold, normals: None, min_cos: 0.0, grid: None };
    extract_with(points, cfg, test)
}

/// Like [`extract_planes`], but a point with a known normal is an inlier only
/// if that normal is within `max_angle_deg` of the plane normal (either sign).
pub fn extract_planes_with_normals(
    points: &Point3Set,
    normals: &[Option<Vec3>],
    max_angle_deg: f64,
    cfg: &RansacConfig,
) -> Result<Vec<ExtractedPlane>> {
    if normals.len() != points.len() {
        return Err(Error::DimensionMismatch(format!("{} normals for {} points", normals.len(), points.len())));
    }
    if !(max_angle_deg > 0.0 && max_angle_deg <= 90.0) {
        return Err(Error::InvalidInput(format!("normal angle must be in (0, 90] degrees, got {max_angle_deg}")));
    }
    let test = InlierTest {
        threshold: cfg.inlier_threshold,
        normals: Some(normals),
        min_cos: max_angle_deg.to_radians().cos(),
        grid: None,
    };
    extract_with(points, cfg, test)
}

/// Normal-consistent extraction on backprojected pixels where each plane's
/// inliers are further restricted to their largest 8-connected component on
/// the sampling grid, and the plane is refitted to that component.
fn extract_depth_grid(
    points: &Point3Set,
    normals: &[Option<Vec3>],
    pixels: &[usize],
    size: (usize, usize),
    cfg: &ExtractConfig,
) -> Result<Vec<ExtractedPlane>> {
    let grid = PixelGrid { pixels, width: size.0, height: size.1, stride: cfg.stride };
    let test = InlierTest {
        threshold: cfg.ransac.inlier_threshold,
        normals: Some(normals),
        min_cos: cfg.normal_angle_deg.to_radians().cos(),
        grid: Some(grid),
    };
    extract_with(points, &cfg.ransac, test)
}

fn extract_with(points: &Point3Set, cfg: &RansacConfig, test: InlierTest) -> Result<Vec<ExtractedPlane>> {
    cfg.validate()?;
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 points, got {}", points.len())));
    }
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut covered = vec![false; n];
    let mut covered_count = 0usize;
    let mut planes: Vec<ExtractedPlane> = Vec::new();
    // points whose hypothesis failed the connectivity check; they are no
    // longer sampled but still count as uncovered
    let mut exhausted = vec![false; n];
    let mut failures = 0;

    while (covered_count as f64) < cfg.coverage_target * n as f64 {
        let uncovered: Vec<usize> = (0..n).filter(|&i| !covered[i] && !exhausted[i]).collect();
        if uncovered.len() < 3 || uncovered.len() < cfg.min_inliers {
            break;
        }
        let Some(hypothesis) = best_hypothesis(points, &uncovered, cfg, test, &mut rng) else { break };
        let Some(mut fit) = refine(points, &hypothesis, test) else { break };

        let mut inliers: Vec<usize> = (0..n).filter(|&i| test.accepts(points, i, &fit.equation)).collect();
        if let Some(grid) = test.grid {
            for _ in 0..CONNECTED_REFITS {
                let comp = grid.largest_component(&inliers);
                let Ok(f) = fit_plane_equation(&points.subset(&comp)) else { break };
                fit = f;
                inliers = (0..n).filter(|&i| test.accepts(points, i, &fit.equation)).collect();
            }
            inliers = grid.largest_component(&inliers);
        }
        let new_coverage = inliers.iter().filter(|&&i| !covered[i]).count();
        if new_coverage < cfg.min_inliers {
            if test.grid.is_none() || failures == MAX_FAILED_ROUNDS {
                break;
            }
            failures += 1;
            for &i in &uncovered {
                if test.accepts(points, i, &hypothesis) || test.accepts(points, i, &fit.equation) {
                    exhausted[i] = true;
                }
            }
            continue;
        }
        for &i in &inliers {
            if !covered[i] {
                covered[i] = true;
                covered_count += 1;
            }
        }
        planes.push(ExtractedPlane {
            equation: fit.equation,
            inlier_indices: inliers,
            rms_residual: fit.rms_residual,
            new_coverage,
        });
    }

    if planes.is_empty() {
        return Err(Error::NoPlaneFound { min_inliers: cfg.min_inliers });
    }
    // stable: equal counts keep extraction order
    planes.sort_by(|a, b| b.inlier_indices.len().cmp(&a.inlier_indices.len()));
    Ok(planes)
}

/// Plane hypothesis extraction from a depth map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub ransac: RansacConfig,
    /// Pixel sampling step in both directions.
    pub stride: usize,
    pub max_planes: usize,
    /// Half-width of the window used to estimate surface normals, pixels.
    pub normal_radius: usize,
    /// Largest angle between a point's normal and its plane's, degrees.
    pub normal_angle_deg: f64,
}

/// Component refits per extracted depth plane.
const CONNECTED_REFITS: usize = 2;
/// Final assignment and refit passes over all extracted depth planes.
const REASSIGN_ROUNDS: usize = 2;
/// Rounds of depth extraction allowed to fail the connectivity check.
const MAX_FAILED_ROUNDS: usize = 10;

/// Default hypothesis budget; twice the ground-truth plane capacity.
pub const MAX_HYPOTHESES: usize = 2 * crate::losses::DEFAULT_CAPACITY;

/// Default coverage target of depth-map hypothesis extraction.
pub const EXTRACT_COVERAGE: f64 = 0.99;

impl Default for ExtractConfig {
    fn default() -> Self {
        // small planes matter for hypotheses, so search until nearly every point is covered
        let ransac = RansacConfig { coverage_target: EXTRACT_COVERAGE, ..RansacConfig::default() };
        Self { ransac, stride: 2, max_planes: MAX_HYPOTHESES, normal_radius: 3, normal_angle_deg: 15.0 }
    }
}

impl ExtractConfig {
    pub fn validate(&self) -> Result<()> {
        self.ransac.validate()?;
        if self.stride == 0 || self.max_planes == 0 {
            return Err(Error::InvalidInput("stride and max_planes must be positive".into()));
        }
        if !(self.normal_angle_deg > 0.0 && self.normal_angle_deg <= 90.0) {
            return Err(Error::InvalidInput("normal_angle_deg must be in (0, 90]".into()));
        }
        Ok(())
    }
}

/// Plane hypotheses of a depth map, largest support first.
///
/// Backprojects every `stride`-th valid pixel, estimates each one's normal
/// from its depth neighborhood, runs normal-consistent sequential RANSAC,
/// drops planes through the camera center and keeps at most `max_planes`.
pub fn extract_depth_planes(depth: &DepthMap, k: &CameraIntrinsics, cfg: &ExtractConfig) -> Result<Vec<Plane>> {
    cfg.validate()?;
    let (points, pixels) = depth_points(depth, k, cfg.stride)?;
    let normals = depth_normals(depth, k, &pixels, cfg.normal_radius)?;
    let extracted = extract_depth_grid(&points, &normals, &pixels, depth.size(), cfg)?;
    let mut equations: Vec<PlaneEquation> = extracted.iter().map(|p| p.equation).collect();
    let test = InlierTest {
        threshold: cfg.ransac.inlier_threshold,
        normals: Some(&normals),
        min_cos: cfg.normal_angle_deg.to_radians().cos(),
        grid: None,
    };
    for _ in 0..REASSIGN_ROUNDS {
        reassign_refit(&points, &mut equations, test, cfg.ransac.min_inliers);
    }
    let planes: Vec<Plane> = equations
        .iter()
        .filter_map(|e| e.to_plane().ok())
        .take(cfg.max_planes)
        .collect();
    if planes.is_empty() {
        return Err(Error::NoPlaneFound { min_inliers: cfg.ransac.min_inliers });
    }
    Ok(planes)
}

/// Assigns each point to the nearest plane that accepts it, then refits every
/// plane with enough assigned points by trimmed least squares on them.
fn reassign_refit(points: &Point3Set, equations: &mut [PlaneEquation], test: InlierTest, min_points: usize) {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); equations.len()];
    for i in 0..points.len() {
        let best = equations
            .iter()
            .enumerate()
            .filter(|(_, e)| test.accepts(points, i, e))
            .min_by(|a, b| a.1.distance(&points.points[i]).total_cmp(&b.1.distance(&points.points[i])));
        if let Some((j, _)) = best {
            members[j].push(i);
        }
    }
    for (eq, m) in equations.iter_mut().zip(&members) {
        if m.len() < min_points.max(3) {
            continue;
        }
        let mut residuals: Vec<f64> = m.iter().map(|&i| eq.distance(&points.points[i])).collect();
        residuals.sort_by(f64::total_cmp);
        let cut = (3.0 * 1.4826 * residuals[residuals.len() / 2]).max(test.threshold * 1e-3);
        let kept: Vec<usize> = m.iter().copied().filter(|&i| eq.distance(&points.points[i]) <= cut).collect();
        if let Ok(f) = fit_plane_equation(&points.subset(&kept)) {
            *eq = f.equation;
        }
    }
}

fn best_hypothesis(
    points: &Point3Set,
    uncovered: &[usize],
    cfg: &RansacConfig,
    test: InlierTest,
    rng: &mut ChaCha8Rng,
) -> Option<PlaneEquation> {
    let samples: Vec<[usize; 3]> = (0..cfg.iterations_per_plane)
        .map(|_| {
            let s = sample(rng, uncovered.len(), 3);
            [uncovered[s.index(0)], uncovered[s.index(1)], uncovered[s.index(2)]]
        })
        .collect();
    let scored: Vec<(usize, PlaneEquation)> = samples
        .par_iter()
        .filter_map(|&[a, b, c]| {
            let eq = plane_through(&points.points[a], &points.points[b], &points.points[c])?;
            let count = uncovered.iter().filter(|&&i| test.accepts(points, i, &eq)).count();
            Some((count, eq))
        })
        .collect();
    // lowest trial index wins ties, independent of the parallel schedule
    let mut best: Option<(usize, PlaneEquation)> = None;
    for (count, eq) in scored {
        if best.is_none_or(|(c, _)| count > c) {
            best = Some((count, eq));
        }
    }
    best.filter(|&(count, _)| count >= cfg.min_inliers.min(uncovered.len())).map(|(_, eq)| eq)
}

/// Trimmed total least-squares refit: inliers are fitted after discarding
/// residuals beyond three robust standard deviations.
fn refine(points: &Point3Set, hypothesis: &PlaneEquation, test: InlierTest) -> Option<crate::geometry::PlaneFit> {
    let threshold = test.threshold;
    let floor = threshold * 1e-3;
    let mut equation = *hypothesis;
    let mut fit = None;
    for _ in 0..3 {
        let candidates: Vec<(usize, f64)> = points
            .points
            .iter()
            .enumerate()
            .filter(|&(i, _)| test.accepts(points, i, &equation))
            .map(|(i, p)| (i, equation.distance(p)))
            .collect();
        let mut residuals: Vec<f64> = candidates.iter().map(|&(_, r)| r).collect();
        residuals.sort_by(f64::total_cmp);
        let mad = residuals.get(residuals.len() / 2).copied().unwrap_or(0.0);
        let cut = (3.0 * 1.4826 * mad).max(floor).min(threshold);
        let kept: Vec<usize> = candidates.iter().filter(|&&(_, r)| r <= cut).map(|&(i, _)| i).collect();
        match fit_plane_equation(&points.subset(&kept)) {
            Ok(f) => {
                equation = f.equation;
                fit = Some(f);
            }
            Err(_) => break,
        }
    }
    fit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn grid_on_z(z: f64, n: usize) -> Vec<Vec3> {
        (0..n * n).map(|i| Vec3::new((i % n) as f64 * 0.05 - 1.0, (i / n) as f64 * 0.05 - 1.0, z)).collect()
    }

    #[test]
    fn single_noise_free_plane() {
        let pts = Point3Set::new(grid_on_z(2.0, 30));
        let planes = extract_planes(&pts, &RansacConfig::default()).unwrap();
        assert_eq!(planes.len(), 1);
        assert_abs_diff_eq!(planes[0].plane().unwrap().param(), Vec3::new(0.0, 0.0, 2.0), epsilon = 1e-6);
        assert_eq!(coverage(&planes, pts.len()), 1.0);
    }

    #[test]
    fn two_perpendicular_planes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // z = 2 for x in [-1, 0.5], and x = 0.5 for z in [0.5, 2]
        let mut pts = Vec::new();
        for _ in 0..500 {
            pts.push(Vec3::new(rng.random_range(-1.0..0.5), rng.random_range(-1.0..1.0), 2.0));
        }
        for _ in 0..500 {
            pts.push(Vec3::new(0.5, rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0)));
        }
        let pts = Point3Set::new(pts);
        let planes = extract_planes(&pts, &RansacConfig { rng_seed: 11, ..Default::default() }).unwrap();
        assert_eq!(planes.len(), 2);
        let mut params: Vec<Vec3> = planes.iter().map(|p| p.plane().unwrap().param()).collect();
        params.sort_by(|a, b| a.x.total_cmp(&b.x));
        assert_abs_diff_eq!(params[0], Vec3::new(0.0, 0.0, 2.0), epsilon = 1e-6);
        assert_abs_diff_eq!(params[1], Vec3::new(0.5, 0.0, 0.0), epsilon = 1e-6);
        assert_eq!(coverage(&planes, pts.len()), 1.0);
    }

    #[test]
    fn noisy_plane_keeps_most_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let pts: Vec<Vec3> = (0..4000)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 2.0 + noise.sample(&mut rng)))
            .collect();
        // analytic oracle: points with |z - 2| <= 0.05
        let oracle = pts.iter().filter(|p| (p.z - 2.0).abs() <= 0.05).count();
        assert!(oracle as f64 >= 0.99 * pts.len() as f64);
        let planes = extract_planes(&Point3Set::new(pts.clone()), &RansacConfig::default()).unwrap();
        assert_eq!(planes.len(), 1);
        assert!(planes[0].inlier_indices.len() as f64 >= 0.99 * pts.len() as f64);
    }

    #[test]
    fn inliers_respect_threshold_and_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Point3Set = (0..800)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(1.0..3.0)))
            .collect();
        let cfg = RansacConfig { min_inliers: 10, iterations_per_plane: 100, rng_seed: 4, ..Default::default() };
        let a = extract_planes(&pts, &cfg).unwrap();
        let b = extract_planes(&pts, &cfg).unwrap();
        assert_eq!(a, b);
        for p in &a {
            assert!(p.inlier_indices.iter().all(|&i| p.equation.distance(&pts.points[i]) <= cfg.inlier_threshold));
            assert!(p.new_coverage >= cfg.min_inliers);
        }
    }

    #[test]
    fn scattered_points_yield_no_plane() {
        let pts = Point3Set::new(vec![Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 2.0), Vec3::new(0.0, 1.0, 3.0)]);
        assert!(matches!(extract_planes(&pts, &RansacConfig::default()), Err(Error::NoPlaneFound { .. })));
    }

    #[test]
    fn largest_component_on_strided_grid() {
        // one row sampled at stride 2 with the sample at u = 6 missing
        let pixels = [0, 2, 4, 8, 10];
        let grid = PixelGrid { pixels: &pixels, width: 12, height: 1, stride: 2 };
        assert_eq!(grid.largest_component(&[0, 1, 2, 3, 4]), vec![0, 1, 2]);
        assert_eq!(grid.largest_component(&[3, 4]), vec![3, 4]);
        assert!(grid.largest_component(&[]).is_empty());
    }

    fn render(planes: &[Plane], k: &CameraIntrinsics, split_u: usize) -> DepthMap {
        let values = (0..k.pixel_count())
            .map(|p| {
                let (u, v) = (p % k.width, p / k.width);
                crate::geometry::plane_depth(&planes[usize::from(u >= split_u)], u as f64, v as f64, k)
            })
            .collect::<Vec<_>>();
        DepthMap::from_options(k.width, k.height, &values).unwrap()
    }

    #[test]
    fn depth_extraction_recovers_two_walls() {
        let k = CameraIntrinsics::centered(60.0, 80, 60).unwrap();
        // two walls meeting in a vertical crease on the image center line
        let n = Vec3::new(-1.0, 0.0, 1.0).normalize();
        let a = Plane::from_normal_offset(Vec3::new(0.0, 0.0, 1.0), 3.0).unwrap();
        let b = Plane::from_normal_offset(n, n.dot(&Vec3::new(0.0, 0.0, 3.0))).unwrap();
        let depth = render(&[a, b], &k, 40);
        let found = extract_depth_planes(&depth, &k, &ExtractConfig::default()).unwrap();
        assert_eq!(found.len(), 2);
        for truth in [a, b] {
            assert!(found.iter().any(|p| (p.param() - truth.param()).norm() < 1e-6), "{truth:?} not in {found:?}");
        }
    }

    #[test]
    fn depth_extraction_separates_parallel_steps() {
        // two fronto-parallel planes 4 cm apart, closer than the inlier threshold
        let k = CameraIntrinsics::centered(60.0, 80, 60).unwrap();
        let a = Plane::from_param(Vec3::new(0.0, 0.0, 2.0)).unwrap();
        let b = Plane::from_param(Vec3::new(0.0, 0.0, 2.04)).unwrap();
        let depth = render(&[a, b], &k, 40);
        let cfg = ExtractConfig { ransac: RansacConfig { inlier_threshold: 0.01, ..ExtractConfig::default().ransac }, ..Default::default() };
        let found = extract_depth_planes(&depth, &k, &cfg).unwrap();
        assert_eq!(found.len(), 2);
    }

    #[test]
    fn depth_normals_of_a_tilted_plane() {
        let k = CameraIntrinsics::centered(40.0, 20, 20).unwrap();
        let n = Vec3::new(0.0, -1.0, 2.0).normalize();
        let plane = Plane::from_normal_offset(n, 2.0).unwrap();
        let depth = crate::geometry::render_plane_depthmap(&plane, &k);
        let normals = depth_normals(&depth, &k, &[0, 210, 399], 2).unwrap();
        for m in normals {
            assert!(m.unwrap().dot(&n).abs() > 1.0 - 1e-9);
        }
        let empty = DepthMap::invalid(20, 20);
        assert_eq!(depth_normals(&empty, &k, &[5], 2).unwrap(), vec![None]);
    }

    #[test]
    fn extract_config_validation() {
        assert!(ExtractConfig::default().validate().is_ok());
        assert!(ExtractConfig { stride: 0, ..Default::default() }.validate().is_err());
        assert!(ExtractConfig { normal_angle_deg: 0.0, ..Default::default() }.validate().is_err());
    }
}

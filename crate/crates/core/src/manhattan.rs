//! Dominant (Manhattan) direction voting and plane snapping.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{nearest_rotation, Plane, Point3Set, Vec3, MIN_PLANE_OFFSET};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManhattanConfig {
    /// Half-angle of the voting cone, degrees.
    pub vote_cone_deg: f64,
    /// Planes within this angle of an axis are snapped to it, degrees.
    pub snap_cone_deg: f64,
    /// Distance used to select a plane's support points when re-estimating its offset.
    pub snap_inlier_threshold: f64,
}

impl Default for ManhattanConfig {
    fn default() -> Self {
        Self { vote_cone_deg: 10.0, snap_cone_deg: 30.0, snap_inlier_threshold: 0.05 }
    }
}

/// Three mutually orthogonal unit axes forming a right-handed frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManhattanFrame {
    axes: [Vec3; 3],
}

impl ManhattanFrame {
    pub fn identity() -> Self {
        Self { axes: [Vec3::x(), Vec3::y(), Vec3::z()] }
    }

    /// Frame from the columns of a rotation matrix.
    pub fn from_rotation(r: &Matrix3<f64>) -> Result<Self> {
        Self::new([r.column(0).into(), r.column(1).into(), r.column(2).into()])
    }

    pub fn new(axes: [Vec3; 3]) -> Result<Self> {
        for a in &axes {
            if (a.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput("Manhattan axes must be unit vectors".into()));
            }
        }
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            if axes[i].dot(&axes[j]).abs() >= 1e-6 {
                return Err(Error::InvalidInput("Manhattan axes must be mutually orthogonal".into()));
            }
        }
        if axes[0].cross(&axes[1]).dot(&axes[2]) <= 0.0 {
            return Err(Error::InvalidInput("Manhattan axes must be right-handed".into()));
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[Vec3; 3] {
        &self.axes
    }

    pub fn to_rotation(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&self.axes)
    }

    /// Axis closest to `dir` (sign-invariant) and the unoriented angle to it in degrees.
    pub fn closest_axis(&self, dir: &Vec3) -> (usize, f64) {
        let dir = dir.normalize();
        let (idx, dot) = self
            .axes
            .iter()
            .enumerate()
            .map(|(i, a)| (i, a.dot(&dir).abs()))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        (idx, dot.min(1.0).acos().to_degrees())
    }
}

/// Flips a direction so that its largest-magnitude component is positive.
fn canonical_sign(v: Vec3) -> Vec3 {
    let mut k = 0;
    for i in 1..3 {
        if v[i].abs() > v[k].abs() {
            k = i;
        }
    }
    if v[k] < 0.0 {
        -v
    } else {
        v
    }
}

struct Votes {
    dirs: Vec<Vec3>,
    weights: Vec<f64>,
    cos_cone: f64,
}

impl Votes {
    fn score(&self, dir: &Vec3) -> f64 {
        self.dirs
            .iter()
            .zip(&self.weights)
            .filter(|(d, _)| d.dot(dir).abs() >= self.cos_cone)
            .map(|(_, w)| w)
            .sum()
    }

    /// Weighted mean of supporters, sign-aligned to `dir`; `dir` itself when unsupported.
    fn refine(&self, dir: &Vec3) -> Vec3 {
        let mut acc = Vec3::zeros();
        for (d, w) in self.dirs.iter().zip(&self.weights) {
            let dot = d.dot(dir);
            if dot.abs() >= self.cos_cone {
                acc += d * (w * dot.signum());
            }
        }
        let norm = acc.norm();
        if norm > 0.0 {
            acc / norm
        } else {
            *dir
        }
    }

    fn argmax(&self, eligible: impl Fn(&Vec3) -> bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, d) in self.dirs.iter().enumerate() {
            if !eligible(d) {
                continue;
            }
            let s = self.score(d);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        best.map(|(i, _)| i)
    }
}

fn collect_votes(normals: &[(Vec3, f64)], cfg: &ManhattanConfig) -> Result<Votes> {
    let mut dirs = Vec::new();
    let mut weights = Vec::new();
    for (n, w) in normals {
        let norm = n.norm();
        if norm > 0.0 && norm.is_finite() && *w > 0.0 && w.is_finite() {
            dirs.push(canonical_sign(n / norm));
            weights.push(*w);
        }
    }
    if dirs.is_empty() {
        return Err(Error::InvalidInput("need at least one normal with positive weight".into()));
    }
    Ok(Votes { dirs, weights, cos_cone: cfg.vote_cone_deg.to_radians().cos() })
}

fn finish_frame(first: Vec3, second: Vec3, votes: Option<&Votes>) -> ManhattanFrame {
    let second = (second - first * first.dot(&second)).normalize();
    let mut third = first.cross(&second);
    if let Some(v) = votes {
        let refined = v.refine(&third);
        if refined.dot(&third) < 0.0 {
            third = -refined;
        } else {
            third = refined;
        }
    }
    let m = Matrix3::from_columns(&[first, second, third]);
    let off = (m.transpose() * m - Matrix3::identity()).abs().max();
    let r = if off <= 1e-14 && m.determinant() > 0.0 { m } else { nearest_rotation(&m) };
    ManhattanFrame { axes: [r.column(0).into(), r.column(1).into(), r.column(2).into()] }
}

/// Greedy weighted voting for three dominant orthogonal directions.
///
/// Fails with [`Error::InsufficientDirections`] when no direction lies within the
/// vote cone of orthogonality to the dominant one; see [`vote_manhattan_completed`].
pub fn vote_manhattan(normals: &[(Vec3, f64)], cfg: &ManhattanConfig) -> Result<ManhattanFrame> {
    let votes = collect_votes(normals, cfg)?;
    let first_idx = votes.argmax(|_| true).expect("non-empty votes");
    let first = votes.refine(&votes.dirs[first_idx]);
    let sin_cone = cfg.vote_cone_deg.to_radians().sin();
    let second_idx = votes
        .argmax(|d| d.dot(&first).abs() <= sin_cone)
        .ok_or(Error::InsufficientDirections { cone_deg: cfg.vote_cone_deg })?;
    let second = votes.refine(&votes.dirs[second_idx]);
    Ok(finish_frame(first, second, Some(&votes)))
}

/// Like [`vote_manhattan`], but completes a single-axis result using world up
/// (camera `-y`) as the tie-break, falling back to `+x` when the axis is vertical.
pub fn vote_manhattan_completed(normals: &[(Vec3, f64)], cfg: &ManhattanConfig) -> Result<ManhattanFrame> {
    match vote_manhattan(normals, cfg) {
        Err(Error::InsufficientDirections { .. }) => {
            let votes = collect_votes(normals, cfg)?;
            let first_idx = votes.argmax(|_| true).expect("non-empty votes");
            let first = votes.refine(&votes.dirs[first_idx]);
            let up = Vec3::new(0.0, -1.0, 0.0);
            let helper = if first.dot(&up).abs() > 0.9 { Vec3::x() } else { up };
            Ok(finish_frame(first, helper, None))
        }
        other => other,
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[m] } else { 0.5 * (values[m - 1] + values[m]) })
}

/// Snaps one plane given its support points; returns the plane unchanged when
/// it is outside every snap cone or the snapped offset would be degenerate.
pub fn snap_plane<'a>(
    plane: &Plane,
    support: impl IntoIterator<Item = &'a Vec3>,
    frame: &ManhattanFrame,
    cfg: &ManhattanConfig,
) -> Plane {
    let (n, _) = plane.decode();
    let (axis_idx, angle) = frame.closest_axis(&n);
    if angle > cfg.snap_cone_deg {
        return *plane;
    }
    let axis = frame.axes[axis_idx];
    let snapped = if axis.dot(&n) < 0.0 { -axis } else { axis };
    let mut proj: Vec<f64> = support.into_iter().map(|x| snapped.dot(x)).collect();
    let offset = median(&mut proj).unwrap_or_else(|| snapped.dot(&plane.param()));
    if !(offset > MIN_PLANE_OFFSET) {
        return *plane;
    }
    Plane::from_param(snapped * offset).unwrap_or(*plane)
}

/// Snaps planes to the Manhattan frame, re-estimating each snapped offset as the
/// median projection of the points within `snap_inlier_threshold` of the plane.
pub fn snap_to_manhattan(
    planes: &[Plane],
    frame: &ManhattanFrame,
    points: &Point3Set,
    cfg: &ManhattanConfig,
) -> Vec<Plane> {
    planes
        .iter()
        .map(|plane| {
            let eq = plane.equation();
            let support = points.points.iter().filter(|x| eq.distance(x) <= cfg.snap_inlier_threshold);
            snap_plane(plane, support, frame, cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Rotation3, Unit};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_normals_give_identity_frame() {
        let normals = [(Vec3::x(), 1.0), (Vec3::y(), 1.0), (Vec3::z(), 1.0)];
        let f = vote_manhattan(&normals, &ManhattanConfig::default()).unwrap();
        for (a, e) in f.axes().iter().zip(ManhattanFrame::identity().axes()) {
            assert_abs_diff_eq!(a, e, epsilon = 1e-12);
        }
    }

    fn jitter(rng: &mut ChaCha8Rng, v: Vec3, max_deg: f64) -> Vec3 {
        let axis = Unit::new_normalize(Vec3::new(rng.random(), rng.random(), rng.random()) - Vec3::repeat(0.5));
        Rotation3::from_axis_angle(&axis, rng.random_range(0.0..max_deg).to_radians()) * v
    }

    #[test]
    fn recovers_rotated_frame_under_jitter() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let r = Rotation3::from_euler_angles(0.4, -0.2, 1.1).into_inner();
        let mut normals = Vec::new();
        for k in 0..3 {
            let axis: Vec3 = r.column(k).into();
            for i in 0..(40 - 10 * k) {
                let sign = if i % 3 == 0 { -1.0 } else { 1.0 };
                normals.push((sign * jitter(&mut rng, axis, 2.0), 1.0));
            }
        }
        let f = vote_manhattan(&normals, &ManhattanConfig::default()).unwrap();
        for k in 0..3 {
            let truth: Vec3 = r.column(k).into();
            let (_, angle) = f.closest_axis(&truth);
            assert!(angle < 2.0, "axis {k} off by {angle} degrees");
        }
    }

    #[test]
    fn voting_is_sign_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let normals: Vec<(Vec3, f64)> = (0..30)
            .map(|i| (jitter(&mut rng, [Vec3::x(), Vec3::y(), Vec3::z()][i % 3], 3.0), 1.0 + (i % 4) as f64))
            .collect();
        let flipped: Vec<(Vec3, f64)> =
            normals.iter().enumerate().map(|(i, (n, w))| (if i % 2 == 0 { -n } else { *n }, *w)).collect();
        let cfg = ManhattanConfig::default();
        assert_eq!(vote_manhattan(&normals, &cfg).unwrap(), vote_manhattan(&flipped, &cfg).unwrap());
    }

    #[test]
    fn single_normal_is_completed() {
        let cfg = ManhattanConfig::default();
        assert!(matches!(vote_manhattan(&[(Vec3::z(), 1.0)], &cfg), Err(Error::InsufficientDirections { .. })));
        let f = vote_manhattan_completed(&[(Vec3::z(), 1.0)], &cfg).unwrap();
        assert_eq!(f.closest_axis(&Vec3::z()).1, 0.0);
        assert!(ManhattanFrame::new(*f.axes()).is_ok());
        assert_abs_diff_eq!(f.axes()[1], Vec3::new(0.0, -1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn snaps_slightly_tilted_plane() {
        let tilt = Rotation3::from_axis_angle(&Vec3::x_axis(), 5f64.to_radians());
        let n = tilt * Vec3::z();
        let plane = Plane::from_normal_offset(n, 2.0).unwrap();
        let pts: Point3Set = (0..49)
            .map(|i| {
                let x = (i % 7) as f64 * 0.1 - 0.3;
                let y = (i / 7) as f64 * 0.1 - 0.3;
                // point on the tilted plane above (x, y)
                let z = (2.0 - n.x * x - n.y * y) / n.z;
                Vec3::new(x, y, z)
            })
            .collect();
        let out = snap_to_manhattan(&[plane], &ManhattanFrame::identity(), &pts, &ManhattanConfig::default());
        assert_eq!(out[0].normal(), Vec3::z());
        // oracle: median of z over the support points
        let mut zs: Vec<f64> = pts.points.iter().map(|p| p.z).collect();
        zs.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(out[0].offset(), zs[24], epsilon = 1e-12);
    }

    #[test]
    fn leaves_oblique_and_aligned_planes() {
        let frame = ManhattanFrame::identity();
        let cfg = ManhattanConfig::default();
        let oblique = Plane::from_normal_offset(Vec3::repeat(1.0).normalize(), 2.0).unwrap();
        let aligned = Plane::from_param(Vec3::new(0.0, 0.0, 2.0)).unwrap();
        let pts: Point3Set = (0..9).map(|i| Vec3::new(i as f64 * 0.1, 0.3, 2.0)).collect();
        let out = snap_to_manhattan(&[oblique, aligned], &frame, &pts, &cfg);
        assert_eq!(out[0], oblique);
        assert_abs_diff_eq!(out[1].param(), aligned.param(), epsilon = 1e-9);
    }
}

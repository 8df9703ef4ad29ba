//! Pinhole camera, plane encodings and least-squares plane fitting.
//!
//! Conventions: pixel centers sit at integer `(u, v)` with the origin at the
//! top-left corner; camera space is `+x` right, `+y` down, `+z` forward.
//! Depth always means camera-space `z`, never ray length.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Minimum plane offset (meters) for the closest-point encoding.
pub const MIN_PLANE_OFFSET: f64 = 1e-4;
/// Minimum `n·r` for a pixel ray to hit a plane in front of the camera.
pub const MIN_RAY_DOT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self { fx, fy, cx, cy, width, height };
        k.validate()?;
        Ok(k)
    }

    /// Intrinsics with the principal point at the image center and equal focal lengths.
    pub fn centered(focal: f64, width: usize, height: usize) -> Result<Self> {
        Self::new(
            focal,
            focal,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
            width,
            height,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy].iter().all(|v| v.is_finite());
        if !finite || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "focal lengths must be positive and finite, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidInput("image size must be non-zero".into()));
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy) {
            return Err(Error::InvalidInput(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= -0.5 && v >= -0.5 && u < self.width as f64 - 0.5 && v < self.height as f64 - 0.5
    }

    /// Viewing ray scaled to unit `z`: `((u-cx)/fx, (v-cy)/fy, 1)`.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// Projects a camera-space point; `None` for points on or behind the image plane.
    #[inline]
    pub fn project(&self, x: &Vec3) -> Option<(f64, f64)> {
        if x.z <= 0.0 {
            return None;
        }
        Some((self.fx * x.x / x.z + self.cx, self.fy * x.y / x.z + self.cy))
    }
}

/// World-to-camera rigid transform: `x_cam = R x_world + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vec3,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if !ortho.is_finite() || ortho > 1e-9 || (rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("rotation must be orthonormal with determinant +1".into()));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("translation must be finite".into()));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vec3::zeros() }
    }

    /// Pose of a camera centered at `center` (world) with the given world-to-camera rotation.
    pub fn from_center(rotation: Matrix3<f64>, center: Vec3) -> Result<Self> {
        Self::new(rotation, -(rotation * center))
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    #[inline]
    pub fn to_camera(&self, world: &Vec3) -> Vec3 {
        self.rotation * world + self.translation
    }

    pub fn plane_to_camera(&self, plane: &PlaneEquation) -> PlaneEquation {
        let normal = self.rotation * plane.normal;
        PlaneEquation { normal, offset: plane.offset + normal.dot(&self.translation) }
    }
}

/// A camera view: intrinsics plus world-to-camera pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub intrinsics: CameraIntrinsics,
    pub pose: Pose,
}

/// Plane in Hesse form `n·x = offset` with a unit normal and unrestricted sign.
///
/// Used where planes may pass through the coordinate origin (world-frame mesh
/// fitting); [`Plane`] is the canonical camera-frame encoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneEquation {
    pub normal: Vec3,
    pub offset: f64,
}

impl PlaneEquation {
    #[inline]
    pub fn signed_distance(&self, x: &Vec3) -> f64 {
        self.normal.dot(x) - self.offset
    }

    #[inline]
    pub fn distance(&self, x: &Vec3) -> f64 {
        self.signed_distance(x).abs()
    }

    pub fn project_point(&self, x: &Vec3) -> Vec3 {
        x - self.normal * self.signed_distance(x)
    }

    /// Unoriented angle between two plane normals, in degrees within [0, 90].
    pub fn normal_angle_deg(&self, other: &PlaneEquation) -> f64 {
        self.normal.dot(&other.normal).abs().min(1.0).acos().to_degrees()
    }

    pub fn to_plane(&self) -> Result<Plane> {
        let (n, d) = if self.offset < 0.0 { (-self.normal, -self.offset) } else { (self.normal, self.offset) };
        Plane::from_normal_offset_unchecked(n, d)
    }
}

/// Plane encoded by its point closest to the camera center, `P = d·n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlaneParam", into = "PlaneParam")]
pub struct Plane {
    param: Vec3,
}

#[derive(Serialize, Deserialize)]
struct PlaneParam {
    param: [f64; 3],
}

impl TryFrom<PlaneParam> for Plane {
    type Error = Error;
    fn try_from(p: PlaneParam) -> Result<Self> {
        Plane::from_param(Vec3::from(p.param))
    }
}

impl From<Plane> for PlaneParam {
    fn from(p: Plane) -> Self {
        PlaneParam { param: p.param.into() }
    }
}

impl Plane {
    /// Encodes a unit normal and positive offset as `P = d·n`.
    pub fn from_normal_offset(normal: Vec3, offset: f64) -> Result<Self> {
        if !((normal.norm() - 1.0).abs() <= 1e-9) {
            return Err(Error::InvalidInput(format!("normal must be unit length, |n| = {}", normal.norm())));
        }
        Self::from_normal_offset_unchecked(normal, offset)
    }

    fn from_normal_offset_unchecked(normal: Vec3, offset: f64) -> Result<Self> {
        if !(offset > MIN_PLANE_OFFSET) {
            return Err(Error::DegeneratePlane { offset, min: MIN_PLANE_OFFSET });
        }
        Self::from_param(normal * offset)
    }

    pub fn from_param(param: Vec3) -> Result<Self> {
        let offset = param.norm();
        if !param.iter().all(|v| v.is_finite()) || !(offset > MIN_PLANE_OFFSET) {
            return Err(Error::DegeneratePlane { offset, min: MIN_PLANE_OFFSET });
        }
        Ok(Self { param })
    }

    #[inline]
    pub fn param(&self) -> Vec3 {
        self.param
    }

    #[inline]
    pub fn offset(&self) -> f64 {
        self.param.norm()
    }

    #[inline]
    pub fn normal(&self) -> Vec3 {
        self.param / self.param.norm()
    }

    /// Decodes into `(n, d)`.
    pub fn decode(&self) -> (Vec3, f64) {
        let d = self.offset();
        (self.param / d, d)
    }

    pub fn equation(&self) -> PlaneEquation {
        let (normal, offset) = self.decode();
        PlaneEquation { normal, offset }
    }

    pub fn distance(&self, x: &Vec3) -> f64 {
        self.equation().distance(x)
    }

    /// Same plane with its offset multiplied by `scale > 0`.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        Self::from_param(self.param * scale)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Point3Set {
    pub points: Vec<Vec3>,
    pub weights: Option<Vec<f64>>,
}

impl Point3Set {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self { points, weights: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Point3Set {
        Point3Set {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            weights: self.weights.as_ref().map(|w| indices.iter().map(|&i| w[i]).collect()),
        }
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }
}

impl FromIterator<Vec3> for Point3Set {
    fn from_iter<I: IntoIterator<Item = Vec3>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// `X = depth · ((u-cx)/fx, (v-cy)/fy, 1)`.
pub fn backproject(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> Result<Vec3> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::InvalidInput(format!("depth must be positive and finite, got {depth}")));
    }
    if !k.contains(u, v) {
        return Err(Error::InvalidInput(format!("pixel ({u}, {v}) outside the image")));
    }
    Ok(k.ray(u, v) * depth)
}

/// Backprojects every `stride`-th valid pixel in both directions. Returns the
/// points and their row-major pixel indices.
pub fn depth_points(depth: &crate::DepthMap, k: &CameraIntrinsics, stride: usize) -> Result<(Point3Set, Vec<usize>)> {
    crate::maps::same_size(depth.size(), (k.width, k.height), "depth map and intrinsics")?;
    let stride = stride.max(1);
    let mut points = Vec::new();
    let mut pixels = Vec::new();
    for v in (0..k.height).step_by(stride) {
        for u in (0..k.width).step_by(stride) {
            if let Some(z) = depth.get(u, v) {
                points.push(k.ray(u as f64, v as f64) * z);
                pixels.push(v * k.width + u);
            }
        }
    }
    Ok((Point3Set::new(points), pixels))
}

/// Surface normal at each listed pixel from a total least-squares fit to the
/// valid pixels within `radius` in both directions. `None` where fewer than
/// six neighbors are valid or they are degenerate.
pub fn depth_normals(
    depth: &crate::DepthMap,
    k: &CameraIntrinsics,
    pixels: &[usize],
    radius: usize,
) -> Result<Vec<Option<Vec3>>> {
    crate::maps::same_size(depth.size(), (k.width, k.height), "depth map and intrinsics")?;
    let (w, h) = depth.size();
    Ok(pixels
        .par_iter()
        .map(|&p| {
            let (u, v) = (p % w, p / w);
            let mut pts = Vec::with_capacity((2 * radius + 1).pow(2));
            for y in v.saturating_sub(radius)..(v + radius + 1).min(h) {
                for x in u.saturating_sub(radius)..(u + radius + 1).min(w) {
                    if let Some(z) = depth.get(x, y) {
                        pts.push(k.ray(x as f64, y as f64) * z);
                    }
                }
            }
            if pts.len() < 6 {
                return None;
            }
            fit_plane_equation(&Point3Set::new(pts)).ok().map(|f| f.equation.normal)
        })
        .collect())
}

/// Depth of the plane along the ray through `(u, v)`, or `None` when the ray
/// misses the plane in front of the camera.
pub fn plane_depth(plane: &Plane, u: f64, v: f64, k: &CameraIntrinsics) -> Option<f64> {
    let (n, d) = plane.decode();
    ray_plane_depth(&n, d, &k.ray(u, v))
}

#[inline]
pub(crate) fn ray_plane_depth(normal: &Vec3, offset: f64, ray: &Vec3) -> Option<f64> {
    let dot = normal.dot(ray);
    (dot > MIN_RAY_DOT).then(|| offset / dot)
}

/// Renders a plane into a depth map; pixels where the plane is undefined are invalid.
pub fn render_plane_depthmap(plane: &Plane, k: &CameraIntrinsics) -> crate::DepthMap {
    let (n, d) = plane.decode();
    let mut map = crate::DepthMap::invalid(k.width, k.height);
    for v in 0..k.height {
        for u in 0..k.width {
            if let Some(z) = ray_plane_depth(&n, d, &k.ray(u as f64, v as f64)) {
                map.set(u, v, z);
            }
        }
    }
    map
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFit {
    pub equation: PlaneEquation,
    pub rms_residual: f64,
}

impl PlaneFit {
    pub fn plane(&self) -> Result<Plane> {
        self.equation.to_plane()
    }
}

/// Total least-squares plane in Hesse form: centroid plus the smallest
/// principal direction of the (weighted) scatter matrix.
pub fn fit_plane_equation(points: &Point3Set) -> Result<PlaneFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry(format!("need at least 3 points, got {}", points.len())));
    }
    let mut wsum = 0.0;
    let mut centroid = Vec3::zeros();
    for (i, p) in points.points.iter().enumerate() {
        let w = points.weight(i);
        if !p.iter().all(|c| c.is_finite()) || !(w >= 0.0) {
            return Err(Error::InvalidInput("points must be finite with nonnegative weights".into()));
        }
        wsum += w;
        centroid += p * w;
    }
    if !(wsum > 0.0) {
        return Err(Error::DegenerateGeometry("total weight is zero".into()));
    }
    centroid /= wsum;

    let mut scatter = Matrix3::zeros();
    for (i, p) in points.points.iter().enumerate() {
        let q = p - centroid;
        scatter += q * q.transpose() * points.weight(i);
    }
    let eig = SymmetricEigen::new(scatter);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (smallest, middle, largest) = (order[0], order[1], order[2]);
    let spread = eig.eigenvalues[largest];
    if !(spread > 0.0) || eig.eigenvalues[middle] <= spread * 1e-12 {
        return Err(Error::DegenerateGeometry("points are collinear or coincident".into()));
    }
    let normal: Vec3 = eig.eigenvectors.column(smallest).normalize();
    let offset = normal.dot(&centroid);
    let equation = PlaneEquation { normal, offset };
    let sq: f64 = points
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| points.weight(i) * equation.signed_distance(p).powi(2))
        .sum();
    Ok(PlaneFit { equation, rms_residual: (sq / wsum).sqrt() })
}

/// Least-squares plane in the closest-point encoding.
pub fn fit_plane_lsq(points: &Point3Set) -> Result<(Plane, f64)> {
    let fit = fit_plane_equation(points)?;
    Ok((fit.plane()?, fit.rms_residual))
}

/// Plane through three points, `None` when they are (nearly) collinear.
pub(crate) fn plane_through(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<PlaneEquation> {
    let cross = (b - a).cross(&(c - a));
    let norm = cross.norm();
    let scale = (b - a).norm() * (c - a).norm();
    if !(norm > 1e-12 * scale) || !(scale > 0.0) {
        return None;
    }
    let normal = cross / norm;
    Some(PlaneEquation { normal, offset: normal.dot(a) })
}

/// Nearest rotation (Frobenius) to `m`, with determinant +1.
pub(crate) fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u2 = u;
        let mut col = u2.column_mut(2);
        col *= -1.0;
        r = u2 * v_t;
    }
    r
}

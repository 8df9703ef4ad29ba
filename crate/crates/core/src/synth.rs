//! Analytic synthetic indoor scenes.
//!
//! Rooms are axis-aligned boxes spanning `[0, W] x [0, D] x [0, H]` with world
//! `+z` up. Furniture is a list of cuboids standing anywhere inside the room,
//! optionally rotated about the vertical axis. Rendering casts one ray per
//! pixel center against the room interior and the cuboid exteriors.

use nalgebra::{Matrix3, Rotation3};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Frame, Plane, PlaneEquation, Pose, Vec3};
use crate::layout::{Role, RoleAssignment, RoleMap};
use crate::maps::{DepthMap, LabelMap, RgbImage};
use crate::mesh::SemanticMesh;

/// Number of faces of a box.
const BOX_FACES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cuboid {
    pub center: [f64; 3],
    /// Full extents along the cuboid's local axes.
    pub size: [f64; 3],
    /// Rotation about world `+z`, degrees.
    #[serde(default)]
    pub yaw_deg: f64,
}

impl Cuboid {
    fn rotation(&self) -> Matrix3<f64> {
        *Rotation3::from_axis_angle(&Vec3::z_axis(), self.yaw_deg.to_radians()).matrix()
    }

    fn corners(&self) -> impl Iterator<Item = Vec3> + '_ {
        let r = self.rotation();
        let c = Vec3::from(self.center);
        (0..8).map(move |i| {
            let s = Vec3::new(
                if i & 1 == 0 { -0.5 } else { 0.5 },
                if i & 2 == 0 { -0.5 } else { 0.5 },
                if i & 4 == 0 { -0.5 } else { 0.5 },
            );
            c + r * s.component_mul(&Vec3::from(self.size))
        })
    }

    fn contains(&self, x: &Vec3) -> bool {
        let local = self.rotation().transpose() * (x - Vec3::from(self.center));
        (0..3).all(|a| local[a].abs() < self.size[a] / 2.0)
    }

    /// World planes of the faces in order `-x, +x, -y, +y, -z, +z` (local axes),
    /// with outward normals.
    fn face_planes(&self) -> [PlaneEquation; BOX_FACES] {
        let r = self.rotation();
        let c = Vec3::from(self.center);
        std::array::from_fn(|f| {
            let axis = f / 2;
            let sign = if f % 2 == 0 { -1.0 } else { 1.0 };
            let normal = r.column(axis) * sign;
            PlaneEquation { normal: normal, offset: normal.dot(&c) + self.size[axis] / 2.0 }
        })
    }

    /// Entry distance and face of a ray hitting the outside of the box.
    fn hit(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, usize)> {
        let rt = self.rotation().transpose();
        let o = rt * (origin - Vec3::from(self.center));
        let d = rt * dir;
        let mut t_enter = f64::NEG_INFINITY;
        let mut t_exit = f64::INFINITY;
        let mut face = 0;
        for a in 0..3 {
            let h = self.size[a] / 2.0;
            if d[a] == 0.0 {
                if o[a].abs() >= h {
                    return None;
                }
                continue;
            }
            let (t_lo, t_hi) = ((-h - o[a]) / d[a], (h - o[a]) / d[a]);
            let (near, near_face) = if t_lo < t_hi { (t_lo, 2 * a) } else { (t_hi, 2 * a + 1) };
            if near > t_enter {
                t_enter = near;
                face = near_face;
            }
            t_exit = t_exit.min(t_lo.max(t_hi));
        }
        (t_enter > 0.0 && t_enter < t_exit).then_some((t_enter, face))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraPlacement {
    /// World position of the camera center.
    pub position: [f64; 3],
    /// Heading about world `+z`; 0 looks along `+y`, positive turns toward `+x`.
    pub yaw_deg: f64,
    /// Positive tilts the view up.
    #[serde(default)]
    pub pitch_deg: f64,
    #[serde(default)]
    pub roll_deg: f64,
}

impl CameraPlacement {
    /// World-to-camera rotation (camera `+x` right, `+y` down, `+z` forward).
    pub fn rotation(&self) -> Matrix3<f64> {
        let (yaw, pitch, roll) = (self.yaw_deg.to_radians(), self.pitch_deg.to_radians(), self.roll_deg.to_radians());
        let forward = Vec3::new(yaw.sin() * pitch.cos(), yaw.cos() * pitch.cos(), pitch.sin());
        let right0 = Vec3::new(yaw.cos(), -yaw.sin(), 0.0);
        let down0 = forward.cross(&right0);
        let right = right0 * roll.cos() + down0 * roll.sin();
        let down = forward.cross(&right);
        Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    /// Room extents `(W, D, H)` in meters.
    pub room: [f64; 3],
    pub camera: CameraPlacement,
    #[serde(default)]
    pub cuboids: Vec<Cuboid>,
    #[serde(default = "default_focal")]
    pub focal: f64,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_height")]
    pub height: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_focal() -> f64 {
    200.0
}

fn default_width() -> usize {
    256
}

fn default_height() -> usize {
    192
}

impl SceneSpec {
    /// Empty room with the camera placed at `position` looking along `yaw_deg`.
    pub fn empty_room(room: [f64; 3], position: [f64; 3], yaw_deg: f64) -> Self {
        Self {
            room,
            camera: CameraPlacement { position, yaw_deg, pitch_deg: 0.0, roll_deg: 0.0 },
            cuboids: Vec::new(),
            focal: default_focal(),
            width: default_width(),
            height: default_height(),
            rng_seed: 0,
        }
    }

    /// Randomized room from the standard generator.
    ///
    /// The camera stands in the front half of the room looking toward the
    /// far wall, so the wall behind it is never visible; cuboids stand on the
    /// floor in the far half.
    pub fn random(seed: u64, max_cuboids: usize) -> Self {
        const PLACEMENT_ATTEMPTS: usize = 20;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let room = [rng.random_range(4.0..7.0), rng.random_range(4.0..7.0), rng.random_range(2.6..3.2)];
        let position =
            [rng.random_range(1.2..room[0] - 1.2), rng.random_range(0.8..0.45 * room[1]), rng.random_range(1.2..1.7)];
        let camera = CameraPlacement {
            position,
            yaw_deg: rng.random_range(-25.0..25.0),
            pitch_deg: rng.random_range(-15.0..5.0),
            roll_deg: 0.0,
        };
        let count = rng.random_range(0..=max_cuboids);
        // Furniture never interpenetrates: footprints are kept apart by their
        // bounding circles, and a piece that cannot be placed is dropped.
        let mut cuboids: Vec<Cuboid> = Vec::with_capacity(count);
        for _ in 0..count {
            let size: [f64; 3] = [rng.random_range(0.5..1.2), rng.random_range(0.5..1.2), rng.random_range(0.4..1.0)];
            let reach = size[0].hypot(size[1]) / 2.0 + 0.05;
            for _ in 0..PLACEMENT_ATTEMPTS {
                let center =
                    [rng.random_range(reach..room[0] - reach), rng.random_range(0.6 * room[1]..room[1] - reach), size[2] / 2.0];
                let clear = cuboids.iter().all(|c| {
                    let other = c.size[0].hypot(c.size[1]) / 2.0 + 0.05;
                    (c.center[0] - center[0]).hypot(c.center[1] - center[1]) > reach + other
                });
                if clear {
                    cuboids.push(Cuboid { center, size, yaw_deg: rng.random_range(-30.0..30.0) });
                    break;
                }
            }
        }
        Self { room, camera, cuboids, focal: default_focal(), width: default_width(), height: default_height(), rng_seed: seed }
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics> {
        CameraIntrinsics::centered(self.focal, self.width, self.height)
    }

    pub fn frame(&self) -> Result<Frame> {
        Ok(Frame {
            intrinsics: self.intrinsics()?,
            pose: Pose::from_center(self.camera.rotation(), Vec3::from(self.camera.position))?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !self.room.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::InvalidConfig(format!("room extents must be positive, got {:?}", self.room)));
        }
        let c = Vec3::from(self.camera.position);
        if !(0..3).all(|a| c[a] > 0.0 && c[a] < self.room[a]) {
            return Err(Error::CameraOutsideRoom);
        }
        for (i, cub) in self.cuboids.iter().enumerate() {
            if !cub.size.iter().all(|s| s.is_finite() && *s > 0.0) {
                return Err(Error::InvalidConfig(format!("cuboid {i} must have positive size")));
            }
            let tol = 1e-9;
            if !cub.corners().all(|p| (0..3).all(|a| p[a] >= -tol && p[a] <= self.room[a] + tol)) {
                return Err(Error::InvalidConfig(format!("cuboid {i} extends outside the room")));
            }
            if cub.contains(&c) {
                return Err(Error::InvalidConfig(format!("camera is inside cuboid {i}")));
            }
        }
        self.intrinsics()?;
        Ok(())
    }

    /// World planes of every face: room faces first (inward normals, order
    /// `x=0, x=W, y=0, y=D, z=0, z=H`), then six faces per cuboid.
    fn face_planes(&self) -> Vec<PlaneEquation> {
        let mut faces = Vec::with_capacity(BOX_FACES * (1 + self.cuboids.len()));
        for a in 0..3 {
            let e = Vec3::ith(a, 1.0);
            faces.push(PlaneEquation { normal: e, offset: 0.0 });
            faces.push(PlaneEquation { normal: -e, offset: -self.room[a] });
        }
        for c in &self.cuboids {
            faces.extend(c.face_planes());
        }
        faces
    }
}

/// Room face hit from inside by a ray, and its distance.
fn room_exit(room: &[f64; 3], origin: &Vec3, dir: &Vec3) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for a in 0..3 {
        let (t, face) = if dir[a] > 0.0 {
            ((room[a] - origin[a]) / dir[a], 2 * a + 1)
        } else if dir[a] < 0.0 {
            (-origin[a] / dir[a], 2 * a)
        } else {
            continue;
        };
        if t < best.0 {
            best = (t, face);
        }
    }
    best
}

/// Canonical plane id per face; coplanar faces share an id.
fn merge_coplanar(faces: &[PlaneEquation]) -> (Vec<usize>, Vec<PlaneEquation>) {
    let mut unique: Vec<PlaneEquation> = Vec::new();
    let ids = faces
        .iter()
        .map(|f| {
            let same = |u: &PlaneEquation| {
                let dot = u.normal.dot(&f.normal);
                dot.abs() > 1.0 - 1e-12 && (u.offset - dot.signum() * f.offset).abs() < 1e-9
            };
            match unique.iter().position(same) {
                Some(i) => i,
                None => {
                    unique.push(*f);
                    unique.len() - 1
                }
            }
        })
        .collect();
    (ids, unique)
}

/// Room roles of the six room faces for a camera heading; the wall behind
/// the camera has no role.
fn room_face_roles(camera: &CameraPlacement) -> [Option<Role>; BOX_FACES] {
    let yaw = camera.yaw_deg.to_radians();
    let heading = (yaw.sin(), yaw.cos());
    // outward horizontal direction of the four walls
    let walls = [(0, (-1.0, 0.0)), (1, (1.0, 0.0)), (2, (0.0, -1.0)), (3, (0.0, 1.0))];
    let dot = |a: (f64, f64), b: (f64, f64)| a.0 * b.0 + a.1 * b.1;
    let (middle, mdir) = walls
        .iter()
        .copied()
        .fold((0, (0.0, 0.0)), |b, w| if b.1 == (0.0, 0.0) || dot(w.1, heading) > dot(b.1, heading) { w } else { b });
    let left = (-mdir.1, mdir.0);
    let right = (mdir.1, -mdir.0);
    let mut roles = [None; BOX_FACES];
    for (face, dir) in walls {
        roles[face] = if face == middle {
            Some(Role::WallMiddle)
        } else if dir == left {
            Some(Role::WallLeft)
        } else if dir == right {
            Some(Role::WallRight)
        } else {
            None
        };
    }
    roles[4] = Some(Role::Floor);
    roles[5] = Some(Role::Ceiling);
    roles
}

/// Analytic rendering of a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRender {
    pub frame: Frame,
    pub depth: DepthMap,
    pub labels: LabelMap,
    /// Camera-frame planes of the visible surfaces, indexed by label.
    pub planes: Vec<Plane>,
    /// Room role of each visible plane, if it is a room face.
    pub plane_roles: Vec<Option<Role>>,
    /// Room-face roles with the furniture removed.
    pub roles: RoleMap,
    pub image: RgbImage,
}

impl SceneRender {
    /// Role assignment of the visible room planes.
    pub fn role_assignment(&self) -> RoleAssignment {
        RoleAssignment::new(self.plane_roles.iter().enumerate().filter_map(|(i, r)| r.map(|r| (r, i))))
            .expect("room faces are distinct planes")
    }
}

/// Casts one ray per pixel center and labels each pixel with the merged
/// plane of the nearest face.
pub fn render_scene(spec: &SceneSpec) -> Result<SceneRender> {
    spec.validate()?;
    let frame = spec.frame()?;
    let k = frame.intrinsics;
    let to_world = frame.pose.rotation().transpose();
    let origin = Vec3::from(spec.camera.position);
    let faces = spec.face_planes();
    let (face_plane, world_planes) = merge_coplanar(&faces);
    let face_roles = room_face_roles(&spec.camera);

    let n = k.pixel_count();
    let mut hit_plane = vec![usize::MAX; n];
    let mut hit_depth = vec![f64::NAN; n];
    let mut roles = RoleMap::filled(k.width, k.height, None);
    for v in 0..k.height {
        for u in 0..k.width {
            // the ray has unit camera z, so distances along it are depths
            let dir = to_world * k.ray(u as f64, v as f64);
            let (room_t, room_face) = room_exit(&spec.room, &origin, &dir);
            let mut best = (room_t, room_face);
            for (ci, c) in spec.cuboids.iter().enumerate() {
                if let Some((t, f)) = c.hit(&origin, &dir) {
                    if t < best.0 {
                        best = (t, BOX_FACES * (ci + 1) + f);
                    }
                }
            }
            let i = v * k.width + u;
            hit_plane[i] = face_plane[best.1];
            hit_depth[i] = best.0;
            roles.set_at(i, face_roles[room_face]);
        }
    }

    let mut visible: Vec<usize> = hit_plane.clone();
    visible.sort_unstable();
    visible.dedup();
    let mut label_of = vec![usize::MAX; world_planes.len()];
    for (label, &p) in visible.iter().enumerate() {
        label_of[p] = label;
    }
    let planes = visible
        .iter()
        .map(|&p| {
            frame.pose.plane_to_camera(&world_planes[p]).to_plane().map_err(|_| {
                Error::InvalidConfig("a visible surface lies on a plane through the camera center".into())
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let plane_roles = visible
        .iter()
        .map(|&p| (0..BOX_FACES).find(|&f| face_plane[f] == p).and_then(|f| face_roles[f]))
        .collect();

    let labels = LabelMap::from_raw(k.width, k.height, visible.len(), hit_plane.iter().map(|&p| label_of[p]).collect())?;
    let depth = DepthMap::from_values(k.width, k.height, hit_depth)?;
    let image = shade(&hit_plane, &k, spec.rng_seed);
    Ok(SceneRender { frame, depth, labels, planes, plane_roles, roles, image })
}

/// Flat per-plane albedo with small seeded noise.
fn shade(plane_ids: &[usize], k: &CameraIntrinsics, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a6e);
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    let data = plane_ids
        .iter()
        .map(|&p| {
            let albedo = 40.0 + 170.0 * ((p as f64 + 1.0) * 0.618_033_988_749_895).fract();
            let n: f64 = noise.sample(&mut rng);
            let g = (albedo + n).clamp(0.0, 255.0);
            [g, g, g]
        })
        .collect();
    RgbImage::new(k.width, k.height, data).expect("sized by construction")
}

/// Triangulated room and cuboids; room faces carry labels `0..6` and cuboid
/// `i` carries label `6 + i`. Each face is split into a `subdivisions`
/// squared grid of quads, two triangles each.
pub fn emit_mesh(spec: &SceneSpec, subdivisions: usize) -> Result<SemanticMesh> {
    spec.validate()?;
    if subdivisions == 0 {
        return Err(Error::InvalidConfig("subdivisions must be positive".into()));
    }
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut labels = Vec::new();
    let mut quad = |corner: Vec3, e1: Vec3, e2: Vec3, label: u32| {
        let base = vertices.len();
        let n = subdivisions;
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(corner + e1 * (i as f64 / n as f64) + e2 * (j as f64 / n as f64));
                labels.push(label);
            }
        }
        for j in 0..n {
            for i in 0..n {
                let a = base + j * (n + 1) + i;
                let (b, c, d) = (a + 1, a + n + 2, a + n + 1);
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
    };
    let [w, d, h] = spec.room;
    let ex = Vec3::new(w, 0.0, 0.0);
    let ey = Vec3::new(0.0, d, 0.0);
    let ez = Vec3::new(0.0, 0.0, h);
    let o = Vec3::zeros();
    quad(o, ey, ez, 0);
    quad(ex, ey, ez, 1);
    quad(o, ex, ez, 2);
    quad(ey, ex, ez, 3);
    quad(o, ex, ey, 4);
    quad(ez, ex, ey, 5);
    for (ci, c) in spec.cuboids.iter().enumerate() {
        let r = c.rotation();
        let half = Vec3::from(c.size) / 2.0;
        let center = Vec3::from(c.center);
        let label = (BOX_FACES + ci) as u32;
        for axis in 0..3 {
            let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
            let e1 = r.column(a1) * c.size[a1];
            let e2 = r.column(a2) * c.size[a2];
            for sign in [-1.0, 1.0] {
                let mut local = -half;
                local[axis] = sign * half[axis];
                quad(center + r * local, e1, e2, label);
            }
        }
    }
    SemanticMesh::new(vertices, triangles, labels)
}

/// Number of scenes in the standard benchmark suite.
pub const SUITE_SIZE: usize = 20;
/// Furniture bound of the standard suite.
pub const SUITE_MAX_CUBOIDS: usize = 3;

/// The standard benchmark suite: random rooms seeded `0..SUITE_SIZE`.
pub fn standard_suite() -> Vec<SceneSpec> {
    (0..SUITE_SIZE as u64).map(|s| SceneSpec::random(s, SUITE_MAX_CUBOIDS)).collect()
}

/// Sensor noise of the standard suite: 1 cm Gaussian noise, 10% dropout.
pub fn suite_noise() -> NoiseSpec {
    NoiseSpec { depth_gaussian_sigma: 0.01, dropout_fraction: 0.1, quantization_step: 0.0 }
}

/// Sensor corruption applied to a depth map.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Standard deviation of additive Gaussian depth noise, meters.
    pub depth_gaussian_sigma: f64,
    /// Fraction of valid pixels invalidated.
    pub dropout_fraction: f64,
    /// Quantization step, meters; 0 disables.
    pub quantization_step: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.depth_gaussian_sigma) || !ok(self.quantization_step) || !(0.0..=1.0).contains(&self.dropout_fraction)
        {
            return Err(Error::InvalidConfig(format!("invalid noise spec {self:?}")));
        }
        Ok(())
    }
}

/// Gaussian noise, then exact-count dropout over the valid pixels, then
/// quantization. Depths pushed to zero or below become invalid.
pub fn corrupt(depth: &DepthMap, noise: &NoiseSpec, seed: u64) -> Result<DepthMap> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = depth.clone();
    if noise.depth_gaussian_sigma > 0.0 {
        let normal = Normal::new(0.0, noise.depth_gaussian_sigma).expect("validated sigma");
        for i in 0..out.len() {
            if let Some(z) = out.at(i) {
                out.set_at(i, Some(z + normal.sample(&mut rng)));
            }
        }
    }
    if noise.dropout_fraction > 0.0 {
        let valid: Vec<usize> = (0..out.len()).filter(|&i| out.at(i).is_some()).collect();
        let count = (noise.dropout_fraction * valid.len() as f64).round() as usize;
        for j in index::sample(&mut rng, valid.len(), count) {
            out.invalidate(valid[j]);
        }
    }
    if noise.quantization_step > 0.0 {
        let step = noise.quantization_step;
        for i in 0..out.len() {
            if let Some(z) = out.at(i) {
                out.set_at(i, Some((z / step).round() * step));
            }
        }
    }
    Ok(out)
}

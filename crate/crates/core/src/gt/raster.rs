use crate::geometry::{CameraIntrinsics, Frame, Vec3};
use crate::maps::{DepthMap, LabelMap};
use crate::mesh::SemanticMesh;

use super::FittedMeshPlanes;

/// Camera-space near clipping distance, meters.
pub const NEAR_PLANE: f64 = 1e-3;

/// Lowest plane id shared by all three vertices of a triangle.
fn common_plane(fitted: &FittedMeshPlanes, tri: &[usize; 3]) -> Option<usize> {
    let [a, b, c] = tri.map(|v| &fitted.vertex_memberships[v]);
    a.iter().copied().find(|p| b.contains(p) && c.contains(p))
}

/// Sutherland-Hodgman clip of a polygon against `z >= NEAR_PLANE`.
fn clip_near(poly: &[Vec3]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let cur_in = cur.z >= NEAR_PLANE;
        let next_in = next.z >= NEAR_PLANE;
        if cur_in {
            out.push(cur);
        }
        if cur_in != next_in {
            let t = (NEAR_PLANE - cur.z) / (next.z - cur.z);
            let mut p = cur + (next - cur) * t;
            p.z = NEAR_PLANE;
            out.push(p);
        }
    }
    out
}

#[inline]
fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Top-left rule for positively oriented triangles in y-down coordinates.
#[inline]
fn is_top_left(a: (f64, f64), b: (f64, f64)) -> bool {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

struct Target<'a> {
    k: &'a CameraIntrinsics,
    zbuf: Vec<f64>,
    labels: LabelMap,
    depth: DepthMap,
}

impl Target<'_> {
    fn triangle(&mut self, verts: [Vec3; 3], label: usize) {
        let k = self.k;
        let mut s = verts.map(|x| (k.fx * x.x / x.z + k.cx, k.fy * x.y / x.z + k.cy));
        let mut inv_z = verts.map(|x| 1.0 / x.z);
        let mut area = edge(s[0], s[1], s[2]);
        if !area.is_finite() || area.abs() <= 1e-12 {
            return;
        }
        if area < 0.0 {
            s.swap(1, 2);
            inv_z.swap(1, 2);
            area = -area;
        }
        let (w, h) = (k.width as f64, k.height as f64);
        let min_x = s.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).ceil().max(0.0);
        let max_x = s.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).floor().min(w - 1.0);
        let min_y = s.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).ceil().max(0.0);
        let max_y = s.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).floor().min(h - 1.0);
        if min_x > max_x || min_y > max_y {
            return;
        }
        let edges = [(s[1], s[2]), (s[2], s[0]), (s[0], s[1])];
        let top_left = edges.map(|(a, b)| is_top_left(a, b));
        for v in min_y as usize..=max_y as usize {
            for u in min_x as usize..=max_x as usize {
                let p = (u as f64, v as f64);
                let mut bary = [0.0; 3];
                let mut inside = true;
                for e in 0..3 {
                    let we = edge(edges[e].0, edges[e].1, p);
                    if we < 0.0 || (we == 0.0 && !top_left[e]) {
                        inside = false;
                        break;
                    }
                    bary[e] = we / area;
                }
                if !inside {
                    continue;
                }
                let iz = bary[0] * inv_z[0] + bary[1] * inv_z[1] + bary[2] * inv_z[2];
                let z = 1.0 / iz;
                let i = v * k.width + u;
                if z < self.zbuf[i] {
                    self.zbuf[i] = z;
                    self.labels.set_at(i, Some(label));
                    self.depth.set_at(i, Some(z));
                }
            }
        }
    }
}

/// Rasterizes plane-consistent triangles into a frame with a z-buffer.
///
/// A triangle is drawn when its three vertices are fitted by a common plane;
/// vertices are first projected onto that plane so the interpolated depth is
/// the plane's depth. Depth is interpolated perspective-correctly through `1/z`.
/// Pixel centers are sampled at integer coordinates with a top-left fill rule.
pub fn rasterize_frame(mesh: &SemanticMesh, fitted: &FittedMeshPlanes, frame: &Frame) -> (LabelMap, DepthMap) {
    let k = &frame.intrinsics;
    let mut target = Target {
        k,
        zbuf: vec![f64::INFINITY; k.pixel_count()],
        labels: LabelMap::unlabeled(k.width, k.height, fitted.planes.len()),
        depth: DepthMap::invalid(k.width, k.height),
    };
    for tri in mesh.triangles() {
        let Some(plane) = common_plane(fitted, tri) else { continue };
        let eq = &fitted.planes[plane];
        let cam = tri.map(|v| frame.pose.to_camera(&eq.project_point(&mesh.vertices()[v])));
        let poly = clip_near(&cam);
        for i in 1..poly.len().saturating_sub(1) {
            target.triangle([poly[0], poly[i], poly[i + 1]], plane);
        }
    }
    (target.labels, target.depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{plane_depth, Pose};
    use crate::gt::fit_semantic_planes;
    use crate::ransac::RansacConfig;
    use approx::assert_abs_diff_eq;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(40.0, 40.0, 15.5, 11.5, 32, 24).unwrap()
    }

    fn square_mesh(z: f64, x0: f64, x1: f64, y0: f64, y1: f64, label: u32) -> (Vec<Vec3>, Vec<[usize; 3]>, Vec<u32>) {
        let v = vec![Vec3::new(x0, y0, z), Vec3::new(x1, y0, z), Vec3::new(x1, y1, z), Vec3::new(x0, y1, z)];
        (v, vec![[0, 1, 2], [0, 2, 3]], vec![label; 4])
    }

    fn fit(mesh: &SemanticMesh) -> FittedMeshPlanes {
        fit_semantic_planes(mesh, &RansacConfig { min_inliers: 3, ..Default::default() }).unwrap()
    }

    #[test]
    fn frontal_square_fills_left_half() {
        // x in [-2, 0] at z = 2 covers columns with (u - cx)/fx * 2 <= 0, i.e. u <= 15
        let (v, t, l) = square_mesh(2.0, -2.0, 0.0, -2.0, 2.0, 0);
        let mesh = SemanticMesh::new(v, t, l).unwrap();
        let fitted = fit(&mesh);
        let frame = Frame { intrinsics: k(), pose: Pose::identity() };
        let (labels, depth) = rasterize_frame(&mesh, &fitted, &frame);
        for v in 0..24 {
            for u in 0..32 {
                assert_eq!(labels.get(u, v).is_some(), u <= 15, "pixel {u},{v}");
                if let Some(z) = depth.get(u, v) {
                    assert_abs_diff_eq!(z, 2.0, epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn triangle_behind_camera_writes_nothing() {
        let (v, t, l) = square_mesh(-2.0, -1.0, 1.0, -1.0, 1.0, 0);
        let mesh = SemanticMesh::new(v, t, l).unwrap();
        let fitted = fit(&mesh);
        let frame = Frame { intrinsics: k(), pose: Pose::identity() };
        let (labels, depth) = rasterize_frame(&mesh, &fitted, &frame);
        assert_eq!(labels.planar_count(), 0);
        assert_eq!(depth.valid_count(), 0);
    }

    #[test]
    fn nearer_plane_wins_overlap() {
        let (mut v, mut t, mut l) = square_mesh(3.0, -5.0, 5.0, -5.0, 5.0, 0);
        let (v2, t2, l2) = square_mesh(2.0, -0.5, 0.5, -0.5, 0.5, 1);
        let base = v.len();
        v.extend(v2);
        t.extend(t2.iter().map(|tri| tri.map(|i| i + base)));
        l.extend(l2);
        let mesh = SemanticMesh::new(v, t, l).unwrap();
        let fitted = fit(&mesh);
        let near = (0..fitted.planes.len()).find(|&p| fitted.planes[p].offset.abs() < 2.5).unwrap();
        let frame = Frame { intrinsics: k(), pose: Pose::identity() };
        let (labels, depth) = rasterize_frame(&mesh, &fitted, &frame);
        assert_eq!(labels.get(15, 11), Some(near));
        assert_abs_diff_eq!(depth.get(15, 11).unwrap(), 2.0, epsilon = 1e-9);
        assert_eq!(labels.get(0, 0), Some(1 - near));
    }

    #[test]
    fn clipped_oblique_plane_matches_plane_depth() {
        // floor y = 1 extending behind the camera
        let v = vec![
            Vec3::new(-5.0, 1.0, -5.0),
            Vec3::new(5.0, 1.0, -5.0),
            Vec3::new(5.0, 1.0, 10.0),
            Vec3::new(-5.0, 1.0, 10.0),
        ];
        let mesh = SemanticMesh::new(v, vec![[0, 1, 2], [0, 2, 3]], vec![0; 4]).unwrap();
        let fitted = fit(&mesh);
        let frame = Frame { intrinsics: k(), pose: Pose::identity() };
        let (labels, depth) = rasterize_frame(&mesh, &fitted, &frame);
        let plane = frame.pose.plane_to_camera(&fitted.planes[0]).to_plane().unwrap();
        let mut count = 0;
        for v in 0..24 {
            for u in 0..32 {
                if labels.get(u, v).is_some() {
                    count += 1;
                    let expected = plane_depth(&plane, u as f64, v as f64, &k()).unwrap();
                    assert!((depth.get(u, v).unwrap() - expected).abs() <= 1e-6);
                }
            }
        }
        assert!(count > 0);
    }

    #[test]
    fn shared_edges_cover_each_pixel_once() {
        // two triangles of a square share the diagonal; the fill rule leaves no gaps
        let (v, t, l) = square_mesh(1.0, -0.3, 0.3, -0.2, 0.2, 0);
        let mesh = SemanticMesh::new(v, t, l).unwrap();
        let fitted = fit(&mesh);
        let frame = Frame { intrinsics: k(), pose: Pose::identity() };
        let (labels, _) = rasterize_frame(&mesh, &fitted, &frame);
        // columns: 15.5 + 40 * [-0.3, 0.3] = [3.5, 27.5] -> 4..=27; rows 11.5 +- 8 -> 4..=19
        assert_eq!(labels.planar_count(), 24 * 16);
    }
}

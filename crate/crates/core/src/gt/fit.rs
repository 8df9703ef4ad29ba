use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fit_plane_equation, PlaneEquation, Point3Set};
use crate::mesh::SemanticMesh;
use crate::ransac::{extract_planes, RansacConfig};

/// World-frame planes fitted to a semantic mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedMeshPlanes {
    pub planes: Vec<PlaneEquation>,
    /// Semantic labels each plane spans (one before merging).
    pub plane_labels: Vec<BTreeSet<u32>>,
    /// First-fit plane per vertex in extraction order.
    pub vertex_assignment: Vec<Option<usize>>,
    /// Every plane of the vertex's label within the inlier threshold, ascending.
    pub vertex_memberships: Vec<Vec<usize>>,
    /// Labels for which no plane reached the minimum inlier count.
    pub unplaned_labels: Vec<u32>,
    pub inlier_threshold: f64,
}

impl FittedMeshPlanes {
    pub fn assigned_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.planes.len()];
        for p in self.vertex_assignment.iter().flatten() {
            counts[*p] += 1;
        }
        counts
    }

    fn recompute_memberships(&mut self, mesh: &SemanticMesh) {
        let labels = mesh.vertex_labels();
        for (v, x) in mesh.vertices().iter().enumerate() {
            self.vertex_memberships[v] = (0..self.planes.len())
                .filter(|&p| self.plane_labels[p].contains(&labels[v]))
                .filter(|&p| self.planes[p].distance(x) <= self.inlier_threshold)
                .collect();
        }
    }
}

fn label_seed(seed: u64, label: u32) -> u64 {
    seed ^ (u64::from(label) + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs RANSAC extraction independently on each semantic label's vertices.
pub fn fit_semantic_planes(mesh: &SemanticMesh, cfg: &RansacConfig) -> Result<FittedMeshPlanes> {
    if mesh.is_empty() {
        return Err(Error::InvalidInput("mesh has no vertices".into()));
    }
    cfg.validate()?;
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in mesh.vertex_labels().iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }

    let n = mesh.vertices().len();
    let mut fitted = FittedMeshPlanes {
        planes: Vec::new(),
        plane_labels: Vec::new(),
        vertex_assignment: vec![None; n],
        vertex_memberships: vec![Vec::new(); n],
        unplaned_labels: Vec::new(),
        inlier_threshold: cfg.inlier_threshold,
    };
    let all = Point3Set::new(mesh.vertices().to_vec());
    for (label, members) in groups {
        let points = all.subset(&members);
        let label_cfg = RansacConfig { rng_seed: label_seed(cfg.rng_seed, label), ..*cfg };
        let extracted = match extract_planes(&points, &label_cfg) {
            Ok(planes) => planes,
            Err(Error::NoPlaneFound { .. } | Error::InvalidInput(_)) => {
                fitted.unplaned_labels.push(label);
                continue;
            }
            Err(e) => return Err(e),
        };
        let first_id = fitted.planes.len();
        for plane in &extracted {
            fitted.planes.push(plane.equation);
            fitted.plane_labels.push(BTreeSet::from([label]));
        }
        for &v in &members {
            let x = &mesh.vertices()[v];
            let within: Vec<usize> = (first_id..fitted.planes.len())
                .filter(|&p| fitted.planes[p].distance(x) <= cfg.inlier_threshold)
                .collect();
            fitted.vertex_assignment[v] = within.first().copied();
            fitted.vertex_memberships[v] = within;
        }
    }
    Ok(fitted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MergeConfig {
    /// Maximum unoriented normal angle, degrees.
    pub max_normal_angle: f64,
    /// Maximum mean distance of the smaller plane's vertices to the larger plane, meters.
    pub max_mean_distance: f64,
    /// Use the larger of both directed mean distances instead.
    pub symmetric: bool,
}

impl Default for MergeConfig {
    fn default() -> Self {
        Self { max_normal_angle: 20.0, max_mean_distance: 0.05, symmetric: false }
    }
}

fn members_of(fitted: &FittedMeshPlanes, plane: usize) -> Vec<usize> {
    fitted
        .vertex_assignment
        .iter()
        .enumerate()
        .filter(|(_, a)| **a == Some(plane))
        .map(|(v, _)| v)
        .collect()
}

fn mean_distance(plane: &PlaneEquation, vertices: &[usize], mesh: &SemanticMesh) -> Option<f64> {
    if vertices.is_empty() {
        return None;
    }
    let sum: f64 = vertices.iter().map(|&v| plane.distance(&mesh.vertices()[v])).sum();
    Some(sum / vertices.len() as f64)
}

/// Merge predicate for an ordered pair (larger `a`, smaller `b`); returns the
/// mean distance when the pair qualifies.
pub fn merge_score(
    fitted: &FittedMeshPlanes,
    mesh: &SemanticMesh,
    a: usize,
    b: usize,
    cfg: &MergeConfig,
) -> Option<f64> {
    if !fitted.plane_labels[a].is_disjoint(&fitted.plane_labels[b]) {
        return None;
    }
    if !(fitted.planes[a].normal_angle_deg(&fitted.planes[b]) < cfg.max_normal_angle) {
        return None;
    }
    let b_members = members_of(fitted, b);
    let mut dist = mean_distance(&fitted.planes[a], &b_members, mesh)?;
    if cfg.symmetric {
        dist = dist.max(mean_distance(&fitted.planes[b], &members_of(fitted, a), mesh)?);
    }
    (dist < cfg.max_mean_distance).then_some(dist)
}

/// Orders a pair as (larger, smaller) by assigned vertex count, ties to the lower id.
fn larger_first(counts: &[usize], i: usize, j: usize) -> (usize, usize) {
    if counts[j] > counts[i] {
        (j, i)
    } else {
        (i, j)
    }
}

/// Greedily merges planes spanning different semantic labels, closest pair
/// first, refitting each merged plane on the union of its vertices. Union
/// vertices left beyond the inlier threshold by the refit become unassigned.
pub fn merge_planes(fitted: &FittedMeshPlanes, mesh: &SemanticMesh, cfg: &MergeConfig) -> FittedMeshPlanes {
    let mut out = fitted.clone();
    loop {
        let counts = out.assigned_counts();
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..out.planes.len() {
            for j in i + 1..out.planes.len() {
                let (a, b) = larger_first(&counts, i, j);
                if let Some(d) = merge_score(&out, mesh, a, b, cfg) {
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, a, b));
                    }
                }
            }
        }
        let Some((_, a, b)) = best else { break };

        let union: Vec<usize> = out
            .vertex_assignment
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Some(p) if *p == a || *p == b))
            .map(|(v, _)| v)
            .collect();
        if let Ok(fit) = fit_plane_equation(&Point3Set::new(union.iter().map(|&v| mesh.vertices()[v]).collect())) {
            out.planes[a] = fit.equation;
        }
        let labels_b = out.plane_labels[b].clone();
        out.plane_labels[a].extend(labels_b);

        for &v in &union {
            let ok = out.planes[a].distance(&mesh.vertices()[v]) <= out.inlier_threshold;
            out.vertex_assignment[v] = ok.then_some(a);
        }
        out.planes.remove(b);
        out.plane_labels.remove(b);
        for p in out.vertex_assignment.iter_mut().flatten() {
            if *p > b {
                *p -= 1;
            }
        }
        out.recompute_memberships(mesh);
    }
    out
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Frame, Plane};
use crate::maps::{same_size, DepthMap, LabelMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Minimum plane area as a fraction of the image.
    pub min_plane_area: f64,
    /// Minimum fraction of pixels covered by surviving planes.
    pub min_frame_coverage: f64,
    /// Maximum number of planes kept per frame.
    pub k_max: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { min_plane_area: 0.01, min_frame_coverage: 0.5, k_max: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSample {
    pub frame: Frame,
    pub label_map: LabelMap,
    pub depth_map: DepthMap,
    /// Camera-frame planes, indexed by label, in descending area order.
    pub planes: Vec<Plane>,
    pub planar_coverage: f64,
    /// Input plane id of each surviving plane.
    pub source_ids: Vec<usize>,
}

/// Why a frame produced no sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Rejection {
    LowCoverage { coverage: f64, required: f64 },
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rejection::LowCoverage { coverage, required } => {
                write!(f, "planar coverage {coverage:.4} below {required}")
            }
        }
    }
}

/// Drops small planes, caps the plane count and rejects poorly covered frames.
///
/// `planes[i]` is the camera-frame plane of label `i`, or `None` when the
/// plane passes through the camera center; such labels are treated as dropped.
pub fn filter_sample(
    label_map: &LabelMap,
    depth_map: &DepthMap,
    planes: &[Option<Plane>],
    frame: &Frame,
    cfg: &FilterConfig,
) -> Result<std::result::Result<GroundTruthSample, Rejection>> {
    same_size(label_map.size(), depth_map.size(), "label and depth maps")?;
    if planes.len() != label_map.num_planes() {
        return Err(Error::DimensionMismatch(format!(
            "{} planes for a label map over {}",
            planes.len(),
            label_map.num_planes()
        )));
    }
    let total = label_map.len();
    let areas = label_map.areas();
    let mut kept: Vec<usize> = (0..planes.len())
        .filter(|&p| planes[p].is_some() && areas[p] > 0 && areas[p] as f64 >= cfg.min_plane_area * total as f64)
        .collect();
    kept.sort_by(|&a, &b| areas[b].cmp(&areas[a]).then(a.cmp(&b)));
    kept.truncate(cfg.k_max);

    let covered: usize = kept.iter().map(|&p| areas[p]).sum();
    let coverage = if total == 0 { 0.0 } else { covered as f64 / total as f64 };
    if coverage < cfg.min_frame_coverage {
        return Ok(Err(Rejection::LowCoverage { coverage, required: cfg.min_frame_coverage }));
    }

    let mut mapping = vec![None; planes.len()];
    for (new, &old) in kept.iter().enumerate() {
        mapping[old] = Some(new);
    }
    Ok(Ok(GroundTruthSample {
        frame: *frame,
        label_map: label_map.relabel(&mapping, kept.len()),
        depth_map: depth_map.clone(),
        planes: kept.iter().map(|&p| planes[p].expect("kept planes exist")).collect(),
        planar_coverage: coverage,
        source_ids: kept,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CameraIntrinsics, Pose, Vec3};

    fn frame() -> Frame {
        Frame { intrinsics: CameraIntrinsics::centered(50.0, 20, 10).unwrap(), pose: Pose::identity() }
    }

    fn plane(z: f64) -> Option<Plane> {
        Some(Plane::from_param(Vec3::new(0.0, 0.0, z)).unwrap())
    }

    /// Label map of 1000 pixels where label i covers `counts[i]` pixels.
    fn labels(counts: &[usize]) -> LabelMap {
        let mut raw = Vec::new();
        for (i, &c) in counts.iter().enumerate() {
            raw.extend(std::iter::repeat_n(i, c));
        }
        raw.resize(1000, counts.len());
        LabelMap::from_raw(50, 20, counts.len(), raw).unwrap()
    }

    fn run(counts: &[usize], cfg: &FilterConfig) -> std::result::Result<GroundTruthSample, Rejection> {
        let lm = labels(counts);
        let planes: Vec<_> = (0..counts.len()).map(|i| plane(1.0 + i as f64)).collect();
        let k = CameraIntrinsics::centered(50.0, 50, 20).unwrap();
        let f = Frame { intrinsics: k, pose: Pose::identity() };
        filter_sample(&lm, &DepthMap::invalid(50, 20), &planes, &f, cfg).unwrap()
    }

    #[test]
    fn coverage_boundary() {
        let cfg = FilterConfig::default();
        assert!(matches!(run(&[490], &cfg), Err(Rejection::LowCoverage { .. })));
        let ok = run(&[510], &cfg).unwrap();
        assert_eq!(ok.planar_coverage, 0.51);
        assert!(run(&[500], &cfg).is_ok());
    }

    #[test]
    fn small_planes_are_dropped() {
        // 5 pixels = 0.5 %, 10 pixels = exactly 1 %
        let s = run(&[600, 5, 10], &FilterConfig::default()).unwrap();
        assert_eq!(s.source_ids, vec![0, 2]);
        assert_eq!(s.label_map.areas(), vec![600, 10]);
        assert_eq!(s.label_map.raw()[600], s.label_map.non_planar());
        let s = run(&[600, 9], &FilterConfig::default()).unwrap();
        assert_eq!(s.planes.len(), 1);
    }

    #[test]
    fn caps_plane_count_by_area() {
        let counts: Vec<usize> = (0..12).map(|i| 40 + 5 * i).collect();
        let s = run(&counts, &FilterConfig::default()).unwrap();
        assert_eq!(s.planes.len(), 10);
        assert_eq!(s.source_ids, (2..12).rev().collect::<Vec<_>>());
        let areas = s.label_map.areas();
        assert!(areas.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn degenerate_plane_is_dropped() {
        let lm = labels(&[700, 200]);
        let planes = vec![plane(1.0), None];
        let s = filter_sample(&lm, &DepthMap::invalid(50, 20), &planes, &frame(), &FilterConfig::default())
            .unwrap()
            .unwrap();
        assert_eq!(s.planes.len(), 1);
        assert!((s.planar_coverage - 0.7).abs() < 1e-12);
    }
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Frame;
use crate::mesh::SemanticMesh;
use crate::ransac::RansacConfig;

use super::{filter_sample, fit_semantic_planes, merge_planes, rasterize_frame};
use super::{FilterConfig, FittedMeshPlanes, GroundTruthSample, MergeConfig, Rejection};

/// A reconstructed scene and its camera trajectory.
#[derive(Debug, Clone)]
pub struct SceneInput {
    pub name: String,
    pub mesh: SemanticMesh,
    pub frames: Vec<Frame>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Process every `stride`-th frame.
    pub stride: usize,
    /// Fraction of scenes assigned to the training split.
    pub split: f64,
    pub seed: u64,
    pub ransac: RansacConfig,
    pub merge: MergeConfig,
    pub filter: FilterConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            stride: 10,
            split: 0.9,
            seed: 0,
            ransac: RansacConfig::default(),
            merge: MergeConfig::default(),
            filter: FilterConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub scene: String,
    pub frame_index: usize,
    pub split: Split,
    pub accepted: bool,
    pub reason: Option<String>,
    pub num_planes: usize,
    pub planar_coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub stride: usize,
    pub split: f64,
    pub train_scenes: Vec<String>,
    pub test_scenes: Vec<String>,
    pub frames: Vec<FrameRecord>,
}

#[derive(Debug, Clone)]
pub struct DatasetSample {
    pub scene: String,
    pub frame_index: usize,
    pub split: Split,
    pub sample: GroundTruthSample,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<DatasetSample>,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &DatasetSample> {
        self.samples.iter().filter(move |s| s.split == split)
    }
}

/// Fits and merges the planes of one scene mesh.
pub fn fit_scene(mesh: &SemanticMesh, ransac: &RansacConfig, merge: &MergeConfig) -> Result<FittedMeshPlanes> {
    let fitted = fit_semantic_planes(mesh, ransac)?;
    Ok(merge_planes(&fitted, mesh, merge))
}

/// Rasterizes and filters one frame of a fitted scene.
pub fn generate_sample(
    mesh: &SemanticMesh,
    fitted: &FittedMeshPlanes,
    frame: &Frame,
    filter: &FilterConfig,
) -> Result<std::result::Result<GroundTruthSample, Rejection>> {
    let (labels, depth) = rasterize_frame(mesh, fitted, frame);
    let planes: Vec<_> =
        fitted.planes.iter().map(|p| frame.pose.plane_to_camera(p).to_plane().ok()).collect();
    filter_sample(&labels, &depth, &planes, frame, filter)
}

/// Scene-level seeded split into train/test, then per-frame generation over
/// every `stride`-th frame.
pub fn build_dataset(scenes: &[SceneInput], cfg: &DatasetConfig) -> Result<Dataset> {
    if scenes.is_empty() {
        return Err(Error::InvalidInput("need at least one scene".into()));
    }
    if cfg.stride == 0 || !(0.0..=1.0).contains(&cfg.split) {
        return Err(Error::InvalidInput("stride must be positive and split within [0, 1]".into()));
    }
    let mut order: Vec<usize> = (0..scenes.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let n_train = (cfg.split * scenes.len() as f64).round() as usize;
    if n_train == 0 {
        return Err(Error::EmptySplit("training split received no scenes".into()));
    }
    if n_train == scenes.len() {
        return Err(Error::EmptySplit("test split received no scenes".into()));
    }
    let mut split_of = vec![Split::Test; scenes.len()];
    for &i in &order[..n_train] {
        split_of[i] = Split::Train;
    }

    let mut samples = Vec::new();
    let mut records = Vec::new();
    for (si, scene) in scenes.iter().enumerate() {
        let split = split_of[si];
        let ransac = RansacConfig { rng_seed: cfg.ransac.rng_seed ^ cfg.seed.rotate_left(17) ^ si as u64, ..cfg.ransac };
        let fitted = fit_scene(&scene.mesh, &ransac, &cfg.merge)?;
        let indices: Vec<usize> = (0..scene.frames.len()).step_by(cfg.stride).collect();
        let results: Vec<_> = indices
            .par_iter()
            .map(|&fi| generate_sample(&scene.mesh, &fitted, &scene.frames[fi], &cfg.filter))
            .collect();
        for (&fi, result) in indices.iter().zip(results) {
            match result? {
                Ok(sample) => {
                    records.push(FrameRecord {
                        scene: scene.name.clone(),
                        frame_index: fi,
                        split,
                        accepted: true,
                        reason: None,
                        num_planes: sample.planes.len(),
                        planar_coverage: sample.planar_coverage,
                    });
                    samples.push(DatasetSample { scene: scene.name.clone(), frame_index: fi, split, sample });
                }
                Err(rejection) => {
                    let coverage = match rejection {
                        Rejection::LowCoverage { coverage, .. } => coverage,
                    };
                    records.push(FrameRecord {
                        scene: scene.name.clone(),
                        frame_index: fi,
                        split,
                        accepted: false,
                        reason: Some(rejection.to_string()),
                        num_planes: 0,
                        planar_coverage: coverage,
                    });
                }
            }
        }
    }
    let names = |s: Split| scenes.iter().enumerate().filter(|(i, _)| split_of[*i] == s).map(|(_, sc)| sc.name.clone()).collect();
    Ok(Dataset {
        samples,
        manifest: Manifest {
            seed: cfg.seed,
            stride: cfg.stride,
            split: cfg.split,
            train_scenes: names(Split::Train),
            test_scenes: names(Split::Test),
            frames: records,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{emit_mesh, SceneSpec};

    fn scene(name: &str, frames: usize) -> SceneInput {
        let mut spec = SceneSpec::empty_room([5.0, 6.0, 3.0], [2.5, 2.0, 1.5], 0.0);
        (spec.focal, spec.width, spec.height) = (40.0, 48, 36);
        // 81 vertices per face, above the default RANSAC min_inliers
        let mesh = emit_mesh(&spec, 8).unwrap();
        let frames = (0..frames)
            .map(|i| {
                spec.camera.yaw_deg = i as f64 - 12.0;
                spec.frame().unwrap()
            })
            .collect();
        SceneInput { name: name.into(), mesh, frames }
    }

    fn cfg() -> DatasetConfig {
        DatasetConfig { seed: 5, ..Default::default() }
    }

    #[test]
    fn ninety_percent_of_scenes_train() {
        let scenes: Vec<SceneInput> = (0..10).map(|i| scene(&format!("s{i}"), 1)).collect();
        let ds = build_dataset(&scenes, &cfg()).unwrap();
        assert_eq!(ds.manifest.train_scenes.len(), 9);
        assert_eq!(ds.manifest.test_scenes.len(), 1);
        // the split is by scene: all frames of a scene share it
        for s in &ds.samples {
            assert_eq!(ds.manifest.test_scenes.contains(&s.scene), s.split == Split::Test);
        }
    }

    #[test]
    fn stride_selects_frames() {
        let scenes = vec![scene("a", 25), scene("b", 25)];
        let ds = build_dataset(&scenes, &DatasetConfig { split: 0.5, ..cfg() }).unwrap();
        let frames: Vec<usize> = ds.manifest.frames.iter().filter(|r| r.scene == "a").map(|r| r.frame_index).collect();
        assert_eq!(frames, vec![0, 10, 20]);
        assert!(ds.manifest.frames.iter().all(|r| r.accepted && r.reason.is_none()), "{:#?}", ds.manifest.frames);
    }

    #[test]
    fn same_seed_same_manifest() {
        let scenes: Vec<SceneInput> = (0..4).map(|i| scene(&format!("s{i}"), 3)).collect();
        let c = DatasetConfig { split: 0.5, stride: 1, ..cfg() };
        let a = build_dataset(&scenes, &c).unwrap();
        let b = build_dataset(&scenes, &c).unwrap();
        assert_eq!(a.manifest, b.manifest);
        assert_eq!(serde_json::to_string(&a.manifest).unwrap(), serde_json::to_string(&b.manifest).unwrap());
    }

    #[test]
    fn empty_split_is_an_error() {
        let scenes = vec![scene("a", 1), scene("b", 1)];
        assert!(matches!(build_dataset(&scenes, &DatasetConfig { split: 1.0, ..cfg() }), Err(Error::EmptySplit(_))));
        assert!(matches!(build_dataset(&scenes, &DatasetConfig { split: 0.1, ..cfg() }), Err(Error::EmptySplit(_))));
    }
}

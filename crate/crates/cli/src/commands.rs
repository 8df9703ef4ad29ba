//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use serde::Serialize;

use planekit::evaluation::{compose_depth, Evaluator, PlanarView};
use planekit::gt::{build_dataset, SceneInput, Split};
use planekit::io::{self, PlanesDocument, RunConfig};
use planekit::layout::{estimate_layout, layout_pixel_error, propose_roles, Role};
use planekit::losses::{
    chamfer_plane_loss, gradcheck, segmentation_loss, weighted_depth_loss, ChamferMode, DepthLossConfig, PlaneSet,
    SegmentationForm,
};
use planekit::manhattan::vote_manhattan_completed;
use planekit::ransac::extract_depth_planes;
use planekit::segmentation::{dcrf_refine, masks_to_labels, mrf_segment, mws_segment};
use planekit::synth::{corrupt, emit_mesh, render_scene, NoiseSpec, SceneSpec};
use planekit::{DepthMap, Error, ProbMaskStack, Result, RgbImage};

use crate::report::{eval_csv, flat_csv, recall_svg};
use crate::sample::{self, *};
use crate::{
    Command, EvalArgs, EvalLossArgs, ExtractArgs, Format, GenGtArgs, GradCheckArgs, LayoutArgs, RefineCrfArgs,
    SegmentArgs, SynthArgs,
};

/// Image used where a sample has no RGB frame: uniform gray, so every
/// pairwise term has full weight.
const NEUTRAL_GRAY: [f64; 3] = [128.0, 128.0, 128.0];

pub fn run(cmd: Command, cfg: &RunConfig, format: Format) -> Result<ExitCode> {
    match cmd {
        Command::Synth(a) => synth(a, cfg),
        Command::GenGt(a) => gen_gt(a, cfg),
        Command::Extract(a) => extract(a, cfg),
        Command::Segment(a) => segment(a, cfg),
        Command::RefineCrf(a) => refine_crf(a, cfg),
        Command::Eval(a) => eval(a, cfg, format),
        Command::EvalLoss(a) => eval_loss(a, cfg, format),
        Command::Layout(a) => layout(a, format),
        Command::GradCheck(a) => grad_check(a, cfg, format),
    }
}

fn seed(cfg: &RunConfig) -> u64 {
    cfg.rng_seed.unwrap_or(0)
}

/// Writes a report to `out`, or to stdout.
fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => io::write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_flat<T: Serialize>(value: &T, rows: &[(&str, Option<f64>)], format: Format, out: Option<&Path>) -> Result<()> {
    match format {
        Format::Json => emit(&io::to_json(value)?, out),
        Format::Csv => emit(&flat_csv(rows), out),
    }
}

/// Depth beyond the PNG range is dropped rather than failing the write.
fn storable(depth: &DepthMap) -> DepthMap {
    let values = depth.iter().map(|d| d.filter(|&z| z <= io::MAX_PNG_DEPTH)).collect::<Vec<_>>();
    DepthMap::from_options(depth.width(), depth.height(), &values).expect("same size")
}

fn image_or_gray(dir: &Path, size: (usize, usize)) -> Result<RgbImage> {
    let path = dir.join(RGB);
    if path.exists() {
        let image = io::read_rgb_png(path)?;
        if image.size() != size {
            return Err(Error::DimensionMismatch("rgb and depth differ in size".into()));
        }
        Ok(image)
    } else {
        Ok(RgbImage::filled(size.0, size.1, NEUTRAL_GRAY))
    }
}

fn synth(a: SynthArgs, cfg: &RunConfig) -> Result<ExitCode> {
    let seed = seed(cfg);
    let spec: SceneSpec = match &a.scene {
        Some(p) => io::read_json(p)?,
        None => SceneSpec::random(seed, a.max_cuboids),
    };
    let render = render_scene(&spec)?;
    ensure_dir(&a.out)?;
    let out = &a.out;
    io::write_rgb_png(out.join(RGB), &render.image)?;
    io::write_depth_png(out.join(DEPTH), &render.depth)?;
    io::write_label_png(out.join(LABELS), &render.labels)?;
    io::write_role_png(out.join(ROLES), &render.roles)?;
    let mut doc = PlanesDocument::new(PlaneSet::with_default_capacity(render.planes.clone())?);
    doc.roles = Some(render.role_assignment());
    doc.write(out.join(PLANES))?;
    io::write_json(out.join(INTRINSICS), &render.frame.intrinsics)?;
    io::write_json(out.join(SCENE), &spec)?;

    let noise = NoiseSpec {
        depth_gaussian_sigma: a.noise_sigma.unwrap_or(cfg.noise.depth_gaussian_sigma),
        dropout_fraction: a.dropout.unwrap_or(cfg.noise.dropout_fraction),
        quantization_step: a.quantization.unwrap_or(cfg.noise.quantization_step),
    };
    if noise != NoiseSpec::default() {
        let sensor = corrupt(&render.depth, &noise, seed)?;
        io::write_depth_png(out.join(SENSOR_DEPTH), &storable(&sensor))?;
    }
    if let Some(n) = a.mesh_subdivisions {
        io::write_ply(out.join(MESH), &emit_mesh(&spec, n)?)?;
        io::write_atomic(out.join(TRAJECTORY), io::trajectory_to_json(&[spec.frame()?])?.as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn scene_mesh(dir: &Path) -> Result<planekit::mesh::SemanticMesh> {
    let ply = dir.join(MESH);
    if ply.exists() {
        io::read_mesh(ply)
    } else {
        io::read_mesh(dir.join("mesh.obj"))
    }
}

fn gen_gt(a: GenGtArgs, cfg: &RunConfig) -> Result<ExitCode> {
    let mut dcfg = cfg.dataset;
    if let Some(s) = a.stride {
        dcfg.stride = s;
    }
    if let Some(s) = a.split {
        dcfg.split = s;
    }
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&a.scenes)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir() && p.join(TRAJECTORY).is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::InvalidInput(format!("no scene directories under {}", a.scenes.display())));
    }
    let scenes = dirs
        .iter()
        .map(|d| {
            Ok(SceneInput {
                name: d.file_name().expect("directory entry").to_string_lossy().into_owned(),
                mesh: scene_mesh(d)?,
                frames: io::read_trajectory(d.join(TRAJECTORY))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dataset = build_dataset(&scenes, &dcfg)?;
    for s in &dataset.samples {
        let split = match s.split {
            Split::Train => "train",
            Split::Test => "test",
        };
        let dir = a.out.join(split).join(&s.scene).join(format!("{:05}", s.frame_index));
        ensure_dir(&dir)?;
        let gt = &s.sample;
        io::write_depth_png(dir.join(DEPTH), &storable(&gt.depth_map))?;
        io::write_label_png(dir.join(LABELS), &gt.label_map)?;
        PlanesDocument::new(PlaneSet::with_default_capacity(gt.planes.clone())?).write(dir.join(PLANES))?;
        io::write_json(dir.join(INTRINSICS), &gt.frame.intrinsics)?;
    }
    ensure_dir(&a.out)?;
    io::write_json(a.out.join(MANIFEST), &dataset.manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn extract(a: ExtractArgs, cfg: &RunConfig) -> Result<ExitCode> {
    let k = sample::intrinsics(&a.input)?;
    let depth = input_depth(&a.input, a.depth.as_deref())?;
    check_size(&k, depth.size(), "depth")?;
    let mut ecfg = cfg.extract;
    ecfg.stride = a.stride.unwrap_or(ecfg.stride);
    ecfg.max_planes = a.max_planes.unwrap_or(ecfg.max_planes);
    ecfg.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let planes = extract_depth_planes(&depth, &k, &ecfg)?;
    let capacity = ecfg.max_planes.max(planekit::losses::DEFAULT_CAPACITY);
    PlanesDocument::new(PlaneSet::new(planes, capacity)?).write(&a.out)?;
    Ok(ExitCode::SUCCESS)
}

fn segment(a: SegmentArgs, cfg: &RunConfig) -> Result<ExitCode> {
    let k = sample::intrinsics(&a.input)?;
    let depth = input_depth(&a.input, a.depth.as_deref())?;
    check_size(&k, depth.size(), "depth")?;
    let image = image_or_gray(&a.input, depth.size())?;
    let doc = PlanesDocument::read(&a.planes)?;
    let mut mcfg = cfg.mrf;
    if let Some(s) = a.solver {
        mcfg.solver = s.into();
    }
    let (labels, planes) = if a.manhattan {
        let normals: Vec<_> = doc.planes.planes().iter().map(|p| (p.normal(), 1.0)).collect();
        let frame = vote_manhattan_completed(&normals, &cfg.manhattan)?;
        let out = mws_segment(&depth, &image, doc.planes.planes(), &k, &frame, &mcfg)?;
        (out.labels, out.planes)
    } else {
        let planes = doc.planes.planes().to_vec();
        (mrf_segment(&depth, &image, &planes, &k, &mcfg)?, planes)
    };
    ensure_dir(&a.out)?;
    io::write_label_png(a.out.join(LABELS), &labels)?;
    let capacity = doc.planes.capacity();
    PlanesDocument::new(PlaneSet::new(planes.clone(), capacity)?).write(a.out.join(PLANES))?;
    let composed = compose_depth(&labels, &planes, &depth, &k)?;
    io::write_depth_png(a.out.join(DEPTH), &storable(&composed))?;
    io::write_json(a.out.join(INTRINSICS), &k)?;
    Ok(ExitCode::SUCCESS)
}

fn refine_crf(a: RefineCrfArgs, cfg: &RunConfig) -> Result<ExitCode> {
    let masks = io::read_masks_npy(&a.masks)?;
    let image = io::read_rgb_png(&a.image)?;
    let mut dcfg = cfg.dcrf;
    if let Some(n) = a.iterations {
        dcfg.iterations = n;
    }
    if let Some(m) = a.mode {
        dcfg.mode = m.into();
    }
    let refined = dcrf_refine(&masks, &image, &dcfg)?;
    io::write_masks_npy(&a.out, &refined)?;
    if let Some(p) = &a.labels_out {
        io::write_label_png(p, &masks_to_labels(&refined))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn eval(a: EvalArgs, cfg: &RunConfig, format: Format) -> Result<ExitCode> {
    let mut evaluator = Evaluator::new(cfg.eval.clone())?;
    for rel in find_samples(&a.gt)? {
        let gt_dir = a.gt.join(&rel);
        let pred_dir = a.pred.join(&rel);
        let k = sample::intrinsics(&gt_dir)?;
        let gt = load_planar(&gt_dir)?;
        let pred = load_planar(&pred_dir)?;
        check_size(&k, gt.labels.size(), "ground-truth labels")?;
        check_size(&k, pred.labels.size(), "predicted labels")?;
        let gt_depth = match gt.depth {
            Some(d) => d,
            None => compose_depth(&gt.labels, &gt.planes, &DepthMap::invalid(k.width, k.height), &k)?,
        };
        let pred_depth = match pred.depth {
            Some(d) => d,
            None => compose_depth(&pred.labels, &pred.planes, &DepthMap::invalid(k.width, k.height), &k)?,
        };
        evaluator.add(
            PlanarView { labels: &gt.labels, planes: &gt.planes, depth: &gt_depth },
            PlanarView { labels: &pred.labels, planes: &pred.planes, depth: &pred_depth },
            &k,
        )?;
    }
    let summary = evaluator.finish()?;
    let text = match format {
        Format::Json => io::to_json(&summary)?,
        Format::Csv => eval_csv(&summary),
    };
    emit(&text, a.out.as_deref())?;
    if let Some(p) = &a.plot {
        io::write_atomic(p, recall_svg(&summary.recall).as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct LossSummary {
    chamfer: f64,
    chamfer_symmetric: f64,
    /// Absent when the mask channels do not match the ground-truth planes.
    segmentation_ce: Option<f64>,
    segmentation_printed: Option<f64>,
    depth: f64,
    depth_mean: f64,
}

fn eval_loss(a: EvalLossArgs, cfg: &RunConfig, format: Format) -> Result<ExitCode> {
    let _ = cfg;
    let k = sample::intrinsics(&a.gt)?;
    let gt = load_planar(&a.gt)?;
    let pred = load_planar(&a.pred)?;
    let gt_params: Vec<_> = gt.planes.iter().map(|p| p.param()).collect();
    let pred_params: Vec<_> = pred.planes.iter().map(|p| p.param()).collect();
    let chamfer = chamfer_plane_loss(&gt_params, &pred_params, ChamferMode::Directional)?.value;
    let chamfer_symmetric = chamfer_plane_loss(&gt_params, &pred_params, ChamferMode::Symmetric)?.value;
    let masks = match &a.masks {
        Some(p) => io::read_masks_npy(p)?,
        None => ProbMaskStack::one_hot(&pred.labels),
    };
    if masks.channels() != pred.planes.len() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} mask channels for {} predicted planes",
            masks.channels(),
            pred.planes.len()
        )));
    }
    let gt_depth = gt.depth.ok_or_else(|| Error::InvalidInput(format!("{} has no {DEPTH}", a.gt.display())))?;
    check_size(&k, gt_depth.size(), "ground-truth depth")?;
    let nonplanar = pred.depth.unwrap_or_else(|| DepthMap::invalid(k.width, k.height));
    let depth = weighted_depth_loss(&masks, &pred_params, &nonplanar, &gt_depth, &k, &DepthLossConfig::default())?;
    let (segmentation_ce, segmentation_printed) = if masks.channels() == gt.labels.num_planes() + 1 {
        (
            Some(segmentation_loss(&masks, &gt.labels, SegmentationForm::CrossEntropy)?.mean),
            Some(segmentation_loss(&masks, &gt.labels, SegmentationForm::Printed)?.mean),
        )
    } else {
        (None, None)
    };
    let s = LossSummary {
        chamfer,
        chamfer_symmetric,
        segmentation_ce,
        segmentation_printed,
        depth: depth.value,
        depth_mean: depth.mean,
    };
    let rows = [
        ("chamfer", Some(s.chamfer)),
        ("chamfer_symmetric", Some(s.chamfer_symmetric)),
        ("segmentation_ce", s.segmentation_ce),
        ("segmentation_printed", s.segmentation_printed),
        ("depth", Some(s.depth)),
        ("depth_mean", Some(s.depth_mean)),
    ];
    emit_flat(&s, &rows, format, a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct LayoutSummary {
    configuration: Vec<Role>,
    score: usize,
    /// Against the sample's role map, when it has one.
    pixel_error: Option<f64>,
}

fn layout(a: LayoutArgs, format: Format) -> Result<ExitCode> {
    let k = sample::intrinsics(&a.input)?;
    let doc = PlanesDocument::read(a.planes.clone().unwrap_or_else(|| a.input.join(PLANES)))?;
    let planes = doc.planes.planes();
    let roles = doc.roles.unwrap_or_else(|| propose_roles(planes));
    let masks = match &a.masks {
        Some(p) => io::read_masks_npy(p)?,
        None => ProbMaskStack::one_hot(&io::read_label_png(a.input.join(LABELS), Some(planes.len()))?),
    };
    let result = estimate_layout(planes, &roles, &masks, &k)?;
    io::write_role_png(&a.out, &result.roles)?;
    let gt_roles = a.input.join(ROLES);
    let pixel_error = if gt_roles.exists() {
        Some(layout_pixel_error(&result.roles, &io::read_role_png(gt_roles)?)?)
    } else {
        None
    };
    let s = LayoutSummary { configuration: result.configuration.roles(), score: result.score, pixel_error };
    let rows = [("score", Some(s.score as f64)), ("pixel_error", s.pixel_error)];
    emit_flat(&s, &rows, format, None)?;
    Ok(ExitCode::SUCCESS)
}

fn grad_check(a: GradCheckArgs, cfg: &RunConfig, format: Format) -> Result<ExitCode> {
    let n = a.instances.unwrap_or(cfg.grad_check.instances);
    let s = gradcheck::run(seed(cfg), n)?;
    let worst = s.worst();
    let rows = [
        ("instances", Some(s.instances as f64)),
        ("chamfer", Some(s.chamfer)),
        ("chamfer_symmetric", Some(s.chamfer_symmetric)),
        ("segmentation_ce", Some(s.segmentation_ce)),
        ("segmentation_printed", Some(s.segmentation_printed)),
        ("depth_planes", Some(s.depth_planes)),
        ("depth_nonplanar", Some(s.depth_nonplanar)),
        ("depth_masks", Some(s.depth_masks)),
        ("worst", Some(worst)),
    ];
    emit_flat(&s, &rows, format, a.out.as_deref())?;
    Ok(if worst < gradcheck::TOLERANCE { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

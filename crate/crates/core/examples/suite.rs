//! Runs the synthetic pipeline on the standard suite and prints per-scene recall.

use planekit::evaluation::{compose_depth, EvalConfig, Evaluator, PlanarView};
use planekit::ransac::{extract_depth_planes, ExtractConfig};
use planekit::segmentation::{mrf_segment, MrfConfig};
use planekit::synth::{corrupt, render_scene, standard_suite, suite_noise};

fn main() -> planekit::Result<()> {
    let mut total = Evaluator::new(EvalConfig::default())?;
    for (i, spec) in standard_suite().iter().enumerate() {
        let r = render_scene(spec)?;
        let k = r.frame.intrinsics;
        let sensor = corrupt(&r.depth, &suite_noise(), i as u64)?;
        let planes = extract_depth_planes(&sensor, &k, &ExtractConfig::default())?;
        let labels = mrf_segment(&sensor, &r.image, &planes, &k, &MrfConfig::default())?;
        let depth = compose_depth(&labels, &planes, &sensor, &k)?;
        let gt = PlanarView { labels: &r.labels, planes: &r.planes, depth: &r.depth };
        let pred = PlanarView { labels: &labels, planes: &planes, depth: &depth };
        let mut one = Evaluator::new(EvalConfig::default())?;
        one.add(gt, pred, &k)?;
        total.add(gt, pred, &k)?;
        let c = one.finish()?.recall;
        println!("scene {i:2}: {} planes, plane recall {:.3}, pixel recall {:.3}", planes.len(), c.at(0.1).unwrap().0, c.at(0.1).unwrap().1);
    }
    let c = total.finish()?.recall;
    println!("suite: plane recall {:.4}, pixel recall {:.4}", c.at(0.1).unwrap().0, c.at(0.1).unwrap().1);
    Ok(())
}

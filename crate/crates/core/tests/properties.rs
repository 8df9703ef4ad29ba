use approx::assert_relative_eq;
use proptest::prelude::*;

use planekit::evaluation::{default_thresholds, depth_stats_pairs, match_planes, recall_curves, MatchMode};
use planekit::losses::{chamfer_plane_loss, ChamferMode};
use planekit::segmentation::{dcrf_refine_traced, DcrfConfig, DcrfMode, MrfProblem};
use planekit::{CameraIntrinsics, LabelMap, Plane, ProbMaskStack, RgbImage, Vec3};

fn param() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.2..6.0f64)
        .prop_filter("direction", |(x, y, z, _)| x * x + y * y + z * z > 0.01)
        .prop_map(|(x, y, z, d)| Vec3::new(x, y, z).normalize() * d)
}

fn params(max: usize) -> impl Strategy<Value = Vec<Vec3>> {
    prop::collection::vec(param(), 1..=max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn plane_param_round_trip(p in param(), s in 0.1..10.0f64) {
        let plane = Plane::from_param(p).unwrap();
        prop_assert_eq!(plane.param(), p);
        assert_relative_eq!(plane.normal().norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(plane.normal() * plane.offset(), p, epsilon = 1e-12);
        let scaled = plane.scaled(s).unwrap();
        assert_relative_eq!(scaled.offset(), s * plane.offset(), max_relative = 1e-12);
        assert_relative_eq!(scaled.normal(), plane.normal(), epsilon = 1e-12);
    }

    #[test]
    fn chamfer_ignores_order(gt in params(8), pred in params(8), seed in any::<u64>()) {
        let rot = |v: &[Vec3]| {
            let mut v = v.to_vec();
            let n = v.len();
            v.rotate_left((seed as usize) % n);
            v.reverse();
            v
        };
        for mode in [ChamferMode::Directional, ChamferMode::Symmetric] {
            let a = chamfer_plane_loss(&gt, &pred, mode).unwrap().value;
            let b = chamfer_plane_loss(&rot(&gt), &rot(&pred), mode).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn chamfer_never_grows_with_predictions(gt in params(8), pred in params(8), extra in params(4)) {
        let before = chamfer_plane_loss(&gt, &pred, ChamferMode::Directional).unwrap().value;
        let more: Vec<Vec3> = pred.iter().chain(&extra).copied().collect();
        let after = chamfer_plane_loss(&gt, &more, ChamferMode::Directional).unwrap().value;
        prop_assert!(after <= before);
    }

    #[test]
    fn chamfer_of_identical_sets_is_zero(gt in params(8)) {
        for mode in [ChamferMode::Directional, ChamferMode::Symmetric] {
            prop_assert_eq!(chamfer_plane_loss(&gt, &gt, mode).unwrap().value, 0.0);
        }
    }

    #[test]
    fn depth_stats_ratio_metrics_are_scale_free(
        pairs in prop::collection::vec((0.2..20.0f64, 0.2..20.0f64), 1..50),
        c in 0.1..10.0f64,
    ) {
        let a = depth_stats_pairs(&pairs).unwrap();
        let scaled: Vec<_> = pairs.iter().map(|&(d, g)| (c * d, c * g)).collect();
        let b = depth_stats_pairs(&scaled).unwrap();
        assert_relative_eq!(a.rel, b.rel, max_relative = 1e-9);
        assert_relative_eq!(a.log10, b.log10, epsilon = 1e-9);
        assert_relative_eq!(a.rmse_log, b.rmse_log, epsilon = 1e-9);
        assert_relative_eq!(c * a.rmse_lin, b.rmse_lin, max_relative = 1e-9);
        assert_relative_eq!(c * a.rel_sqr, b.rel_sqr, max_relative = 1e-9);
        prop_assert!(a.delta_1 <= a.delta_2 && a.delta_2 <= a.delta_3 && a.delta_3 <= 100.0);
    }

    #[test]
    fn identical_depth_is_perfect(depths in prop::collection::vec(0.2..20.0f64, 1..50)) {
        let pairs: Vec<_> = depths.iter().map(|&d| (d, d)).collect();
        let s = depth_stats_pairs(&pairs).unwrap();
        prop_assert_eq!((s.rel, s.rmse_lin, s.delta_1), (0.0, 0.0, 100.0));
    }

    #[test]
    fn recall_curves_are_monotone(
        gt_raw in prop::collection::vec(0..4usize, 64),
        pred_raw in prop::collection::vec(0..4usize, 64),
        gt_planes in prop::collection::vec(0.5..4.0f64, 3),
        pred_planes in prop::collection::vec(0.5..4.0f64, 3),
    ) {
        let k = CameraIntrinsics::centered(8.0, 8, 8).unwrap();
        let z = |d: &f64| Plane::from_param(Vec3::new(0.0, 0.0, *d)).unwrap();
        let gl = LabelMap::from_raw(8, 8, 3, gt_raw).unwrap();
        let pl = LabelMap::from_raw(8, 8, 3, pred_raw).unwrap();
        let gp: Vec<_> = gt_planes.iter().map(z).collect();
        let pp: Vec<_> = pred_planes.iter().map(z).collect();
        for mode in [MatchMode::OneToOne, MatchMode::ManyToOne] {
            let m = match_planes(&gl, &gp, &pl, &pp, &k, mode).unwrap();
            let c = recall_curves(&m, &gl, &default_thresholds()).unwrap();
            prop_assert!(c.plane_recall.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(c.pixel_recall.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(c.plane_recall.iter().chain(&c.pixel_recall).all(|r| (0.0..=1.0).contains(r)));
        }
    }

    #[test]
    fn softmax_rows_are_normalized(logits in prop::collection::vec(-30.0..30.0f64, 5 * 4 * 3)) {
        let m = ProbMaskStack::softmax(5, 4, 3, &logits).unwrap();
        prop_assert!(m.check_normalized().is_ok());
    }

    #[test]
    fn icm_energy_never_increases(
        unary in prop::collection::vec(0.0..1.0f64, 6 * 5 * 3),
        right in prop::collection::vec(0.0..1.0f64, 30),
        down in prop::collection::vec(0.0..1.0f64, 30),
    ) {
        let p = MrfProblem::new(6, 5, 3, unary, right, down).unwrap();
        let sol = p.icm(p.unary_argmin(), 30);
        prop_assert!(sol.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(sol.energy <= p.energy(&p.unary_argmin()));
        let ae = p.alpha_expansion(p.unary_argmin(), 10, 0);
        prop_assert!(ae.energy <= p.energy(&p.unary_argmin()) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dcrf_keeps_masks_normalized(logits in prop::collection::vec(-4.0..4.0f64, 12 * 10 * 3), exact in any::<bool>()) {
        let masks = ProbMaskStack::softmax(12, 10, 3, &logits).unwrap();
        let image = RgbImage::new(12, 10, (0..120).map(|i| [(i * 7 % 255) as f64, (i % 12 * 20) as f64, 90.0]).collect()).unwrap();
        let mode = if exact { DcrfMode::Exact } else { DcrfMode::Truncated };
        let cfg = DcrfConfig { mode, ..DcrfConfig::test() };
        let mut worst: f64 = 0.0;
        let out = dcrf_refine_traced(&masks, &image, &cfg, |_, q| {
            for i in 0..q.pixel_count() {
                worst = worst.max((q.pixel(i).iter().sum::<f64>() - 1.0).abs());
            }
        })
        .unwrap();
        prop_assert!(worst <= 1e-6);
        prop_assert!(out.check_normalized().is_ok());
    }
}

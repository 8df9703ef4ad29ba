//! Evaluation report rendering: JSON, CSV and an SVG recall plot.

use std::fmt::Write as _;

use planekit::evaluation::{DepthStats, EvalSummary, RecallCurve};

/// Table order of the depth metrics, as in [`DepthStats::rows`].
const METRICS: [&str; 8] = ["rel", "rel_sqr", "log10", "rmse_lin", "rmse_log", "delta_1", "delta_2", "delta_3"];

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// One row per threshold, a blank line, then one row per depth metric.
pub fn eval_csv(summary: &EvalSummary) -> String {
    let mut s = String::from("threshold,plane_recall,pixel_recall\n");
    let r = &summary.recall;
    for i in 0..r.thresholds.len() {
        let _ = writeln!(s, "{},{},{}", r.thresholds[i], r.plane_recall[i], r.pixel_recall[i]);
    }
    s.push_str("\nmetric,all,planar,edge\n");
    let rows = |d: &Option<DepthStats>| d.map(|d| d.rows());
    let (a, p, e) = (rows(&summary.depth.all), rows(&summary.depth.planar), rows(&summary.depth.edge));
    for (i, name) in METRICS.iter().enumerate() {
        let get = |r: &Option<[(&str, f64); 8]>| r.map(|r| r[i].1);
        let _ = writeln!(s, "{name},{},{},{}", cell(get(&a)), cell(get(&p)), cell(get(&e)));
    }
    s
}

/// `key,value` rows for flat numeric reports.
pub fn flat_csv(rows: &[(&str, Option<f64>)]) -> String {
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{}", cell(*v));
    }
    s
}

/// Plane and pixel recall against the depth threshold.
pub fn recall_svg(curve: &RecallCurve) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const M: f64 = 50.0;
    let t_max = curve.thresholds.last().copied().unwrap_or(1.0).max(1e-9);
    let x = |t: f64| M + (W - 2.0 * M) * t / t_max;
    let y = |r: f64| H - M - (H - 2.0 * M) * r;
    let line = |values: &[f64]| {
        curve
            .thresholds
            .iter()
            .zip(values)
            .map(|(t, r)| format!("{:.2},{:.2}", x(*t), y(*r)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{M},{} V{} H{}" fill="none" stroke="black"/>"#,
        M,
        H - M,
        W - M
    );
    for i in 0..=4 {
        let r = i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{r:.2}</text>"#, M - 6.0, y(r) + 4.0);
    }
    for t in &curve.thresholds {
        let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="black"/>"#, x(*t), H - M, H - M + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">depth threshold (m), 0 to {t_max}</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, line(&curve.plane_recall));
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="darkorange" stroke-width="2" stroke-dasharray="6 3"/>"#, line(&curve.pixel_recall));
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" fill="steelblue">plane recall</text>"#, M + 10.0, M - 20.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" fill="darkorange">pixel recall</text>"#, M + 120.0, M - 20.0);
    s.push_str("</svg>\n");
    s
}

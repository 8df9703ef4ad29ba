//! Baseline MRF plane labeling and dense-CRF mask refinement.

mod dcrf;
mod maxflow;
mod mrf;

pub use dcrf::{dcrf_refine, dcrf_refine_traced, DcrfConfig, DcrfMode, EXACT_PIXEL_LIMIT};
pub use mrf::{
    build_mrf_problem, mrf_segment, mrf_segment_detailed, mws_segment, MrfConfig, MrfProblem, MrfSolution,
    MrfSolver, MwsOutput, MANHATTAN_EDGE_ALIGN_DEG, MANHATTAN_EDGE_DISCOUNT,
};

use crate::maps::{LabelMap, ProbMaskStack};

/// Winner-takes-all labels; ties go to the lowest channel. The last channel
/// is the non-planar label.
pub fn masks_to_labels(masks: &ProbMaskStack) -> LabelMap {
    let c = masks.channels();
    let labels = (0..masks.pixel_count())
        .map(|i| {
            let px = masks.pixel(i);
            (0..c).fold(0, |best, l| if px[l] > px[best] { l } else { best })
        })
        .collect();
    LabelMap::from_raw(masks.width(), masks.height(), c - 1, labels).expect("labels within channel range")
}

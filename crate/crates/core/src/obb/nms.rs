//! Angle-aware soft non-maximum suppression with linear score decay.

use super::{rotated_iou, Detection};
use crate::error::{invalid, Result};

/// One greedy linear-decay pass: repeatedly select the highest-scoring
/// remaining detection, multiply every remaining same-class detection with
/// `rotated_iou > iou_threshold` by `(1 - iou)`, and drop anything whose
/// score falls below `suppress_threshold`. Ties break by insertion index.
fn soft_nms_pass(dets: &[Detection], iou_threshold: f64, suppress_threshold: f64) -> Vec<Detection> {
    let mut pool: Vec<Detection> = dets.to_vec();
    let mut alive = vec![true; pool.len()];
    let mut kept: Vec<Detection> = Vec::with_capacity(pool.len());

    loop {
        let mut best: Option<usize> = None;
        for i in 0..pool.len() {
            if !alive[i] {
                continue;
            }
            match best {
                None => best = Some(i),
                Some(b) if pool[i].score > pool[b].score => best = Some(i),
                _ => {}
            }
        }
        let Some(b) = best else { break };
        alive[b] = false;
        if pool[b].score < suppress_threshold {
            continue;
        }
        let keeper = pool[b];
        kept.push(keeper);
        for i in 0..pool.len() {
            if !alive[i] || pool[i].class_id != keeper.class_id {
                continue;
            }
            let iou = rotated_iou(&keeper.box_, &pool[i].box_);
            if iou > iou_threshold {
                pool[i].score *= 1.0 - iou;
                if pool[i].score < suppress_threshold {
                    alive[i] = false;
                }
            }
        }
    }
    kept
}

/// Soft-NMS over oriented boxes, iterated to a fixed point so the operator is
/// idempotent: survivors end up pairwise below the IoU threshold within each
/// class, and heavily overlapped duplicates decay until discarded. The decay
/// is the linear `(1 - iou)` rule; suppression is class-aware.
///
/// Output is sorted by final score, descending, with ties in input order.
pub fn angle_soft_nms(
    dets: &[Detection],
    iou_threshold: f64,
    suppress_threshold: f64,
) -> Result<Vec<Detection>> {
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(invalid(format!("iou threshold {iou_threshold} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&suppress_threshold) {
        return Err(invalid(format!(
            "suppress threshold {suppress_threshold} outside [0, 1]"
        )));
    }
    for d in dets {
        if !(0.0..=1.0).contains(&d.score) {
            return Err(invalid(format!("detection score {} outside [0, 1]", d.score)));
        }
    }

    let mut current = dets.to_vec();
    // Each pass halves (at least) the score of any detection still above the
    // IoU threshold with a keeper, so the fixed point arrives in a bounded
    // number of passes.
    loop {
        let next = soft_nms_pass(&current, iou_threshold, suppress_threshold);
        if next == current {
            return Ok(next);
        }
        current = next;
    }
}

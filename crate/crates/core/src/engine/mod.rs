//! Gold-list formation and C-Score computation.
//!
//! The per-class score is the confidence-weighted mean pairwise soft-IoU of
//! intensity-emphasized heatmaps:
//!
//! ```text
//! C = Σ_{i<j} (w_i + w_j) · sIoU(H_i^α, H_j^α) / Σ_{i<j} (w_i + w_j)
//! ```
//!
//! With normalized weights the denominator equals `|G| - 1`, so a set of
//! identical maps scores exactly 1.

mod gold;
mod kernel;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cam::CamMethod;
use crate::error::{Error, Result};
use crate::tensor::{power_emphasis, Heatmap};

pub use gold::{confidence_weights, form_gold_list, GoldList, GoldMember};
pub use kernel::{pairwise_matrix, soft_iou, PairwiseMatrix, SoftIou};

use kernel::{check_common_shape, tree_sum, upper_triangle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassConsistencyResult {
    pub class_id: usize,
    pub method: CamMethod,
    pub cscore: f64,
    pub gold_size: usize,
    /// Pairs in which at least one emphasized map is all zero.
    pub degenerate_pairs: usize,
    pub empty_gold: bool,
    pub singleton_gold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalConsistencyResult {
    pub method: CamMethod,
    pub cscore: f64,
    pub per_class: Vec<ClassConsistencyResult>,
    pub supports: Vec<usize>,
    /// Every class had an empty gold list.
    pub all_empty: bool,
}

pub(crate) fn emphasize_all(heatmaps: &[Heatmap], alpha: f64) -> Result<Vec<Heatmap>> {
    heatmaps
        .par_iter()
        .map(|h| power_emphasis(h, alpha))
        .collect()
}

/// Pair weights held on the 32-bit grid of the stored confidences, which
/// makes the score exactly invariant to a common rescaling of confidences.
fn pair_weights(confidences: &[f64]) -> Vec<f64> {
    let total = tree_sum(confidences);
    confidences
        .iter()
        .map(|&p| f64::from((p / total) as f32))
        .collect()
}

/// Per-class C-Score. `heatmaps[i]` belongs to `gold.members()[i]`.
///
/// Pairs are evaluated in the canonical order of sorted image ids, so the
/// result does not depend on the gold-list order or on the worker count of
/// the enclosing rayon pool.
pub fn class_cscore(
    method: CamMethod,
    heatmaps: &[Heatmap],
    gold: &GoldList,
    alpha: f64,
) -> Result<ClassConsistencyResult> {
    if heatmaps.len() != gold.len() {
        return Err(Error::Validation(format!(
            "{} heatmaps for {} gold-list members",
            heatmaps.len(),
            gold.len()
        )));
    }
    check_common_shape(heatmaps)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("must be > 0, got {alpha}")));
    }
    let n = gold.len();
    let mut result = ClassConsistencyResult {
        class_id: gold.class_id(),
        method,
        cscore: 0.0,
        gold_size: n,
        degenerate_pairs: 0,
        empty_gold: n == 0,
        singleton_gold: n == 1,
    };
    if n < 2 {
        return Ok(result);
    }

    let members = gold.members();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| members[a].image_id.cmp(&members[b].image_id));

    let confidences: Vec<f64> = order.iter().map(|&i| members[i].confidence).collect();
    let weights = pair_weights(&confidences);
    let emphasized: Vec<Heatmap> = order
        .par_iter()
        .map(|&i| power_emphasis(&heatmaps[i], alpha))
        .collect::<Result<_>>()?;

    let empty = emphasized.iter().filter(|h| h.is_degenerate()).count();
    result.degenerate_pairs = empty * (n - empty) + empty * empty.saturating_sub(1) / 2;

    let slices: Vec<&[f32]> = emphasized.iter().map(|h| h.data()).collect();
    let scores = upper_triangle(&slices);

    let pair_count = n * (n - 1) / 2;
    let mut numer = Vec::with_capacity(pair_count);
    let mut denom = Vec::with_capacity(pair_count);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let w = weights[i] + weights[j];
            numer.push(w * scores[k]);
            denom.push(w);
            k += 1;
        }
    }
    let z = tree_sum(&denom);
    result.cscore = if z > 0.0 {
        (tree_sum(&numer) / z).min(1.0)
    } else {
        0.0
    };
    Ok(result)
}

/// Support-weighted mean over classes with non-empty gold lists.
pub fn global_cscore(per_class: &[ClassConsistencyResult]) -> Result<GlobalConsistencyResult> {
    let first = per_class
        .first()
        .ok_or_else(|| Error::Validation("global score needs at least one class".into()))?;
    if per_class.iter().any(|r| r.method != first.method) {
        return Err(Error::Validation(
            "per-class results mix CAM methods".into(),
        ));
    }
    let total: usize = per_class.iter().map(|r| r.gold_size).sum();
    let cscore = if total == 0 {
        0.0
    } else {
        let total = total as f64;
        per_class
            .iter()
            .filter(|r| r.gold_size > 0)
            .map(|r| r.gold_size as f64 / total * r.cscore)
            .sum::<f64>()
            .clamp(0.0, 1.0)
    };
    Ok(GlobalConsistencyResult {
        method: first.method,
        cscore,
        supports: per_class.iter().map(|r| r.gold_size).collect(),
        per_class: per_class.to_vec(),
        all_empty: total == 0,
    })
}

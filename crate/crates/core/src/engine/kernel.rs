//! Soft-IoU and the parallel pair loop.
//!
//! Every pair value is computed with a fixed lane layout and every reduction
//! uses a fixed binary tree, so results do not depend on how pairs are spread
//! over worker threads.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::Heatmap;

const LANES: usize = 8;

/// `(Σ min(a, b), Σ max(a, b))` accumulated in f64.
pub(crate) fn min_max_sums(a: &[f32], b: &[f32]) -> (f64, f64) {
    debug_assert_eq!(a.len(), b.len());
    #[cfg(target_arch = "x86_64")]
    {
        // SAFETY: each feature is detected at runtime before use.
        if std::arch::is_x86_feature_detected!("avx512f") {
            return unsafe { min_max_sums_avx512(a, b) };
        }
        if std::arch::is_x86_feature_detected!("avx2") {
            return unsafe { min_max_sums_avx2(a, b) };
        }
    }
    min_max_sums_lanes(a, b)
}

// Same lane layout and operation order as the portable path, so the two
// agree bitwise; only the instruction width differs.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn min_max_sums_avx512(a: &[f32], b: &[f32]) -> (f64, f64) {
    min_max_sums_lanes(a, b)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn min_max_sums_avx2(a: &[f32], b: &[f32]) -> (f64, f64) {
    min_max_sums_lanes(a, b)
}

#[inline(always)]
fn min_max_sums_lanes(a: &[f32], b: &[f32]) -> (f64, f64) {
    let mut lo = [0.0f64; LANES];
    let mut hi = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            let (u, v) = (x[l], y[l]);
            let (mn, mx) = if u < v { (u, v) } else { (v, u) };
            lo[l] += f64::from(mn);
            hi[l] += f64::from(mx);
        }
    }
    for (l, (&u, &v)) in ra.iter().zip(rb).enumerate() {
        lo[l] += f64::from(u.min(v));
        hi[l] += f64::from(u.max(v));
    }
    (tree_sum(&lo), tree_sum(&hi))
}

/// Pairwise summation with a split point that depends only on the length.
pub(crate) fn tree_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    tree_sum(&values[..mid]) + tree_sum(&values[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftIou {
    pub value: f64,
    /// Both maps were all zero, so the union is empty.
    pub degenerate: bool,
}

pub(crate) fn soft_iou_raw(a: &[f32], b: &[f32]) -> SoftIou {
    let (inter, union) = min_max_sums(a, b);
    if union == 0.0 {
        SoftIou {
            value: 0.0,
            degenerate: true,
        }
    } else {
        SoftIou {
            value: inter / union,
            degenerate: false,
        }
    }
}

/// `Σ min(h1, h2) / Σ max(h1, h2)`; zero (and degenerate) when both maps are empty.
pub fn soft_iou(h1: &Heatmap, h2: &Heatmap) -> Result<SoftIou> {
    if h1.shape() != h2.shape() {
        return Err(Error::Validation(format!(
            "heatmap shapes differ: {:?} vs {:?}",
            h1.shape(),
            h2.shape()
        )));
    }
    Ok(soft_iou_raw(h1.data(), h2.data()))
}

pub(crate) fn check_common_shape(maps: &[Heatmap]) -> Result<()> {
    if let Some(first) = maps.first() {
        if let Some((i, m)) = maps.iter().enumerate().find(|(_, m)| m.shape() != first.shape()) {
            return Err(Error::Validation(format!(
                "heatmap {i} has shape {:?}, expected {:?}",
                m.shape(),
                first.shape()
            )));
        }
    }
    Ok(())
}

/// Soft-IoU of every pair `i < j`, in row-major pair order
/// `(0,1), (0,2), …, (0,n-1), (1,2), …`.
pub(crate) fn upper_triangle(maps: &[&[f32]]) -> Vec<f64> {
    let n = maps.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| soft_iou_raw(maps[i], maps[j]).value)
                .collect()
        })
        .collect();
    rows.into_iter().flatten().collect()
}

/// Symmetric matrix of pairwise soft-IoU values.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMatrix {
    n: usize,
    values: Vec<f64>,
}

impl PairwiseMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Row-major `n × n` values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Pairwise soft-IoU of the emphasized maps.
pub fn pairwise_matrix(heatmaps: &[Heatmap], alpha: f64) -> Result<PairwiseMatrix> {
    if heatmaps.is_empty() {
        return Err(Error::Validation("pairwise matrix needs at least one heatmap".into()));
    }
    check_common_shape(heatmaps)?;
    let emphasized = super::emphasize_all(heatmaps, alpha)?;
    let slices: Vec<&[f32]> = emphasized.iter().map(|h| h.data()).collect();
    let n = slices.len();
    let upper = upper_triangle(&slices);
    let mut values = vec![0.0; n * n];
    let mut k = 0;
    for i in 0..n {
        values[i * n + i] = soft_iou_raw(slices[i], slices[i]).value;
        for j in i + 1..n {
            values[i * n + j] = upper[k];
            values[j * n + i] = upper[k];
            k += 1;
        }
    }
    Ok(PairwiseMatrix { n, values })
}

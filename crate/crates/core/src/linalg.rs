//! Top right singular vector by power iteration.

/// Convergence settings for [`top_right_singular_vector`].
#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 1000,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Row-major `rows × cols` matrix view over `f32` data.
pub struct MatrixView<'a> {
    pub data: &'a [f32],
    pub rows: usize,
    pub cols: usize,
}

impl MatrixView<'_> {
    /// `M · v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(&a, &b)| f64::from(a) * b).sum())
            .collect()
    }

    /// `Mᵀ · u`
    pub fn tmul_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, &ui) in self.data.chunks_exact(self.cols).zip(u) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += f64::from(a) * ui;
            }
        }
        out
    }
}

/// Unit-norm dominant eigenvector of `MᵀM`, i.e. the first right singular
/// vector of `M`, computed without forming `MᵀM`.
///
/// Returns `None` when `M` is zero. The sign is arbitrary.
pub fn top_right_singular_vector(m: &MatrixView<'_>, cfg: PowerIteration) -> Option<Vec<f64>> {
    // Start from the all-ones direction; fall back to basis vectors if it lies
    // in the null space.
    let starts = std::iter::once(vec![1.0; m.cols]).chain((0..m.cols).map(|k| {
        let mut e = vec![0.0; m.cols];
        e[k] = 1.0;
        e
    }));
    for start in starts {
        let mut v = start;
        let n = norm(&v);
        v.iter_mut().for_each(|x| *x /= n);
        let mut found = false;
        for _ in 0..cfg.max_iterations {
            let mut next = m.tmul_vec(&m.mul_vec(&v));
            let n = norm(&next);
            if n == 0.0 || !n.is_finite() {
                break;
            }
            found = true;
            next.iter_mut().for_each(|x| *x /= n);
            let delta = norm(
                &next
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            );
            v = next;
            if delta < cfg.tolerance {
                break;
            }
        }
        if found {
            return Some(v);
        }
    }
    None
}

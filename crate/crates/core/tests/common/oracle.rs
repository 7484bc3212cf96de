//! Straightforward reference implementations, written without reusing any
//! library internals.

pub fn soft_iou(a: &[f32], b: &[f32]) -> f64 {
    let mut inter = 0.0f64;
    let mut union = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        inter += f64::from(x.min(y));
        union += f64::from(x.max(y));
    }
    if union == 0.0 {
        0.0
    } else {
        inter / union
    }
}

pub fn emphasize(a: &[f32], alpha: f64) -> Vec<f32> {
    a.iter().map(|&v| f64::from(v).powf(alpha) as f32).collect()
}

/// Normalized confidence weights, stored at 32-bit precision.
pub fn weights(confidences: &[f64]) -> Vec<f64> {
    let total: f64 = confidences.iter().sum();
    confidences.iter().map(|&p| f64::from((p / total) as f32)).collect()
}

/// Double loop over all member pairs in the given order.
pub fn class_cscore(maps: &[Vec<f32>], confidences: &[f64], alpha: f64) -> f64 {
    let n = maps.len();
    if n < 2 {
        return 0.0;
    }
    let w = weights(confidences);
    let e: Vec<Vec<f32>> = maps.iter().map(|m| emphasize(m, alpha)).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let wij = w[i] + w[j];
            num += wij * soft_iou(&e[i], &e[j]);
            den += wij;
        }
    }
    num / den
}

/// Half-pixel-center bilinear sampling evaluated pixel by pixel.
pub fn resize(src: &[f32], h: usize, w: usize, out_h: usize, out_w: usize) -> Vec<f32> {
    let at = |r: usize, c: usize| f64::from(src[r * w + c]);
    let mut out = Vec::with_capacity(out_h * out_w);
    for oy in 0..out_h {
        for ox in 0..out_w {
            let sy = ((oy as f64 + 0.5) * h as f64 / out_h as f64 - 0.5).max(0.0).min((h - 1) as f64);
            let sx = ((ox as f64 + 0.5) * w as f64 / out_w as f64 - 0.5).max(0.0).min((w - 1) as f64);
            let (y0, x0) = (sy.floor() as usize, sx.floor() as usize);
            let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
            let (fy, fx) = (sy - y0 as f64, sx - x0 as f64);
            let v = at(y0, x0) * (1.0 - fy) * (1.0 - fx)
                + at(y0, x1) * (1.0 - fy) * fx
                + at(y1, x0) * fy * (1.0 - fx)
                + at(y1, x1) * fy * fx;
            out.push(v as f32);
        }
    }
    out
}

/// Top right singular vector of the `rows x cols` row-major matrix by power
/// iteration on the explicit Gram matrix.
pub fn top_singular_vector(m: &[f32], rows: usize, cols: usize) -> Vec<f64> {
    let mut gram = vec![0.0f64; cols * cols];
    for r in 0..rows {
        for a in 0..cols {
            for b in 0..cols {
                gram[a * cols + b] += f64::from(m[r * cols + a]) * f64::from(m[r * cols + b]);
            }
        }
    }
    let mut v: Vec<f64> = (0..cols).map(|k| 1.0 + k as f64 * 1e-3).collect();
    for _ in 0..5000 {
        let mut next = vec![0.0; cols];
        for a in 0..cols {
            for b in 0..cols {
                next[a] += gram[a * cols + b] * v[b];
            }
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        next.iter_mut().for_each(|x| *x /= norm);
        v = next;
    }
    v
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

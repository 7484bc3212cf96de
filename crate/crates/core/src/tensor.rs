//! Dense row-major tensors and the elementwise operations shared by the CAM
//! and metric code.
//!
//! Storage is `f32`; every reduction accumulates in `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_finite(data: &[f32]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Row-major `height × width` map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor2D {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Tensor2D {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Validation(format!(
                "tensor dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::Validation(format!(
                "expected {} values for a {height}x{width} tensor, got {}",
                height * width,
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Build from nested rows; convenient for small literal maps.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != width) {
            return Err(Error::Validation("ragged rows".into()));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(height, width, data)
    }

    pub fn filled(height: usize, width: usize, value: f32) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }

    /// Values are kept finite by construction; only ReLU mutates in place.
    pub fn relu_inplace(&mut self) {
        relu_slice(&mut self.data);
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        best
    }
}

/// Row-major, channel-last `height × width × channels` tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor3D {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Tensor3D {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Validation(format!(
                "tensor dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::Validation(format!(
                "expected {} values for a {height}x{width}x{channels} tensor, got {}",
                height * width * channels,
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Stack single-channel planes along the channel axis.
    pub fn from_planes(planes: &[Tensor2D]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::Validation("no planes given".into()))?;
        let (h, w) = first.shape();
        if planes.iter().any(|p| p.shape() != (h, w)) {
            return Err(Error::Validation("planes differ in shape".into()));
        }
        let c = planes.len();
        let mut data = vec![0.0; h * w * c];
        for (k, plane) in planes.iter().enumerate() {
            for (pos, &v) in plane.data().iter().enumerate() {
                data[pos * c + k] = v;
            }
        }
        Self::new(h, w, c, data)
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f32) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn spatial_len(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f32 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    /// The values of one spatial position across all channels.
    pub fn pixel(&self, pos: usize) -> &[f32] {
        &self.data[pos * self.channels..(pos + 1) * self.channels]
    }

    /// Copy of channel `k` as a 2D map.
    pub fn plane(&self, k: usize) -> Tensor2D {
        let data = (0..self.spatial_len())
            .map(|pos| self.data[pos * self.channels + k])
            .collect();
        Tensor2D {
            height: self.height,
            width: self.width,
            data,
        }
    }

    pub fn relu_inplace(&mut self) {
        relu_slice(&mut self.data);
    }
}

fn relu_slice(data: &mut [f32]) {
    for v in data {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// A 2D attribution map with values in `[0, 1]`.
///
/// `degenerate` is set when the map carries no contrast (it is all zero).
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    map: Tensor2D,
    degenerate: bool,
}

impl Heatmap {
    /// Wrap a tensor that is already in `[0, 1]`.
    pub fn from_unit(map: Tensor2D) -> Result<Self> {
        if let Some(index) = map.data().iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Validation(format!(
                "heatmap value {} at index {index} is outside [0, 1]",
                map.data()[index]
            )));
        }
        let degenerate = map.data().iter().all(|&v| v == 0.0);
        Ok(Self { map, degenerate })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Ok(Self {
            map: Tensor2D::filled(height, width, 0.0)?,
            degenerate: true,
        })
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn tensor(&self) -> &Tensor2D {
        &self.map
    }

    pub fn into_tensor(self) -> Tensor2D {
        self.map
    }

    pub fn shape(&self) -> (usize, usize) {
        self.map.shape()
    }

    pub fn data(&self) -> &[f32] {
        self.map.data()
    }
}

/// Per-map min-max normalization to `[0, 1]`.
///
/// A constant map has no contrast and normalizes to all zeros with the
/// degenerate flag set.
pub fn minmax_normalize(t: &Tensor2D) -> Heatmap {
    let (lo, hi) = t.min_max();
    if hi <= lo {
        return Heatmap {
            map: Tensor2D {
                height: t.height,
                width: t.width,
                data: vec![0.0; t.len()],
            },
            degenerate: true,
        };
    }
    let lo = f64::from(lo);
    let range = f64::from(hi) - lo;
    let data = t
        .data()
        .iter()
        .map(|&v| ((f64::from(v) - lo) / range) as f32)
        .collect();
    Heatmap {
        map: Tensor2D {
            height: t.height,
            width: t.width,
            data,
        },
        degenerate: false,
    }
}

/// Elementwise `h^alpha`; suppresses low-intensity background for `alpha > 1`.
pub fn power_emphasis(h: &Heatmap, alpha: f64) -> Result<Heatmap> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("must be > 0, got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(h.clone());
    }
    let data: Vec<f32> = h
        .data()
        .iter()
        .map(|&v| f64::from(v).powf(alpha) as f32)
        .collect();
    let degenerate = data.iter().all(|&v| v == 0.0);
    let (height, width) = h.shape();
    Ok(Heatmap {
        map: Tensor2D {
            height,
            width,
            data,
        },
        degenerate,
    })
}

/// Source coordinate and interpolation weight for one output index under the
/// half-pixel-center convention, clamped to the input edge.
fn sample_axis(dst: usize, in_len: usize, out_len: usize) -> (usize, usize, f64) {
    let scale = in_len as f64 / out_len as f64;
    let src = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (in_len - 1) as f64);
    let i0 = src.floor() as usize;
    let i1 = (i0 + 1).min(in_len - 1);
    (i0, i1, src - i0 as f64)
}

/// Bilinear resampling with half-pixel centers and edge clamping.
pub fn bilinear_resize(t: &Tensor2D, out_h: usize, out_w: usize) -> Result<Tensor2D> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::param(
            "output size",
            format!("dimensions must be positive, got {out_h}x{out_w}"),
        ));
    }
    if (out_h, out_w) == t.shape() {
        return Ok(t.clone());
    }
    let cols: Vec<_> = (0..out_w)
        .map(|x| sample_axis(x, t.width, out_w))
        .collect();
    let mut data = Vec::with_capacity(out_h * out_w);
    for y in 0..out_h {
        let (y0, y1, fy) = sample_axis(y, t.height, out_h);
        for &(x0, x1, fx) in &cols {
            let p = |r: usize, c: usize| f64::from(t.get(r, c));
            let top = p(y0, x0) + (p(y0, x1) - p(y0, x0)) * fx;
            let bottom = p(y1, x0) + (p(y1, x1) - p(y1, x0)) * fx;
            data.push((top + (bottom - top) * fy) as f32);
        }
    }
    Ok(Tensor2D {
        height: out_h,
        width: out_w,
        data,
    })
}

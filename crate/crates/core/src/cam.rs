//! CAM heatmap composition from exported activation/gradient bundles.
//!
//! No model runtime is involved: every method is a pure function of the
//! tensors an exporter wrote to disk. All methods end with ReLU followed by
//! per-map min-max normalization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{top_right_singular_vector, MatrixView, PowerIteration};
use crate::tensor::{bilinear_resize, minmax_normalize, Heatmap, Tensor2D, Tensor3D};

/// One image's export at one layer.
#[derive(Debug, Clone)]
pub struct ActivationBundle {
    pub layer_id: String,
    pub image_id: String,
    pub class_id: usize,
    activations: Tensor3D,
    gradients: Option<Tensor3D>,
    channel_scores: Option<Vec<f64>>,
}

impl ActivationBundle {
    pub fn new(
        layer_id: impl Into<String>,
        image_id: impl Into<String>,
        class_id: usize,
        activations: Tensor3D,
    ) -> Self {
        Self {
            layer_id: layer_id.into(),
            image_id: image_id.into(),
            class_id,
            activations,
            gradients: None,
            channel_scores: None,
        }
    }

    pub fn with_gradients(mut self, gradients: Tensor3D) -> Result<Self> {
        if gradients.shape() != self.activations.shape() {
            return Err(Error::Validation(format!(
                "gradient shape {:?} does not match activation shape {:?} ({} @ {})",
                gradients.shape(),
                self.activations.shape(),
                self.image_id,
                self.layer_id
            )));
        }
        self.gradients = Some(gradients);
        Ok(self)
    }

    pub fn with_channel_scores(mut self, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != self.activations.channels() {
            return Err(Error::Validation(format!(
                "{} channel scores for {} channels ({} @ {})",
                scores.len(),
                self.activations.channels(),
                self.image_id,
                self.layer_id
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite channel score ({} @ {})",
                self.image_id, self.layer_id
            )));
        }
        self.channel_scores = Some(scores);
        Ok(self)
    }

    pub fn activations(&self) -> &Tensor3D {
        &self.activations
    }

    pub fn gradients(&self) -> Option<&Tensor3D> {
        self.gradients.as_ref()
    }

    pub fn channel_scores(&self) -> Option<&[f64]> {
        self.channel_scores.as_deref()
    }

    fn require_gradients(&self, method: CamMethod) -> Result<&Tensor3D> {
        self.gradients.as_ref().ok_or(Error::MethodRequirements {
            method: method.name(),
            missing: "gradients",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CamMethod {
    GradCam,
    GradCamPp,
    LayerCam,
    EigenCam,
    ScoreCam,
    MsGradCamPp,
}

impl CamMethod {
    pub const ALL: [CamMethod; 6] = [
        CamMethod::GradCam,
        CamMethod::GradCamPp,
        CamMethod::LayerCam,
        CamMethod::EigenCam,
        CamMethod::ScoreCam,
        CamMethod::MsGradCamPp,
    ];

    /// Serialized name.
    pub fn name(self) -> &'static str {
        match self {
            CamMethod::GradCam => "gradcam",
            CamMethod::GradCamPp => "gradcampp",
            CamMethod::LayerCam => "layercam",
            CamMethod::EigenCam => "eigencam",
            CamMethod::ScoreCam => "scorecam",
            CamMethod::MsGradCamPp => "msgradcampp",
        }
    }

    pub fn needs_gradients(self) -> bool {
        matches!(
            self,
            CamMethod::GradCam | CamMethod::GradCamPp | CamMethod::LayerCam | CamMethod::MsGradCamPp
        )
    }
}

impl fmt::Display for CamMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CamMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CamMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::param("method", format!("unknown CAM method `{s}`")))
    }
}

/// `Σ_k weight_k · A^k` accumulated in f64.
fn weighted_channel_sum(acts: &Tensor3D, weights: &[f64]) -> Vec<f64> {
    (0..acts.spatial_len())
        .map(|pos| {
            acts.pixel(pos)
                .iter()
                .zip(weights)
                .map(|(&a, &w)| f64::from(a) * w)
                .sum()
        })
        .collect()
}

fn finish(acts: &Tensor3D, raw: Vec<f64>) -> Result<Heatmap> {
    let data = raw.into_iter().map(|v| v as f32).collect();
    let mut map = Tensor2D::new(acts.height(), acts.width(), data)?;
    map.relu_inplace();
    Ok(minmax_normalize(&map))
}

/// Channel weights are the spatial mean of each channel's gradient.
pub fn gradcam(b: &ActivationBundle) -> Result<Heatmap> {
    let grads = b.require_gradients(CamMethod::GradCam)?;
    let c = grads.channels();
    let mut weights = vec![0.0f64; c];
    for pos in 0..grads.spatial_len() {
        for (w, &g) in weights.iter_mut().zip(grads.pixel(pos)) {
            *w += f64::from(g);
        }
    }
    let z = grads.spatial_len() as f64;
    weights.iter_mut().for_each(|w| *w /= z);
    finish(&b.activations, weighted_channel_sum(&b.activations, &weights))
}

/// Second-order pixel weighting: `a = g² / (2g² + Σ_uv A·g³)`, zero where the
/// denominator vanishes; channel weight `Σ_ij a·ReLU(g)`.
pub fn gradcam_pp(b: &ActivationBundle) -> Result<Heatmap> {
    let grads = b.require_gradients(CamMethod::GradCamPp)?;
    let acts = &b.activations;
    let c = acts.channels();
    let mut act_sums = vec![0.0f64; c];
    for pos in 0..acts.spatial_len() {
        for (s, &a) in act_sums.iter_mut().zip(acts.pixel(pos)) {
            *s += f64::from(a);
        }
    }
    let mut weights = vec![0.0f64; c];
    for pos in 0..grads.spatial_len() {
        for (k, &g) in grads.pixel(pos).iter().enumerate() {
            if g <= 0.0 {
                continue;
            }
            let g = f64::from(g);
            let g2 = g * g;
            let denom = 2.0 * g2 + act_sums[k] * g2 * g;
            if denom != 0.0 {
                weights[k] += g2 / denom * g;
            }
        }
    }
    finish(acts, weighted_channel_sum(acts, &weights))
}

/// `Σ_k ReLU(∂y/∂A^k) ⊙ A^k`.
pub fn layercam(b: &ActivationBundle) -> Result<Heatmap> {
    let grads = b.require_gradients(CamMethod::LayerCam)?;
    let acts = &b.activations;
    let raw = (0..acts.spatial_len())
        .map(|pos| {
            acts.pixel(pos)
                .iter()
                .zip(grads.pixel(pos))
                .map(|(&a, &g)| f64::from(a) * f64::from(g.max(0.0)))
                .sum()
        })
        .collect();
    finish(acts, raw)
}

/// Projection of the flattened activations onto their first right singular
/// vector; the sign is fixed so that the projection has non-negative mean.
pub fn eigencam(b: &ActivationBundle) -> Result<Heatmap> {
    let acts = &b.activations;
    let m = MatrixView {
        data: acts.data(),
        rows: acts.spatial_len(),
        cols: acts.channels(),
    };
    let Some(v) = top_right_singular_vector(&m, PowerIteration::default()) else {
        return Heatmap::zeros(acts.height(), acts.width());
    };
    let mut raw = m.mul_vec(&v);
    if raw.iter().sum::<f64>() < 0.0 {
        raw.iter_mut().for_each(|x| *x = -*x);
    }
    finish(acts, raw)
}

/// Linear combination of activation channels with the exporter's per-channel
/// masked-input scores.
pub fn scorecam(b: &ActivationBundle) -> Result<Heatmap> {
    let scores = b.channel_scores().ok_or(Error::MethodRequirements {
        method: CamMethod::ScoreCam.name(),
        missing: "channel scores",
    })?;
    finish(&b.activations, weighted_channel_sum(&b.activations, scores))
}

/// Pixel-wise mean of already-aligned maps, then normalization.
pub fn mean_of_maps(maps: &[Tensor2D]) -> Result<Heatmap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::param("bundles", "at least one map is required"))?;
    if maps.iter().any(|m| m.shape() != first.shape()) {
        return Err(Error::Validation("maps to average differ in shape".into()));
    }
    let k = maps.len() as f64;
    let data = (0..first.len())
        .map(|i| {
            let s: f64 = maps.iter().map(|m| f64::from(m.data()[i])).sum();
            (s / k) as f32
        })
        .collect();
    let (h, w) = first.shape();
    Ok(minmax_normalize(&Tensor2D::new(h, w, data)?))
}

/// GradCAM++ at each layer, bilinearly resized to `out_h × out_w`, averaged.
pub fn ms_gradcam_pp(bundles: &[ActivationBundle], out_h: usize, out_w: usize) -> Result<Heatmap> {
    if bundles.is_empty() {
        return Err(Error::param("bundles", "at least one layer is required"));
    }
    let maps = bundles
        .iter()
        .map(|b| {
            b.require_gradients(CamMethod::MsGradCamPp)?;
            bilinear_resize(gradcam_pp(b)?.tensor(), out_h, out_w)
        })
        .collect::<Result<Vec<_>>>()?;
    mean_of_maps(&maps)
}

/// Dispatch for the single-layer methods.
pub fn compose(method: CamMethod, b: &ActivationBundle) -> Result<Heatmap> {
    match method {
        CamMethod::GradCam => gradcam(b),
        CamMethod::GradCamPp => gradcam_pp(b),
        CamMethod::LayerCam => layercam(b),
        CamMethod::EigenCam => eigencam(b),
        CamMethod::ScoreCam => scorecam(b),
        CamMethod::MsGradCamPp => {
            let (h, w, _) = b.activations.shape();
            ms_gradcam_pp(std::slice::from_ref(b), h, w)
        }
    }
}

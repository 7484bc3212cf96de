//! Per-checkpoint bundle manifest (`manifest.json`, schema version 1).
//!
//! Tensor paths are resolved relative to the manifest's directory. Files are
//! size-checked when the manifest is read and decoded only when a bundle is
//! requested.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::tensor_file::{file_len, read_f32_file};
use crate::cam::ActivationBundle;
use crate::error::{Error, Result};
use crate::tensor::Tensor3D;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRef {
    /// `[height, width, channels]`, channel-last.
    pub shape: [usize; 3],
    pub activations: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradients: Option<PathBuf>,
    /// Class whose output the gradients were taken from; defaults to the true label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_class: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_scores: Option<PathBuf>,
    /// Channels the exporter actually scored; the rest carry score 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scored_channels: Option<Vec<usize>>,
}

impl LayerRef {
    fn element_count(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub image_id: String,
    pub true_label: usize,
    /// Per-class confidence `p_i`, indexed by class id.
    pub confidences: Vec<f64>,
    pub layers: BTreeMap<String, LayerRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scorecam_baseline: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub version: u32,
    pub architecture: String,
    pub checkpoint_id: String,
    pub target_layers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
    /// `sigmoid` or `softmax`; informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<String>,
    /// Output resolution for multi-layer aggregation, `[height, width]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_size: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scorecam_baseline: Option<String>,
    pub images: Vec<ImageEntry>,
}

impl BundleManifest {
    pub fn class_count(&self) -> usize {
        self.classes
            .as_ref()
            .map(Vec::len)
            .or_else(|| self.images.first().map(|i| i.confidences.len()))
            .unwrap_or(0)
    }

    pub fn image_ids(&self) -> Vec<String> {
        self.images.iter().map(|i| i.image_id.clone()).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.images.iter().map(|i| i.true_label).collect()
    }

    /// Confidence of every image for `class_id`.
    pub fn confidences_for(&self, class_id: usize) -> Vec<f64> {
        self.images.iter().map(|i| i.confidences[class_id]).collect()
    }
}

/// A validated manifest together with the directory its paths are relative to.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: BundleManifest,
    base_dir: PathBuf,
    path: PathBuf,
}

fn load_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Load {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub fn read_manifest(path: &Path) -> Result<LoadedManifest> {
    let text = fs::read_to_string(path).map_err(|e| load_err(path, e.to_string()))?;
    let manifest: BundleManifest =
        serde_json::from_str(&text).map_err(|e| load_err(path, e.to_string()))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let loaded = LoadedManifest {
        manifest,
        base_dir,
        path: path.to_path_buf(),
    };
    loaded.validate()?;
    Ok(loaded)
}

impl LoadedManifest {
    pub fn path(&self) -> &Path {
        &self.path
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    fn validate(&self) -> Result<()> {
        let m = &self.manifest;
        let bad = |reason: String| load_err(&self.path, reason);
        if m.version != MANIFEST_VERSION {
            return Err(bad(format!(
                "manifest version {} is not supported (expected {MANIFEST_VERSION})",
                m.version
            )));
        }
        if m.target_layers.is_empty() {
            return Err(bad("target_layers is empty".into()));
        }
        let mut layer_set = HashSet::new();
        for l in &m.target_layers {
            if !layer_set.insert(l.as_str()) {
                return Err(bad(format!("target layer `{l}` listed twice")));
            }
        }
        let classes = m.class_count();
        if classes == 0 {
            return Err(bad("no classes: give `classes` or per-image confidences".into()));
        }
        let mut ids = HashSet::new();
        for img in &m.images {
            let at = |what: String| bad(format!("image `{}`: {what}", img.image_id));
            if !ids.insert(img.image_id.as_str()) {
                return Err(at("duplicate image id".into()));
            }
            if img.confidences.len() != classes {
                return Err(at(format!(
                    "{} confidences for {classes} classes",
                    img.confidences.len()
                )));
            }
            if let Some(p) = img.confidences.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(at(format!("confidence {p} is outside [0, 1]")));
            }
            if img.true_label >= classes {
                return Err(at(format!("true label {} out of range", img.true_label)));
            }
            for layer in &m.target_layers {
                let r = img
                    .layers
                    .get(layer)
                    .ok_or_else(|| at(format!("missing target layer `{layer}`")))?;
                self.check_layer(&img.image_id, layer, r)?;
            }
        }
        Ok(())
    }

    fn check_layer(&self, image_id: &str, layer: &str, r: &LayerRef) -> Result<()> {
        let n = r.element_count();
        if n == 0 {
            return Err(load_err(
                &self.path,
                format!("image `{image_id}` layer `{layer}`: shape {:?} has a zero dimension", r.shape),
            ));
        }
        let expect = |file: &Path, values: usize| -> Result<()> {
            let path = self.resolve(file);
            let len = file_len(&path)?;
            if len != 4 * values as u64 {
                return Err(load_err(
                    &path,
                    format!(
                        "image `{image_id}` layer `{layer}`: expected {values} f32 values ({} bytes), found {len} bytes",
                        4 * values
                    ),
                ));
            }
            Ok(())
        };
        expect(&r.activations, n)?;
        if let Some(g) = &r.gradients {
            expect(g, n)?;
        }
        let channels = r.shape[2];
        if let Some(s) = &r.channel_scores {
            expect(s, channels)?;
        }
        if let Some(sc) = &r.scored_channels {
            if let Some(bad) = sc.iter().find(|&&k| k >= channels) {
                return Err(load_err(
                    &self.path,
                    format!("image `{image_id}` layer `{layer}`: scored channel {bad} out of range"),
                ));
            }
        }
        Ok(())
    }

    pub fn image_index(&self, image_id: &str) -> Option<usize> {
        self.manifest.images.iter().position(|i| i.image_id == image_id)
    }

    /// Decode the tensors of one image at one layer.
    pub fn bundle(&self, image_index: usize, layer_id: &str) -> Result<ActivationBundle> {
        let img = self
            .manifest
            .images
            .get(image_index)
            .ok_or_else(|| Error::Lookup(format!("image index {image_index}")))?;
        let r = img.layers.get(layer_id).ok_or_else(|| {
            Error::Lookup(format!("layer `{layer_id}` for image `{}`", img.image_id))
        })?;
        let [h, w, c] = r.shape;
        let tensor = |file: &Path| -> Result<Tensor3D> {
            let path = self.resolve(file);
            let data = read_f32_file(&path)?;
            Tensor3D::new(h, w, c, data).map_err(|e| {
                load_err(&path, format!("image `{}` layer `{layer_id}`: {e}", img.image_id))
            })
        };
        let class_id = r.gradient_class.unwrap_or(img.true_label);
        let mut b = ActivationBundle::new(layer_id, img.image_id.clone(), class_id, tensor(&r.activations)?);
        if let Some(g) = &r.gradients {
            b = b.with_gradients(tensor(g)?)?;
        }
        if let Some(s) = &r.channel_scores {
            let path = self.resolve(s);
            let scores = read_f32_file(&path)?.into_iter().map(f64::from).collect();
            b = b.with_channel_scores(scores)?;
        }
        Ok(b)
    }
}

//! Manifest-level composition and scoring used by the CLI and the C ABI.

use rayon::prelude::*;

use crate::cam::{compose, ms_gradcam_pp, CamMethod};
use crate::config::RunConfig;
use crate::engine::{class_cscore, form_gold_list, global_cscore, GlobalConsistencyResult, GoldList};
use crate::error::{Error, Result};
use crate::io::LoadedManifest;
use crate::tensor::Heatmap;

/// Run `f` on a pool of `workers` threads (0 = rayon's default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    Ok(pool.install(f))
}

fn single_layer<'a>(m: &'a LoadedManifest, cfg: &'a RunConfig) -> Result<&'a str> {
    match &cfg.layer {
        Some(l) if m.manifest.target_layers.contains(l) => Ok(l),
        Some(l) => Err(Error::Validation(format!("layer `{l}` is not a target layer"))),
        None => Ok(&m.manifest.target_layers[0]),
    }
}

fn ms_layers<'a>(m: &'a LoadedManifest, cfg: &'a RunConfig) -> Result<Vec<&'a str>> {
    if cfg.ms_layers.is_empty() {
        return Ok(m.manifest.target_layers.iter().map(String::as_str).collect());
    }
    for l in &cfg.ms_layers {
        if !m.manifest.target_layers.contains(l) {
            return Err(Error::Validation(format!(
                "MS-GradCAM++ layer `{l}` is missing from the manifest's target layers"
            )));
        }
    }
    Ok(cfg.ms_layers.iter().map(String::as_str).collect())
}

/// Output size for multi-layer aggregation: the manifest's input size, or
/// the largest layer's spatial shape.
fn ms_output_size(m: &LoadedManifest, layers: &[&str], image_index: usize) -> (usize, usize) {
    if let Some([h, w]) = m.manifest.input_size {
        return (h, w);
    }
    let img = &m.manifest.images[image_index];
    layers
        .iter()
        .filter_map(|l| img.layers.get(*l))
        .map(|r| (r.shape[0], r.shape[1]))
        .max_by_key(|&(h, w)| h * w)
        .unwrap_or((1, 1))
}

pub fn compose_image(m: &LoadedManifest, image_index: usize, method: CamMethod, cfg: &RunConfig) -> Result<Heatmap> {
    if method == CamMethod::MsGradCamPp {
        let layers = ms_layers(m, cfg)?;
        let bundles = layers
            .iter()
            .map(|l| m.bundle(image_index, l))
            .collect::<Result<Vec<_>>>()?;
        let (h, w) = ms_output_size(m, &layers, image_index);
        ms_gradcam_pp(&bundles, h, w)
    } else {
        compose(method, &m.bundle(image_index, single_layer(m, cfg)?)?)
    }
}

/// Gold lists of every class, from `reference` when given (fixed reference
/// population) or from the manifest's own confidences.
pub fn gold_lists(m: &LoadedManifest, reference: Option<&LoadedManifest>, tau: f64) -> Result<Vec<GoldList>> {
    let src = reference.unwrap_or(m);
    let classes = m.manifest.class_count();
    if src.manifest.class_count() != classes {
        return Err(Error::Validation(format!(
            "reference manifest has {} classes, scored manifest has {classes}",
            src.manifest.class_count()
        )));
    }
    let ids = src.manifest.image_ids();
    let labels = src.manifest.labels();
    (0..classes)
        .map(|c| {
            let gold = form_gold_list(&ids, &labels, &src.manifest.confidences_for(c), c, tau, &src.manifest.checkpoint_id)?;
            Ok(gold.anchored_to(m.manifest.checkpoint_id.clone()))
        })
        .collect()
}

/// C-Scores of one checkpoint for every configured method.
pub fn score_manifest(
    m: &LoadedManifest,
    reference: Option<&LoadedManifest>,
    cfg: &RunConfig,
) -> Result<Vec<GlobalConsistencyResult>> {
    cfg.validate()?;
    let golds = gold_lists(m, reference, cfg.tau)?;
    let mut results = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let mut per_class = Vec::with_capacity(golds.len());
        for gold in &golds {
            let indices = gold
                .members()
                .iter()
                .map(|mem| {
                    m.image_index(&mem.image_id).ok_or_else(|| {
                        Error::Lookup(format!("gold-list image `{}` is not in the scored manifest", mem.image_id))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let heatmaps = indices
                .par_iter()
                .map(|&i| compose_image(m, i, method, cfg))
                .collect::<Result<Vec<_>>>()?;
            per_class.push(class_cscore(method, &heatmaps, gold, cfg.alpha)?);
        }
        results.push(global_cscore(&per_class)?);
    }
    Ok(results)
}

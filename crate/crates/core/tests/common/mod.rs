#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cscore::io::{write_f32_file, BundleManifest, ImageEntry, LayerRef, MANIFEST_VERSION};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LAYERS: [(&str, [usize; 3]); 2] = [("block4", [6, 6, 4]), ("block5", [3, 3, 8])];

/// Two-class bundle with activations, gradients and channel scores for every
/// layer. Image `i` has label `i % 2`; confidences are drawn so that roughly
/// two thirds of the images clear tau = 0.5.
pub fn write_bundle(dir: &Path, checkpoint: &str, images: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(images);
    for i in 0..images {
        let image_id = format!("img{i:03}");
        let label = i % 2;
        let p = rng.gen_range(0.2..1.0);
        let mut confidences = vec![1.0 - p, 1.0 - p];
        confidences[label] = p;
        let mut layers = BTreeMap::new();
        for (name, shape) in LAYERS {
            let n: usize = shape.iter().product();
            let acts: Vec<f32> = (0..n).map(|_| rng.gen_range(-0.5..2.0)).collect();
            let grads: Vec<f32> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let scores: Vec<f32> = (0..shape[2]).map(|_| rng.gen_range(-0.2..1.0)).collect();
            let stem = format!("{checkpoint}_{image_id}_{name}");
            write_f32_file(&dir.join(format!("{stem}.act.f32")), &acts).unwrap();
            write_f32_file(&dir.join(format!("{stem}.grad.f32")), &grads).unwrap();
            write_f32_file(&dir.join(format!("{stem}.score.f32")), &scores).unwrap();
            layers.insert(
                name.to_string(),
                LayerRef {
                    shape,
                    activations: format!("{stem}.act.f32").into(),
                    gradients: Some(format!("{stem}.grad.f32").into()),
                    gradient_class: None,
                    channel_scores: Some(format!("{stem}.score.f32").into()),
                    scored_channels: None,
                },
            );
        }
        entries.push(ImageEntry {
            image_id,
            true_label: label,
            confidences,
            layers,
            scorecam_baseline: None,
        });
    }
    let manifest = BundleManifest {
        version: MANIFEST_VERSION,
        architecture: "tinynet".into(),
        checkpoint_id: checkpoint.into(),
        target_layers: LAYERS.iter().map(|(n, _)| n.to_string()).collect(),
        classes: Some(vec!["normal".into(), "pneumonia".into()]),
        head: Some("softmax".into()),
        input_size: Some([12, 12]),
        scorecam_baseline: Some("zeros".into()),
        images: entries,
    };
    let path = dir.join(format!("{checkpoint}_manifest.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    path
}

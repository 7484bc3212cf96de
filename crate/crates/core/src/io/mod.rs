//! On-disk formats: bundle manifests with raw tensor files, epoch metrics,
//! scores reports and alert documents.

mod manifest;
mod metrics;
mod report;
mod tensor_file;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

pub use manifest::{read_manifest, BundleManifest, ImageEntry, LayerRef, LoadedManifest, MANIFEST_VERSION};
pub use metrics::{parse_epoch_metrics, read_epoch_metrics, write_epoch_metrics, EpochMetrics, EPOCH_METRICS_HEADER};
pub use report::{
    checkpoint_epoch, read_cscore_report, rows_from_results, sort_rows, write_cscore_report, ClassKey,
    ScoreRow, SCORES_HEADER,
};
pub use tensor_file::{read_f32_file, write_f32_file};

use crate::error::{Error, Result};
use crate::trajectory::{Alert, CheckpointRecord, Series};

/// Alerts as a JSON array of `{kind, epoch, method, class, evidence}`.
pub fn write_alerts(alerts: &[Alert], path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(alerts).map_err(|e| Error::Serialize(e.to_string()))?;
    File::create(path)
        .and_then(|mut f| f.write_all(json.as_bytes()).and_then(|_| f.write_all(b"\n")))
        .map_err(|e| Error::io(path, e))
}

pub fn read_alerts(path: &Path) -> Result<Vec<Alert>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Join per-epoch metrics with scores rows into a checkpoint series.
///
/// Only checkpoints that have scores become records; every one of them must
/// have a metrics row.
pub fn assemble_series(metrics: &[EpochMetrics], rows: &[ScoreRow], phase_boundary: u32) -> Result<Series> {
    let by_epoch: BTreeMap<u32, &EpochMetrics> = metrics.iter().map(|m| (m.epoch, m)).collect();
    let mut records: BTreeMap<u32, CheckpointRecord> = BTreeMap::new();
    let mut ids: BTreeMap<u32, &str> = BTreeMap::new();
    for row in rows {
        let epoch = checkpoint_epoch(&row.checkpoint).ok_or_else(|| {
            Error::Validation(format!("checkpoint `{}` does not end in an epoch number", row.checkpoint))
        })?;
        if let Some(prev) = ids.insert(epoch, &row.checkpoint) {
            if prev != row.checkpoint {
                return Err(Error::Validation(format!(
                    "checkpoints `{prev}` and `{}` both map to epoch {epoch}",
                    row.checkpoint
                )));
            }
        }
        let m = by_epoch
            .get(&epoch)
            .ok_or_else(|| Error::Lookup(format!("no epoch metrics for checkpoint `{}`", row.checkpoint)))?;
        let rec = records
            .entry(epoch)
            .or_insert_with(|| CheckpointRecord::new(epoch, m.phase, m.auc, m.accuracy));
        match row.class {
            ClassKey::Global => {
                rec.global.insert(row.method, row.cscore);
            }
            ClassKey::Class(c) => {
                rec.per_class.insert(
                    (row.method, c),
                    crate::trajectory::ClassScore {
                        cscore: row.cscore,
                        gold_size: row.gold_size,
                    },
                );
            }
        }
    }
    Series::new(records.into_values().collect(), phase_boundary)
}

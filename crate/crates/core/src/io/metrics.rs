//! `epoch_metrics.csv`: `epoch,phase,auc,accuracy`, fractions not percentages.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Phase;

pub const EPOCH_METRICS_HEADER: [&str; 4] = ["epoch", "phase", "auc", "accuracy"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: u32,
    pub phase: Phase,
    pub auc: f64,
    pub accuracy: f64,
}

pub fn read_epoch_metrics(path: &Path) -> Result<Vec<EpochMetrics>> {
    let file = File::open(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    parse_epoch_metrics(file, path)
}

pub fn parse_epoch_metrics<R: std::io::Read>(reader: R, path: &Path) -> Result<Vec<EpochMetrics>> {
    let fail = |line: u64, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| fail(1, e.to_string()))?.clone();
    if header.iter().ne(EPOCH_METRICS_HEADER) {
        return Err(fail(
            1,
            format!("expected header `{}`", EPOCH_METRICS_HEADER.join(",")),
        ));
    }
    let mut rows: Vec<EpochMetrics> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            fail(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let epoch: u32 = field(0)
            .parse()
            .map_err(|_| fail(line, format!("bad epoch `{}`", field(0))))?;
        let phase: Phase = field(1).parse().map_err(|e: Error| fail(line, e.to_string()))?;
        let unit = |i: usize, name: &str| -> Result<f64> {
            let v: f64 = field(i)
                .parse()
                .map_err(|_| fail(line, format!("bad {name} `{}`", field(i))))?;
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(fail(line, format!("{name} {v} is outside [0, 1]")))
            }
        };
        let auc = unit(2, "auc")?;
        let accuracy = unit(3, "accuracy")?;
        if epoch == 0 {
            return Err(fail(line, "epochs start at 1".into()));
        }
        if let Some(prev) = rows.last() {
            if epoch == prev.epoch {
                return Err(fail(line, format!("duplicate epoch {epoch}")));
            }
            if epoch < prev.epoch {
                return Err(fail(line, format!("epoch {epoch} follows epoch {}", prev.epoch)));
            }
        }
        rows.push(EpochMetrics {
            epoch,
            phase,
            auc,
            accuracy,
        });
    }
    Ok(rows)
}

pub fn write_epoch_metrics(rows: &[EpochMetrics], path: &Path) -> Result<()> {
    let mut out = String::from("epoch,phase,auc,accuracy\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.epoch, r.phase.as_str(), r.auc, r.accuracy));
    }
    File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

//! Scores CSV: `checkpoint,method,class,cscore,cscore_full,gold_size,flags`.
//!
//! `cscore` is fixed to three decimals, `cscore_full` is the shortest string
//! that round-trips the f64. `class` is a class id or `global`. `flags` is a
//! `;`-separated subset of `empty_gold`, `singleton_gold`, `all_empty`,
//! `degenerate_pairs=N`.

use std::cmp::Ordering;
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cam::CamMethod;
use crate::engine::GlobalConsistencyResult;
use crate::error::{Error, Result};

pub const SCORES_HEADER: [&str; 7] = [
    "checkpoint",
    "method",
    "class",
    "cscore",
    "cscore_full",
    "gold_size",
    "flags",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassKey {
    Class(usize),
    Global,
}

impl fmt::Display for ClassKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassKey::Class(c) => write!(f, "{c}"),
            ClassKey::Global => f.write_str("global"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub checkpoint: String,
    pub method: CamMethod,
    pub class: ClassKey,
    pub cscore: f64,
    pub gold_size: usize,
    pub degenerate_pairs: usize,
    pub empty_gold: bool,
    pub singleton_gold: bool,
    pub all_empty: bool,
}

impl ScoreRow {
    fn flags(&self) -> String {
        let mut flags = Vec::new();
        if self.empty_gold {
            flags.push("empty_gold".to_string());
        }
        if self.singleton_gold {
            flags.push("singleton_gold".to_string());
        }
        if self.all_empty {
            flags.push("all_empty".to_string());
        }
        if self.degenerate_pairs > 0 {
            flags.push(format!("degenerate_pairs={}", self.degenerate_pairs));
        }
        flags.join(";")
    }
}

/// Trailing decimal digits of a checkpoint id (`E25` → 25, `epoch_030` → 30).
pub fn checkpoint_epoch(checkpoint: &str) -> Option<u32> {
    let digits = checkpoint.len() - checkpoint.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    checkpoint[checkpoint.len() - digits..].parse().ok()
}

fn checkpoint_order(a: &str, b: &str) -> Ordering {
    checkpoint_epoch(a).cmp(&checkpoint_epoch(b)).then_with(|| a.cmp(b))
}

/// Canonical row order: checkpoint (by epoch), method, class, global last.
pub fn sort_rows(rows: &mut [ScoreRow]) {
    rows.sort_by(|a, b| {
        checkpoint_order(&a.checkpoint, &b.checkpoint)
            .then(a.method.cmp(&b.method))
            .then(a.class.cmp(&b.class))
    });
}

/// Per-class rows plus one global row per method.
pub fn rows_from_results(checkpoint: &str, results: &[GlobalConsistencyResult]) -> Vec<ScoreRow> {
    let mut rows = Vec::new();
    for g in results {
        for c in &g.per_class {
            rows.push(ScoreRow {
                checkpoint: checkpoint.to_string(),
                method: c.method,
                class: ClassKey::Class(c.class_id),
                cscore: c.cscore,
                gold_size: c.gold_size,
                degenerate_pairs: c.degenerate_pairs,
                empty_gold: c.empty_gold,
                singleton_gold: c.singleton_gold,
                all_empty: false,
            });
        }
        rows.push(ScoreRow {
            checkpoint: checkpoint.to_string(),
            method: g.method,
            class: ClassKey::Global,
            cscore: g.cscore,
            gold_size: g.supports.iter().sum(),
            degenerate_pairs: g.per_class.iter().map(|c| c.degenerate_pairs).sum(),
            empty_gold: false,
            singleton_gold: false,
            all_empty: g.all_empty,
        });
    }
    rows
}

/// Rows are written in canonical order regardless of input order.
pub fn write_cscore_report(rows: &[ScoreRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Validation("no results to write".into()));
    }
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut out = SCORES_HEADER.join(",");
    out.push('\n');
    for r in &sorted {
        out.push_str(&format!(
            "{},{},{},{:.3},{},{},{}\n",
            r.checkpoint,
            r.method,
            r.class,
            r.cscore,
            r.cscore,
            r.gold_size,
            r.flags()
        ));
    }
    File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

pub fn read_cscore_report(path: &Path) -> Result<Vec<ScoreRow>> {
    let file = File::open(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let fail = |line: u64, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new().from_reader(file);
    let header = rdr.headers().map_err(|e| fail(1, e.to_string()))?.clone();
    if header.iter().ne(SCORES_HEADER) {
        return Err(fail(1, format!("expected header `{}`", SCORES_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| fail(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let f = |i: usize| record.get(i).unwrap_or("");
        let method: CamMethod = f(1).parse().map_err(|e: Error| fail(line, e.to_string()))?;
        let class = match f(2) {
            "global" => ClassKey::Global,
            s => ClassKey::Class(
                s.parse()
                    .map_err(|_| fail(line, format!("bad class `{s}`")))?,
            ),
        };
        let cscore: f64 = f(4)
            .parse()
            .map_err(|_| fail(line, format!("bad cscore_full `{}`", f(4))))?;
        if !(0.0..=1.0).contains(&cscore) {
            return Err(fail(line, format!("cscore {cscore} is outside [0, 1]")));
        }
        let gold_size: usize = f(5)
            .parse()
            .map_err(|_| fail(line, format!("bad gold_size `{}`", f(5))))?;
        let mut row = ScoreRow {
            checkpoint: f(0).to_string(),
            method,
            class,
            cscore,
            gold_size,
            degenerate_pairs: 0,
            empty_gold: false,
            singleton_gold: false,
            all_empty: false,
        };
        for flag in f(6).split(';').filter(|s| !s.is_empty()) {
            match flag {
                "empty_gold" => row.empty_gold = true,
                "singleton_gold" => row.singleton_gold = true,
                "all_empty" => row.all_empty = true,
                other => {
                    let n = other
                        .strip_prefix("degenerate_pairs=")
                        .and_then(|n| n.parse().ok())
                        .ok_or_else(|| fail(line, format!("unknown flag `{other}`")))?;
                    row.degenerate_pairs = n;
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{global_cscore, ClassConsistencyResult};

    fn result(class_id: usize, cscore: f64, gold_size: usize) -> ClassConsistencyResult {
        ClassConsistencyResult {
            class_id,
            method: CamMethod::GradCam,
            cscore,
            gold_size,
            degenerate_pairs: 0,
            empty_gold: gold_size == 0,
            singleton_gold: gold_size == 1,
        }
    }

    #[test]
    fn checkpoint_epochs() {
        assert_eq!(checkpoint_epoch("E25"), Some(25));
        assert_eq!(checkpoint_epoch("epoch_030"), Some(30));
        assert_eq!(checkpoint_epoch("7"), Some(7));
        assert_eq!(checkpoint_epoch("final"), None);
    }

    #[test]
    fn single_row_formatting() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let g = global_cscore(&[result(0, 1.0, 4)]).unwrap();
        let rows = rows_from_results("E1", &[g]);
        write_cscore_report(&rows[..1], &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(
            text,
            "checkpoint,method,class,cscore,cscore_full,gold_size,flags\nE1,gradcam,0,1.000,1,4,\n"
        );
    }

    #[test]
    fn empty_gold_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let g = global_cscore(&[result(0, 0.0, 0), result(1, 0.744, 855)]).unwrap();
        write_cscore_report(&rows_from_results("E25", &[g]), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("E25,gradcam,0,0.000,0,0,empty_gold\n"), "{text}");
        assert!(text.contains("E25,gradcam,global,0.744,0.744,855,\n"), "{text}");
    }

    #[test]
    fn rows_sorted_by_epoch_not_text() {
        let g = global_cscore(&[result(0, 0.5, 3)]).unwrap();
        let mut rows = rows_from_results("E10", std::slice::from_ref(&g));
        rows.extend(rows_from_results("E5", &[g]));
        sort_rows(&mut rows);
        assert_eq!(rows[0].checkpoint, "E5");
    }

    #[test]
    fn round_trip_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let mut c0 = result(0, 0.1 + 0.2, 317);
        c0.degenerate_pairs = 12;
        let g = global_cscore(&[c0, result(1, 1.0 / 3.0, 1)]).unwrap();
        let mut rows = rows_from_results("E20", &[g]);
        write_cscore_report(&rows, &p).unwrap();
        sort_rows(&mut rows);
        assert_eq!(read_cscore_report(&p).unwrap(), rows);
    }

    #[test]
    fn empty_results_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(write_cscore_report(&[], &dir.path().join("s.csv")).is_err());
    }
}

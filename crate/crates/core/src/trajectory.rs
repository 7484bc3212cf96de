//! Checkpoint series and detectors for the three ways C-Score and AUC come
//! apart during training:
//!
//! * gold-list collapse: a class has no member above threshold while AUC is high;
//! * attribution collapse: a method's score falls sharply while AUC is intact;
//! * class masking: a large per-class gap hidden by the global aggregate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cam::CamMethod;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    /// Transfer learning: frozen backbone.
    TL,
    /// Fine-tuning: all layers trainable.
    FT,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::TL => "TL",
            Phase::FT => "FT",
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "TL" => Ok(Phase::TL),
            "FT" => Ok(Phase::FT),
            other => Err(Error::Validation(format!("unknown phase `{other}`"))),
        }
    }
}

pub const DEFAULT_PHASE_BOUNDARY: u32 = 20;

/// TL up to and including `boundary`, FT afterwards.
pub fn phase_of(epoch: u32, boundary: u32) -> Phase {
    if epoch <= boundary {
        Phase::TL
    } else {
        Phase::FT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub cscore: f64,
    pub gold_size: usize,
}

/// One evaluated checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub epoch: u32,
    pub phase: Phase,
    pub auc: f64,
    pub accuracy: f64,
    pub per_class: BTreeMap<(CamMethod, usize), ClassScore>,
    pub global: BTreeMap<CamMethod, f64>,
}

impl CheckpointRecord {
    pub fn new(epoch: u32, phase: Phase, auc: f64, accuracy: f64) -> Self {
        Self {
            epoch,
            phase,
            auc,
            accuracy,
            per_class: BTreeMap::new(),
            global: BTreeMap::new(),
        }
    }

    pub fn with_class(mut self, method: CamMethod, class_id: usize, cscore: f64, gold_size: usize) -> Self {
        self.per_class.insert((method, class_id), ClassScore { cscore, gold_size });
        self
    }

    pub fn with_global(mut self, method: CamMethod, cscore: f64) -> Self {
        self.global.insert(method, cscore);
        self
    }

    /// Gold-list size per class; gold lists do not depend on the CAM method.
    pub fn gold_sizes(&self) -> BTreeMap<usize, usize> {
        self.per_class
            .iter()
            .map(|(&(_, class), s)| (class, s.gold_size))
            .collect()
    }

    fn classes_for(&self, method: CamMethod) -> impl Iterator<Item = (usize, ClassScore)> + '_ {
        self.per_class
            .range((method, 0)..=(method, usize::MAX))
            .map(|(&(_, c), &s)| (c, s))
    }
}

/// Checkpoints ordered by epoch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    records: Vec<CheckpointRecord>,
}

impl Series {
    pub fn new(mut records: Vec<CheckpointRecord>, phase_boundary: u32) -> Result<Self> {
        records.sort_by_key(|r| r.epoch);
        for pair in records.windows(2) {
            if pair[0].epoch == pair[1].epoch {
                return Err(Error::Validation(format!("epoch {} appears twice", pair[0].epoch)));
            }
        }
        for r in &records {
            if r.epoch == 0 {
                return Err(Error::Validation("epochs start at 1".into()));
            }
            let expected = phase_of(r.epoch, phase_boundary);
            if r.phase != expected {
                return Err(Error::Validation(format!(
                    "epoch {} is labelled {} but the phase boundary {phase_boundary} makes it {}",
                    r.epoch,
                    r.phase.as_str(),
                    expected.as_str()
                )));
            }
            let mut sizes = BTreeMap::new();
            for (&(method, class), s) in &r.per_class {
                if let Some(prev) = sizes.insert(class, s.gold_size) {
                    if prev != s.gold_size {
                        return Err(Error::Validation(format!(
                            "epoch {}: class {class} gold size differs across methods ({prev} vs {} for {method})",
                            r.epoch, s.gold_size
                        )));
                    }
                }
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[CheckpointRecord] {
        &self.records
    }

    pub fn get(&self, epoch: u32) -> Option<&CheckpointRecord> {
        self.records
            .binary_search_by_key(&epoch, |r| r.epoch)
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn methods(&self) -> Vec<CamMethod> {
        let mut methods: Vec<CamMethod> = self
            .records
            .iter()
            .flat_map(|r| r.global.keys().copied().chain(r.per_class.keys().map(|k| k.0)))
            .collect();
        methods.sort();
        methods.dedup();
        methods
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlertKind {
    GoldListCollapse,
    AttributionCollapse,
    ClassMasking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub kind: AlertKind,
    pub epoch: u32,
    pub method: Option<CamMethod>,
    #[serde(rename = "class")]
    pub class_id: Option<usize>,
    pub evidence: BTreeMap<String, f64>,
}

fn evidence<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Whether attribution collapse keys on the global or per-class score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapseScope {
    #[default]
    Global,
    PerClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub auc_floor: f64,
    pub drop_ratio: f64,
    pub floor: f64,
    pub gap_min: f64,
    pub collapse_scope: CollapseScope,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            auc_floor: 0.95,
            drop_ratio: 0.25,
            floor: 0.10,
            gap_min: 0.40,
            collapse_scope: CollapseScope::Global,
        }
    }
}

/// `global(to) - global(from)` for one method.
pub fn net_change(series: &Series, method: CamMethod, from: u32, to: u32) -> Result<f64> {
    let score = |epoch: u32| -> Result<f64> {
        let rec = series
            .get(epoch)
            .ok_or_else(|| Error::Lookup(format!("epoch {epoch} is not in the series")))?;
        rec.global
            .get(&method)
            .copied()
            .ok_or_else(|| Error::Lookup(format!("no global {method} score at epoch {epoch}")))
    };
    Ok(score(to)? - score(from)?)
}

/// Every (epoch, class) whose gold list is empty while AUC stays at or above
/// `auc_floor`.
pub fn detect_goldlist_collapse(series: &Series, auc_floor: f64) -> Vec<Alert> {
    let mut alerts = Vec::new();
    for r in series.records() {
        if r.auc < auc_floor {
            continue;
        }
        for (class, size) in r.gold_sizes() {
            if size == 0 {
                alerts.push(Alert {
                    kind: AlertKind::GoldListCollapse,
                    epoch: r.epoch,
                    method: None,
                    class_id: Some(class),
                    evidence: evidence([
                        ("gold_size", 0.0),
                        ("auc", r.auc),
                        ("accuracy", r.accuracy),
                    ]),
                });
            }
        }
    }
    alerts
}

/// Whether a sharp drop happened while classification still looked healthy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropKind {
    /// AUC intact: the consistency failure leads.
    EarlyWarning,
    /// AUC already below the floor at the same checkpoint.
    ConcurrentFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDrop {
    pub kind: DropKind,
    pub epoch: u32,
    pub previous_epoch: u32,
    pub method: CamMethod,
    pub class_id: Option<usize>,
    pub previous: f64,
    pub current: f64,
    pub auc: f64,
}

/// Consecutive-checkpoint drops with `current < drop_ratio · previous` and
/// `current < floor`, classified by the AUC at the later checkpoint.
pub fn score_drops(series: &Series, method: CamMethod, cfg: &DetectorConfig) -> Vec<ScoreDrop> {
    let mut drops = Vec::new();
    let sharp = |prev: f64, cur: f64| cur < cfg.drop_ratio * prev && cur < cfg.floor;
    for pair in series.records().windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let kind = if cur.auc >= cfg.auc_floor {
            DropKind::EarlyWarning
        } else {
            DropKind::ConcurrentFailure
        };
        let mut push = |class_id, previous, current| {
            drops.push(ScoreDrop {
                kind,
                epoch: cur.epoch,
                previous_epoch: prev.epoch,
                method,
                class_id,
                previous,
                current,
                auc: cur.auc,
            })
        };
        match cfg.collapse_scope {
            CollapseScope::Global => {
                if let (Some(&a), Some(&b)) = (prev.global.get(&method), cur.global.get(&method)) {
                    if sharp(a, b) {
                        push(None, a, b);
                    }
                }
            }
            CollapseScope::PerClass => {
                for (class, now) in cur.classes_for(method) {
                    // an emptied gold list is gold-list collapse, not attribution collapse
                    if now.gold_size == 0 {
                        continue;
                    }
                    if let Some(before) = prev.per_class.get(&(method, class)) {
                        if before.gold_size > 0 && sharp(before.cscore, now.cscore) {
                            push(Some(class), before.cscore, now.cscore);
                        }
                    }
                }
            }
        }
    }
    drops
}

/// Early-warning drops only: the score collapses while AUC is still above
/// `auc_floor`.
pub fn detect_attribution_collapse(series: &Series, method: CamMethod, cfg: &DetectorConfig) -> Vec<Alert> {
    score_drops(series, method, cfg)
        .into_iter()
        .filter(|d| d.kind == DropKind::EarlyWarning)
        .map(|d| Alert {
            kind: AlertKind::AttributionCollapse,
            epoch: d.epoch,
            method: Some(method),
            class_id: d.class_id,
            evidence: evidence([
                ("previous_epoch", f64::from(d.previous_epoch)),
                ("previous_cscore", d.previous),
                ("cscore", d.current),
                ("auc", d.auc),
            ]),
        })
        .collect()
}

/// Per-class gap `max - min` of at least `gap_min` among classes with
/// non-empty gold lists. The alert names the lowest-scoring class.
pub fn detect_class_masking(series: &Series, method: CamMethod, gap_min: f64) -> Vec<Alert> {
    let mut alerts = Vec::new();
    for r in series.records() {
        let scored: Vec<(usize, f64)> = r
            .classes_for(method)
            .filter(|(_, s)| s.gold_size > 0)
            .map(|(c, s)| (c, s.cscore))
            .collect();
        if scored.len() < 2 {
            continue;
        }
        let (lo_class, lo) = scored
            .iter()
            .copied()
            .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let (hi_class, hi) = scored
            .iter()
            .copied()
            .fold((usize::MAX, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let gap = hi - lo;
        if gap >= gap_min {
            let mut ev = evidence([
                ("gap", gap),
                ("max_class", hi_class as f64),
                ("max_cscore", hi),
                ("min_class", lo_class as f64),
                ("min_cscore", lo),
            ]);
            if let Some(&g) = r.global.get(&method) {
                ev.insert("global_cscore".into(), g);
            }
            alerts.push(Alert {
                kind: AlertKind::ClassMasking,
                epoch: r.epoch,
                method: Some(method),
                class_id: Some(lo_class),
                evidence: ev,
            });
        }
    }
    alerts
}

/// All three detectors over every method in the series, ordered by epoch,
/// kind, method, class.
pub fn detect_all(series: &Series, cfg: &DetectorConfig) -> Vec<Alert> {
    let mut alerts = detect_goldlist_collapse(series, cfg.auc_floor);
    for method in series.methods() {
        alerts.extend(detect_attribution_collapse(series, method, cfg));
        alerts.extend(detect_class_masking(series, method, cfg.gap_min));
    }
    alerts.sort_by(|a, b| {
        (a.epoch, a.kind, a.method, a.class_id).cmp(&(b.epoch, b.kind, b.method, b.class_id))
    });
    alerts
}

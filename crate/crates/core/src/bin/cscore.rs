use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cscore::cam::CamMethod;
use cscore::config::RunConfig;
use cscore::error::{Error, Result};
use cscore::io::{
    assemble_series, read_cscore_report, read_epoch_metrics, read_manifest, rows_from_results,
    write_alerts, write_cscore_report, write_f32_file,
};
use cscore::pipeline::{compose_image, score_manifest, with_workers};
use cscore::trajectory::{detect_all, net_change, score_drops, CollapseScope, DropKind};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "cscore", version, about = "Explanation-consistency scoring for CAM heatmaps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compose heatmaps for every image of a manifest.
    Cam(CamArgs),
    /// Per-class and global C-Scores for one checkpoint.
    Score(ScoreArgs),
    /// Assemble a checkpoint series and run the dissociation detectors.
    Trajectory(TrajectoryArgs),
    /// Write the published-trajectory fixtures as CSV files.
    Fixtures(FixturesArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<CamMethod>>,
    /// Layer for the single-layer methods (default: first target layer).
    #[arg(long)]
    layer: Option<String>,
    /// Layers aggregated by MS-GradCAM++ (default: all target layers).
    #[arg(long, value_delimiter = ',')]
    ms_layers: Option<Vec<String>>,
    /// Worker threads (default: CSCORE_WORKERS, then the config, then all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct CamArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output directory for `<image_id>.<method>.f32` files and `heatmaps.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Take gold-list membership from this manifest instead of the scored one.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scope {
    Global,
    PerClass,
}

#[derive(Args)]
struct TrajectoryArgs {
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long)]
    scores: PathBuf,
    /// Write alerts here (JSON array); printed to stdout otherwise.
    #[arg(long)]
    alerts: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    phase_boundary: Option<u32>,
    #[arg(long)]
    auc_floor: Option<f64>,
    #[arg(long)]
    drop_ratio: Option<f64>,
    #[arg(long)]
    floor: Option<f64>,
    #[arg(long)]
    gap_min: Option<f64>,
    #[arg(long, value_enum)]
    collapse_scope: Option<Scope>,
    /// Epoch pair for the net-change summary.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [20u32, 30])]
    net_change: Vec<u32>,
}

#[derive(Args)]
struct FixturesArgs {
    #[arg(long)]
    out: PathBuf,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_toml_file(p),
        None => Ok(RunConfig::default()),
    }
}

fn apply_common(cfg: &mut RunConfig, a: &CommonArgs) {
    if let Some(m) = &a.methods {
        cfg.methods = m.clone();
    }
    if let Some(l) = &a.layer {
        cfg.layer = Some(l.clone());
    }
    if let Some(l) = &a.ms_layers {
        cfg.ms_layers = l.clone();
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
}

fn workers(cfg: &RunConfig, flag: Option<usize>) -> Result<usize> {
    match flag {
        Some(w) => Ok(w),
        None => cfg.effective_workers(),
    }
}

#[derive(Serialize)]
struct HeatmapEntry {
    image_id: String,
    method: CamMethod,
    file: String,
    height: usize,
    width: usize,
    degenerate: bool,
}

fn run_cam(a: &CamArgs) -> Result<()> {
    let mut cfg = load_config(a.common.config.as_deref())?;
    apply_common(&mut cfg, &a.common);
    cfg.validate()?;
    let m = read_manifest(&a.common.manifest)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    let n = m.manifest.images.len();
    let entries = with_workers(workers(&cfg, a.common.workers)?, || {
        let mut entries = Vec::new();
        for &method in &cfg.methods {
            let maps = (0..n)
                .into_par_iter()
                .map(|i| compose_image(&m, i, method, &cfg))
                .collect::<Result<Vec<_>>>()?;
            for (img, h) in m.manifest.images.iter().zip(maps) {
                let file = format!("{}.{}.f32", img.image_id, method);
                write_f32_file(&a.out.join(&file), h.data())?;
                let (height, width) = h.shape();
                entries.push(HeatmapEntry {
                    image_id: img.image_id.clone(),
                    method,
                    file,
                    height,
                    width,
                    degenerate: h.is_degenerate(),
                });
            }
        }
        Ok::<_, Error>(entries)
    })??;
    let index = a.out.join("heatmaps.json");
    let json = serde_json::to_string_pretty(&entries).map_err(|e| Error::Serialize(e.to_string()))?;
    std::fs::write(&index, json).map_err(|e| Error::Io { path: index.clone(), source: e })?;
    println!("wrote {} heatmaps to {}", entries.len(), a.out.display());
    Ok(())
}

fn run_score(a: &ScoreArgs) -> Result<()> {
    let mut cfg = load_config(a.common.config.as_deref())?;
    apply_common(&mut cfg, &a.common);
    if let Some(t) = a.tau {
        cfg.tau = t;
    }
    if let Some(al) = a.alpha {
        cfg.alpha = al;
    }
    cfg.validate()?;
    let m = read_manifest(&a.common.manifest)?;
    let reference = a.reference.as_deref().map(read_manifest).transpose()?;
    let results = with_workers(workers(&cfg, a.common.workers)?, || {
        score_manifest(&m, reference.as_ref(), &cfg)
    })??;
    let rows = rows_from_results(&m.manifest.checkpoint_id, &results);
    write_cscore_report(&rows, &a.out)?;
    for g in &results {
        let per_class: Vec<String> = g
            .per_class
            .iter()
            .map(|c| format!("class {} {:.3} (n={})", c.class_id, c.cscore, c.gold_size))
            .collect();
        println!("{:<12} global {:.3}  {}", g.method.name(), g.cscore, per_class.join("  "));
    }
    Ok(())
}

fn run_trajectory(a: &TrajectoryArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(b) = a.phase_boundary {
        cfg.phase_boundary = b;
    }
    let d = &mut cfg.detectors;
    if let Some(v) = a.auc_floor {
        d.auc_floor = v;
    }
    if let Some(v) = a.drop_ratio {
        d.drop_ratio = v;
    }
    if let Some(v) = a.floor {
        d.floor = v;
    }
    if let Some(v) = a.gap_min {
        d.gap_min = v;
    }
    if let Some(s) = a.collapse_scope {
        d.collapse_scope = match s {
            Scope::Global => CollapseScope::Global,
            Scope::PerClass => CollapseScope::PerClass,
        };
    }
    cfg.validate()?;
    let metrics = read_epoch_metrics(&a.metrics)?;
    let rows = read_cscore_report(&a.scores)?;
    let series = assemble_series(&metrics, &rows, cfg.phase_boundary)?;

    let (from, to) = (a.net_change[0], a.net_change[1]);
    if series.get(from).is_some() && series.get(to).is_some() {
        let mut deltas = BTreeMap::new();
        for method in series.methods() {
            if let Ok(d) = net_change(&series, method, from, to) {
                deltas.insert(method, d);
            }
        }
        let parts: Vec<String> = deltas.iter().map(|(m, d)| format!("{m} {d:+.3}")).collect();
        println!("net change E{from}->E{to}: {}", parts.join(", "));
    }
    for method in series.methods() {
        for drop in score_drops(&series, method, &cfg.detectors) {
            let label = match drop.kind {
                DropKind::EarlyWarning => "early warning",
                DropKind::ConcurrentFailure => "concurrent failure",
            };
            println!(
                "{label}: {method} {:.3} (E{}) -> {:.3} (E{}), AUC {:.4}",
                drop.previous, drop.previous_epoch, drop.current, drop.epoch, drop.auc
            );
        }
    }

    let alerts = detect_all(&series, &cfg.detectors);
    println!("{} alert(s)", alerts.len());
    match &a.alerts {
        Some(path) => write_alerts(&alerts, path)?,
        None if !alerts.is_empty() => {
            let json = serde_json::to_string_pretty(&alerts).map_err(|e| Error::Serialize(e.to_string()))?;
            println!("{json}");
        }
        None => {}
    }
    Ok(())
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Cam(a) => run_cam(&a),
        Command::Score(a) => run_score(&a),
        Command::Trajectory(a) => run_trajectory(&a),
        Command::Fixtures(a) => {
            for p in cscore::fixtures::write_all(&a.out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_user_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

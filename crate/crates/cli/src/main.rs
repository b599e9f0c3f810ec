//! `rinkid` — synthetic-rink jersey identification pipeline.
//!
//! Typical session:
//!
//! ```text
//! rinkid gen                    # synthesize datasets + shift db under out/data
//! rinkid label                  # cache approximate frame labels
//! rinkid train                  # train; checkpoint + metrics under out/run
//! rinkid eval --mask shifts     # tracklet-level evaluation + report CSV
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use rinkid_core::harness::{
    ablate, ablation_csv, convergence_compare, convergence_csv, evaluate, generate_to_dir,
    label_tracklets, load_data, train_to_dir, AblationAxis, MaskMode, PreparedData, RunConfig,
};
use rinkid_core::loss::ClassSpace;
use rinkid_core::model::Model;
use rinkid_core::shiftsync::{report_to_csv, write_report};
use rinkid_core::weaklabel::{
    read_label_cache, write_label_cache, FrameScorer, ModelScorer, OracleScorer, TemplateScorer,
};

#[derive(Parser)]
#[command(name = "rinkid", version, about = "Jersey-number identification from player tracklets")]
struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScorerArg {
    /// Synthetic ground-truth visibility bits.
    Oracle,
    /// Template correlation against the glyph stamps.
    Template,
    /// A trained checkpoint's 1 − P(null) per frame.
    Model,
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskArg {
    Shifts,
    Roster,
    None,
}

impl From<MaskArg> for MaskMode {
    fn from(m: MaskArg) -> MaskMode {
        match m {
            MaskArg::Shifts => MaskMode::Shifts,
            MaskArg::Roster => MaskMode::Roster,
            MaskArg::None => MaskMode::None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Heads,
    Layers,
    Window,
}

impl From<AxisArg> for AblationAxis {
    fn from(a: AxisArg) -> AblationAxis {
        match a {
            AxisArg::Heads => AblationAxis::Heads,
            AxisArg::Layers => AblationAxis::Layers,
            AxisArg::Window => AblationAxis::WindowLen,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate train/test tracklet datasets and the shift database.
    Gen,
    /// Precompute approximate frame-visibility labels for the train split.
    Label {
        /// Dataset directory (default: <out>/data).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ScorerArg::Oracle)]
        scorer: ScorerArg,
        /// Checkpoint used by the model scorer.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Cache path (default: <out>/labels.jsonl).
        #[arg(long)]
        labels_out: Option<PathBuf>,
    },
    /// Train on a generated dataset.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Label cache (default: <out>/labels.jsonl).
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on the test split.
    Eval {
        /// Checkpoint path (default: <out>/run/checkpoint.rkck).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Mask source; falls back to the config's mask mode.
        #[arg(long, value_enum)]
        mask: Option<MaskArg>,
        /// Report CSV path (default: <out>/report_<mask>.csv).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sweep one architecture axis, training one model per cell.
    Ablate {
        #[arg(long, value_enum)]
        axis: AxisArg,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Compare approximate-label vs uniform window sampling convergence.
    CompareConvergence {
        /// Number of seeds (cfg.seed, cfg.seed+1, ...).
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
    /// Run one tracklet through the pipeline and print its report row.
    Infer {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        id: String,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum)]
        mask: Option<MaskArg>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg: RunConfig = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_prepared(cfg: &RunConfig, data_dir: &Path, labels: Option<&Path>) -> Result<PreparedData> {
    let label_map = match labels {
        Some(path) if path.exists() => read_label_cache(path)?,
        _ => Default::default(),
    };
    let data = load_data(data_dir, label_map)
        .with_context(|| format!("loading dataset from {}", data_dir.display()))?;
    let _ = cfg;
    Ok(data)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    let data_dir_default = cli.out.join("data");
    let labels_default = cli.out.join("labels.jsonl");
    let checkpoint_default = cli.out.join("run").join("checkpoint.rkck");

    match &cli.cmd {
        Cmd::Gen => {
            fs::create_dir_all(&data_dir_default)?;
            let data = generate_to_dir(&cfg, &data_dir_default)?;
            let nulls = data
                .train
                .iter()
                .filter(|e| e.tracklet.label.is_none())
                .count();
            println!(
                "wrote {} train / {} test tracklets ({} shift records, {:.1}% null) to {}",
                data.train.len(),
                data.test.len(),
                data.shift_db.len(),
                100.0 * nulls as f64 / data.train.len().max(1) as f64,
                data_dir_default.display()
            );
        }
        Cmd::Label {
            data,
            scorer,
            checkpoint,
            labels_out,
        } => {
            let data_dir = data.clone().unwrap_or(data_dir_default);
            let out_path = labels_out.clone().unwrap_or(labels_default);
            let dataset = rinkid_core::synthgen::read_dataset(&data_dir.join("train"))?;
            let model;
            let scorer: Box<dyn FrameScorer> = match scorer {
                ScorerArg::Oracle => Box::new(OracleScorer),
                ScorerArg::Template => {
                    Box::new(TemplateScorer::new(ClassSpace::new(cfg.synth.num_classes)?))
                }
                ScorerArg::Model => {
                    let ck = checkpoint.clone().unwrap_or(checkpoint_default.clone());
                    model = Model::load(&ck)
                        .with_context(|| format!("loading checkpoint {}", ck.display()))?;
                    Box::new(ModelScorer::new(&model, cfg.augment.clone()))
                }
            };
            let labels =
                label_tracklets(&dataset.entries, scorer.as_ref(), cfg.visibility_threshold)?;
            write_label_cache(&out_path, &labels)?;
            println!("cached {} label rows to {}", labels.len(), out_path.display());
        }
        Cmd::Train { data, labels } => {
            let data_dir = data.clone().unwrap_or(data_dir_default);
            let labels_path = labels.clone().unwrap_or(labels_default);
            let prepared = load_prepared(&cfg, &data_dir, Some(&labels_path))?;
            let run_dir = cli.out.join("run");
            let outcome = train_to_dir(&cfg, &prepared, &run_dir)?;
            println!(
                "trained {} iterations in {:.1}s (stopped early: {}); final eval acc {:.4}, weighted F1 {:.4}",
                outcome.iterations_run,
                outcome.wall_s,
                outcome.stopped_early,
                outcome.final_eval.accuracy,
                outcome.final_eval.weighted_f1
            );
            println!(
                "checkpoint: {}\nmetrics:    {}",
                run_dir.join("checkpoint.rkck").display(),
                run_dir.join("metrics.csv").display()
            );
        }
        Cmd::Eval {
            checkpoint,
            data,
            mask,
            report,
        } => {
            let ck = checkpoint.clone().unwrap_or(checkpoint_default);
            let data_dir = data.clone().unwrap_or(data_dir_default);
            let mask: MaskMode = mask.map(Into::into).unwrap_or(cfg.mask);
            let model =
                Model::load(&ck).with_context(|| format!("loading checkpoint {}", ck.display()))?;
            let test = rinkid_core::synthgen::read_dataset(&data_dir.join("test"))?;
            let summary = evaluate(
                &model,
                &test.entries,
                test.shift_db.as_ref(),
                mask,
                &cfg.augment,
            )?;
            let space = ClassSpace::new(model.cfg.num_classes)?;
            let report_path = report
                .clone()
                .unwrap_or_else(|| cli.out.join(format!("report_{mask}.csv")));
            write_report(&summary.rows, &space, &report_path)?;
            println!(
                "mask={mask}: accuracy {:.4}, weighted F1 {:.4} over {} tracklets",
                summary.accuracy,
                summary.weighted_f1,
                summary.rows.len()
            );
            println!("report: {}", report_path.display());
        }
        Cmd::Ablate { axis, data, labels } => {
            let data_dir = data.clone().unwrap_or(data_dir_default);
            let labels_path = labels.clone().unwrap_or(labels_default);
            let prepared = load_prepared(&cfg, &data_dir, Some(&labels_path))?;
            let axis: AblationAxis = (*axis).into();
            let rows = ablate(axis, &cfg, &prepared)?;
            let csv = ablation_csv(&rows);
            let path = cli.out.join(format!("ablation_{}.csv", axis.name()));
            fs::write(&path, &csv)?;
            print!("{csv}");
            println!("wrote {}", path.display());
        }
        Cmd::CompareConvergence { seeds } => {
            let seed_list: Vec<u64> = (0..*seeds).map(|i| cfg.seed + i).collect();
            let summary = convergence_compare(&cfg, &seed_list)?;
            let csv = convergence_csv(&summary);
            let path = cli.out.join("convergence.csv");
            fs::create_dir_all(&cli.out)?;
            fs::write(&path, &csv)?;
            print!("{csv}");
            println!(
                "median iterations to {:.0}% train accuracy: approx {} vs uniform {}",
                100.0 * summary.threshold,
                summary.median_approx,
                summary.median_uniform
            );
        }
        Cmd::Infer {
            checkpoint,
            id,
            data,
            mask,
        } => {
            let ck = checkpoint.clone().unwrap_or(checkpoint_default);
            let data_dir = data.clone().unwrap_or(data_dir_default);
            let mask: MaskMode = mask.map(Into::into).unwrap_or(cfg.mask);
            let model = Model::load(&ck)?;
            let mut entry = None;
            let mut shift_db = None;
            for split in ["test", "train"] {
                let ds = rinkid_core::synthgen::read_dataset(&data_dir.join(split))?;
                if let Some(e) = ds.entries.into_iter().find(|e| e.tracklet.id == *id) {
                    entry = Some(e);
                    shift_db = ds.shift_db;
                    break;
                }
            }
            let Some(entry) = entry else {
                bail!("tracklet `{id}` not found under {}", data_dir.display());
            };
            let summary = evaluate(&model, &[entry], shift_db.as_ref(), mask, &cfg.augment)?;
            let space = ClassSpace::new(model.cfg.num_classes)?;
            print!("{}", report_to_csv(&summary.rows, &space));
        }
    }
    Ok(())
}

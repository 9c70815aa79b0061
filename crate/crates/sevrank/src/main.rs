//! Thin command-line front end over the pipeline stages.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use sevrank::config::RunConfig;
use sevrank::metrics::GainKind;
use sevrank::model::{OptimizerKind, Variant};
use sevrank::pipeline;
use sevrank::sampling::SamplingMode;
use sevrank::synth::LabelRule;

#[derive(Parser)]
#[command(
    name = "sevrank",
    version,
    about = "Pairwise severity ranking: synthetic data, pair sampling, comparison training, rank reconstruction, and attribution"
)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override every stage seed at once.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (default "out").
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-criteria dataset.
    Synth(SynthArgs),
    /// Assign subject splits and draw train/val/test pair sets.
    SamplePairs(SamplePairsArgs),
    /// Train a comparison model on pair files.
    Train(TrainArgs),
    /// Evaluate a checkpoint: pairwise accuracy, nDCG, optional m-IoU.
    Eval(EvalArgs),
    /// Build the comparison matrix and reconstruct rank lists.
    Rank(RankArgs),
    /// Attribute one pair's decision and aggregate its heatmaps.
    Explain(ExplainArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    subjects: Option<usize>,
    #[arg(long)]
    items_per_subject: Option<usize>,
    /// Number of latent severity criteria.
    #[arg(long)]
    criteria: Option<usize>,
    #[arg(long)]
    feature_dim: Option<usize>,
    /// Observation noise standard deviation.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, value_enum)]
    label_rule: Option<LabelRuleArg>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum LabelRuleArg {
    WeightedSum,
    Majority,
}

#[derive(Args)]
struct SamplePairsArgs {
    /// Item file (line-delimited JSON).
    #[arg(long)]
    items: PathBuf,
    /// Criteria file; when given, labels come from the majority vote.
    #[arg(long)]
    criteria_file: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Training pair budget.
    #[arg(long)]
    budget: Option<usize>,
    /// Validation/test pair budget.
    #[arg(long)]
    eval_budget: Option<usize>,
    #[arg(long)]
    threshold_factor: Option<f64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Longitudinal,
    CrossSectional,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    items: PathBuf,
    #[arg(long)]
    train_pairs: PathBuf,
    #[arg(long)]
    val_pairs: PathBuf,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Number of hidden comparison channels.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, value_enum)]
    optimizer: Option<OptimizerArg>,
    #[arg(long)]
    weight_decay: Option<f64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum VariantArg {
    Baseline,
    NHidden,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    items: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    /// Per-item heatmap files, needed for m-IoU.
    #[arg(long)]
    heatmaps: Option<PathBuf>,
    /// Ground-truth mask files, needed for m-IoU.
    #[arg(long)]
    masks: Option<PathBuf>,
    #[arg(long, value_enum)]
    gain: Option<GainArg>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum GainArg {
    Linear,
    Exponential,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    items: PathBuf,
    /// One rank list per subject instead of a global list.
    #[arg(long)]
    per_subject: bool,
    /// Binarize comparison probabilities before the fit.
    #[arg(long)]
    binarize: bool,
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    items: PathBuf,
    /// Pair as "left_id,right_id".
    #[arg(long)]
    pair: String,
    #[arg(long)]
    heatmaps: PathBuf,
    #[arg(long)]
    masks: Option<PathBuf>,
    /// How many channels to aggregate.
    #[arg(short = 'k', long)]
    k: Option<usize>,
    /// Select channels by |phi| instead of signed value.
    #[arg(long)]
    r#abs: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; anything else is a
            // usage error.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> sevrank::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.apply_seed(seed);
    }
    let out_dir = cli
        .out
        .or_else(|| cfg.paths.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    match cli.command {
        Command::Synth(args) => {
            apply_synth_args(&mut cfg, &args);
            let outputs = pipeline::run_synth(&cfg, &out_dir)?;
            println!("wrote {}", outputs.items.display());
            println!("wrote {}", outputs.criteria.display());
        }
        Command::SamplePairs(args) => {
            apply_sample_args(&mut cfg, &args);
            let outputs =
                pipeline::run_sample_pairs(&cfg, &args.items, args.criteria_file.as_deref(), &out_dir)?;
            println!("wrote {}", outputs.train.display());
            println!("wrote {}", outputs.val.display());
            println!("wrote {}", outputs.test.display());
        }
        Command::Train(args) => {
            apply_train_args(&mut cfg, &args);
            let (outputs, history) = pipeline::run_train(
                &cfg,
                &args.items,
                &args.train_pairs,
                &args.val_pairs,
                &out_dir,
            )?;
            println!(
                "best validation accuracy {:.4} at epoch {}",
                history.best_val_accuracy, history.best_epoch
            );
            println!("wrote {}", outputs.model.display());
        }
        Command::Eval(args) => {
            if let Some(gain) = args.gain {
                cfg.eval.gain = match gain {
                    GainArg::Linear => GainKind::Linear,
                    GainArg::Exponential => GainKind::Exponential,
                };
            }
            let (report, path) = pipeline::run_eval(
                &cfg,
                &args.model,
                &args.items,
                &args.pairs,
                args.heatmaps.as_deref(),
                args.masks.as_deref(),
                &out_dir,
            )?;
            print!("{}", report.table());
            println!("wrote {}", path.display());
        }
        Command::Rank(args) => {
            cfg.rank.binarize = cfg.rank.binarize || args.binarize;
            let outputs =
                pipeline::run_rank(&cfg, &args.model, &args.items, args.per_subject, &out_dir)?;
            match outputs {
                pipeline::RankOutputs::Global { ranklist, list, .. } => {
                    println!("least to most severe: {}", list.ids.join(" < "));
                    println!("wrote {}", ranklist.display());
                }
                pipeline::RankOutputs::PerSubject { ranklists, lists } => {
                    println!("ranked {} subjects", lists.len());
                    println!("wrote {}", ranklists.display());
                }
            }
        }
        Command::Explain(args) => {
            if let Some(k) = args.k {
                cfg.explain.k = k;
            }
            cfg.explain.use_absolute = cfg.explain.use_absolute || args.r#abs;
            let (left, right) = parse_pair(&args.pair)?;
            let (report, outputs) = pipeline::run_explain(
                &cfg,
                &args.model,
                &args.items,
                &left,
                &right,
                &args.heatmaps,
                args.masks.as_deref(),
                &out_dir,
            )?;
            println!("shapley: {:?}", report.shapley);
            println!("top-{}: {:?}", cfg.explain.k, report.top_k);
            if let (Some(l), Some(r)) = (report.iou_left, report.iou_right) {
                println!("IoU left {l:.4}, right {r:.4}");
            }
            println!("wrote {}", outputs.report.display());
        }
    }
    Ok(())
}

fn parse_pair(spec: &str) -> sevrank::Result<(String, String)> {
    let mut parts = spec.splitn(2, ',');
    match (parts.next(), parts.next()) {
        (Some(l), Some(r)) if !l.is_empty() && !r.is_empty() => {
            Ok((l.trim().to_string(), r.trim().to_string()))
        }
        _ => Err(sevrank::Error::InvalidConfig(format!(
            "--pair expects \"left_id,right_id\", got {spec:?}"
        ))),
    }
}

fn apply_synth_args(cfg: &mut RunConfig, args: &SynthArgs) {
    if let Some(v) = args.subjects {
        cfg.synth.subjects = v;
    }
    if let Some(v) = args.items_per_subject {
        cfg.synth.items_per_subject = v;
    }
    if let Some(v) = args.criteria {
        cfg.synth.criteria = v;
    }
    if let Some(v) = args.feature_dim {
        cfg.synth.feature_dim = v;
    }
    if let Some(v) = args.noise {
        cfg.synth.noise = v;
    }
    if let Some(v) = args.label_rule {
        cfg.synth.label_rule = match v {
            LabelRuleArg::WeightedSum => LabelRule::WeightedSum,
            LabelRuleArg::Majority => LabelRule::Majority,
        };
    }
}

fn apply_sample_args(cfg: &mut RunConfig, args: &SamplePairsArgs) {
    if let Some(v) = args.mode {
        cfg.sampling.mode = match v {
            ModeArg::Longitudinal => SamplingMode::Longitudinal,
            ModeArg::CrossSectional => SamplingMode::CrossSectional,
        };
    }
    if let Some(v) = args.budget {
        cfg.sampling.pair_budget_train = v;
    }
    if let Some(v) = args.eval_budget {
        cfg.sampling.pair_budget_eval = v;
    }
    if let Some(v) = args.threshold_factor {
        cfg.sampling.threshold_factor = v;
    }
}

fn apply_train_args(cfg: &mut RunConfig, args: &TrainArgs) {
    if let Some(v) = args.variant {
        cfg.model.variant = match v {
            VariantArg::Baseline => Variant::Baseline,
            VariantArg::NHidden => Variant::NHidden,
        };
    }
    if let Some(v) = args.n {
        cfg.model.n = v;
    }
    if let Some(v) = args.hidden_dim {
        cfg.model.hidden_dim = v;
    }
    if let Some(v) = args.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = args.learning_rate {
        cfg.train.learning_rate = v;
    }
    if let Some(v) = args.batch_size {
        cfg.train.batch_size = v;
    }
    if let Some(v) = args.optimizer {
        cfg.train.optimizer = match v {
            OptimizerArg::Sgd => OptimizerKind::Sgd,
            OptimizerArg::Adam => OptimizerKind::Adam,
        };
    }
    if let Some(v) = args.weight_decay {
        cfg.train.weight_decay = v;
    }
}

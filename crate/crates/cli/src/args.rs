use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cyclegzsl::training::{Profile, Variant};

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: cyclegzsl::Error| e.to_string())
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse().map_err(|e: cyclegzsl::Error| e.to_string())
}

/// Cycle-consistent feature generation for generalized zero-shot learning.
///
/// Logs go to standard error (filter with RUST_LOG); machine-readable results are
/// written to files only.
#[derive(Debug, Parser)]
#[command(name = "cyclegzsl", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic GZSL dataset directory.
    GenSynthetic(GenSyntheticArgs),
    /// Pretrain the required models and train a feature generator.
    Train(TrainArgs),
    /// Synthesize features, fit the final classifier and evaluate a trained run.
    Eval(EvalArgs),
    /// Compare evaluated runs in one table, with per-variant means over seeds.
    Report(ReportArgs),
    /// Print a summary of a dataset directory, run directory or checkpoint file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct GenSyntheticArgs {
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset name stored in the manifest.
    #[arg(long, default_value = "synthetic")]
    pub name: String,
    /// Total number of classes C.
    #[arg(long, default_value_t = 15)]
    pub classes: usize,
    /// Number of unseen classes (a proper subset of the classes).
    #[arg(long, default_value_t = 5)]
    pub unseen: usize,
    /// Visual feature width K.
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    /// Semantic feature width L.
    #[arg(long, default_value_t = 8)]
    pub l: usize,
    /// Training samples per seen class.
    #[arg(long, default_value_t = 200)]
    pub train_per_class: usize,
    /// Test samples per class.
    #[arg(long, default_value_t = 50)]
    pub test_per_class: usize,
    /// Standard deviation of the per-sample visual noise.
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    /// Binary {0,1} attributes instead of continuous ones.
    #[arg(long)]
    pub binary: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Run directory to create.
    #[arg(long)]
    pub out: PathBuf,
    /// baseline, cycle-wgan, cycle-uwgan or cycle-clswgan.
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<Variant>,
    /// Hyperparameter profile: cub, flo, sun, awa or imagenet.
    #[arg(long, value_parser = parse_profile)]
    pub profile: Option<Profile>,
    /// JSON config file; overrides the profile, overridden by flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Generator/critic epochs.
    #[arg(long)]
    pub epochs_gan: Option<usize>,
    /// Regressor pretraining epochs.
    #[arg(long)]
    pub epochs_regressor: Option<usize>,
    /// Softmax classifier epochs (seen-class and final classifier).
    #[arg(long)]
    pub epochs_classifier: Option<usize>,
    #[arg(long)]
    pub lr_generator: Option<f64>,
    #[arg(long)]
    pub lr_critic: Option<f64>,
    #[arg(long)]
    pub batch_gan: Option<usize>,
    /// Hidden width of generator and critic.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Cycle-consistency weight λ₁.
    #[arg(long)]
    pub lambda_cycle: Option<f64>,
    /// Classification weight λ₂ of cycle-clswgan.
    #[arg(long)]
    pub lambda_cls: Option<f64>,
    /// Classification weight β of the baseline.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Fine-tune cycle-uwgan from this completed cycle-wgan run directory.
    #[arg(long)]
    pub init_from: Option<PathBuf>,
    /// Train cycle-uwgan from scratch with the unseen cycle term.
    #[arg(long)]
    pub from_scratch_unseen: bool,
    /// Record per-epoch wall time in the metrics file (makes it non-reproducible).
    #[arg(long)]
    pub wall_clock: bool,
    /// Overwrite a non-empty run directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Zsl,
    Gzsl,
    Both,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Run directory produced by `train`.
    pub run: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    /// Synthesized features per class (defaults to the run's setting, 300).
    #[arg(long)]
    pub per_class_count: Option<usize>,
    /// Dataset directory, if it moved since training.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Evaluated run directories.
    pub runs: Vec<PathBuf>,
    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Dataset directory, run directory or checkpoint file.
    pub path: PathBuf,
}

//! `retarget2d`: dataset generation, training, retargeting, interpolation,
//! evaluation and motion retrieval from the command line.
//!
//! Exit codes: 0 success, 2 usage, 3 data error, 4 numeric divergence.

mod commands;
mod layer;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use layer::ConfigFile;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(retarget2d::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(e) if e.is_divergence() => 4,
            CliError::Data(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<retarget2d::Error> for CliError {
    fn from(e: retarget2d::Error) -> Self {
        CliError::Data(e)
    }
}

#[derive(Parser)]
#[command(name = "retarget2d", version, about = "2D motion retargeting and retrieval with disentangled latent codes")]
struct Cli {
    /// JSON file with one object of option values per subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic motion x skeleton x view dataset.
    GenData(GenDataArgs),
    /// Train a model on a generated dataset.
    Train(TrainArgs),
    /// Put the motion of one pose file on the skeleton and view of another.
    Retarget(RetargetArgs),
    /// Interpolate one latent code between two pose files.
    Interpolate(InterpolateArgs),
    /// Write the retargeting error table for a dataset.
    Evaluate(EvaluateArgs),
    /// Encode pose files into a motion index.
    Index(IndexArgs),
    /// Search a motion index with a query pose file.
    Retrieve(RetrieveArgs),
    /// Dump latent codes of dataset windows as CSV.
    ExportLatents(ExportLatentsArgs),
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenDataArgs {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dataset spec JSON used as the base for the options below.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub motions: Option<usize>,
    #[arg(long)]
    pub skeletons: Option<usize>,
    #[arg(long)]
    pub views: Option<usize>,
    /// Frames per generated sequence.
    #[arg(long)]
    pub frames: Option<usize>,
    /// 15 or 17.
    #[arg(long)]
    pub joints: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TrainArgs {
    /// Dataset directory written by `gen-data`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Run directory for checkpoints and metrics.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Continue from `last.ckpt` in the run directory.
    #[arg(long)]
    pub resume: bool,
    /// Training config JSON used as the base for the options below.
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    /// Inline training config, settable only from the config file.
    #[arg(skip)]
    pub trainer: Option<serde_json::Value>,
    /// full, cross-only, rec-triplet or no-foot.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub flip_prob: Option<f64>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Synthetic unlabelled clips to generate.
    #[arg(long)]
    pub unlabeled_clips: Option<usize>,
    /// Directory of pose JSON files used as extra unlabelled clips.
    #[arg(long)]
    pub unlabeled_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RetargetArgs {
    /// Pose file providing the motion.
    #[arg(long)]
    pub motion: Option<PathBuf>,
    /// Pose file providing the skeleton, the view and the start position.
    #[arg(long)]
    pub statics: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Output pose file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct InterpolateArgs {
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// motion, skeleton or view.
    #[arg(long)]
    pub space: Option<String>,
    /// Number of outputs including both ends (at least 2).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Output directory for `step_NNN.json` files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Full model.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Model trained without triplet and foot terms.
    #[arg(long)]
    pub cross_only: Option<PathBuf>,
    /// Model trained without cross reconstruction.
    #[arg(long)]
    pub rec_triplet: Option<PathBuf>,
    /// Directory for `report.md` and `report.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct IndexArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Index file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Add to the existing index at `--out` instead of starting empty.
    #[arg(long)]
    pub append: bool,
    /// Pose files; each file stem becomes the video id.
    #[arg(num_args = 0..)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RetrieveArgs {
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub query: Option<PathBuf>,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// JSON lines output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExportLatentsArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Directory for `motion.csv`, `skeleton.csv` and `view.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// train, val or all.
    #[arg(long)]
    pub split: Option<String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::empty(),
    };
    match cli.command {
        Command::GenData(a) => commands::gen_data(file.layer("gen-data", &a)?),
        Command::Train(a) => commands::train(file.layer("train", &a)?),
        Command::Retarget(a) => commands::retarget(file.layer("retarget", &a)?),
        Command::Interpolate(a) => commands::interpolate(file.layer("interpolate", &a)?),
        Command::Evaluate(a) => commands::evaluate(file.layer("evaluate", &a)?),
        Command::Index(a) => commands::index(file.layer("index", &a)?),
        Command::Retrieve(a) => commands::retrieve(file.layer("retrieve", &a)?),
        Command::ExportLatents(a) => commands::export_latents(file.layer("export-latents", &a)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

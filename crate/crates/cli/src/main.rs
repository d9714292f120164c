//! `glog`: G-LoG persistence features, MLP training and evaluation, and the
//! stability and decomposition harnesses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "glog", version, about = "G-LoG bi-parameter persistence features and classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// JSON file of defaults, keyed like the long flags (snake_case).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory receiving every output file [default: glog-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "GLOG_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct FeatureArgs {
    /// Gaussian smoothing width; 0 keeps raw intensities [default: 0.5].
    #[arg(long)]
    pub sigma_gauss: Option<f64>,
    /// Laplacian-of-Gaussian width [default: 1].
    #[arg(long)]
    pub sigma_log: Option<f64>,
    /// Slope-one lines in the fibered barcode [default: 50].
    #[arg(long)]
    pub num_lines: Option<usize>,
    /// Image kernel width in unit-box coordinates [default: 0.01].
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Exponent of the persistence weight [default: 2].
    #[arg(long)]
    pub weight_power: Option<f64>,
    /// Side of the square persistence image [default: 50].
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TrainArgs {
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute feature tables for every split of an NPZ dataset.
    Extract {
        /// MedMNIST-style archive with {split}_images / {split}_labels.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Train the classifier on train/val feature tables.
    Train {
        /// Directory holding the extracted features [default: the output dir].
        #[arg(long)]
        features: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Score a checkpoint on one split.
    Eval {
        /// Model file [default: <out>/model.glm].
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        /// Split to score [default: test].
        #[arg(long)]
        split: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Check the stability bound on random input pairs.
    Stability {
        #[arg(long)]
        trials: Option<usize>,
        /// Grid shape, comma separated [default: 8,8].
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long)]
        sigma_gauss: Option<f64>,
        #[arg(long)]
        sigma_log: Option<f64>,
        /// Half-width of the perturbation [default: 0.1].
        #[arg(long)]
        noise_eps: Option<f64>,
        #[arg(long)]
        num_lines: Option<usize>,
        /// Scale applied to the certified bound (negative control).
        #[arg(long, hide = true, default_value_t = 1.0)]
        debug_bound_scale: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Check the direct-sum decomposition for separated supports.
    DecompositionDemo {
        #[command(flatten)]
        common: Common,
    },
    /// Write a synthetic disk/annulus dataset as NPZ.
    Synth {
        /// Train, val and test sizes [default: 240,80,80].
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract {
            dataset,
            features,
            common,
        } => commands::extract(dataset, features, common),
        Command::Train {
            features,
            train,
            common,
        } => commands::train(features, train, common),
        Command::Eval {
            checkpoint,
            features,
            split,
            common,
        } => commands::eval(checkpoint, features, split, common),
        Command::Stability {
            trials,
            dims,
            sigma_gauss,
            sigma_log,
            noise_eps,
            num_lines,
            debug_bound_scale,
            common,
        } => commands::stability(
            commands::StabilityArgs {
                trials,
                dims,
                sigma_gauss,
                sigma_log,
                noise_eps,
                num_lines,
                bound_scale: debug_bound_scale,
            },
            common,
        ),
        Command::DecompositionDemo { common } => commands::decomposition(common),
        Command::Synth { sizes, common } => commands::synth(sizes, common),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

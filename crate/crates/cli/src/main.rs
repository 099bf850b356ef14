//! `oxmc`: train, refine, predict and evaluate extreme multi-label models.
//!
//! Exit status is 0 on success, 1 on runtime errors and 2 on bad flags.
//! `OXMC_THREADS` sets the worker-pool size and `OXMC_LOG` the log filter.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "oxmc", version, about = "Extreme multi-label classification with overlapping label clusters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct SolverArgs {
    /// Loss weight of the linear classifiers.
    #[arg(long = "c", default_value_t = 1.0)]
    reg_c: f64,
    /// Weights with magnitude at or below this are dropped after training.
    #[arg(long, default_value_t = 0.1)]
    threshold: f64,
    /// Solver stopping tolerance.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
}

#[derive(Args, Clone, Copy)]
struct TreeArgs {
    /// Children per internal node of the label tree.
    #[arg(long, default_value_t = 32)]
    branch: usize,
    /// Largest label set allowed in a leaf.
    #[arg(long, default_value_t = 100)]
    max_leaf: usize,
    /// Leaves kept per instance by beam search.
    #[arg(long, default_value_t = 10)]
    beam: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Easy,
    Medium,
    Hard,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dedup {
    Combined,
    RankerOnly,
}

#[derive(Subcommand)]
enum Command {
    /// Build the label tree and train the baseline matcher and ranker.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Model directory to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tree: TreeArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Reassign labels to overlapping clusters and retrain.
    Refine {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Maximum number of clusters per label.
        #[arg(long, default_value_t = 2)]
        lambda: usize,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        /// Use the capacity-constrained greedy assignment.
        #[arg(long, conflicts_with = "random_baseline")]
        rlap: bool,
        /// Labels per cluster for --rlap; defaults to ceil(1.5 L / K).
        #[arg(long, requires = "rlap")]
        xi: Option<usize>,
        /// Duplicate every label into one random extra cluster instead.
        #[arg(long)]
        random_baseline: bool,
        /// Keep the matcher and retrain only the ranker.
        #[arg(long)]
        clusters_only: bool,
        /// Output directory; defaults to `<model>-refined`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Write the top-k labels for every instance.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        topk: usize,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the beam stored in the model.
        #[arg(long)]
        beam: Option<usize>,
        #[arg(long, value_enum)]
        dedup: Option<Dedup>,
    },
    /// Report P@k and PSP@k for one or more prediction files.
    Eval {
        /// Prediction file; repeat to compare several models.
        #[arg(long, required = true)]
        pred: Vec<PathBuf>,
        /// Dataset holding the gold labels of the predicted instances.
        #[arg(long)]
        gold: PathBuf,
        /// Training dataset used for label propensities.
        #[arg(long)]
        train_gold: PathBuf,
        #[arg(long = "A", default_value_t = oxmc_core::eval::DEFAULT_A)]
        a: f64,
        #[arg(long = "B", default_value_t = oxmc_core::eval::DEFAULT_B)]
        b: f64,
        /// Print CSV instead of a table.
        #[arg(long)]
        csv: bool,
    },
    /// Merge groups of labels into synthetic multi-modal labels.
    Synth {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Hard)]
        mode: Mode,
        /// Labels per fused label (presets 2, 5, 10, 20).
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Coarse group width for medium mode, in multiples of k.
        #[arg(long, default_value_t = oxmc_core::synth::DEFAULT_GROUP_WIDTH)]
        group_width: usize,
        #[arg(long)]
        out: PathBuf,
        /// Mapping file; defaults to `<out>.mapping`.
        #[arg(long)]
        mapping: Option<PathBuf>,
    },
    /// Refine one baseline with lambda = 1..=max and report objective and P@k.
    SweepLambda {
        #[arg(long)]
        data: PathBuf,
        /// Held-out dataset for P@k.
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = 6)]
        lambda_max: usize,
        #[command(flatten)]
        tree: TreeArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

fn init_runtime() -> Result<(), String> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OXMC_LOG", "info"))
        .format_timestamp(None)
        .init();
    if let Ok(value) = std::env::var("OXMC_THREADS") {
        let threads: usize = value
            .parse()
            .map_err(|_| format!("OXMC_THREADS must be a number, got {value:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_runtime().and_then(|()| commands::run(cli.command).map_err(|e| e.to_string()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

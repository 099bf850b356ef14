use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use oxmc_core::dataio::{load_dataset, load_predictions, save_dataset, save_predictions};
use oxmc_core::eval::{compute_propensities, evaluate, format_csv, format_table, precision_at_k};
use oxmc_core::linear::SolverParams;
use oxmc_core::model::{DedupMode, XmcModel};
use oxmc_core::synth::{fuse_labels, mapping_to_text, FusionMode, FusionSpec};
use oxmc_core::train::{refine, train_baseline, AssignmentStrategy, RefineOptions, TrainConfig};
use oxmc_core::{Error, Result};

use crate::{Command, Dedup, Mode, SolverArgs, TreeArgs};

impl From<SolverArgs> for SolverParams {
    fn from(a: SolverArgs) -> Self {
        SolverParams {
            reg_c: a.reg_c,
            max_iter: a.max_iter,
            eps: a.eps,
            weight_threshold: a.threshold,
        }
    }
}

fn train_config(tree: TreeArgs, solver: SolverArgs) -> TrainConfig {
    TrainConfig {
        branching: tree.branch,
        max_leaf_size: tree.max_leaf,
        beam: tree.beam,
        seed: tree.seed,
        solver: solver.into(),
        ..TrainConfig::default()
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Train {
            data,
            out,
            tree,
            solver,
        } => {
            let data = load_dataset(&data)?;
            let model = train_baseline(&data, &train_config(tree, solver))?;
            model.save(&out)?;
            info!("model written to {}", out.display());
        }
        Command::Refine {
            model,
            data,
            lambda,
            rounds,
            rlap,
            xi,
            random_baseline,
            clusters_only,
            out,
            solver,
        } => {
            let out = out.unwrap_or_else(|| with_suffix(&model, "-refined"));
            let base = XmcModel::load(&model)?;
            let data = load_dataset(&data)?;
            let meta = base.meta();
            let cfg = TrainConfig {
                branching: meta.branching,
                max_leaf_size: meta.max_leaf_size,
                beam: meta.beam,
                seed: meta.seed,
                lambda,
                rounds,
                solver: solver.into(),
                ..TrainConfig::default()
            };
            let strategy = if rlap {
                AssignmentStrategy::Rlap { xi }
            } else if random_baseline {
                AssignmentStrategy::RandomDuplicate
            } else {
                AssignmentStrategy::Projection
            };
            let (refined, logs) = refine(
                &base,
                &data,
                &cfg,
                RefineOptions {
                    strategy,
                    clusters_only,
                },
            )?;
            for log in &logs {
                println!("{log}");
            }
            refined.save(&out)?;
            info!("model written to {}", out.display());
        }
        Command::Predict {
            model,
            data,
            topk,
            out,
            beam,
            dedup,
        } => {
            let mut model = XmcModel::load(&model)?;
            if let Some(b) = beam {
                model.set_beam(b);
            }
            if let Some(d) = dedup {
                model.set_dedup(match d {
                    Dedup::Combined => DedupMode::Combined,
                    Dedup::RankerOnly => DedupMode::RankerOnly,
                });
            }
            let data = load_dataset(&data)?;
            if data.n_features() > model.meta().n_features {
                return Err(Error::InvalidArgument(format!(
                    "dataset has {} features, model expects {}",
                    data.n_features(),
                    model.meta().n_features
                )));
            }
            let preds = model.predict_batch(&data.x, topk);
            save_predictions(&preds, &out)?;
            info!("{} predictions written to {}", preds.len(), out.display());
        }
        Command::Eval {
            pred,
            gold,
            train_gold,
            a,
            b,
            csv,
        } => {
            let gold = load_dataset(&gold)?;
            let train = load_dataset(&train_gold)?;
            if train.n_labels() != gold.n_labels() {
                return Err(Error::InvalidArgument(format!(
                    "training set has {} labels, gold set {}",
                    train.n_labels(),
                    gold.n_labels()
                )));
            }
            let prop = compute_propensities(&train.y, a, b)?;
            let mut rows = Vec::new();
            for path in &pred {
                let preds = load_predictions(path)?;
                let name = path
                    .file_stem()
                    .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
                rows.push(evaluate(&name, &preds, &gold.y, &prop)?);
            }
            print!("{}", if csv { format_csv(&rows) } else { format_table(&rows) });
        }
        Command::Synth {
            data,
            mode,
            k,
            seed,
            group_width,
            out,
            mapping,
        } => {
            let data = load_dataset(&data)?;
            let mode = match mode {
                Mode::Easy => FusionMode::Easy,
                Mode::Medium => FusionMode::Medium,
                Mode::Hard => FusionMode::Hard,
            };
            let spec = FusionSpec {
                group_width,
                ..FusionSpec::new(mode, k, seed)
            };
            let (fused, groups) = fuse_labels(&data, &spec)?;
            save_dataset(&fused, &out)?;
            let mapping = mapping.unwrap_or_else(|| with_suffix(&out, ".mapping"));
            fs::write(&mapping, mapping_to_text(&groups))?;
            info!(
                "{} labels fused into {}; mapping in {}",
                data.n_labels(),
                fused.n_labels(),
                mapping.display()
            );
        }
        Command::SweepLambda {
            data,
            test,
            lambda_max,
            tree,
            solver,
        } => {
            let train = load_dataset(&data)?;
            let test = load_dataset(&test)?;
            let cfg = train_config(tree, solver);
            let base = train_baseline(&train, &cfg)?;
            let p_at = |m: &XmcModel| -> Result<[f64; 3]> {
                let preds = m.predict_batch(&test.x, 5);
                Ok([
                    precision_at_k(&preds, &test.y, 1)?,
                    precision_at_k(&preds, &test.y, 3)?,
                    precision_at_k(&preds, &test.y, 5)?,
                ])
            };
            println!("{:>6} {:>10} {:>10} {:>7} {:>7} {:>7}", "lambda", "relaxed", "binary", "P@1", "P@3", "P@5");
            let p = p_at(&base)?;
            println!(
                "{:>6} {:>10} {:>10} {:>7.2} {:>7.2} {:>7.2}",
                "base",
                "-",
                "-",
                p[0] * 100.0,
                p[1] * 100.0,
                p[2] * 100.0
            );
            for lambda in 1..=lambda_max {
                let cfg = TrainConfig { lambda, ..cfg };
                let (model, logs) = refine(&base, &train, &cfg, RefineOptions::default())?;
                let last = logs.last().expect("one round");
                let p = p_at(&model)?;
                println!(
                    "{:>6} {:>10} {:>10} {:>7.2} {:>7.2} {:>7.2}",
                    lambda,
                    last.relaxed,
                    last.binary,
                    p[0] * 100.0,
                    p[1] * 100.0,
                    p[2] * 100.0
                );
            }
        }
    }
    Ok(())
}

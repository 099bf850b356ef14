//! Baseline training and the alternating cluster-refinement loop.
//!
//! Baseline: label embeddings → balanced k-means tree → matcher and ranker.
//! Refinement, per round: route the training set through the current matcher
//! (`M`), re-assign labels to clusters from `YᵀM`, rewrite the leaf label sets
//! (tree topology never changes), then retrain the matcher from scratch and
//! retrain the ranker with one weight vector per (label, cluster) incidence.
//!
//! Negatives follow teacher forcing: a child classifier sees the instances
//! that are positive at its parent, and a ranker vector for `(l, j)` sees the
//! instances that carry some label of cluster `j`.

use std::fmt;
use std::time::Instant;

use log::info;
use rayon::prelude::*;

use crate::cluster::{build_tree, pifa_embeddings, LabelTree};
use crate::dataio::Dataset;
use crate::error::{invalid, Result};
use crate::linear::{train_ovr, SolverParams, TrainProblem, WeightVector};
use crate::matrices::CsrMatrix;
use crate::model::{DedupMode, LabelRanker, ModelMeta, XmcModel};
use crate::overlap::{
    default_capacity, objective_binary, objective_relaxed, project_assignment, random_duplicate,
    solve_rlap_greedy, ClusterAssignment, DEFAULT_LAMBDA,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NegativeSampling {
    /// Teacher-forcing negatives.
    #[default]
    Tfn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub branching: usize,
    pub max_leaf_size: usize,
    pub beam: usize,
    pub lambda: usize,
    pub rounds: usize,
    pub solver: SolverParams,
    pub seed: u64,
    pub neg_sampling: NegativeSampling,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            branching: 32,
            max_leaf_size: 100,
            beam: 10,
            lambda: DEFAULT_LAMBDA,
            rounds: 1,
            solver: SolverParams::default(),
            seed: 0,
            neg_sampling: NegativeSampling::Tfn,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.lambda == 0 {
            return Err(invalid("lambda must be at least 1"));
        }
        if self.beam == 0 {
            return Err(invalid("beam must be at least 1"));
        }
        Ok(())
    }
}

/// How the refinement step picks the new assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssignmentStrategy {
    /// Row-wise top-λ projection of `YᵀM`.
    #[default]
    Projection,
    /// Greedy capacity-constrained variant; `None` uses `ceil(1.5·L/K)`.
    Rlap { xi: Option<usize> },
    /// Random duplication baseline (λ = 2).
    RandomDuplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RefineOptions {
    pub strategy: AssignmentStrategy,
    /// Keep the matcher frozen and only retrain the ranker.
    pub clusters_only: bool,
}

/// Training-set statistics for one refinement round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    pub round: usize,
    /// `Tr(YᵀMCᵀ)` for the assignment in force before the update.
    pub relaxed_before: u64,
    pub relaxed: u64,
    pub binary: u64,
    pub duplicated_labels: usize,
    pub seconds: f64,
}

impl fmt::Display for RoundLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "round {} relaxed {} binary {} seconds {:.3}",
            self.round, self.relaxed, self.binary, self.seconds
        )
    }
}

fn difference(all: &[usize], remove: &[usize]) -> Vec<usize> {
    all.iter()
        .copied()
        .filter(|i| remove.binary_search(i).is_err())
        .collect()
}

fn union(lists: impl IntoIterator<Item = impl AsRef<[usize]>>) -> Vec<usize> {
    let mut out: Vec<usize> = lists.into_iter().flat_map(|l| l.as_ref().to_vec()).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Positive instance sets derived from the current leaf label sets.
struct Positives {
    by_label: Vec<Vec<usize>>,
    by_cluster: Vec<Vec<usize>>,
    by_node: Vec<Vec<usize>>,
}

impl Positives {
    fn new(y: &CsrMatrix, tree: &LabelTree) -> Self {
        let yt = y.transpose();
        let by_label: Vec<Vec<usize>> = (0..yt.rows()).map(|l| yt.row(l).indices.to_vec()).collect();
        let by_cluster: Vec<Vec<usize>> = (0..tree.n_leaves())
            .into_par_iter()
            .map(|c| union(tree.leaf_labels(c).iter().map(|&l| &by_label[l])))
            .collect();
        let mut by_node: Vec<Vec<usize>> = vec![Vec::new(); tree.n_nodes()];
        for id in (0..tree.n_nodes()).rev() {
            let node = tree.node(id);
            by_node[id] = match node.leaf {
                Some(c) => by_cluster[c].clone(),
                None => union(node.children.iter().map(|&ch| &by_node[ch])),
            };
        }
        Self {
            by_label,
            by_cluster,
            by_node,
        }
    }
}

fn fit(x: &CsrMatrix, positives: &[usize], negatives: &[usize], params: SolverParams) -> Result<WeightVector> {
    if positives.is_empty() {
        return Ok(WeightVector::empty(x.cols()));
    }
    train_ovr(&TrainProblem::new(x, positives, negatives).with_params(params))
}

fn train_matcher(
    x: &CsrMatrix,
    tree: &LabelTree,
    pos: &Positives,
    params: SolverParams,
) -> Result<Vec<Vec<WeightVector>>> {
    (0..tree.n_nodes())
        .into_par_iter()
        .map(|id| {
            let parent = &pos.by_node[id];
            tree.node(id)
                .children
                .iter()
                .map(|&child| {
                    let p = &pos.by_node[child];
                    fit(x, p, &difference(parent, p), params)
                })
                .collect()
        })
        .collect()
}

fn train_ranker(
    x: &CsrMatrix,
    tree: &LabelTree,
    pos: &Positives,
    params: SolverParams,
) -> Result<Vec<Vec<LabelRanker>>> {
    let jobs: Vec<(usize, usize)> = (0..tree.n_leaves())
        .flat_map(|c| tree.leaf_labels(c).iter().map(move |&l| (c, l)))
        .collect();
    let trained: Vec<(usize, LabelRanker)> = jobs
        .into_par_iter()
        .map(|(c, label)| {
            let p = &pos.by_label[label];
            let weights = fit(x, p, &difference(&pos.by_cluster[c], p), params)?;
            Ok((c, LabelRanker { label, weights }))
        })
        .collect::<Result<_>>()?;
    let mut ranker = vec![Vec::new(); tree.n_leaves()];
    for (c, r) in trained {
        ranker[c].push(r);
    }
    Ok(ranker)
}

/// Builds the label tree from PIFA embeddings and trains matcher and ranker.
pub fn train_baseline(data: &Dataset, cfg: &TrainConfig) -> Result<XmcModel> {
    cfg.validate()?;
    let start = Instant::now();
    let emb = pifa_embeddings(&data.x, &data.y)?;
    let tree = build_tree(&emb.embeddings, cfg.branching, cfg.max_leaf_size, cfg.seed)?;
    info!(
        "label tree: {} leaves, depth {}, {} labels without positives",
        tree.n_leaves(),
        tree.depth(),
        emb.empty.iter().filter(|&&e| e).count()
    );
    let assignment = ClusterAssignment::from_tree(&tree)?;
    let pos = Positives::new(&data.y, &tree);
    let matcher = train_matcher(&data.x, &tree, &pos, cfg.solver)?;
    let ranker = train_ranker(&data.x, &tree, &pos, cfg.solver)?;
    info!("baseline trained in {:.2}s", start.elapsed().as_secs_f64());
    Ok(XmcModel {
        meta: ModelMeta {
            n_features: data.n_features(),
            n_labels: data.n_labels(),
            branching: cfg.branching,
            max_leaf_size: cfg.max_leaf_size,
            beam: cfg.beam,
            seed: cfg.seed,
            dedup: DedupMode::Combined,
        },
        tree,
        assignment,
        matcher,
        ranker,
    })
}

/// Alternating update: new clusters from the current matcher, then retrain.
pub fn refine(
    model: &XmcModel,
    data: &Dataset,
    cfg: &TrainConfig,
    opts: RefineOptions,
) -> Result<(XmcModel, Vec<RoundLog>)> {
    cfg.validate()?;
    if data.n_labels() != model.meta.n_labels || data.n_features() != model.meta.n_features {
        return Err(invalid("dataset shape does not match the model"));
    }
    let mut model = model.clone();
    let fallback = model.assignment.clone();
    let mut logs = Vec::with_capacity(cfg.rounds);
    for round in 0..cfg.rounds {
        let start = Instant::now();
        let m = model.match_matrix(&data.x);
        let relaxed_before = objective_relaxed(&data.y, &m, model.assignment.matrix())?;
        let assignment = match opts.strategy {
            AssignmentStrategy::Projection => project_assignment(&data.y, &m, cfg.lambda, &fallback)?,
            AssignmentStrategy::Rlap { xi } => {
                let xi = xi.unwrap_or_else(|| default_capacity(data.n_labels(), model.n_clusters()));
                solve_rlap_greedy(&data.y, &m, cfg.lambda, xi, Some(&fallback))?
            }
            AssignmentStrategy::RandomDuplicate => {
                random_duplicate(&fallback, cfg.seed.wrapping_add(round as u64))?
            }
        };
        let relaxed = objective_relaxed(&data.y, &m, assignment.matrix())?;
        let binary = objective_binary(&data.y, &m, assignment.matrix())?;

        model.tree.set_leaf_labels(assignment.matrix())?;
        let pos = Positives::new(&data.y, &model.tree);
        if !opts.clusters_only {
            model.matcher = train_matcher(&data.x, &model.tree, &pos, cfg.solver)?;
        }
        model.ranker = train_ranker(&data.x, &model.tree, &pos, cfg.solver)?;
        let log = RoundLog {
            round,
            relaxed_before,
            relaxed,
            binary,
            duplicated_labels: assignment.n_duplicated(),
            seconds: start.elapsed().as_secs_f64(),
        };
        model.assignment = assignment;
        info!("{log}");
        logs.push(log);
    }
    Ok((model, logs))
}

/// [`refine`] with the matcher frozen.
pub fn refine_clusters_only(
    model: &XmcModel,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(XmcModel, Vec<RoundLog>)> {
    refine(
        model,
        data,
        cfg,
        RefineOptions {
            clusters_only: true,
            ..RefineOptions::default()
        },
    )
}

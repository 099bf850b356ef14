//! L2-regularized squared-hinge one-vs-rest classifier.
//!
//! Minimizes `½‖w‖² + C·Σ max(0, 1 − y·xᵀw)²` over the given positive and
//! negative instances by dual coordinate descent. There is no bias term.
//! After convergence, weights with `|w_j| ≤ weight_threshold` are dropped.
//!
//! Duplicating every instance is the same problem as doubling `C`: the loss
//! sum simply counts each term twice.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::matrices::{CsrMatrix, RowView};

const SHUFFLE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub reg_c: f64,
    pub max_iter: usize,
    /// Stop once the largest projected-gradient magnitude in an epoch falls below this.
    pub eps: f64,
    pub weight_threshold: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            reg_c: 1.0,
            max_iter: 100,
            eps: 1e-3,
            weight_threshold: 0.1,
        }
    }
}

/// One binary problem over rows of a shared feature matrix.
#[derive(Debug, Clone, Copy)]
pub struct TrainProblem<'a> {
    pub x: &'a CsrMatrix,
    pub positives: &'a [usize],
    pub negatives: &'a [usize],
    pub params: SolverParams,
}

impl<'a> TrainProblem<'a> {
    pub fn new(x: &'a CsrMatrix, positives: &'a [usize], negatives: &'a [usize]) -> Self {
        Self {
            x,
            positives,
            negatives,
            params: SolverParams::default(),
        }
    }

    pub fn with_params(mut self, params: SolverParams) -> Self {
        self.params = params;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.positives.is_empty() {
            return Err(invalid("training problem has no positive instances"));
        }
        if self.params.reg_c.is_nan() || self.params.reg_c <= 0.0 {
            return Err(invalid("reg_c must be positive"));
        }
        let n = self.x.rows();
        if self.positives.iter().chain(self.negatives).any(|&i| i >= n) {
            return Err(invalid("instance id out of range"));
        }
        let mut pos = self.positives.to_vec();
        pos.sort_unstable();
        if self.negatives.iter().any(|i| pos.binary_search(i).is_ok()) {
            return Err(invalid("positive and negative sets overlap"));
        }
        Ok(())
    }

    /// `(instance, ±1)` pairs, positives first.
    fn labeled(&self) -> Vec<(usize, f64)> {
        self.positives
            .iter()
            .map(|&i| (i, 1.0))
            .chain(self.negatives.iter().map(|&i| (i, -1.0)))
            .collect()
    }
}

/// Sparse weight vector; every stored `|value|` exceeds the pruning threshold.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightVector {
    pub dim: usize,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl WeightVector {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            indices: vec![],
            values: vec![],
        }
    }

    pub fn from_dense(w: &[f64], threshold: f64) -> Self {
        let (indices, values) = w
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > threshold)
            .map(|(j, &v)| (j, v))
            .unzip();
        Self {
            dim: w.len(),
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn view(&self) -> RowView<'_> {
        RowView::new(&self.indices, &self.values)
    }
}

/// Margin `xᵀw`.
pub fn score(w: &WeightVector, x: RowView<'_>) -> f64 {
    w.view().dot(x)
}

pub fn sigmoid(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

/// Primal objective at a dense `w`.
pub fn primal_objective(problem: &TrainProblem<'_>, w: &[f64]) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = problem
        .labeled()
        .iter()
        .map(|&(i, y)| {
            let slack = (1.0 - y * problem.x.row(i).dot_dense(w)).max(0.0);
            slack * slack
        })
        .sum();
    reg + problem.params.reg_c * loss
}

/// Runs dual coordinate descent and returns the dense, unpruned solution.
pub fn solve_dense(problem: &TrainProblem<'_>) -> Result<Vec<f64>> {
    problem.validate()?;
    let params = problem.params;
    let inst = problem.labeled();
    let diag = 0.5 / params.reg_c;
    let qd: Vec<f64> = inst
        .iter()
        .map(|&(i, _)| problem.x.row(i).squared_norm() + diag)
        .collect();
    let mut alpha = vec![0.0; inst.len()];
    let mut w = vec![0.0; problem.x.cols()];
    let mut order: Vec<usize> = (0..inst.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SHUFFLE_SEED);
    for _ in 0..params.max_iter {
        order.shuffle(&mut rng);
        let mut max_pg: f64 = 0.0;
        for &k in &order {
            let (i, y) = inst[k];
            let row = problem.x.row(i);
            let g = y * row.dot_dense(&w) - 1.0 + diag * alpha[k];
            let pg = if alpha[k] == 0.0 { g.min(0.0) } else { g };
            max_pg = max_pg.max(pg.abs());
            if pg != 0.0 {
                let new = (alpha[k] - g / qd[k]).max(0.0);
                let delta = (new - alpha[k]) * y;
                alpha[k] = new;
                for (j, v) in row.iter() {
                    w[j] += delta * v;
                }
            }
        }
        if max_pg < params.eps {
            break;
        }
    }
    Ok(w)
}

/// Trains one OVR weight vector and prunes it.
pub fn train_ovr(problem: &TrainProblem<'_>) -> Result<WeightVector> {
    let w = solve_dense(problem)?;
    Ok(WeightVector::from_dense(&w, problem.params.weight_threshold))
}

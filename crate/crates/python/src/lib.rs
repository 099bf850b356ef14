//! Python bindings: datasets, training, prediction and metrics.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use oxmc_core::dataio::{self, Prediction};
use oxmc_core::eval;
use oxmc_core::linear::SolverParams;
use oxmc_core::matrices::CsrMatrix;
use oxmc_core::overlap::{self, ClusterAssignment, Provenance};
use oxmc_core::synth::{make_topic_corpus, TopicCorpusSpec};
use oxmc_core::train::{self, AssignmentStrategy, RefineOptions, TrainConfig};
use oxmc_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::MissingFile(_) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn patterns(cols: usize, rows: Vec<Vec<usize>>) -> PyResult<CsrMatrix> {
    let rows: Vec<Vec<usize>> = rows
        .into_iter()
        .map(|mut r| {
            r.sort_unstable();
            r.dedup();
            r
        })
        .collect();
    CsrMatrix::from_patterns(cols, rows).map_err(to_py)
}

fn ranked(preds: Vec<Vec<usize>>) -> Vec<Prediction> {
    preds
        .into_iter()
        .enumerate()
        .map(|(i, labels)| {
            let n = labels.len();
            Prediction::new(i, labels.into_iter().enumerate().map(|(r, l)| (l, (n - r) as f64)).collect())
        })
        .collect()
}

#[pyclass(name = "Dataset", module = "oxmc", frozen)]
struct PyDataset(dataio::Dataset);

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        dataio::load_dataset(path).map(PyDataset).map_err(to_py)
    }

    /// Synthetic (train, test) topic corpus.
    #[staticmethod]
    #[pyo3(signature = (n_train, n_test, n_labels, n_features, n_topics, seed=0))]
    fn topic_corpus(
        n_train: usize,
        n_test: usize,
        n_labels: usize,
        n_features: usize,
        n_topics: usize,
        seed: u64,
    ) -> PyResult<(Self, Self)> {
        let spec = TopicCorpusSpec {
            n_train,
            n_test,
            n_labels,
            n_features,
            n_topics,
            ..TopicCorpusSpec::default()
        };
        let (a, b) = make_topic_corpus(&spec, seed).map_err(to_py)?;
        Ok((PyDataset(a), PyDataset(b)))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        dataio::save_dataset(&self.0, path).map_err(to_py)
    }

    #[getter]
    fn n_instances(&self) -> usize {
        self.0.n_instances()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.0.n_features()
    }

    #[getter]
    fn n_labels(&self) -> usize {
        self.0.n_labels()
    }

    /// Gold label ids of every instance.
    fn labels(&self) -> Vec<Vec<usize>> {
        (0..self.0.n_instances()).map(|i| self.0.y.row(i).indices.to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n_instances={}, n_features={}, n_labels={})",
            self.0.n_instances(),
            self.0.n_features(),
            self.0.n_labels()
        )
    }
}

#[pyclass(name = "Model", module = "oxmc", frozen)]
struct PyModel(oxmc_core::XmcModel);

fn config(branching: usize, max_leaf: usize, beam: usize, seed: u64, c: f64, threshold: f64) -> TrainConfig {
    TrainConfig {
        branching,
        max_leaf_size: max_leaf,
        beam,
        seed,
        solver: SolverParams {
            reg_c: c,
            weight_threshold: threshold,
            ..SolverParams::default()
        },
        ..TrainConfig::default()
    }
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (data, branching=32, max_leaf=100, beam=10, seed=0, c=1.0, threshold=0.1))]
    fn train(
        py: Python<'_>,
        data: &PyDataset,
        branching: usize,
        max_leaf: usize,
        beam: usize,
        seed: u64,
        c: f64,
        threshold: f64,
    ) -> PyResult<Self> {
        let cfg = config(branching, max_leaf, beam, seed, c, threshold);
        py.detach(|| train::train_baseline(&data.0, &cfg))
            .map(PyModel)
            .map_err(to_py)
    }

    /// Returns the refined model and one `(relaxed, binary)` pair per round.
    #[pyo3(signature = (data, lambda_=2, rounds=1, strategy="projection", clusters_only=false, c=1.0, threshold=0.1))]
    #[allow(clippy::too_many_arguments)]
    fn refine(
        &self,
        py: Python<'_>,
        data: &PyDataset,
        lambda_: usize,
        rounds: usize,
        strategy: &str,
        clusters_only: bool,
        c: f64,
        threshold: f64,
    ) -> PyResult<(Self, Vec<(u64, u64)>)> {
        let strategy = match strategy {
            "projection" => AssignmentStrategy::Projection,
            "rlap" => AssignmentStrategy::Rlap { xi: None },
            "random" => AssignmentStrategy::RandomDuplicate,
            other => return Err(PyValueError::new_err(format!("unknown strategy {other:?}"))),
        };
        let meta = self.0.meta();
        let cfg = TrainConfig {
            lambda: lambda_,
            rounds,
            ..config(meta.branching, meta.max_leaf_size, meta.beam, meta.seed, c, threshold)
        };
        let opts = RefineOptions { strategy, clusters_only };
        let (model, logs) = py
            .detach(|| train::refine(&self.0, &data.0, &cfg, opts))
            .map_err(to_py)?;
        Ok((PyModel(model), logs.iter().map(|l| (l.relaxed, l.binary)).collect()))
    }

    /// Top-k `(label, score)` lists, one per instance.
    #[pyo3(signature = (data, k=5))]
    fn predict(&self, py: Python<'_>, data: &PyDataset, k: usize) -> Vec<Vec<(usize, f64)>> {
        py.detach(|| self.0.predict_batch(&data.0.x, k))
            .into_iter()
            .map(|p| p.labels)
            .collect()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.0.save(path).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        oxmc_core::XmcModel::load(path).map(PyModel).map_err(to_py)
    }

    #[getter]
    fn n_clusters(&self) -> usize {
        self.0.n_clusters()
    }

    #[getter]
    fn lambda_(&self) -> usize {
        self.0.lambda()
    }

    /// Cluster ids holding `label`.
    fn clusters_of(&self, label: usize) -> PyResult<Vec<usize>> {
        if label >= self.0.meta().n_labels {
            return Err(PyValueError::new_err("label out of range"));
        }
        Ok(self.0.assignment().clusters_of(label).to_vec())
    }
}

/// Top-λ projection of `YᵀM`. `y` and `m` give label and matched-cluster ids
/// per instance; `fallback` gives each label's cluster for labels without
/// matches. Returns the cluster list of every label.
#[pyfunction]
fn project_assignment(
    y: Vec<Vec<usize>>,
    m: Vec<Vec<usize>>,
    n_labels: usize,
    n_clusters: usize,
    lambda_: usize,
    fallback: Vec<usize>,
) -> PyResult<Vec<Vec<usize>>> {
    if fallback.len() != n_labels {
        return Err(PyValueError::new_err("fallback needs one cluster per label"));
    }
    let y = patterns(n_labels, y)?;
    let m = patterns(n_clusters, m)?;
    let fb = patterns(n_clusters, fallback.into_iter().map(|c| vec![c]).collect())?;
    let fb = ClusterAssignment::new(fb, 1, Provenance::InitialKmeans).map_err(to_py)?;
    let c = overlap::project_assignment(&y, &m, lambda_, &fb).map_err(to_py)?;
    Ok((0..n_labels).map(|l| c.clusters_of(l).to_vec()).collect())
}

/// P@k of ranked label lists against gold label lists.
#[pyfunction]
fn precision_at_k(preds: Vec<Vec<usize>>, gold: Vec<Vec<usize>>, n_labels: usize, k: usize) -> PyResult<f64> {
    let y = patterns(n_labels, gold)?;
    eval::precision_at_k(&ranked(preds), &y, k).map_err(to_py)
}

/// PSP@k with propensities estimated from `train_gold`.
#[pyfunction]
#[pyo3(signature = (preds, gold, train_gold, n_labels, k, a=eval::DEFAULT_A, b=eval::DEFAULT_B))]
fn psp_at_k(
    preds: Vec<Vec<usize>>,
    gold: Vec<Vec<usize>>,
    train_gold: Vec<Vec<usize>>,
    n_labels: usize,
    k: usize,
    a: f64,
    b: f64,
) -> PyResult<f64> {
    let y = patterns(n_labels, gold)?;
    let prop = eval::compute_propensities(&patterns(n_labels, train_gold)?, a, b).map_err(to_py)?;
    eval::psp_at_k(&ranked(preds), &y, &prop, k).map_err(to_py)
}

#[pymodule]
fn oxmc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(project_assignment, m)?)?;
    m.add_function(wrap_pyfunction!(precision_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(psp_at_k, m)?)?;
    Ok(())
}

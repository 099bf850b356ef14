//! Matcher-aware overlapping label clusters.
//!
//! Given the binary label matrix `Y` (n×L) and the matcher's routing matrix
//! `M` (n×K), a cluster assignment `C` (L×K) lets the matcher surface
//! `Ŷ = Binary(M·Cᵀ)` as candidates. The number of true positives reachable
//! by any ranker is bounded by `Tr(Yᵀ·Binary(M·Cᵀ))`, and we want the `C`
//! maximizing it subject to every label sitting in between 1 and `λ`
//! clusters.
//!
//! That problem is NP-complete (set cover reduces to it with a single label),
//! so the indicator is relaxed away: with `M` and `C` non-negative the
//! objective becomes `Tr(Yᵀ·M·Cᵀ) = Σ (YᵀM) ⊙ C`, which is linear in `C` and
//! separable over labels. Its maximizer keeps, for every label, the `λ`
//! largest entries of its row of `YᵀM` ([`project_assignment`]). The result is
//! never worse under the *binary* objective than any non-overlapping
//! partition, because the `λ = 1` projection already maximizes the binary
//! objective over partitions and adding incidences can only add candidates.
//!
//! Labels whose row of `YᵀM` is entirely zero (none of their positives reach
//! any cluster) keep their previous cluster. Only strictly positive entries
//! are selected, so rows are never padded up to `λ` with zero-score clusters.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cluster::LabelTree;
use crate::error::{invalid, Error, ParseErrorKind, Result};
use crate::matrices::{binarize, row_top_lambda, spmm_pattern, trace_product, CsrMatrix};

/// Default overlap budget.
pub const DEFAULT_LAMBDA: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    InitialKmeans,
    Projected,
    Rlap,
    Random,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::InitialKmeans => "initial-kmeans",
            Provenance::Projected => "projected",
            Provenance::Rlap => "rlap",
            Provenance::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "initial-kmeans" => Provenance::InitialKmeans,
            "projected" => Provenance::Projected,
            "rlap" => Provenance::Rlap,
            "random" => Provenance::Random,
            _ => return None,
        })
    }
}

/// Label-to-cluster incidence with every label in `1..=lambda` clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    c: CsrMatrix,
    lambda: usize,
    provenance: Provenance,
}

impl ClusterAssignment {
    pub fn new(c: CsrMatrix, lambda: usize, provenance: Provenance) -> Result<Self> {
        if lambda == 0 {
            return Err(invalid("lambda must be at least 1"));
        }
        if !c.is_binary() {
            return Err(invalid("assignment matrix must be binary"));
        }
        for l in 0..c.rows() {
            let k = c.row_nnz(l);
            if k == 0 || k > lambda {
                return Err(invalid(format!(
                    "label {l} is in {k} clusters; expected 1..={lambda}"
                )));
            }
        }
        Ok(Self {
            c,
            lambda,
            provenance,
        })
    }

    /// The non-overlapping assignment read off a freshly built tree.
    pub fn from_tree(tree: &LabelTree) -> Result<Self> {
        Self::new(tree.incidence(), 1, Provenance::InitialKmeans)
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.c
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn n_labels(&self) -> usize {
        self.c.rows()
    }

    pub fn n_clusters(&self) -> usize {
        self.c.cols()
    }

    pub fn clusters_of(&self, label: usize) -> &[usize] {
        self.c.row(label).indices
    }

    pub fn n_incidences(&self) -> usize {
        self.c.nnz()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.c.col_counts()
    }

    /// Number of labels that sit in more than one cluster.
    pub fn n_duplicated(&self) -> usize {
        (0..self.n_labels()).filter(|&l| self.c.row_nnz(l) > 1).count()
    }

    /// `label_id cluster_id` lines, one per incidence.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for l in 0..self.n_labels() {
            for &j in self.clusters_of(l) {
                writeln!(s, "{l} {j}").unwrap();
            }
        }
        s
    }

    pub fn from_text(
        text: &str,
        n_labels: usize,
        n_clusters: usize,
        lambda: usize,
        provenance: Provenance,
        source: &str,
    ) -> Result<Self> {
        let mut rows = vec![Vec::new(); n_labels];
        for (k, line) in text.lines().enumerate() {
            let err = |msg: String| Error::Parse {
                path: source.to_string(),
                line: k + 1,
                kind: ParseErrorKind::Malformed(msg),
            };
            let mut it = line.split_whitespace();
            let (Some(l), Some(j), None) = (it.next(), it.next(), it.next()) else {
                return Err(err(format!("expected 'label cluster', got {line:?}")));
            };
            let l: usize = l.parse().map_err(|_| err(format!("bad label {l:?}")))?;
            let j: usize = j.parse().map_err(|_| err(format!("bad cluster {j:?}")))?;
            if l >= n_labels || j >= n_clusters {
                return Err(err(format!("incidence ({l}, {j}) out of range")));
            }
            rows[l].push(j);
        }
        Self::new(CsrMatrix::from_patterns(n_clusters, rows)?, lambda, provenance)
    }
}

fn check_ym(y: &CsrMatrix, m: &CsrMatrix) -> Result<()> {
    if y.rows() != m.rows() {
        return Err(Error::DimensionMismatch {
            op: "label/match matrices",
            left: y.shape(),
            right: m.shape(),
        });
    }
    Ok(())
}

fn check_ymc(y: &CsrMatrix, m: &CsrMatrix, c: &CsrMatrix) -> Result<()> {
    check_ym(y, m)?;
    if c.rows() != y.cols() || c.cols() != m.cols() {
        return Err(Error::DimensionMismatch {
            op: "assignment matrix",
            left: c.shape(),
            right: crate::error::Shape(y.cols(), m.cols()),
        });
    }
    Ok(())
}

/// `YᵀM` (L×K): how many positives of each label the matcher routes to each cluster.
pub fn label_cluster_scores(y: &CsrMatrix, m: &CsrMatrix) -> Result<CsrMatrix> {
    check_ym(y, m)?;
    y.transpose().matmul(m)
}

/// `Tr(Yᵀ · Binary(M·Cᵀ))`.
pub fn objective_binary(y: &CsrMatrix, m: &CsrMatrix, c: &CsrMatrix) -> Result<u64> {
    check_ymc(y, m, c)?;
    let candidates = binarize(&spmm_pattern(m, c)?);
    Ok(trace_product(y, &candidates)? as u64)
}

/// `Tr(Yᵀ · M · Cᵀ)`, evaluated as the sum of `YᵀM` over the support of `C`
/// weighted by `C`'s values.
pub fn objective_relaxed(y: &CsrMatrix, m: &CsrMatrix, c: &CsrMatrix) -> Result<u64> {
    check_ymc(y, m, c)?;
    let scores = label_cluster_scores(y, m)?;
    let total: f64 = (0..c.rows())
        .map(|l| scores.row(l).dot(c.row(l)))
        .sum();
    Ok(total.round() as u64)
}

/// Closed-form maximizer of the relaxed objective: the top-`lambda` positive
/// entries of each row of `YᵀM`, falling back to `fallback`'s clusters for
/// labels whose row is empty.
pub fn project_assignment(
    y: &CsrMatrix,
    m: &CsrMatrix,
    lambda: usize,
    fallback: &ClusterAssignment,
) -> Result<ClusterAssignment> {
    let scores = label_cluster_scores(y, m)?;
    if fallback.n_labels() != scores.rows() || fallback.n_clusters() != scores.cols() {
        return Err(Error::DimensionMismatch {
            op: "project_assignment fallback",
            left: fallback.matrix().shape(),
            right: scores.shape(),
        });
    }
    let top = row_top_lambda(&scores, lambda)?;
    let rows = (0..top.rows()).map(|l| {
        let picked = top.row(l).indices;
        if picked.is_empty() {
            fallback.clusters_of(l).iter().take(lambda).copied().collect::<Vec<_>>()
        } else {
            picked.to_vec()
        }
    });
    let c = CsrMatrix::from_patterns(scores.cols(), rows.collect::<Vec<_>>())?;
    ClusterAssignment::new(c, lambda, Provenance::Projected)
}

/// Cluster capacity `ceil(1.5 · L / K)`.
pub fn default_capacity(n_labels: usize, n_clusters: usize) -> usize {
    (3 * n_labels).div_ceil(2 * n_clusters.max(1))
}

/// Greedy solver for the capacity-constrained variant: maximize `Σ (YᵀM) ⊙ C`
/// with at most `lambda` clusters per label and at most `xi` labels per cluster.
///
/// A first greedy pass over positive scores (descending) gives each label its
/// best cluster that still has room; labels left uncovered go to their
/// `fallback` cluster when it has room, otherwise to the least-loaded cluster.
/// A second pass adds further incidences in score order while both limits
/// allow. Coverage always holds when `xi · K ≥ L`.
pub fn solve_rlap_greedy(
    y: &CsrMatrix,
    m: &CsrMatrix,
    lambda: usize,
    xi: usize,
    fallback: Option<&ClusterAssignment>,
) -> Result<ClusterAssignment> {
    if lambda == 0 {
        return Err(invalid("lambda must be at least 1"));
    }
    let scores = label_cluster_scores(y, m)?;
    let (n_labels, n_clusters) = (scores.rows(), scores.cols());
    if xi == 0 || xi.saturating_mul(n_clusters) < n_labels {
        return Err(Error::Infeasible(format!(
            "capacity {xi} x {n_clusters} clusters cannot cover {n_labels} labels"
        )));
    }
    let mut entries: Vec<(usize, usize, f64)> = (0..n_labels)
        .flat_map(|l| {
            scores
                .row(l)
                .iter()
                .filter(|&(_, v)| v > 0.0)
                .map(move |(j, v)| (l, j, v))
        })
        .collect();
    entries.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n_labels];
    let mut load = vec![0usize; n_clusters];
    for &(l, j, _) in &entries {
        if rows[l].is_empty() && load[j] < xi {
            rows[l].push(j);
            load[j] += 1;
        }
    }
    for (l, row) in rows.iter_mut().enumerate() {
        if !row.is_empty() {
            continue;
        }
        let preferred = fallback
            .and_then(|f| f.clusters_of(l).first().copied())
            .filter(|&j| j < n_clusters && load[j] < xi);
        let j = preferred.unwrap_or_else(|| (0..n_clusters).min_by_key(|&j| (load[j], j)).unwrap());
        row.push(j);
        load[j] += 1;
    }
    for &(l, j, _) in &entries {
        if rows[l].len() < lambda && load[j] < xi && !rows[l].contains(&j) {
            rows[l].push(j);
            load[j] += 1;
        }
    }
    let c = CsrMatrix::from_patterns(n_clusters, rows)?;
    ClusterAssignment::new(c, lambda, Provenance::Rlap)
}

/// Random-duplication baseline: every label keeps its first cluster in
/// `initial` and gains one uniformly random different cluster.
pub fn random_duplicate(initial: &ClusterAssignment, seed: u64) -> Result<ClusterAssignment> {
    let k = initial.n_clusters();
    if k < 2 {
        return Err(invalid("random duplication needs at least two clusters"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<usize>> = (0..initial.n_labels())
        .map(|l| {
            let home = initial.clusters_of(l)[0];
            let r = rng.random_range(0..k - 1);
            vec![home, if r >= home { r + 1 } else { r }]
        })
        .collect();
    ClusterAssignment::new(CsrMatrix::from_patterns(k, rows)?, 2, Provenance::Random)
}

/// Exhaustive reference solvers for tiny instances. They work on dense copies
/// and never touch the sparse products used above.
pub mod oracle {
    use super::*;

    pub const MAX_LABELS: usize = 10;
    pub const MAX_CLUSTERS: usize = 4;
    pub const MAX_ENUMERATION: u64 = 1_000_000;

    /// Dense `Tr(Yᵀ·M·Cᵀ)`.
    pub fn dense_relaxed(y: &[Vec<f64>], m: &[Vec<f64>], c: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for (yi, mi) in y.iter().zip(m) {
            for (l, &y_il) in yi.iter().enumerate() {
                let mc: f64 = mi.iter().zip(&c[l]).map(|(a, b)| a * b).sum();
                total += y_il * mc;
            }
        }
        total
    }

    /// Dense `Tr(Yᵀ·Binary(M·Cᵀ))`.
    pub fn dense_binary(y: &[Vec<f64>], m: &[Vec<f64>], c: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for (yi, mi) in y.iter().zip(m) {
            for (l, &y_il) in yi.iter().enumerate() {
                let mc: f64 = mi.iter().zip(&c[l]).map(|(a, b)| a * b).sum();
                total += y_il * f64::from(u8::from(mc > 0.0));
            }
        }
        total
    }

    /// Non-empty subsets of `0..k` with at most `lambda` elements, as bitmasks.
    fn subsets(k: usize, lambda: usize) -> Vec<u32> {
        (1u32..1 << k)
            .filter(|s| s.count_ones() as usize <= lambda)
            .collect()
    }

    fn mask_row(mask: u32, k: usize) -> Vec<f64> {
        (0..k).map(|j| f64::from(u8::from(mask >> j & 1 == 1))).collect()
    }

    /// Maximizes `Tr(Yᵀ·M·Cᵀ)` over every `C` whose rows hold 1..=`lambda` ones.
    ///
    /// The feasible set is a product of per-label subset families and the
    /// objective is a sum of per-label terms, so each label's subsets are
    /// enumerated independently and scored against the dense matrices.
    pub fn brute_force_optimal(
        y: &CsrMatrix,
        m: &CsrMatrix,
        lambda: usize,
    ) -> Result<(ClusterAssignment, u64)> {
        check_ym(y, m)?;
        let (l_count, k) = (y.cols(), m.cols());
        if l_count > MAX_LABELS || k > MAX_CLUSTERS {
            return Err(Error::SizeGuard(format!("L={l_count}, K={k}")));
        }
        if lambda == 0 {
            return Err(invalid("lambda must be at least 1"));
        }
        let (yd, md) = (y.to_dense(), m.to_dense());
        let family = subsets(k, lambda);
        let mut best_rows = Vec::with_capacity(l_count);
        for l in 0..l_count {
            let mut best = (f64::NEG_INFINITY, 0u32);
            for &mask in &family {
                let value: f64 = yd
                    .iter()
                    .zip(&md)
                    .map(|(yi, mi)| {
                        yi[l] * (0..k).filter(|j| mask >> j & 1 == 1).map(|j| mi[j]).sum::<f64>()
                    })
                    .sum();
                if value > best.0 {
                    best = (value, mask);
                }
            }
            best_rows.push(mask_row(best.1, k));
        }
        let value = dense_relaxed(&yd, &md, &best_rows);
        let c = ClusterAssignment::new(CsrMatrix::from_dense(&best_rows), lambda, Provenance::Projected)?;
        Ok((c, value.round() as u64))
    }

    /// Maximum of `Tr(Yᵀ·Binary(M·Cᵀ))` over every non-overlapping `C`
    /// (each of the `L` labels in exactly one of `K` clusters).
    pub fn enumerate_partitions_objective(
        y: &CsrMatrix,
        m: &CsrMatrix,
        n_labels: usize,
        n_clusters: usize,
    ) -> Result<u64> {
        check_ym(y, m)?;
        if y.cols() != n_labels || m.cols() != n_clusters || n_clusters == 0 {
            return Err(invalid("label/cluster counts disagree with the matrices"));
        }
        let total = (n_clusters as u64).checked_pow(n_labels as u32);
        if total.is_none_or(|t| t > MAX_ENUMERATION) {
            return Err(Error::SizeGuard(format!("{n_clusters}^{n_labels} partitions")));
        }
        let (yd, md) = (y.to_dense(), m.to_dense());
        // Each label's contribution depends only on its own cluster when C has
        // one 1 per row, so per-(label, cluster) counts are tabulated once.
        let table: Vec<Vec<f64>> = (0..n_labels)
            .map(|l| {
                (0..n_clusters)
                    .map(|j| {
                        let single: Vec<Vec<f64>> = (0..n_labels)
                            .map(|r| if r == l { mask_row(1 << j, n_clusters) } else { vec![0.0; n_clusters] })
                            .collect();
                        dense_binary(&yd, &md, &single)
                    })
                    .collect()
            })
            .collect();
        let mut choice = vec![0usize; n_labels];
        let mut best = f64::NEG_INFINITY;
        loop {
            let value: f64 = choice.iter().enumerate().map(|(l, &j)| table[l][j]).sum();
            best = best.max(value);
            let mut pos = 0;
            loop {
                if pos == n_labels {
                    return Ok(best.max(0.0).round() as u64);
                }
                choice[pos] += 1;
                if choice[pos] < n_clusters {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
        }
    }

    /// Exact optimum of the capacity-constrained problem by joint enumeration.
    pub fn rlap_exact(y: &CsrMatrix, m: &CsrMatrix, lambda: usize, xi: usize) -> Result<u64> {
        check_ym(y, m)?;
        let (l_count, k) = (y.cols(), m.cols());
        let family = subsets(k, lambda);
        let total = (family.len() as u64).checked_pow(l_count as u32);
        if total.is_none_or(|t| t > MAX_ENUMERATION) {
            return Err(Error::SizeGuard(format!("{} ^ {l_count} assignments", family.len())));
        }
        let (yd, md) = (y.to_dense(), m.to_dense());
        let value_of = |l: usize, mask: u32| -> f64 {
            yd.iter()
                .zip(&md)
                .map(|(yi, mi)| yi[l] * (0..k).filter(|j| mask >> j & 1 == 1).map(|j| mi[j]).sum::<f64>())
                .sum()
        };
        let values: Vec<Vec<f64>> = (0..l_count)
            .map(|l| family.iter().map(|&s| value_of(l, s)).collect())
            .collect();
        let mut choice = vec![0usize; l_count];
        let mut best: Option<f64> = None;
        loop {
            let mut load = vec![0usize; k];
            for &c in &choice {
                for (j, slot) in load.iter_mut().enumerate() {
                    if family[c] >> j & 1 == 1 {
                        *slot += 1;
                    }
                }
            }
            if load.iter().all(|&n| n <= xi) {
                let v: f64 = choice.iter().enumerate().map(|(l, &c)| values[l][c]).sum();
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
            let mut pos = 0;
            loop {
                if pos == l_count {
                    return best
                        .map(|b| b.round() as u64)
                        .ok_or_else(|| Error::Infeasible("no feasible assignment".into()));
                }
                choice[pos] += 1;
                if choice[pos] < family.len() {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singles(k: usize, clusters: &[usize]) -> ClusterAssignment {
        let c = CsrMatrix::from_patterns(k, clusters.iter().map(|&j| vec![j])).unwrap();
        ClusterAssignment::new(c, 1, Provenance::InitialKmeans).unwrap()
    }

    /// Builds `Y`, `M` with `YᵀM` equal to the given small non-negative integer matrix:
    /// one instance per unit of score.
    fn ym_from_scores(scores: &[Vec<usize>]) -> (CsrMatrix, CsrMatrix) {
        let (l, k) = (scores.len(), scores[0].len());
        let mut y_rows = Vec::new();
        let mut m_rows = Vec::new();
        for (li, row) in scores.iter().enumerate() {
            for (j, &s) in row.iter().enumerate() {
                for _ in 0..s {
                    y_rows.push(vec![li]);
                    m_rows.push(vec![j]);
                }
            }
        }
        (
            CsrMatrix::from_patterns(l, y_rows).unwrap(),
            CsrMatrix::from_patterns(k, m_rows).unwrap(),
        )
    }

    #[test]
    fn scores_helper_reproduces_matrix() {
        let (y, m) = ym_from_scores(&[vec![3, 1, 2], vec![0, 5, 0]]);
        assert_eq!(
            label_cluster_scores(&y, &m).unwrap().to_dense(),
            vec![vec![3.0, 1.0, 2.0], vec![0.0, 5.0, 0.0]]
        );
    }

    #[test]
    fn objective_binary_examples() {
        let m = CsrMatrix::from_patterns(2, vec![vec![0], vec![1], vec![0, 1]]).unwrap();
        let c = CsrMatrix::from_patterns(2, vec![vec![0], vec![1]]).unwrap();
        let y = binarize(&spmm_pattern(&m, &c).unwrap());
        assert_eq!(objective_binary(&y, &m, &c).unwrap(), y.nnz() as u64);
        assert_eq!(objective_binary(&y, &CsrMatrix::zeros(3, 2), &c).unwrap(), 0);
        assert!(objective_binary(&y, &m, &CsrMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn relaxed_matches_binary_for_beam_one() {
        let y = CsrMatrix::from_patterns(3, vec![vec![0, 1], vec![2], vec![1], vec![0]]).unwrap();
        let m = CsrMatrix::from_patterns(2, vec![vec![0], vec![1], vec![0], vec![1]]).unwrap();
        let c = CsrMatrix::from_patterns(2, vec![vec![0, 1], vec![0], vec![1]]).unwrap();
        assert_eq!(objective_relaxed(&y, &m, &c).unwrap(), objective_binary(&y, &m, &c).unwrap());
    }

    #[test]
    fn relaxed_counts_duplicate_coverage() {
        // One instance carrying label 0, matched to both clusters.
        let y = CsrMatrix::from_patterns(2, vec![vec![0]]).unwrap();
        let m = CsrMatrix::from_patterns(2, vec![vec![0, 1]]).unwrap();
        let single = CsrMatrix::from_patterns(2, vec![vec![0], vec![1]]).unwrap();
        let both = CsrMatrix::from_patterns(2, vec![vec![0, 1], vec![1]]).unwrap();
        assert_eq!(objective_relaxed(&y, &m, &single).unwrap(), 1);
        assert_eq!(objective_relaxed(&y, &m, &both).unwrap(), 2);
        assert_eq!(objective_binary(&y, &m, &both).unwrap(), 1);
    }

    #[test]
    fn relaxed_identity() {
        let i = CsrMatrix::identity(5);
        assert_eq!(objective_relaxed(&i, &i, &i).unwrap(), 5);
    }

    #[test]
    fn projection_example_with_fallback() {
        let (y, m) = ym_from_scores(&[vec![3, 1, 2], vec![0, 5, 0], vec![0, 0, 0]]);
        let fallback = singles(3, &[1, 0, 2]);
        let c = project_assignment(&y, &m, 2, &fallback).unwrap();
        assert_eq!(c.clusters_of(0), &[0, 2]);
        assert_eq!(c.clusters_of(1), &[1]);
        assert_eq!(c.clusters_of(2), &[2]);
        let (_, best) = oracle::brute_force_optimal(&y, &m, 2).unwrap();
        assert_eq!(objective_relaxed(&y, &m, c.matrix()).unwrap(), best);
        assert_eq!(best, 10);
    }

    #[test]
    fn projection_lambda_one_is_hard_reassignment() {
        let (y, m) = ym_from_scores(&[vec![1, 4], vec![3, 2]]);
        let c = project_assignment(&y, &m, 1, &singles(2, &[0, 1])).unwrap();
        assert_eq!(c.clusters_of(0), &[1]);
        assert_eq!(c.clusters_of(1), &[0]);
    }

    #[test]
    fn projection_saturates() {
        let scores = vec![vec![1, 2, 0], vec![4, 1, 1]];
        let (y, m) = ym_from_scores(&scores);
        let c = project_assignment(&y, &m, 3, &singles(3, &[0, 0])).unwrap();
        assert_eq!(c.clusters_of(0), &[0, 1]);
        assert_eq!(objective_relaxed(&y, &m, c.matrix()).unwrap(), 9);
    }

    #[test]
    fn rlap_without_pressure_equals_projection() {
        let (y, m) = ym_from_scores(&[vec![3, 1, 2], vec![0, 5, 0], vec![0, 0, 0], vec![2, 2, 1]]);
        let fallback = singles(3, &[0, 1, 2, 0]);
        let p = project_assignment(&y, &m, 2, &fallback).unwrap();
        let r = solve_rlap_greedy(&y, &m, 2, 4, Some(&fallback)).unwrap();
        assert_eq!(p.matrix(), r.matrix());
    }

    #[test]
    fn rlap_forced_balance_is_optimal() {
        let (y, m) = ym_from_scores(&[vec![5, 0], vec![4, 0], vec![3, 1], vec![2, 1]]);
        let r = solve_rlap_greedy(&y, &m, 1, 2, None).unwrap();
        assert_eq!(r.cluster_sizes(), vec![2, 2]);
        let got = objective_relaxed(&y, &m, r.matrix()).unwrap();
        assert_eq!(got, oracle::rlap_exact(&y, &m, 1, 2).unwrap());
        assert_eq!(got, 11);
    }

    #[test]
    fn rlap_equal_scores_cover_everything() {
        let (y, m) = ym_from_scores(&vec![vec![1, 1, 1]; 6]);
        let r = solve_rlap_greedy(&y, &m, 2, 3, None).unwrap();
        assert!(r.cluster_sizes().iter().all(|&s| s <= 3));
        assert!((0..6).all(|l| !r.clusters_of(l).is_empty()));
        assert!(matches!(solve_rlap_greedy(&y, &m, 2, 1, None), Err(Error::Infeasible(_))));
    }

    #[test]
    fn random_duplicate_examples() {
        let init = singles(2, &[0, 1, 1]);
        let d = random_duplicate(&init, 3).unwrap();
        assert!((0..3).all(|l| d.clusters_of(l) == [0, 1]));
        let init = singles(5, &[0, 4, 2, 2, 1, 3]);
        let a = random_duplicate(&init, 11).unwrap();
        assert_eq!(a, random_duplicate(&init, 11).unwrap());
        for l in 0..6 {
            assert_eq!(a.clusters_of(l).len(), 2);
            assert!(a.clusters_of(l).contains(&init.clusters_of(l)[0]));
        }
        assert!(random_duplicate(&singles(1, &[0, 0]), 0).is_err());
    }

    #[test]
    fn brute_force_trivial_cases() {
        let (y, m) = ym_from_scores(&[vec![1, 2, 3]]);
        let (c, v) = oracle::brute_force_optimal(&y, &m, 3).unwrap();
        assert_eq!(c.clusters_of(0), &[0, 1, 2]);
        assert_eq!(v, 6);
        let (c, v) = oracle::brute_force_optimal(&y, &m, 2).unwrap();
        assert_eq!(c.clusters_of(0), &[1, 2]);
        assert_eq!(v, 5);
        let big = CsrMatrix::zeros(1, 11);
        assert!(matches!(
            oracle::brute_force_optimal(&big, &CsrMatrix::zeros(1, 2), 1),
            Err(Error::SizeGuard(_))
        ));
    }

    #[test]
    fn partitions_single_cluster() {
        let y = CsrMatrix::from_patterns(3, vec![vec![0, 2], vec![1], vec![]]).unwrap();
        let m = CsrMatrix::from_patterns(1, vec![vec![0], vec![], vec![0]]).unwrap();
        let ones = CsrMatrix::from_patterns(1, vec![vec![0]; 3]).unwrap();
        let expected = trace_product(&y, &binarize(&spmm_pattern(&m, &ones).unwrap())).unwrap() as u64;
        assert_eq!(oracle::enumerate_partitions_objective(&y, &m, 3, 1).unwrap(), expected);
    }

    #[test]
    fn assignment_text_round_trip_and_validation() {
        let c = CsrMatrix::from_patterns(3, vec![vec![0, 2], vec![1]]).unwrap();
        let a = ClusterAssignment::new(c, 2, Provenance::Projected).unwrap();
        let back = ClusterAssignment::from_text(&a.to_text(), 2, 3, 2, Provenance::Projected, "mem").unwrap();
        assert_eq!(back, a);
        let empty_row = CsrMatrix::from_patterns(3, vec![vec![0], vec![]]).unwrap();
        assert!(ClusterAssignment::new(empty_row, 2, Provenance::Projected).is_err());
        let too_many = CsrMatrix::from_patterns(3, vec![vec![0, 1, 2]]).unwrap();
        assert!(ClusterAssignment::new(too_many, 2, Provenance::Projected).is_err());
    }
}

//! Matcher + ranker model and inference.
//!
//! The matcher is a beam search down the label tree: each internal node holds
//! one classifier per child, and a path's score is the product of
//! `σ(child score)` along it. The ranker holds one weight vector per
//! (label, cluster) incidence, so a label sitting in two clusters has two
//! independently trained scorers.
//!
//! A candidate's score from one matched leaf is `σ(ranker) × path score`.
//! When a label is reached through several matched leaves its final score is
//! the arithmetic mean over those occurrences.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;

use crate::cluster::LabelTree;
use crate::dataio::{sort_ranked, Prediction};
use crate::error::{invalid, Error, ParseErrorKind, Result};
use crate::linear::{score, sigmoid, WeightVector};
use crate::matrices::{CsrMatrix, RowView};
use crate::overlap::{ClusterAssignment, Provenance};

/// How duplicated labels are merged at inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DedupMode {
    /// Mean of `σ(ranker) × path score` over occurrences.
    #[default]
    Combined,
    /// Mean of `σ(ranker)` over occurrences, times the best path score among them.
    RankerOnly,
}

impl DedupMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DedupMode::Combined => "combined",
            DedupMode::RankerOnly => "ranker-only",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "combined" => Some(DedupMode::Combined),
            "ranker-only" => Some(DedupMode::RankerOnly),
            _ => None,
        }
    }
}

/// Hyper-parameters recorded alongside the weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelMeta {
    pub n_features: usize,
    pub n_labels: usize,
    pub branching: usize,
    pub max_leaf_size: usize,
    pub beam: usize,
    pub seed: u64,
    pub dedup: DedupMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelRanker {
    pub label: usize,
    pub weights: WeightVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct XmcModel {
    pub(crate) meta: ModelMeta,
    pub(crate) tree: LabelTree,
    pub(crate) assignment: ClusterAssignment,
    /// Per node; one vector per child for internal nodes, empty for leaves.
    pub(crate) matcher: Vec<Vec<WeightVector>>,
    /// Per cluster, ordered by label id to match the leaf's label set.
    pub(crate) ranker: Vec<Vec<LabelRanker>>,
}

/// Merges `(label, ranker σ, path score)` candidates into one score per label,
/// ranked best first.
pub fn merge_candidates(
    candidates: impl IntoIterator<Item = (usize, f64, f64)>,
    mode: DedupMode,
) -> Vec<(usize, f64)> {
    // label -> (sum of merged terms, count, best path)
    let mut acc: HashMap<usize, (f64, usize, f64)> = HashMap::new();
    for (label, s, path) in candidates {
        let term = match mode {
            DedupMode::Combined => s * path,
            DedupMode::RankerOnly => s,
        };
        let e = acc.entry(label).or_insert((0.0, 0, 0.0));
        e.0 += term;
        e.1 += 1;
        e.2 = e.2.max(path);
    }
    let mut ranked: Vec<(usize, f64)> = acc
        .into_iter()
        .map(|(label, (sum, count, best_path))| {
            let mean = sum / count as f64;
            let score = match mode {
                DedupMode::Combined => mean,
                DedupMode::RankerOnly => mean * best_path,
            };
            (label, score)
        })
        .collect();
    sort_ranked(&mut ranked);
    ranked
}

impl XmcModel {
    /// Assembles a model from its parts and validates it.
    pub fn from_parts(
        meta: ModelMeta,
        tree: LabelTree,
        assignment: ClusterAssignment,
        matcher: Vec<Vec<WeightVector>>,
        ranker: Vec<Vec<LabelRanker>>,
    ) -> Result<Self> {
        let model = Self {
            meta,
            tree,
            assignment,
            matcher,
            ranker,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn tree(&self) -> &LabelTree {
        &self.tree
    }

    pub fn assignment(&self) -> &ClusterAssignment {
        &self.assignment
    }

    pub fn lambda(&self) -> usize {
        self.assignment.lambda()
    }

    pub fn beam(&self) -> usize {
        self.meta.beam
    }

    pub fn set_beam(&mut self, beam: usize) {
        self.meta.beam = beam.max(1);
    }

    pub fn set_dedup(&mut self, dedup: DedupMode) {
        self.meta.dedup = dedup;
    }

    pub fn n_clusters(&self) -> usize {
        self.tree.n_leaves()
    }

    pub fn matcher_weights(&self, node: usize) -> &[WeightVector] {
        &self.matcher[node]
    }

    pub fn cluster_rankers(&self, cluster: usize) -> &[LabelRanker] {
        &self.ranker[cluster]
    }

    /// Number of ranker weight vectors held for `label`.
    pub fn ranker_count(&self, label: usize) -> usize {
        self.assignment.clusters_of(label).len()
    }

    /// Checks that tree, assignment and weights agree with each other.
    pub fn validate(&self) -> Result<()> {
        if self.meta.beam == 0 {
            return Err(invalid("beam must be at least 1"));
        }
        if self.tree.n_labels() != self.meta.n_labels {
            return Err(invalid("tree label count disagrees with the model"));
        }
        let dims_ok = self
            .matcher
            .iter()
            .flatten()
            .chain(self.ranker.iter().flatten().map(|r| &r.weights))
            .all(|w| w.dim == self.meta.n_features && w.indices.iter().all(|&j| j < w.dim));
        if !dims_ok {
            return Err(invalid("weight vector dimension disagrees with the model"));
        }
        if self.tree.incidence() != *self.assignment.matrix() {
            return Err(invalid("leaf label sets disagree with the cluster assignment"));
        }
        if self.matcher.len() != self.tree.n_nodes() || self.ranker.len() != self.n_clusters() {
            return Err(invalid("weight tables do not match the tree"));
        }
        for (id, node) in self.tree.nodes().iter().enumerate() {
            if self.matcher[id].len() != node.children.len() {
                return Err(invalid(format!("node {id} has the wrong number of matcher vectors")));
            }
        }
        for cluster in 0..self.n_clusters() {
            let labels: Vec<usize> = self.ranker[cluster].iter().map(|r| r.label).collect();
            if labels != self.tree.leaf_labels(cluster) {
                return Err(invalid(format!("ranker keys disagree with cluster {cluster}")));
            }
        }
        Ok(())
    }

    /// Beam search: the `min(beam, K)` best leaves as `(cluster, path score)`,
    /// best first. Ties go to the lower node id.
    pub fn match_leaves(&self, x: RowView<'_>) -> Vec<(usize, f64)> {
        let beam = self.meta.beam.max(1);
        let mut current: Vec<(usize, f64)> = vec![(0, 1.0)];
        let mut next = Vec::new();
        while current.iter().any(|&(n, _)| !self.tree.node(n).children.is_empty()) {
            next.clear();
            for &(node, path) in &current {
                let children = &self.tree.node(node).children;
                if children.is_empty() {
                    next.push((node, path));
                    continue;
                }
                for (&child, w) in children.iter().zip(&self.matcher[node]) {
                    next.push((child, path * sigmoid(score(w, x))));
                }
            }
            next.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            next.truncate(beam);
            std::mem::swap(&mut current, &mut next);
        }
        current
            .into_iter()
            .map(|(node, path)| (self.tree.node(node).leaf.expect("beam ends on leaves"), path))
            .collect()
    }

    /// Binary n×K matrix of matched leaves.
    pub fn match_matrix(&self, x: &CsrMatrix) -> CsrMatrix {
        let rows: Vec<Vec<usize>> = (0..x.rows())
            .into_par_iter()
            .map(|i| self.match_leaves(x.row(i)).into_iter().map(|(c, _)| c).collect())
            .collect();
        CsrMatrix::from_patterns(self.n_clusters(), rows).expect("cluster ids in range")
    }

    /// Every `(label, cluster, ranker σ, path score)` candidate from the matched leaves.
    pub fn candidates(&self, x: RowView<'_>) -> Vec<(usize, usize, f64, f64)> {
        let mut out = Vec::new();
        for (cluster, path) in self.match_leaves(x) {
            for r in &self.ranker[cluster] {
                let s = sigmoid(score(&r.weights, x));
                out.push((r.label, cluster, s, path));
            }
        }
        out
    }

    /// Top-`k` labels after merging duplicates.
    pub fn predict(&self, x: RowView<'_>, k: usize) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let mut ranked = merge_candidates(
            self.candidates(x).into_iter().map(|(l, _, s, path)| (l, s, path)),
            self.meta.dedup,
        );
        ranked.truncate(k);
        ranked
    }

    pub fn predict_batch(&self, x: &CsrMatrix, k: usize) -> Vec<Prediction> {
        (0..x.rows())
            .into_par_iter()
            .map(|i| Prediction {
                instance: i,
                labels: self.predict(x.row(i), k),
            })
            .collect()
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let m = &self.meta;
        let meta = format!(
            "n_features {}\nn_labels {}\nn_clusters {}\nbranching {}\nmax_leaf_size {}\nbeam {}\nlambda {}\nseed {}\ndedup {}\nprovenance {}\n",
            m.n_features,
            m.n_labels,
            self.n_clusters(),
            m.branching,
            m.max_leaf_size,
            m.beam,
            self.lambda(),
            m.seed,
            m.dedup.as_str(),
            self.assignment.provenance().as_str(),
        );
        fs::write(dir.join("meta.txt"), meta)?;
        fs::write(dir.join("tree.txt"), self.tree.to_text())?;
        fs::write(dir.join("assignment.txt"), self.assignment.to_text())?;

        let mut matcher = String::new();
        for (node, ws) in self.matcher.iter().enumerate() {
            for (w, child) in ws.iter().zip(&self.tree.node(node).children) {
                write!(matcher, "{node} {child} ").unwrap();
                write_weights(&mut matcher, w);
            }
        }
        fs::write(dir.join("matcher.txt"), matcher)?;

        let mut ranker = String::new();
        for (cluster, rs) in self.ranker.iter().enumerate() {
            for r in rs {
                write!(ranker, "{} {cluster} ", r.label).unwrap();
                write_weights(&mut ranker, &r.weights);
            }
        }
        fs::write(dir.join("ranker.txt"), ranker)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |name: &str| -> Result<(String, String)> {
            let path = dir.join(name);
            let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
                io::ErrorKind::NotFound => Error::MissingFile(path.clone()),
                _ => Error::Io(e),
            })?;
            Ok((text, path.display().to_string()))
        };

        let (meta_text, meta_src) = read("meta.txt")?;
        let mut kv = HashMap::new();
        for line in meta_text.lines() {
            if let Some((k, v)) = line.split_once(' ') {
                kv.insert(k.to_string(), v.trim().to_string());
            }
        }
        let field = |k: &str| -> Result<&String> {
            kv.get(k).ok_or_else(|| Error::Parse {
                path: meta_src.clone(),
                line: 0,
                kind: ParseErrorKind::Malformed(format!("missing key {k}")),
            })
        };
        let num = |k: &str| -> Result<u64> {
            field(k)?.parse().map_err(|_| Error::Parse {
                path: meta_src.clone(),
                line: 0,
                kind: ParseErrorKind::NonNumeric(k.to_string()),
            })
        };
        let bad_meta = |k: &str| Error::Parse {
            path: meta_src.clone(),
            line: 0,
            kind: ParseErrorKind::Malformed(format!("bad value for {k}")),
        };
        let meta = ModelMeta {
            n_features: num("n_features")? as usize,
            n_labels: num("n_labels")? as usize,
            branching: num("branching")? as usize,
            max_leaf_size: num("max_leaf_size")? as usize,
            beam: num("beam")? as usize,
            seed: num("seed")?,
            dedup: DedupMode::parse(field("dedup")?).ok_or_else(|| bad_meta("dedup"))?,
        };
        let n_clusters = num("n_clusters")? as usize;
        let lambda = num("lambda")? as usize;
        let provenance = Provenance::parse(field("provenance")?).ok_or_else(|| bad_meta("provenance"))?;

        let (tree_text, tree_src) = read("tree.txt")?;
        let tree = LabelTree::from_text(&tree_text, meta.n_labels, &tree_src)?;
        let (asg_text, asg_src) = read("assignment.txt")?;
        let assignment =
            ClusterAssignment::from_text(&asg_text, meta.n_labels, n_clusters, lambda, provenance, &asg_src)?;

        let (matcher_text, matcher_src) = read("matcher.txt")?;
        let mut matcher: Vec<Vec<WeightVector>> = vec![Vec::new(); tree.n_nodes()];
        for (k, line) in matcher_text.lines().enumerate() {
            let (node, child, w) = parse_weight_line(line, meta.n_features, &matcher_src, k + 1)?;
            let children = &tree.node(node.min(tree.n_nodes() - 1)).children;
            if node >= tree.n_nodes() || children.get(matcher[node].len()) != Some(&child) {
                return Err(Error::Parse {
                    path: matcher_src.clone(),
                    line: k + 1,
                    kind: ParseErrorKind::Malformed(format!("unexpected node/child {node} {child}")),
                });
            }
            matcher[node].push(w);
        }

        let (ranker_text, ranker_src) = read("ranker.txt")?;
        let mut ranker: Vec<Vec<LabelRanker>> = vec![Vec::new(); tree.n_leaves()];
        for (k, line) in ranker_text.lines().enumerate() {
            let (label, cluster, weights) = parse_weight_line(line, meta.n_features, &ranker_src, k + 1)?;
            if cluster >= ranker.len() {
                return Err(Error::Parse {
                    path: ranker_src.clone(),
                    line: k + 1,
                    kind: ParseErrorKind::IndexOutOfRange {
                        index: cluster,
                        dim: ranker.len(),
                    },
                });
            }
            ranker[cluster].push(LabelRanker { label, weights });
        }

        let model = Self {
            meta,
            tree,
            assignment,
            matcher,
            ranker,
        };
        model.validate()?;
        Ok(model)
    }
}

/// `nnz idx:val ...` followed by a newline.
fn write_weights(out: &mut String, w: &WeightVector) {
    write!(out, "{}", w.nnz()).unwrap();
    for (j, v) in w.indices.iter().zip(&w.values) {
        write!(out, " {j}:{v}").unwrap();
    }
    out.push('\n');
}

fn parse_weight_line(
    line: &str,
    dim: usize,
    source: &str,
    lineno: usize,
) -> Result<(usize, usize, WeightVector)> {
    let err = |msg: String| Error::Parse {
        path: source.to_string(),
        line: lineno,
        kind: ParseErrorKind::Malformed(msg),
    };
    let mut it = line.split_whitespace();
    let mut next_num = |what: &str| -> Result<usize> {
        it.next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(format!("missing or bad {what}")))
    };
    let a = next_num("first key")?;
    let b = next_num("second key")?;
    let nnz = next_num("nnz")?;
    let mut indices = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    for tok in it {
        let (j, v) = tok
            .split_once(':')
            .ok_or_else(|| err(format!("expected idx:val, got {tok:?}")))?;
        let j: usize = j.parse().map_err(|_| err(format!("bad index {j:?}")))?;
        let v: f64 = v.parse().map_err(|_| err(format!("bad value {v:?}")))?;
        if j >= dim || indices.last().is_some_and(|&p| p >= j) {
            return Err(err(format!("index {j} out of order or range")));
        }
        indices.push(j);
        values.push(v);
    }
    if indices.len() != nnz {
        return Err(err(format!("declared {nnz} entries, found {}", indices.len())));
    }
    Ok((a, b, WeightVector { dim, indices, values }))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TREE: &str = "0 - 1,2 | \n1 0 3,4 | \n2 0 5,6 | \n3 1 - | 0\n4 1 - | 1\n5 2 - | 2,4\n6 2 - | 3,4\n";

    fn wv(w: &[f64]) -> WeightVector {
        WeightVector::from_dense(w, 0.0)
    }

    fn meta(beam: usize) -> ModelMeta {
        ModelMeta {
            n_features: 3,
            n_labels: 5,
            branching: 2,
            max_leaf_size: 2,
            beam,
            seed: 0,
            dedup: DedupMode::Combined,
        }
    }

    fn matcher() -> Vec<Vec<WeightVector>> {
        vec![
            vec![wv(&[1.0, 0.0, 0.0]), wv(&[-1.0, 0.5, 0.0])],
            vec![wv(&[0.0, 1.0, 0.0]), wv(&[0.0, -1.0, 0.2])],
            vec![wv(&[0.0, 0.0, 1.0]), wv(&[0.3, 0.0, -1.0])],
            vec![],
            vec![],
            vec![],
            vec![],
        ]
    }

    fn ranker_w(label: usize, cluster: usize) -> WeightVector {
        let a = label as f64 * 0.4 - 0.7;
        let b = cluster as f64 * 0.3 - 0.2;
        wv(&[a, b, 0.5 - a * b])
    }

    fn hand_model(beam: usize) -> XmcModel {
        let tree = LabelTree::from_text(TREE, 5, "test").unwrap();
        let assignment = ClusterAssignment::new(tree.incidence(), 2, Provenance::Projected).unwrap();
        let ranker = (0..tree.n_leaves())
            .map(|c| {
                tree.leaf_labels(c)
                    .iter()
                    .map(|&label| LabelRanker {
                        label,
                        weights: ranker_w(label, c),
                    })
                    .collect()
            })
            .collect();
        XmcModel::from_parts(meta(beam), tree, assignment, matcher(), ranker).unwrap()
    }

    fn x_row() -> CsrMatrix {
        CsrMatrix::from_dense(&[vec![0.6, -0.3, 0.8]])
    }

    /// All leaf path scores by explicit enumeration, `(cluster, path)`.
    fn all_paths(x: &[f64]) -> Vec<(usize, f64)> {
        let dot = |w: &[f64]| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let m = [
            [[1.0, 0.0, 0.0], [-1.0, 0.5, 0.0]],
            [[0.0, 1.0, 0.0], [0.0, -1.0, 0.2]],
            [[0.0, 0.0, 1.0], [0.3, 0.0, -1.0]],
        ];
        let mut out = Vec::new();
        for top in 0..2 {
            for low in 0..2 {
                let path = sigmoid(dot(&m[0][top])) * sigmoid(dot(&m[1 + top][low]));
                out.push((top * 2 + low, path));
            }
        }
        out
    }

    #[test]
    fn full_beam_returns_every_leaf() {
        let x = x_row();
        let got = hand_model(4).match_leaves(x.row(0));
        let mut want = all_paths(&[0.6, -0.3, 0.8]);
        want.sort_by(|a, b| b.1.total_cmp(&a.1));
        assert_eq!(got.len(), 4);
        for ((gc, gp), (wc, wp)) in got.iter().zip(&want) {
            assert_eq!(gc, wc);
            assert!((gp - wp).abs() < 1e-15);
        }
    }

    #[test]
    fn beam_two_is_global_top_two_here() {
        // With two children per node a beam of two keeps both first-level
        // nodes, so the second level sees every leaf.
        let x = x_row();
        let got = hand_model(2).match_leaves(x.row(0));
        let mut want = all_paths(&[0.6, -0.3, 0.8]);
        want.sort_by(|a, b| b.1.total_cmp(&a.1));
        let clusters: Vec<usize> = got.iter().map(|&(c, _)| c).collect();
        assert_eq!(clusters, vec![want[0].0, want[1].0]);
    }

    #[test]
    fn beam_one_is_greedy() {
        let x = x_row();
        let got = hand_model(1).match_leaves(x.row(0));
        // Root: σ(0.6) vs σ(-0.75) picks node 1; node 1: σ(-0.3) vs σ(0.46) picks leaf 4.
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].0, 1);
    }

    #[test]
    fn match_matrix_rows_have_beam_entries() {
        let x = CsrMatrix::from_dense(&[
            vec![0.6, -0.3, 0.8],
            vec![-1.0, 0.2, 0.0],
            vec![0.0, 0.0, 0.0],
            vec![0.1, 0.9, -0.4],
        ]);
        for beam in 1..=5 {
            let m = hand_model(beam).match_matrix(&x);
            for i in 0..x.rows() {
                assert_eq!(m.row_nnz(i), beam.min(4));
            }
        }
    }

    #[test]
    fn duplicated_label_score_is_mean() {
        let merged = merge_candidates(vec![(7, 0.8, 1.0), (2, 0.5, 1.0), (7, 0.4, 1.0)], DedupMode::Combined);
        assert_eq!(merged[0], (7, (0.8 + 0.4) / 2.0));
        assert_eq!(merged[1], (2, 0.5));
        let three = merge_candidates(vec![(1, 0.9, 0.5), (1, 0.3, 1.0), (1, 0.6, 0.5)], DedupMode::Combined);
        assert!((three[0].1 - (0.45 + 0.3 + 0.3) / 3.0).abs() < 1e-15);
        let ranker_only = merge_candidates(vec![(1, 0.9, 0.5), (1, 0.3, 0.25)], DedupMode::RankerOnly);
        assert!((ranker_only[0].1 - 0.6 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn predict_averages_duplicates_from_matched_leaves() {
        let model = hand_model(4);
        let x = x_row();
        let cands = model.candidates(x.row(0));
        let occ: Vec<f64> = cands.iter().filter(|c| c.0 == 4).map(|c| c.2 * c.3).collect();
        assert_eq!(occ.len(), 2);
        let pred = model.predict(x.row(0), 10);
        let s4 = pred.iter().find(|p| p.0 == 4).unwrap().1;
        assert_eq!(s4, (occ[0] + occ[1]) / 2.0);
        assert_eq!(pred.len(), 5);
        assert!(model.predict(x.row(0), 0).is_empty());
    }

    #[test]
    fn single_incidence_model_matches_plain_scoring() {
        let tree = LabelTree::from_text(
            "0 - 1,2 | \n1 0 3,4 | \n2 0 5,6 | \n3 1 - | 0\n4 1 - | 1\n5 2 - | 2\n6 2 - | 3,4\n",
            5,
            "test",
        )
        .unwrap();
        let assignment = ClusterAssignment::from_tree(&tree).unwrap();
        let ranker = (0..4)
            .map(|c| {
                tree.leaf_labels(c)
                    .iter()
                    .map(|&label| LabelRanker {
                        label,
                        weights: ranker_w(label, c),
                    })
                    .collect()
            })
            .collect();
        let model = XmcModel::from_parts(meta(3), tree, assignment, matcher(), ranker).unwrap();
        let x = x_row();
        let mut plain: Vec<(usize, f64)> = model
            .candidates(x.row(0))
            .into_iter()
            .map(|(l, _, s, path)| (l, s * path))
            .collect();
        sort_ranked(&mut plain);
        plain.truncate(3);
        assert_eq!(model.predict(x.row(0), 3), plain);
    }

    #[test]
    fn from_parts_rejects_inconsistent_rankers() {
        let tree = LabelTree::from_text(TREE, 5, "test").unwrap();
        let assignment = ClusterAssignment::new(tree.incidence(), 2, Provenance::Projected).unwrap();
        let ranker = vec![vec![], vec![], vec![], vec![]];
        assert!(XmcModel::from_parts(meta(2), tree, assignment, matcher(), ranker).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let model = hand_model(2);
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path()).unwrap();
        let back = XmcModel::load(dir.path()).unwrap();
        assert_eq!(back, model);
        let x = x_row();
        assert_eq!(back.predict(x.row(0), 5), model.predict(x.row(0), 5));
    }

    #[test]
    fn load_reports_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(XmcModel::load(dir.path()), Err(Error::MissingFile(_))));
    }
}

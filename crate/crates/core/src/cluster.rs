//! Label embeddings and the hierarchical label tree.
//!
//! Labels are embedded by positive-instance feature aggregation (the
//! normalized sum of the feature rows of their positive instances) and
//! recursively split with balanced spherical k-means until every leaf holds at
//! most `max_leaf_size` labels. Leaves are the label clusters `S_1..S_K`.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, ParseErrorKind, Result};
use crate::matrices::{CsrMatrix, RowView};

const KMEANS_MAX_ITER: usize = 20;
const KMEANS_REL_TOL: f64 = 1e-4;

/// Label embeddings (L×d) with a flag for labels that have no positive instance.
#[derive(Debug, Clone)]
pub struct LabelEmbeddings {
    pub embeddings: CsrMatrix,
    pub empty: Vec<bool>,
}

/// Row `l` is the unit-normalized sum of the feature rows of label `l`'s positives.
pub fn pifa_embeddings(x: &CsrMatrix, y: &CsrMatrix) -> Result<LabelEmbeddings> {
    if x.rows() != y.rows() {
        return Err(Error::DimensionMismatch {
            op: "pifa_embeddings",
            left: x.shape(),
            right: y.shape(),
        });
    }
    let embeddings = y.transpose().matmul(x)?.normalize_rows();
    let empty = (0..embeddings.rows())
        .map(|l| embeddings.row_nnz(l) == 0)
        .collect();
    Ok(LabelEmbeddings { embeddings, empty })
}

fn normalize_dense(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn centroid(points: &CsrMatrix, members: &[usize]) -> Vec<f64> {
    let mut c = vec![0.0; points.cols()];
    for &i in members {
        for (j, v) in points.row(i).iter() {
            c[j] += v;
        }
    }
    normalize_dense(&mut c);
    c
}

fn dense_of(row: RowView<'_>, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for (j, x) in row.iter() {
        v[j] = x;
    }
    v
}

fn converged(prev: f64, obj: f64) -> bool {
    (obj - prev).abs() <= KMEANS_REL_TOL * prev.abs().max(f64::MIN_POSITIVE)
}

/// Balanced spherical 2-means over `members`; returns `(left, right)` with
/// `left.len() == ceil(m / 2)`.
fn balanced_two_means(
    points: &CsrMatrix,
    members: &[usize],
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let m = members.len();
    let half = m.div_ceil(2);
    let seeds = sample(rng, m, 2);
    let mut c0 = dense_of(points.row(members[seeds.index(0)]), points.cols());
    let mut c1 = dense_of(points.row(members[seeds.index(1)]), points.cols());
    let mut order: Vec<usize> = members.to_vec();
    let mut prev_obj = f64::NEG_INFINITY;
    for _ in 0..KMEANS_MAX_ITER {
        let scored: Vec<(usize, f64, f64)> = members
            .par_iter()
            .map(|&i| {
                let r = points.row(i);
                (i, r.dot_dense(&c0), r.dot_dense(&c1))
            })
            .collect();
        let mut ranked: Vec<(usize, f64, f64)> = scored;
        ranked.sort_by(|a, b| (b.1 - b.2).total_cmp(&(a.1 - a.2)).then(a.0.cmp(&b.0)));
        let obj: f64 = ranked[..half].iter().map(|t| t.1).sum::<f64>()
            + ranked[half..].iter().map(|t| t.2).sum::<f64>();
        order = ranked.iter().map(|t| t.0).collect();
        c0 = centroid(points, &order[..half]);
        c1 = centroid(points, &order[half..]);
        if converged(prev_obj, obj) {
            break;
        }
        prev_obj = obj;
    }
    let mut left = order[..half].to_vec();
    let mut right = order[half..].to_vec();
    left.sort_unstable();
    right.sort_unstable();
    (left, right)
}

/// Spherical k-means with a greedy capacity-constrained assignment step that
/// keeps group sizes within one of each other.
fn balanced_k_way(
    points: &CsrMatrix,
    members: &[usize],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let m = members.len();
    let base = m / k;
    let n_large = m % k;
    let mut centroids: Vec<Vec<f64>> = sample(rng, m, k)
        .into_iter()
        .map(|s| dense_of(points.row(members[s]), points.cols()))
        .collect();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut prev_obj = f64::NEG_INFINITY;
    for _ in 0..KMEANS_MAX_ITER {
        let sims: Vec<Vec<f64>> = members
            .par_iter()
            .map(|&i| {
                let r = points.row(i);
                centroids.iter().map(|c| r.dot_dense(c)).collect()
            })
            .collect();
        let mut pairs: Vec<(usize, usize)> = (0..m).flat_map(|p| (0..k).map(move |g| (p, g))).collect();
        pairs.sort_by(|a, b| {
            sims[b.0][b.1]
                .total_cmp(&sims[a.0][a.1])
                .then(a.0.cmp(&b.0))
                .then(a.1.cmp(&b.1))
        });
        let mut owner = vec![usize::MAX; m];
        let mut sizes = vec![0usize; k];
        let mut large_used = 0;
        let mut obj = 0.0;
        for (p, g) in pairs {
            if owner[p] != usize::MAX {
                continue;
            }
            let room = sizes[g] < base || (sizes[g] == base && large_used < n_large);
            if !room {
                continue;
            }
            if sizes[g] == base {
                large_used += 1;
            }
            owner[p] = g;
            sizes[g] += 1;
            obj += sims[p][g];
        }
        groups = vec![Vec::new(); k];
        for (p, &g) in owner.iter().enumerate() {
            groups[g].push(members[p]);
        }
        centroids = groups.iter().map(|g| centroid(points, g)).collect();
        if converged(prev_obj, obj) {
            break;
        }
        prev_obj = obj;
    }
    groups
}

fn split_members(
    points: &CsrMatrix,
    members: &[usize],
    b: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    if b == 1 {
        return vec![members.to_vec()];
    }
    if b.is_power_of_two() {
        let (left, right) = balanced_two_means(points, members, rng);
        let mut out = split_members(points, &left, b / 2, rng);
        out.extend(split_members(points, &right, b / 2, rng));
        out
    } else {
        balanced_k_way(points, members, b, rng)
    }
}

/// Partitions the rows of `points` into `b` groups whose sizes differ by at most one.
///
/// Returns the group id of every point. Powers of two use recursive balanced
/// 2-means; other `b` use a capacity-constrained k-means.
pub fn balanced_kmeans(points: &CsrMatrix, b: usize, seed: u64) -> Result<Vec<usize>> {
    if b == 0 {
        return Err(invalid("number of groups must be positive"));
    }
    if b > points.rows() {
        return Err(invalid(format!(
            "cannot split {} points into {b} groups",
            points.rows()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members: Vec<usize> = (0..points.rows()).collect();
    let groups = split_members(points, &members, b, &mut rng);
    let mut assignment = vec![0; points.rows()];
    for (g, group) in groups.iter().enumerate() {
        for &p in group {
            assignment[p] = g;
        }
    }
    Ok(assignment)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Cluster id when this node is a leaf.
    pub leaf: Option<usize>,
    /// Label set; only populated on leaves.
    pub labels: Vec<usize>,
}

/// Fixed-topology label tree. Node ids follow breadth-first order with the
/// root at 0; cluster ids number the leaves in the same order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTree {
    nodes: Vec<TreeNode>,
    leaves: Vec<usize>,
    n_labels: usize,
}

impl LabelTree {
    /// A single leaf holding all labels.
    pub fn flat(n_labels: usize) -> Self {
        Self {
            nodes: vec![TreeNode {
                parent: None,
                children: vec![],
                leaf: Some(0),
                labels: (0..n_labels).collect(),
            }],
            leaves: vec![0],
            n_labels,
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    /// Number of leaf clusters `K`.
    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaf_node(&self, cluster: usize) -> usize {
        self.leaves[cluster]
    }

    pub fn leaf_labels(&self, cluster: usize) -> &[usize] {
        &self.nodes[self.leaves[cluster]].labels
    }

    /// Length of the longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        for (id, node) in self.nodes.iter().enumerate() {
            for &c in &node.children {
                depth[c] = depth[id] + 1;
            }
        }
        depth.into_iter().max().unwrap_or(0)
    }

    /// Internal node ids in breadth-first order.
    pub fn internal_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| !self.nodes[i].children.is_empty())
    }

    /// Cluster ids of every leaf below `node` (itself included).
    pub fn leaves_under(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            let nd = &self.nodes[n];
            if let Some(c) = nd.leaf {
                out.push(c);
            }
            stack.extend(nd.children.iter().rev());
        }
        out.sort_unstable();
        out
    }

    /// Rewrites leaf label sets from an `L×K` incidence matrix. Topology is untouched.
    pub fn set_leaf_labels(&mut self, incidence: &CsrMatrix) -> Result<()> {
        if incidence.rows() != self.n_labels || incidence.cols() != self.n_leaves() {
            return Err(invalid(format!(
                "assignment is {} but tree has {} labels and {} leaves",
                incidence.shape(),
                self.n_labels,
                self.n_leaves()
            )));
        }
        let by_cluster = incidence.transpose();
        for (cluster, &node) in self.leaves.iter().enumerate() {
            self.nodes[node].labels = by_cluster.row(cluster).indices.to_vec();
        }
        Ok(())
    }

    /// `L×K` incidence of the current leaf label sets.
    pub fn incidence(&self) -> CsrMatrix {
        let mut rows = vec![Vec::new(); self.n_labels];
        for (cluster, &node) in self.leaves.iter().enumerate() {
            for &l in &self.nodes[node].labels {
                rows[l].push(cluster);
            }
        }
        CsrMatrix::from_patterns(self.leaves.len(), rows).expect("cluster ids in range")
    }

    /// One line per node: `id parent child_ids | label_ids`, with `-` for none.
    pub fn to_text(&self) -> String {
        let join = |v: &[usize]| {
            if v.is_empty() {
                "-".to_string()
            } else {
                v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
            }
        };
        let mut s = String::new();
        for (id, node) in self.nodes.iter().enumerate() {
            let parent = node.parent.map_or("-".to_string(), |p| p.to_string());
            let labels = if node.leaf.is_some() {
                node.labels.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
            } else {
                String::new()
            };
            writeln!(s, "{id} {parent} {} | {labels}", join(&node.children)).unwrap();
        }
        s
    }

    pub fn from_text(text: &str, n_labels: usize, source: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: source.to_string(),
            line,
            kind: ParseErrorKind::Malformed(msg),
        };
        let parse_list = |s: &str, line: usize| -> Result<Vec<usize>> {
            if s.is_empty() || s == "-" {
                return Ok(vec![]);
            }
            s.split(',')
                .map(|t| {
                    t.parse()
                        .map_err(|_| err(line, format!("bad index {t:?}")))
                })
                .collect()
        };
        let mut nodes = Vec::new();
        let mut leaves = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let (head, labels) = raw
                .split_once('|')
                .ok_or_else(|| err(line, "missing '|'".into()))?;
            let parts: Vec<&str> = head.split_whitespace().collect();
            let [id, parent, children] = parts[..] else {
                return Err(err(line, format!("expected 'id parent children', got {head:?}")));
            };
            if id.parse::<usize>().ok() != Some(nodes.len()) {
                return Err(err(line, format!("node ids must be consecutive, got {id}")));
            }
            let parent = match parent {
                "-" => None,
                p => Some(p.parse().map_err(|_| err(line, format!("bad parent {p:?}")))?),
            };
            let children = parse_list(children, line)?;
            let labels = parse_list(labels.trim(), line)?;
            if labels.iter().any(|&l| l >= n_labels) {
                return Err(err(line, "label id out of range".into()));
            }
            let leaf = if children.is_empty() {
                leaves.push(nodes.len());
                Some(leaves.len() - 1)
            } else {
                None
            };
            nodes.push(TreeNode {
                parent,
                children,
                leaf,
                labels,
            });
        }
        if nodes.is_empty() {
            return Err(err(1, "empty tree".into()));
        }
        for (id, node) in nodes.iter().enumerate() {
            if node.children.iter().any(|&c| c >= nodes.len() || nodes[c].parent != Some(id)) {
                return Err(err(id + 1, "child/parent links disagree".into()));
            }
        }
        Ok(Self {
            nodes,
            leaves,
            n_labels,
        })
    }
}

/// Recursively splits labels with balanced `b`-way k-means until every leaf
/// holds at most `max_leaf_size` labels.
///
/// Labels with an all-zero embedding are dealt, one at a time, to the
/// currently smallest child of each split.
pub fn build_tree(
    label_embs: &CsrMatrix,
    b: usize,
    max_leaf_size: usize,
    seed: u64,
) -> Result<LabelTree> {
    if b < 2 {
        return Err(invalid("branching factor must be at least 2"));
    }
    if max_leaf_size == 0 {
        return Err(invalid("max_leaf_size must be positive"));
    }
    let n_labels = label_embs.rows();
    if n_labels == 0 {
        return Err(invalid("cannot build a tree over zero labels"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut leaves = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    queue.push_back((None::<usize>, (0..n_labels).collect::<Vec<usize>>()));
    while let Some((parent, labels)) = queue.pop_front() {
        let id = nodes.len();
        if let Some(p) = parent {
            nodes[p].children.push(id);
        }
        if labels.len() <= max_leaf_size {
            leaves.push(id);
            nodes.push(TreeNode {
                parent,
                children: vec![],
                leaf: Some(leaves.len() - 1),
                labels,
            });
            continue;
        }
        nodes.push(TreeNode {
            parent,
            children: vec![],
            leaf: None,
            labels: vec![],
        });
        let k = b.min(labels.len());
        let (dense, empty): (Vec<usize>, Vec<usize>) =
            labels.iter().partition(|&&l| label_embs.row_nnz(l) > 0);
        let mut groups = if dense.len() >= k {
            split_members(label_embs, &dense, k, &mut rng)
        } else {
            let mut g: Vec<Vec<usize>> = dense.iter().map(|&l| vec![l]).collect();
            g.resize(k, Vec::new());
            g
        };
        for l in empty {
            let smallest = (0..k).min_by_key(|&g| (groups[g].len(), g)).unwrap();
            groups[smallest].push(l);
        }
        for mut g in groups {
            g.sort_unstable();
            queue.push_back((Some(id), g));
        }
    }
    Ok(LabelTree {
        nodes,
        leaves,
        n_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pifa_single_positive_is_normalized_row() {
        let x = CsrMatrix::from_dense(&[vec![3.0, 4.0]]);
        let y = CsrMatrix::from_dense(&[vec![1.0]]);
        let e = pifa_embeddings(&x, &y).unwrap();
        assert!((e.embeddings.get(0, 0) - 0.6).abs() < 1e-12);
        assert!((e.embeddings.get(0, 1) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn pifa_accumulates_and_flags_empty() {
        let x = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let y = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![1.0, 0.0]]);
        let e = pifa_embeddings(&x, &y).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((e.embeddings.get(0, 0) - h).abs() < 1e-12);
        assert!((e.embeddings.get(0, 1) - h).abs() < 1e-12);
        assert_eq!(e.empty, vec![false, true]);
        assert_eq!(e.embeddings.row_nnz(1), 0);
    }

    fn sizes(assign: &[usize], b: usize) -> Vec<usize> {
        let mut s = vec![0; b];
        for &g in assign {
            s[g] += 1;
        }
        s
    }

    #[test]
    fn kmeans_identical_points_balanced() {
        let p = CsrMatrix::from_dense(&vec![vec![1.0, 0.0]; 4]);
        let a = balanced_kmeans(&p, 2, 7).unwrap();
        assert_eq!(sizes(&a, 2), vec![2, 2]);
    }

    #[test]
    fn kmeans_errors() {
        let p = CsrMatrix::from_dense(&vec![vec![1.0, 0.0]; 3]);
        assert!(balanced_kmeans(&p, 0, 0).is_err());
        assert!(balanced_kmeans(&p, 4, 0).is_err());
    }

    /// Exhaustive oracle: best balanced 2-partition under the spherical objective
    /// (sum of norms of the two group sums).
    fn best_two_partition(points: &[Vec<f64>]) -> Vec<usize> {
        let n = points.len();
        let mut best = (f64::NEG_INFINITY, 0u32);
        for mask in 0u32..1 << n {
            if mask.count_ones() as usize != n.div_ceil(2) || mask & 1 == 0 {
                continue;
            }
            let mut s = [vec![0.0; points[0].len()], vec![0.0; points[0].len()]];
            for (i, p) in points.iter().enumerate() {
                let g = usize::from(mask >> i & 1 == 0);
                for (j, v) in p.iter().enumerate() {
                    s[g][j] += v;
                }
            }
            let obj: f64 = s.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).sum();
            if obj > best.0 {
                best = (obj, mask);
            }
        }
        (0..n).map(|i| usize::from(best.1 >> i & 1 == 0)).collect()
    }

    #[test]
    fn kmeans_recovers_separated_pairs() {
        let raw = vec![
            vec![1.0, 0.05],
            vec![1.0, 0.1],
            vec![0.05, 1.0],
            vec![0.1, 1.0],
        ];
        let p = CsrMatrix::from_dense(&raw).normalize_rows();
        let oracle = best_two_partition(&p.to_dense());
        for seed in 0..5 {
            let a = balanced_kmeans(&p, 2, seed).unwrap();
            let same = a.iter().zip(&oracle).all(|(x, y)| x == y);
            let flipped = a.iter().zip(&oracle).all(|(x, y)| x != y);
            assert!(same || flipped, "seed {seed}: {a:?} vs {oracle:?}");
        }
    }

    #[test]
    fn kmeans_sizes_independent_of_seed() {
        let raw: Vec<Vec<f64>> = (0..11)
            .map(|i| vec![(i as f64).cos(), (i as f64).sin(), 0.3])
            .collect();
        let p = CsrMatrix::from_dense(&raw).normalize_rows();
        for b in [2, 3, 4, 5] {
            let mut reference: Option<Vec<usize>> = None;
            for seed in 0..4 {
                let mut s = sizes(&balanced_kmeans(&p, b, seed).unwrap(), b);
                s.sort_unstable();
                assert!(s[b - 1] - s[0] <= 1, "b={b} sizes {s:?}");
                if let Some(r) = &reference {
                    assert_eq!(&s, r);
                }
                reference = Some(s);
            }
        }
    }

    fn spread_embeddings(l: usize, d: usize) -> CsrMatrix {
        let rows: Vec<Vec<f64>> = (0..l)
            .map(|i| (0..d).map(|j| ((i * 7 + j * 3) % 5) as f64 + 0.1).collect())
            .collect();
        CsrMatrix::from_dense(&rows).normalize_rows()
    }

    #[test]
    fn tree_sixteen_labels_binary() {
        let tree = build_tree(&spread_embeddings(16, 4), 2, 4, 1).unwrap();
        assert_eq!(tree.n_leaves(), 4);
        assert_eq!(tree.depth(), 2);
        for c in 0..4 {
            assert_eq!(tree.leaf_labels(c).len(), 4);
        }
        let inc = tree.incidence();
        assert!((0..16).all(|l| inc.row_nnz(l) == 1));
    }

    #[test]
    fn tree_single_leaf_cases() {
        let t = build_tree(&spread_embeddings(5, 3), 2, 8, 0).unwrap();
        assert_eq!(t.n_leaves(), 1);
        let t = build_tree(&spread_embeddings(100, 3), 32, 100, 0).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn tree_balanced_and_deterministic() {
        let mut rows = spread_embeddings(37, 6).to_dense();
        rows[3] = vec![0.0; 6];
        rows[20] = vec![0.0; 6];
        let emb = CsrMatrix::from_dense(&rows);
        let a = build_tree(&emb, 3, 4, 9).unwrap();
        let b = build_tree(&emb, 3, 4, 9).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        for id in a.internal_nodes() {
            let sizes: Vec<usize> = a
                .node(id)
                .children
                .iter()
                .map(|&c| a.leaves_under(c).iter().map(|&k| a.leaf_labels(k).len()).sum())
                .collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
        let mut all: Vec<usize> = (0..a.n_leaves()).flat_map(|c| a.leaf_labels(c).to_vec()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..37).collect::<Vec<_>>());
        assert!((0..a.n_leaves()).all(|c| a.leaf_labels(c).len() <= 4));
    }

    #[test]
    fn tree_text_round_trip() {
        let t = build_tree(&spread_embeddings(16, 4), 2, 4, 3).unwrap();
        let back = LabelTree::from_text(&t.to_text(), 16, "mem").unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn leaf_rewrite_keeps_topology() {
        let mut t = build_tree(&spread_embeddings(8, 4), 2, 4, 0).unwrap();
        let topo: Vec<_> = t.nodes().iter().map(|n| n.children.clone()).collect();
        let inc = CsrMatrix::from_patterns(2, (0..8).map(|l| if l == 0 { vec![0, 1] } else { vec![l % 2] })).unwrap();
        t.set_leaf_labels(&inc).unwrap();
        assert_eq!(t.incidence(), inc);
        assert_eq!(topo, t.nodes().iter().map(|n| n.children.clone()).collect::<Vec<_>>());
    }
}

//! Synthetic multi-modal labels.
//!
//! [`fuse_labels`] merges groups of `k` labels into one fake label (OR over
//! their columns) so that every fused label carries several unrelated
//! meanings:
//!
//! * `easy`: groups are clusters of a balanced `ceil(L/k)`-means over the
//!   label embeddings, so merged labels are similar;
//! * `medium`: a balanced `ceil(L/(w·k))`-means first forms coarse clusters of
//!   about `w·k` labels (`w = 32` by default), then each is shuffled into
//!   groups of `k`;
//! * `hard`: all labels are shuffled into groups of `k`.
//!
//! The generators below build small corpora with planted structure for tests.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cluster::{balanced_kmeans, pifa_embeddings};
use crate::dataio::Dataset;
use crate::error::{invalid, Error, Result};
use crate::matrices::CsrMatrix;

pub const DEFAULT_GROUP_WIDTH: usize = 32;
/// Merge factors offered by the CLI.
pub const MERGE_PRESETS: [usize; 4] = [2, 5, 10, 20];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMode {
    Easy,
    Medium,
    Hard,
}

impl FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "easy" => Ok(FusionMode::Easy),
            "medium" => Ok(FusionMode::Medium),
            "hard" => Ok(FusionMode::Hard),
            other => Err(invalid(format!("unknown fusion mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FusionSpec {
    pub mode: FusionMode,
    pub merge_k: usize,
    pub seed: u64,
    pub group_width: usize,
}

impl FusionSpec {
    pub fn new(mode: FusionMode, merge_k: usize, seed: u64) -> Self {
        Self {
            mode,
            merge_k,
            seed,
            group_width: DEFAULT_GROUP_WIDTH,
        }
    }
}

/// `mapping[f]` lists the original labels merged into fused label `f`.
pub type FusionMapping = Vec<Vec<usize>>;

fn chunk_shuffled(mut labels: Vec<usize>, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    labels.shuffle(rng);
    labels
        .chunks(k)
        .map(|c| {
            let mut c = c.to_vec();
            c.sort_unstable();
            c
        })
        .collect()
}

fn kmeans_groups(data: &Dataset, n_groups: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let emb = pifa_embeddings(&data.x, &data.y)?;
    let assign = balanced_kmeans(&emb.embeddings, n_groups, seed)?;
    let mut groups = vec![Vec::new(); n_groups];
    for (l, &g) in assign.iter().enumerate() {
        groups[g].push(l);
    }
    Ok(groups)
}

/// Merges label columns according to `spec`. Features are untouched.
pub fn fuse_labels(data: &Dataset, spec: &FusionSpec) -> Result<(Dataset, FusionMapping)> {
    let l = data.n_labels();
    let k = spec.merge_k;
    if k < 2 {
        return Err(invalid("merge_k must be at least 2"));
    }
    if l < k {
        return Err(invalid(format!("cannot merge groups of {k} out of {l} labels")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mapping = match spec.mode {
        FusionMode::Hard => chunk_shuffled((0..l).collect(), k, &mut rng),
        FusionMode::Easy => kmeans_groups(data, l.div_ceil(k), spec.seed)?,
        FusionMode::Medium => {
            let width = spec.group_width.max(1) * k;
            if l < width {
                return Err(invalid(format!(
                    "medium mode needs at least {width} labels, have {l}"
                )));
            }
            let coarse = kmeans_groups(data, l.div_ceil(width), spec.seed)?;
            coarse
                .into_iter()
                .flat_map(|g| chunk_shuffled(g, k, &mut rng))
                .collect()
        }
    };
    let fused = apply_fusion(data, &mapping)?;
    Ok((fused, mapping))
}

/// Rewrites `data`'s labels through an existing mapping, e.g. to fuse a test
/// split the same way as its training split.
pub fn apply_fusion(data: &Dataset, mapping: &FusionMapping) -> Result<Dataset> {
    let l = data.n_labels();
    let mut new_of = vec![usize::MAX; l];
    for (f, group) in mapping.iter().enumerate() {
        for &o in group {
            if o >= l || new_of[o] != usize::MAX {
                return Err(invalid(format!("label {o} is out of range or mapped twice")));
            }
            new_of[o] = f;
        }
    }
    if new_of.contains(&usize::MAX) {
        return Err(invalid("mapping does not cover every label"));
    }
    let rows: Vec<Vec<usize>> = (0..data.n_instances())
        .map(|i| data.y.row(i).indices.iter().map(|&o| new_of[o]).collect())
        .collect();
    let y = CsrMatrix::from_patterns(mapping.len(), rows)?;
    Dataset::new(data.x.clone(), y)
}

/// `fused_id: orig_id,orig_id,...` lines.
pub fn mapping_to_text(mapping: &FusionMapping) -> String {
    let mut s = String::new();
    for (f, group) in mapping.iter().enumerate() {
        let ids: Vec<String> = group.iter().map(usize::to_string).collect();
        writeln!(s, "{f}: {}", ids.join(",")).unwrap();
    }
    s
}

/// Which part of the bimodal toy an instance was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyMode {
    /// The two-meaning label in its larger mode (region A).
    FusedMajority,
    /// The two-meaning label in its smaller mode (region B).
    FusedMinority,
    /// A single-meaning distractor label.
    Distractor,
}

#[derive(Debug, Clone)]
pub struct BimodalToy {
    pub data: Dataset,
    pub fused_label: usize,
    pub modes: Vec<ToyMode>,
}

pub const TOY_DISTRACTORS_PER_REGION: usize = 4;
const TOY_KEEP_PROB: f64 = 0.6;

/// Two feature regions, each with its own distractor labels, plus label 0
/// whose positives come from both regions.
///
/// Features are split into twelve equal blocks of width `w = d / 12`: block 0
/// is region A's shared block, blocks 1..=5 are region A's label blocks (fused
/// mode first), and blocks 6..=11 mirror that for region B. An instance keeps
/// each feature of its region's shared block and of its label block with
/// probability 0.6 and then gets `w` background features drawn uniformly from
/// all `d`. The fused label has `n_per_mode` instances in region A and
/// `n_per_mode / 2` in region B; every distractor has `n_per_mode`.
///
/// The noise keeps the matcher from routing every minority-mode instance back
/// to the fused label's home cluster, which is the situation overlapping
/// clusters are meant to repair. The block layout is fixed, so toys drawn with
/// different seeds share their geometry and differ only in noise.
pub fn make_bimodal_toy(n_per_mode: usize, d: usize, seed: u64) -> Result<BimodalToy> {
    if d < 12 {
        return Err(invalid("bimodal toy needs at least 12 features"));
    }
    if n_per_mode < 2 {
        return Err(invalid("bimodal toy needs at least 2 instances per mode"));
    }
    let width = d / 12;
    let block = |b: usize| b * width..(b + 1) * width;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d_per = TOY_DISTRACTORS_PER_REGION;

    // (region, label block within region, label, mode, count)
    let mut plan: Vec<(usize, usize, usize, ToyMode, usize)> = vec![
        (0, 0, 0, ToyMode::FusedMajority, n_per_mode),
        (1, 0, 0, ToyMode::FusedMinority, n_per_mode / 2),
    ];
    for region in 0..2 {
        for k in 0..d_per {
            plan.push((region, k + 1, 1 + region * d_per + k, ToyMode::Distractor, n_per_mode));
        }
    }
    let mut x_rows = Vec::new();
    let mut y_rows = Vec::new();
    let mut modes = Vec::new();
    for (region, label_block, label, mode, count) in plan {
        let shared = block(region * 6);
        let own = block(region * 6 + 1 + label_block);
        for _ in 0..count {
            let mut row: Vec<(usize, f64)> = Vec::new();
            for j in shared.clone().chain(own.clone()) {
                if rng.random_bool(TOY_KEEP_PROB) {
                    row.push((j, rng.random_range(0.5..1.5)));
                }
            }
            for _ in 0..width {
                row.push((rng.random_range(0..d), rng.random_range(0.5..1.5)));
            }
            x_rows.push(row);
            y_rows.push(vec![label]);
            modes.push(mode);
        }
    }
    let x = CsrMatrix::from_rows(d, x_rows)?.normalize_rows();
    let y = CsrMatrix::from_patterns(1 + 2 * d_per, y_rows)?;
    Ok(BimodalToy {
        data: Dataset::new(x, y)?,
        fused_label: 0,
        modes,
    })
}

/// Shape of a topic-model corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopicCorpusSpec {
    pub n_train: usize,
    pub n_test: usize,
    pub n_labels: usize,
    pub n_features: usize,
    /// Labels are dealt round-robin into this many topics.
    pub n_topics: usize,
    /// Vocabulary shared by a topic's labels.
    pub words_per_topic: usize,
    /// Signature words per label.
    pub words_per_label: usize,
    /// Words sampled from each of an instance's label signatures.
    pub words_per_instance: usize,
    /// Words sampled from the instance's topic vocabulary.
    pub topic_words: usize,
    /// Background words drawn uniformly.
    pub noise_words: usize,
    /// Instances carry `1..=max_labels_per_instance` labels, uniformly.
    pub max_labels_per_instance: usize,
}

impl Default for TopicCorpusSpec {
    fn default() -> Self {
        Self {
            n_train: 5000,
            n_test: 1000,
            n_labels: 500,
            n_features: 2000,
            n_topics: 50,
            words_per_topic: 30,
            words_per_label: 10,
            words_per_instance: 4,
            topic_words: 4,
            noise_words: 4,
            max_labels_per_instance: 4,
        }
    }
}

/// Bag-of-words corpus with topical label structure. Each instance picks a
/// topic, draws a few distinct labels of that topic, and mixes words from
/// their signatures, from the topic vocabulary and from background noise.
/// Train and test share topics and signatures. Rows are unit-normalized.
pub fn make_topic_corpus(spec: &TopicCorpusSpec, seed: u64) -> Result<(Dataset, Dataset)> {
    let vocab_ok = spec.n_features >= spec.words_per_label.max(spec.words_per_topic);
    if spec.n_labels == 0 || spec.n_topics == 0 || spec.n_topics > spec.n_labels || !vocab_ok {
        return Err(invalid("topic corpus needs labels, topics and enough features"));
    }
    if spec.words_per_label == 0 || spec.max_labels_per_instance == 0 {
        return Err(invalid("topic corpus needs label words and at least one label per instance"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample_words = |k: usize, rng: &mut ChaCha8Rng| -> Vec<usize> {
        rand::seq::index::sample(rng, spec.n_features, k).into_vec()
    };
    let signatures: Vec<Vec<usize>> = (0..spec.n_labels)
        .map(|_| sample_words(spec.words_per_label, &mut rng))
        .collect();
    let topic_vocab: Vec<Vec<usize>> = (0..spec.n_topics)
        .map(|_| sample_words(spec.words_per_topic, &mut rng))
        .collect();
    let topic_labels: Vec<Vec<usize>> = (0..spec.n_topics)
        .map(|t| (t..spec.n_labels).step_by(spec.n_topics).collect())
        .collect();

    let draw = |n: usize, rng: &mut ChaCha8Rng| -> Result<Dataset> {
        let mut x_rows = Vec::with_capacity(n);
        let mut y_rows = Vec::with_capacity(n);
        for _ in 0..n {
            let t = rng.random_range(0..spec.n_topics);
            let pool = &topic_labels[t];
            let count = rng.random_range(1..=spec.max_labels_per_instance).min(pool.len());
            let labels: Vec<usize> = pool.choose_multiple(rng, count).copied().collect();
            let mut row = Vec::new();
            for &l in &labels {
                for _ in 0..spec.words_per_instance {
                    row.push((signatures[l][rng.random_range(0..spec.words_per_label)], 1.0));
                }
            }
            if spec.words_per_topic > 0 {
                for _ in 0..spec.topic_words {
                    row.push((topic_vocab[t][rng.random_range(0..spec.words_per_topic)], 1.0));
                }
            }
            for _ in 0..spec.noise_words {
                row.push((rng.random_range(0..spec.n_features), 1.0));
            }
            x_rows.push(row);
            y_rows.push(labels);
        }
        let x = CsrMatrix::from_rows(spec.n_features, x_rows)?.normalize_rows();
        Dataset::new(x, CsrMatrix::from_patterns(spec.n_labels, y_rows)?)
    };
    let train = draw(spec.n_train, &mut rng)?;
    let test = draw(spec.n_test, &mut rng)?;
    Ok((train, test))
}

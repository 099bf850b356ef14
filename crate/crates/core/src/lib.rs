//! Partition-based extreme multi-label classification with overlapping label
//! clusters.
//!
//! A model routes each instance through a label tree (the matcher) to a few
//! leaf clusters and scores the labels found there (the ranker). Refinement
//! lets a label sit in up to `λ` clusters, chosen from where the trained
//! matcher actually sends that label's instances.

pub mod cluster;
pub mod dataio;
pub mod error;
pub mod eval;
pub mod linear;
pub mod matrices;
pub mod model;
pub mod overlap;
pub mod synth;
pub mod train;

pub use cluster::{build_tree, pifa_embeddings, LabelTree};
pub use dataio::{load_dataset, save_dataset, Dataset, Prediction};
pub use error::{Error, Result};
pub use matrices::CsrMatrix;
pub use model::{DedupMode, XmcModel};
pub use overlap::{project_assignment, ClusterAssignment, Provenance};
pub use train::{refine, train_baseline, AssignmentStrategy, RefineOptions, TrainConfig};

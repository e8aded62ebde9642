//! Pair-level graph embeddings.
//!
//! The embedding unit is the *ordered node pair*: every undirected edge
//! `{u, v}` yields the units `(u, v)` and `(v, u)`. A multi-self-supervised
//! autoencoder embeds each pair by reconstructing two feature
//! distributions — the pair's own concatenated features and the
//! concatenated neighbor-mean features of its endpoints — and a translator
//! folds pair embeddings back into node embeddings for node-level tasks.
//!
//! The high-level flow:
//!
//! ```no_run
//! use paire::{load_graph, pair_inputs, train, PairSet, TrainConfig};
//! use std::path::Path;
//!
//! let (graph, x) = load_graph(
//!     Path::new("data/cora/cora.content"),
//!     Path::new("data/cora/cora.cites"),
//! )?;
//! let pairs = PairSet::build(&graph);
//! let inputs = pair_inputs(&graph, &x, pairs.pairs())?;
//! let (model, report) = train::<f32>(&TrainConfig::default(), &inputs)?;
//! let z = model.embed(&inputs)?;
//! println!("embedded {} pairs, final loss {:.4}",
//!          z.nrows(), report.epoch_losses.last().unwrap());
//! # Ok::<(), paire::Error>(())
//! ```

pub mod embedding;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod model;
pub mod translate;

pub use embedding::{read_embeddings, EmbeddingKind, EmbeddingTable, NodeTable, PairTable};
pub use error::Error;
pub use eval::{run_task, EvalConfig, EvalReport, Task};
pub use features::{mean_aggregate, node_inputs, pair_inputs, FeatureMatrix, ModelInputs, SparseVec};
pub use graph::{load_graph, DisjointSet, Graph, NodeId, Pair, PairSet};
pub use model::{
    kl_div, softmax_row, train, Autoencoder, ForwardOutput, ModelDims, PreparedInputs, Real,
    TrainConfig, TrainReport, Trainer,
};
pub use translate::{translate, translate_table, TranslatorMode};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

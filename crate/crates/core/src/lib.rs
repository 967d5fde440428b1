//! Lossy summarization of large attributed graphs by agglomerative
//! supernode merging with weighted candidate sampling and sketch-based
//! score approximation, plus budgeted sparsification and summary-only
//! query answering.

pub mod error;
pub mod eval;
pub mod graph;
pub mod query;
pub mod sampling;
pub mod score;
pub mod sketch;
pub mod sparsify;
pub mod summarize;
pub mod summary;
pub mod synthetic;
pub mod util;

pub use error::{Error, Result};
pub use graph::{AttributeTable, Graph, VertexId};
pub use sampling::SamplingTree;
pub use score::{node_weight, PairScore, ScoreMode, ScoreParams};
pub use sketch::{NodeSketch, SketchParams, SketchPolicy, SketchStore};
pub use sparsify::{sparsify, RankingKey, SparsifyPlan};
pub use summarize::{summarize, MergeTrace, SamplePolicy, SummarizerConfig};
pub use summary::{NormOrder, SuperId, Summary};

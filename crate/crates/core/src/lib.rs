//! Supervised scaling of political texts: term matrices, topic features
//! (LSA and LDA), tree ensembles, Wordscores, and evaluation against
//! reference scores.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod lda;
pub mod lsa;
pub mod pipeline;
pub mod synth;
pub mod table;
pub mod trees;
pub mod wordscores;

pub use corpus::{DocKey, RawDocument, SparseTermMatrix};
pub use error::{Error, Result};
pub use pipeline::{run_batch, Approach, BatchSpec, CorpusInputs, FeatureCache, TrainSplit};
pub use table::{ScoreRow, ScoreTable};

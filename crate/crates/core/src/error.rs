use std::io;

use thiserror::Error;

use crate::corpus::DocKey;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate document key {0}")]
    DuplicateKey(DocKey),

    #[error("document key {0} not found")]
    MissingKey(DocKey),

    #[error("invalid document key: {0}")]
    InvalidKey(String),

    #[error("corpus variant B requires a non-empty stoplist")]
    EmptyStoplist,

    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("k = {k} out of range 1..={max}")]
    RankOutOfRange { k: usize, max: usize },

    #[error("topic {topic} out of range (k = {k})")]
    TopicOutOfRange { topic: usize, k: usize },

    #[error("vocabulary mismatch: model has {expected} words, matrix has {found}")]
    VocabularyMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("adaboost failed: first tree has adjusted error {epsilon} >= 0.5")]
    AdaboostFailed { epsilon: f64 },

    #[error("training set needs at least 2 documents for a nonzero sigma_t, got {0}")]
    TooFewTrainingDocs(usize),

    #[error("training scores have zero standard deviation (sigma_t = 0)")]
    ZeroTrainingSpread,

    #[error("training document {0} has no tokens")]
    EmptyTrainingDoc(DocKey),

    #[error("document {0} is unscorable: none of its words has a word score")]
    Unscorable(DocKey),

    #[error("need at least 2 scorable virgin documents, got {0}")]
    TooFewVirginDocs(usize),

    #[error("virgin scores have zero standard deviation (sigma_v = 0)")]
    ZeroVirginSpread,

    #[error("need at least 2 shared keys, got {0}")]
    TooFewSharedKeys(usize),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("missing confidence interval for {0}")]
    MissingInterval(DocKey),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

//! Batch execution: corpus variant, training/test split, and one of the
//! three scoring approaches, producing a score table for the test documents.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::corpus::{apply_variant, CorpusVariant, CorpusVariantConfig, DocKey, SparseTermMatrix};
use crate::error::{Error, Result};
use crate::lda::{fit_lda, infer_theta, AlphaMode, LdaConfig};
use crate::lsa::{lsa_features, SvdParams};
use crate::table::{ScoreRow, ScoreTable};
use crate::trees::{fit_ensemble, Dataset, EnsembleConfig, FeatureSubset, TreeMethod};
use crate::wordscores::{run_wordscores, SpreadEstimator, TrainingSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    Wordscores,
    LsaTrees,
    LdaTrees,
}

fn default_k() -> usize {
    50
}
fn default_tree_method() -> TreeMethod {
    TreeMethod::RandomForest
}
fn default_n_trees() -> usize {
    10_000
}
fn default_c_mode() -> FeatureSubset {
    FeatureSubset::AllX
}
fn default_min_node_size() -> usize {
    5
}
fn default_alpha_mode() -> AlphaMode {
    AlphaMode::Symmetric
}
fn default_lda_passes() -> usize {
    10
}
fn default_variant() -> CorpusVariant {
    CorpusVariant::A
}

/// One configuration of the scoring pipeline. Tree and topic fields are
/// ignored by the wordscores approach; `alpha_mode` only matters for LDA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSpec {
    #[serde(default = "default_variant")]
    pub variant: CorpusVariant,
    pub approach: Approach,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_tree_method")]
    pub tree_method: TreeMethod,
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    #[serde(default = "default_c_mode")]
    pub c_mode: FeatureSubset,
    #[serde(default = "default_min_node_size")]
    pub min_node_size: usize,
    #[serde(default = "default_alpha_mode")]
    pub alpha_mode: AlphaMode,
    #[serde(default = "default_lda_passes")]
    pub lda_passes: usize,
    #[serde(default)]
    pub estimator: SpreadEstimator,
    #[serde(default)]
    pub seed: u64,
}

impl BatchSpec {
    pub fn wordscores(variant: CorpusVariant) -> Self {
        BatchSpec {
            variant,
            approach: Approach::Wordscores,
            k: default_k(),
            tree_method: default_tree_method(),
            n_trees: default_n_trees(),
            c_mode: default_c_mode(),
            min_node_size: default_min_node_size(),
            alpha_mode: default_alpha_mode(),
            lda_passes: default_lda_passes(),
            estimator: SpreadEstimator::Population,
            seed: 0,
        }
    }

    pub fn topic_trees(variant: CorpusVariant, approach: Approach, k: usize, tree_method: TreeMethod) -> Self {
        BatchSpec {
            approach,
            k,
            tree_method,
            ..BatchSpec::wordscores(variant)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.approach == Approach::Wordscores {
            return Ok(());
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        self.ensemble_config().validate()
    }

    pub fn ensemble_config(&self) -> EnsembleConfig {
        EnsembleConfig {
            method: self.tree_method,
            n_trees: self.n_trees,
            c_mode: self.c_mode,
            min_node_size: self.min_node_size,
            seed: self.seed,
        }
    }

    /// Grid row label: approach, variant, and (for topic models) k and alpha.
    pub fn row_label(&self) -> String {
        let v = match self.variant {
            CorpusVariant::A => "A",
            CorpusVariant::B => "B",
        };
        match self.approach {
            Approach::Wordscores => format!("wordscores/{v}"),
            Approach::LsaTrees => format!("lsa/{v}/k={}", self.k),
            Approach::LdaTrees => {
                let a = match self.alpha_mode {
                    AlphaMode::Symmetric => "sym",
                    AlphaMode::AsymmetricNormalized => "asym",
                };
                format!("lda/{v}/k={}/{a}", self.k)
            }
        }
    }
}

/// The full term matrix (variant A) plus what variant B needs.
#[derive(Debug)]
pub struct CorpusInputs {
    pub matrix: SparseTermMatrix,
    pub stoplist: Vec<String>,
    pub min_max_in_doc_count: u64,
    variant_b: OnceLock<std::result::Result<Arc<SparseTermMatrix>, String>>,
}

impl CorpusInputs {
    pub fn new(matrix: SparseTermMatrix, stoplist: Vec<String>) -> Self {
        CorpusInputs {
            matrix,
            stoplist,
            min_max_in_doc_count: 2,
            variant_b: OnceLock::new(),
        }
    }

    /// The matrix for a corpus variant; variant B is derived once and reused.
    pub fn matrix_for(&self, variant: CorpusVariant) -> Result<Arc<SparseTermMatrix>> {
        match variant {
            CorpusVariant::A => Ok(Arc::new(self.matrix.clone())),
            CorpusVariant::B => self
                .variant_b
                .get_or_init(|| {
                    let config = CorpusVariantConfig {
                        min_max_in_doc_count: self.min_max_in_doc_count,
                        ..CorpusVariantConfig::b(self.stoplist.clone())
                    };
                    apply_variant(&self.matrix, &config)
                        .map(Arc::new)
                        .map_err(|e| e.to_string())
                })
                .clone()
                .map_err(Error::InvalidConfig),
        }
    }
}

/// Which documents train and which get scored.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSplit {
    pub training: ScoreTable,
    /// When set, only training rows from these years are used and documents
    /// from these years are never scored.
    pub train_years: Option<Vec<i32>>,
}

impl TrainSplit {
    pub fn new(training: ScoreTable, train_years: Option<Vec<i32>>) -> Self {
        TrainSplit { training, train_years }
    }

    /// Training rows present in `matrix`, and the keys to score.
    pub fn resolve(&self, matrix: &SparseTermMatrix) -> (Vec<(DocKey, f64)>, Vec<DocKey>) {
        let present: HashSet<&DocKey> = matrix.doc_keys().iter().collect();
        let in_train_years = |k: &DocKey| self.train_years.as_ref().is_none_or(|ys| ys.contains(&k.year));
        let training: Vec<(DocKey, f64)> = self
            .training
            .rows()
            .iter()
            .filter(|r| present.contains(&r.key) && in_train_years(&r.key))
            .map(|r| (r.key.clone(), r.score))
            .collect();
        let train_keys: HashSet<&DocKey> = training.iter().map(|(k, _)| k).collect();
        let virgin = matrix
            .doc_keys()
            .iter()
            .filter(|k| !train_keys.contains(k))
            .filter(|k| self.train_years.as_ref().is_none_or(|ys| !ys.contains(&k.year)))
            .cloned()
            .collect();
        (training, virgin)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct FeatureKey {
    variant: CorpusVariant,
    approach: Approach,
    k: usize,
    alpha_mode: Option<AlphaMode>,
    lda_passes: usize,
    seed: u64,
}

type Features = Arc<Vec<Vec<f64>>>;
type FeatureSlot = Arc<OnceLock<std::result::Result<Features, String>>>;

/// Topic features shared across batches with the same corpus variant,
/// topic model, k, and seed.
#[derive(Debug, Default)]
pub struct FeatureCache {
    slots: Mutex<HashMap<FeatureKey, FeatureSlot>>,
}

impl FeatureCache {
    fn features(&self, matrix: &SparseTermMatrix, spec: &BatchSpec) -> Result<Features> {
        let key = FeatureKey {
            variant: spec.variant,
            approach: spec.approach,
            k: spec.k,
            alpha_mode: (spec.approach == Approach::LdaTrees).then_some(spec.alpha_mode),
            lda_passes: if spec.approach == Approach::LdaTrees {
                spec.lda_passes
            } else {
                0
            },
            seed: spec.seed,
        };
        let slot = self
            .slots
            .lock()
            .expect("feature cache lock poisoned")
            .entry(key)
            .or_default()
            .clone();
        slot.get_or_init(|| topic_features(matrix, spec).map(Arc::new).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::InvalidConfig)
    }
}

/// One feature row per document of `matrix`, in column order.
pub fn topic_features(matrix: &SparseTermMatrix, spec: &BatchSpec) -> Result<Vec<Vec<f64>>> {
    match spec.approach {
        Approach::LsaTrees => {
            let (_, scores) = lsa_features(matrix, SvdParams::new(spec.k, spec.seed))?;
            Ok(scores.doc_features())
        }
        Approach::LdaTrees => {
            let config = LdaConfig {
                alpha_mode: spec.alpha_mode,
                passes: spec.lda_passes,
                ..LdaConfig::new(spec.k, spec.seed)
            };
            let model = fit_lda(matrix, &config)?;
            Ok(infer_theta(&model, matrix)?.theta)
        }
        Approach::Wordscores => Err(Error::InvalidConfig("wordscores has no topic features".into())),
    }
}

/// Runs one batch and returns scores for the test documents, sorted by key.
pub fn run_batch(
    inputs: &CorpusInputs,
    spec: &BatchSpec,
    split: &TrainSplit,
    cache: &FeatureCache,
) -> Result<ScoreTable> {
    spec.validate()?;
    let matrix = inputs.matrix_for(spec.variant)?;
    let (training, virgin) = split.resolve(&matrix);
    let training = TrainingSet::new(training)?;
    let table = match spec.approach {
        Approach::Wordscores => {
            let result = run_wordscores(&matrix, &training, &virgin, spec.estimator)?;
            ScoreTable::from(&result)
        }
        Approach::LsaTrees | Approach::LdaTrees => {
            let features = cache.features(&matrix, spec)?;
            let index = matrix.key_index();
            let rows: Vec<Vec<f64>> = training.keys().map(|k| features[index[k]].clone()).collect();
            let data = Dataset::new(&rows, training.scores())?;
            let model = fit_ensemble(&data, &spec.ensemble_config())?;
            ScoreTable::new(
                virgin
                    .iter()
                    .map(|k| ScoreRow::new(k.clone(), model.predict(&features[index[k]])))
                    .collect(),
            )?
        }
    };
    Ok(table.sorted_by_key())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_term_matrix;

    fn key(e: &str, y: i32) -> DocKey {
        DocKey::new(e, y).unwrap()
    }

    fn inputs() -> CorpusInputs {
        let texts = [
            ("a", 1990, "good good fine the"),
            ("b", 1990, "bad bad awful the"),
            ("c", 1990, "good bad the the"),
            ("a", 1991, "good fine fine the"),
            ("b", 1991, "awful bad the"),
            ("c", 1991, "good awful the"),
        ];
        let tokens: Vec<Vec<String>> = texts
            .iter()
            .map(|(_, _, t)| t.split(' ').map(str::to_owned).collect())
            .collect();
        let keys: Vec<DocKey> = texts.iter().map(|(e, y, _)| key(e, *y)).collect();
        CorpusInputs::new(build_term_matrix(&tokens, &keys).unwrap(), vec!["the".into()])
    }

    fn split() -> TrainSplit {
        let training = ScoreTable::from_pairs([
            (key("a", 1990), 1.0),
            (key("b", 1990), -1.0),
            (key("c", 1990), 0.0),
            (key("zz", 1990), 5.0),
        ])
        .unwrap();
        TrainSplit::new(training, Some(vec![1990]))
    }

    #[test]
    fn split_resolution() {
        let inputs = inputs();
        let (train, virgin) = split().resolve(&inputs.matrix);
        assert_eq!(train.len(), 3);
        assert_eq!(virgin, vec![key("a", 1991), key("b", 1991), key("c", 1991)]);

        let open = TrainSplit::new(split().training, None);
        let (_, virgin) = open.resolve(&inputs.matrix);
        assert_eq!(virgin.len(), 3);
    }

    #[test]
    fn wordscores_batch_matches_direct_calls() {
        let inputs = inputs();
        let spec = BatchSpec::wordscores(CorpusVariant::A);
        let table = run_batch(&inputs, &spec, &split(), &FeatureCache::default()).unwrap();
        let (train, virgin) = split().resolve(&inputs.matrix);
        let direct = run_wordscores(
            &inputs.matrix,
            &TrainingSet::new(train).unwrap(),
            &virgin,
            SpreadEstimator::Population,
        )
        .unwrap();
        assert_eq!(table, ScoreTable::from(&direct).sorted_by_key());
        assert!(table.get(&key("a", 1991)).unwrap().score > table.get(&key("b", 1991)).unwrap().score);
    }

    #[test]
    fn topic_batches_run() {
        let inputs = inputs();
        for approach in [Approach::LsaTrees, Approach::LdaTrees] {
            for method in [TreeMethod::SingleTree, TreeMethod::RandomForest] {
                let mut spec = BatchSpec::topic_trees(CorpusVariant::A, approach, 2, method);
                spec.n_trees = 5;
                spec.min_node_size = 1;
                let table = run_batch(&inputs, &spec, &split(), &FeatureCache::default()).unwrap();
                assert_eq!(table.len(), 3);
            }
        }
    }

    #[test]
    fn one_training_doc_is_an_error() {
        let inputs = inputs();
        let training = ScoreTable::from_pairs([(key("a", 1990), 1.0)]).unwrap();
        let err = run_batch(
            &inputs,
            &BatchSpec::wordscores(CorpusVariant::A),
            &TrainSplit::new(training, None),
            &FeatureCache::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::TooFewTrainingDocs(1)));
    }

    #[test]
    fn spec_json_defaults() {
        let spec: BatchSpec =
            serde_json::from_str(r#"{"approach":"lsa_trees","k":20,"tree_method":"adaboost_r2"}"#).unwrap();
        assert_eq!(spec.variant, CorpusVariant::A);
        assert_eq!(spec.n_trees, 10_000);
        assert_eq!(spec.tree_method, TreeMethod::AdaboostR2);
        assert!(serde_json::from_str::<BatchSpec>(r#"{"approach":"nope"}"#).is_err());
    }
}

//! Wordscores: word scores from pre-scored training documents, virgin
//! document scores with standard errors, and rescaling of virgin scores to
//! the spread of the training scores.
//!
//! Virgin-document relative frequencies are taken over scored tokens only:
//! words that never occur in a training document are ignored entirely, so a
//! document's raw score is always a convex combination of word scores.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{DocKey, SparseTermMatrix};
use crate::error::{Error, Result};

/// Multiplier for two-sided 95% normal intervals.
pub const Z_95: f64 = 1.96;

/// Which standard deviation estimator the rescaling uses, for both the
/// training and the virgin scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadEstimator {
    /// Divide by `n`.
    #[default]
    Population,
    /// Divide by `n - 1`.
    Sample,
}

impl SpreadEstimator {
    pub fn std_dev(self, values: &[f64]) -> f64 {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let denom = match self {
            SpreadEstimator::Population => n,
            SpreadEstimator::Sample => n - 1.0,
        };
        (ss / denom).sqrt()
    }
}

/// Training documents and their a priori scores.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    entries: Vec<(DocKey, f64)>,
}

impl TrainingSet {
    pub fn new(entries: Vec<(DocKey, f64)>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::TooFewTrainingDocs(entries.len()));
        }
        let mut seen = HashSet::new();
        for (key, score) in &entries {
            if !seen.insert(key) {
                return Err(Error::DuplicateKey(key.clone()));
            }
            if !score.is_finite() {
                return Err(Error::NonFinite(format!("training score for {key}")));
            }
        }
        let first = entries[0].1;
        if entries.iter().all(|(_, s)| *s == first) {
            return Err(Error::ZeroTrainingSpread);
        }
        Ok(TrainingSet { entries })
    }

    pub fn entries(&self) -> &[(DocKey, f64)] {
        &self.entries
    }

    pub fn keys(&self) -> impl Iterator<Item = &DocKey> {
        self.entries.iter().map(|(k, _)| k)
    }

    pub fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, s)| *s).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordscoresModel {
    word_scores: HashMap<String, f64>,
    pub sigma_t: f64,
    pub estimator: SpreadEstimator,
    pub training_keys: Vec<DocKey>,
    pub score_range: (f64, f64),
}

impl WordscoresModel {
    pub fn word_score(&self, word: &str) -> Option<f64> {
        self.word_scores.get(word).copied()
    }

    pub fn n_scored_words(&self) -> usize {
        self.word_scores.len()
    }

    /// Scored words sorted by score, then by word.
    pub fn sorted_word_scores(&self) -> Vec<(&str, f64)> {
        let mut out: Vec<(&str, f64)> = self.word_scores.iter().map(|(w, &s)| (w.as_str(), s)).collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));
        out
    }
}

/// Computes a score for every word that occurs in at least one training
/// document: the average of training scores weighted by `P(t | w)`.
pub fn fit_wordscores(
    matrix: &SparseTermMatrix,
    training: &TrainingSet,
    estimator: SpreadEstimator,
) -> Result<WordscoresModel> {
    let index = matrix.key_index();
    let m = matrix.n_words();
    let mut freq_sum = vec![0.0; m];
    let mut weighted = vec![0.0; m];
    for (key, score) in training.entries() {
        let &j = index.get(key).ok_or_else(|| Error::MissingKey(key.clone()))?;
        let col = matrix.column(j);
        let total: u64 = col.iter().map(|&(_, c)| c).sum();
        if total == 0 {
            return Err(Error::EmptyTrainingDoc(key.clone()));
        }
        for &(w, c) in col {
            let f = c as f64 / total as f64;
            freq_sum[w] += f;
            weighted[w] += f * score;
        }
    }
    let word_scores = (0..m)
        .filter(|&w| freq_sum[w] > 0.0)
        .map(|w| (matrix.vocab().word(w).to_owned(), weighted[w] / freq_sum[w]))
        .collect();
    let scores = training.scores();
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(WordscoresModel {
        word_scores,
        sigma_t: estimator.std_dev(&scores),
        estimator,
        training_keys: training.keys().cloned().collect(),
        score_range: (lo, hi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rescaled {
    pub score: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirginScore {
    pub key: DocKey,
    pub raw: f64,
    pub variance: f64,
    /// Scored tokens in the document.
    pub n_tokens: u64,
    /// `sqrt(variance) / sqrt(n_tokens)` on the raw scale.
    pub std_error: f64,
    pub rescaled: Option<Rescaled>,
}

/// Raw score, variance, and standard error of one document.
pub fn score_virgin(model: &WordscoresModel, matrix: &SparseTermMatrix, key: &DocKey) -> Result<VirginScore> {
    let j = matrix.doc_index(key).ok_or_else(|| Error::MissingKey(key.clone()))?;
    score_column(model, matrix, j)
}

fn score_column(model: &WordscoresModel, matrix: &SparseTermMatrix, j: usize) -> Result<VirginScore> {
    let vocab = matrix.vocab();
    let scored: Vec<(u64, f64)> = matrix
        .column(j)
        .iter()
        .filter_map(|&(w, c)| model.word_score(vocab.word(w)).map(|s| (c, s)))
        .collect();
    let n_tokens: u64 = scored.iter().map(|&(c, _)| c).sum();
    let key = matrix.doc_keys()[j].clone();
    if n_tokens == 0 {
        return Err(Error::Unscorable(key));
    }
    let n = n_tokens as f64;
    let raw: f64 = scored.iter().map(|&(c, s)| c as f64 / n * s).sum();
    let variance: f64 = scored.iter().map(|&(c, s)| c as f64 / n * (s - raw) * (s - raw)).sum();
    Ok(VirginScore {
        key,
        raw,
        variance,
        n_tokens,
        std_error: variance.sqrt() / n.sqrt(),
        rescaled: None,
    })
}

/// Stretches raw virgin scores around their mean so their spread matches
/// the training scores. Standard errors are stretched by the same factor.
pub fn rescale(scores: &[VirginScore], model: &WordscoresModel) -> Result<Vec<VirginScore>> {
    if scores.len() < 2 {
        return Err(Error::TooFewVirginDocs(scores.len()));
    }
    let raw: Vec<f64> = scores.iter().map(|s| s.raw).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let sigma_v = model.estimator.std_dev(&raw);
    if sigma_v.is_nan() || sigma_v <= 0.0 {
        return Err(Error::ZeroVirginSpread);
    }
    let factor = model.sigma_t / sigma_v;
    Ok(scores
        .iter()
        .map(|s| {
            let score = if factor == 1.0 {
                s.raw
            } else {
                (s.raw - mean) * factor + mean
            };
            let std_error = s.std_error * factor;
            VirginScore {
                rescaled: Some(Rescaled {
                    score,
                    std_error,
                    ci_low: score - Z_95 * std_error,
                    ci_high: score + Z_95 * std_error,
                }),
                ..s.clone()
            }
        })
        .collect())
}

/// Scores of a full run: rescaled scorable documents plus the keys that had
/// no scored words.
#[derive(Debug, Clone, PartialEq)]
pub struct WordscoresResult {
    pub scores: Vec<VirginScore>,
    pub unscorable: Vec<DocKey>,
}

impl WordscoresResult {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "entity",
            "year",
            "raw",
            "rescaled",
            "std_error",
            "ci_low",
            "ci_high",
            "n_tokens",
        ])?;
        for s in &self.scores {
            let r = s.rescaled.expect("result scores are rescaled");
            w.write_record([
                s.key.entity.clone(),
                s.key.year.to_string(),
                s.raw.to_string(),
                r.score.to_string(),
                r.std_error.to_string(),
                r.ci_low.to_string(),
                r.ci_high.to_string(),
                s.n_tokens.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fits on `training`, scores every document in `virgin` that has at least
/// one scored word, and rescales the scorable ones.
pub fn run_wordscores(
    matrix: &SparseTermMatrix,
    training: &TrainingSet,
    virgin: &[DocKey],
    estimator: SpreadEstimator,
) -> Result<WordscoresResult> {
    let model = fit_wordscores(matrix, training, estimator)?;
    let index = matrix.key_index();
    let columns: Vec<usize> = virgin
        .iter()
        .map(|k| index.get(k).copied().ok_or_else(|| Error::MissingKey(k.clone())))
        .collect::<Result<_>>()?;
    let scored: Vec<Result<VirginScore>> = columns.par_iter().map(|&j| score_column(&model, matrix, j)).collect();
    let mut scores = Vec::new();
    let mut unscorable = Vec::new();
    for result in scored {
        match result {
            Ok(s) => scores.push(s),
            Err(Error::Unscorable(key)) => unscorable.push(key),
            Err(e) => return Err(e),
        }
    }
    Ok(WordscoresResult {
        scores: rescale(&scores, &model)?,
        unscorable,
    })
}

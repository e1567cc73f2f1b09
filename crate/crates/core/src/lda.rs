//! Latent Dirichlet allocation fitted with online variational Bayes.
//!
//! The topic-word variational parameter `lambda` is updated from minibatch
//! sufficient statistics with step size `(tau0 + t)^-kappa`. When a batch
//! covers the whole corpus the step is fixed at 1, which turns the procedure
//! into ordinary batch variational Bayes.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::corpus::{DocKey, SparseTermMatrix};
use crate::error::{Error, Result};
use crate::lsa::{write_row, NumberRows};

const MAX_DOC_ITERS: usize = 100;
const DOC_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    Symmetric,
    AsymmetricNormalized,
}

impl FromStr for AlphaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sym" | "symmetric" => Ok(AlphaMode::Symmetric),
            "asym" | "asymmetric" | "asymmetric_normalized" => Ok(AlphaMode::AsymmetricNormalized),
            other => Err(Error::InvalidConfig(format!("unknown alpha mode {other:?}"))),
        }
    }
}

impl AlphaMode {
    /// Symmetric: every entry `1/k`. Asymmetric: `1/(i + sqrt(k))` for topic
    /// `i`, normalized to sum to one.
    pub fn alpha(self, k: usize) -> Vec<f64> {
        match self {
            AlphaMode::Symmetric => vec![1.0 / k as f64; k],
            AlphaMode::AsymmetricNormalized => {
                let root = (k as f64).sqrt();
                let raw: Vec<f64> = (0..k).map(|i| 1.0 / (i as f64 + root)).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|a| a / total).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha_mode: AlphaMode,
    /// Topic-word prior. Defaults to `1/k`.
    pub eta: f64,
    pub passes: usize,
    pub batch_size: usize,
    pub kappa: f64,
    pub tau0: f64,
    pub seed: u64,
}

impl LdaConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        LdaConfig {
            k,
            alpha_mode: AlphaMode::Symmetric,
            eta: 1.0 / k.max(1) as f64,
            passes: 10,
            batch_size: 256,
            kappa: 0.7,
            tau0: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.eta.is_nan() || self.eta <= 0.0 || self.tau0.is_nan() || self.tau0 <= 0.0 {
            return bad("eta and tau0 must be positive");
        }
        if self.passes == 0 || self.batch_size == 0 {
            return bad("passes and batch_size must be positive");
        }
        if !(self.kappa > 0.5 && self.kappa <= 1.0) {
            return bad("kappa must lie in (0.5, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub config: LdaConfig,
    pub alpha: Vec<f64>,
    /// Variational Dirichlet parameters over topic-word distributions, k x m
    /// row-major.
    lambda: Vec<f64>,
    /// Row-normalized `lambda`, k x m row-major.
    beta: Vec<f64>,
    n_words: usize,
}

/// Per-document topic proportions, one row per document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTopicMatrix {
    pub theta: Vec<Vec<f64>>,
    pub doc_keys: Vec<DocKey>,
}

struct DocPosterior {
    gamma: Vec<f64>,
    /// Responsibilities for each stored word of the document, `nnz x k`.
    phi: Vec<f64>,
}

impl LdaModel {
    fn from_lambda(config: LdaConfig, alpha: Vec<f64>, lambda: Vec<f64>, n_words: usize) -> Self {
        let mut beta = lambda.clone();
        for row in beta.chunks_mut(n_words.max(1)) {
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|b| *b /= total);
        }
        LdaModel {
            config,
            alpha,
            lambda,
            beta,
            n_words,
        }
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_words(&self) -> usize {
        self.n_words
    }

    /// Topic-word probabilities for one topic.
    pub fn beta_row(&self, topic: usize) -> &[f64] {
        &self.beta[topic * self.n_words..(topic + 1) * self.n_words]
    }

    fn lambda_row(&self, topic: usize) -> &[f64] {
        &self.lambda[topic * self.n_words..(topic + 1) * self.n_words]
    }

    /// `E[log beta]` under the variational Dirichlet, k x m row-major.
    fn expected_log_beta(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.lambda.len());
        for t in 0..self.k() {
            let row = self.lambda_row(t);
            let psi_total = digamma(row.iter().sum());
            out.extend(row.iter().map(|&l| digamma(l) - psi_total));
        }
        out
    }

    fn check_vocab(&self, matrix: &SparseTermMatrix) -> Result<()> {
        if matrix.n_words() != self.n_words {
            return Err(Error::VocabularyMismatch {
                expected: self.n_words,
                found: matrix.n_words(),
            });
        }
        Ok(())
    }

    fn doc_posterior(&self, doc: &[(usize, u64)], exp_elog_beta: &[f64]) -> DocPosterior {
        let k = self.k();
        let m = self.n_words;
        let total: f64 = doc.iter().map(|&(_, c)| c as f64).sum();
        let mut gamma: Vec<f64> = self.alpha.iter().map(|&a| a + total / k as f64).collect();
        let mut phi = vec![0.0; doc.len() * k];
        let mut theta = normalized(&gamma);
        for _ in 0..MAX_DOC_ITERS {
            let psi_total = digamma(gamma.iter().sum());
            let exp_elog_theta: Vec<f64> = gamma.iter().map(|&g| (digamma(g) - psi_total).exp()).collect();
            let mut next = self.alpha.clone();
            for (d, &(w, c)) in doc.iter().enumerate() {
                let resp = &mut phi[d * k..(d + 1) * k];
                let mut norm = 0.0;
                for t in 0..k {
                    resp[t] = exp_elog_theta[t] * exp_elog_beta[t * m + w];
                    norm += resp[t];
                }
                for t in 0..k {
                    resp[t] /= norm;
                    next[t] += c as f64 * resp[t];
                }
            }
            gamma = next;
            let next_theta = normalized(&gamma);
            let change = theta.iter().zip(&next_theta).map(|(a, b)| (a - b).abs()).sum::<f64>() / k as f64;
            theta = next_theta;
            if change < DOC_TOLERANCE {
                break;
            }
        }
        DocPosterior { gamma, phi }
    }

    fn posteriors(&self, matrix: &SparseTermMatrix, docs: &[usize]) -> Vec<DocPosterior> {
        let exp_elog_beta: Vec<f64> = self.expected_log_beta().into_iter().map(f64::exp).collect();
        docs.par_iter()
            .map(|&j| self.doc_posterior(matrix.column(j), &exp_elog_beta))
            .collect()
    }

    /// Writes `k m`, the alpha line, `beta` row by row, and a final line of
    /// per-topic `lambda` totals so the variational state can be restored.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.k(), self.n_words)?;
        write_row(&mut out, self.alpha.iter().copied())?;
        for t in 0..self.k() {
            write_row(&mut out, self.beta_row(t).iter().copied())?;
        }
        write_row(&mut out, (0..self.k()).map(|t| self.lambda_row(t).iter().sum()))?;
        Ok(())
    }

    /// Restores a model written by [`LdaModel::write_to`]. Fitting settings
    /// other than `k` are not stored and come back as defaults.
    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let mut rows = NumberRows::new(input);
        let header = rows.next_row()?;
        let [k, m] = header[..] else {
            return Err(Error::parse(1, "header must be `k m`"));
        };
        let (k, m) = (k as usize, m as usize);
        let alpha = rows.next_row_len(k)?;
        let mut beta = Vec::with_capacity(k * m);
        for _ in 0..k {
            beta.extend(rows.next_row_len(m)?);
        }
        let totals = rows.next_row_len(k)?;
        let lambda = beta
            .chunks(m.max(1))
            .zip(&totals)
            .flat_map(|(row, &s)| row.iter().map(move |&b| b * s))
            .collect();
        let mut model = LdaModel::from_lambda(LdaConfig::new(k, 0), alpha, lambda, m);
        model.beta = beta;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        LdaModel::read_from(fs::File::open(path)?)
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter().map(|x| x / total).collect()
}

/// Fits the model; see [`fit_lda_observed`] to watch intermediate passes.
pub fn fit_lda(matrix: &SparseTermMatrix, config: &LdaConfig) -> Result<LdaModel> {
    fit_lda_observed(matrix, config, |_, _| {})
}

/// Fits the model, calling `observe(pass, model)` after every pass.
pub fn fit_lda_observed<F>(matrix: &SparseTermMatrix, config: &LdaConfig, mut observe: F) -> Result<LdaModel>
where
    F: FnMut(usize, &LdaModel),
{
    config.validate()?;
    let (m, n, k) = (matrix.n_words(), matrix.n_docs(), config.k);
    if n == 0 || m == 0 || matrix.nnz() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = Gamma::new(100.0, 0.01).expect("valid gamma parameters");
    let lambda: Vec<f64> = (0..k * m).map(|_| init.sample(&mut rng)).collect();
    let mut model = LdaModel::from_lambda(config.clone(), config.alpha_mode.alpha(k), lambda, m);

    let full_batch = config.batch_size >= n;
    let order: Vec<usize> = (0..n).collect();
    let mut updates = 0usize;
    for pass in 0..config.passes {
        for batch in order.chunks(config.batch_size) {
            let posts = model.posteriors(matrix, batch);
            let mut sstats = vec![0.0; k * m];
            for (&j, post) in batch.iter().zip(&posts) {
                for (d, &(w, c)) in matrix.column(j).iter().enumerate() {
                    for t in 0..k {
                        sstats[t * m + w] += c as f64 * post.phi[d * k + t];
                    }
                }
            }
            let rho = if full_batch {
                1.0
            } else {
                (config.tau0 + updates as f64).powf(-config.kappa)
            };
            let scale = n as f64 / batch.len() as f64;
            let lambda = model
                .lambda
                .iter()
                .zip(&sstats)
                .map(|(&old, &s)| (1.0 - rho) * old + rho * (config.eta + scale * s))
                .collect();
            model = LdaModel::from_lambda(config.clone(), model.alpha.clone(), lambda, m);
            updates += 1;
        }
        observe(pass, &model);
    }
    Ok(model)
}

/// Posterior mean topic proportions for every document of `matrix`.
pub fn infer_theta(model: &LdaModel, matrix: &SparseTermMatrix) -> Result<DocTopicMatrix> {
    model.check_vocab(matrix)?;
    let docs: Vec<usize> = (0..matrix.n_docs()).collect();
    let theta = model
        .posteriors(matrix, &docs)
        .into_iter()
        .map(|p| normalized(&p.gamma))
        .collect();
    Ok(DocTopicMatrix {
        theta,
        doc_keys: matrix.doc_keys().to_vec(),
    })
}

/// Variational lower bound on the log likelihood of `matrix`, including the
/// Dirichlet terms for topic-word distributions.
pub fn elbo(model: &LdaModel, matrix: &SparseTermMatrix) -> Result<f64> {
    model.check_vocab(matrix)?;
    let (k, m) = (model.k(), model.n_words);
    let elog_beta = model.expected_log_beta();
    let docs: Vec<usize> = (0..matrix.n_docs()).collect();
    let posts = model.posteriors(matrix, &docs);
    let alpha_sum: f64 = model.alpha.iter().sum();
    let ln_gamma_alpha: f64 = model.alpha.iter().map(|&a| ln_gamma(a)).sum();

    let mut bound = 0.0;
    for (&j, post) in docs.iter().zip(&posts) {
        let psi_total = digamma(post.gamma.iter().sum());
        let elog_theta: Vec<f64> = post.gamma.iter().map(|&g| digamma(g) - psi_total).collect();
        for (d, &(w, c)) in matrix.column(j).iter().enumerate() {
            for t in 0..k {
                let p = post.phi[d * k + t];
                if p > 0.0 {
                    bound += c as f64 * p * (elog_theta[t] + elog_beta[t * m + w] - p.ln());
                }
            }
        }
        bound += ln_gamma(alpha_sum) - ln_gamma_alpha;
        bound += model
            .alpha
            .iter()
            .zip(&elog_theta)
            .map(|(a, e)| (a - 1.0) * e)
            .sum::<f64>();
        bound -= ln_gamma(post.gamma.iter().sum::<f64>()) - post.gamma.iter().map(|&g| ln_gamma(g)).sum::<f64>();
        bound -= post
            .gamma
            .iter()
            .zip(&elog_theta)
            .map(|(g, e)| (g - 1.0) * e)
            .sum::<f64>();
    }

    let eta = model.config.eta;
    for t in 0..k {
        let row = model.lambda_row(t);
        let elog = &elog_beta[t * m..(t + 1) * m];
        bound += ln_gamma(m as f64 * eta) - m as f64 * ln_gamma(eta);
        bound += elog.iter().map(|e| (eta - 1.0) * e).sum::<f64>();
        bound -= ln_gamma(row.iter().sum::<f64>()) - row.iter().map(|&l| ln_gamma(l)).sum::<f64>();
        bound -= row.iter().zip(elog).map(|(l, e)| (l - 1.0) * e).sum::<f64>();
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_term_matrix;
    use approx::assert_abs_diff_eq;

    fn keys(n: usize) -> Vec<DocKey> {
        (0..n).map(|j| DocKey::new("d", j as i32).unwrap()).collect()
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn small_corpus() -> SparseTermMatrix {
        let docs = vec![toks("a a b c"), toks("b c c d"), toks("a d d d e"), toks("e e a b")];
        build_term_matrix(&docs, &keys(4)).unwrap()
    }

    #[test]
    fn alpha_modes() {
        let s = AlphaMode::Symmetric.alpha(4);
        assert!(s.iter().all(|&a| a == 0.25));
        let a = AlphaMode::AsymmetricNormalized.alpha(4);
        assert_abs_diff_eq!(a.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(a.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn one_topic_is_smoothed_empirical_distribution() {
        let m = small_corpus();
        let mut cfg = LdaConfig::new(1, 5);
        cfg.eta = 0.3;
        let model = fit_lda(&m, &cfg).unwrap();
        let total = m.doc_lengths().iter().sum::<u64>() as f64;
        let n_words = m.n_words() as f64;
        for w in 0..m.n_words() {
            let count: u64 = (0..m.n_docs()).map(|j| m.get(w, j)).sum();
            let expected = (count as f64 + 0.3) / (total + n_words * 0.3);
            assert_abs_diff_eq!(model.beta_row(0)[w], expected, epsilon = 1e-12);
        }
        let theta = infer_theta(&model, &m).unwrap();
        assert!(theta.theta.iter().all(|row| row == &[1.0]));
    }

    #[test]
    fn deterministic_under_seed() {
        let m = small_corpus();
        let cfg = LdaConfig::new(3, 11);
        let a = fit_lda(&m, &cfg).unwrap();
        let b = fit_lda(&m, &cfg).unwrap();
        assert_eq!(a.beta, b.beta);
        assert_eq!(elbo(&a, &m).unwrap(), elbo(&a, &m).unwrap());
    }

    #[test]
    fn empty_document_gets_prior() {
        let docs = vec![toks("a b"), vec![], toks("b c")];
        let m = build_term_matrix(&docs, &keys(3)).unwrap();
        let mut cfg = LdaConfig::new(3, 1);
        cfg.alpha_mode = AlphaMode::AsymmetricNormalized;
        let model = fit_lda(&m, &cfg).unwrap();
        let theta = infer_theta(&model, &m).unwrap();
        let prior = normalized(&model.alpha);
        for (a, b) in theta.theta[1].iter().zip(&prior) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
    }

    #[test]
    fn errors() {
        let empty = build_term_matrix(&[vec![]], &keys(1)).unwrap();
        assert!(matches!(
            fit_lda(&empty, &LdaConfig::new(2, 0)),
            Err(Error::EmptyCorpus)
        ));
        let mut cfg = LdaConfig::new(2, 0);
        cfg.kappa = 0.5;
        assert!(fit_lda(&small_corpus(), &cfg).is_err());

        let model = fit_lda(&small_corpus(), &LdaConfig::new(2, 0)).unwrap();
        let other = build_term_matrix(&[toks("x")], &keys(1)).unwrap();
        assert!(matches!(
            infer_theta(&model, &other),
            Err(Error::VocabularyMismatch { .. })
        ));
    }

    #[test]
    fn single_word_document_bound() {
        // One document holding a single token of word 0, vocabulary {w0, w1},
        // one topic: the bound is exact and equals ln E[beta_0] = ln(1/2).
        let m = SparseTermMatrix::from_columns(vec!["w0".into(), "w1".into()], keys(1), vec![vec![(0, 1)]]).unwrap();
        for eta in [0.1, 0.5, 2.0] {
            let mut cfg = LdaConfig::new(1, 3);
            cfg.eta = eta;
            let model = fit_lda(&m, &cfg).unwrap();
            assert_abs_diff_eq!(elbo(&model, &m).unwrap(), -(2f64.ln()), epsilon = 1e-12);
        }
        let one_word = build_term_matrix(&[toks("w")], &keys(1)).unwrap();
        let model = fit_lda(&one_word, &LdaConfig::new(1, 3)).unwrap();
        assert_abs_diff_eq!(elbo(&model, &one_word).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn model_text_round_trip() {
        let m = small_corpus();
        let model = fit_lda(&m, &LdaConfig::new(2, 4)).unwrap();
        let mut buf = Vec::new();
        model.write_to(&mut buf).unwrap();
        let back = LdaModel::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.alpha, model.alpha);
        assert_eq!(back.beta, model.beta);
        for (a, b) in back.lambda.iter().zip(&model.lambda) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12 * b.abs().max(1.0));
        }
    }
}

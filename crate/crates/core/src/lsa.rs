//! Latent semantic analysis: TF-IDF weighting, column normalization,
//! randomized truncated SVD, and topic-by-document scores.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::corpus::{DocKey, SparseTermMatrix};
use crate::error::{Error, Result};

/// Real-valued sparse terms x documents matrix, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfMatrix {
    n_words: usize,
    doc_keys: Vec<DocKey>,
    columns: Vec<Vec<(usize, f64)>>,
    normalized: bool,
}

impl TfidfMatrix {
    pub fn from_columns(n_words: usize, doc_keys: Vec<DocKey>, columns: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(doc_keys.len(), columns.len());
        TfidfMatrix {
            n_words,
            doc_keys,
            columns,
            normalized: false,
        }
    }

    /// Dense matrix wrapper with synthetic doc keys, mostly for tests.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let keys = (0..a.ncols())
            .map(|j| DocKey::new("doc", j as i32).expect("valid key"))
            .collect();
        let columns = (0..a.ncols())
            .map(|j| {
                (0..a.nrows())
                    .filter(|&i| a[(i, j)] != 0.0)
                    .map(|i| (i, a[(i, j)]))
                    .collect()
            })
            .collect();
        TfidfMatrix::from_columns(a.nrows(), keys, columns)
    }

    pub fn n_words(&self) -> usize {
        self.n_words
    }

    pub fn n_docs(&self) -> usize {
        self.columns.len()
    }

    pub fn doc_keys(&self) -> &[DocKey] {
        &self.doc_keys
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n_words, self.n_docs());
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                a[(i, j)] = v;
            }
        }
        a
    }

    /// `self * x` for a dense `n x c` matrix.
    fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let c = x.ncols();
        let mut y = DMatrix::zeros(self.n_words, c);
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                for t in 0..c {
                    y[(i, t)] += v * x[(j, t)];
                }
            }
        }
        y
    }

    /// `self^T * x` for a dense `m x c` matrix.
    fn tr_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let c = x.ncols();
        let rows: Vec<Vec<f64>> = self
            .columns
            .par_iter()
            .map(|col| {
                let mut row = vec![0.0; c];
                for &(i, v) in col {
                    for (t, r) in row.iter_mut().enumerate() {
                        *r += v * x[(i, t)];
                    }
                }
                row
            })
            .collect();
        DMatrix::from_fn(self.n_docs(), c, |j, t| rows[j][t])
    }
}

/// Weights each count by `ln(n / df)`. Words present in every document
/// vanish.
pub fn tfidf(matrix: &SparseTermMatrix) -> TfidfMatrix {
    let n = matrix.n_docs() as f64;
    let idf: Vec<f64> = matrix.vocab().df().iter().map(|&df| (n / df as f64).ln()).collect();
    let columns = matrix
        .columns()
        .iter()
        .map(|col| {
            col.iter()
                .filter(|&&(w, _)| idf[w] != 0.0)
                .map(|&(w, c)| (w, c as f64 * idf[w]))
                .collect()
        })
        .collect();
    TfidfMatrix::from_columns(matrix.n_words(), matrix.doc_keys().to_vec(), columns)
}

/// Scales every non-zero column to unit Euclidean norm. Zero columns stay zero.
pub fn normalize_columns(matrix: &TfidfMatrix) -> TfidfMatrix {
    let columns = matrix
        .columns
        .iter()
        .map(|col| {
            let norm = col.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                col.clone()
            } else {
                col.iter().map(|&(i, v)| (i, v / norm)).collect()
            }
        })
        .collect();
    TfidfMatrix {
        n_words: matrix.n_words,
        doc_keys: matrix.doc_keys.clone(),
        columns,
        normalized: true,
    }
}

/// Truncated SVD `A ~ U diag(sigma) Vt`, with `U` (m x k), `Vt` (k x n).
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub vt: DMatrix<f64>,
}

impl SvdFactors {
    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.sigma));
        &self.u * s * &self.vt
    }

    /// Flips each singular pair so the largest-magnitude entry of each `U`
    /// column is positive.
    fn canonicalize_signs(&mut self) {
        for t in 0..self.k() {
            let col = self.u.column(t);
            let pivot = col
                .iter()
                .copied()
                .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
            if pivot < 0.0 {
                self.u.column_mut(t).neg_mut();
                self.vt.row_mut(t).neg_mut();
            }
        }
    }

    /// Text format: `m n k` header, sigma on one line, then `U` and `Vt`
    /// row by row, all values with 17 significant digits.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let (m, k, n) = (self.u.nrows(), self.k(), self.vt.ncols());
        writeln!(out, "{m} {n} {k}")?;
        write_row(&mut out, self.sigma.iter().copied())?;
        for i in 0..m {
            write_row(&mut out, self.u.row(i).iter().copied())?;
        }
        for t in 0..k {
            write_row(&mut out, self.vt.row(t).iter().copied())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let mut rows = NumberRows::new(input);
        let header = rows.next_row()?;
        let [m, n, k] = header[..] else {
            return Err(Error::parse(1, "header must be `m n k`"));
        };
        let (m, n, k) = (m as usize, n as usize, k as usize);
        let sigma = rows.next_row_len(k)?;
        let mut u = DMatrix::zeros(m, k);
        for i in 0..m {
            for (t, v) in rows.next_row_len(k)?.into_iter().enumerate() {
                u[(i, t)] = v;
            }
        }
        let mut vt = DMatrix::zeros(k, n);
        for t in 0..k {
            for (j, v) in rows.next_row_len(n)?.into_iter().enumerate() {
                vt[(t, j)] = v;
            }
        }
        Ok(SvdFactors { u, sigma, vt })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        SvdFactors::read_from(fs::File::open(path)?)
    }
}

pub(crate) fn write_row<W: Write>(out: &mut W, values: impl Iterator<Item = f64>) -> Result<()> {
    let line = values.map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ");
    writeln!(out, "{line}")?;
    Ok(())
}

/// Line reader for whitespace-separated numeric rows.
pub(crate) struct NumberRows<R> {
    lines: std::io::Lines<BufReader<R>>,
    line_no: usize,
}

impl<R: Read> NumberRows<R> {
    pub(crate) fn new(input: R) -> Self {
        NumberRows {
            lines: BufReader::new(input).lines(),
            line_no: 0,
        }
    }

    pub(crate) fn next_row(&mut self) -> Result<Vec<f64>> {
        self.line_no += 1;
        let line = self
            .lines
            .next()
            .ok_or_else(|| Error::parse(self.line_no, "unexpected end of input"))??;
        let ln = self.line_no;
        line.split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::parse(ln, format!("bad number {t:?}")))
            })
            .collect()
    }

    pub(crate) fn next_row_len(&mut self, len: usize) -> Result<Vec<f64>> {
        let row = self.next_row()?;
        if row.len() != len {
            return Err(Error::parse(
                self.line_no,
                format!("expected {len} values, found {}", row.len()),
            ));
        }
        Ok(row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvdParams {
    pub k: usize,
    pub seed: u64,
    pub oversample: usize,
    pub power_iters: usize,
}

impl SvdParams {
    pub fn new(k: usize, seed: u64) -> Self {
        SvdParams {
            k,
            seed,
            oversample: 10,
            power_iters: 4,
        }
    }
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Randomized range finder followed by an exact SVD of the projected matrix.
/// Deterministic for a fixed seed.
pub fn randomized_svd(a: &TfidfMatrix, params: SvdParams) -> Result<SvdFactors> {
    let (m, n) = (a.n_words(), a.n_docs());
    let max_k = m.min(n);
    if params.k == 0 || params.k > max_k {
        return Err(Error::RankOutOfRange {
            k: params.k,
            max: max_k,
        });
    }
    let width = (params.k + params.oversample).min(max_k);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let omega = DMatrix::from_fn(n, width, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal_basis(a.mul_dense(&omega));
    for _ in 0..params.power_iters {
        let z = orthonormal_basis(a.tr_mul_dense(&q));
        q = orthonormal_basis(a.mul_dense(&z));
    }
    // B = Q^T A, computed as (A^T Q)^T.
    let b = a.tr_mul_dense(&q).transpose();
    let mut factors = svd_of_dense(&b, params.k);
    factors.u = &q * factors.u;
    factors.canonicalize_signs();
    Ok(factors)
}

/// Exact SVD of the dense matrix, truncated to `k`. Intended for small inputs
/// (min(m, n) up to a few hundred).
pub fn dense_svd(a: &TfidfMatrix, k: usize) -> Result<SvdFactors> {
    let max_k = a.n_words().min(a.n_docs());
    if k == 0 || k > max_k {
        return Err(Error::RankOutOfRange { k, max: max_k });
    }
    let mut factors = svd_of_dense(&a.to_dense(), k);
    factors.canonicalize_signs();
    Ok(factors)
}

fn svd_of_dense(b: &DMatrix<f64>, k: usize) -> SvdFactors {
    let svd = b.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    order.truncate(k);
    SvdFactors {
        u: DMatrix::from_fn(u.nrows(), k, |i, t| u[(i, order[t])]),
        sigma: order.iter().map(|&t| svd.singular_values[t]).collect(),
        vt: DMatrix::from_fn(k, vt.ncols(), |t, j| vt[(order[t], j)]),
    }
}

/// Topic-by-document scores `diag(sigma) * Vt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDocMatrix {
    pub scores: DMatrix<f64>,
    pub doc_keys: Vec<DocKey>,
}

impl TopicDocMatrix {
    /// One feature row per document.
    pub fn doc_features(&self) -> Vec<Vec<f64>> {
        (0..self.scores.ncols())
            .map(|j| self.scores.column(j).iter().copied().collect())
            .collect()
    }
}

pub fn topic_doc_scores(f: &SvdFactors, doc_keys: &[DocKey]) -> TopicDocMatrix {
    let mut scores = f.vt.clone();
    for (t, &s) in f.sigma.iter().enumerate() {
        scores.row_mut(t).scale_mut(s);
    }
    TopicDocMatrix {
        scores,
        doc_keys: doc_keys.to_vec(),
    }
}

/// Highest-|weight| words of one topic, ties broken by vocabulary order.
pub fn top_words(f: &SvdFactors, words: &[String], topic: usize, count: usize) -> Result<Vec<(String, f64)>> {
    if topic >= f.k() {
        return Err(Error::TopicOutOfRange { topic, k: f.k() });
    }
    if words.len() != f.u.nrows() {
        return Err(Error::VocabularyMismatch {
            expected: f.u.nrows(),
            found: words.len(),
        });
    }
    let col = f.u.column(topic);
    let mut idx: Vec<usize> = (0..col.len()).collect();
    idx.sort_by(|&a, &b| col[b].abs().total_cmp(&col[a].abs()).then(a.cmp(&b)));
    Ok(idx
        .into_iter()
        .take(count)
        .map(|i| (words[i].clone(), col[i]))
        .collect())
}

/// TF-IDF, normalize, SVD: the full topic-feature path for one corpus.
pub fn lsa_features(matrix: &SparseTermMatrix, params: SvdParams) -> Result<(SvdFactors, TopicDocMatrix)> {
    let a = normalize_columns(&tfidf(matrix));
    let factors = randomized_svd(&a, params)?;
    let scores = topic_doc_scores(&factors, matrix.doc_keys());
    Ok((factors, scores))
}

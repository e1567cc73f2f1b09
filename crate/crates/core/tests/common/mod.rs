//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's numerical code; inputs and outputs are plain
//! vectors.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textscale_core::corpus::build_term_matrix;
use textscale_core::{DocKey, SparseTermMatrix};

pub fn key(entity: &str, year: i32) -> DocKey {
    DocKey::new(entity, year).unwrap()
}

/// Builds a term matrix from per-document word counts over words `w0..`,
/// spelled with letters so the tokenizer would accept them.
pub fn matrix_from_counts(counts: &[Vec<u64>], keys: &[DocKey]) -> SparseTermMatrix {
    let tokens: Vec<Vec<String>> = counts
        .iter()
        .map(|doc| {
            doc.iter()
                .enumerate()
                .flat_map(|(w, &c)| std::iter::repeat_n(word(w), c as usize))
                .collect()
        })
        .collect();
    build_term_matrix(&tokens, keys).unwrap()
}

pub fn word(i: usize) -> String {
    format!("w{}", (b'a' + i as u8) as char)
}

// ---------------------------------------------------------------------------
// Wordscores

pub struct WsOracle {
    /// Per word: score, or None when the word never occurs in training.
    pub word_scores: Vec<Option<f64>>,
    pub sigma_t: f64,
}

pub struct WsVirgin {
    pub raw: f64,
    pub variance: f64,
    pub n_tokens: u64,
    pub std_error: f64,
}

fn pop_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Word scores straight from the definitions: relative frequencies per
/// training document, normalized across documents per word.
pub fn ws_fit(training: &[Vec<u64>], scores: &[f64], n_words: usize) -> WsOracle {
    let rel: Vec<Vec<f64>> = training
        .iter()
        .map(|doc| {
            let total: u64 = doc.iter().sum();
            (0..n_words)
                .map(|w| *doc.get(w).unwrap_or(&0) as f64 / total as f64)
                .collect()
        })
        .collect();
    let word_scores = (0..n_words)
        .map(|w| {
            let denom: f64 = rel.iter().map(|r| r[w]).sum();
            if denom == 0.0 {
                return None;
            }
            Some(rel.iter().zip(scores).map(|(r, a)| r[w] / denom * a).sum())
        })
        .collect();
    WsOracle {
        word_scores,
        sigma_t: pop_sd(scores),
    }
}

pub fn ws_score(model: &WsOracle, doc: &[u64]) -> Option<WsVirgin> {
    let scored: Vec<(f64, f64)> = doc
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .filter_map(|(w, &c)| model.word_scores[w].map(|s| (c as f64, s)))
        .collect();
    let n: f64 = scored.iter().map(|p| p.0).sum();
    if n == 0.0 {
        return None;
    }
    let raw: f64 = scored.iter().map(|(c, s)| c / n * s).sum();
    let variance: f64 = scored.iter().map(|(c, s)| c / n * (s - raw).powi(2)).sum();
    Some(WsVirgin {
        raw,
        variance,
        n_tokens: n as u64,
        std_error: (variance / n).sqrt(),
    })
}

/// Rescaled scores and standard errors.
pub fn ws_rescale(raw: &[f64], se: &[f64], sigma_t: f64) -> (Vec<f64>, Vec<f64>) {
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let factor = sigma_t / pop_sd(raw);
    (
        raw.iter().map(|s| (s - mean) * factor + mean).collect(),
        se.iter().map(|e| e * factor).collect(),
    )
}

// ---------------------------------------------------------------------------
// Singular values by one-sided Jacobi rotations.

/// Singular values of a row-major `rows x cols` matrix, descending.
pub fn jacobi_singular_values(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    // Work on columns of the taller orientation.
    type Getter<'a> = Box<dyn Fn(usize, usize) -> f64 + 'a>;
    let (m, n, get): (usize, usize, Getter) = if rows >= cols {
        (rows, cols, Box::new(|i, j| a[i * cols + j]))
    } else {
        (cols, rows, Box::new(|i, j| a[j * cols + i]))
    };
    let mut c: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| get(i, j)).collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = c[p].iter().map(|x| x * x).sum();
                let beta: f64 = c[q].iter().map(|x| x * x).sum();
                let gamma: f64 = c[p].iter().zip(&c[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..m {
                    let (x, y) = (c[p][i], c[q][i]);
                    c[p][i] = cs * x - sn * y;
                    c[q][i] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = c
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

// ---------------------------------------------------------------------------
// Regression trees

/// Sum of the two sides' mean squared errors, computed directly.
pub fn two_sided_mse(ys_left: &[f64], ys_right: &[f64]) -> f64 {
    let mse = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / v.len() as f64
    };
    mse(ys_left) + mse(ys_right)
}

/// Best objective over every feature and every threshold between distinct
/// consecutive values, keeping at least `l` samples per side.
pub fn exhaustive_best_split(x: &[Vec<f64>], y: &[f64], sample: &[usize], l: usize) -> Option<f64> {
    let mut best: Option<f64> = None;
    for j in 0..x[0].len() {
        let mut values: Vec<f64> = sample.iter().map(|&i| x[i][j]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let s = (pair[0] + pair[1]) / 2.0;
            let (left, right): (Vec<usize>, Vec<usize>) = sample.iter().partition(|&&i| x[i][j] <= s);
            if left.len() < l || right.len() < l {
                continue;
            }
            let yl: Vec<f64> = left.iter().map(|&i| y[i]).collect();
            let yr: Vec<f64> = right.iter().map(|&i| y[i]).collect();
            let obj = two_sided_mse(&yl, &yr);
            if best.is_none_or(|b| obj < b) {
                best = Some(obj);
            }
        }
    }
    best
}

/// A small bagged forest written independently of the library: exhaustive
/// midpoint splits on all features, at least `l` samples per side.
pub struct RefTree {
    nodes: Vec<RefNode>,
}

enum RefNode {
    Leaf(f64),
    Split(usize, f64, usize, usize),
}

impl RefTree {
    pub fn fit(x: &[Vec<f64>], y: &[f64], sample: &[usize], l: usize) -> RefTree {
        let mut tree = RefTree { nodes: Vec::new() };
        tree.grow(x, y, sample.to_vec(), l);
        tree
    }

    fn grow(&mut self, x: &[Vec<f64>], y: &[f64], sample: Vec<usize>, l: usize) -> usize {
        let id = self.nodes.len();
        let mean = sample.iter().map(|&i| y[i]).sum::<f64>() / sample.len() as f64;
        self.nodes.push(RefNode::Leaf(mean));
        let pure = sample.iter().all(|&i| y[i] == y[sample[0]]);
        if pure || sample.len() < 2 * l {
            return id;
        }
        let mut best: Option<(f64, usize, f64)> = None;
        for j in 0..x[0].len() {
            let mut values: Vec<f64> = sample.iter().map(|&i| x[i][j]).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            for pair in values.windows(2) {
                let s = (pair[0] + pair[1]) / 2.0;
                let yl: Vec<f64> = sample.iter().filter(|&&i| x[i][j] <= s).map(|&i| y[i]).collect();
                let yr: Vec<f64> = sample.iter().filter(|&&i| x[i][j] > s).map(|&i| y[i]).collect();
                if yl.len() < l || yr.len() < l {
                    continue;
                }
                let obj = two_sided_mse(&yl, &yr);
                if best.is_none_or(|b| obj < b.0) {
                    best = Some((obj, j, s));
                }
            }
        }
        if let Some((_, j, s)) = best {
            let (left, right): (Vec<usize>, Vec<usize>) = sample.iter().partition(|&&i| x[i][j] <= s);
            let li = self.grow(x, y, left, l);
            let ri = self.grow(x, y, right, l);
            self.nodes[id] = RefNode::Split(j, s, li, ri);
        }
        id
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                RefNode::Leaf(v) => return v,
                RefNode::Split(j, s, l, r) => id = if row[j] <= s { l } else { r },
            }
        }
    }
}

pub fn reference_forest_predict(
    x: &[Vec<f64>],
    y: &[f64],
    n_trees: usize,
    l: usize,
    seed: u64,
    rows: &[Vec<f64>],
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = y.len();
    let trees: Vec<RefTree> = (0..n_trees)
        .map(|_| {
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            RefTree::fit(x, y, &sample, l)
        })
        .collect();
    rows.iter()
        .map(|r| trees.iter().map(|t| t.predict(r)).sum::<f64>() / n_trees as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// Correlation

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Ranks by counting, ties get the average rank.
pub fn naive_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

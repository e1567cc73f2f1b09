//! Comparison statistics between score tables: correlations, per-year
//! summaries, discrepancy rankings, confidence-interval overlap counts,
//! difference-of-means tests, and the batch grid runner.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::corpus::DocKey;
use crate::error::{Error, Result};
use crate::pipeline::{run_batch, BatchSpec, CorpusInputs, FeatureCache, TrainSplit};
use crate::table::ScoreTable;

/// Score pairs for the keys both tables share, in `a`'s row order.
pub fn shared_scores(a: &ScoreTable, b: &ScoreTable) -> Vec<(DocKey, f64, f64)> {
    let other: HashMap<&DocKey, f64> = b.rows().iter().map(|r| (&r.key, r.score)).collect();
    a.rows()
        .iter()
        .filter_map(|r| other.get(&r.key).map(|&s| (r.key.clone(), r.score, s)))
        .collect()
}

fn pearson_slices(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("first table"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("second table"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation over the keys both tables share.
pub fn pearson(a: &ScoreTable, b: &ScoreTable) -> Result<f64> {
    let shared = shared_scores(a, b);
    if shared.len() < 2 {
        return Err(Error::TooFewSharedKeys(shared.len()));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = shared.iter().map(|(_, x, y)| (*x, *y)).unzip();
    pearson_slices(&x, &y)
}

/// Ranks starting at 1, tied values sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation of two equal-length samples.
pub fn spearman_slices(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(format!("{} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::TooFewSharedKeys(x.len()));
    }
    pearson_slices(&average_ranks(x), &average_ranks(y))
}

/// Spearman rank correlation over shared keys.
pub fn spearman(a: &ScoreTable, b: &ScoreTable) -> Result<f64> {
    let shared = shared_scores(a, b);
    let (x, y): (Vec<f64>, Vec<f64>) = shared.iter().map(|(_, x, y)| (*x, *y)).unzip();
    spearman_slices(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearSummary {
    /// `None` for the all-years row.
    pub year: Option<i32>,
    pub n: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

fn summarize(year: Option<i32>, values: &[f64]) -> YearSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    YearSummary {
        year,
        n: values.len(),
        mean,
        std_dev: var.sqrt(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// One row per year in ascending order, then an all-years row.
pub fn summary_by_year(scores: &ScoreTable) -> Result<Vec<YearSummary>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("score table"));
    }
    let mut by_year: std::collections::BTreeMap<i32, Vec<f64>> = Default::default();
    for r in scores.rows() {
        by_year.entry(r.key.year).or_default().push(r.score);
    }
    let mut out: Vec<YearSummary> = by_year.iter().map(|(&y, v)| summarize(Some(y), v)).collect();
    let all: Vec<f64> = scores.rows().iter().map(|r| r.score).collect();
    out.push(summarize(None, &all));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub key: DocKey,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancies {
    /// Largest `a - b` first.
    pub positive: Vec<Discrepancy>,
    /// Smallest (most negative) `a - b` first.
    pub negative: Vec<Discrepancy>,
}

/// Top `top` keys by `a - b` in each direction. Ties keep key order.
pub fn discrepancies(a: &ScoreTable, b: &ScoreTable, top: usize) -> Discrepancies {
    let mut all: Vec<Discrepancy> = shared_scores(a, b)
        .into_iter()
        .map(|(key, a, b)| Discrepancy {
            key,
            a,
            b,
            delta: a - b,
        })
        .collect();
    all.sort_by(|x, y| x.key.cmp(&y.key));
    let mut positive = all.clone();
    positive.sort_by(|x, y| y.delta.total_cmp(&x.delta));
    positive.truncate(top);
    let mut negative = all;
    negative.sort_by(|x, y| x.delta.total_cmp(&y.delta));
    negative.truncate(top);
    Discrepancies { positive, negative }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapStats {
    /// Number of other keys whose interval intersects this key's interval.
    pub counts: Vec<(DocKey, usize)>,
    pub mean: f64,
}

/// Counts, for every row, how many other rows have intersecting (closed)
/// confidence intervals.
pub fn ci_overlap_stats(scores: &ScoreTable) -> Result<OverlapStats> {
    let mut intervals = Vec::with_capacity(scores.len());
    for r in scores.rows() {
        let (lo, hi) = r.ci.ok_or_else(|| Error::MissingInterval(r.key.clone()))?;
        if lo > hi {
            return Err(Error::InvalidConfig(format!(
                "interval of {} has ci_low > ci_high",
                r.key
            )));
        }
        intervals.push((lo, hi));
    }
    let mut lows: Vec<f64> = intervals.iter().map(|i| i.0).collect();
    let mut highs: Vec<f64> = intervals.iter().map(|i| i.1).collect();
    lows.sort_by(f64::total_cmp);
    highs.sort_by(f64::total_cmp);
    let n = intervals.len();
    let counts: Vec<(DocKey, usize)> = scores
        .rows()
        .iter()
        .zip(&intervals)
        .map(|(r, &(lo, hi))| {
            let ends_before = highs.partition_point(|&h| h < lo);
            let starts_after = n - lows.partition_point(|&l| l <= hi);
            (r.key.clone(), n - 1 - ends_before - starts_after)
        })
        .collect();
    let mean = if n == 0 {
        0.0
    } else {
        counts.iter().map(|c| c.1 as f64).sum::<f64>() / n as f64
    };
    Ok(OverlapStats { counts, mean })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanDifference {
    pub z: f64,
    /// Two-sided normal p-value.
    pub p: f64,
    /// One-sided p-value in the direction of the observed difference.
    pub p_one_sided: f64,
}

/// Normal-approximation test of equal group means.
pub fn diff_of_means(g1: GroupStats, g2: GroupStats) -> Result<MeanDifference> {
    if !(g1.std_error > 0.0 && g2.std_error > 0.0) {
        return Err(Error::InvalidConfig("standard errors must be positive".into()));
    }
    let z = (g1.mean - g2.mean) / (g1.std_error.powi(2) + g2.std_error.powi(2)).sqrt();
    let tail = 0.5 * erfc(z.abs() / std::f64::consts::SQRT_2);
    Ok(MeanDifference {
        z,
        p: (2.0 * tail).min(1.0),
        p_one_sided: tail,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeSize {
    pub key: DocKey,
    pub size: f64,
    pub range: f64,
}

/// Pairs each document's size with the width of its confidence interval.
pub fn range_vs_size(scores: &ScoreTable, sizes: &HashMap<DocKey, f64>) -> Result<Vec<RangeSize>> {
    scores
        .rows()
        .iter()
        .map(|r| {
            let (lo, hi) = r.ci.ok_or_else(|| Error::MissingInterval(r.key.clone()))?;
            let size = *sizes.get(&r.key).ok_or_else(|| Error::MissingKey(r.key.clone()))?;
            Ok(RangeSize {
                key: r.key.clone(),
                size,
                range: hi - lo,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub spec: BatchSpec,
    /// Correlation with the reference table, or the error that stopped the
    /// batch.
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub entries: Vec<GridEntry>,
}

impl GridReport {
    pub fn correlations(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.outcome.as_ref().ok().copied()).collect()
    }

    /// Plain-text table: one row per approach/variant/k, one column per tree
    /// method, wordscores batches listed on their own rows.
    pub fn render(&self) -> String {
        use crate::trees::TreeMethod;
        let methods = [
            TreeMethod::SingleTree,
            TreeMethod::RandomForest,
            TreeMethod::ExtremeForest,
            TreeMethod::AdaboostR2,
        ];
        let cell = |o: &std::result::Result<f64, String>| match o {
            Ok(r) => format!("{r:>8.3}"),
            Err(_) => format!("{:>8}", "err"),
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<28} {:>8} {:>8} {:>8} {:>8}",
            "batch", "tree", "rf", "erf", "ada"
        );
        let mut rows: Vec<(String, [Option<String>; 4])> = Vec::new();
        for e in &self.entries {
            if e.spec.approach == crate::pipeline::Approach::Wordscores {
                let _ = writeln!(out, "{:<28} {}", e.spec.row_label(), cell(&e.outcome));
                continue;
            }
            let label = e.spec.row_label();
            let col = methods.iter().position(|m| *m == e.spec.tree_method).unwrap_or(0);
            match rows.iter_mut().find(|(l, _)| *l == label) {
                Some((_, cells)) => cells[col] = Some(cell(&e.outcome)),
                None => {
                    let mut cells: [Option<String>; 4] = Default::default();
                    cells[col] = Some(cell(&e.outcome));
                    rows.push((label, cells));
                }
            }
        }
        for (label, cells) in rows {
            let cells: Vec<String> = cells
                .into_iter()
                .map(|c| c.unwrap_or_else(|| format!("{:>8}", "-")))
                .collect();
            let _ = writeln!(out, "{label:<28} {}", cells.join(" "));
        }
        out
    }
}

/// Runs every batch and correlates its scores with `reference`. Batches run
/// in parallel; topic features are computed once per distinct
/// (variant, approach, k, alpha, seed) and shared.
pub fn run_batch_grid(
    inputs: &CorpusInputs,
    specs: &[BatchSpec],
    split: &TrainSplit,
    reference: &ScoreTable,
) -> GridReport {
    let cache = FeatureCache::default();
    let entries = specs
        .par_iter()
        .map(|spec| {
            let outcome = run_batch(inputs, spec, split, &cache)
                .and_then(|scores| pearson(&scores, reference))
                .map_err(|e| e.to_string());
            GridEntry {
                spec: spec.clone(),
                outcome,
            }
        })
        .collect();
    GridReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn key(e: &str, y: i32) -> DocKey {
        DocKey::new(e, y).unwrap()
    }

    fn table(values: &[f64]) -> ScoreTable {
        ScoreTable::from_pairs(
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| (key(&format!("k{i}"), 2000), v)),
        )
        .unwrap()
    }

    #[test]
    fn pearson_examples() {
        let a = table(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(pearson(&a, &a).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson(&a, &table(&[-1.0, -2.0, -3.0])).unwrap(), -1.0, epsilon = 1e-15);
        // sxy = 5, sxx = 2, syy = 38/3
        let r = pearson(&a, &table(&[2.0, 4.0, 7.0])).unwrap();
        assert_abs_diff_eq!(r, 5.0 / (2.0f64 * 38.0 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r, 0.99340, epsilon = 1e-5);
    }

    #[test]
    fn pearson_errors() {
        let a = table(&[1.0]);
        assert!(matches!(pearson(&a, &a), Err(Error::TooFewSharedKeys(1))));
        let flat = table(&[2.0, 2.0]);
        assert!(matches!(
            pearson(&flat, &table(&[1.0, 3.0])),
            Err(Error::ZeroVariance(_))
        ));
    }

    #[test]
    fn spearman_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
        let r = spearman_slices(&[1.0, 2.0, 3.0, 4.0], &[1.0, 4.0, 9.0, 16.0]).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn summary_rows() {
        let rows = [
            ("a", 2000, 1.0),
            ("b", 2000, 3.0),
            ("c", 2000, 5.0),
            ("a", 2001, -1.0),
            ("b", 2001, 1.0),
            ("c", 2002, 4.0),
        ];
        let t = ScoreTable::from_pairs(rows.iter().map(|(e, y, s)| (key(e, *y), *s))).unwrap();
        let s = summary_by_year(&t).unwrap();
        assert_eq!(s.len(), 4);
        // 2000: mean 3, population var (4+0+4)/3
        assert_eq!(
            (s[0].year, s[0].n, s[0].mean, s[0].min, s[0].max),
            (Some(2000), 3, 3.0, 1.0, 5.0)
        );
        assert_abs_diff_eq!(s[0].std_dev, (8.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_eq!((s[1].mean, s[1].std_dev), (0.0, 1.0));
        assert_eq!((s[2].n, s[2].std_dev), (1, 0.0));
        let all = &s[3];
        assert_eq!(all.year, None);
        assert_eq!(all.n, 6);
        assert_abs_diff_eq!(all.mean, 13.0 / 6.0, epsilon = 1e-15);
        assert_eq!((all.min, all.max), (-1.0, 5.0));
    }

    #[test]
    fn discrepancy_ranking() {
        let a = table(&[5.0, 1.0, 3.0, 0.0, 2.0]);
        let b = table(&[1.0, 1.0, 4.0, 2.0, 0.0]);
        // deltas: k0 +4, k1 0, k2 -1, k3 -2, k4 +2
        let d = discrepancies(&a, &b, 2);
        let pos: Vec<f64> = d.positive.iter().map(|x| x.delta).collect();
        let neg: Vec<f64> = d.negative.iter().map(|x| x.delta).collect();
        assert_eq!(pos, vec![4.0, 2.0]);
        assert_eq!(neg, vec![-2.0, -1.0]);
        assert_eq!(d.positive[0].key, key("k0", 2000));
        assert_eq!(discrepancies(&a, &b, 50).positive.len(), 5);

        let same = discrepancies(&a, &a, 5);
        assert!(same.positive.iter().all(|x| x.delta == 0.0));
        let keys: Vec<&DocKey> = same.positive.iter().map(|x| &x.key).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    fn with_ci(intervals: &[(f64, f64)]) -> ScoreTable {
        ScoreTable::new(
            intervals
                .iter()
                .enumerate()
                .map(|(i, &(lo, hi))| crate::table::ScoreRow {
                    key: key(&format!("k{i}"), 2000),
                    score: (lo + hi) / 2.0,
                    std_error: None,
                    ci: Some((lo, hi)),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn overlap_examples() {
        let s = ci_overlap_stats(&with_ci(&[(0.0, 1.0), (2.0, 3.0), (4.0, 5.0)])).unwrap();
        assert_eq!(s.mean, 0.0);
        let s = ci_overlap_stats(&with_ci(&[(0.0, 1.0); 4])).unwrap();
        assert!(s.counts.iter().all(|c| c.1 == 3));
        // touching endpoints count as overlapping
        let s = ci_overlap_stats(&with_ci(&[(0.0, 1.0), (1.0, 2.0), (2.5, 3.0)])).unwrap();
        assert_eq!(s.counts.iter().map(|c| c.1).collect::<Vec<_>>(), vec![1, 1, 0]);
        assert!(ci_overlap_stats(&table(&[1.0])).is_err());
    }

    #[test]
    fn diff_of_means_examples() {
        let g = |mean, std_error, n| GroupStats { mean, std_error, n };
        let d = diff_of_means(g(-0.127, 0.024, 802), g(-0.328, 0.025, 603)).unwrap();
        assert_abs_diff_eq!(d.z, 5.80, epsilon = 0.005);
        assert!(d.p < 1e-5);
        let d = diff_of_means(g(0.3, 0.1, 10), g(0.3, 0.2, 10)).unwrap();
        assert_eq!((d.z, d.p), (0.0, 1.0));
        let swapped = diff_of_means(g(-0.328, 0.025, 603), g(-0.127, 0.024, 802)).unwrap();
        let forward = diff_of_means(g(-0.127, 0.024, 802), g(-0.328, 0.025, 603)).unwrap();
        assert_eq!(swapped.z, -forward.z);
        assert_eq!(swapped.p, forward.p);
        assert!(diff_of_means(g(0.0, 0.0, 1), g(1.0, 0.1, 1)).is_err());
    }

    #[test]
    fn range_pairs() {
        let t = with_ci(&[(0.0, 0.0), (1.0, 1.5)]);
        let sizes: HashMap<DocKey, f64> = [(key("k0", 2000), 10.0), (key("k1", 2000), 3.0)].into();
        let pairs = range_vs_size(&t, &sizes).unwrap();
        assert_eq!((pairs[0].size, pairs[0].range), (10.0, 0.0));
        assert_eq!((pairs[1].size, pairs[1].range), (3.0, 0.5));
        assert!(range_vs_size(&t, &HashMap::new()).is_err());
    }
}

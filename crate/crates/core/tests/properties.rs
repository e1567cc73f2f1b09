mod common;

use common::*;
use proptest::prelude::*;
use textscale_core::corpus::{build_term_matrix, strip_proper_nouns, tokenize};
use textscale_core::eval::{ci_overlap_stats, pearson, spearman_slices};
use textscale_core::trees::weighted_median;
use textscale_core::wordscores::{fit_wordscores, score_virgin, SpreadEstimator, TrainingSet};
use textscale_core::{ScoreRow, ScoreTable, SparseTermMatrix};

fn corpus() -> impl Strategy<Value = (Vec<Vec<u64>>, Vec<f64>)> {
    (2usize..=5, 1usize..=8).prop_flat_map(|(n_train, n_words)| {
        (
            prop::collection::vec(prop::collection::vec(0u64..5, n_words), n_train + 3),
            prop::collection::vec(-5.0f64..5.0, n_train),
        )
    })
}

fn usable(counts: &[Vec<u64>], scores: &[f64]) -> bool {
    counts[..scores.len()].iter().all(|d| d.iter().sum::<u64>() > 0) && scores.iter().any(|&s| s != scores[0])
}

fn fit(counts: &[Vec<u64>], scores: &[f64], order: &[usize]) -> Vec<Option<(f64, f64, f64)>> {
    let keys: Vec<_> = (0..counts.len()).map(|i| key("D", i as i32)).collect();
    let permuted: Vec<Vec<u64>> = order.iter().map(|&i| counts[i].clone()).collect();
    let pkeys: Vec<_> = order.iter().map(|&i| keys[i].clone()).collect();
    let m = matrix_from_counts(&permuted, &pkeys);
    let n = scores.len();
    let mut train: Vec<_> = keys[..n].iter().cloned().zip(scores.iter().copied()).collect();
    train.rotate_left(1);
    let model = fit_wordscores(&m, &TrainingSet::new(train).unwrap(), SpreadEstimator::Population).unwrap();
    keys[n..]
        .iter()
        .map(|k| {
            score_virgin(&model, &m, k)
                .ok()
                .map(|v| (v.raw, v.variance, v.std_error))
        })
        .collect()
}

proptest! {
    #[test]
    fn wordscores_ignore_document_order((counts, scores) in corpus()) {
        prop_assume!(usable(&counts, &scores));
        let identity: Vec<usize> = (0..counts.len()).collect();
        let reversed: Vec<usize> = identity.iter().rev().copied().collect();
        let a = fit(&counts, &scores, &identity);
        let b = fit(&counts, &scores, &reversed);
        for (x, y) in a.iter().zip(&b) {
            match (x, y) {
                (Some(x), Some(y)) => {
                    prop_assert!((x.0 - y.0).abs() < 1e-12);
                    prop_assert!((x.1 - y.1).abs() < 1e-12);
                }
                (None, None) => {}
                _ => prop_assert!(false, "scorability changed"),
            }
        }
    }

    #[test]
    fn unscored_words_change_nothing((counts, scores) in corpus(), extra in 1u64..20) {
        prop_assume!(usable(&counts, &scores));
        let base = fit(&counts, &scores, &(0..counts.len()).collect::<Vec<_>>());
        // A word outside every training document, added to each virgin doc.
        let mut widened: Vec<Vec<u64>> = counts.iter().map(|d| { let mut d = d.clone(); d.push(0); d }).collect();
        for d in widened.iter_mut().skip(scores.len()) {
            *d.last_mut().unwrap() = extra;
        }
        let after = fit(&widened, &scores, &(0..widened.len()).collect::<Vec<_>>());
        prop_assert_eq!(base, after);
    }

    #[test]
    fn word_and_doc_scores_stay_in_range((counts, scores) in corpus()) {
        prop_assume!(usable(&counts, &scores));
        let oracle = ws_fit(&counts[..scores.len()], &scores, counts[0].len());
        let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for s in oracle.word_scores.iter().flatten() {
            prop_assert!(*s >= lo - 1e-12 && *s <= hi + 1e-12);
        }
        for v in fit(&counts, &scores, &(0..counts.len()).collect::<Vec<_>>()).into_iter().flatten() {
            prop_assert!(v.0 >= lo - 1e-12 && v.0 <= hi + 1e-12);
            prop_assert!(v.1 >= 0.0);
        }
    }

    #[test]
    fn pearson_is_symmetric_and_affine_invariant(
        xs in prop::collection::vec(-10.0f64..10.0, 3..30),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * x + i as f64).collect();
        let table = |v: &[f64]| ScoreTable::from_pairs(v.iter().enumerate().map(|(i, &s)| (key("K", i as i32), s))).unwrap();
        let (a, b) = (table(&xs), table(&ys));
        let moved: Vec<f64> = xs.iter().map(|x| x * scale + shift).collect();
        match (pearson(&a, &b), pearson(&b, &a), pearson(&table(&moved), &b)) {
            (Ok(r1), Ok(r2), Ok(r3)) => {
                prop_assert!((r1 - r2).abs() < 1e-12);
                prop_assert!((r1 - r3).abs() < 1e-9);
                prop_assert!((r1 - common::pearson(&xs, &ys)).abs() < 1e-9);
            }
            (Err(_), Err(_), _) => {}
            other => prop_assert!(false, "inconsistent results {:?}", other.0.is_ok()),
        }
    }

    #[test]
    fn spearman_matches_naive_ranks(
        xs in prop::collection::vec(0u8..6, 3..25),
        ys in prop::collection::vec(0u8..6, 3..25),
    ) {
        let n = xs.len().min(ys.len());
        let x: Vec<f64> = xs[..n].iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = ys[..n].iter().map(|&v| v as f64).collect();
        if let Ok(r) = spearman_slices(&x, &y) {
            let want = common::pearson(&naive_ranks(&x), &naive_ranks(&y));
            prop_assert!((r - want).abs() < 1e-12);
        }
    }

    #[test]
    fn overlap_counts_match_pairwise_scan(intervals in prop::collection::vec((-5i32..5, 0i32..4), 1..40)) {
        let rows: Vec<ScoreRow> = intervals
            .iter()
            .enumerate()
            .map(|(i, &(lo, w))| ScoreRow {
                key: key("K", i as i32),
                score: lo as f64 + w as f64 / 2.0,
                std_error: None,
                ci: Some((lo as f64, (lo + w) as f64)),
            })
            .collect();
        let stats = ci_overlap_stats(&ScoreTable::new(rows).unwrap()).unwrap();
        for (i, &(lo, w)) in intervals.iter().enumerate() {
            let want = intervals
                .iter()
                .enumerate()
                .filter(|&(j, &(l2, w2))| j != i && l2 <= lo + w && lo <= l2 + w2)
                .count();
            prop_assert_eq!(stats.counts[i].1, want);
        }
    }

    #[test]
    fn weighted_median_splits_the_weight(
        pairs in prop::collection::vec((-50i32..50, 1u32..10), 1..30),
    ) {
        let preds: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let weights: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let m = weighted_median(&preds, &weights).unwrap();
        let total: f64 = weights.iter().sum();
        let at_or_below: f64 = pairs.iter().filter(|p| p.0 as f64 <= m).map(|p| p.1 as f64).sum();
        let below: f64 = pairs.iter().filter(|p| (p.0 as f64) < m).map(|p| p.1 as f64).sum();
        prop_assert!(at_or_below >= total / 2.0);
        prop_assert!(below < total / 2.0);
    }

    #[test]
    fn term_matrix_text_round_trip(docs in prop::collection::vec(prop::collection::vec(0usize..6, 0..12), 1..6)) {
        let tokens: Vec<Vec<String>> = docs.iter().map(|d| d.iter().map(|&w| word(w)).collect()).collect();
        let keys: Vec<_> = (0..docs.len()).map(|i| key("R", i as i32)).collect();
        let m = build_term_matrix(&tokens, &keys).unwrap();
        let back = SparseTermMatrix::read_from(m.to_text().as_bytes()).unwrap();
        prop_assert_eq!(&back, &m);
        let total: u64 = m.doc_lengths().iter().sum();
        prop_assert_eq!(total as usize, docs.iter().map(Vec::len).sum::<usize>());
    }

    #[test]
    fn proper_noun_stripping_is_idempotent(text in "[A-Za-z ,.'-]{0,80}") {
        let once = strip_proper_nouns(&[tokenize(&text)]);
        let twice = strip_proper_nouns(&once);
        prop_assert_eq!(&once, &twice);
        for w in &once[0] {
            prop_assert!(!w.chars().any(char::is_uppercase));
        }
    }
}

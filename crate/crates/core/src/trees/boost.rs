use super::cart::{fit_tree_on_sample, predict_tree};
use super::forest::tree_rng;
use super::{Dataset, EnsembleConfig, EnsembleModel, TreeMethod};
use crate::error::{Error, Result};

/// Confidence assigned to a tree that fits its training data exactly
/// (largest error zero). Its vote weight is `ln(1 / PERFECT_FIT_BETA)`.
pub const PERFECT_FIT_BETA: f64 = 1e-12;

/// Rounding slack on the `epsilon >= 0.5` stopping test. An adjusted error
/// that is exactly one half in exact arithmetic can come out a few ulps
/// below it; such a tree is no better than chance and is rejected.
pub const EPSILON_SLACK: f64 = 1e-12;

/// Per-round quantities of an AdaBoost.R2 fit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdaboostTrace {
    /// Sample weights each retained tree was grown with; one extra trailing
    /// entry holds the weights after the last update.
    pub weights: Vec<Vec<f64>>,
    /// Largest absolute training error of each retained tree.
    pub max_errors: Vec<f64>,
    /// Weighted adjusted error of each retained tree.
    pub epsilons: Vec<f64>,
    pub betas: Vec<f64>,
    /// Adjusted error of the tree that stopped boosting, if one did.
    pub rejected_epsilon: Option<f64>,
}

pub fn fit_adaboost_r2(data: &Dataset, config: &EnsembleConfig) -> Result<EnsembleModel> {
    fit_adaboost_r2_traced(data, config).map(|(model, _)| model)
}

/// AdaBoost.R2 with linear loss. Trees are grown on the full dataset with
/// weighted means and weighted squared errors.
pub fn fit_adaboost_r2_traced(data: &Dataset, config: &EnsembleConfig) -> Result<(EnsembleModel, AdaboostTrace)> {
    config.validate()?;
    let n = data.n_samples();
    let params = config.tree_params(false);
    let sample: Vec<usize> = (0..n).collect();
    let mut weights = vec![1.0 / n as f64; n];
    let mut trace = AdaboostTrace::default();
    let mut trees = Vec::new();

    for t in 0..config.n_trees {
        let mut rng = tree_rng(config.seed, t as u64);
        let tree = fit_tree_on_sample(data, &sample, &weights, params, &mut rng);
        let errors: Vec<f64> = (0..n)
            .map(|i| (data.y()[i] - predict_tree(&tree, data.row(i))).abs())
            .collect();
        let max_error = errors.iter().copied().fold(0.0, f64::max);
        trace.weights.push(weights.clone());
        if max_error == 0.0 {
            trace.max_errors.push(0.0);
            trace.epsilons.push(0.0);
            trace.betas.push(PERFECT_FIT_BETA);
            trees.push(tree);
            break;
        }
        let adjusted: Vec<f64> = errors.iter().map(|e| e / max_error).collect();
        let epsilon: f64 = adjusted.iter().zip(&weights).map(|(e, w)| e * w).sum();
        if epsilon >= 0.5 - EPSILON_SLACK {
            trace.weights.pop();
            if t == 0 {
                return Err(Error::AdaboostFailed { epsilon });
            }
            trace.rejected_epsilon = Some(epsilon);
            break;
        }
        let beta = if epsilon > 0.0 {
            epsilon / (1.0 - epsilon)
        } else {
            PERFECT_FIT_BETA
        };
        let mut next: Vec<f64> = weights
            .iter()
            .zip(&adjusted)
            .map(|(w, e)| w * beta.powf(1.0 - e))
            .collect();
        let z: f64 = next.iter().sum();
        next.iter_mut().for_each(|w| *w /= z);
        trace.max_errors.push(max_error);
        trace.epsilons.push(epsilon);
        trace.betas.push(beta);
        trees.push(tree);
        weights = next;
    }
    trace.weights.push(weights);
    let model = EnsembleModel {
        config: EnsembleConfig {
            method: TreeMethod::AdaboostR2,
            ..*config
        },
        n_features: data.n_features(),
        trees,
        boost_betas: trace.betas.clone(),
    };
    Ok((model, trace))
}

/// Smallest prediction whose cumulative weight (in ascending prediction
/// order) reaches half the total weight.
pub fn weighted_median(predictions: &[f64], weights: &[f64]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput("weighted median of nothing"));
    }
    if predictions.len() != weights.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions, {} weights",
            predictions.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w <= 0.0) {
        return Err(Error::InvalidConfig(format!("weights must be positive, got {w}")));
    }
    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| predictions[a].total_cmp(&predictions[b]));
    let half = weights.iter().sum::<f64>() / 2.0;
    let mut cumulative = 0.0;
    for &i in &order {
        cumulative += weights[i];
        if cumulative >= half {
            return Ok(predictions[i]);
        }
    }
    Ok(predictions[*order.last().expect("non-empty")])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::TreeMethod;

    #[test]
    fn weighted_median_examples() {
        assert_eq!(weighted_median(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(weighted_median(&[1.0, 2.0], &[3.0, 1.0]).unwrap(), 1.0);
        assert_eq!(weighted_median(&[1.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(weighted_median(&[9.0], &[0.2]).unwrap(), 9.0);
        assert_eq!(weighted_median(&[3.0, 1.0, 2.0], &[1.0, 1.0, 5.0]).unwrap(), 2.0);
        assert!(weighted_median(&[], &[]).is_err());
        assert!(weighted_median(&[1.0], &[0.0]).is_err());
    }

    fn config(n_trees: usize, l: usize) -> EnsembleConfig {
        EnsembleConfig {
            method: TreeMethod::AdaboostR2,
            n_trees,
            c_mode: crate::trees::FeatureSubset::AllX,
            min_node_size: l,
            seed: 3,
        }
    }

    #[test]
    fn perfect_first_tree_terminates() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let d = Dataset::new(&rows, vec![0.0, 0.0, 0.0, 5.0, 5.0, 5.0]).unwrap();
        let (m, trace) = fit_adaboost_r2_traced(&d, &config(50, 1)).unwrap();
        assert_eq!(m.trees.len(), 1);
        assert_eq!(m.boost_betas, vec![PERFECT_FIT_BETA]);
        assert_eq!(trace.max_errors, vec![0.0]);
        assert_eq!(m.predict(&[4.0]), 5.0);
    }

    #[test]
    fn first_tree_failure_is_an_error() {
        // A single leaf over y = (0, 1): both residuals 0.5, epsilon = 1.
        let d = Dataset::new(&[vec![0.0], vec![1.0]], vec![0.0, 1.0]).unwrap();
        match fit_adaboost_r2(&d, &config(3, 5)) {
            Err(Error::AdaboostFailed { epsilon }) => assert_eq!(epsilon, 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn weights_stay_normalized() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i * 13 % 40) as f64, (i % 7) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| (r[0] / 6.0).sin() + r[1] * 0.1).collect();
        let d = Dataset::new(&rows, y).unwrap();
        let (m, trace) = fit_adaboost_r2_traced(&d, &config(30, 5)).unwrap();
        for w in &trace.weights {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(trace.epsilons.iter().all(|&e| e < 0.5));
        assert!(m.boost_betas.iter().all(|&b| b > 0.0 && b < 1.0));
        assert_eq!(m.trees.len(), m.boost_betas.len());
    }
}

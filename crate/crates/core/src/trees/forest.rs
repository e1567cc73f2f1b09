use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cart::{fit_tree_on_sample, predict_tree};
use super::{Dataset, EnsembleConfig, EnsembleModel};
use crate::error::Result;

/// Independent random stream for tree `index` of an ensemble seeded with
/// `seed`.
pub fn tree_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Bagged forest: every tree sees a bootstrap resample of the full dataset
/// size. `extreme` draws random thresholds instead of scanning midpoints.
pub fn fit_forest(data: &Dataset, config: &EnsembleConfig, extreme: bool) -> Result<EnsembleModel> {
    config.validate()?;
    let n = data.n_samples();
    let params = config.tree_params(extreme);
    let weights = vec![1.0; n];
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(config.seed, t as u64);
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            fit_tree_on_sample(data, &sample, &weights, params, &mut rng)
        })
        .collect();
    Ok(EnsembleModel {
        config: *config,
        n_features: data.n_features(),
        trees,
        boost_betas: Vec::new(),
    })
}

/// Arithmetic mean of the member trees' predictions.
pub fn predict_forest(model: &EnsembleModel, row: &[f64]) -> f64 {
    let total: f64 = model.trees.iter().map(|t| predict_tree(t, row)).sum();
    total / model.trees.len() as f64
}

//! Tree-based regressors over topic features: CART regression trees,
//! bagged random forests, extremely randomized forests, and AdaBoost.R2.

mod boost;
mod cart;
mod forest;
mod io;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use boost::{
    fit_adaboost_r2, fit_adaboost_r2_traced, weighted_median, AdaboostTrace, EPSILON_SLACK, PERFECT_FIT_BETA,
};
pub use cart::{fit_tree, fit_tree_on_sample, predict_tree, split_objective, TreeParams};
pub use forest::{fit_forest, predict_forest, tree_rng};

/// Regression samples: one feature row per sample plus its target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
    n_features: usize,
}

impl Dataset {
    pub fn new(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("dataset has no samples"));
        }
        if rows.len() != y.len() {
            return Err(Error::LengthMismatch(format!(
                "{} rows, {} targets",
                rows.len(),
                y.len()
            )));
        }
        let n_features = rows[0].len();
        let mut x = Vec::with_capacity(rows.len() * n_features);
        for row in rows {
            if row.len() != n_features {
                return Err(Error::LengthMismatch("ragged feature rows".into()));
            }
            x.extend_from_slice(row);
        }
        if let Some(v) = x.iter().chain(&y).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("dataset value {v}")));
        }
        Ok(Dataset { x, y, n_features })
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, i: usize, feature: usize) -> f64 {
        self.x[i * self.n_features + feature]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

/// Either a split routing `x[feature] <= threshold` left, or a leaf holding
/// the (weighted) mean target of its samples.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        prediction: f64,
        count: usize,
    },
}

impl TreeNode {
    pub fn leaves(&self) -> Vec<(f64, usize)> {
        match self {
            TreeNode::Leaf { prediction, count } => vec![(*prediction, *count)],
            TreeNode::Split { left, right, .. } => {
                let mut out = left.leaves();
                out.extend(right.leaves());
                out
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// Size of the random feature subset drawn at every node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubset {
    XOver3,
    SqrtX,
    AllX,
}

impl FeatureSubset {
    /// Number of candidate features out of `x`, rounded up and at least one.
    pub fn size(self, x: usize) -> usize {
        let c = match self {
            FeatureSubset::XOver3 => x.div_ceil(3),
            FeatureSubset::SqrtX => (x as f64).sqrt().ceil() as usize,
            FeatureSubset::AllX => x,
        };
        c.clamp(1, x.max(1))
    }
}

impl FromStr for FeatureSubset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x3" | "x_over_3" => Ok(FeatureSubset::XOver3),
            "sqrt" | "sqrt_x" => Ok(FeatureSubset::SqrtX),
            "all" | "all_x" => Ok(FeatureSubset::AllX),
            other => Err(Error::InvalidConfig(format!("unknown feature subset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeMethod {
    SingleTree,
    RandomForest,
    ExtremeForest,
    AdaboostR2,
}

impl TreeMethod {
    pub fn name(self) -> &'static str {
        match self {
            TreeMethod::SingleTree => "tree",
            TreeMethod::RandomForest => "rf",
            TreeMethod::ExtremeForest => "erf",
            TreeMethod::AdaboostR2 => "ada",
        }
    }
}

impl FromStr for TreeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" | "single_tree" => Ok(TreeMethod::SingleTree),
            "rf" | "random_forest" => Ok(TreeMethod::RandomForest),
            "erf" | "extreme_forest" => Ok(TreeMethod::ExtremeForest),
            "ada" | "adaboost_r2" => Ok(TreeMethod::AdaboostR2),
            other => Err(Error::InvalidConfig(format!("unknown tree method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub method: TreeMethod,
    /// Number of trees (forests) or maximum number of boosting rounds.
    pub n_trees: usize,
    pub c_mode: FeatureSubset,
    pub min_node_size: usize,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn new(method: TreeMethod) -> Self {
        EnsembleConfig {
            method,
            n_trees: 10_000,
            c_mode: FeatureSubset::AllX,
            min_node_size: 5,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("tree count must be at least 1".into()));
        }
        if self.min_node_size == 0 {
            return Err(Error::InvalidConfig("min node size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn tree_params(&self, randomized_threshold: bool) -> TreeParams {
        TreeParams {
            min_node_size: self.min_node_size,
            c_mode: self.c_mode,
            randomized_threshold,
        }
    }
}

/// A fitted single tree, forest, or boosted ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub config: EnsembleConfig,
    pub n_features: usize,
    pub trees: Vec<TreeNode>,
    /// AdaBoost confidence values, one per retained tree; empty otherwise.
    pub boost_betas: Vec<f64>,
}

impl EnsembleModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.config.method {
            TreeMethod::SingleTree | TreeMethod::RandomForest | TreeMethod::ExtremeForest => predict_forest(self, row),
            TreeMethod::AdaboostR2 => {
                let preds: Vec<f64> = self.trees.iter().map(|t| predict_tree(t, row)).collect();
                let weights: Vec<f64> = self.boost_betas.iter().map(|b| (1.0 / b).ln()).collect();
                weighted_median(&preds, &weights).expect("fitted ensemble has at least one tree")
            }
        }
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

/// Fits whichever ensemble `config.method` names.
pub fn fit_ensemble(data: &Dataset, config: &EnsembleConfig) -> Result<EnsembleModel> {
    config.validate()?;
    match config.method {
        TreeMethod::SingleTree => {
            let mut rng = tree_rng(config.seed, 0);
            let tree = fit_tree(data, config.tree_params(false), &mut rng);
            Ok(EnsembleModel {
                config: *config,
                n_features: data.n_features(),
                trees: vec![tree],
                boost_betas: Vec::new(),
            })
        }
        TreeMethod::RandomForest => fit_forest(data, config, false),
        TreeMethod::ExtremeForest => fit_forest(data, config, true),
        TreeMethod::AdaboostR2 => fit_adaboost_r2(data, config),
    }
}

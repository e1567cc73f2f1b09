use rand::seq::index;
use rand::Rng;

use super::{Dataset, FeatureSubset, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    /// Minimum number of samples on each side of a split.
    pub min_node_size: usize,
    pub c_mode: FeatureSubset,
    /// Draw one uniform threshold per candidate feature instead of scanning
    /// all midpoints.
    pub randomized_threshold: bool,
}

impl TreeParams {
    pub fn exhaustive(min_node_size: usize) -> Self {
        TreeParams {
            min_node_size,
            c_mode: FeatureSubset::AllX,
            randomized_threshold: false,
        }
    }
}

/// Sum of the weighted mean squared errors of the two sides of a split.
/// Each side's error is `sum w (y - ybar_w)^2 / sum w`.
pub fn split_objective(left: &[(f64, f64)], right: &[(f64, f64)]) -> f64 {
    side_mse(left) + side_mse(right)
}

fn side_mse(side: &[(f64, f64)]) -> f64 {
    let w: f64 = side.iter().map(|&(_, w)| w).sum();
    let mean = side.iter().map(|&(y, w)| y * w).sum::<f64>() / w;
    side.iter().map(|&(y, w)| w * (y - mean) * (y - mean)).sum::<f64>() / w
}

/// Grows an unweighted tree on every sample of `data`.
pub fn fit_tree<R: Rng>(data: &Dataset, params: TreeParams, rng: &mut R) -> TreeNode {
    let sample: Vec<usize> = (0..data.n_samples()).collect();
    let weights = vec![1.0; data.n_samples()];
    fit_tree_on_sample(data, &sample, &weights, params, rng)
}

/// Grows a tree on `sample` (indices into `data`, repeats allowed) with
/// per-sample weights indexed like `data`.
pub fn fit_tree_on_sample<R: Rng>(
    data: &Dataset,
    sample: &[usize],
    weights: &[f64],
    params: TreeParams,
    rng: &mut R,
) -> TreeNode {
    Grower { data, weights, params }.grow(sample.to_vec(), rng)
}

struct Grower<'a> {
    data: &'a Dataset,
    weights: &'a [f64],
    params: TreeParams,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    objective: f64,
}

/// Running weighted sums for one side of a split.
#[derive(Clone, Copy, Default)]
struct Moments {
    w: f64,
    wy: f64,
    wyy: f64,
}

impl Moments {
    fn add(&mut self, y: f64, w: f64) {
        self.w += w;
        self.wy += w * y;
        self.wyy += w * y * y;
    }

    fn sub(self, other: Moments) -> Moments {
        Moments {
            w: self.w - other.w,
            wy: self.wy - other.wy,
            wyy: self.wyy - other.wyy,
        }
    }

    fn mse(self) -> f64 {
        let mean = self.wy / self.w;
        (self.wyy / self.w - mean * mean).max(0.0)
    }
}

impl Grower<'_> {
    fn leaf(&self, sample: &[usize]) -> TreeNode {
        let (mut w, mut wy) = (0.0, 0.0);
        for &i in sample {
            w += self.weights[i];
            wy += self.weights[i] * self.data.y()[i];
        }
        TreeNode::Leaf {
            prediction: wy / w,
            count: sample.len(),
        }
    }

    fn grow<R: Rng>(&self, sample: Vec<usize>, rng: &mut R) -> TreeNode {
        let l = self.params.min_node_size;
        let y = self.data.y();
        let pure = sample.iter().all(|&i| y[i] == y[sample[0]]);
        if pure || sample.len() < 2 * l {
            return self.leaf(&sample);
        }
        let x = self.data.n_features();
        let c = self.params.c_mode.size(x);
        let features: Vec<usize> = if c >= x {
            (0..x).collect()
        } else {
            let mut f = index::sample(rng, x, c).into_vec();
            f.sort_unstable();
            f
        };
        let mut best: Option<Candidate> = None;
        for feature in features {
            let found = if self.params.randomized_threshold {
                self.random_split(&sample, feature, rng)
            } else {
                self.best_split(&sample, feature)
            };
            if let Some(cand) = found {
                if best.as_ref().is_none_or(|b| cand.objective < b.objective) {
                    best = Some(cand);
                }
            }
        }
        let Some(best) = best else {
            return self.leaf(&sample);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = sample
            .iter()
            .partition(|&&i| self.data.value(i, best.feature) <= best.threshold);
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(self.grow(left, rng)),
            right: Box::new(self.grow(right, rng)),
        }
    }

    /// Scans every midpoint between consecutive distinct values.
    fn best_split(&self, sample: &[usize], feature: usize) -> Option<Candidate> {
        let l = self.params.min_node_size;
        let mut order = sample.to_vec();
        order.sort_by(|&a, &b| self.data.value(a, feature).total_cmp(&self.data.value(b, feature)));
        let mut total = Moments::default();
        for &i in &order {
            total.add(self.data.y()[i], self.weights[i]);
        }
        let mut left = Moments::default();
        let mut best: Option<Candidate> = None;
        for p in 1..order.len() {
            let prev = order[p - 1];
            left.add(self.data.y()[prev], self.weights[prev]);
            let (lo, hi) = (self.data.value(prev, feature), self.data.value(order[p], feature));
            if p < l || order.len() - p < l || lo == hi {
                continue;
            }
            let objective = left.mse() + total.sub(left).mse();
            if best.as_ref().is_none_or(|b| objective < b.objective) {
                let mid = lo + (hi - lo) / 2.0;
                best = Some(Candidate {
                    feature,
                    threshold: if mid < hi { mid } else { lo },
                    objective,
                });
            }
        }
        best
    }

    /// Draws one threshold uniformly between the feature's node minimum and
    /// maximum.
    fn random_split<R: Rng>(&self, sample: &[usize], feature: usize, rng: &mut R) -> Option<Candidate> {
        let l = self.params.min_node_size;
        let values = sample.iter().map(|&i| self.data.value(i, feature));
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if lo >= hi {
            return None;
        }
        let threshold = rng.random_range(lo..hi);
        let mut left = Moments::default();
        let mut right = Moments::default();
        let mut n_left = 0;
        for &i in sample {
            if self.data.value(i, feature) <= threshold {
                left.add(self.data.y()[i], self.weights[i]);
                n_left += 1;
            } else {
                right.add(self.data.y()[i], self.weights[i]);
            }
        }
        if n_left < l || sample.len() - n_left < l {
            return None;
        }
        Some(Candidate {
            feature,
            threshold,
            objective: left.mse() + right.mse(),
        })
    }
}

pub fn predict_tree(tree: &TreeNode, row: &[f64]) -> f64 {
    let mut node = tree;
    loop {
        match node {
            TreeNode::Leaf { prediction, .. } => return *prediction,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                node = if row[*feature] <= *threshold { left } else { right };
            }
        }
    }
}

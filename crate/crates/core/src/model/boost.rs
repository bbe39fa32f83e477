use serde::{Deserialize, Serialize};

use super::tree::{Tree, TreeParams};

/// Stagewise squared-error boosting: `base + lr * sum(tree(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoost {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Mean squared training error after each stage, starting with the base.
    pub train_loss: Vec<f64>,
}

fn mse(y: &[f64], f: &[f64]) -> f64 {
    y.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64
}

impl GradientBoost {
    pub fn fit(x: &[Vec<f64>], y: &[f64], n_trees: usize, learning_rate: f64, tree: TreeParams) -> Self {
        let base_score = y.iter().sum::<f64>() / y.len() as f64;
        let mut f = vec![base_score; y.len()];
        let rows: Vec<usize> = (0..y.len()).collect();
        let mut trees = Vec::with_capacity(n_trees);
        let mut train_loss = vec![mse(y, &f)];
        for _ in 0..n_trees {
            let residual: Vec<f64> = y.iter().zip(&f).map(|(a, b)| a - b).collect();
            let t = Tree::fit(x, &residual, &rows, tree, None);
            for (fi, xi) in f.iter_mut().zip(x) {
                *fi += learning_rate * t.predict(xi);
            }
            trees.push(t);
            train_loss.push(mse(y, &f));
        }
        Self {
            base_score,
            learning_rate,
            trees,
            train_loss,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees
            .iter()
            .fold(self.base_score, |acc, t| acc + self.learning_rate * t.predict(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tree_arithmetic() {
        let m = GradientBoost {
            base_score: 2.0,
            learning_rate: 0.1,
            trees: vec![Tree::leaf(5.0)],
            train_loss: vec![],
        };
        assert_eq!(m.predict(&[0.0]), 2.0 + 0.1 * 5.0);
    }

    #[test]
    fn loss_never_increases() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0].sin() * 3.0 + r[1]).collect();
        let params = TreeParams {
            max_depth: 3,
            min_samples_leaf: 2,
            max_features: None,
        };
        let m = GradientBoost::fit(&x, &y, 50, 0.3, params);
        assert_eq!(m.train_loss.len(), 51);
        assert!(m.train_loss.windows(2).all(|w| w[1] <= w[0]));
        assert!(m.train_loss[50] < 0.2 * m.train_loss[0]);
    }
}

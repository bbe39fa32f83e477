//! Squared-error regression trees (CART).

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
}

/// Nodes in preorder; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features considered per split; `None` means all.
    pub max_features: Option<usize>,
}

struct Best {
    feature: usize,
    threshold: f64,
    gain: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    params: TreeParams,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node>,
}

fn mean(y: &[f64], rows: &[usize]) -> f64 {
    rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64
}

/// Threshold strictly below `hi` and at or above `lo`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

impl Builder<'_> {
    fn candidate_features(&mut self) -> Vec<usize> {
        let width = self.x[0].len();
        match (self.params.max_features, self.rng.as_deref_mut()) {
            (Some(k), Some(rng)) if k < width => {
                let mut f = sample(rng, width, k).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..width).collect(),
        }
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<Best> {
        let n = rows.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        if n < 2 * min_leaf {
            return None;
        }
        let total: f64 = rows.iter().map(|&r| self.y[r]).sum();
        let node_mean = total / n as f64;
        let sst: f64 = rows.iter().map(|&r| (self.y[r] - node_mean).powi(2)).sum();
        if sst <= 0.0 {
            return None;
        }
        let parent_score = total * total / n as f64;

        let mut best: Option<(usize, f64, f64)> = None;
        let mut sorted = Vec::with_capacity(n);
        for feature in self.candidate_features() {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.x[r][feature], self.y[r])));
            sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if sorted[0].0 == sorted[n - 1].0 {
                continue;
            }
            let mut left_sum = 0.0;
            for i in 0..n - 1 {
                left_sum += sorted[i].1;
                let nl = i + 1;
                if nl < min_leaf || n - nl < min_leaf || sorted[i].0 == sorted[i + 1].0 {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / (n - nl) as f64 - parent_score;
                if best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((feature, midpoint(sorted[i].0, sorted[i + 1].0), gain));
                }
            }
        }
        let (feature, threshold, gain) = best?;
        if gain <= 1e-12 * sst {
            return None;
        }
        let (left, right) = rows.iter().partition(|&&r| self.x[r][feature] <= threshold);
        Some(Best {
            feature,
            threshold,
            gain,
            left,
            right,
        })
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: mean(self.y, rows),
        });
        if depth >= self.params.max_depth {
            return id;
        }
        let Some(best) = self.best_split(rows) else {
            return id;
        };
        let left = self.grow(&best.left, depth + 1);
        let right = self.grow(&best.right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            gain: best.gain,
        };
        id
    }
}

impl Tree {
    /// Fits on `rows` of `x`/`y`; repeated row indices act as sample weights.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        rows: &[usize],
        params: TreeParams,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Tree {
        assert!(!rows.is_empty(), "tree needs at least one row");
        let mut b = Builder {
            x,
            y,
            params,
            rng,
            nodes: Vec::new(),
        };
        b.grow(rows, 0);
        Tree { nodes: b.nodes }
    }

    pub fn leaf(value: f64) -> Tree {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    /// Index of the leaf `x` falls into.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("leaf_index returns leaves"),
        }
    }

    pub fn add_gains(&self, out: &mut [f64]) {
        for node in &self.nodes {
            if let Node::Split { feature, gain, .. } = node {
                out[*feature] += gain;
            }
        }
    }

    /// Largest split feature index, for schema checks.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    /// Checks child links point forward and in range.
    pub(crate) fn is_well_formed(&self) -> bool {
        !self.nodes.is_empty()
            && self.nodes.iter().enumerate().all(|(i, n)| match n {
                Node::Leaf { value } => value.is_finite(),
                Node::Split {
                    left,
                    right,
                    threshold,
                    ..
                } => *left > i && *right > i && *left < self.nodes.len() && *right < self.nodes.len() && !threshold.is_nan(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: TreeParams = TreeParams {
        max_depth: 8,
        min_samples_leaf: 1,
        max_features: None,
    };

    #[test]
    fn step_function_is_recovered() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 0.0]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i < 4 { 1.0 } else { 5.0 }).collect();
        let rows: Vec<usize> = (0..10).collect();
        let t = Tree::fit(&x, &y, &rows, ALL, None);
        assert_eq!(t.nodes.len(), 3);
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, threshold, .. } if threshold == 3.5));
        assert_eq!(t.predict(&[2.0, 9.0]), 1.0);
        assert_eq!(t.predict(&[7.0, -9.0]), 5.0);
        let mut gains = [0.0; 2];
        t.add_gains(&mut gains);
        assert!(gains[0] > 0.0 && gains[1] == 0.0);
    }

    #[test]
    fn constant_target_is_a_leaf() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let t = Tree::fit(&x, &[2.5; 5], &[0, 1, 2, 3, 4], ALL, None);
        assert_eq!(t, Tree::leaf(2.5));
    }

    #[test]
    fn min_leaf_and_depth_limits() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..8).map(|i| (i * i) as f64).collect();
        let rows: Vec<usize> = (0..8).collect();
        let stump = Tree::fit(&x, &y, &rows, TreeParams { max_depth: 1, ..ALL }, None);
        assert_eq!(stump.nodes.len(), 3);
        let coarse = Tree::fit(&x, &y, &rows, TreeParams { min_samples_leaf: 4, ..ALL }, None);
        assert_eq!(coarse.nodes.len(), 3);
        assert!(coarse.is_well_formed());
    }

    #[test]
    fn adjacent_floats_split_cleanly() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let x = vec![vec![a], vec![b]];
        let t = Tree::fit(&x, &[0.0, 1.0], &[0, 1], ALL, None);
        assert_eq!(t.predict(&[a]), 0.0);
        assert_eq!(t.predict(&[b]), 1.0);
    }
}

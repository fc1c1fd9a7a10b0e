use gridrisk_core::SimRng;

use crate::{DetectError, IforestConfig, Result};

/// `c(n) = 2 H(n-1) - 2 (n-1) / n`, the mean unsuccessful-search path
/// length of a binary search tree on `n` points, with exact harmonic numbers.
pub fn average_path_length(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let h: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    2.0 * h - 2.0 * (n - 1) as f64 / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf { size: usize, depth: usize },
    Split { feature: usize, value: f64, left: usize, right: usize },
}

/// One isolation tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct ITree {
    pub features: Vec<usize>,
    pub nodes: Vec<Node>,
}

impl ITree {
    fn grow(x: &[Vec<f64>], sample: Vec<usize>, features: Vec<usize>, cap: usize, rng: &mut SimRng) -> Self {
        let mut tree = ITree { features, nodes: Vec::new() };
        tree.build(x, sample, 0, cap, rng);
        tree
    }

    fn build(&mut self, x: &[Vec<f64>], idx: Vec<usize>, depth: usize, cap: usize, rng: &mut SimRng) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { size: idx.len(), depth });
        if depth >= cap || idx.len() <= 1 {
            return id;
        }
        let feature = self.features[rng.below(self.features.len())];
        let (lo, hi) = idx
            .iter()
            .map(|&i| x[i][feature])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if lo >= hi {
            return id;
        }
        let value = rng.uniform_range(lo, hi);
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| x[i][feature] < value);
        let left = self.build(x, l, depth + 1, cap, rng);
        let right = self.build(x, r, depth + 1, cap, rng);
        self.nodes[id] = Node::Split { feature, value, left, right };
        id
    }

    /// Depth of the leaf reached plus `c(size)` for its unresolved points.
    pub fn path_length(&self, q: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { size, depth } => return depth as f64 + average_path_length(size),
                Node::Split { feature, value, left, right } => id = if q[feature] < value { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct IsolationForest {
    pub trees: Vec<ITree>,
    pub subsample: usize,
    train: Vec<Vec<f64>>,
}

impl IsolationForest {
    /// Each tree draws `features_per_tree` features and a subsample without
    /// replacement, then splits uniformly at random up to height
    /// `ceil(log2(subsample))`.
    pub fn fit(train: &[Vec<f64>], cfg: &IforestConfig) -> Result<Self> {
        if train.len() < 8 {
            return Err(DetectError::TooFew { detector: "iforest", need: 8, got: train.len() });
        }
        let d = train[0].len();
        let psi = cfg.subsample.min(train.len());
        let cap = (psi as f64).log2().ceil() as usize;
        let mut rng = SimRng::derive(cfg.seed, 0x6966_6f72);
        let trees = (0..cfg.trees)
            .map(|_| {
                let features = rng.sample_indices(d, cfg.features_per_tree.min(d));
                let sample = rng.sample_indices(train.len(), psi);
                ITree::grow(train, sample, features, cap, &mut rng)
            })
            .collect();
        Ok(Self { trees, subsample: psi, train: train.to_vec() })
    }

    /// `2^(-E[h(x)] / c(subsample))`, in (0, 1]; higher is more anomalous.
    pub fn score(&self, q: &[f64]) -> f64 {
        let mean = self.trees.iter().map(|t| t.path_length(q)).sum::<f64>() / self.trees.len() as f64;
        2f64.powf(-mean / average_path_length(self.subsample))
    }

    pub fn train_scores(&self) -> Vec<f64> {
        self.train.iter().map(|x| self.score(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(n: usize) -> f64 {
        (1..=n).map(|i| 1.0 / i as f64).sum()
    }

    /// Recursive walk over the recorded splits, counting edges.
    fn oracle_path(t: &ITree, node: usize, q: &[f64], edges: usize) -> f64 {
        match &t.nodes[node] {
            Node::Leaf { size, .. } => {
                let c = match *size {
                    0 | 1 => 0.0,
                    s => 2.0 * harmonic(s - 1) - 2.0 * (s - 1) as f64 / s as f64,
                };
                edges as f64 + c
            }
            Node::Split { feature, value, left, right } => {
                let next = if q[*feature] < *value { *left } else { *right };
                oracle_path(t, next, q, edges + 1)
            }
        }
    }

    fn blob(seed: u64, n: usize) -> Vec<Vec<f64>> {
        let mut rng = SimRng::new(seed);
        (0..n).map(|_| vec![rng.normal(), rng.normal()]).collect()
    }

    #[test]
    fn c_of_two_is_one() {
        assert_eq!(average_path_length(2), 1.0);
        assert_eq!(average_path_length(1), 0.0);
        assert!((average_path_length(256) - 10.248_689_925_634_562).abs() < 1e-12);
    }

    #[test]
    fn far_point_scores_highest_and_matches_walk() {
        let mut x = blob(8, 300);
        x.push(vec![9.0, -9.0]);
        let f = IsolationForest::fit(&x, &IforestConfig::default()).unwrap();
        assert_eq!(f.trees.len(), 100);
        assert!(f.trees.iter().all(|t| t.features.len() == 1));
        let scores = f.train_scores();
        let far = scores[300];
        assert!(scores[..300].iter().all(|&s| s < far));
        for q in [&x[0], &x[300], &vec![0.0, 0.0]] {
            let mean = f.trees.iter().map(|t| oracle_path(t, 0, q, 0)).sum::<f64>() / 100.0;
            let c = 2.0 * harmonic(255) - 2.0 * 255.0 / 256.0;
            let want = 2f64.powf(-mean / c);
            assert!((f.score(q) - want).abs() <= 1e-10);
        }
    }

    #[test]
    fn constant_feature_gives_root_leaf() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![3.0, i as f64]).collect();
        let cfg = IforestConfig { trees: 40, subsample: 32, ..Default::default() };
        let f = IsolationForest::fit(&x, &cfg).unwrap();
        for t in f.trees.iter().filter(|t| t.features == vec![0]) {
            assert_eq!(t.nodes, vec![Node::Leaf { size: 32, depth: 0 }]);
            assert_eq!(t.path_length(&[3.0, 1.0]), average_path_length(32));
        }
        assert!(f.trees.iter().any(|t| t.features == vec![0]));
    }

    #[test]
    fn height_cap_respected() {
        let x = blob(2, 400);
        let f = IsolationForest::fit(&x, &IforestConfig::default()).unwrap();
        for t in &f.trees {
            for n in &t.nodes {
                if let Node::Leaf { depth, .. } = n {
                    assert!(*depth <= 8);
                }
            }
        }
    }
}

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_training, ForestConfig};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum Node<T> {
    Leaf { class: usize },
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: T, left: usize, right: usize },
}

/// CART tree with Gini impurity, stored as a flat node list rooted at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn predict_one(&self, x: &[T]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class } => return *class,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RandomForest<T> {
    pub trees: Vec<Tree<T>>,
    pub n_classes: usize,
}

impl<T: Scalar> RandomForest<T> {
    pub fn fit(rows: &[Vec<T>], labels: &[usize], n_classes: usize, cfg: &ForestConfig, seed: u64) -> Result<Self> {
        check_training(rows, labels, n_classes)?;
        if cfg.n_trees == 0 {
            return Err(Error::Config("a forest needs at least one tree".into()));
        }
        if cfg.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be at least 2".into()));
        }
        let d = rows[0].len();
        let mtry = match cfg.max_features {
            Some(m) if m == 0 || m > d => {
                return Err(Error::Config(format!("max_features = {m} must lie in 1..={d}")));
            }
            Some(m) => m,
            None => ((d as f64).sqrt().ceil() as usize).clamp(1, d.max(1)),
        };
        let trees = (0..cfg.n_trees)
            .map(|t| {
                let mut stream = rng::stream(rng::derive_seed(seed, &[t as u64]));
                let n = rows.len();
                let sample: Vec<usize> = if cfg.bootstrap {
                    (0..n).map(|_| stream.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                Builder { rows, labels, n_classes, mtry, cfg, stream }.build(sample)
            })
            .collect();
        Ok(RandomForest { trees, n_classes })
    }

    pub fn predict_one(&self, x: &[T]) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict_one(x)] += 1;
        }
        majority(&votes)
    }
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    best
}

struct Builder<'a, T> {
    rows: &'a [Vec<T>],
    labels: &'a [usize],
    n_classes: usize,
    mtry: usize,
    cfg: &'a ForestConfig,
    stream: rng::Stream,
}

struct Best<T> {
    feature: usize,
    threshold: T,
    impurity: f64,
}

impl<T: Scalar> Builder<'_, T> {
    fn build(mut self, sample: Vec<usize>) -> Tree<T> {
        let mut nodes = vec![Node::Leaf { class: 0 }];
        // (node slot, rows reaching it, depth)
        let mut pending = vec![(0usize, sample, 0usize)];
        while let Some((slot, idx, depth)) = pending.pop() {
            let counts = self.counts(&idx);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let capped = self.cfg.max_depth.is_some_and(|m| depth >= m);
            let split = if pure || capped || idx.len() < self.cfg.min_samples_split {
                None
            } else {
                self.best_split(&idx)
            };
            match split {
                None => nodes[slot] = Node::Leaf { class: majority(&counts) },
                Some(best) => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        idx.iter().partition(|&&i| self.rows[i][best.feature] <= best.threshold);
                    let (left, right) = (nodes.len(), nodes.len() + 1);
                    nodes.push(Node::Leaf { class: 0 });
                    nodes.push(Node::Leaf { class: 0 });
                    nodes[slot] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
                    pending.push((right, r, depth + 1));
                    pending.push((left, l, depth + 1));
                }
            }
        }
        Tree { nodes }
    }

    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    /// Lowest weighted Gini over a random feature subset; if none of those
    /// features can split the rows, the remaining features are tried.
    /// A zero-gain split is still taken, since XOR-like data has no
    /// informative first split.
    fn best_split(&mut self, idx: &[usize]) -> Option<Best<T>> {
        let d = self.rows[0].len();
        let chosen = index::sample(&mut self.stream, d, self.mtry).into_vec();
        let mut best = self.search(idx, &chosen);
        if best.is_none() && self.mtry < d {
            let rest: Vec<usize> = (0..d).filter(|f| !chosen.contains(f)).collect();
            best = self.search(idx, &rest);
        }
        best
    }

    fn search(&self, idx: &[usize], features: &[usize]) -> Option<Best<T>> {
        let n = idx.len() as f64;
        let total = self.counts(idx);
        let mut best: Option<Best<T>> = None;
        let mut sorted = idx.to_vec();
        for &f in features {
            sorted.sort_by(|&a, &b| {
                self.rows[a][f].partial_cmp(&self.rows[b][f]).unwrap_or(std::cmp::Ordering::Equal)
            });
            let mut left = vec![0usize; self.n_classes];
            for w in 0..sorted.len() - 1 {
                left[self.labels[sorted[w]]] += 1;
                let (lo, hi) = (self.rows[sorted[w]][f], self.rows[sorted[w + 1]][f]);
                if lo == hi {
                    continue;
                }
                let nl = (w + 1) as f64;
                let nr = n - nl;
                let gl = gini(&left, nl);
                let gr = gini_rest(&total, &left, nr);
                let impurity = (nl * gl + nr * gr) / n;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = (lo + hi) / T::of(2.0);
                    // midpoint can round up to `hi` when the two are adjacent floats
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(Best { feature: f, threshold, impurity });
                }
            }
        }
        best
    }
}

fn gini(counts: &[usize], n: f64) -> f64 {
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn gini_rest(total: &[usize], left: &[usize], n: f64) -> f64 {
    1.0 - total.iter().zip(left).map(|(&t, &l)| ((t - l) as f64 / n).powi(2)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor(copies: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let base = [([0.0, 0.0], 0), ([0.0, 1.0], 1), ([1.0, 0.0], 1), ([1.0, 1.0], 0)];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..copies {
            for (x, y) in base {
                rows.push(x.to_vec());
                labels.push(y);
            }
        }
        (rows, labels)
    }

    #[test]
    fn xor_is_learned() {
        let (rows, labels) = xor(25);
        let rf = RandomForest::fit(&rows, &labels, 2, &ForestConfig::default(), 3).unwrap();
        let correct = rows.iter().zip(&labels).filter(|(r, &l)| rf.predict_one(r) == l).count();
        assert!(correct as f64 / rows.len() as f64 >= 0.95);
        assert_eq!(rf.trees.len(), 100);
    }

    #[test]
    fn xor_needs_depth_two() {
        // every single threshold on either axis leaves both halves at 50/50,
        // and some depth-2 tree classifies all four points
        let (rows, labels) = xor(1);
        for f in [0, 1] {
            let left: Vec<usize> = (0..4).filter(|&i| rows[i][f] <= 0.5).map(|i| labels[i]).collect();
            assert_eq!(left.iter().filter(|&&l| l == 1).count(), 1);
        }
        let cfg = ForestConfig { n_trees: 1, bootstrap: false, max_features: Some(2), ..ForestConfig::default() };
        let rf = RandomForest::fit(&rows, &labels, 2, &cfg, 0).unwrap();
        assert_eq!(rf.trees[0].depth(), 2);
        for (r, l) in rows.iter().zip(&labels) {
            assert_eq!(rf.predict_one(r), *l);
        }
    }

    #[test]
    fn single_tree_memorizes() {
        let mut s = rng::stream(8);
        let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..3).map(|_| s.random::<f64>()).collect()).collect();
        let labels: Vec<usize> = (0..60).map(|_| s.random_range(0..3)).collect();
        let cfg = ForestConfig { n_trees: 1, bootstrap: false, max_features: Some(3), ..ForestConfig::default() };
        let rf = RandomForest::fit(&rows, &labels, 3, &cfg, 1).unwrap();
        for (r, l) in rows.iter().zip(&labels) {
            assert_eq!(rf.predict_one(r), *l);
        }
    }

    #[test]
    fn same_seed_same_forest() {
        let (rows, labels) = xor(5);
        let cfg = ForestConfig { n_trees: 7, ..ForestConfig::default() };
        let a = RandomForest::fit(&rows, &labels, 2, &cfg, 11).unwrap();
        let b = RandomForest::fit(&rows, &labels, 2, &cfg, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_features_give_a_majority_leaf() {
        let rows = vec![vec![1.0], vec![1.0], vec![1.0]];
        let cfg = ForestConfig { n_trees: 1, bootstrap: false, ..ForestConfig::default() };
        let rf = RandomForest::fit(&rows, &[1, 1, 0], 2, &cfg, 0).unwrap();
        assert_eq!(rf.trees[0].nodes, vec![Node::Leaf { class: 1 }]);
    }

    #[test]
    fn bad_config() {
        let rows = vec![vec![0.0], vec![1.0]];
        let zero = ForestConfig { n_trees: 0, ..ForestConfig::default() };
        assert!(RandomForest::fit(&rows, &[0, 1], 2, &zero, 0).is_err());
        let wide = ForestConfig { max_features: Some(2), ..ForestConfig::default() };
        assert!(RandomForest::fit(&rows, &[0, 1], 2, &wide, 0).is_err());
    }
}

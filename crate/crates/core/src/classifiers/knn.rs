use serde::{Deserialize, Serialize};

use super::{check_training, KnnConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// k-nearest neighbours over Euclidean distance. Candidates are ordered by
/// (distance, label), so the result never depends on storage order; vote
/// ties go to the lowest class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Knn<T> {
    pub k: usize,
    pub rows: Vec<Vec<T>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl<T: Scalar> Knn<T> {
    pub fn fit(rows: &[Vec<T>], labels: &[usize], n_classes: usize, cfg: &KnnConfig) -> Result<Self> {
        check_training(rows, labels, n_classes)?;
        if cfg.k == 0 || cfg.k > rows.len() {
            return Err(Error::Config(format!("k = {} must lie in 1..={}", cfg.k, rows.len())));
        }
        Ok(Knn { k: cfg.k, rows: rows.to_vec(), labels: labels.to_vec(), n_classes })
    }

    /// Labels of the k nearest training rows, nearest first.
    pub fn neighbours(&self, x: &[T]) -> Vec<usize> {
        let mut cand: Vec<(T, usize)> = self
            .rows
            .iter()
            .zip(&self.labels)
            .map(|(r, &l)| (r.iter().zip(x).map(|(a, b)| (*a - *b) * (*a - *b)).sum::<T>(), l))
            .collect();
        let by_key = |a: &(T, usize), b: &(T, usize)| {
            a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1))
        };
        if self.k < cand.len() {
            cand.select_nth_unstable_by(self.k - 1, by_key);
            cand.truncate(self.k);
        }
        cand.sort_by(by_key);
        cand.into_iter().map(|(_, l)| l).collect()
    }

    pub fn predict_one(&self, x: &[T]) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for l in self.neighbours(x) {
            votes[l] += 1;
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        best
    }
}

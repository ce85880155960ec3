use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_training, SvmConfig};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{argmax, Scalar};

/// One linear machine scoring `w·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Hyperplane<T> {
    pub w: Vec<T>,
    pub b: T,
}

impl<T: Scalar> Hyperplane<T> {
    pub fn score(&self, x: &[T]) -> T {
        self.w.iter().zip(x).map(|(w, x)| *w * *x).sum::<T>() + self.b
    }
}

/// Linear SVM. With two classes a single machine separates class 1 (positive)
/// from class 0; otherwise one machine per class, predicting the highest score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinearSvm<T> {
    pub machines: Vec<Hyperplane<T>>,
    pub n_classes: usize,
}

impl<T: Scalar> LinearSvm<T> {
    pub fn fit(rows: &[Vec<T>], labels: &[usize], n_classes: usize, cfg: &SvmConfig, seed: u64) -> Result<Self> {
        if n_classes == 2 {
            Self::validate(rows, labels, n_classes, cfg)?;
            let machine = fit_machine(rows, labels, 1, cfg, seed);
            Ok(LinearSvm { machines: vec![machine], n_classes })
        } else {
            Self::fit_one_vs_rest(rows, labels, n_classes, cfg, seed)
        }
    }

    /// One machine per class, even for two classes.
    pub fn fit_one_vs_rest(
        rows: &[Vec<T>],
        labels: &[usize],
        n_classes: usize,
        cfg: &SvmConfig,
        seed: u64,
    ) -> Result<Self> {
        Self::validate(rows, labels, n_classes, cfg)?;
        let machines = (0..n_classes).map(|c| fit_machine(rows, labels, c, cfg, seed)).collect();
        Ok(LinearSvm { machines, n_classes })
    }

    fn validate(rows: &[Vec<T>], labels: &[usize], n_classes: usize, cfg: &SvmConfig) -> Result<()> {
        cfg.validate()?;
        let present = check_training(rows, labels, n_classes)?;
        if present.iter().filter(|&&c| c > 0).count() < 2 {
            return Err(Error::DegenerateTraining("fewer than two classes present".into()));
        }
        Ok(())
    }

    /// Binary machine with fixed parameters.
    pub fn from_weights(w: Vec<T>, b: T) -> Self {
        LinearSvm { machines: vec![Hyperplane { w, b }], n_classes: 2 }
    }

    pub fn scores(&self, x: &[T]) -> Vec<T> {
        self.machines.iter().map(|m| m.score(x)).collect()
    }

    pub fn predict_one(&self, x: &[T]) -> usize {
        match self.machines.as_slice() {
            [single] => usize::from(single.score(x) > T::zero()),
            _ => argmax(&self.scores(x)),
        }
    }
}

/// Hinge loss with L2 penalty, per-sample sub-gradient steps over a freshly
/// shuffled order each epoch.
fn fit_machine<T: Scalar>(rows: &[Vec<T>], labels: &[usize], positive: usize, cfg: &SvmConfig, seed: u64) -> Hyperplane<T> {
    let d = rows[0].len();
    let lr = T::of(cfg.learning_rate);
    let lambda = T::of(cfg.lambda);
    let mut m = Hyperplane { w: vec![T::zero(); d], b: T::zero() };
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut stream = rng::stream(seed);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut stream);
        for &i in &order {
            let x = &rows[i];
            let y = if labels[i] == positive { T::one() } else { -T::one() };
            if y * m.score(x) < T::one() {
                for (w, xj) in m.w.iter_mut().zip(x) {
                    *w -= lr * (lambda * *w - y * *xj);
                }
                m.b += lr * y;
            } else {
                for w in m.w.iter_mut() {
                    *w -= lr * lambda * *w;
                }
            }
        }
    }
    m
}

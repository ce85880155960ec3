use serde::{Deserialize, Serialize};

use super::{check_training, BayesConfig};
use crate::error::{Error, Result};
use crate::scalar::{argmax, Scalar};

/// Gaussian naive Bayes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GaussianNb<T> {
    pub log_prior: Vec<T>,
    /// `[class][feature]`
    pub mean: Vec<Vec<T>>,
    /// `[class][feature]`, already smoothed.
    pub var: Vec<Vec<T>>,
    pub epsilon: T,
}

impl<T: Scalar> GaussianNb<T> {
    pub fn fit(rows: &[Vec<T>], labels: &[usize], n_classes: usize, cfg: &BayesConfig) -> Result<Self> {
        let counts = check_training(rows, labels, n_classes)?;
        if let Some(c) = counts.iter().position(|&c| c == 0) {
            return Err(Error::ClassAbsent(c));
        }
        if !(cfg.var_smoothing >= 0.0 && cfg.var_smoothing.is_finite()) {
            return Err(Error::Config(format!("var_smoothing must be non-negative, got {}", cfg.var_smoothing)));
        }
        let d = rows[0].len();
        let mut mean = vec![vec![T::zero(); d]; n_classes];
        for (r, &l) in rows.iter().zip(labels) {
            for (m, v) in mean[l].iter_mut().zip(r) {
                *m += *v;
            }
        }
        for (m, &c) in mean.iter_mut().zip(&counts) {
            m.iter_mut().for_each(|v| *v /= T::count(c));
        }
        let mut var = vec![vec![T::zero(); d]; n_classes];
        for (r, &l) in rows.iter().zip(labels) {
            for ((s, v), m) in var[l].iter_mut().zip(r).zip(&mean[l]) {
                *s += (*v - *m) * (*v - *m);
            }
        }
        for (s, &c) in var.iter_mut().zip(&counts) {
            s.iter_mut().for_each(|v| *v /= T::count(c));
        }

        // smoothing is relative to the largest feature variance over all rows
        let n = T::count(rows.len());
        let max_var = (0..d)
            .map(|j| {
                let mu = rows.iter().map(|r| r[j]).sum::<T>() / n;
                rows.iter().map(|r| (r[j] - mu) * (r[j] - mu)).sum::<T>() / n
            })
            .fold(T::zero(), T::max);
        let mut epsilon = T::of(cfg.var_smoothing) * max_var;
        if epsilon <= T::zero() {
            epsilon = T::of(1e-9);
        }
        var.iter_mut().flatten().for_each(|v| *v += epsilon);

        let log_prior = counts.iter().map(|&c| (T::count(c) / n).ln()).collect();
        Ok(GaussianNb { log_prior, mean, var, epsilon })
    }

    pub fn log_posterior(&self, x: &[T]) -> Vec<T> {
        let two_pi = T::of(2.0 * std::f64::consts::PI);
        let half = T::of(0.5);
        self.log_prior
            .iter()
            .zip(self.mean.iter().zip(&self.var))
            .map(|(&lp, (m, v))| {
                lp + x
                    .iter()
                    .zip(m.iter().zip(v))
                    .map(|(&xi, (&mi, &vi))| -half * (two_pi * vi).ln() - (xi - mi) * (xi - mi) / (T::of(2.0) * vi))
                    .sum::<T>()
            })
            .collect()
    }

    pub fn predict_one(&self, x: &[T]) -> usize {
        argmax(&self.log_posterior(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_dominates_identical_likelihoods() {
        // class 0 has 90 rows, class 1 has 10, both spread evenly over 0..9
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            rows.push(vec![(i % 10) as f64]);
            labels.push(usize::from(i >= 90));
        }
        let nb = GaussianNb::fit(&rows, &labels, 2, &BayesConfig::default()).unwrap();
        for q in [-5.0, 0.0, 3.3, 9.0, 40.0] {
            assert_eq!(nb.predict_one(&[q]), 0);
        }
    }

    #[test]
    fn hand_evaluated_posteriors() {
        let rows = vec![vec![-1.0], vec![1.0], vec![9.0], vec![11.0]];
        let nb = GaussianNb::fit(&rows, &[0, 0, 1, 1], 2, &BayesConfig::default()).unwrap();
        // both classes have variance 1 (+ 1e-9 * 26) and prior 1/2
        let v = 1.0 + 26e-9;
        let lp = |mu: f64| 0.5f64.ln() - 0.5 * (2.0 * std::f64::consts::PI * v).ln() - (1.0 - mu).powi(2) / (2.0 * v);
        let post = nb.log_posterior(&[1.0]);
        assert!((post[0] - lp(0.0)).abs() < 1e-12);
        assert!((post[1] - lp(10.0)).abs() < 1e-12);
        assert_eq!(nb.predict_one(&[1.0]), 0);
    }

    #[test]
    fn absent_class() {
        let rows = vec![vec![0.0], vec![1.0]];
        assert!(matches!(GaussianNb::fit(&rows, &[0, 0], 2, &BayesConfig::default()), Err(Error::ClassAbsent(1))));
    }

    #[test]
    fn zero_variance_data_gets_the_absolute_floor() {
        let rows = vec![vec![3.0], vec![3.0]];
        let nb = GaussianNb::fit(&rows, &[0, 1], 2, &BayesConfig::default()).unwrap();
        assert_eq!(nb.epsilon, 1e-9);
        assert!(nb.log_posterior(&[3.0_f64]).iter().all(|p: &f64| p.is_finite()));
    }
}

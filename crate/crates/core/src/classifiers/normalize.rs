use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-feature z-score parameters, fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NormalizationParams<T> {
    pub mu: Vec<T>,
    /// Population standard deviation (divides by n).
    pub sigma: Vec<T>,
}

impl<T: Scalar> NormalizationParams<T> {
    pub fn fit(rows: &[Vec<T>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::DegenerateTraining("cannot fit normalization on zero rows".into()))?;
        let d = first.len();
        check_widths(rows, d)?;
        let n = T::count(rows.len());
        let mut mu = vec![T::zero(); d];
        for r in rows {
            for (m, v) in mu.iter_mut().zip(r) {
                *m += *v;
            }
        }
        mu.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mu) {
                *s += (*v - *m) * (*v - *m);
            }
        }
        let sigma = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(NormalizationParams { mu, sigma })
    }

    pub fn width(&self) -> usize {
        self.mu.len()
    }

    /// `(x - mu) / sigma`, with zero-sigma features mapped to 0.
    pub fn apply_row(&self, row: &[T]) -> Result<Vec<T>> {
        if row.len() != self.width() {
            return Err(Error::WidthMismatch { expected: self.width(), found: row.len() });
        }
        Ok(row
            .iter()
            .zip(self.mu.iter().zip(&self.sigma))
            .map(|(&x, (&m, &s))| if s > T::zero() { (x - m) / s } else { T::zero() })
            .collect())
    }

    pub fn apply(&self, rows: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        rows.iter().map(|r| self.apply_row(r)).collect()
    }
}

pub(crate) fn check_widths<T>(rows: &[Vec<T>], d: usize) -> Result<()> {
    match rows.iter().find(|r| r.len() != d) {
        Some(r) => Err(Error::WidthMismatch { expected: d, found: r.len() }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_2_4_6() {
        let rows = vec![vec![2.0], vec![4.0], vec![6.0]];
        let p = NormalizationParams::fit(&rows).unwrap();
        assert_eq!(p.mu, vec![4.0]);
        assert!((p.sigma[0] - (8.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let t = p.apply(&rows).unwrap();
        let expected = 1.5f64.sqrt();
        assert!((t[0][0] + expected).abs() < 1e-12);
        assert_eq!(t[1][0], 0.0);
        assert!((t[2][0] - expected).abs() < 1e-12);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let rows = vec![vec![5.0, 1.0], vec![5.0, 2.0], vec![5.0, 3.0]];
        let p = NormalizationParams::fit(&rows).unwrap();
        assert_eq!(p.sigma[0], 0.0);
        assert!(p.apply(&rows).unwrap().iter().all(|r| r[0] == 0.0));
        assert_eq!(p.apply_row(&p.mu.clone()).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn transformed_columns_are_standardized() {
        let mut stream = crate::rng::stream(3);
        use rand::Rng;
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..4).map(|j| stream.random::<f64>() * (j as f64 + 1.0) * 10.0 - 3.0).collect())
            .collect();
        let p = NormalizationParams::fit(&rows).unwrap();
        let t = p.apply(&rows).unwrap();
        for j in 0..4 {
            let mean: f64 = t.iter().map(|r| r[j]).sum::<f64>() / 200.0;
            let var: f64 = t.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / 200.0;
            assert!(mean.abs() < 1e-9);
            assert!((var.sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn errors() {
        assert!(NormalizationParams::<f64>::fit(&[]).is_err());
        assert!(matches!(
            NormalizationParams::fit(&[vec![1.0], vec![1.0, 2.0]]),
            Err(Error::WidthMismatch { expected: 1, found: 2 })
        ));
        let p = NormalizationParams::fit(&[vec![1.0f32]]).unwrap();
        assert!(p.apply_row(&[1.0, 2.0]).is_err());
    }
}

//! Laplace noise on the sensitive part and recombination into a sanitized table.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::partition::{PartitionedDataset, View};
use crate::rng;
use crate::scalar::Scalar;

/// Density of the zero-centred Laplace distribution, `exp(-|x|/scale) / (2 scale)`.
pub fn laplace_density<T: Scalar>(x: T, scale: T) -> Result<T> {
    check_scale(scale)?;
    Ok((-x.abs() / scale).exp() / (T::of(2.0) * scale))
}

pub fn laplace_cdf<T: Scalar>(x: T, scale: T) -> Result<T> {
    check_scale(scale)?;
    let half = T::of(0.5);
    Ok(if x < T::zero() {
        half * (x / scale).exp()
    } else {
        T::one() - half * (-x / scale).exp()
    })
}

/// Inverse CDF at `0.5 + u`, for `u` in the open interval (-0.5, 0.5).
pub fn laplace_quantile<T: Scalar>(u: T, scale: T) -> Result<T> {
    check_scale(scale)?;
    let half = T::of(0.5);
    if !(u > -half && u < half) {
        return Err(Error::Domain(format!("uniform draw {u} outside (-0.5, 0.5)")));
    }
    if u.is_zero() {
        return Ok(T::zero());
    }
    Ok(-scale * u.signum() * (T::one() - T::of(2.0) * u.abs()).ln())
}

/// One Laplace draw by inverse-CDF sampling from `stream`.
pub fn sample_laplace<T: Scalar, R: Rng + ?Sized>(scale: T, stream: &mut R) -> Result<T> {
    check_scale(scale)?;
    loop {
        // random::<f64>() lies in [0, 1); -0.5 itself maps to -inf and is redrawn.
        let u = stream.random::<f64>() - 0.5;
        if u > -0.5 {
            return laplace_quantile(T::of(u), scale);
        }
    }
}

fn check_scale<T: Scalar>(scale: T) -> Result<()> {
    if scale > T::zero() && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("scale must be positive and finite, got {scale}")))
    }
}

/// How the per-attribute sensitivity is chosen when a privacy budget is set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Sensitivity {
    #[default]
    Unit,
    /// Observed range (max - min) of each sensitive column.
    PerAttributeRange,
    UserSupplied { values: BTreeMap<String, f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub scale: f64,
    /// Privacy budget; when set, each column uses `sensitivity / epsilon`
    /// instead of `scale`.
    pub epsilon: Option<f64>,
    pub sensitivity: Sensitivity,
    pub seed: u64,
    pub enabled: bool,
    /// Draw fresh noise for every upload round instead of reusing round 0's.
    pub redraw_per_upload: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            scale: 1.0,
            epsilon: None,
            sensitivity: Sensitivity::Unit,
            seed: 0,
            enabled: true,
            redraw_per_upload: false,
        }
    }
}

impl NoiseConfig {
    pub fn disabled() -> Self {
        NoiseConfig { enabled: false, ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Config(format!("noise scale must be positive, got {}", self.scale)));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::Config(format!("epsilon must be positive, got {eps}")));
            }
        }
        if let Sensitivity::UserSupplied { values } = &self.sensitivity {
            if let Some((k, v)) = values.iter().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
                return Err(Error::Config(format!("sensitivity for `{k}` must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Seed of the noise stream for upload `round`.
    pub fn seed_for_round(&self, round: u64) -> u64 {
        if self.redraw_per_upload && round > 0 {
            rng::derive_seed(self.seed, &[round])
        } else {
            self.seed
        }
    }

    /// Laplace scale applied to each column of `view`. A zero scale (zero
    /// range or zero user sensitivity) leaves that column unperturbed.
    pub fn effective_scales<T: Scalar>(&self, view: &View<T>) -> Result<Vec<f64>> {
        self.validate()?;
        let Some(eps) = self.epsilon else {
            return Ok(vec![self.scale; view.width()]);
        };
        (0..view.width())
            .map(|j| {
                let delta = match &self.sensitivity {
                    Sensitivity::Unit => 1.0,
                    Sensitivity::PerAttributeRange => {
                        let (lo, hi) = view.rows.iter().map(|r| r[j].as_f64()).fold(
                            (f64::INFINITY, f64::NEG_INFINITY),
                            |(lo, hi), v| (lo.min(v), hi.max(v)),
                        );
                        if view.is_empty() { 0.0 } else { hi - lo }
                    }
                    Sensitivity::UserSupplied { values } => {
                        *values.get(&view.columns[j]).ok_or_else(|| {
                            Error::Config(format!("no sensitivity supplied for `{}`", view.columns[j]))
                        })?
                    }
                };
                Ok(delta / eps)
            })
            .collect()
    }
}

/// The noise actually added, cell-aligned with the sensitive part. Stays
/// with the owner; it is never part of an upload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NoiseRecord<T> {
    pub columns: Vec<String>,
    pub noise: Vec<Vec<T>>,
    pub scales: Vec<f64>,
    pub config: NoiseConfig,
    pub seed: u64,
}

impl<T: Scalar> NoiseRecord<T> {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.noise {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Adds independent Laplace noise to every cell of `sensitive`, row-major
/// from a stream seeded with `config.seed`.
pub fn inject_noise<T: Scalar>(sensitive: &View<T>, config: &NoiseConfig) -> Result<(View<T>, NoiseRecord<T>)> {
    inject_noise_seeded(sensitive, config, config.seed)
}

pub fn inject_noise_seeded<T: Scalar>(
    sensitive: &View<T>,
    config: &NoiseConfig,
    seed: u64,
) -> Result<(View<T>, NoiseRecord<T>)> {
    for (i, row) in sensitive.rows.iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::EncodingRequired { row: i, column: sensitive.columns[j].clone() });
        }
    }
    let scales = config.effective_scales(sensitive)?;
    let mut stream = rng::stream(seed);
    let mut noisy = sensitive.clone();
    let mut noise = Vec::with_capacity(sensitive.len());
    for row in &mut noisy.rows {
        let mut drawn = Vec::with_capacity(row.len());
        for (cell, &scale) in row.iter_mut().zip(&scales) {
            let n = if config.enabled && scale > 0.0 {
                sample_laplace(T::of(scale), &mut stream)?
            } else {
                T::zero()
            };
            *cell += n;
            drawn.push(n);
        }
        noise.push(drawn);
    }
    let record = NoiseRecord { columns: sensitive.columns.clone(), noise, scales, config: config.clone(), seed };
    Ok((noisy, record))
}

/// Sanitized upload plus the owner-side noise log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SanitizedDataset<T> {
    pub data: Dataset<T>,
    pub noise_log: NoiseRecord<T>,
}

/// Recombines the perturbed sensitive part with the untouched non-sensitive part.
pub fn sanitize<T: Scalar>(
    noisy_sensitive: &View<T>,
    partitioned: &PartitionedDataset<T>,
    noise_log: NoiseRecord<T>,
) -> Result<SanitizedDataset<T>> {
    if noise_log.noise.len() != noisy_sensitive.len()
        || noise_log.noise.iter().zip(&noisy_sensitive.rows).any(|(n, r)| n.len() != r.len())
    {
        return Err(Error::Integrity("noise log does not match the sensitive part".into()));
    }
    let data = partitioned.recombine_with(noisy_sensitive)?;
    Ok(SanitizedDataset { data, noise_log })
}

/// Partition, perturb and recombine in one go.
pub fn privatize<T: Scalar>(
    partitioned: &PartitionedDataset<T>,
    config: &NoiseConfig,
    seed: u64,
) -> Result<SanitizedDataset<T>> {
    let (noisy, log) = inject_noise_seeded(&partitioned.sensitive, config, seed)?;
    sanitize(&noisy, partitioned, log)
}

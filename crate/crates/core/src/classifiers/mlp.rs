use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_training, MlpConfig};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{argmax, Scalar};

/// One hidden ReLU layer. Binary problems use a single sigmoid output
/// (class 1 iff the output exceeds 0.5); otherwise a softmax over classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Mlp<T> {
    pub n_in: usize,
    pub n_hidden: usize,
    pub n_out: usize,
    /// `n_hidden × n_in`, row-major.
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    /// `n_out × n_hidden`, row-major.
    pub w2: Vec<T>,
    pub b2: Vec<T>,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations<T> {
    pub z1: Vec<T>,
    pub a1: Vec<T>,
    pub z2: Vec<T>,
    pub out: Vec<T>,
}

fn output_width(n_classes: usize) -> usize {
    if n_classes == 2 { 1 } else { n_classes }
}

impl<T: Scalar> Mlp<T> {
    /// All-zero parameters.
    pub fn zeros(n_in: usize, n_hidden: usize, n_out: usize) -> Self {
        Mlp {
            n_in,
            n_hidden,
            n_out,
            w1: vec![T::zero(); n_hidden * n_in],
            b1: vec![T::zero(); n_hidden],
            w2: vec![T::zero(); n_out * n_hidden],
            b2: vec![T::zero(); n_out],
        }
    }

    /// Uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init<R: Rng + ?Sized>(n_in: usize, n_hidden: usize, n_out: usize, stream: &mut R) -> Self {
        let mut m = Self::zeros(n_in, n_hidden, n_out);
        let mut fill = |w: &mut [T], fan_in: usize, fan_out: usize| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            w.iter_mut().for_each(|v| *v = T::of(stream.random_range(-a..a)));
        };
        fill(&mut m.w1, n_in, n_hidden);
        fill(&mut m.w2, n_hidden, n_out);
        m
    }

    pub fn n_classes(&self) -> usize {
        if self.n_out == 1 { 2 } else { self.n_out }
    }

    pub fn forward(&self, x: &[T]) -> Activations<T> {
        let z1: Vec<T> = (0..self.n_hidden)
            .map(|h| self.w1[h * self.n_in..(h + 1) * self.n_in].iter().zip(x).map(|(w, x)| *w * *x).sum::<T>() + self.b1[h])
            .collect();
        let a1: Vec<T> = z1.iter().map(|z| z.max(T::zero())).collect();
        let z2: Vec<T> = (0..self.n_out)
            .map(|k| {
                self.w2[k * self.n_hidden..(k + 1) * self.n_hidden].iter().zip(&a1).map(|(w, a)| *w * *a).sum::<T>()
                    + self.b2[k]
            })
            .collect();
        let out = if self.n_out == 1 { vec![sigmoid(z2[0])] } else { softmax(&z2) };
        Activations { z1, a1, z2, out }
    }

    pub fn predict_one(&self, x: &[T]) -> usize {
        let out = self.forward(x).out;
        if self.n_out == 1 {
            usize::from(out[0] > T::of(0.5))
        } else {
            argmax(&out)
        }
    }

    /// Cross-entropy of one example, computed from the logits.
    pub fn loss(&self, x: &[T], y: usize) -> T {
        let z2 = self.forward(x).z2;
        if self.n_out == 1 {
            let (z, t) = (z2[0], if y == 1 { T::one() } else { T::zero() });
            z.max(T::zero()) - z * t + (-z.abs()).exp().ln_1p()
        } else {
            let m = z2.iter().copied().fold(T::neg_infinity(), T::max);
            m + z2.iter().map(|z| (*z - m).exp()).sum::<T>().ln() - z2[y]
        }
    }

    /// Gradient of [`Mlp::loss`] in [`Mlp::params`] order.
    pub fn backprop(&self, x: &[T], y: usize) -> Vec<T> {
        let act = self.forward(x);
        let dz2: Vec<T> = act
            .out
            .iter()
            .enumerate()
            .map(|(k, o)| {
                let target = if self.n_out == 1 { y == 1 } else { y == k };
                *o - if target { T::one() } else { T::zero() }
            })
            .collect();
        let mut dz1 = vec![T::zero(); self.n_hidden];
        for (h, d) in dz1.iter_mut().enumerate() {
            if act.z1[h] > T::zero() {
                *d = (0..self.n_out).map(|k| self.w2[k * self.n_hidden + h] * dz2[k]).sum();
            }
        }
        let mut g = Vec::with_capacity(self.n_params());
        for d in &dz1 {
            g.extend(x.iter().map(|xi| *d * *xi));
        }
        g.extend_from_slice(&dz1);
        for d in &dz2 {
            g.extend(act.a1.iter().map(|a| *d * *a));
        }
        g.extend_from_slice(&dz2);
        g
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// `w1, b1, w2, b2` concatenated.
    pub fn params(&self) -> Vec<T> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn set_params(&mut self, p: &[T]) -> Result<()> {
        if p.len() != self.n_params() {
            return Err(Error::WidthMismatch { expected: self.n_params(), found: p.len() });
        }
        let mut rest = p;
        for part in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            let (head, tail) = rest.split_at(part.len());
            part.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    fn step(&mut self, grad: &[T], lr: T) {
        let mut g = grad.iter();
        for part in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            for (p, d) in part.iter_mut().zip(&mut g) {
                *p -= lr * *d;
            }
        }
    }

    /// Per-example stochastic gradient descent over a reshuffled order each
    /// epoch. A non-finite epoch loss aborts with the (1-based) epoch.
    pub fn fit(rows: &[Vec<T>], labels: &[usize], n_classes: usize, cfg: &MlpConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        check_training(rows, labels, n_classes)?;
        if n_classes < 2 {
            return Err(Error::DegenerateTraining("a classifier needs at least two classes".into()));
        }
        let mut stream = rng::stream(seed);
        let mut m = Self::init(rows[0].len(), cfg.hidden, output_width(n_classes), &mut stream);
        let lr = T::of(cfg.learning_rate);
        let mut order: Vec<usize> = (0..rows.len()).collect();
        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut stream);
            let mut total = T::zero();
            for &i in &order {
                total += m.loss(&rows[i], labels[i]);
                let g = m.backprop(&rows[i], labels[i]);
                m.step(&g, lr);
            }
            if !total.is_finite() || m.params().iter().any(|p| !p.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
        }
        Ok(m)
    }
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = z.iter().map(|v| (*v - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

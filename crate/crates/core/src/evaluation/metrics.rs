use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::confusion::{confusion, ConfusionMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Averaging {
    /// Precision, recall and F-score of one designated positive class.
    Binary { positive: usize },
    /// Unweighted mean over the classes that occur in the truth or the predictions.
    Macro,
}

impl Averaging {
    /// Binary with class 1 positive for two classes, macro otherwise.
    pub fn default_for(n_classes: usize) -> Self {
        if n_classes == 2 {
            Averaging::Binary { positive: 1 }
        } else {
            Averaging::Macro
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Nothing was predicted as this class, so precision was set to 0.
    pub precision_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub averaging: Averaging,
    pub per_class: Vec<ClassScores>,
    /// Some precision that feeds the summary had no predictions and was set to 0.
    pub precision_undefined: bool,
    pub correct: u64,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn class_scores(cm: &ConfusionMatrix, c: usize) -> ClassScores {
    let tp = cm.true_positives(c);
    let (precision, precision_undefined) = ratio(tp, tp + cm.false_positives(c));
    let (recall, _) = ratio(tp, tp + cm.false_negatives(c));
    ClassScores { precision, recall, f1: f_score(precision, recall), support: cm.support(c), precision_undefined }
}

pub fn metrics(cm: &ConfusionMatrix, averaging: Averaging) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyTestSet);
    }
    let correct = cm.trace();
    let per_class: Vec<ClassScores> = (0..cm.n_classes()).map(|c| class_scores(cm, c)).collect();
    let (precision, recall, precision_undefined) = match averaging {
        Averaging::Binary { positive } => {
            let s = per_class
                .get(positive)
                .ok_or(Error::LabelOutOfRange { label: positive, n_classes: cm.n_classes() })?;
            (s.precision, s.recall, s.precision_undefined)
        }
        Averaging::Macro => {
            let present: Vec<&ClassScores> = (0..cm.n_classes())
                .filter(|&c| cm.support(c) + cm.predicted(c) > 0)
                .map(|c| &per_class[c])
                .collect();
            let k = present.len() as f64;
            (
                present.iter().map(|s| s.precision).sum::<f64>() / k,
                present.iter().map(|s| s.recall).sum::<f64>() / k,
                present.iter().any(|s| s.precision_undefined),
            )
        }
    };
    Ok(MetricsReport {
        accuracy: correct as f64 / total as f64,
        precision,
        recall,
        f1: f_score(precision, recall),
        averaging,
        per_class,
        precision_undefined,
        correct,
        total,
    })
}

pub fn evaluate(truth: &[usize], predicted: &[usize], n_classes: usize, averaging: Averaging) -> Result<MetricsReport> {
    metrics(&confusion(truth, predicted, n_classes)?, averaging)
}

/// Cuts `value` to `places` decimals without rounding.
pub fn truncate_to(value: f64, places: i32) -> f64 {
    let f = 10f64.powi(places);
    // small nudge so representation error just below a boundary (0.72 as 0.71999...) is not cut
    ((value * f) + 1e-9).trunc() / f
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Ca,
    P,
    R,
    Fs,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Ca, Metric::P, Metric::R, Metric::Fs];

    pub fn of(self, m: &MetricsReport) -> f64 {
        match self {
            Metric::Ca => m.accuracy,
            Metric::P => m.precision,
            Metric::R => m.recall,
            Metric::Fs => m.f1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Ca => "CA",
            Metric::P => "P",
            Metric::R => "R",
            Metric::Fs => "FS",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ca" | "accuracy" => Ok(Metric::Ca),
            "p" | "precision" => Ok(Metric::P),
            "r" | "recall" => Ok(Metric::R),
            "fs" | "f1" => Ok(Metric::Fs),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

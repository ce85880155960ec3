//! The five classifiers trained on sanitized data, behind one [`TrainedModel`].

mod bayes;
mod forest;
mod knn;
mod mlp;
mod normalize;
mod svm;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bayes::GaussianNb;
pub use forest::{Node, RandomForest, Tree};
pub use knn::Knn;
pub use mlp::{Activations, Mlp};
pub use normalize::NormalizationParams;
pub use svm::{Hyperplane, LinearSvm};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Svm,
    Knn,
    Rf,
    Nb,
    Ann,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] =
        [ClassifierKind::Svm, ClassifierKind::Knn, ClassifierKind::Rf, ClassifierKind::Nb, ClassifierKind::Ann];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::Knn => "knn",
            ClassifierKind::Rf => "rf",
            ClassifierKind::Nb => "nb",
            ClassifierKind::Ann => "ann",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "svm" => Ok(ClassifierKind::Svm),
            "knn" => Ok(ClassifierKind::Knn),
            "rf" | "forest" | "random-forest" => Ok(ClassifierKind::Rf),
            "nb" | "bayes" | "naive-bayes" => Ok(ClassifierKind::Nb),
            "ann" | "mlp" => Ok(ClassifierKind::Ann),
            other => Err(Error::Config(format!("unknown classifier `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { lambda: 1e-4, learning_rate: 0.01, epochs: 100 }
    }
}

impl SvmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.learning_rate > 0.0 && self.lambda.is_finite() && self.learning_rate.is_finite()) {
            return Err(Error::Config("svm needs lambda >= 0 and a positive learning rate".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("svm needs at least one epoch".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { n_trees: 100, max_features: None, max_depth: None, min_samples_split: 2, bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BayesConfig {
    /// Added to every variance, as a fraction of the largest feature variance.
    pub var_smoothing: f64,
}

impl Default for BayesConfig {
    fn default() -> Self {
        BayesConfig { var_smoothing: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig { hidden: 64, learning_rate: 0.01, epochs: 200 }
    }
}

impl MlpConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.epochs == 0 || !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("ann needs hidden >= 1, epochs >= 1 and a positive learning rate".into()));
        }
        Ok(())
    }
}

/// Hyperparameters of every classifier; only the section matching the
/// trained kind is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub svm: SvmConfig,
    pub knn: KnnConfig,
    pub rf: ForestConfig,
    pub nb: BayesConfig,
    pub ann: MlpConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "lowercase", bound = "T: Scalar")]
pub enum ModelParams<T> {
    Svm(LinearSvm<T>),
    Knn(Knn<T>),
    Rf(RandomForest<T>),
    Nb(GaussianNb<T>),
    Ann(Mlp<T>),
}

impl<T: Scalar> ModelParams<T> {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ModelParams::Svm(_) => ClassifierKind::Svm,
            ModelParams::Knn(_) => ClassifierKind::Knn,
            ModelParams::Rf(_) => ClassifierKind::Rf,
            ModelParams::Nb(_) => ClassifierKind::Nb,
            ModelParams::Ann(_) => ClassifierKind::Ann,
        }
    }

    fn predict_one(&self, x: &[T]) -> usize {
        match self {
            ModelParams::Svm(m) => m.predict_one(x),
            ModelParams::Knn(m) => m.predict_one(x),
            ModelParams::Rf(m) => m.predict_one(x),
            ModelParams::Nb(m) => m.predict_one(x),
            ModelParams::Ann(m) => m.predict_one(x),
        }
    }
}

/// A fitted classifier with the normalization frozen at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainedModel<T> {
    pub format_version: u32,
    pub params: ModelParams<T>,
    pub norm: NormalizationParams<T>,
    pub n_classes: usize,
    pub config: ClassifierConfig,
    pub seed: u64,
}

/// Fits normalization on `rows`, then trains `kind` on the normalized rows.
pub fn train<T: Scalar>(
    kind: ClassifierKind,
    rows: &[Vec<T>],
    labels: &[usize],
    n_classes: usize,
    config: &ClassifierConfig,
    seed: u64,
) -> Result<TrainedModel<T>> {
    check_training(rows, labels, n_classes)?;
    let norm = NormalizationParams::fit(rows)?;
    let x = norm.apply(rows)?;
    let params = match kind {
        ClassifierKind::Svm => ModelParams::Svm(LinearSvm::fit(&x, labels, n_classes, &config.svm, seed)?),
        ClassifierKind::Knn => ModelParams::Knn(Knn::fit(&x, labels, n_classes, &config.knn)?),
        ClassifierKind::Rf => ModelParams::Rf(RandomForest::fit(&x, labels, n_classes, &config.rf, seed)?),
        ClassifierKind::Nb => ModelParams::Nb(GaussianNb::fit(&x, labels, n_classes, &config.nb)?),
        ClassifierKind::Ann => ModelParams::Ann(Mlp::fit(&x, labels, n_classes, &config.ann, seed)?),
    };
    Ok(TrainedModel { format_version: MODEL_FORMAT_VERSION, params, norm, n_classes, config: config.clone(), seed })
}

impl<T: Scalar> TrainedModel<T> {
    pub fn kind(&self) -> ClassifierKind {
        self.params.kind()
    }

    pub fn n_features(&self) -> usize {
        self.norm.width()
    }

    pub fn predict_row(&self, row: &[T]) -> Result<usize> {
        Ok(self.params.predict_one(&self.norm.apply_row(row)?))
    }

    pub fn predict(&self, rows: &[Vec<T>]) -> Result<Vec<usize>> {
        rows.iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Artifact(format!(
                "model format {} is not supported (expected {MODEL_FORMAT_VERSION})",
                model.format_version
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Shared input checks; returns the row count per class.
pub(crate) fn check_training<T>(rows: &[Vec<T>], labels: &[usize], n_classes: usize) -> Result<Vec<usize>> {
    if rows.is_empty() {
        return Err(Error::DegenerateTraining("no training rows".into()));
    }
    if rows.len() != labels.len() {
        return Err(Error::LengthMismatch(format!("{} rows but {} labels", rows.len(), labels.len())));
    }
    normalize::check_widths(rows, rows[0].len())?;
    let mut counts = vec![0; n_classes];
    for &l in labels {
        *counts.get_mut(l).ok_or(Error::LabelOutOfRange { label: l, n_classes })? += 1;
    }
    Ok(counts)
}

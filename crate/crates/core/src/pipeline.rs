//! Split, train and score one dataset. Shared by the service provider in
//! [`crate::protocol`] and by direct (protocol-free) runs.

use serde::{Deserialize, Serialize};

use crate::classifiers::{train, ClassifierConfig, ClassifierKind, TrainedModel};
use crate::dataset::{split, split_stratified, Dataset, Fraction, SplitIndices};
use crate::error::Result;
use crate::evaluation::{evaluate, Averaging, MetricsReport};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub classifier: ClassifierKind,
    pub config: ClassifierConfig,
    pub fraction: Fraction,
    pub stratified: bool,
    pub split_seed: u64,
    pub model_seed: u64,
}

impl TrainSpec {
    pub fn new(classifier: ClassifierKind, split_seed: u64, model_seed: u64) -> Self {
        TrainSpec {
            classifier,
            config: ClassifierConfig::default(),
            fraction: Fraction::default(),
            stratified: false,
            split_seed,
            model_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Fitted<T> {
    pub model: TrainedModel<T>,
    pub split: SplitIndices,
}

pub fn split_for<T: Scalar>(ds: &Dataset<T>, spec: &TrainSpec) -> Result<SplitIndices> {
    if spec.stratified {
        split_stratified(ds, spec.fraction, spec.split_seed)
    } else {
        split(ds, spec.fraction, spec.split_seed)
    }
}

pub fn fit<T: Scalar>(ds: &Dataset<T>, spec: &TrainSpec) -> Result<Fitted<T>> {
    let split = split_for(ds, spec)?;
    let (rows, labels) = ds.select(&split.train);
    let model = train(spec.classifier, &rows, &labels, ds.n_classes(), &spec.config, spec.model_seed)?;
    Ok(Fitted { model, split })
}

/// Scores the fitted model on the held-out rows of `ds`.
pub fn score<T: Scalar>(ds: &Dataset<T>, fitted: &Fitted<T>, averaging: Averaging) -> Result<MetricsReport> {
    let (rows, truth) = ds.select(&fitted.split.test);
    let predicted = fitted.model.predict(&rows)?;
    evaluate(&truth, &predicted, ds.n_classes(), averaging)
}

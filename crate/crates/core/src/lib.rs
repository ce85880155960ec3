//! Privacy-preserving sharing of tabular data for classification.
//!
//! Data owners split their records into a sensitive and a non-sensitive
//! part, perturb the sensitive part with Laplace noise and upload the
//! recombined (sanitized) table to a cloud service provider, which trains
//! one of five classifiers on the pooled uploads and answers label queries.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`). The type
//! aliases at the crate root pin everything to `f64`, which is what the
//! command-line harness uses.

pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod partition;
pub mod pipeline;
pub mod privacy;
pub mod protocol;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Dataset = dataset::Dataset<f64>;
pub type Record = dataset::Record<f64>;
pub type PartitionedDataset = partition::PartitionedDataset<f64>;
pub type View = partition::View<f64>;
pub type NoiseRecord = privacy::NoiseRecord<f64>;
pub type SanitizedDataset = privacy::SanitizedDataset<f64>;
pub type TrainedModel = classifiers::TrainedModel<f64>;
pub type NormalizationParams = classifiers::NormalizationParams<f64>;
pub type Simulation = protocol::Simulation<f64>;
pub type TraceLog = protocol::TraceLog<f64>;

/// Single-precision variants, mostly useful for memory-bound experiments.
pub type Dataset32 = dataset::Dataset<f32>;
pub type TrainedModel32 = classifiers::TrainedModel<f32>;

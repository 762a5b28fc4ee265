//! Tree classifiers over encoded beacon observations.
//!
//! Everything here is deterministic: the only randomness comes from
//! [`ChaCha8Rng`](rand_chacha::ChaCha8Rng) streams derived from caller seeds,
//! so the same inputs always produce the same split, the same trees and the
//! same serialized model.

mod forest;
mod metrics;
mod model;
mod pipeline;
mod split;
mod tree;

use thiserror::Error;

use crate::beacon::{Dataset, FeatureEncoder, FeatureVector, Label};

pub use forest::{ForestParams, RandomForest};
pub use metrics::{compute_metrics, evaluate, ConfusionMatrix, MetricsReport};
pub use model::{Model, ModelDocument, ModelKind, SplitProvenance, MODEL_FORMAT, MODEL_VERSION};
pub use pipeline::{evaluate_document, train_model, EvaluationReport, TrainConfig, TrainSummary};
pub use split::stratified_split;
pub use tree::{
    best_split, gini_impurity, ClassCounts, DecisionTree, MaxDepth, Node, SplitCandidate,
    TreeParams,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlError {
    #[error("test fraction {0} is not strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("split would leave class {label} with {test} test and {train} training samples")]
    DegenerateSplit {
        label: Label,
        train: usize,
        test: usize,
    },
    #[error("node has no samples")]
    EmptyNode,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("model document: {0}")]
    Document(String),
}

impl MlError {
    pub fn code(&self) -> &'static str {
        match self {
            MlError::InvalidFraction(_) => "InvalidFraction",
            MlError::DegenerateSplit { .. } => "DegenerateSplit",
            MlError::EmptyNode => "EmptyNode",
            MlError::EmptyTrainingSet => "EmptyTrainingSet",
            MlError::EmptyTestSet => "EmptyTestSet",
            MlError::EmptyMatrix => "EmptyMatrix",
            MlError::InvalidParams(_) => "InvalidParams",
            MlError::Document(_) => "ModelDocumentError",
        }
    }
}

/// One encoded training or test row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example {
    pub features: FeatureVector,
    pub label: Label,
}

impl Example {
    pub fn new(features: FeatureVector, label: Label) -> Self {
        Self { features, label }
    }
}

pub fn encode_dataset(encoder: &FeatureEncoder, dataset: &Dataset) -> Vec<Example> {
    dataset
        .samples
        .iter()
        .map(|s| Example::new(encoder.encode(s.role, &s.observation), s.label))
        .collect()
}

pub trait Classifier {
    fn predict(&self, x: &FeatureVector) -> Label;
}

use serde::{Deserialize, Serialize};

use super::{
    compute_metrics, encode_dataset, evaluate, stratified_split, ConfusionMatrix, DecisionTree,
    ForestParams, MetricsReport, MlError, Model, ModelDocument, ModelKind, RandomForest,
    SplitProvenance, TreeParams,
};
use crate::beacon::{Dataset, FeatureEncoder, LabelCounts};

/// Everything `train_model` needs besides the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub tree: TreeParams,
    /// Used when `kind` is a random forest; its `seed` is overridden by `seed`.
    pub forest: ForestParams,
    /// Fraction held out before fitting. `None` fits on every row.
    pub test_fraction: Option<f64>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        Self {
            kind,
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            test_fraction: Some(0.2),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub kind: ModelKind,
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_counts: LabelCounts,
    pub trees: usize,
    pub max_depth: usize,
    pub leaves: usize,
    pub vocabulary: usize,
}

/// Splits (if asked), fits the encoder on the training partition, then fits
/// the model on the encoded training rows.
pub fn train_model(dataset: &Dataset, config: &TrainConfig) -> Result<(ModelDocument, TrainSummary), MlError> {
    let (train, test_rows, split) = match config.test_fraction {
        Some(f) => {
            let (train, test) = stratified_split(dataset, f, config.seed)?;
            let provenance = SplitProvenance {
                test_fraction: f,
                seed: config.seed,
            };
            (train, test.len(), Some(provenance))
        }
        None => (dataset.clone(), 0, None),
    };
    if train.is_empty() {
        return Err(MlError::EmptyTrainingSet);
    }
    let encoder = FeatureEncoder::fit(&train).map_err(|_| MlError::EmptyTrainingSet)?;
    let examples = encode_dataset(&encoder, &train);
    let model = match config.kind {
        ModelKind::DecisionTree => Model::DecisionTree {
            params: config.tree,
            tree: DecisionTree::fit(&examples, &config.tree)?,
        },
        ModelKind::RandomForest => {
            let params = ForestParams {
                seed: config.seed,
                ..config.forest
            };
            Model::RandomForest(RandomForest::fit(&examples, &params)?)
        }
    };
    let trees = model.trees();
    let summary = TrainSummary {
        kind: model.kind(),
        train_rows: train.len(),
        test_rows,
        train_counts: train.label_counts(),
        trees: trees.len(),
        max_depth: trees.iter().map(DecisionTree::depth).max().unwrap_or(0),
        leaves: trees.iter().map(DecisionTree::leaf_count).sum(),
        vocabulary: encoder.vocabulary_len(),
    };
    Ok((ModelDocument::new(encoder, model, split), summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub rows: usize,
    pub counts: LabelCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitProvenance>,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
}

/// Scores a model on `dataset`, or on its held-out partition when `split` is given.
pub fn evaluate_document(
    doc: &ModelDocument,
    dataset: &Dataset,
    split: Option<SplitProvenance>,
) -> Result<EvaluationReport, MlError> {
    let test = match split {
        Some(s) => stratified_split(dataset, s.test_fraction, s.seed)?.1,
        None => dataset.clone(),
    };
    if test.is_empty() {
        return Err(MlError::EmptyTestSet);
    }
    let examples = encode_dataset(&doc.encoder, &test);
    let confusion = evaluate(&doc.model, &examples)?;
    Ok(EvaluationReport {
        rows: test.len(),
        counts: test.label_counts(),
        split,
        metrics: compute_metrics(&confusion)?,
        confusion,
    })
}

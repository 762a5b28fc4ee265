use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Classifier, DecisionTree, MlError, RandomForest, TreeParams};
use crate::beacon::{FeatureEncoder, FeatureVector, Label};

pub const MODEL_FORMAT: &str = "proxauth-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DecisionTree,
    RandomForest,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::DecisionTree => "dt",
            ModelKind::RandomForest => "rf",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    DecisionTree { params: TreeParams, tree: DecisionTree },
    RandomForest(RandomForest),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::DecisionTree { .. } => ModelKind::DecisionTree,
            Model::RandomForest(_) => ModelKind::RandomForest,
        }
    }

    pub fn trees(&self) -> &[DecisionTree] {
        match self {
            Model::DecisionTree { tree, .. } => std::slice::from_ref(tree),
            Model::RandomForest(f) => f.trees(),
        }
    }

    fn check(&self) -> Result<(), MlError> {
        match self {
            Model::DecisionTree { params, tree } => {
                params.validate()?;
                tree.check()
            }
            Model::RandomForest(f) => {
                RandomForest::from_parts(*f.params(), f.trees().to_vec()).map(|_| ())
            }
        }
    }
}

impl Classifier for Model {
    fn predict(&self, x: &FeatureVector) -> Label {
        match self {
            Model::DecisionTree { tree, .. } => tree.predict(x),
            Model::RandomForest(f) => f.predict(x),
        }
    }
}

/// Which holdout the model was fitted without.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitProvenance {
    pub test_fraction: f64,
    pub seed: u64,
}

/// Versioned, self-describing model file: encoder, parameters and every tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub encoder: FeatureEncoder,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitProvenance>,
    pub model: Model,
}

impl ModelDocument {
    pub fn new(encoder: FeatureEncoder, model: Model, split: Option<SplitProvenance>) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            encoder,
            split,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MlError> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| MlError::Document(e.to_string()))?;
        if doc.format != MODEL_FORMAT {
            return Err(MlError::Document(format!("unknown format {:?}", doc.format)));
        }
        if doc.version != MODEL_VERSION {
            return Err(MlError::Document(format!("unsupported version {}", doc.version)));
        }
        doc.model.check()?;
        Ok(doc)
    }
}

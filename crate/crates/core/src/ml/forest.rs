use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::Builder;
use super::{Classifier, DecisionTree, Example, MlError, TreeParams};
use crate::beacon::{FeatureVector, Label, FEATURE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub features_per_split: usize,
    pub tree_params: TreeParams,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            bootstrap: true,
            features_per_split: 2,
            tree_params: TreeParams::default(),
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<(), MlError> {
        if self.n_trees == 0 {
            return Err(MlError::InvalidParams("n_trees must be at least 1".into()));
        }
        if !(1..=FEATURE_COUNT).contains(&self.features_per_split) {
            return Err(MlError::InvalidParams(format!(
                "features_per_split must be in 1..={FEATURE_COUNT}"
            )));
        }
        self.tree_params.validate()
    }
}

/// Random stream for tree `index`: the forest seed on ChaCha8 stream `index`.
fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    params: ForestParams,
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Bagged CART ensemble. Trees are grown in parallel; each one only reads
    /// its own stream, so the result does not depend on scheduling.
    pub fn fit(train: &[Example], params: &ForestParams) -> Result<Self, MlError> {
        params.validate()?;
        if train.is_empty() {
            return Err(MlError::EmptyTrainingSet);
        }
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|i| grow_tree(train, params, i))
            .collect();
        Ok(Self {
            params: *params,
            trees,
        })
    }

    pub fn from_parts(params: ForestParams, trees: Vec<DecisionTree>) -> Result<Self, MlError> {
        params.validate()?;
        if trees.len() != params.n_trees {
            return Err(MlError::Document(format!(
                "forest declares {} trees but holds {}",
                params.n_trees,
                trees.len()
            )));
        }
        for t in &trees {
            t.check()?;
        }
        Ok(Self { params, trees })
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Number of trees voting `Authentic` for `x`.
    pub fn authentic_votes(&self, x: &FeatureVector) -> usize {
        self.trees
            .iter()
            .filter(|t| t.predict(x) == Label::Authentic)
            .count()
    }
}

fn grow_tree(train: &[Example], params: &ForestParams, index: usize) -> DecisionTree {
    let mut rng = tree_rng(params.seed, index);
    let n = train.len();
    let rows: Vec<usize> = if params.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let k = params.features_per_split;
    let choose = move || {
        let mut f = sample(&mut rng, FEATURE_COUNT, k).into_vec();
        f.sort_unstable();
        f
    };
    Builder::new(train, &params.tree_params, choose).build(rows)
}

impl Classifier for RandomForest {
    /// Unweighted majority; a tied vote is `Unauthorized`.
    fn predict(&self, x: &FeatureVector) -> Label {
        let yes = self.authentic_votes(x);
        if 2 * yes > self.trees.len() {
            Label::Authentic
        } else {
            Label::Unauthorized
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::tree::ClassCounts;

    const A: Label = Label::Authentic;
    const U: Label = Label::Unauthorized;

    fn leaf(label: Label) -> DecisionTree {
        DecisionTree::leaf(label, ClassCounts::default())
    }

    fn forest(labels: &[Label]) -> RandomForest {
        let params = ForestParams {
            n_trees: labels.len(),
            ..ForestParams::default()
        };
        RandomForest::from_parts(params, labels.iter().map(|&l| leaf(l)).collect()).unwrap()
    }

    #[test]
    fn majority_vote_and_ties() {
        let x = FeatureVector([0.0, 1.0, 0.5, -50.0]);
        assert_eq!(forest(&[A, A, U]).predict(&x), A);
        assert_eq!(forest(&[A, U]).predict(&x), U);
        assert_eq!(forest(&[U, U, A]).predict(&x), U);
        assert_eq!(forest(&[A]).predict(&x), A);
    }

    fn toy() -> Vec<Example> {
        (0..60)
            .map(|i| {
                let rssi = -40.0 - i as f64;
                let ssid = (i % 5) as f64 + 1.0;
                let label = if rssi > -70.0 || ssid == 2.0 { A } else { U };
                Example::new(FeatureVector([(i % 2) as f64, ssid, (i % 3) as f64 / 2.0, rssi]), label)
            })
            .collect()
    }

    #[test]
    fn same_seed_same_forest() {
        let params = ForestParams {
            n_trees: 15,
            seed: 42,
            ..ForestParams::default()
        };
        let a = RandomForest::fit(&toy(), &params).unwrap();
        let b = RandomForest::fit(&toy(), &params).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());

        let c = RandomForest::fit(&toy(), &ForestParams { seed: 43, ..params }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn tree_streams_are_independent_of_count() {
        // tree i is the same whether the forest has 3 or 8 trees
        let small = RandomForest::fit(&toy(), &ForestParams { n_trees: 3, seed: 5, ..Default::default() }).unwrap();
        let large = RandomForest::fit(&toy(), &ForestParams { n_trees: 8, seed: 5, ..Default::default() }).unwrap();
        assert_eq!(small.trees(), &large.trees()[..3]);
    }

    #[test]
    fn degenerate_forest_is_a_tree() {
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            features_per_split: 4,
            tree_params: TreeParams::default(),
            seed: 3,
        };
        let forest = RandomForest::fit(&toy(), &params).unwrap();
        let tree = DecisionTree::fit(&toy(), &TreeParams::default()).unwrap();
        assert_eq!(forest.trees()[0], tree);
    }

    #[test]
    fn parameter_errors() {
        let t = toy();
        for p in [
            ForestParams { n_trees: 0, ..Default::default() },
            ForestParams { features_per_split: 0, ..Default::default() },
            ForestParams { features_per_split: 5, ..Default::default() },
        ] {
            assert!(matches!(RandomForest::fit(&t, &p), Err(MlError::InvalidParams(_))));
        }
        assert_eq!(RandomForest::fit(&[], &ForestParams::default()), Err(MlError::EmptyTrainingSet));
        assert!(RandomForest::from_parts(ForestParams { n_trees: 2, ..Default::default() }, vec![leaf(A)]).is_err());
    }
}

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{Classifier, Example, MlError};
use crate::beacon::{FeatureVector, Label, LabelCounts, FEATURE_COUNT};

pub type ClassCounts = LabelCounts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxDepth {
    Bounded(usize),
    Unbounded,
}

impl MaxDepth {
    fn allows(self, depth: usize) -> bool {
        match self {
            MaxDepth::Bounded(max) => depth < max,
            MaxDepth::Unbounded => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: MaxDepth,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: MaxDepth::Bounded(16),
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

impl TreeParams {
    pub fn unbounded() -> Self {
        Self {
            max_depth: MaxDepth::Unbounded,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), MlError> {
        if self.max_depth == MaxDepth::Bounded(0) {
            return Err(MlError::InvalidParams("max_depth must be positive".into()));
        }
        if self.min_samples_split < 2 {
            return Err(MlError::InvalidParams("min_samples_split must be at least 2".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(MlError::InvalidParams("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

/// `1 - sum(p_c^2)` over the two classes.
pub fn gini_impurity(counts: ClassCounts) -> Result<f64, MlError> {
    let n = counts.total();
    if n == 0 {
        return Err(MlError::EmptyNode);
    }
    let n = n as f64;
    let (a, u) = (counts.authentic as f64 / n, counts.unauthorized as f64 / n);
    Ok(1.0 - (a * a + u * u))
}

/// Majority class; an even count falls back to `Unauthorized`.
pub(crate) fn majority(counts: ClassCounts) -> Label {
    if counts.authentic > counts.unauthorized {
        Label::Authentic
    } else {
        Label::Unauthorized
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature_index: usize,
    pub threshold: f64,
    /// Child-size-weighted Gini of the two children.
    pub weighted_impurity: f64,
}

/// Exact score of a partition: `sum over children of (a^2 + u^2) / n_child`,
/// held as a fraction so that equal partitions compare equal. Higher is purer.
#[derive(Debug, Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of(left: ClassCounts, right: ClassCounts) -> Self {
        let sq = |c: ClassCounts| (c.authentic as u128).pow(2) + (c.unauthorized as u128).pow(2);
        let (nl, nr) = (left.total() as u128, right.total() as u128);
        Purity {
            num: sq(left) * nr + sq(right) * nl,
            den: nl * nr,
        }
    }

    fn parent(c: ClassCounts) -> Self {
        Purity {
            num: (c.authentic as u128).pow(2) + (c.unauthorized as u128).pow(2),
            den: c.total() as u128,
        }
    }

    fn cmp(&self, other: &Purity) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }

    fn weighted_impurity(&self, n: usize) -> f64 {
        1.0 - (self.num as f64 / self.den as f64) / n as f64
    }
}

fn counts_of<'a>(examples: impl IntoIterator<Item = &'a Example>) -> ClassCounts {
    let mut c = ClassCounts::default();
    for e in examples {
        c.add(e.label);
    }
    c
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Best Gini split of the rows `rows` of `data` over `features`, honoring a
/// minimum child size. Rows are reordered in place.
fn find_split(
    data: &[Example],
    rows: &mut [usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<SplitCandidate> {
    let n = rows.len();
    let total = counts_of(rows.iter().map(|&i| &data[i]));
    let parent = Purity::parent(total);
    let mut best: Option<(Purity, usize, f64)> = None;

    let mut features = features.to_vec();
    features.sort_unstable();
    features.dedup();
    for &f in &features {
        rows.sort_by(|&a, &b| data[a].features.0[f].total_cmp(&data[b].features.0[f]));
        let mut left = ClassCounts::default();
        for k in 0..n - 1 {
            left.add(data[rows[k]].label);
            let lo = data[rows[k]].features.0[f];
            let hi = data[rows[k + 1]].features.0[f];
            if lo >= hi {
                continue;
            }
            let (nl, nr) = (k + 1, n - k - 1);
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let right = ClassCounts {
                authentic: total.authentic - left.authentic,
                unauthorized: total.unauthorized - left.unauthorized,
            };
            let score = Purity::of(left, right);
            if best.as_ref().is_none_or(|(b, _, _)| score.cmp(b) == Ordering::Greater) {
                best = Some((score, f, midpoint(lo, hi)));
            }
        }
    }

    let (score, feature_index, threshold) = best?;
    let pure = total.authentic == 0 || total.unauthorized == 0;
    if pure || score.cmp(&parent) == Ordering::Less {
        return None;
    }
    Some(SplitCandidate {
        feature_index,
        threshold,
        weighted_impurity: score.weighted_impurity(n),
    })
}

/// Thresholds sit midway between consecutive distinct values. Ties go to the
/// lowest feature index, then the lowest threshold. `None` for a pure node
/// or when every row has the same value on every candidate feature. A split
/// that leaves impurity unchanged is still taken.
pub fn best_split(samples: &[Example], candidate_features: &[usize]) -> Option<SplitCandidate> {
    if samples.len() < 2 {
        return None;
    }
    let mut rows: Vec<usize> = (0..samples.len()).collect();
    find_split(samples, &mut rows, candidate_features, 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        label: Label,
        counts: ClassCounts,
    },
    /// Rows with `x[feature] <= threshold` go to `left`. Children are indices
    /// into the tree's node list.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART classifier stored as a flat node list with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

pub(crate) struct Builder<'a, F> {
    data: &'a [Example],
    params: &'a TreeParams,
    choose_features: F,
    nodes: Vec<Node>,
}

impl<'a, F: FnMut() -> Vec<usize>> Builder<'a, F> {
    pub(crate) fn new(data: &'a [Example], params: &'a TreeParams, choose_features: F) -> Self {
        Self {
            data,
            params,
            choose_features,
            nodes: Vec::new(),
        }
    }

    pub(crate) fn build(mut self, mut rows: Vec<usize>) -> DecisionTree {
        self.grow(&mut rows, 0);
        DecisionTree { nodes: self.nodes }
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let counts = counts_of(rows.iter().map(|&i| &self.data[i]));
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            label: majority(counts),
            counts,
        });

        let pure = counts.authentic == 0 || counts.unauthorized == 0;
        if pure || rows.len() < self.params.min_samples_split || !self.params.max_depth.allows(depth) {
            return id;
        }
        let features = (self.choose_features)();
        let Some(split) = find_split(self.data, rows, &features, self.params.min_samples_leaf) else {
            return id;
        };

        let f = split.feature_index;
        rows.sort_by(|&a, &b| self.data[a].features.0[f].total_cmp(&self.data[b].features.0[f]));
        let cut = rows.partition_point(|&i| self.data[i].features.0[f] <= split.threshold);
        let (left_rows, right_rows) = rows.split_at_mut(cut);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: f,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    /// Greedy CART over all features.
    pub fn fit(train: &[Example], params: &TreeParams) -> Result<Self, MlError> {
        params.validate()?;
        if train.is_empty() {
            return Err(MlError::EmptyTrainingSet);
        }
        let all: Vec<usize> = (0..FEATURE_COUNT).collect();
        Ok(Builder::new(train, params, || all.clone()).build((0..train.len()).collect()))
    }

    /// A single leaf that always predicts `label`.
    pub fn leaf(label: Label, counts: ClassCounts) -> Self {
        Self {
            nodes: vec![Node::Leaf { label, counts }],
        }
    }

    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self, MlError> {
        let tree = Self { nodes };
        tree.check()?;
        Ok(tree)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Every child index is in range and points forward, features are valid.
    pub(crate) fn check(&self) -> Result<(), MlError> {
        if self.nodes.is_empty() {
            return Err(MlError::Document("tree has no nodes".into()));
        }
        for (id, node) in self.nodes.iter().enumerate() {
            if let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = *node
            {
                let ok = feature < FEATURE_COUNT
                    && threshold.is_finite()
                    && left > id
                    && right > id
                    && left < self.nodes.len()
                    && right < self.nodes.len()
                    && left != right;
                if !ok {
                    return Err(MlError::Document(format!("malformed split node {id}")));
                }
            }
        }
        Ok(())
    }

    pub fn leaf_for(&self, x: &FeatureVector) -> &Node {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x.0[*feature] <= *threshold { *left } else { *right },
                leaf => return leaf,
            }
        }
    }

    /// Longest root-to-leaf path, counted in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

impl Classifier for DecisionTree {
    fn predict(&self, x: &FeatureVector) -> Label {
        match self.leaf_for(x) {
            Node::Leaf { label, .. } => *label,
            Node::Split { .. } => unreachable!(),
        }
    }
}

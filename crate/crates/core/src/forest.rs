//! Binary decision trees, majority-vote ensembles, path extraction and the
//! JSON model file.
//!
//! Internal nodes test a single feature against a threshold in standardized
//! units: `value <= threshold` goes left, `value > threshold` goes right.

use std::fs;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_space::{FeatureSpace, Label};
use crate::trainer::Criterion;

pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Internal { feature: usize, threshold: f64, left: Box<Node>, right: Box<Node> },
    Leaf { label: Label },
}

impl Node {
    pub fn leaf(label: Label) -> Node {
        Node::Leaf { label }
    }

    pub fn split(feature: usize, threshold: f64, left: Node, right: Node) -> Node {
        Node::Internal { feature, threshold, left: Box::new(left), right: Box::new(right) }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Internal { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    fn max_feature(&self) -> Option<usize> {
        match self {
            Node::Leaf { .. } => None,
            Node::Internal { feature, left, right, .. } => {
                Some(*feature).max(left.max_feature()).max(right.max_feature())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    root: Node,
    depth: usize,
}

impl DecisionTree {
    pub fn new(root: Node) -> Self {
        let depth = root.depth();
        DecisionTree { root, depth }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label } => return *label,
                Node::Internal { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// The unique path `x` traverses, tagged with `tree_index`.
    pub fn route(&self, tree_index: usize, x: &[f64]) -> Path {
        let mut conditions = Vec::with_capacity(self.depth);
        let mut leaves_before = 0;
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label } => {
                    return Path { conditions, leaf_label: *label, tree_index, path_index: leaves_before };
                }
                Node::Internal { feature, threshold, left, right } => {
                    if x[*feature] <= *threshold {
                        conditions.push(Condition::le(*feature, *threshold));
                        node = left;
                    } else {
                        conditions.push(Condition::gt(*feature, *threshold));
                        leaves_before += left.leaf_count();
                        node = right;
                    }
                }
            }
        }
    }

    /// Depth-first (left before right) enumeration of root-to-leaf paths.
    /// `path_index` is the leaf's ordinal in that order, whatever the filter.
    pub fn paths(&self, tree_index: usize, polarity: Polarity) -> Vec<Path> {
        let mut out = Vec::new();
        let mut stack = Vec::with_capacity(self.depth);
        let mut ordinal = 0;
        collect_paths(&self.root, &mut stack, &mut ordinal, tree_index, polarity, &mut out);
        out
    }
}

fn collect_paths(
    node: &Node,
    stack: &mut Vec<Condition>,
    ordinal: &mut usize,
    tree_index: usize,
    polarity: Polarity,
    out: &mut Vec<Path>,
) {
    match node {
        Node::Leaf { label } => {
            if polarity.accepts(*label) {
                out.push(Path { conditions: stack.clone(), leaf_label: *label, tree_index, path_index: *ordinal });
            }
            *ordinal += 1;
        }
        Node::Internal { feature, threshold, left, right } => {
            stack.push(Condition::le(*feature, *threshold));
            collect_paths(left, stack, ordinal, tree_index, polarity, out);
            stack.pop();
            stack.push(Condition::gt(*feature, *threshold));
            collect_paths(right, stack, ordinal, tree_index, polarity, out);
            stack.pop();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `value <= threshold`
    Le,
    /// `value > threshold`
    Gt,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: usize,
    pub direction: Direction,
    pub threshold: f64,
}

impl Condition {
    pub fn le(feature: usize, threshold: f64) -> Self {
        Condition { feature, direction: Direction::Le, threshold }
    }

    pub fn gt(feature: usize, threshold: f64) -> Self {
        Condition { feature, direction: Direction::Gt, threshold }
    }

    pub fn holds(&self, value: f64) -> bool {
        match self.direction {
            Direction::Le => value <= self.threshold,
            Direction::Gt => value > self.threshold,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
    All,
}

impl Polarity {
    fn accepts(self, label: Label) -> bool {
        match self {
            Polarity::Positive => label == Label::Positive,
            Polarity::Negative => label == Label::Negative,
            Polarity::All => true,
        }
    }
}

/// A root-to-leaf path. A feature may be tested more than once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub conditions: Vec<Condition>,
    pub leaf_label: Label,
    pub tree_index: usize,
    pub path_index: usize,
}

impl Path {
    pub fn is_satisfied_by(&self, x: &[f64]) -> bool {
        self.conditions.iter().all(|c| c.holds(x[c.feature]))
    }
}

/// How a trained ensemble was produced; stored in the model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub num_trees: usize,
    pub max_depth: usize,
    pub criterion: Criterion,
    pub features_per_split: usize,
    pub min_samples_split: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

/// Majority-vote forest over a fixed feature space.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeEnsemble {
    trees: Vec<DecisionTree>,
    feature_space: FeatureSpace,
    importances: Vec<f64>,
    metadata: Option<TrainingMeta>,
}

impl TreeEnsemble {
    pub fn new(trees: Vec<DecisionTree>, feature_space: FeatureSpace) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidConfig("an ensemble needs at least one tree".into()));
        }
        let n = feature_space.len();
        for (k, tree) in trees.iter().enumerate() {
            if let Some(f) = tree.root.max_feature() {
                if f >= n {
                    return Err(Error::SchemaMismatch(format!(
                        "tree {k} splits on feature {f} but the space has {n} features"
                    )));
                }
            }
        }
        Ok(TreeEnsemble { trees, feature_space, importances: vec![0.0; n], metadata: None })
    }

    /// Sets normalized importances (nonnegative, summing to 1).
    pub fn with_importances(mut self, importances: Vec<f64>) -> Result<Self> {
        self.feature_space.check_len(importances.len())?;
        let sum: f64 = importances.iter().sum();
        let all_zero = importances.iter().all(|v| *v == 0.0);
        if importances.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !(all_zero || (sum - 1.0).abs() <= 1e-9) {
            return Err(Error::InvalidConfig(format!("importances must be nonnegative and sum to 1 (sum {sum})")));
        }
        self.importances = importances;
        Ok(self)
    }

    pub fn with_metadata(mut self, metadata: TrainingMeta) -> Self {
        self.metadata = Some(metadata);
        self
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn feature_space(&self) -> &FeatureSpace {
        &self.feature_space
    }

    pub fn feature_space_mut(&mut self) -> &mut FeatureSpace {
        &mut self.feature_space
    }

    pub fn importances(&self) -> &[f64] {
        &self.importances
    }

    pub fn metadata(&self) -> Option<&TrainingMeta> {
        self.metadata.as_ref()
    }

    pub fn num_features(&self) -> usize {
        self.feature_space.len()
    }

    /// Sum of the `±1` votes.
    pub fn vote_sum(&self, x: &[f64]) -> i64 {
        self.trees.iter().map(|t| t.predict(x).value() as i64).sum()
    }

    /// Negative iff the vote sum is `<= 0`, so even-sized ties go negative.
    pub fn predict(&self, x: &[f64]) -> Label {
        debug_assert_eq!(x.len(), self.num_features());
        if self.vote_sum(x) <= 0 {
            Label::Negative
        } else {
            Label::Positive
        }
    }

    /// Fraction of trees voting positive; the ranking score for ROC AUC.
    pub fn vote_fraction(&self, x: &[f64]) -> f64 {
        let pos = self.trees.iter().filter(|t| t.predict(x).is_positive()).count();
        pos as f64 / self.trees.len() as f64
    }

    /// All paths of tree `k` with the requested leaf label.
    pub fn paths(&self, k: usize, polarity: Polarity) -> Vec<Path> {
        self.trees[k].paths(k, polarity)
    }

    pub fn route(&self, k: usize, x: &[f64]) -> Path {
        self.trees[k].route(k, x)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_VERSION,
            feature_space: self.feature_space.clone(),
            trees: self.trees.iter().map(FlatTree::from_tree).collect(),
            importances: self.importances.clone(),
            metadata: self.metadata.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serialization is infallible");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let probe: VersionProbe = serde_json::from_str(json).map_err(|e| Error::CorruptModel(e.to_string()))?;
        if probe.version != MODEL_VERSION {
            return Err(Error::SchemaVersionMismatch { expected: MODEL_VERSION, found: probe.version });
        }
        let file: ModelFile = serde_json::from_str(json).map_err(|e| Error::CorruptModel(e.to_string()))?;
        let n = file.feature_space.len();
        let trees = file
            .trees
            .into_iter()
            .enumerate()
            .map(|(k, t)| t.into_tree(n).map_err(|e| Error::CorruptModel(format!("tree {k}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut ens = TreeEnsemble::new(trees, file.feature_space)
            .map_err(|e| Error::CorruptModel(e.to_string()))?
            .with_importances(file.importances)
            .map_err(|e| Error::CorruptModel(e.to_string()))?;
        ens.metadata = file.metadata;
        Ok(ens)
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    feature_space: FeatureSpace,
    trees: Vec<FlatTree>,
    importances: Vec<f64>,
    metadata: Option<TrainingMeta>,
}

/// Preorder node array: every parent precedes its children.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatTree {
    depth: usize,
    nodes: Vec<FlatNode>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum FlatNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { label: Label },
}

impl FlatTree {
    fn from_tree(tree: &DecisionTree) -> FlatTree {
        fn push(node: &Node, nodes: &mut Vec<FlatNode>) -> usize {
            let at = nodes.len();
            match node {
                Node::Leaf { label } => nodes.push(FlatNode::Leaf { label: *label }),
                Node::Internal { feature, threshold, left, right } => {
                    nodes.push(FlatNode::Split { feature: *feature, threshold: *threshold, left: 0, right: 0 });
                    let l = push(left, nodes);
                    let r = push(right, nodes);
                    if let FlatNode::Split { left, right, .. } = &mut nodes[at] {
                        *left = l;
                        *right = r;
                    }
                }
            }
            at
        }
        let mut nodes = Vec::new();
        push(&tree.root, &mut nodes);
        FlatTree { depth: tree.depth, nodes }
    }

    fn into_tree(self, n_features: usize) -> std::result::Result<DecisionTree, String> {
        fn build(
            at: usize,
            nodes: &[FlatNode],
            used: &mut [bool],
            n_features: usize,
        ) -> std::result::Result<Node, String> {
            let node = nodes.get(at).ok_or_else(|| format!("node index {at} out of range"))?;
            if std::mem::replace(&mut used[at], true) {
                return Err(format!("node {at} referenced twice"));
            }
            match node {
                FlatNode::Leaf { label } => Ok(Node::Leaf { label: *label }),
                FlatNode::Split { feature, threshold, left, right } => {
                    if *feature >= n_features {
                        return Err(format!("node {at}: feature {feature} out of range"));
                    }
                    if !threshold.is_finite() {
                        return Err(format!("node {at}: non-finite threshold"));
                    }
                    if *left <= at || *right <= at {
                        return Err(format!("node {at}: child precedes parent"));
                    }
                    let l = build(*left, nodes, used, n_features)?;
                    let r = build(*right, nodes, used, n_features)?;
                    Ok(Node::split(*feature, *threshold, l, r))
                }
            }
        }
        let mut used = vec![false; self.nodes.len()];
        let root = build(0, &self.nodes, &mut used, n_features)?;
        if used.iter().any(|u| !u) {
            return Err("unreachable nodes".into());
        }
        let tree = DecisionTree::new(root);
        if tree.depth != self.depth {
            return Err(format!("recorded depth {} but actual depth {}", self.depth, tree.depth));
        }
        Ok(tree)
    }
}

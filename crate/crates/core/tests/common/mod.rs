#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treetweak::{DecisionTree, FeatureSpace, Instance, Label, Node, TreeEnsemble};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_node(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> Node {
    if depth == 0 || rng.random_bool(0.25) {
        let label = if rng.random_bool(0.5) { Label::Positive } else { Label::Negative };
        return Node::leaf(label);
    }
    let feature = rng.random_range(0..n);
    let threshold = rng.random_range(-2.0..2.0);
    Node::split(feature, threshold, random_node(rng, n, depth - 1), random_node(rng, n, depth - 1))
}

pub fn random_forest(rng: &mut ChaCha8Rng, k: usize, n: usize, depth: usize) -> TreeEnsemble {
    let trees = (0..k).map(|_| DecisionTree::new(random_node(rng, n, depth))).collect();
    TreeEnsemble::new(trees, FeatureSpace::anonymous(n)).unwrap()
}

pub fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    Instance::new((0..n).map(|_| rng.random_range(-2.5..2.5)).collect())
}

/// Up to `count` instances the ensemble predicts negative, from `tries` draws.
pub fn negatives(rng: &mut ChaCha8Rng, ens: &TreeEnsemble, count: usize, tries: usize) -> Vec<Instance> {
    let n = ens.num_features();
    (0..tries)
        .map(|_| random_instance(rng, n))
        .filter(|x| ens.predict(&x.values) == Label::Negative)
        .take(count)
        .collect()
}

/// Independent tree traversal.
pub fn leaf_of(node: &Node, x: &[f64]) -> Label {
    match node {
        Node::Leaf { label } => *label,
        Node::Internal { feature, threshold, left, right } => {
            if x[*feature] <= *threshold {
                leaf_of(left, x)
            } else {
                leaf_of(right, x)
            }
        }
    }
}

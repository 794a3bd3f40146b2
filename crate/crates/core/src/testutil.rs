use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::feature_space::Label;
use crate::forest::Node;

/// Random tree over `n` features with thresholds in [-2, 2).
pub(crate) fn random_node(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> Node {
    if depth == 0 || rng.random_bool(0.25) {
        Node::leaf(if rng.random_bool(0.5) { Label::Positive } else { Label::Negative })
    } else {
        let f = rng.random_range(0..n);
        let t = rng.random_range(-2.0..2.0);
        Node::split(f, t, random_node(rng, n, depth - 1), random_node(rng, n, depth - 1))
    }
}

//! CART-style tree induction and bagged random forests.
//!
//! Splits are chosen greedily over a random subset of features per node;
//! candidate thresholds are midpoints between consecutive distinct values.
//! A node is split only when the weighted impurity strictly decreases.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_space::{FeatureSpace, Instance, Label};
use crate::forest::{DecisionTree, Node, TrainingMeta, TreeEnsemble};
use crate::parallel::Workers;

/// Gains at or below this are treated as no improvement.
const MIN_GAIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Gini => "gini",
            Criterion::Entropy => "entropy",
        })
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gini" => Ok(Criterion::Gini),
            "entropy" => Ok(Criterion::Entropy),
            other => Err(format!("unknown criterion `{other}` (expected gini or entropy)")),
        }
    }
}

/// Node impurity from class counts. Entropy is in bits.
pub fn impurity(neg: usize, pos: usize, criterion: Criterion) -> Result<f64> {
    let total = neg + pos;
    if total == 0 {
        return Err(Error::EmptyNode);
    }
    Ok(impurity_unchecked(neg as f64, pos as f64, criterion))
}

fn impurity_unchecked(neg: f64, pos: f64, criterion: Criterion) -> f64 {
    let total = neg + pos;
    let (pn, pp) = (neg / total, pos / total);
    match criterion {
        Criterion::Gini => 1.0 - pn * pn - pp * pp,
        Criterion::Entropy => {
            let h = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
            h(pn) + h(pp)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub criterion: Criterion,
    /// Defaults to the number of features.
    pub max_depth: Option<usize>,
    pub num_trees: usize,
    /// Defaults to `ceil(sqrt(n))`.
    pub features_per_split: Option<usize>,
    pub min_samples_split: usize,
    /// Defaults to `num_trees > 1`.
    pub bootstrap: Option<bool>,
    pub seed: u64,
    /// `0` uses every available core.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            criterion: Criterion::Gini,
            max_depth: None,
            num_trees: 100,
            features_per_split: None,
            min_samples_split: 2,
            bootstrap: None,
            seed: 0,
            workers: 0,
        }
    }
}

impl TrainConfig {
    pub fn single_tree() -> Self {
        TrainConfig { num_trees: 1, bootstrap: Some(false), ..Default::default() }
    }

    /// Fills defaults for `n` features and validates ranges.
    pub fn resolve(&self, n: usize) -> Result<TrainingMeta> {
        if n == 0 {
            return Err(Error::InvalidConfig("no features".into()));
        }
        let max_depth = self.max_depth.unwrap_or(n);
        let features_per_split = self.features_per_split.unwrap_or_else(|| (n as f64).sqrt().ceil() as usize);
        if max_depth < 1 {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        if self.num_trees < 1 {
            return Err(Error::InvalidConfig("num_trees must be at least 1".into()));
        }
        if !(1..=n).contains(&features_per_split) {
            return Err(Error::InvalidConfig(format!(
                "features_per_split must be in [1, {n}], got {features_per_split}"
            )));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidConfig("min_samples_split must be at least 2".into()));
        }
        Ok(TrainingMeta {
            num_trees: self.num_trees,
            max_depth,
            criterion: self.criterion,
            features_per_split,
            min_samples_split: self.min_samples_split,
            bootstrap: self.bootstrap.unwrap_or(self.num_trees > 1),
            seed: self.seed,
        })
    }
}

/// Column-major copy of the training data.
struct Dataset {
    columns: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl Dataset {
    fn new(data: &[Instance]) -> Result<Dataset> {
        let first = data.first().ok_or(Error::EmptyDataset)?;
        let n = first.len();
        let mut columns = vec![Vec::with_capacity(data.len()); n];
        let mut labels = Vec::with_capacity(data.len());
        for (i, inst) in data.iter().enumerate() {
            if inst.len() != n {
                return Err(Error::LengthMismatch { expected: n, actual: inst.len() });
            }
            let label =
                inst.label.ok_or_else(|| Error::InvalidConfig(format!("training instance {i} has no label")))?;
            for (col, v) in columns.iter_mut().zip(&inst.values) {
                col.push(*v);
            }
            labels.push(label);
        }
        Ok(Dataset { columns, labels })
    }

    fn counts(&self, idx: &[usize]) -> (usize, usize) {
        let pos = idx.iter().filter(|&&i| self.labels[i].is_positive()).count();
        (idx.len() - pos, pos)
    }
}

struct Split {
    feature: usize,
    threshold: f64,
}

struct Grower<'a, R> {
    data: &'a Dataset,
    meta: &'a TrainingMeta,
    rng: &'a mut R,
}

impl<R: Rng> Grower<'_, R> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> Node {
        let (neg, pos) = self.data.counts(idx);
        let majority = if pos > neg { Label::Positive } else { Label::Negative };
        if neg == 0 || pos == 0 || depth >= self.meta.max_depth || idx.len() < self.meta.min_samples_split {
            return Node::leaf(majority);
        }
        let Some(split) = self.best_split(idx, neg, pos) else {
            return Node::leaf(majority);
        };
        let col = &self.data.columns[split.feature];
        let mid = partition(idx, |&i| col[i] <= split.threshold);
        let (left_idx, right_idx) = idx.split_at_mut(mid);
        let left = self.grow(left_idx, depth + 1);
        let right = self.grow(right_idx, depth + 1);
        Node::split(split.feature, split.threshold, left, right)
    }

    fn best_split(&mut self, idx: &[usize], neg: usize, pos: usize) -> Option<Split> {
        let n_features = self.data.columns.len();
        let parent = impurity_unchecked(neg as f64, pos as f64, self.meta.criterion);
        let total = idx.len() as f64;
        let mut best: Option<(f64, Split)> = None;
        let mut pairs: Vec<(f64, bool)> = Vec::with_capacity(idx.len());
        for feature in sample(self.rng, n_features, self.meta.features_per_split) {
            let col = &self.data.columns[feature];
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (col[i], self.data.labels[i].is_positive())));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut left_neg, mut left_pos) = (0.0, 0.0);
            for w in 0..pairs.len() - 1 {
                if pairs[w].1 {
                    left_pos += 1.0;
                } else {
                    left_neg += 1.0;
                }
                let (lo, hi) = (pairs[w].0, pairs[w + 1].0);
                if lo == hi {
                    continue;
                }
                let left_n = left_neg + left_pos;
                let (right_neg, right_pos) = (neg as f64 - left_neg, pos as f64 - left_pos);
                let children = (left_n / total) * impurity_unchecked(left_neg, left_pos, self.meta.criterion)
                    + ((total - left_n) / total) * impurity_unchecked(right_neg, right_pos, self.meta.criterion);
                let gain = parent - children;
                if gain > MIN_GAIN && best.as_ref().is_none_or(|(g, _)| gain > *g) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some((gain, Split { feature, threshold }));
                }
            }
        }
        best.map(|(_, s)| s)
    }
}

/// Stable in-place partition; returns the number of elements satisfying `pred`.
fn partition(idx: &mut [usize], pred: impl Fn(&usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = idx.iter().partition(|i| pred(i));
    let mid = yes.len();
    idx[..mid].copy_from_slice(&yes);
    idx[mid..].copy_from_slice(&no);
    mid
}

/// Grows one tree on all of `data` (no resampling).
pub fn train_tree<R: Rng>(data: &[Instance], cfg: &TrainConfig, rng: &mut R) -> Result<DecisionTree> {
    let dataset = Dataset::new(data)?;
    let meta = cfg.resolve(dataset.columns.len())?;
    let mut idx: Vec<usize> = (0..data.len()).collect();
    Ok(grow_tree(&dataset, &meta, &mut idx, rng))
}

fn grow_tree<R: Rng>(data: &Dataset, meta: &TrainingMeta, idx: &mut [usize], rng: &mut R) -> DecisionTree {
    let mut grower = Grower { data, meta, rng };
    DecisionTree::new(grower.grow(idx, 0))
}

/// Random stream for tree `k`: independent of how trees are scheduled.
pub fn tree_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

/// Trains `num_trees` trees, each on a bootstrap resample when enabled, and
/// attaches mean-decrease-in-impurity importances.
pub fn train_forest(space: &FeatureSpace, data: &[Instance], cfg: &TrainConfig) -> Result<TreeEnsemble> {
    let dataset = Dataset::new(data)?;
    space.check_len(dataset.columns.len())?;
    let meta = cfg.resolve(space.len())?;
    let rows = data.len();
    let tree_ids: Vec<usize> = (0..meta.num_trees).collect();
    let trees = Workers::new(cfg.workers).map(&tree_ids, |&k| {
        let mut rng = tree_rng(meta.seed, k);
        let mut idx: Vec<usize> =
            if meta.bootstrap { (0..rows).map(|_| rng.random_range(0..rows)).collect() } else { (0..rows).collect() };
        grow_tree(&dataset, &meta, &mut idx, &mut rng)
    });
    let ens = TreeEnsemble::new(trees, space.clone())?;
    let importances = feature_importances(&ens, data, meta.criterion)?;
    Ok(ens.with_importances(importances)?.with_metadata(meta))
}

/// Mean decrease in impurity, measured by routing `data` through each tree.
///
/// Per tree, every internal node contributes `(samples at node / N) * gain`
/// to its split feature; contributions are averaged over trees and
/// normalized to sum to 1. All zeros when no split reduces impurity.
pub fn feature_importances(ens: &TreeEnsemble, data: &[Instance], criterion: Criterion) -> Result<Vec<f64>> {
    let dataset = Dataset::new(data)?;
    ens.feature_space().check_len(dataset.columns.len())?;
    let mut totals = vec![0.0; ens.num_features()];
    let n = data.len() as f64;
    for tree in ens.trees() {
        let mut idx: Vec<usize> = (0..data.len()).collect();
        accumulate_importance(tree.root(), &dataset, &mut idx, n, criterion, &mut totals);
    }
    let sum: f64 = totals.iter().sum();
    if sum > 0.0 {
        totals.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(totals)
}

fn accumulate_importance(
    node: &Node,
    data: &Dataset,
    idx: &mut [usize],
    n: f64,
    criterion: Criterion,
    totals: &mut [f64],
) {
    let Node::Internal { feature, threshold, left, right } = node else {
        return;
    };
    if idx.is_empty() {
        return;
    }
    let col = &data.columns[*feature];
    let mid = partition(idx, |&i| col[i] <= *threshold);
    let (neg, pos) = data.counts(idx);
    let m = idx.len() as f64;
    let mut children = 0.0;
    for side in [&idx[..mid], &idx[mid..]] {
        if !side.is_empty() {
            let (sn, sp) = data.counts(side);
            children += (side.len() as f64 / m) * impurity_unchecked(sn as f64, sp as f64, criterion);
        }
    }
    let gain = impurity_unchecked(neg as f64, pos as f64, criterion) - children;
    totals[*feature] += (m / n) * gain.max(0.0);
    let (l, r) = idx.split_at_mut(mid);
    accumulate_importance(left, data, l, n, criterion, totals);
    accumulate_importance(right, data, r, n, criterion, totals);
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1: f64,
    pub mcc: f64,
    pub roc_auc: f64,
}

/// F1, MCC and ROC AUC (positive-vote fraction as the ranking score).
pub fn evaluate_classifier(ens: &TreeEnsemble, test: &[Instance]) -> Result<Metrics> {
    let labels: Vec<Label> = test
        .iter()
        .map(|i| i.label.ok_or_else(|| Error::InvalidConfig("test instance without label".into())))
        .collect::<Result<_>>()?;
    let predictions: Vec<Label> = test.iter().map(|i| ens.predict(&i.values)).collect();
    let scores: Vec<f64> = test.iter().map(|i| ens.vote_fraction(&i.values)).collect();
    let mut m = classification_metrics(&labels, &predictions)?;
    m.roc_auc = roc_auc(&scores, &labels)?;
    Ok(m)
}

fn classification_metrics(labels: &[Label], predictions: &[Label]) -> Result<Metrics> {
    let (mut tp, mut tn, mut fp, mut fneg) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (y, p) in labels.iter().zip(predictions) {
        match (y.is_positive(), p.is_positive()) {
            (true, true) => tp += 1.0,
            (false, false) => tn += 1.0,
            (false, true) => fp += 1.0,
            (true, false) => fneg += 1.0,
        }
    }
    if tp + fneg == 0.0 || tn + fp == 0.0 {
        return Err(Error::DegenerateLabels);
    }
    let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fneg) };
    let denom = ((tp + fp) * (tp + fneg) * (tn + fp) * (tn + fneg)).sqrt();
    let mcc = if denom == 0.0 { 0.0 } else { (tp * tn - fp * fneg) / denom };
    Ok(Metrics { accuracy: (tp + tn) / labels.len() as f64, f1, mcc, roc_auc: f64::NAN })
}

/// Probability that a random positive outscores a random negative (ties count half).
pub fn roc_auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // midranks over tied groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            if labels[o].is_positive() {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q))
}

/// Class-stratified split; each class contributes `round(test_fraction * size)` test rows.
pub fn stratified_split(data: &[Instance], test_fraction: f64, seed: u64) -> (Vec<Instance>, Vec<Instance>) {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [Some(Label::Negative), Some(Label::Positive), None] {
        let mut members: Vec<&Instance> = data.iter().filter(|i| i.label == class).collect();
        members.shuffle(&mut rng);
        let n_test = (members.len() as f64 * test_fraction).round() as usize;
        test.extend(members[..n_test].iter().map(|i| (*i).clone()));
        train.extend(members[n_test..].iter().map(|i| (*i).clone()));
    }
    (train, test)
}

//! Actionable feature tweaking for tree-ensemble classifiers.
//!
//! Given a binary random forest (or a single decision tree) and an instance the
//! model labels negative, the [`tweaker`] searches the positive root-to-leaf
//! paths of the negatively-voting trees for the cheapest feature-vector change
//! that flips the ensemble to positive. [`recommend`] turns the resulting
//! transformations into ranked, human-readable feature-change suggestions.
//!
//! All tweaking happens in z-score space: every tolerance `epsilon` is a
//! multiple of one standard deviation of the affected feature.

pub mod costs;
pub mod error;
pub mod feature_space;
pub mod forest;
pub mod parallel;
pub mod recommend;
pub mod synthetic;
pub mod trainer;
pub mod tweaker;

#[cfg(test)]
mod testutil;

pub use costs::CostFunction;
pub use error::{Error, Result};
pub use feature_space::{FeatureKind, FeatureMeta, FeatureSpace, Instance, Label};
pub use forest::{Condition, DecisionTree, Direction, Node, Path, Polarity, TreeEnsemble};
pub use trainer::{Criterion, TrainConfig};
pub use tweaker::{Tolerance, Transformation, TweakOptions, TweakOutcome, Tweaker};

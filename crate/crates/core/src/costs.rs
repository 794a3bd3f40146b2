//! Tweaking costs: how much "effort" it takes to move from `x` to `x'`.
//!
//! `tweaked_feature_rate` and `jaccard` only look at which components changed
//! (exact inequality). Candidates are produced by explicit assignment, so an
//! unchanged component is bit-identical to the original.
//!
//! Jaccard on real vectors treats each vector as the set of `(index, value)`
//! pairs. With `c` changed components out of `n` the intersection has `n - c`
//! pairs and the union `n + c`, giving `2c / (n + c)`. The min/max (Ruzicka)
//! generalization is not used because it breaks on negative z-scores.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("cosine distance is undefined for a zero vector")]
    ZeroVector,
    #[error("correlation is undefined for a constant vector")]
    ZeroVariance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostFunction {
    TweakedFeatureRate,
    Euclidean,
    Cosine,
    Jaccard,
    Pearson,
}

impl CostFunction {
    pub const ALL: [CostFunction; 5] = [
        CostFunction::TweakedFeatureRate,
        CostFunction::Euclidean,
        CostFunction::Cosine,
        CostFunction::Jaccard,
        CostFunction::Pearson,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CostFunction::TweakedFeatureRate => "tweaked_feature_rate",
            CostFunction::Euclidean => "euclidean",
            CostFunction::Cosine => "cosine",
            CostFunction::Jaccard => "jaccard",
            CostFunction::Pearson => "pearson",
        }
    }

    pub fn cost(self, x: &[f64], x_prime: &[f64]) -> Result<f64, CostError> {
        match self {
            CostFunction::TweakedFeatureRate => tweaked_feature_rate(x, x_prime),
            CostFunction::Euclidean => euclidean_distance(x, x_prime),
            CostFunction::Cosine => cosine_distance(x, x_prime),
            CostFunction::Jaccard => jaccard_distance(x, x_prime),
            CostFunction::Pearson => pearson_correlation_distance(x, x_prime),
        }
    }

    /// Inclusive range of attainable values.
    pub fn range(self) -> (f64, f64) {
        match self {
            CostFunction::TweakedFeatureRate | CostFunction::Jaccard => (0.0, 1.0),
            CostFunction::Euclidean => (0.0, f64::INFINITY),
            CostFunction::Cosine | CostFunction::Pearson => (0.0, 2.0),
        }
    }
}

impl fmt::Display for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "tweaked_feature_rate" => CostFunction::TweakedFeatureRate,
            "euclidean" | "euclidean_distance" => CostFunction::Euclidean,
            "cosine" | "cosine_distance" => CostFunction::Cosine,
            "jaccard" | "jaccard_distance" => CostFunction::Jaccard,
            "pearson" | "pearson_correlation_distance" => CostFunction::Pearson,
            other => {
                return Err(format!(
                    "unknown cost `{other}` (expected tweaked_feature_rate, euclidean, cosine, jaccard or pearson)"
                ))
            }
        })
    }
}

fn check_len(x: &[f64], y: &[f64]) -> Result<(), CostError> {
    if x.len() != y.len() {
        return Err(CostError::LengthMismatch(x.len(), y.len()));
    }
    Ok(())
}

fn changed(x: &[f64], y: &[f64]) -> usize {
    x.iter().zip(y).filter(|(a, b)| a != b).count()
}

pub fn tweaked_feature_rate(x: &[f64], x_prime: &[f64]) -> Result<f64, CostError> {
    check_len(x, x_prime)?;
    if x.is_empty() {
        return Ok(0.0);
    }
    Ok(changed(x, x_prime) as f64 / x.len() as f64)
}

pub fn euclidean_distance(x: &[f64], x_prime: &[f64]) -> Result<f64, CostError> {
    check_len(x, x_prime)?;
    Ok(x.iter().zip(x_prime).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

pub fn cosine_distance(x: &[f64], x_prime: &[f64]) -> Result<f64, CostError> {
    check_len(x, x_prime)?;
    if x == x_prime && x.iter().any(|&v| v != 0.0) {
        return Ok(0.0);
    }
    let dot: f64 = x.iter().zip(x_prime).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = x_prime.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(CostError::ZeroVector);
    }
    Ok((1.0 - (dot / (nx * ny)).clamp(-1.0, 1.0)).clamp(0.0, 2.0))
}

pub fn jaccard_distance(x: &[f64], x_prime: &[f64]) -> Result<f64, CostError> {
    check_len(x, x_prime)?;
    let n = x.len();
    let c = changed(x, x_prime);
    if c == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * c as f64 / (n + c) as f64)
}

/// `1 - corr(x, x')`; zero for identical vectors even when they are constant.
pub fn pearson_correlation_distance(x: &[f64], x_prime: &[f64]) -> Result<f64, CostError> {
    check_len(x, x_prime)?;
    if x == x_prime {
        return Ok(0.0);
    }
    let n = x.len() as f64;
    if x.len() < 2 {
        return Err(CostError::ZeroVariance);
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = x_prime.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(x_prime) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CostError::ZeroVariance);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(1.0 - r)
}

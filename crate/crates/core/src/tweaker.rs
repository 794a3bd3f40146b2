//! Feature tweaking: the cheapest change that turns a negative prediction
//! positive.
//!
//! For every tree that votes negative on `x`, each positive root-to-leaf path
//! yields one candidate: `x` with every feature the path tests moved to just
//! inside the path's region, `epsilon` past the binding threshold. A candidate
//! is kept only when the whole ensemble then predicts positive, and the
//! cheapest kept candidate under the chosen cost wins. Ties go to the smallest
//! `(tree, path)` index, the order in which candidates are generated.
//!
//! A path may test a feature several times. The tests are folded into one
//! interval `(lower, upper]`; the feature is set to `upper - epsilon` when an
//! upper bound exists (and still lies above `lower`), else to
//! `lower + epsilon`. Intervals narrower than `epsilon` make the path
//! infeasible, as does a non-adjustable feature whose current value falls
//! outside its interval.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::costs::CostFunction;
use crate::error::{Error, Result};
use crate::feature_space::{FeatureSpace, Instance, Label};
use crate::forest::{Direction, Node, Path, Polarity, TreeEnsemble};
use crate::parallel::Workers;

/// Largest positive-path count [`brute_force_tweak`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 100_000;

/// The ε grid used for coverage/cost sweeps.
pub const DEFAULT_EPSILON_GRID: [f64; 5] = [0.01, 0.05, 0.1, 0.5, 1.0];

/// Per-condition margin, in standard deviations.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Tolerance(f64);

impl Tolerance {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon.is_finite() && epsilon > 0.0 {
            Ok(Tolerance(epsilon))
        } else {
            Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Tolerance {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Tolerance::new(v)
    }
}

impl From<Tolerance> for f64 {
    fn from(t: Tolerance) -> f64 {
        t.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TweakOptions {
    pub epsilon: Tolerance,
    pub cost: CostFunction,
    /// Leave features that already satisfy their interval untouched instead
    /// of moving them to the threshold.
    pub skip_satisfied: bool,
    /// Maximum number of paths examined per instance.
    pub budget: Option<usize>,
}

impl TweakOptions {
    pub fn new(epsilon: f64, cost: CostFunction) -> Result<Self> {
        Ok(TweakOptions { epsilon: Tolerance::new(epsilon)?, cost, skip_satisfied: false, budget: None })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transformation {
    pub candidate: Instance,
    pub source_tree: usize,
    pub source_path: usize,
    /// `None` when the cost is undefined for this pair (zero norm or zero
    /// variance); such candidates rank after every comparable one.
    pub cost: Option<f64>,
    pub changed_indices: Vec<usize>,
}

impl Transformation {
    fn rank_key(&self) -> (bool, f64, usize, usize) {
        (self.cost.is_none(), self.cost.unwrap_or(0.0), self.source_tree, self.source_path)
    }

    /// Strict "ranks before" on (comparability, cost, tree, path).
    pub fn ranks_before(&self, other: &Transformation) -> bool {
        cmp_key(self.rank_key(), other.rank_key()) == std::cmp::Ordering::Less
    }
}

fn cmp_key(a: (bool, f64, usize, usize), b: (bool, f64, usize, usize)) -> std::cmp::Ordering {
    a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3))
}

/// Sorts by (comparable first, cost, tree, path).
pub fn sort_by_cost(candidates: &mut [Transformation]) {
    candidates.sort_by(|a, b| cmp_key(a.rank_key(), b.rank_key()));
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotCoveredReason {
    /// No negatively voting tree has a positive leaf.
    NoPositivePaths,
    /// Every positive path was too narrow for ε or blocked by a fixed feature.
    AllInfeasible,
    /// Candidates existed but none flipped the ensemble.
    NoEnsembleFlip,
}

impl fmt::Display for NotCoveredReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NotCoveredReason::NoPositivePaths => "no positive paths in negatively voting trees",
            NotCoveredReason::AllInfeasible => "every positive path is infeasible",
            NotCoveredReason::NoEnsembleFlip => "no candidate flips the ensemble",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TweakOutcome {
    Found { best: Transformation, all_candidates: Vec<Transformation> },
    NotCovered { reason: NotCoveredReason },
}

impl TweakOutcome {
    pub fn best(&self) -> Option<&Transformation> {
        match self {
            TweakOutcome::Found { best, .. } => Some(best),
            TweakOutcome::NotCovered { .. } => None,
        }
    }

    pub fn candidates(&self) -> &[Transformation] {
        match self {
            TweakOutcome::Found { all_candidates, .. } => all_candidates,
            TweakOutcome::NotCovered { .. } => &[],
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, TweakOutcome::Found { .. })
    }

    fn from_candidates(candidates: Vec<Transformation>, stats: &SearchStats) -> TweakOutcome {
        let best = candidates.iter().fold(None::<&Transformation>, |best, c| match best {
            Some(b) if !c.ranks_before(b) => Some(b),
            _ => Some(c),
        });
        match best {
            Some(best) => TweakOutcome::Found { best: best.clone(), all_candidates: candidates },
            None => TweakOutcome::NotCovered {
                reason: if stats.paths_examined == 0 {
                    NotCoveredReason::NoPositivePaths
                } else if stats.infeasible == stats.paths_examined {
                    NotCoveredReason::AllInfeasible
                } else {
                    NotCoveredReason::NoEnsembleFlip
                },
            },
        }
    }
}

/// Bookkeeping for one search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub trees_searched: usize,
    pub paths_examined: usize,
    pub infeasible: usize,
    pub rejected: usize,
    pub incomparable: usize,
    /// The budget cut the search short.
    pub truncated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InfeasibleReason {
    /// The folded interval is narrower than ε.
    TooNarrow,
    /// A non-adjustable feature lies outside the path's interval.
    Blocked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Infeasible {
    pub feature: usize,
    pub reason: InfeasibleReason,
}

/// All tests a path places on one feature, as `lower < value <= upper`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Interval {
    feature: usize,
    lower: f64,
    upper: f64,
}

impl Interval {
    fn contains(&self, v: f64) -> bool {
        self.lower < v && v <= self.upper
    }

    fn target(&self, epsilon: f64) -> Option<f64> {
        let v = if self.upper.is_finite() { self.upper - epsilon } else { self.lower + epsilon };
        self.contains(v).then_some(v)
    }
}

fn fold(path: &Path) -> Vec<Interval> {
    let mut out: Vec<Interval> = Vec::new();
    for c in &path.conditions {
        let iv = match out.iter_mut().find(|iv| iv.feature == c.feature) {
            Some(iv) => iv,
            None => {
                out.push(Interval { feature: c.feature, lower: f64::NEG_INFINITY, upper: f64::INFINITY });
                out.last_mut().unwrap()
            }
        };
        match c.direction {
            Direction::Le => iv.upper = iv.upper.min(c.threshold),
            Direction::Gt => iv.lower = iv.lower.max(c.threshold),
        }
    }
    out
}

fn apply(
    x: &[f64],
    intervals: &[Interval],
    epsilon: f64,
    space: &FeatureSpace,
    skip_satisfied: bool,
) -> std::result::Result<Vec<f64>, Infeasible> {
    let mut out = x.to_vec();
    for iv in intervals {
        let current = x[iv.feature];
        if !space.is_adjustable(iv.feature) {
            if iv.contains(current) {
                continue;
            }
            return Err(Infeasible { feature: iv.feature, reason: InfeasibleReason::Blocked });
        }
        if skip_satisfied && iv.contains(current) {
            continue;
        }
        out[iv.feature] =
            iv.target(epsilon).ok_or(Infeasible { feature: iv.feature, reason: InfeasibleReason::TooNarrow })?;
    }
    Ok(out)
}

/// The ε-satisfactory instance of a positive path: `x` with each tested
/// feature moved `epsilon` inside the path's region.
pub fn build_positive_instance(
    x: &Instance,
    path: &Path,
    epsilon: Tolerance,
    space: &FeatureSpace,
    skip_satisfied: bool,
) -> std::result::Result<Instance, Infeasible> {
    let values = apply(&x.values, &fold(path), epsilon.value(), space, skip_satisfied)?;
    Ok(Instance { values, label: x.label })
}

fn changed_indices(x: &[f64], y: &[f64]) -> Vec<usize> {
    x.iter().zip(y).enumerate().filter(|(_, (a, b))| a != b).map(|(i, _)| i).collect()
}

struct CachedPath {
    tree: usize,
    path_index: usize,
    intervals: Vec<Interval>,
}

/// A candidate before costing.
#[derive(Clone, Debug, PartialEq)]
pub struct RawCandidate {
    pub values: Vec<f64>,
    pub source_tree: usize,
    pub source_path: usize,
}

enum Attempt {
    Infeasible,
    Rejected,
    Kept(RawCandidate),
}

/// Tweaking engine over one ensemble. Positive paths are extracted and folded
/// once, then reused for every instance and every ε.
pub struct Tweaker<'a> {
    ens: &'a TreeEnsemble,
    positive_paths: Vec<Vec<CachedPath>>,
    workers: Workers,
}

impl<'a> Tweaker<'a> {
    pub fn new(ens: &'a TreeEnsemble) -> Self {
        Self::with_workers(ens, Workers::new(0))
    }

    pub fn with_workers(ens: &'a TreeEnsemble, workers: Workers) -> Self {
        let positive_paths = (0..ens.len())
            .map(|k| {
                ens.paths(k, Polarity::Positive)
                    .into_iter()
                    .map(|p| CachedPath { tree: k, path_index: p.path_index, intervals: fold(&p) })
                    .collect()
            })
            .collect();
        Tweaker { ens, positive_paths, workers }
    }

    pub fn ensemble(&self) -> &TreeEnsemble {
        self.ens
    }

    /// Number of positive paths across all trees.
    pub fn positive_path_count(&self) -> usize {
        self.positive_paths.iter().map(Vec::len).sum()
    }

    fn check_negative(&self, x: &Instance) -> Result<()> {
        self.ens.feature_space().check_len(x.len())?;
        if self.ens.predict(&x.values) != Label::Negative {
            return Err(Error::NotNegative);
        }
        Ok(())
    }

    /// Uncosted candidates, in (tree, path) order.
    pub fn raw_candidates(
        &self,
        x: &Instance,
        epsilon: Tolerance,
        skip_satisfied: bool,
        budget: Option<usize>,
    ) -> Result<(Vec<RawCandidate>, SearchStats)> {
        self.check_negative(x)?;
        let mut stats = SearchStats::default();
        let mut work: Vec<&CachedPath> = Vec::new();
        for (k, tree) in self.ens.trees().iter().enumerate() {
            // the ensemble is negative, so this is "tree agrees with the ensemble"
            if tree.predict(&x.values) == Label::Negative {
                stats.trees_searched += 1;
                work.extend(&self.positive_paths[k]);
            }
        }
        if let Some(limit) = budget {
            if work.len() > limit {
                log::warn!("search budget of {limit} paths reached; result may be suboptimal");
                work.truncate(limit);
                stats.truncated = true;
            }
        }
        stats.paths_examined = work.len();
        let space = self.ens.feature_space();
        let eps = epsilon.value();
        let attempts = self.workers.map(&work, |p| match apply(&x.values, &p.intervals, eps, space, skip_satisfied) {
            Err(_) => Attempt::Infeasible,
            Ok(values) if self.ens.predict(&values) == Label::Positive => {
                Attempt::Kept(RawCandidate { values, source_tree: p.tree, source_path: p.path_index })
            }
            Ok(_) => Attempt::Rejected,
        });
        let mut kept = Vec::new();
        for a in attempts {
            match a {
                Attempt::Infeasible => stats.infeasible += 1,
                Attempt::Rejected => stats.rejected += 1,
                Attempt::Kept(c) => kept.push(c),
            }
        }
        Ok((kept, stats))
    }

    /// Every ε-satisfactory instance from negatively voting trees that the
    /// ensemble predicts positive, costed under `opts.cost`.
    pub fn candidate_set(&self, x: &Instance, opts: &TweakOptions) -> Result<(Vec<Transformation>, SearchStats)> {
        let (raw, mut stats) = self.raw_candidates(x, opts.epsilon, opts.skip_satisfied, opts.budget)?;
        let out = cost_candidates(x, raw, opts.cost, &mut stats);
        Ok((out, stats))
    }

    pub fn tweak(&self, x: &Instance, opts: &TweakOptions) -> Result<TweakOutcome> {
        Ok(self.tweak_with_stats(x, opts)?.0)
    }

    pub fn tweak_with_stats(&self, x: &Instance, opts: &TweakOptions) -> Result<(TweakOutcome, SearchStats)> {
        let (candidates, stats) = self.candidate_set(x, opts)?;
        Ok((TweakOutcome::from_candidates(candidates, &stats), stats))
    }

    /// Coverage and cost statistics over an ε grid and several cost functions.
    /// Instances the model already predicts positive are counted and skipped.
    pub fn sweep(
        &self,
        instances: &[Instance],
        epsilons: &[f64],
        costs: &[CostFunction],
        skip_satisfied: bool,
        budget: Option<usize>,
    ) -> Result<SweepReport> {
        let tolerances = epsilons.iter().map(|&e| Tolerance::new(e)).collect::<Result<Vec<_>>>()?;
        for x in instances {
            self.ens.feature_space().check_len(x.len())?;
        }
        let eligible: Vec<usize> =
            (0..instances.len()).filter(|&i| self.ens.predict(&instances[i].values) == Label::Negative).collect();
        let mut rows = Vec::new();
        let mut outcomes = Vec::new();
        for eps in tolerances {
            let per_instance = self
                .workers
                .map(&eligible, |&i| self.raw_candidates(&instances[i], eps, skip_satisfied, budget).map(|(c, _)| c));
            let per_instance = per_instance.into_iter().collect::<Result<Vec<_>>>()?;
            for &cost in costs {
                let mut records = Vec::with_capacity(eligible.len());
                for (&i, raw) in eligible.iter().zip(&per_instance) {
                    let x = &instances[i].values;
                    let costs: Vec<f64> = raw.iter().filter_map(|c| cost.cost(x, &c.values).ok()).collect();
                    records.push(InstanceRecord {
                        epsilon: eps.value(),
                        cost_function: cost,
                        instance: i,
                        candidates: raw.len(),
                        comparable: costs.len(),
                        best_cost: costs.iter().copied().reduce(f64::min),
                        mean_cost: (!costs.is_empty()).then(|| costs.iter().sum::<f64>() / costs.len() as f64),
                        cost_sum: costs.iter().sum(),
                    });
                }
                rows.push(SweepRow::summarize(eps.value(), cost, &records));
                outcomes.extend(records);
            }
        }
        Ok(SweepReport { rows, outcomes, skipped_positive: instances.len() - eligible.len() })
    }
}

fn cost_candidates(
    x: &Instance,
    raw: Vec<RawCandidate>,
    cost: CostFunction,
    stats: &mut SearchStats,
) -> Vec<Transformation> {
    raw.into_iter()
        .map(|c| {
            let value = match cost.cost(&x.values, &c.values) {
                Ok(v) => Some(v),
                Err(e) => {
                    log::warn!(
                        "candidate from tree {} path {} is incomparable under {cost}: {e}",
                        c.source_tree,
                        c.source_path
                    );
                    stats.incomparable += 1;
                    None
                }
            };
            Transformation {
                changed_indices: changed_indices(&x.values, &c.values),
                candidate: Instance { values: c.values, label: None },
                source_tree: c.source_tree,
                source_path: c.source_path,
                cost: value,
            }
        })
        .collect()
}

/// Runs the tweaking search with a fresh [`Tweaker`].
pub fn tweak(ens: &TreeEnsemble, x: &Instance, opts: &TweakOptions) -> Result<TweakOutcome> {
    Tweaker::with_workers(ens, Workers::sequential()).tweak(x, opts)
}

/// Which trees [`brute_force_tweak`] takes positive paths from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleScope {
    /// Every tree, including those already voting positive.
    AllTrees,
    /// Only trees voting negative on `x`, the same space [`Tweaker`] searches.
    NegativeVoting,
}

/// Exhaustive reference search. Enumerates positive paths directly from the
/// node structure, builds each ε-instance by assigning per-condition targets
/// and replaying the path, then keeps the cheapest ensemble-positive one.
pub fn brute_force_tweak(
    ens: &TreeEnsemble,
    x: &Instance,
    opts: &TweakOptions,
    scope: OracleScope,
) -> Result<TweakOutcome> {
    ens.feature_space().check_len(x.len())?;
    if ens.predict(&x.values) != Label::Negative {
        return Err(Error::NotNegative);
    }
    let trees: Vec<usize> = (0..ens.len())
        .filter(|&k| scope == OracleScope::AllTrees || ens.trees()[k].predict(&x.values) == Label::Negative)
        .collect();
    let mut paths = Vec::new();
    for &k in &trees {
        let mut leaf = 0;
        enumerate_positive(ens.trees()[k].root(), &mut Vec::new(), &mut leaf, k, &mut paths);
        if paths.len() > BRUTE_FORCE_LIMIT {
            return Err(Error::TooLarge { paths: paths.len(), limit: BRUTE_FORCE_LIMIT });
        }
    }
    let space = ens.feature_space();
    let eps = opts.epsilon.value();
    let mut stats = SearchStats { trees_searched: trees.len(), paths_examined: paths.len(), ..Default::default() };
    let mut raw = Vec::new();
    for (k, leaf, conds) in &paths {
        let mut v = x.values.clone();
        let mut touched: Vec<usize> = conds.iter().map(|c| c.0).collect();
        touched.sort_unstable();
        touched.dedup();
        for f in touched {
            let on_f: Vec<&(usize, bool, f64)> = conds.iter().filter(|c| c.0 == f).collect();
            let holds_now = on_f.iter().all(|c| if c.1 { x.values[f] <= c.2 } else { x.values[f] > c.2 });
            if !space.is_adjustable(f) || (opts.skip_satisfied && holds_now) {
                continue;
            }
            let min_le = on_f.iter().filter(|c| c.1).map(|c| c.2).reduce(f64::min);
            let max_gt = on_f.iter().filter(|c| !c.1).map(|c| c.2).reduce(f64::max);
            v[f] = match (min_le, max_gt) {
                (Some(t), _) => t - eps,
                (None, Some(t)) => t + eps,
                (None, None) => unreachable!("feature {f} has conditions"),
            };
        }
        let satisfied = conds.iter().all(|&(f, le, t)| if le { v[f] <= t } else { v[f] > t });
        if !satisfied {
            stats.infeasible += 1;
        } else if ens.predict(&v) == Label::Positive {
            raw.push(RawCandidate { values: v, source_tree: *k, source_path: *leaf });
        } else {
            stats.rejected += 1;
        }
    }
    let candidates = cost_candidates(x, raw, opts.cost, &mut stats);
    Ok(TweakOutcome::from_candidates(candidates, &stats))
}

/// (tree, leaf ordinal, [(feature, is_le, threshold)]) for each positive leaf.
type RawPath = (usize, usize, Vec<(usize, bool, f64)>);

fn enumerate_positive(
    node: &Node,
    prefix: &mut Vec<(usize, bool, f64)>,
    leaf: &mut usize,
    tree: usize,
    out: &mut Vec<RawPath>,
) {
    match node {
        Node::Leaf { label } => {
            if label.is_positive() {
                out.push((tree, *leaf, prefix.clone()));
            }
            *leaf += 1;
        }
        Node::Internal { feature, threshold, left, right } => {
            prefix.push((*feature, true, *threshold));
            enumerate_positive(left, prefix, leaf, tree, out);
            prefix.pop();
            prefix.push((*feature, false, *threshold));
            enumerate_positive(right, prefix, leaf, tree, out);
            prefix.pop();
        }
    }
}

/// Per-instance result of one (ε, cost) sweep cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub epsilon: f64,
    pub cost_function: CostFunction,
    pub instance: usize,
    pub candidates: usize,
    pub comparable: usize,
    pub best_cost: Option<f64>,
    pub mean_cost: Option<f64>,
    #[serde(skip)]
    cost_sum: f64,
}

impl InstanceRecord {
    pub fn covered(&self) -> bool {
        self.candidates > 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub cost_function: CostFunction,
    pub eligible: usize,
    pub covered: usize,
    pub coverage: f64,
    /// Quartiles of the candidate count over covered instances.
    pub candidates_q25: Option<f64>,
    pub candidates_median: Option<f64>,
    pub candidates_q75: Option<f64>,
    pub candidates_max: Option<usize>,
    /// Mean over every comparable candidate of every instance.
    pub micro_avg_cost: Option<f64>,
    /// Median over instances of the per-instance mean candidate cost.
    pub median_instance_avg_cost: Option<f64>,
}

impl SweepRow {
    fn summarize(epsilon: f64, cost_function: CostFunction, records: &[InstanceRecord]) -> SweepRow {
        let covered: Vec<&InstanceRecord> = records.iter().filter(|r| r.covered()).collect();
        let mut counts: Vec<f64> = covered.iter().map(|r| r.candidates as f64).collect();
        counts.sort_by(f64::total_cmp);
        let total_comparable: usize = records.iter().map(|r| r.comparable).sum();
        let total_cost: f64 = records.iter().map(|r| r.cost_sum).sum();
        let mut means: Vec<f64> = records.iter().filter_map(|r| r.mean_cost).collect();
        means.sort_by(f64::total_cmp);
        SweepRow {
            epsilon,
            cost_function,
            eligible: records.len(),
            covered: covered.len(),
            coverage: if records.is_empty() { 0.0 } else { covered.len() as f64 / records.len() as f64 },
            candidates_q25: quantile(&counts, 0.25),
            candidates_median: quantile(&counts, 0.5),
            candidates_q75: quantile(&counts, 0.75),
            candidates_max: covered.iter().map(|r| r.candidates).max(),
            micro_avg_cost: (total_comparable > 0).then(|| total_cost / total_comparable as f64),
            median_instance_avg_cost: quantile(&means, 0.5),
        }
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub outcomes: Vec<InstanceRecord>,
    pub skipped_positive: usize,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

impl SweepReport {
    pub const HEADER: &'static str = "epsilon,cost,eligible,covered,coverage,candidates_q25,candidates_median,candidates_q75,candidates_max,micro_avg_cost,median_instance_avg_cost";

    /// One row per (ε, cost), fixed six-decimal formatting.
    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        writeln!(out, "{}", Self::HEADER).unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{:.6},{},{},{},{},{},{}",
                r.epsilon,
                r.cost_function,
                r.eligible,
                r.covered,
                r.coverage,
                fmt_opt(r.candidates_q25),
                fmt_opt(r.candidates_median),
                fmt_opt(r.candidates_q75),
                r.candidates_max.map(|v| v.to_string()).unwrap_or_default(),
                fmt_opt(r.micro_avg_cost),
                fmt_opt(r.median_instance_avg_cost),
            )
            .unwrap();
        }
        String::from_utf8(out).unwrap()
    }

    /// Per-instance log behind the summary rows.
    pub fn outcomes_csv(&self) -> String {
        let mut out = Vec::new();
        writeln!(out, "epsilon,cost,instance,candidates,comparable,best_cost,mean_cost").unwrap();
        for r in &self.outcomes {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.epsilon,
                r.cost_function,
                r.instance,
                r.candidates,
                r.comparable,
                fmt_opt(r.best_cost),
                fmt_opt(r.mean_cost)
            )
            .unwrap();
        }
        String::from_utf8(out).unwrap()
    }
}

//! From transformations to ranked feature-change suggestions.
//!
//! A recommendation is one non-zero component of `r = x' - x`, reported with
//! its direction and magnitude in both standardized and original units, and
//! listed in decreasing order of the ensemble's feature importance.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::hash::Hash;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::costs::CostFunction;
use crate::error::{Error, Result};
use crate::feature_space::{FeatureKind, Instance, Label};
use crate::forest::TreeEnsemble;
use crate::tweaker::{sort_by_cost, NotCoveredReason, Transformation, TweakOutcome};

pub const RECOMMENDATIONS_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeDirection {
    Increase,
    Decrease,
}

/// "Switch `group` from `from` to `to`", for one-hot members.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySwitch {
    pub group: String,
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub feature_index: usize,
    pub feature_name: String,
    pub direction: ChangeDirection,
    pub magnitude_std: f64,
    pub magnitude_raw: f64,
    pub from_value_raw: f64,
    pub to_value_raw: f64,
    /// 1-based position in the ensemble's importance ranking.
    pub importance_rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_switch: Option<CategorySwitch>,
}

impl Recommendation {
    pub fn signed_delta_std(&self) -> f64 {
        match self.direction {
            ChangeDirection::Increase => self.magnitude_std,
            ChangeDirection::Decrease => -self.magnitude_std,
        }
    }
}

/// Feature indices by decreasing importance, ties by index.
pub fn importance_order(ens: &TreeEnsemble) -> Vec<usize> {
    let imp = ens.importances();
    let mut order: Vec<usize> = (0..imp.len()).collect();
    order.sort_by(|&a, &b| imp[b].total_cmp(&imp[a]).then(a.cmp(&b)));
    order
}

pub fn diff_to_recommendations(x: &Instance, t: &Transformation, ens: &TreeEnsemble) -> Vec<Recommendation> {
    let space = ens.feature_space();
    let order = importance_order(ens);
    let mut rank = vec![0; order.len()];
    for (pos, &f) in order.iter().enumerate() {
        rank[f] = pos + 1;
    }
    let to = &t.candidate.values;
    let mut recs: Vec<Recommendation> = order
        .iter()
        .filter(|&&i| to[i] != x.values[i])
        .map(|&i| {
            let meta = space.feature(i);
            let delta = to[i] - x.values[i];
            Recommendation {
                feature_index: i,
                feature_name: meta.name.clone(),
                direction: if delta > 0.0 { ChangeDirection::Increase } else { ChangeDirection::Decrease },
                magnitude_std: delta.abs(),
                magnitude_raw: delta.abs() * meta.std_dev,
                from_value_raw: space.destandardize_value(i, x.values[i]),
                to_value_raw: space.destandardize_value(i, to[i]),
                importance_rank: rank[i],
                category_switch: None,
            }
        })
        .collect();
    // project each touched one-hot group to its arg-max member
    for (group, members) in space.one_hot_groups() {
        if !recs.iter().any(|r| members.contains(&r.feature_index)) {
            continue;
        }
        let argmax = |values: &[f64]| {
            members
                .iter()
                .map(|&m| (m, space.destandardize_value(m, values[m])))
                .fold(None, |best: Option<(usize, f64)>, (m, v)| match best {
                    Some((_, bv)) if bv >= v => best,
                    _ => Some((m, v)),
                })
                .map(|(m, _)| m)
                .expect("groups are nonempty")
        };
        let category = |m: usize| match &space.feature(m).kind {
            FeatureKind::OneHotMember { category, .. } => category.clone(),
            FeatureKind::Continuous => unreachable!("group members are one-hot"),
        };
        let switch =
            CategorySwitch { group: group.clone(), from: category(argmax(&x.values)), to: category(argmax(to)) };
        for r in recs.iter_mut().filter(|r| members.contains(&r.feature_index)) {
            r.category_switch = Some(switch.clone());
        }
    }
    recs
}

/// The `k` cheapest distinct candidates (fewer when scarce).
pub fn top_k_transformations(outcome: &TweakOutcome, k: usize) -> Vec<Transformation> {
    let mut sorted = outcome.candidates().to_vec();
    sort_by_cost(&mut sorted);
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    sorted
        .into_iter()
        .filter(|t| seen.insert(t.candidate.values.iter().map(|v| v.to_bits()).collect()))
        .take(k)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceStatus {
    Found,
    NotCovered,
    /// The model already predicts positive.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedTransformation {
    pub rank: usize,
    pub cost: Option<f64>,
    pub source_tree: usize,
    pub source_path: usize,
    /// Standardized candidate vector.
    pub candidate: Vec<f64>,
    pub recommendations: Vec<Recommendation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecommendations {
    pub instance: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    pub status: InstanceStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<NotCoveredReason>,
    pub transformations: Vec<RankedTransformation>,
}

impl InstanceRecommendations {
    pub fn skipped(instance: usize, label: Option<Label>) -> Self {
        InstanceRecommendations {
            instance,
            label,
            status: InstanceStatus::Skipped,
            reason: None,
            transformations: Vec::new(),
        }
    }

    /// Builds the record for one tweaked instance from its top-k candidates.
    pub fn from_outcome(
        instance: usize,
        x: &Instance,
        outcome: &TweakOutcome,
        top_k: usize,
        ens: &TreeEnsemble,
    ) -> Self {
        match outcome {
            TweakOutcome::NotCovered { reason } => InstanceRecommendations {
                instance,
                label: x.label,
                status: InstanceStatus::NotCovered,
                reason: Some(*reason),
                transformations: Vec::new(),
            },
            TweakOutcome::Found { .. } => InstanceRecommendations {
                instance,
                label: x.label,
                status: InstanceStatus::Found,
                reason: None,
                transformations: top_k_transformations(outcome, top_k)
                    .into_iter()
                    .enumerate()
                    .map(|(i, t)| RankedTransformation {
                        rank: i + 1,
                        cost: t.cost,
                        source_tree: t.source_tree,
                        source_path: t.source_path,
                        recommendations: diff_to_recommendations(x, &t, ens),
                        candidate: t.candidate.values,
                    })
                    .collect(),
            },
        }
    }
}

/// The JSON document written by the `tweak` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecommendationFile {
    pub version: u32,
    pub epsilon: f64,
    pub cost_function: CostFunction,
    pub top_k: usize,
    pub eligible: usize,
    pub covered: usize,
    pub instances: Vec<InstanceRecommendations>,
}

impl RecommendationFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: RecommendationFile =
            serde_json::from_str(json).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        if file.version != RECOMMENDATIONS_VERSION {
            return Err(Error::SchemaVersionMismatch { expected: RECOMMENDATIONS_VERSION, found: file.version });
        }
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Relative frequency of features among the recommendations of the
/// `rank`-th best transformation across instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyColumn {
    pub rank: usize,
    /// Recommendations counted (the normalizer).
    pub occurrences: usize,
    /// By decreasing frequency, ties by name.
    pub frequencies: Vec<(String, f64)>,
}

impl FrequencyColumn {
    pub fn get(&self, feature: &str) -> f64 {
        self.frequencies.iter().find(|(f, _)| f == feature).map_or(0.0, |(_, v)| *v)
    }
}

/// One column per transformation rank `1..=max_rank`; each column counts
/// every recommendation at that rank once and sums to 1. Ranks that no
/// instance reaches are omitted.
pub fn feature_frequency_report(
    instances: &[InstanceRecommendations],
    max_rank: usize,
) -> Result<Vec<FrequencyColumn>> {
    if instances.iter().all(|i| i.transformations.is_empty()) {
        return Err(Error::EmptyInput);
    }
    let mut columns = Vec::new();
    for rank in 1..=max_rank {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut total = 0;
        for inst in instances {
            if let Some(t) = inst.transformations.iter().find(|t| t.rank == rank) {
                for r in &t.recommendations {
                    *counts.entry(r.feature_name.as_str()).or_default() += 1;
                    total += 1;
                }
            }
        }
        if total == 0 {
            continue;
        }
        let mut frequencies: Vec<(String, f64)> =
            counts.into_iter().map(|(f, c)| (f.to_string(), c as f64 / total as f64)).collect();
        frequencies.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        columns.push(FrequencyColumn { rank, occurrences: total, frequencies });
    }
    Ok(columns)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Helpful,
    NonHelpful,
    NonActionable,
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "helpful" => Ok(Verdict::Helpful),
            "non_helpful" | "nonhelpful" | "not_helpful" => Ok(Verdict::NonHelpful),
            "non_actionable" | "nonactionable" | "not_actionable" => Ok(Verdict::NonActionable),
            _ => Err(format!("unknown verdict `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub feature: String,
    pub verdict: Verdict,
}

/// Reads `feature_name,verdict` rows.
pub fn read_ratings(path: impl AsRef<Path>) -> Result<Vec<RatingRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    if header != ["feature_name", "verdict"] {
        return Err(Error::SchemaMismatch(format!("ratings header must be feature_name,verdict, got {header:?}")));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let verdict = record[1].parse().map_err(|message| Error::Parse { line, message })?;
        out.push(RatingRecord { feature: record[0].to_string(), verdict });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Helpfulness {
    pub feature: String,
    pub score: f64,
    pub helpful: usize,
    pub non_helpful: usize,
    pub non_actionable: usize,
}

/// `helpful / (helpful + non_helpful)` per feature; non-actionable ratings
/// are counted but not part of the ratio. Features with no helpful or
/// non-helpful rating are omitted. Sorted by decreasing score, ties by name.
pub fn helpfulness(ratings: &[RatingRecord]) -> Vec<Helpfulness> {
    let mut tally: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for r in ratings {
        let slot = match r.verdict {
            Verdict::Helpful => 0,
            Verdict::NonHelpful => 1,
            Verdict::NonActionable => 2,
        };
        tally.entry(&r.feature).or_default()[slot] += 1;
    }
    let mut out: Vec<Helpfulness> = tally
        .into_iter()
        .filter(|(_, [h, n, _])| h + n > 0)
        .map(|(f, [h, n, a])| Helpfulness {
            feature: f.to_string(),
            score: h as f64 / (h + n) as f64,
            helpful: h,
            non_helpful: n,
            non_actionable: a,
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.feature.cmp(&b.feature)));
    out
}

/// Pearson correlation of the rank vectors of two orderings of the same items.
pub fn rank_correlation<T: Eq + Hash + Clone>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() < 2 {
        return Err(Error::DegenerateRanking("need at least two items".into()));
    }
    let pos_b: HashMap<&T, usize> = b.iter().enumerate().map(|(i, t)| (t, i)).collect();
    if a.len() != b.len() || pos_b.len() != b.len() {
        return Err(Error::DegenerateRanking("rankings must cover the same distinct items".into()));
    }
    let mut ranks_b = Vec::with_capacity(a.len());
    for t in a {
        ranks_b.push(
            *pos_b.get(t).ok_or_else(|| Error::DegenerateRanking("rankings cover different items".into()))? as f64
        );
    }
    let ranks_a: Vec<f64> = (0..a.len()).map(|i| i as f64).collect();
    let n = a.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ranks_a.iter().zip(&ranks_b) {
        sab += (x - mean) * (y - mean);
        saa += (x - mean) * (x - mean);
        sbb += (y - mean) * (y - mean);
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Ordering of every feature in `universe` by decreasing frequency in `column`.
pub fn ranking_from_column(column: &FrequencyColumn, universe: &BTreeSet<String>) -> Vec<String> {
    let mut out: Vec<String> = universe.iter().cloned().collect();
    out.sort_by(|a, b| column.get(b).total_cmp(&column.get(a)).then_with(|| a.cmp(b)));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankCorrelation {
    pub rank_a: usize,
    pub rank_b: usize,
    pub rho: Option<f64>,
}

/// Output of the `report` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub frequencies: Vec<FrequencyColumn>,
    pub rank_correlations: Vec<RankCorrelation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub helpfulness: Option<Vec<Helpfulness>>,
}

/// Frequency tables for ranks 1..=3, pairwise rank correlations of the
/// resulting feature rankings, and helpfulness when ratings are supplied.
pub fn build_report(file: &RecommendationFile, ratings: Option<&[RatingRecord]>) -> Result<Report> {
    let frequencies = feature_frequency_report(&file.instances, 3)?;
    let universe: BTreeSet<String> =
        frequencies.iter().flat_map(|c| c.frequencies.iter().map(|(f, _)| f.clone())).collect();
    let mut rank_correlations = Vec::new();
    for i in 0..frequencies.len() {
        for j in i + 1..frequencies.len() {
            let a = ranking_from_column(&frequencies[i], &universe);
            let b = ranking_from_column(&frequencies[j], &universe);
            rank_correlations.push(RankCorrelation {
                rank_a: frequencies[i].rank,
                rank_b: frequencies[j].rank,
                rho: rank_correlation(&a, &b).ok(),
            });
        }
    }
    Ok(Report { frequencies, rank_correlations, helpfulness: ratings.map(helpfulness) })
}

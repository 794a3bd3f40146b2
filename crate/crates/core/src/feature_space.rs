//! Feature schema, CSV ingestion, one-hot encoding and z-score standardization.
//!
//! Everything downstream of this module works on standardized values
//! `z = (raw - mean) / std_dev`, so a tolerance of `epsilon` always means
//! "epsilon standard deviations" regardless of the feature's original units.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the optional trailing label column in CSV inputs.
pub const LABEL_COLUMN: &str = "label";

/// Binary class label, serialized as `-1` / `+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn value(self) -> i32 {
        match self {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

impl From<Label> for i8 {
    fn from(label: Label) -> i8 {
        label.value() as i8
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, Self::Error> {
        Label::try_from(v as i64)
    }
}

impl TryFrom<i64> for Label {
    type Error = String;

    fn try_from(v: i64) -> std::result::Result<Self, Self::Error> {
        match v {
            -1 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            other => Err(format!("label must be -1 or +1, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Negative => f.write_str("-1"),
            Label::Positive => f.write_str("+1"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    /// One indicator column of a one-hot encoded categorical variable.
    OneHotMember {
        group: String,
        category: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub kind: FeatureKind,
    pub adjustable: bool,
    /// Sample mean in original units.
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator) in original units.
    pub std_dev: f64,
}

impl FeatureMeta {
    pub fn continuous(name: impl Into<String>) -> Self {
        FeatureMeta { name: name.into(), kind: FeatureKind::Continuous, adjustable: true, mean: 0.0, std_dev: 1.0 }
    }

    pub fn one_hot(group: impl Into<String>, category: impl Into<String>) -> Self {
        let group = group.into();
        let category = category.into();
        FeatureMeta {
            name: format!("{group}={category}"),
            kind: FeatureKind::OneHotMember { group, category },
            adjustable: false,
            mean: 0.0,
            std_dev: 1.0,
        }
    }

    pub fn with_adjustable(mut self, adjustable: bool) -> Self {
        self.adjustable = adjustable;
        self
    }

    pub fn with_stats(mut self, mean: f64, std_dev: f64) -> Self {
        self.mean = mean;
        self.std_dev = std_dev;
        self
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, FeatureKind::Continuous)
    }
}

/// Ordered feature schema. Indices are stable across save/load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureSpaceRepr", into = "FeatureSpaceRepr")]
pub struct FeatureSpace {
    features: Vec<FeatureMeta>,
    one_hot_groups: BTreeMap<String, Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct FeatureSpaceRepr {
    features: Vec<FeatureMeta>,
    one_hot_groups: BTreeMap<String, Vec<usize>>,
}

impl TryFrom<FeatureSpaceRepr> for FeatureSpace {
    type Error = Error;

    fn try_from(repr: FeatureSpaceRepr) -> Result<Self> {
        let space = FeatureSpace::new(repr.features)?;
        if space.one_hot_groups != repr.one_hot_groups {
            return Err(Error::SchemaMismatch("one-hot groups disagree with feature kinds".into()));
        }
        Ok(space)
    }
}

impl From<FeatureSpace> for FeatureSpaceRepr {
    fn from(space: FeatureSpace) -> Self {
        FeatureSpaceRepr { features: space.features, one_hot_groups: space.one_hot_groups }
    }
}

impl FeatureSpace {
    /// Builds a schema, deriving one-hot groups from the member kinds.
    pub fn new(features: Vec<FeatureMeta>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, f) in features.iter().enumerate() {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::SchemaMismatch(format!("duplicate feature name `{}`", f.name)));
            }
            if !(f.mean.is_finite() && f.std_dev.is_finite() && f.std_dev > 0.0) {
                return Err(Error::SchemaMismatch(format!(
                    "feature `{}` has invalid statistics (mean {}, std {})",
                    f.name, f.mean, f.std_dev
                )));
            }
            if let FeatureKind::OneHotMember { group, .. } = &f.kind {
                groups.entry(group.clone()).or_default().push(i);
            }
        }
        Ok(FeatureSpace { features, one_hot_groups: groups })
    }

    /// `n` continuous, adjustable features named `x0..x{n-1}` with identity statistics.
    pub fn anonymous(n: usize) -> Self {
        FeatureSpace::new((0..n).map(|i| FeatureMeta::continuous(format!("x{i}"))).collect())
            .expect("generated names are unique")
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[FeatureMeta] {
        &self.features
    }

    pub fn feature(&self, index: usize) -> &FeatureMeta {
        &self.features[index]
    }

    pub fn one_hot_groups(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.one_hot_groups
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn is_adjustable(&self, index: usize) -> bool {
        self.features[index].adjustable
    }

    pub fn set_adjustable(&mut self, index: usize, adjustable: bool) {
        self.features[index].adjustable = adjustable;
    }

    /// Fills mean/std from the sample statistics of `table`.
    ///
    /// Continuous columns with zero sample variance are rejected. One-hot
    /// members that never vary keep `std_dev = 1` so their column stays finite.
    pub fn fit_standardizer(&self, table: &RawTable) -> Result<FeatureSpace> {
        if table.columns.len() != self.len() || table.columns.iter().zip(self.names()).any(|(a, b)| a != b) {
            return Err(Error::SchemaMismatch(format!(
                "table columns {:?} do not match schema {:?}",
                table.columns,
                self.names().collect::<Vec<_>>()
            )));
        }
        if table.rows.len() < 2 {
            return Err(Error::TooFewRows(table.rows.len()));
        }
        let mut features = self.features.clone();
        for (j, meta) in features.iter_mut().enumerate() {
            let (mean, std) = sample_mean_std(table.rows.iter().map(|r| r[j]));
            let std = if std > 0.0 {
                std
            } else if meta.is_continuous() {
                return Err(Error::ZeroVariance(meta.name.clone()));
            } else {
                1.0
            };
            meta.mean = mean;
            meta.std_dev = std;
        }
        FeatureSpace::new(features)
    }

    pub fn standardize(&self, raw: &[f64]) -> Result<Instance> {
        self.check_len(raw.len())?;
        let values = raw.iter().zip(&self.features).map(|(v, f)| (v - f.mean) / f.std_dev).collect();
        Ok(Instance::new(values))
    }

    pub fn destandardize(&self, inst: &Instance) -> Result<Vec<f64>> {
        self.check_len(inst.len())?;
        Ok(inst.values.iter().zip(&self.features).map(|(z, f)| f.mean + f.std_dev * z).collect())
    }

    /// Raw value of a single standardized component.
    pub fn destandardize_value(&self, index: usize, z: f64) -> f64 {
        let f = &self.features[index];
        f.mean + f.std_dev * z
    }

    pub(crate) fn check_len(&self, actual: usize) -> Result<()> {
        if actual != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), actual });
        }
        Ok(())
    }

    /// Recovers the raw CSV column layout this space was built from.
    pub fn raw_columns(&self) -> Vec<ColumnSpec> {
        let mut columns: Vec<ColumnSpec> = Vec::new();
        for f in &self.features {
            match &f.kind {
                FeatureKind::Continuous => columns.push(ColumnSpec {
                    name: f.name.clone(),
                    kind: ColumnKind::Continuous,
                    adjustable: f.adjustable,
                }),
                FeatureKind::OneHotMember { group, category } => {
                    if let Some(ColumnSpec { kind: ColumnKind::Categorical { categories }, .. }) =
                        columns.iter_mut().find(|c| &c.name == group)
                    {
                        categories.push(category.clone());
                    } else {
                        columns.push(ColumnSpec {
                            name: group.clone(),
                            kind: ColumnKind::Categorical { categories: vec![category.clone()] },
                            adjustable: f.adjustable,
                        });
                    }
                }
            }
        }
        columns
    }

    /// Reads a CSV with this space's raw columns and standardizes it with the
    /// already fitted statistics.
    pub fn read_instances(&self, path: impl AsRef<Path>) -> Result<Vec<Instance>> {
        let schema = TableSchema { columns: self.raw_columns() };
        let parsed = parse_csv(path.as_ref(), &schema)?;
        parsed.rows.iter().zip(parsed.labels).map(|(row, label)| Ok(self.standardize(row)?.with_label(label))).collect()
    }
}

/// Mean and unbiased sample standard deviation.
pub(crate) fn sample_mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// A feature vector in standardized space, optionally labeled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl Instance {
    pub fn new(values: Vec<f64>) -> Self {
        Instance { values, label: None }
    }

    pub fn labeled(values: Vec<f64>, label: Label) -> Self {
        Instance { values, label: Some(label) }
    }

    pub fn with_label(mut self, label: Option<Label>) -> Self {
        self.label = label;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl std::ops::Index<usize> for Instance {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Numeric table after categorical encoding, before standardization.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Indicator vector for `value`: exactly one component is 1.
pub fn one_hot_row(value: &str, categories: &[String]) -> Option<Vec<f64>> {
    let hit = categories.iter().position(|c| c == value)?;
    Some((0..categories.len()).map(|i| if i == hit { 1.0 } else { 0.0 }).collect())
}

/// Encodes a categorical column into `categories.len()` binary columns.
pub fn one_hot_encode<S: AsRef<str>>(column: &str, values: &[S], categories: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::with_capacity(values.len()); categories.len()];
    for v in values {
        let row = one_hot_row(v.as_ref(), categories)
            .ok_or_else(|| Error::UnknownCategory { column: column.to_string(), value: v.as_ref().to_string() })?;
        for (col, bit) in out.iter_mut().zip(row) {
            col.push(bit);
        }
    }
    Ok(out)
}

/// Inverse of [`one_hot_row`]: the category whose indicator is the largest.
pub fn one_hot_decode<'a>(row: &[f64], categories: &'a [String]) -> Option<&'a str> {
    row.iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| categories[i].as_str())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Continuous,
    Categorical { categories: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub adjustable: bool,
}

/// Raw CSV layout: feature columns in file order, label column excluded.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TableSchema {
    pub columns: Vec<ColumnSpec>,
}

impl TableSchema {
    /// Infers column kinds from the file: a column is continuous when every
    /// value parses as a number, otherwise categorical with its distinct
    /// values (sorted) as categories. Categorical columns start non-adjustable.
    pub fn infer(path: impl AsRef<Path>, fixed: &[String]) -> Result<TableSchema> {
        let path = path.as_ref();
        let mut reader = csv_reader(path)?;
        let header = read_header(&mut reader, path)?;
        let n_features = feature_column_count(&header);
        let mut numeric = vec![true; n_features];
        let mut distinct: Vec<BTreeSet<String>> = vec![BTreeSet::new(); n_features];
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(e, path))?;
            for (j, field) in record.iter().take(n_features).enumerate() {
                if field.parse::<f64>().is_err() {
                    numeric[j] = false;
                }
                distinct[j].insert(field.to_string());
            }
        }
        for name in fixed {
            if !header[..n_features].iter().any(|h| h == name) {
                return Err(Error::SchemaMismatch(format!("unknown column `{name}`")));
            }
        }
        let columns = header[..n_features]
            .iter()
            .zip(numeric)
            .zip(distinct)
            .map(|((name, is_num), values)| {
                let kind = if is_num {
                    ColumnKind::Continuous
                } else {
                    ColumnKind::Categorical { categories: values.into_iter().collect() }
                };
                let adjustable = is_num && !fixed.contains(name);
                ColumnSpec { name: name.clone(), kind, adjustable }
            })
            .collect();
        Ok(TableSchema { columns })
    }

    /// Unfitted feature space (identity statistics) with one-hot expansion.
    pub fn feature_space(&self) -> Result<FeatureSpace> {
        let mut features = Vec::new();
        for col in &self.columns {
            match &col.kind {
                ColumnKind::Continuous => {
                    features.push(FeatureMeta::continuous(&col.name).with_adjustable(col.adjustable))
                }
                ColumnKind::Categorical { categories } => {
                    for cat in categories {
                        features.push(FeatureMeta::one_hot(&col.name, cat).with_adjustable(col.adjustable));
                    }
                }
            }
        }
        FeatureSpace::new(features)
    }
}

struct ParsedCsv {
    rows: Vec<Vec<f64>>,
    labels: Vec<Option<Label>>,
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn csv_error(e: csv::Error, path: &Path) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse { line, message: format!("{other:?}") },
    }
}

fn read_header(reader: &mut csv::Reader<std::fs::File>, path: &Path) -> Result<Vec<String>> {
    let header = reader.headers().map_err(|e| csv_error(e, path))?;
    Ok(header.iter().map(str::to_string).collect())
}

fn feature_column_count(header: &[String]) -> usize {
    match header.last() {
        Some(last) if last == LABEL_COLUMN => header.len() - 1,
        _ => header.len(),
    }
}

fn parse_csv(path: &Path, schema: &TableSchema) -> Result<ParsedCsv> {
    let mut reader = csv_reader(path)?;
    let header = read_header(&mut reader, path)?;
    let n_features = feature_column_count(&header);
    let has_label = n_features < header.len();
    if n_features != schema.columns.len() || header.iter().zip(&schema.columns).any(|(h, c)| *h != c.name) {
        return Err(Error::SchemaMismatch(format!(
            "header {:?} does not match expected columns {:?}",
            header,
            schema.columns.iter().map(|c| &c.name).collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, path))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut row = Vec::new();
        for (col, field) in schema.columns.iter().zip(record.iter()) {
            match &col.kind {
                ColumnKind::Continuous => {
                    let v: f64 = field.parse().map_err(|_| Error::Parse {
                        line,
                        message: format!("column `{}`: `{field}` is not a number", col.name),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Parse { line, message: format!("column `{}`: non-finite value", col.name) });
                    }
                    row.push(v);
                }
                ColumnKind::Categorical { categories } => {
                    let bits = one_hot_row(field, categories)
                        .ok_or_else(|| Error::UnknownCategory { column: col.name.clone(), value: field.into() })?;
                    row.extend(bits);
                }
            }
        }
        let label = if has_label {
            let field = &record[n_features];
            let raw: i64 = field
                .trim_start_matches('+')
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("label `{field}` is not an integer") })?;
            Some(Label::try_from(raw).map_err(|message| Error::Parse { line, message })?)
        } else {
            None
        };
        rows.push(row);
        labels.push(label);
    }
    Ok(ParsedCsv { rows, labels })
}

/// Reads a CSV, one-hot encodes categorical columns, fits the standardizer on
/// the whole file, and returns the fitted space with standardized instances.
pub fn load_table(path: impl AsRef<Path>, schema: &TableSchema) -> Result<(FeatureSpace, Vec<Instance>)> {
    let parsed = parse_csv(path.as_ref(), schema)?;
    let unfitted = schema.feature_space()?;
    let table = RawTable { columns: unfitted.names().map(str::to_string).collect(), rows: parsed.rows };
    let space = unfitted.fit_standardizer(&table)?;
    let instances = table
        .rows
        .iter()
        .zip(parsed.labels)
        .map(|(row, label)| Ok(space.standardize(row)?.with_label(label)))
        .collect::<Result<Vec<_>>>()?;
    Ok((space, instances))
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use proptest::prelude::*;

    use super::*;

    fn write_csv(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn one_col(values: &[f64]) -> (FeatureSpace, RawTable) {
        let space = FeatureSpace::anonymous(1);
        let table = RawTable { columns: vec!["x0".into()], rows: values.iter().map(|v| vec![*v]).collect() };
        (space, table)
    }

    #[test]
    fn two_point_column_fits_sample_std() {
        let (space, table) = one_col(&[2.0, 4.0]);
        let fitted = space.fit_standardizer(&table).unwrap();
        assert_eq!(fitted.feature(0).mean, 3.0);
        assert!((fitted.feature(0).std_dev - 2f64.sqrt()).abs() < 1e-15);
        let lo = fitted.standardize(&[2.0]).unwrap();
        let hi = fitted.standardize(&[4.0]).unwrap();
        assert!((lo[0] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((hi[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_rejected() {
        let (space, table) = one_col(&[5.0, 5.0, 5.0]);
        assert!(matches!(space.fit_standardizer(&table), Err(Error::ZeroVariance(name)) if name == "x0"));
    }

    #[test]
    fn single_row_is_rejected() {
        let (space, table) = one_col(&[5.0]);
        assert!(matches!(space.fit_standardizer(&table), Err(Error::TooFewRows(1))));
    }

    #[test]
    fn mismatched_columns_are_rejected() {
        let space = FeatureSpace::anonymous(2);
        let table = RawTable { columns: vec!["x0".into(), "y".into()], rows: vec![vec![0.0, 1.0]; 3] };
        assert!(matches!(space.fit_standardizer(&table), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_std() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 10;
        let rows: Vec<Vec<f64>> = (0..500)
            .map(|_| (0..n).map(|j| rng.random_range(-5.0..5.0) * (j as f64 + 1.0) + j as f64).collect())
            .collect();
        let space = FeatureSpace::anonymous(n);
        let table = RawTable { columns: space.names().map(String::from).collect(), rows };
        let fitted = space.fit_standardizer(&table).unwrap();
        let z: Vec<Instance> = table.rows.iter().map(|r| fitted.standardize(r).unwrap()).collect();
        for j in 0..n {
            // recompute statistics independently on the transformed output
            let col: Vec<f64> = z.iter().map(|i| i[j]).collect();
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
            assert!(m.abs() < 1e-9, "mean {m}");
            assert!((var.sqrt() - 1.0).abs() < 1e-9, "std {}", var.sqrt());
        }
    }

    #[test]
    fn standardize_examples() {
        let space = FeatureSpace::new(vec![FeatureMeta::continuous("a").with_stats(10.0, 2.0)]).unwrap();
        assert_eq!(space.standardize(&[10.0]).unwrap().values, vec![0.0]);
        assert_eq!(space.standardize(&[14.0]).unwrap().values, vec![2.0]);
        assert!(matches!(space.standardize(&[1.0, 2.0]), Err(Error::LengthMismatch { expected: 1, actual: 2 })));
    }

    #[test]
    fn destandardize_examples() {
        let space = FeatureSpace::new(vec![
            FeatureMeta::continuous("a").with_stats(3.0, 2.0),
            FeatureMeta::continuous("b").with_stats(-7.5, 0.1),
        ])
        .unwrap();
        assert_eq!(space.destandardize(&Instance::new(vec![0.0, 0.0])).unwrap(), vec![3.0, -7.5]);
        assert_eq!(space.destandardize(&Instance::new(vec![1.0, 0.0])).unwrap()[0], 5.0);
        assert!(space.destandardize(&Instance::new(vec![1.0])).is_err());
    }

    #[test]
    fn tweaked_threshold_maps_to_raw_pivot() {
        // theta = (t - mu) / sigma; theta +- eps maps back to t +- eps * sigma
        let (mu, sigma, t, eps) = (12.0, 3.0, 18.0, 0.1);
        let space = FeatureSpace::new(vec![FeatureMeta::continuous("a").with_stats(mu, sigma)]).unwrap();
        let theta = space.standardize(&[t]).unwrap()[0];
        let up = space.destandardize_value(0, theta + eps);
        let down = space.destandardize_value(0, theta - eps);
        assert!((up - (t + eps * sigma)).abs() < 1e-12);
        assert!((down - (t - eps * sigma)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn standardize_round_trip(
            raw in prop::collection::vec(-1e4f64..1e4, 4),
            means in prop::collection::vec(-100f64..100.0, 4),
            stds in prop::collection::vec(0.01f64..50.0, 4),
        ) {
            let space = FeatureSpace::new(
                (0..4).map(|i| FeatureMeta::continuous(format!("f{i}")).with_stats(means[i], stds[i])).collect(),
            ).unwrap();
            let back = space.destandardize(&space.standardize(&raw).unwrap()).unwrap();
            for (a, b) in raw.iter().zip(&back) {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn one_hot_examples() {
        let cats: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(one_hot_row("b", &cats).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(one_hot_row("a", &cats).unwrap(), vec![1.0, 0.0, 0.0]);
        for c in &cats {
            assert_eq!(one_hot_decode(&one_hot_row(c, &cats).unwrap(), &cats), Some(c.as_str()));
        }
        let cols = one_hot_encode("col", &["c", "a"], &cats).unwrap();
        assert_eq!(cols, vec![vec![0.0, 1.0], vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert!(matches!(
            one_hot_encode("col", &["z"], &cats),
            Err(Error::UnknownCategory { value, .. }) if value == "z"
        ));
    }

    #[test]
    fn load_small_labeled_table() {
        let f = write_csv("a,b,label\n1,10,-1\n2,20,1\n3,10,1\n4,30,-1\n");
        let schema = TableSchema::infer(f.path(), &[]).unwrap();
        let (space, rows) = load_table(f.path(), &schema).unwrap();
        assert_eq!(space.len(), 2);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[1].label, Some(Label::Positive));
        assert_eq!(rows[3].label, Some(Label::Negative));
    }

    #[test]
    fn zero_label_is_a_parse_error() {
        let f = write_csv("a,label\n1,-1\n2,0\n");
        let schema = TableSchema::infer(f.path(), &[]).unwrap();
        assert!(matches!(load_table(f.path(), &schema), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn categorical_column_expands() {
        let f = write_csv("a,color,label\n1,red,1\n2,green,-1\n3,blue,1\n4,red,-1\n");
        let schema = TableSchema::infer(f.path(), &[]).unwrap();
        let (space, rows) = load_table(f.path(), &schema).unwrap();
        // 2 original columns, color becomes 3 indicators
        assert_eq!(space.len(), 2 + 3 - 1);
        assert_eq!(space.one_hot_groups()["color"], vec![1, 2, 3]);
        assert!(!space.is_adjustable(1));
        assert!(space.is_adjustable(0));
        // exactly one indicator per group before standardization
        for r in &rows {
            let raw = space.destandardize(r).unwrap();
            let ones: f64 = raw[1..].iter().sum();
            assert!((ones - 1.0).abs() < 1e-12);
        }
        assert_eq!(space.raw_columns(), schema.columns);
    }

    #[test]
    fn fixed_columns_are_not_adjustable() {
        let f = write_csv("a,b\n1,2\n2,3\n");
        let schema = TableSchema::infer(f.path(), &["b".to_string()]).unwrap();
        assert!(schema.columns[0].adjustable);
        assert!(!schema.columns[1].adjustable);
        assert!(TableSchema::infer(f.path(), &["zz".to_string()]).is_err());
    }

    #[test]
    fn header_mismatch_is_reported() {
        let f = write_csv("a,b\n1,2\n2,3\n");
        let g = write_csv("a,c\n1,2\n2,3\n");
        let schema = TableSchema::infer(f.path(), &[]).unwrap();
        assert!(matches!(load_table(g.path(), &schema), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn read_instances_uses_fitted_statistics() {
        let f = write_csv("a,color\n0,x\n2,y\n4,x\n");
        let schema = TableSchema::infer(f.path(), &[]).unwrap();
        let (space, _) = load_table(f.path(), &schema).unwrap();
        let g = write_csv("a,color,label\n2,y,-1\n");
        let got = space.read_instances(g.path()).unwrap();
        assert_eq!(got[0].values[0], 0.0);
        assert_eq!(got[0].label, Some(Label::Negative));
        let h = write_csv("a,color\n2,q\n");
        assert!(matches!(space.read_instances(h.path()), Err(Error::UnknownCategory { .. })));
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = TableSchema::infer("/nonexistent/data.csv", &[]).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/data.csv"));
    }

    #[test]
    fn space_serde_round_trip() {
        let f = write_csv("a,color\n0,x\n2,y\n4,x\n");
        let schema = TableSchema::infer(f.path(), &[]).unwrap();
        let (space, _) = load_table(f.path(), &schema).unwrap();
        let json = serde_json::to_string(&space).unwrap();
        let back: FeatureSpace = serde_json::from_str(&json).unwrap();
        assert_eq!(space, back);
    }
}

//! Seeded synthetic datasets for demos and end-to-end checks.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::feature_space::{Instance, Label, LABEL_COLUMN};

/// Two unit-variance Gaussian classes whose means differ by `separation` in
/// every coordinate (negatives at `-separation/2`, positives at `+separation/2`).
/// Labels alternate, starting with a positive row.
pub fn two_gaussians(rows: usize, n_features: usize, separation: f64, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
            let shift = label.value() as f64 * separation / 2.0;
            let values = (0..n_features)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z + shift
                })
                .collect();
            Instance::labeled(values, label)
        })
        .collect()
}

/// Writes instances as CSV with the given header names and a trailing label
/// column when every row is labeled.
pub fn write_csv(path: impl AsRef<Path>, names: &[String], rows: &[Instance]) -> Result<()> {
    let path = path.as_ref();
    let labeled = rows.iter().all(|r| r.label.is_some());
    let mut out = Vec::new();
    let mut header = names.join(",");
    if labeled {
        header.push(',');
        header.push_str(LABEL_COLUMN);
    }
    writeln!(out, "{header}").expect("write to Vec");
    for r in rows {
        let mut fields: Vec<String> = r.values.iter().map(|v| format!("{v}")).collect();
        if let (true, Some(l)) = (labeled, r.label) {
            fields.push(l.value().to_string());
        }
        writeln!(out, "{}", fields.join(",")).expect("write to Vec");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use treetweak::feature_space::{load_table, TableSchema};
use treetweak::parallel::Workers;
use treetweak::recommend::{
    build_report, read_ratings, InstanceRecommendations, RecommendationFile, Report, RECOMMENDATIONS_VERSION,
};
use treetweak::synthetic::{two_gaussians, write_csv};
use treetweak::trainer::{evaluate_classifier, stratified_split, train_forest, TrainConfig};
use treetweak::{Instance, Label, TreeEnsemble, TweakOptions, Tweaker};

use crate::{GenerateArgs, ReportArgs, SearchArgs, SweepArgs, TrainArgs, TweakArgs};

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

pub fn train(a: &TrainArgs) -> Result<()> {
    ensure!(a.test_fraction > 0.0 && a.test_fraction < 1.0, "--test-fraction must lie strictly between 0 and 1");
    let schema = TableSchema::infer(&a.data, &a.fixed)?;
    let (space, rows) = load_table(&a.data, &schema)?;
    if let Some(i) = rows.iter().position(|r| r.label.is_none()) {
        bail!("{}: row {} has no label; training data needs a `label` column", a.data.display(), i + 1);
    }
    let (train, test) = stratified_split(&rows, a.test_fraction, a.seed);
    let num_trees = a.trees as usize;
    let cfg = TrainConfig {
        criterion: a.criterion,
        max_depth: a.max_depth,
        num_trees,
        features_per_split: a.features_per_split,
        bootstrap: Some(num_trees > 1),
        seed: a.seed,
        workers: a.workers,
        ..Default::default()
    };
    let ens = train_forest(&space, &train, &cfg)?;
    ens.save(&a.model)?;
    println!(
        "trained {} tree(s) on {} rows, {} features; model written to {}",
        ens.len(),
        train.len(),
        space.len(),
        a.model.display()
    );
    match evaluate_classifier(&ens, &test) {
        Ok(m) => println!(
            "holdout ({} rows): accuracy {:.4}  f1 {:.4}  mcc {:.4}  roc_auc {:.4}",
            test.len(),
            m.accuracy,
            m.f1,
            m.mcc,
            m.roc_auc
        ),
        Err(e) => log::warn!("holdout metrics unavailable: {e}"),
    }
    Ok(())
}

fn load_inputs(s: &SearchArgs) -> Result<(TreeEnsemble, Vec<Instance>)> {
    let ens = TreeEnsemble::load(&s.model)?;
    let rows = ens.feature_space().read_instances(&s.data)?;
    Ok((ens, rows))
}

pub fn tweak(a: &TweakArgs) -> Result<()> {
    ensure!(a.top_k >= 1, "--top-k must be at least 1");
    let (ens, rows) = load_inputs(&a.search)?;
    let mut opts = TweakOptions::new(a.epsilon, a.delta)?;
    opts.skip_satisfied = a.search.allow_satisfied_skip;
    opts.budget = a.search.budget;
    let tweaker = Tweaker::with_workers(&ens, Workers::new(a.search.workers));
    let mut instances = Vec::with_capacity(rows.len());
    let (mut eligible, mut covered) = (0, 0);
    for (i, x) in rows.iter().enumerate() {
        if ens.predict(&x.values) == Label::Positive {
            instances.push(InstanceRecommendations::skipped(i, x.label));
            continue;
        }
        eligible += 1;
        let outcome = tweaker.tweak(x, &opts)?;
        if outcome.is_found() {
            covered += 1;
        }
        instances.push(InstanceRecommendations::from_outcome(i, x, &outcome, a.top_k, &ens));
    }
    let file = RecommendationFile {
        version: RECOMMENDATIONS_VERSION,
        epsilon: a.epsilon,
        cost_function: a.delta,
        top_k: a.top_k,
        eligible,
        covered,
        instances,
    };
    write(&a.out, &file.to_json())?;
    println!("{}", coverage_line(covered, eligible, rows.len() - eligible));
    Ok(())
}

fn coverage_line(covered: usize, eligible: usize, skipped: usize) -> String {
    if eligible == 0 {
        return format!("coverage: 0 eligible ({skipped} skipped as already positive)");
    }
    format!(
        "coverage: {covered}/{eligible} eligible = {:.4} ({skipped} skipped as already positive)",
        covered as f64 / eligible as f64
    )
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    ensure!(!a.epsilon_grid.is_empty(), "--epsilon-grid is empty");
    ensure!(!a.delta.is_empty(), "--delta is empty");
    let (ens, rows) = load_inputs(&a.search)?;
    let tweaker = Tweaker::with_workers(&ens, Workers::new(a.search.workers));
    let report = tweaker.sweep(&rows, &a.epsilon_grid, &a.delta, a.search.allow_satisfied_skip, a.search.budget)?;
    write(&a.out, &report.to_csv())?;
    if let Some(path) = &a.outcomes {
        write(path, &report.outcomes_csv())?;
    }
    let eligible = rows.len() - report.skipped_positive;
    println!(
        "{} rows written to {}; {eligible} eligible, {} skipped as already positive",
        report.rows.len(),
        a.out.display(),
        report.skipped_positive
    );
    Ok(())
}

pub fn report(a: &ReportArgs) -> Result<()> {
    let file = RecommendationFile::load(&a.recommendations)?;
    let ratings = a.ratings.as_ref().map(read_ratings).transpose()?;
    let report = build_report(&file, ratings.as_deref())?;
    let is_json = a.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let text = if is_json {
        let mut s = serde_json::to_string_pretty(&report)?;
        s.push('\n');
        s
    } else {
        report_csv(&report)
    };
    write(&a.out, &text)?;
    println!("report written to {}", a.out.display());
    Ok(())
}

/// Long format: `table,key,feature,value`.
fn report_csv(r: &Report) -> String {
    let mut out = String::from("table,key,feature,value\n");
    for col in &r.frequencies {
        for (f, v) in &col.frequencies {
            writeln!(out, "frequency,top{},{},{:.6}", col.rank, f, v).unwrap();
        }
    }
    for c in &r.rank_correlations {
        let v = c.rho.map(|v| format!("{v:.6}")).unwrap_or_default();
        writeln!(out, "rank_correlation,top{}~top{},,{v}", c.rank_a, c.rank_b).unwrap();
    }
    for h in r.helpfulness.iter().flatten() {
        writeln!(out, "helpfulness,{}/{}/{},{},{:.6}", h.helpful, h.non_helpful, h.non_actionable, h.feature, h.score)
            .unwrap();
    }
    out
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    ensure!(a.rows >= 2 && a.features >= 1, "need at least 2 rows and 1 feature");
    let rows = two_gaussians(a.rows, a.features, a.separation, a.seed);
    let names: Vec<String> = (0..a.features).map(|i| format!("x{i}")).collect();
    write_csv(&a.out, &names, &rows)?;
    println!("{} rows written to {}", rows.len(), a.out.display());
    Ok(())
}

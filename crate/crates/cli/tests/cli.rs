use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use treetweak::recommend::{rank_correlation, ranking_from_column, RecommendationFile, Report};
use treetweak::{DecisionTree, FeatureSpace, Label, Node, TreeEnsemble};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_treetweak"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, contents).unwrap();
        p
    }

    /// Generated data plus a trained model.
    fn trained(&self) -> (PathBuf, PathBuf) {
        let data = self.path("data.csv");
        let model = self.path("model.json");
        ok(&["generate", "--rows", "300", "--features", "4", "--seed", "5", "--out", s(&data)]);
        ok(&["train", "--data", s(&data), "--model", s(&model), "--trees", "15", "--seed", "2"]);
        (data, model)
    }

    /// x0 <= 0 -> -1, x0 > 0 -> +1 over one identity-scaled feature.
    fn stump(&self) -> PathBuf {
        let tree = DecisionTree::new(Node::split(0, 0.0, Node::leaf(Label::Negative), Node::leaf(Label::Positive)));
        let ens = TreeEnsemble::new(vec![tree], FeatureSpace::anonymous(1)).unwrap();
        let p = self.path("stump.json");
        ens.save(&p).unwrap();
        p
    }
}

#[test]
fn train_writes_model_and_prints_metrics() {
    let f = Fixture::new();
    let data = f.path("d.csv");
    ok(&["generate", "--rows", "400", "--features", "5", "--seed", "1", "--out", s(&data)]);
    let a = f.path("a.json");
    let b = f.path("b.json");
    let stdout = ok(&["train", "--data", s(&data), "--model", s(&a), "--trees", "20", "--seed", "9"]);
    assert!(stdout.contains("roc_auc"), "{stdout}");
    assert!(stdout.contains("f1") && stdout.contains("mcc"));
    ok(&["train", "--data", s(&data), "--model", s(&b), "--trees", "20", "--seed", "9", "--workers", "3"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let ens = TreeEnsemble::load(&a).unwrap();
    assert_eq!(ens.len(), 20);
}

#[test]
fn missing_file_exits_2_and_names_path() {
    let out = run(&["train", "--data", "/definitely/missing.csv", "--model", "/tmp/unused.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/definitely/missing.csv"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn malformed_model_fails() {
    let f = Fixture::new();
    let model = f.file("m.json", "{\"version\": 1, \"trees\": [");
    let data = f.file("d.csv", "x0\n1\n");
    let out = run(&["tweak", "--model", s(&model), "--data", s(&data), "--out", s(&f.path("o.json"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn all_positive_instances_are_skipped() {
    let f = Fixture::new();
    let model = f.stump();
    let data = f.file("pos.csv", "x0\n0.5\n2\n");
    let out = f.path("rec.json");
    let stdout = ok(&["tweak", "--model", s(&model), "--data", s(&data), "--out", s(&out)]);
    assert!(stdout.contains("0 eligible"), "{stdout}");
    let file = RecommendationFile::load(&out).unwrap();
    assert_eq!(file.eligible, 0);
    assert!(file.instances.iter().all(|i| i.transformations.is_empty()));
}

#[test]
fn stump_fixture_yields_known_candidate() {
    let f = Fixture::new();
    let model = f.stump();
    let data = f.file("neg.csv", "x0,label\n-1,-1\n");
    let out = f.path("rec.json");
    ok(&["tweak", "--model", s(&model), "--data", s(&data), "--epsilon", "0.1", "--out", s(&out)]);
    let file = RecommendationFile::load(&out).unwrap();
    let t = &file.instances[0].transformations[0];
    assert_eq!(t.candidate, vec![0.1]);
    assert!((t.cost.unwrap() - 1.1).abs() < 1e-12);
    assert_eq!(t.recommendations[0].feature_name, "x0");
}

#[test]
fn emitted_candidates_revalidate_under_loaded_model() {
    let f = Fixture::new();
    let (data, model) = f.trained();
    let out = f.path("rec.json");
    for delta in ["cosine", "jaccard"] {
        ok(&["tweak", "--model", s(&model), "--data", s(&data), "--delta", delta, "--top-k", "3", "--out", s(&out)]);
        let ens = TreeEnsemble::load(&model).unwrap();
        let file = RecommendationFile::load(&out).unwrap();
        assert!(file.covered > 0);
        let mut checked = 0;
        for inst in &file.instances {
            assert!(inst.transformations.len() <= 3);
            for t in &inst.transformations {
                assert_eq!(ens.predict(&t.candidate), Label::Positive);
                assert_eq!(ens.route(t.source_tree, &t.candidate).path_index, t.source_path);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }
}

fn parse_csv(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn sweep_emits_25_rows_matching_outcome_log() {
    let f = Fixture::new();
    let (data, model) = f.trained();
    let out = f.path("sweep.csv");
    let log = f.path("outcomes.csv");
    ok(&["sweep", "--model", s(&model), "--data", s(&data), "--out", s(&out), "--outcomes", s(&log)]);
    let rows = parse_csv(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 25);
    let outcomes = parse_csv(&std::fs::read_to_string(&log).unwrap());
    for r in &rows {
        let cell: Vec<&Vec<String>> = outcomes.iter().filter(|o| o[0] == r[0] && o[1] == r[1]).collect();
        let covered = cell.iter().filter(|o| o[3] != "0").count();
        assert_eq!(r[2].parse::<usize>().unwrap(), cell.len());
        assert_eq!(r[3].parse::<usize>().unwrap(), covered);
        assert_eq!(r[4], format!("{:.6}", covered as f64 / cell.len() as f64));
    }
}

#[test]
fn sweep_with_no_eligible_rows() {
    let f = Fixture::new();
    let model = f.stump();
    let data = f.file("pos.csv", "x0\n1\n3\n");
    let out = f.path("sweep.csv");
    ok(&["sweep", "--model", s(&model), "--data", s(&data), "--out", s(&out)]);
    let rows = parse_csv(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 25);
    for r in rows {
        assert_eq!(r[4], "0.000000");
        assert!(r[5..].iter().all(|v| v.is_empty()), "{r:?}");
    }
}

#[test]
fn sweep_accepts_custom_grid() {
    let f = Fixture::new();
    let (data, model) = f.trained();
    let out = f.path("sweep.csv");
    ok(&[
        "sweep",
        "--model",
        s(&model),
        "--data",
        s(&data),
        "--epsilon-grid",
        "0.2,0.4",
        "--delta",
        "euclidean",
        "--out",
        s(&out),
    ]);
    assert_eq!(parse_csv(&std::fs::read_to_string(&out).unwrap()).len(), 2);
    let bad = run(&["sweep", "--model", s(&model), "--data", s(&data), "--delta", "manhattan", "--out", s(&out)]);
    assert_eq!(bad.status.code(), Some(2));
    let neg = run(&["sweep", "--model", s(&model), "--data", s(&data), "--epsilon-grid", "-1", "--out", s(&out)]);
    assert_eq!(neg.status.code(), Some(2));
}

#[test]
fn report_tables_and_helpfulness() {
    let f = Fixture::new();
    let (data, model) = f.trained();
    let rec = f.path("rec.json");
    ok(&["tweak", "--model", s(&model), "--data", s(&data), "--top-k", "3", "--out", s(&rec)]);
    let ratings = f.file(
        "ratings.csv",
        "feature_name,verdict\nx0,helpful\nx0,helpful\nx0,helpful\nx0,non_helpful\nx1,non_actionable\nx1,helpful\n",
    );
    let out = f.path("report.json");
    ok(&["report", "--recommendations", s(&rec), "--ratings", s(&ratings), "--out", s(&out)]);
    let report: Report = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.frequencies.len(), 3);
    for col in &report.frequencies {
        let sum: f64 = col.frequencies.iter().map(|p| p.1).sum();
        assert!((sum - 1.0).abs() <= 1e-9);
    }
    let help = report.helpfulness.as_ref().unwrap();
    assert_eq!(help.iter().find(|h| h.feature == "x0").unwrap().score, 0.75);
    assert_eq!(help.iter().find(|h| h.feature == "x1").unwrap().score, 1.0);

    // offline recomputation of the top-1 vs top-2 correlation
    let universe = report.frequencies.iter().flat_map(|c| c.frequencies.iter().map(|p| p.0.clone())).collect();
    let a = ranking_from_column(&report.frequencies[0], &universe);
    let b = ranking_from_column(&report.frequencies[1], &universe);
    let rho = report.rank_correlations.iter().find(|c| c.rank_a == 1 && c.rank_b == 2).unwrap().rho;
    assert_eq!(rho, rank_correlation(&a, &b).ok());

    let csv = f.path("report.csv");
    ok(&["report", "--recommendations", s(&rec), "--ratings", s(&ratings), "--out", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("table,key,feature,value\n"));
    assert!(text.contains("helpfulness,3/1/0,x0,0.750000"));
}

#[test]
fn fixed_columns_never_change() {
    let f = Fixture::new();
    let data = f.path("d.csv");
    let model = f.path("m.json");
    ok(&["generate", "--rows", "300", "--features", "4", "--seed", "8", "--out", s(&data)]);
    ok(&["train", "--data", s(&data), "--model", s(&model), "--trees", "10", "--fixed", "x1,x2"]);
    let rec = f.path("rec.json");
    ok(&["tweak", "--model", s(&model), "--data", s(&data), "--out", s(&rec)]);
    let file = RecommendationFile::load(&rec).unwrap();
    for t in file.instances.iter().flat_map(|i| &i.transformations) {
        assert!(t.recommendations.iter().all(|r| r.feature_name != "x1" && r.feature_name != "x2"));
    }
}

#[test]
fn categorical_columns_round_trip_through_the_pipeline() {
    let f = Fixture::new();
    let mut csv = String::from("size,color,label\n");
    for i in 0..120 {
        let size = (i % 10) as f64 / 2.0;
        let color = ["red", "green", "blue"][i % 3];
        let label = if size > 2.0 { 1 } else { -1 };
        csv.push_str(&format!("{size},{color},{label}\n"));
    }
    let data = f.file("cat.csv", &csv);
    let model = f.path("m.json");
    ok(&["train", "--data", s(&data), "--model", s(&model), "--trees", "5", "--seed", "1"]);
    let ens = TreeEnsemble::load(&model).unwrap();
    assert_eq!(ens.num_features(), 4);
    assert!(!ens.feature_space().is_adjustable(1));
    let rec = f.path("rec.json");
    ok(&["tweak", "--model", s(&model), "--data", s(&data), "--out", s(&rec)]);
    let file = RecommendationFile::load(&rec).unwrap();
    assert!(file.covered > 0);
    let unknown = f.file("unknown.csv", "size,color\n1,purple\n");
    let out = run(&["tweak", "--model", s(&model), "--data", s(&unknown), "--out", s(&rec)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("purple"));
}

mod common;

use common::{leaf_of, negatives, random_forest, random_instance, rng};
use proptest::prelude::*;
use rand::Rng;
use treetweak::feature_space::{one_hot_encode, RawTable};
use treetweak::forest::Polarity;
use treetweak::parallel::Workers;
use treetweak::synthetic::two_gaussians;
use treetweak::trainer::{impurity, train_tree, tree_rng, TrainConfig};
use treetweak::tweaker::{brute_force_tweak, OracleScope};
use treetweak::{
    CostFunction, Criterion, FeatureMeta, FeatureSpace, Instance, Label, Node, TreeEnsemble, TweakOptions, Tweaker,
};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn fitted_columns_are_standard(seed in any::<u64>(), rows in 2usize..40, cols in 1usize..5) {
        let mut r = rng(seed);
        let data: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| r.random_range(-50.0..50.0)).collect())
            .collect();
        let space = FeatureSpace::anonymous(cols);
        let table = RawTable { columns: space.names().map(String::from).collect(), rows: data.clone() };
        let fitted = space.fit_standardizer(&table).unwrap();
        let z: Vec<Instance> = data.iter().map(|row| fitted.standardize(row).unwrap()).collect();
        for j in 0..cols {
            let n = rows as f64;
            let mean = z.iter().map(|x| x[j]).sum::<f64>() / n;
            let sd = (z.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((sd - 1.0).abs() < 1e-9);
        }
        for (row, x) in data.iter().zip(&z) {
            let back = fitted.destandardize(x).unwrap();
            for (a, b) in row.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn one_hot_rows_have_exactly_one_bit(values in prop::collection::vec(0usize..4, 1..30)) {
        let cats: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let strs: Vec<&str> = values.iter().map(|&i| cats[i].as_str()).collect();
        let cols = one_hot_encode("g", &strs, &cats).unwrap();
        for i in 0..values.len() {
            let ones = cols.iter().filter(|c| c[i] == 1.0).count();
            let zeros = cols.iter().filter(|c| c[i] == 0.0).count();
            prop_assert_eq!((ones, zeros), (1, cats.len() - 1));
        }
    }

    #[test]
    fn routes_replay_and_votes_follow_sign_rule(seed in any::<u64>(), k in 1usize..7, depth in 0usize..6) {
        let mut r = rng(seed);
        let ens = random_forest(&mut r, k, 4, depth);
        let mut total_paths = 0;
        for (i, t) in ens.trees().iter().enumerate() {
            let all = t.paths(i, Polarity::All);
            prop_assert_eq!(all.len(), t.leaf_count());
            total_paths += all.len();
        }
        prop_assert!(total_paths <= k << depth);
        for _ in 0..20 {
            let x = random_instance(&mut r, 4);
            for (i, t) in ens.trees().iter().enumerate() {
                let p = t.route(i, &x.values);
                prop_assert!(p.is_satisfied_by(&x.values));
                prop_assert_eq!(p.leaf_label, leaf_of(t.root(), &x.values));
                prop_assert_eq!(t.predict(&x.values), p.leaf_label);
            }
            let sum: i32 = ens.trees().iter().map(|t| leaf_of(t.root(), &x.values).value()).sum();
            prop_assert_eq!(ens.predict(&x.values), if sum <= 0 { Label::Negative } else { Label::Positive });
        }
    }

    #[test]
    fn serialization_preserves_predictions(seed in any::<u64>(), k in 1usize..6) {
        let mut r = rng(seed);
        let ens = random_forest(&mut r, k, 3, 5);
        let json = ens.to_json();
        let back = TreeEnsemble::from_json(&json).unwrap();
        prop_assert_eq!(back.to_json(), json);
        for _ in 0..50 {
            let x = random_instance(&mut r, 3);
            prop_assert_eq!(back.vote_sum(&x.values), ens.vote_sum(&x.values));
        }
    }

    #[test]
    fn costs_are_reflexive_and_symmetric(
        pairs in prop::collection::vec((-5f64..5.0, prop::option::of(-5f64..5.0)), 2..10),
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1.unwrap_or(p.0)).collect();
        for c in CostFunction::ALL {
            if let Ok(v) = c.cost(&x, &x) {
                prop_assert_eq!(v, 0.0);
            }
            match (c.cost(&x, &y), c.cost(&y, &x)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-12),
                (Err(a), Err(b)) => prop_assert_eq!(a, b),
                _ => prop_assert!(false, "{} errors on one side only", c),
            }
        }
    }
}

/// Rows reaching each node, checked against the tree structure.
fn check_tree(node: &Node, rows: &[&Instance], depth_left: usize, criterion: Criterion) -> Result<(), TestCaseError> {
    let pos = rows.iter().filter(|r| r.label == Some(Label::Positive)).count();
    let neg = rows.len() - pos;
    match node {
        Node::Leaf { label } => {
            let majority = if pos > neg { Label::Positive } else { Label::Negative };
            prop_assert_eq!(*label, majority);
        }
        Node::Internal { feature, threshold, left, right } => {
            prop_assert!(depth_left > 0, "tree deeper than max_depth");
            let (l, r): (Vec<&Instance>, Vec<&Instance>) = rows.iter().partition(|x| x[*feature] <= *threshold);
            prop_assert!(!l.is_empty() && !r.is_empty());
            let imp = |rs: &[&Instance]| {
                let p = rs.iter().filter(|x| x.label == Some(Label::Positive)).count();
                impurity(rs.len() - p, p, criterion).unwrap() * rs.len() as f64
            };
            prop_assert!(imp(&l) + imp(&r) < imp(rows));
            check_tree(left, &l, depth_left - 1, criterion)?;
            check_tree(right, &r, depth_left - 1, criterion)?;
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn trained_trees_obey_depth_majority_and_gain(
        seed in any::<u64>(),
        max_depth in 1usize..6,
        entropy in any::<bool>(),
    ) {
        let data = two_gaussians(80, 3, 1.0, seed);
        let criterion = if entropy { Criterion::Entropy } else { Criterion::Gini };
        let cfg = TrainConfig {
            criterion,
            max_depth: Some(max_depth),
            features_per_split: Some(3),
            seed,
            ..TrainConfig::single_tree()
        };
        let tree = train_tree(&data, &cfg, &mut tree_rng(seed, 0)).unwrap();
        let rows: Vec<&Instance> = data.iter().collect();
        check_tree(tree.root(), &rows, max_depth, criterion)?;
        let again = train_tree(&data, &cfg, &mut tree_rng(seed, 0)).unwrap();
        prop_assert_eq!(again, tree);
    }

    #[test]
    fn tweak_is_valid_optimal_and_worker_independent(
        seed in any::<u64>(),
        k in prop::sample::select(vec![1usize, 2, 3, 5]),
        eps in prop::sample::select(vec![0.01, 0.1, 0.5, 1.0]),
        fixed in prop::option::of(0usize..4),
    ) {
        let mut r = rng(seed);
        let mut ens = random_forest(&mut r, k, 4, 4);
        if let Some(f) = fixed {
            ens.feature_space_mut().set_adjustable(f, false);
        }
        let xs = negatives(&mut r, &ens, 5, 300);
        let seq = Tweaker::with_workers(&ens, Workers::sequential());
        let par = Tweaker::with_workers(&ens, Workers::new(3));
        for x in &xs {
            for cost in CostFunction::ALL {
                let opts = TweakOptions::new(eps, cost).unwrap();
                let got = seq.tweak(x, &opts).unwrap();
                prop_assert_eq!(&par.tweak(x, &opts).unwrap(), &got);
                for t in got.candidates() {
                    prop_assert_eq!(ens.predict(&t.candidate.values), Label::Positive);
                    let route = ens.route(t.source_tree, &t.candidate.values);
                    prop_assert_eq!(route.path_index, t.source_path);
                    if let Some(f) = fixed {
                        prop_assert_eq!(t.candidate.values[f], x.values[f]);
                    }
                }
                let want = brute_force_tweak(&ens, x, &opts, OracleScope::NegativeVoting).unwrap();
                match (got.best().and_then(|t| t.cost), want.best().and_then(|t| t.cost)) {
                    (Some(a), Some(b)) if matches!(cost, CostFunction::TweakedFeatureRate | CostFunction::Jaccard) => {
                        prop_assert_eq!(a, b)
                    }
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9),
                    (a, b) => prop_assert_eq!(a, b),
                }
            }
        }
    }
}

#[test]
fn one_hot_members_share_a_group() {
    let space = FeatureSpace::new(vec![
        FeatureMeta::continuous("a"),
        FeatureMeta::one_hot("c", "x"),
        FeatureMeta::one_hot("c", "y"),
    ])
    .unwrap();
    assert_eq!(space.one_hot_groups()["c"], vec![1, 2]);
}

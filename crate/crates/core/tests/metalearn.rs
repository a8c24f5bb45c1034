use std::collections::BTreeMap;

use proptest::prelude::*;
use qubo_meta::features::FeatureVector;
use qubo_meta::metalearn::*;
use qubo_meta::seed;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn dataset(x: Vec<Vec<f64>>, y: Vec<bool>, classes: usize) -> MetaDataset {
    let d = x[0].len();
    let n = x.len();
    MetaDataset::new(
        (0..d).map(|j| format!("f{j}")).collect(),
        (0..n).map(|i| format!("r{i}")).collect(),
        (0..n).map(|i| format!("c{}", i % classes)).collect(),
        x,
        y,
        "t",
        "v",
    )
    .unwrap()
}

fn gaussian_rows(n: usize, d: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| StandardNormal.sample(rng)).collect()).collect()
}

/// Label = sign of a planted linear score on the first two columns, with a
/// margin of 0.1 enforced by dropping rows near the boundary.
fn planted_separable(n: usize, d: usize, seed_: u64) -> MetaDataset {
    let mut rng = seed::rng(seed_);
    let mut x = Vec::new();
    let mut y = Vec::new();
    while x.len() < n {
        let r: Vec<f64> = gaussian_rows(1, d, &mut rng).remove(0);
        let score = r[0] - 0.5 * r[1];
        if score.abs() < 0.1 {
            continue;
        }
        y.push(score > 0.0);
        x.push(r);
    }
    dataset(x, y, 4)
}

fn random_labels(n: usize, d: usize, seed_: u64) -> MetaDataset {
    let mut rng = seed::rng(seed_);
    let x = gaussian_rows(n, d, &mut rng);
    let y = (0..n).map(|_| rng.random_bool(0.5)).collect();
    dataset(x, y, 4)
}

#[test]
fn balanced_accuracy_examples() {
    assert_eq!(balanced_accuracy(10, 90, 10, 90).unwrap(), 1.0);
    assert_eq!(balanced_accuracy(10, 0, 10, 90).unwrap(), 0.5);
    assert!((balanced_accuracy(8, 45, 10, 90).unwrap() - 0.65).abs() < 1e-15);
    assert!(balanced_accuracy(1, 1, 0, 5).is_err());
    assert!(balanced_accuracy(6, 1, 5, 5).is_err());
    assert_eq!(balanced_accuracy_of(&[true, true, false], &[true, false, false]), 0.75);
}

#[test]
fn logistic_separable_and_constant_feature() {
    let ds = planted_separable(200, 2, 1);
    let m = train(&ds, &Hyper::Logistic(LogisticHyper { l2_strength: 1e-3, max_iterations: 100 }), 0).unwrap();
    assert!(m.score(&ds) >= 0.99, "training BA {}", m.score(&ds));

    let mut x = ds.x.clone();
    for r in &mut x {
        r.push(3.5);
    }
    let with_const = dataset(x, ds.y.clone(), 4);
    for l2 in [1e-4, 0.1, 10.0] {
        let m = train_logistic(&with_const, &LogisticHyper { l2_strength: l2, max_iterations: 100 }).unwrap();
        assert!(m.weights[2].abs() < 1e-6);
    }
}

#[test]
fn logistic_label_flip_complements() {
    let ds = random_labels(120, 4, 3);
    let flipped = ds.with_labels(ds.y.iter().map(|b| !b).collect());
    let h = LogisticHyper { l2_strength: 0.05, max_iterations: 100 };
    let a = train_logistic(&ds, &h).unwrap();
    let b = train_logistic(&flipped, &h).unwrap();
    for r in &ds.x {
        assert!((a.predict_proba(r) + b.predict_proba(r) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn logistic_imputes_training_medians() {
    let mut ds = planted_separable(60, 3, 5);
    ds.x[0][2] = f64::NAN;
    let m = train_logistic(&ds, &LogisticHyper::default()).unwrap();
    let mut col: Vec<f64> = ds.x.iter().map(|r| r[2]).filter(|v| !v.is_nan()).collect();
    col.sort_by(|a, b| a.total_cmp(b));
    // 59 observed values: the median is the 30th
    assert_eq!(col.len(), 59);
    assert_eq!(m.medians[2], col[29]);
    assert!(m.predict_proba(&[0.0, 0.0, f64::NAN]).is_finite());
}

#[test]
fn forest_learns_xor() {
    let mut rng = seed::rng(9);
    let x: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            let a = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let b = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            vec![a + rng.random_range(-0.3..0.3), b + rng.random_range(-0.3..0.3)]
        })
        .collect();
    let y: Vec<bool> = x.iter().map(|r| (r[0] > 0.0) ^ (r[1] > 0.0)).collect();
    let ds = dataset(x, y, 2);
    for depth in [2, 4] {
        let h = ForestHyper { trees: 25, max_depth: depth, min_leaf: 1, feature_subsample: 1.0 };
        let m = train(&ds, &Hyper::Forest(h), 4).unwrap();
        assert!(m.score(&ds) >= 0.95, "depth {depth}: {}", m.score(&ds));
    }
}

/// Five noise columns and a binary column at `signal` equal to the label
/// except for 10% flips.
fn planted_binary(n: usize, signal: usize, seed_: u64) -> MetaDataset {
    let mut rng = seed::rng(seed_);
    let mut x = gaussian_rows(n, 6, &mut rng);
    let mut y = Vec::new();
    for r in &mut x {
        let label = rng.random_bool(0.5);
        let flip = rng.random_bool(0.1);
        r[signal] = (label ^ flip) as u8 as f64;
        y.push(label);
    }
    dataset(x, y, 3)
}

#[test]
fn depth_one_tree_splits_on_planted_feature() {
    for s in 0..5 {
        let ds = planted_binary(200, 3, s);
        let h = ForestHyper { trees: 1, max_depth: 1, min_leaf: 1, feature_subsample: 1.0 };
        let Model::Forest(f) = train(&ds, &Hyper::Forest(h), s).unwrap() else { panic!() };
        assert_eq!(f.trees[0].root_feature(), Some(3));
        assert_eq!(f.trees[0].depth(), 1);
    }
}

#[test]
fn duplicated_rows_give_identical_trees() {
    let ds = planted_separable(80, 4, 2);
    let n = ds.len();
    let mut rng = seed::rng(5);
    let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    // same multiset, some indices pointing at the second copy
    let moved: Vec<usize> = rows.iter().enumerate().map(|(i, &r)| if i % 2 == 0 { r + n } else { r }).collect();
    let mut x2 = ds.x.clone();
    x2.extend(ds.x.iter().cloned());
    let mut y2 = ds.y.clone();
    y2.extend(ds.y.iter().copied());
    let h = ForestHyper { trees: 1, max_depth: 6, min_leaf: 2, feature_subsample: 0.5 };
    let a = Tree::fit(&ds.x, &ds.y, &rows, &h, &mut seed::rng(11));
    let b = Tree::fit(&x2, &y2, &moved, &h, &mut seed::rng(11));
    assert_eq!(a, b);
    let probe = gaussian_rows(50, 4, &mut rng);
    for r in &probe {
        assert_eq!(a.predict_proba(r), b.predict_proba(r));
    }
}

#[test]
fn missing_values_follow_the_larger_branch() {
    // feature 0 separates 6 negatives (≤ 0) from 3 positives; two rows are missing
    let mut x: Vec<Vec<f64>> = (0..6).map(|i| vec![-1.0 - i as f64]).chain((0..3).map(|i| vec![1.0 + i as f64])).collect();
    let mut y: Vec<bool> = (0..9).map(|i| i >= 6).collect();
    x.push(vec![f64::NAN]);
    y.push(false);
    x.push(vec![f64::NAN]);
    y.push(true);
    let rows: Vec<usize> = (0..11).collect();
    let h = ForestHyper { trees: 1, max_depth: 1, min_leaf: 1, feature_subsample: 1.0 };
    let t = Tree::fit(&x, &y, &rows, &h, &mut seed::rng(0));
    match &t.nodes[0] {
        Node::Split { feature, threshold, missing_left, .. } => {
            assert_eq!((*feature, *threshold, *missing_left), (0, 0.0, true));
        }
        other => panic!("expected a split, got {other:?}"),
    }
    // left leaf: 6 negatives + the two missing rows (one positive)
    assert_eq!(t.predict_proba(&[f64::NAN]), 1.0 / 8.0);
    assert_eq!(t.predict_proba(&[5.0]), 1.0);
}

#[test]
fn single_class_training_gives_constant_model() {
    let ds = planted_separable(30, 2, 4);
    let ones = ds.with_labels(vec![true; 30]);
    assert_eq!(train(&ones, &Hyper::Forest(ForestHyper::default()), 0).unwrap(), Model::Constant { p: 1.0 });
    assert_eq!(train(&ones.with_labels(vec![false; 30]), &Hyper::Logistic(LogisticHyper::default()), 0).unwrap(), Model::Constant { p: 0.0 });
}

fn check_plan(plan: &CvPlan, classes: &[String]) {
    let n = classes.len();
    let mut seen = vec![0; n];
    for f in &plan.outer {
        for &r in f {
            seen[r] += 1;
        }
    }
    assert!(seen.iter().all(|&c| c == 1), "outer folds partition the rows");
    let mut global: BTreeMap<&str, usize> = BTreeMap::new();
    for c in classes {
        *global.entry(c).or_default() += 1;
    }
    for f in &plan.outer {
        for (c, &total) in &global {
            let here = f.iter().filter(|&&r| classes[r] == *c).count() as f64;
            let expect = total as f64 * f.len() as f64 / n as f64;
            assert!((here - expect).abs() <= 1.0 + 1e-9, "class {c}: {here} vs {expect}");
        }
    }
    for (o, inner) in plan.inner.iter().enumerate() {
        let mut rows: Vec<usize> = inner.iter().flatten().copied().collect();
        rows.sort_unstable();
        assert_eq!(rows, plan.outer_train(o));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plan_folds_are_stratified_partitions(n in 25usize..300, k in 1usize..7, s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let classes: Vec<String> = (0..n).map(|_| format!("c{}", rng.random_range(0..k))).collect();
        let plan = CvPlan::new(&classes, 5, 5, s).unwrap();
        check_plan(&plan, &classes);
    }

    #[test]
    fn majority_constant_scores_one_half(n in 2usize..200, s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let mut y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        y[0] = true;
        y[1] = false;
        let pos = y.iter().filter(|&&b| b).count();
        let m = Model::Constant { p: if 2 * pos >= n { 1.0 } else { 0.0 } };
        let pred = m.predict_all(&vec![vec![0.0]; n]);
        prop_assert_eq!(balanced_accuracy_of(&y, &pred), 0.5);
    }
}

#[test]
fn plan_rejects_too_few_rows() {
    let classes: Vec<String> = (0..4).map(|i| i.to_string()).collect();
    assert!(CvPlan::new(&classes, 5, 5, 0).is_err());
}

#[test]
fn nested_cv_planted_data() {
    let ds = planted_separable(200, 5, 7);
    let plan = CvPlan::for_dataset(&ds, 1).unwrap();
    for family in [ModelFamily::Logistic, ModelFamily::Forest] {
        let out = nested_cv(&ds, &SearchSpace::new(family), &plan, DEFAULT_BUDGET, 3).unwrap();
        assert!(out.report.outer_ba_mean >= 0.95, "{family}: {:?}", out.report);
        assert_eq!(out.report.per_fold.len(), 5);
        assert_eq!(out.report.chosen_hypers.len(), 5);
        // each outer fold is a test fold exactly once
        let mut tests: Vec<usize> = out.folds.iter().flat_map(|f| f.test.clone()).collect();
        tests.sort_unstable();
        assert_eq!(tests, (0..ds.len()).collect::<Vec<_>>());
    }
}

#[test]
fn nested_cv_random_labels_near_chance() {
    let mut inside = 0;
    let seeds = 20;
    for s in 0..seeds {
        let ds = random_labels(200, 5, 100 + s);
        let plan = CvPlan::for_dataset(&ds, s).unwrap();
        let out = nested_cv(&ds, &SearchSpace::new(ModelFamily::Logistic), &plan, DEFAULT_BUDGET, s).unwrap();
        if (0.4..=0.6).contains(&out.report.outer_ba_mean) {
            inside += 1;
        }
    }
    assert!(inside as f64 >= 0.95 * seeds as f64, "{inside}/{seeds} within [0.4, 0.6]");
}

#[test]
fn test_fold_labels_do_not_leak() {
    let ds = planted_separable(150, 4, 8);
    let plan = CvPlan::for_dataset(&ds, 2).unwrap();
    let mut y = ds.y.clone();
    let mut test_labels: Vec<bool> = plan.outer[0].iter().map(|&r| y[r]).collect();
    test_labels.shuffle(&mut seed::rng(3));
    test_labels.iter_mut().for_each(|b| *b = !*b);
    for (&r, &b) in plan.outer[0].iter().zip(&test_labels) {
        y[r] = b;
    }
    let shuffled = ds.with_labels(y);
    for family in [ModelFamily::Logistic, ModelFamily::Forest] {
        let a = nested_cv(&ds, &SearchSpace::new(family), &plan, 8, 5).unwrap();
        let b = nested_cv(&shuffled, &SearchSpace::new(family), &plan, 8, 5).unwrap();
        assert_eq!(a.folds[0].model.fingerprint(), b.folds[0].model.fingerprint());
        assert_eq!(a.folds[0].hyper, b.folds[0].hyper);
    }
}

#[test]
fn nested_cv_is_deterministic() {
    let ds = random_labels(100, 6, 9);
    let plan = CvPlan::for_dataset(&ds, 4).unwrap();
    let a = nested_cv(&ds, &SearchSpace::new(ModelFamily::Forest), &plan, 10, 6).unwrap();
    let b = nested_cv(&ds, &SearchSpace::new(ModelFamily::Forest), &CvPlan::for_dataset(&ds, 4).unwrap(), 10, 6).unwrap();
    assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
    let fa: Vec<String> = a.folds.iter().map(|f| f.model.fingerprint()).collect();
    let fb: Vec<String> = b.folds.iter().map(|f| f.model.fingerprint()).collect();
    assert_eq!(fa, fb);
    let pa = cv_importance(&a.folds, &ds, 5, 1).unwrap();
    let pb = cv_importance(&b.folds, &ds, 5, 1).unwrap();
    assert_eq!(pa, pb);
}

#[test]
fn pfi_examples() {
    let ds = planted_binary(300, 2, 12);
    let h = ForestHyper { trees: 1, max_depth: 1, min_leaf: 1, feature_subsample: 1.0 };
    let stump = train(&ds, &Hyper::Forest(h), 0).unwrap();
    let report = permutation_importance(&stump, &ds, 10, 4).unwrap();
    assert_eq!(report.features[0].feature, "f2");
    for f in &report.features[1..] {
        assert_eq!((f.mean_drop, f.std), (0.0, 0.0), "{} is unused by the stump", f.feature);
    }
    let identity: Vec<usize> = (0..ds.len()).collect();
    for j in 0..6 {
        assert_eq!(permutation_drop(&stump, &ds, j, &identity), 0.0);
    }
    assert!(permutation_importance(&stump, &ds, 4, 0).is_err());

    let train_ds = planted_binary(300, 4, 13);
    let test_ds = planted_binary(150, 4, 14);
    let forest = train(&train_ds, &Hyper::Forest(ForestHyper::default()), 1).unwrap();
    let report = permutation_importance(&forest, &test_ds, 10, 2).unwrap();
    assert_eq!(report.features[0].feature, "f4");
    let planted = report.get("f4").unwrap().mean_drop;
    let noise_max = report.features[1..].iter().map(|f| f.mean_drop).fold(f64::MIN, f64::max);
    assert!(planted > noise_max);
    assert_eq!(report.top(5).len(), 5);
    assert_eq!(report.features.iter().map(|f| f.rank).collect::<Vec<_>>(), (1..=6).collect::<Vec<_>>());
}

#[test]
fn cv_pfi_ranks_planted_feature_first() {
    let ds = planted_separable(200, 6, 21);
    let plan = CvPlan::for_dataset(&ds, 3).unwrap();
    let out = nested_cv(&ds, &SearchSpace::new(ModelFamily::Forest), &plan, 10, 2).unwrap();
    let report = cv_importance(&out.folds, &ds, 10, 5).unwrap();
    assert_eq!(report.features[0].feature, "f0");
    assert_eq!(report.repeats, 10);
}

/// 1 − 6Σd²/(n(n² − 1)), valid without ties.
fn spearman_no_ties(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = pos as f64 + 1.0;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    1.0 - 6.0 * rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (n * (n * n - 1.0))
}

#[test]
fn spearman_examples() {
    let x: Vec<f64> = (0..20).map(|i| (i as f64).powi(3)).collect();
    let y: Vec<f64> = (0..20).map(|i| i as f64 * 0.5 - 3.0).collect();
    assert_eq!(spearman(&x, &y).unwrap(), Spearman { rho: 1.0, defined: true });
    let c = spearman(&[2.0; 10], &y[..10]).unwrap();
    assert_eq!(c, Spearman { rho: 0.0, defined: false });
    assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    // NaN pairs are skipped
    let with_gap = spearman(&[1.0, f64::NAN, 3.0, 4.0], &[1.0, 9.0, 2.0, 5.0]).unwrap();
    assert_eq!(with_gap.rho, 1.0);

    let mut rng = seed::rng(8);
    for _ in 0..10 {
        let a: Vec<f64> = (0..50).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..50).map(|_| rng.random()).collect();
        assert!((spearman(&a, &b).unwrap().rho - spearman_no_ties(&a, &b)).abs() < 1e-12);
    }
}

#[test]
fn spearman_null_is_small() {
    // |ρ| < 0.1 is a 3.16σ event under the null for n = 1000
    for s in 0..20 {
        let mut rng = seed::rng(500 + s);
        let x: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..1000).map(|_| rng.random_bool(0.5) as u8 as f64).collect();
        assert!(spearman(&x, &y).unwrap().rho.abs() < 0.1, "seed {s}");
    }
}

#[test]
fn dataset_from_tables() {
    let names = qubo_meta::features::view_names("Bias").unwrap();
    let fv = |id: &str, v: Option<f64>| FeatureVector {
        instance_id: id.into(),
        values: names.iter().map(|n| (n.clone(), v)).collect(),
    };
    let features = vec![fv("a", Some(1.0)), fv("b", None), fv("c", Some(2.0)), fv("d", Some(3.0))];
    let row = |id: &str, label: Option<bool>| LabelRow { instance_id: id.into(), problem_class: "mc".into(), label };
    let labels = vec![row("a", Some(true)), row("b", Some(false)), row("c", None), row("d", Some(false))];
    let ds = MetaDataset::from_tables(&features, &labels, "Bias", "over_all").unwrap();
    assert_eq!(ds.ids, vec!["a", "d"]);
    assert_eq!(ds.n_features(), names.len());
    assert_eq!(ds.y, vec![true, false]);
    assert!(MetaDataset::from_tables(&features, &[row("zz", Some(true))], "Bias", "t").is_err());
}

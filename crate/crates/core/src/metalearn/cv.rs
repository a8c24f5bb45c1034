//! Stratified fold plans and nested cross-validation with random search.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_std, train, ForestHyper, Hyper, LogisticHyper, MetaDataset, Model, ModelFamily};
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_BUDGET: usize = 50;

/// Splits `rows` into `k` folds so that every stratum is spread as evenly as
/// possible. Each fold is sorted.
pub fn stratified_folds(rows: &[usize], strata: &[String], k: usize, rng: &mut impl Rng) -> Result<Vec<Vec<usize>>> {
    if k < 2 || rows.len() < k {
        return Err(Error::Validation(format!("{} rows cannot form {k} folds", rows.len())));
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &r in rows {
        groups.entry(strata[r].as_str()).or_default().push(r);
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for group in groups.values_mut() {
        group.shuffle(rng);
        for &r in group.iter() {
            folds[next % k].push(r);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Outer test folds and, per outer fold, inner validation folds over its
/// training rows. All indices refer to dataset rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPlan {
    pub outer: Vec<Vec<usize>>,
    pub inner: Vec<Vec<Vec<usize>>>,
    pub seed: u64,
}

impl CvPlan {
    pub fn new(strata: &[String], outer_k: usize, inner_k: usize, seed: u64) -> Result<Self> {
        let all: Vec<usize> = (0..strata.len()).collect();
        let outer = stratified_folds(&all, strata, outer_k, &mut seed::rng(seed::derive_str(seed, "outer")))?;
        let mut inner = Vec::with_capacity(outer_k);
        for f in 0..outer_k {
            let train = complement(&all, &outer[f]);
            let mut rng = seed::rng(seed::derive(seed::derive_str(seed, "inner"), f as u64));
            inner.push(stratified_folds(&train, strata, inner_k, &mut rng)?);
        }
        Ok(CvPlan { outer, inner, seed })
    }

    /// The default 5×5 plan stratified by problem class.
    pub fn for_dataset(ds: &MetaDataset, seed: u64) -> Result<Self> {
        Self::new(&ds.classes, 5, 5, seed)
    }

    pub fn outer_train(&self, fold: usize) -> Vec<usize> {
        let n: usize = self.outer.iter().map(Vec::len).sum();
        complement(&(0..n).collect::<Vec<_>>(), &self.outer[fold])
    }

    pub fn inner_train(&self, outer: usize, inner: usize) -> Vec<usize> {
        let folds = &self.inner[outer];
        let mut rows: Vec<usize> = folds.iter().enumerate().filter(|(i, _)| *i != inner).flat_map(|(_, f)| f.iter().copied()).collect();
        rows.sort_unstable();
        rows
    }
}

fn complement(all: &[usize], remove: &[usize]) -> Vec<usize> {
    let drop: std::collections::BTreeSet<usize> = remove.iter().copied().collect();
    all.iter().copied().filter(|r| !drop.contains(r)).collect()
}

/// Random-search distributions per model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub family: ModelFamily,
}

impl SearchSpace {
    pub fn new(family: ModelFamily) -> Self {
        SearchSpace { family }
    }

    /// Logistic: l2 log-uniform in [1e-4, 10], iterations in {25, 50, 100}.
    /// Forest: 10..=50 trees, depth 2..=10, min leaf 1..=8, subsample in [0.05, 0.5].
    pub fn sample(&self, rng: &mut impl Rng) -> Hyper {
        match self.family {
            ModelFamily::Logistic => Hyper::Logistic(LogisticHyper {
                l2_strength: 10f64.powf(rng.random_range(-4.0..=1.0)),
                max_iterations: [25, 50, 100][rng.random_range(0..3)],
            }),
            ModelFamily::Forest => Hyper::Forest(ForestHyper {
                trees: rng.random_range(10..=50),
                max_depth: rng.random_range(2..=10),
                min_leaf: rng.random_range(1..=8),
                feature_subsample: rng.random_range(0.05..=0.5),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub view: String,
    pub target: String,
    pub model: ModelFamily,
    pub outer_ba_mean: f64,
    pub outer_ba_std: f64,
    pub per_fold: Vec<f64>,
    pub chosen_hypers: Vec<Hyper>,
}

/// A model fitted on one outer training split, with its untouched test rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldModel {
    pub test: Vec<usize>,
    pub hyper: Hyper,
    pub model: Model,
    pub ba: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub report: CvReport,
    pub folds: Vec<FoldModel>,
}

fn score_config(ds: &MetaDataset, plan: &CvPlan, outer: usize, hyper: &Hyper, seed: u64) -> Result<f64> {
    let k = plan.inner[outer].len();
    let mut scores = Vec::with_capacity(k);
    for inner in 0..k {
        let train_rows = plan.inner_train(outer, inner);
        let model = train(&ds.subset(&train_rows), hyper, seed::derive(seed, inner as u64))?;
        scores.push(model.score(&ds.subset(&plan.inner[outer][inner])));
    }
    Ok(mean_std(&scores).0)
}

/// Nested cross-validation: for each outer fold, `budget` random
/// configurations are scored by mean inner balanced accuracy, the best is
/// refitted on the outer training rows and scored on the outer test fold.
pub fn nested_cv(ds: &MetaDataset, space: &SearchSpace, plan: &CvPlan, budget: usize, seed: u64) -> Result<CvOutcome> {
    if budget == 0 {
        return Err(Error::Validation("search budget must be positive".into()));
    }
    let outer_k = plan.outer.len();
    let configs: Vec<Vec<Hyper>> = (0..outer_k)
        .map(|f| {
            let mut rng = seed::rng(seed::derive(seed::derive_str(seed, "search"), f as u64));
            (0..budget).map(|_| space.sample(&mut rng)).collect()
        })
        .collect();
    let tasks: Vec<(usize, usize)> = (0..outer_k).flat_map(|f| (0..budget).map(move |c| (f, c))).collect();
    let scores: Vec<f64> = tasks
        .par_iter()
        .map(|&(f, c)| score_config(ds, plan, f, &configs[f][c], seed::derive(seed::derive_str(seed, "inner-fit"), f as u64)))
        .collect::<Result<_>>()?;
    let folds: Vec<FoldModel> = (0..outer_k)
        .into_par_iter()
        .map(|f| {
            let fold_scores = &scores[f * budget..(f + 1) * budget];
            let mut best = 0;
            for (c, s) in fold_scores.iter().enumerate() {
                if *s > fold_scores[best] {
                    best = c;
                }
            }
            let hyper = configs[f][best].clone();
            let train_rows = plan.outer_train(f);
            let model = train(&ds.subset(&train_rows), &hyper, seed::derive(seed::derive_str(seed, "outer-fit"), f as u64))?;
            let ba = model.score(&ds.subset(&plan.outer[f]));
            Ok(FoldModel { test: plan.outer[f].clone(), hyper, model, ba })
        })
        .collect::<Result<_>>()?;
    let per_fold: Vec<f64> = folds.iter().map(|f| f.ba).collect();
    let (mean, std) = mean_std(&per_fold);
    Ok(CvOutcome {
        report: CvReport {
            view: ds.view.clone(),
            target: ds.target_name.clone(),
            model: space.family,
            outer_ba_mean: mean,
            outer_ba_std: std,
            per_fold,
            chosen_hypers: folds.iter().map(|f| f.hyper.clone()).collect(),
        },
        folds,
    })
}

//! Permutation feature importance: the drop in balanced accuracy when one
//! feature column is shuffled.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{balanced_accuracy_of, mean_std, FoldModel, MetaDataset, Model};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean_drop: f64,
    pub std: f64,
    /// 1 = most important.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfiReport {
    pub repeats: usize,
    /// Sorted by rank.
    pub features: Vec<FeatureImportance>,
}

impl PfiReport {
    fn from_drops(names: &[String], drops: Vec<Vec<f64>>, repeats: usize) -> Self {
        let mut features: Vec<FeatureImportance> = names
            .iter()
            .zip(drops)
            .map(|(name, d)| {
                let (mean_drop, std) = mean_std(&d);
                FeatureImportance { feature: name.clone(), mean_drop, std, rank: 0 }
            })
            .collect();
        features.sort_by(|a, b| b.mean_drop.total_cmp(&a.mean_drop).then_with(|| a.feature.cmp(&b.feature)));
        for (i, f) in features.iter_mut().enumerate() {
            f.rank = i + 1;
        }
        PfiReport { repeats, features }
    }

    pub fn top(&self, k: usize) -> &[FeatureImportance] {
        &self.features[..k.min(self.features.len())]
    }

    pub fn get(&self, feature: &str) -> Option<&FeatureImportance> {
        self.features.iter().find(|f| f.feature == feature)
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["feature", "mean_drop", "std", "rank"])?;
        for f in &self.features {
            w.write_record([f.feature.clone(), f.mean_drop.to_string(), f.std.to_string(), f.rank.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Balanced-accuracy drop when column `feature` is reordered by `perm`
/// (row i takes the value of row perm[i]).
pub fn permutation_drop(model: &Model, ds: &MetaDataset, feature: usize, perm: &[usize]) -> f64 {
    let base = model.score(ds);
    let mut row = Vec::new();
    let pred: Vec<bool> = (0..ds.len())
        .map(|i| {
            row.clone_from(&ds.x[i]);
            row[feature] = ds.x[perm[i]][feature];
            model.predict(&row)
        })
        .collect();
    base - balanced_accuracy_of(&ds.y, &pred)
}

fn drops_for(model: &Model, ds: &MetaDataset, feature: usize, repeats: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed::derive(seed, feature as u64));
    let mut perm: Vec<usize> = (0..ds.len()).collect();
    (0..repeats)
        .map(|_| {
            perm.shuffle(&mut rng);
            permutation_drop(model, ds, feature, &perm)
        })
        .collect()
}

/// Mean and spread of the drop over `repeats` seeded shuffles per feature.
pub fn permutation_importance(model: &Model, ds: &MetaDataset, repeats: usize, seed: u64) -> Result<PfiReport> {
    if repeats < 5 {
        return Err(Error::Validation(format!("permutation importance needs at least 5 repeats, got {repeats}")));
    }
    if ds.is_empty() {
        return Err(Error::Validation("permutation importance needs test rows".into()));
    }
    let drops: Vec<Vec<f64>> = (0..ds.n_features()).into_par_iter().map(|j| drops_for(model, ds, j, repeats, seed)).collect();
    Ok(PfiReport::from_drops(&ds.feature_names, drops, repeats))
}

/// Importance pooled over cross-validation folds: each fold model is scored on
/// its own test rows, and the drops of all folds and repeats are averaged.
pub fn cv_importance(folds: &[FoldModel], ds: &MetaDataset, repeats: usize, seed: u64) -> Result<PfiReport> {
    if repeats < 5 {
        return Err(Error::Validation(format!("permutation importance needs at least 5 repeats, got {repeats}")));
    }
    let tests: Vec<MetaDataset> = folds.iter().map(|f| ds.subset(&f.test)).collect();
    let drops: Vec<Vec<f64>> = (0..ds.n_features())
        .into_par_iter()
        .map(|j| {
            folds
                .iter()
                .zip(&tests)
                .enumerate()
                .flat_map(|(k, (f, t))| drops_for(&f.model, t, j, repeats, seed::derive(seed, k as u64)))
                .collect()
        })
        .collect();
    Ok(PfiReport::from_drops(&ds.feature_names, drops, repeats))
}

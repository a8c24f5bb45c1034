//! Meta-learning: datasets built from feature and label tables, two native
//! classifier families, stratified nested cross-validation with random
//! hyperparameter search, permutation feature importance and Spearman
//! correlation.
//!
//! Feature matrices use `NaN` for missing values.

mod cv;
mod forest;
mod importance;
mod logistic;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{view_names, FeatureVector};

pub use cv::{nested_cv, stratified_folds, CvOutcome, CvPlan, CvReport, FoldModel, SearchSpace, DEFAULT_BUDGET};
pub use forest::{train_forest, ForestHyper, ForestModel, Node, Tree};
pub use importance::{cv_importance, permutation_drop, permutation_importance, FeatureImportance, PfiReport};
pub use logistic::{train_logistic, LogisticHyper, LogisticModel};

/// Rows of (features, binary label) for one view and one target.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaDataset {
    pub feature_names: Vec<String>,
    pub ids: Vec<String>,
    /// Stratification key (problem class) per row.
    pub classes: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<bool>,
    pub target_name: String,
    pub view: String,
}

/// One labelled instance: id, problem class and the target value (if defined).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow {
    pub instance_id: String,
    pub problem_class: String,
    pub label: Option<bool>,
}

impl MetaDataset {
    pub fn new(
        feature_names: Vec<String>,
        ids: Vec<String>,
        classes: Vec<String>,
        x: Vec<Vec<f64>>,
        y: Vec<bool>,
        target_name: &str,
        view: &str,
    ) -> Result<Self> {
        let n = ids.len();
        if classes.len() != n || x.len() != n || y.len() != n {
            return Err(Error::Structural("meta dataset columns differ in length".into()));
        }
        if let Some(i) = x.iter().position(|r| r.len() != feature_names.len()) {
            return Err(Error::Structural(format!("row {} has {} features, expected {}", ids[i], x[i].len(), feature_names.len())));
        }
        if let Some(i) = x.iter().position(|r| r.iter().all(|v| v.is_nan())) {
            return Err(Error::Validation(format!("row {} has no feature values", ids[i])));
        }
        Ok(MetaDataset { feature_names, ids, classes, x, y, target_name: target_name.into(), view: view.into() })
    }

    /// Joins feature vectors with labels on instance id and projects onto a
    /// view. Unlabelled rows and rows with no value in the view are dropped.
    pub fn from_tables(features: &[FeatureVector], labels: &[LabelRow], view: &str, target: &str) -> Result<Self> {
        let names = view_names(view)?;
        let by_id: BTreeMap<&str, &FeatureVector> = features.iter().map(|f| (f.instance_id.as_str(), f)).collect();
        let (mut ids, mut classes, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut dropped = 0;
        for l in labels {
            let Some(label) = l.label else { continue };
            let fv = by_id
                .get(l.instance_id.as_str())
                .ok_or_else(|| Error::Validation(format!("no features for labelled instance {}", l.instance_id)))?;
            let row: Vec<f64> = fv.project(&names).into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
            if row.iter().all(|v| v.is_nan()) {
                dropped += 1;
                continue;
            }
            ids.push(l.instance_id.clone());
            classes.push(l.problem_class.clone());
            x.push(row);
            y.push(label);
        }
        if dropped > 0 {
            log::warn!("view {view}: dropped {dropped} rows with no feature values");
        }
        Self::new(names, ids, classes, x, y, target, view)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn subset(&self, rows: &[usize]) -> MetaDataset {
        MetaDataset {
            feature_names: self.feature_names.clone(),
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            classes: rows.iter().map(|&i| self.classes[i].clone()).collect(),
            x: rows.iter().map(|&i| self.x[i].clone()).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            target_name: self.target_name.clone(),
            view: self.view.clone(),
        }
    }

    pub fn with_labels(&self, y: Vec<bool>) -> MetaDataset {
        assert_eq!(y.len(), self.len());
        MetaDataset { y, ..self.clone() }
    }

    /// Positive fraction of the labels.
    pub fn positive_rate(&self) -> f64 {
        self.y.iter().filter(|&&b| b).count() as f64 / self.len().max(1) as f64
    }
}

/// ½(TP/P + TN/N).
pub fn balanced_accuracy(tp: usize, tn: usize, p: usize, n: usize) -> Result<f64> {
    if p == 0 || n == 0 || tp > p || tn > n {
        return Err(Error::Validation(format!("balanced accuracy needs 0 ≤ tp ≤ p, 0 ≤ tn ≤ n, p, n > 0 (got {tp}/{p}, {tn}/{n})")));
    }
    Ok(0.5 * (tp as f64 / p as f64 + tn as f64 / n as f64))
}

/// Balanced accuracy of predictions. When one class is absent the recall of
/// the present class is returned.
pub fn balanced_accuracy_of(truth: &[bool], pred: &[bool]) -> f64 {
    let (mut tp, mut tn, mut p, mut n) = (0, 0, 0, 0);
    for (&t, &q) in truth.iter().zip(pred) {
        if t {
            p += 1;
            tp += (q as usize) & 1;
        } else {
            n += 1;
            tn += (!q) as usize;
        }
    }
    match (p, n) {
        (0, 0) => f64::NAN,
        (0, _) => tn as f64 / n as f64,
        (_, 0) => tp as f64 / p as f64,
        _ => 0.5 * (tp as f64 / p as f64 + tn as f64 / n as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Logistic,
    Forest,
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Logistic => "logistic",
            ModelFamily::Forest => "forest",
        }
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(ModelFamily::Logistic),
            "forest" => Ok(ModelFamily::Forest),
            _ => Err(Error::Validation(format!("unknown model family `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Hyper {
    Logistic(LogisticHyper),
    Forest(ForestHyper),
}

impl Hyper {
    pub fn family(&self) -> ModelFamily {
        match self {
            Hyper::Logistic(_) => ModelFamily::Logistic,
            Hyper::Forest(_) => ModelFamily::Forest,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    /// Fallback for single-class training data.
    Constant { p: f64 },
    Logistic(LogisticModel),
    Forest(ForestModel),
}

impl Model {
    /// Probability of the positive class.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        match self {
            Model::Constant { p } => *p,
            Model::Logistic(m) => m.predict_proba(row),
            Model::Forest(m) => m.predict_proba(row),
        }
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.predict_proba(row) >= 0.5
    }

    pub fn predict_all(&self, x: &[Vec<f64>]) -> Vec<bool> {
        x.iter().map(|r| self.predict(r)).collect()
    }

    /// Balanced accuracy on a dataset.
    pub fn score(&self, ds: &MetaDataset) -> f64 {
        balanced_accuracy_of(&ds.y, &self.predict_all(&ds.x))
    }

    /// SHA-256 of the serialized parameters.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("models serialize");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Fits one model. Single-class data gives a constant model.
pub fn train(ds: &MetaDataset, hyper: &Hyper, seed: u64) -> Result<Model> {
    if ds.is_empty() {
        return Err(Error::Validation("cannot train on an empty dataset".into()));
    }
    let pos = ds.y.iter().filter(|&&b| b).count();
    if pos == 0 || pos == ds.len() {
        log::debug!("{} / {}: single-class training data, using a constant model", ds.view, ds.target_name);
        return Ok(Model::Constant { p: if pos == 0 { 0.0 } else { 1.0 } });
    }
    Ok(match hyper {
        Hyper::Logistic(h) => Model::Logistic(train_logistic(ds, h)?),
        Hyper::Forest(h) => Model::Forest(train_forest(ds, h, seed)?),
    })
}

/// Spearman rank correlation. `defined` is false when either side has zero
/// rank variance or fewer than two complete pairs; `rho` is then 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spearman {
    pub rho: f64,
    pub defined: bool,
}

/// 1-based ranks with ties given their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Rank correlation over the pairs where both values are present (not NaN).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Spearman> {
    if x.len() != y.len() {
        return Err(Error::Structural("spearman: columns differ in length".into()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = x.iter().zip(y).filter(|(a, b)| !a.is_nan() && !b.is_nan()).map(|(a, b)| (*a, *b)).unzip();
    let undefined = Spearman { rho: 0.0, defined: false };
    if xs.len() < 2 {
        return Ok(undefined);
    }
    let (rx, ry) = (average_ranks(&xs), average_ranks(&ys));
    let m = (xs.len() as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - m) * (b - m);
        sxx += (a - m) * (a - m);
        syy += (b - m) * (b - m);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(undefined);
    }
    Ok(Spearman { rho: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0), defined: true })
}

/// Mean and population standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

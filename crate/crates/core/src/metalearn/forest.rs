//! Random forest of CART trees (Gini impurity, bootstrap rows, per-node
//! feature subsampling). Missing values follow the branch that received more
//! training rows.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetaDataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestHyper {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of features considered at each split (at least one).
    pub feature_subsample: f64,
}

impl Default for ForestHyper {
    fn default() -> Self {
        ForestHyper { trees: 50, max_depth: 8, min_leaf: 1, feature_subsample: 0.3 }
    }
}

impl ForestHyper {
    fn validate(&self) -> Result<()> {
        if self.trees == 0 || self.min_leaf == 0 || !(self.feature_subsample > 0.0 && self.feature_subsample <= 1.0) {
            return Err(Error::Validation(format!("invalid forest hyperparameters {self:?}")));
        }
        Ok(())
    }

    fn features_per_split(&self, d: usize) -> usize {
        ((self.feature_subsample * d as f64).round() as usize).clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf { p: f64 },
    Split { feature: usize, threshold: f64, missing_left: bool, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

struct Split {
    feature: usize,
    threshold: f64,
    missing_left: bool,
    impurity: f64,
}

fn gini_weighted(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    total as f64 * 2.0 * p * (1.0 - p)
}

impl Tree {
    /// Grows a tree on the given row multiset (repeats allowed).
    pub fn fit(x: &[Vec<f64>], y: &[bool], rows: &[usize], h: &ForestHyper, rng: &mut impl Rng) -> Tree {
        let mut tree = Tree { nodes: Vec::new() };
        let d = x.first().map_or(0, Vec::len);
        tree.grow(x, y, rows.to_vec(), 0, h, h.features_per_split(d), rng);
        tree
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(&mut self, x: &[Vec<f64>], y: &[bool], rows: Vec<usize>, depth: usize, h: &ForestHyper, k: usize, rng: &mut impl Rng) -> usize {
        let id = self.nodes.len();
        let pos = rows.iter().filter(|&&r| y[r]).count();
        self.nodes.push(Node::Leaf { p: pos as f64 / rows.len().max(1) as f64 });
        if depth >= h.max_depth || pos == 0 || pos == rows.len() || rows.len() < 2 * h.min_leaf {
            return id;
        }
        let d = x[0].len();
        let candidates = sample(rng, d, k.min(d)).into_vec();
        let Some(best) = best_split(x, y, &rows, &candidates, h.min_leaf) else { return id };
        let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| {
            let v = x[r][best.feature];
            if v.is_nan() {
                best.missing_left
            } else {
                v <= best.threshold
            }
        });
        let l = self.grow(x, y, left, depth + 1, h, k, rng);
        let r = self.grow(x, y, right, depth + 1, h, k, rng);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            missing_left: best.missing_left,
            left: l,
            right: r,
        };
        id
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { p } => return *p,
                Node::Split { feature, threshold, missing_left, left, right } => {
                    let v = row[*feature];
                    let go_left = if v.is_nan() { *missing_left } else { v <= *threshold };
                    i = if go_left { *left } else { *right };
                }
            }
        }
    }

    /// Feature used at the root, if the root splits.
    pub fn root_feature(&self) -> Option<usize> {
        match self.nodes.first()? {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }
}

fn best_split(x: &[Vec<f64>], y: &[bool], rows: &[usize], candidates: &[usize], min_leaf: usize) -> Option<Split> {
    let mut best: Option<Split> = None;
    let mut vals: Vec<(f64, bool)> = Vec::with_capacity(rows.len());
    for &f in candidates {
        vals.clear();
        let (mut miss, mut miss_pos) = (0usize, 0usize);
        for &r in rows {
            let v = x[r][f];
            if v.is_nan() {
                miss += 1;
                miss_pos += y[r] as usize;
            } else {
                vals.push((v, y[r]));
            }
        }
        if vals.len() < 2 {
            continue;
        }
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = vals.len();
        let total_pos = vals.iter().filter(|v| v.1).count();
        let mut left_pos = 0;
        for i in 0..total - 1 {
            left_pos += vals[i].1 as usize;
            if vals[i].0 == vals[i + 1].0 {
                continue;
            }
            let nl = i + 1;
            let nr = total - nl;
            let missing_left = nl >= nr;
            let (nl, pl, nr, pr) = if missing_left {
                (nl + miss, left_pos + miss_pos, nr, total_pos - left_pos)
            } else {
                (nl, left_pos, nr + miss, total_pos - left_pos + miss_pos)
            };
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let impurity = gini_weighted(pl, nl) + gini_weighted(pr, nr);
            if best.as_ref().is_none_or(|b| impurity < b.impurity - 1e-12) {
                let (a, b) = (vals[i].0, vals[i + 1].0);
                best = Some(Split { feature: f, threshold: a + (b - a) / 2.0, missing_left, impurity });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_proba(row)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Each tree gets its own seed derived from `seed` and its index.
pub fn train_forest(ds: &MetaDataset, h: &ForestHyper, seed: u64) -> Result<ForestModel> {
    h.validate()?;
    let n = ds.len();
    if n == 0 {
        return Err(Error::Validation("cannot train on an empty dataset".into()));
    }
    let trees = (0..h.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::derive(seed, t as u64));
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            Tree::fit(&ds.x, &ds.y, &rows, h, &mut rng)
        })
        .collect();
    Ok(ForestModel { trees })
}

//! Tabular datasets for feature-selection instances: a bundled synthetic
//! corpus and CSV ingestion.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// Column-major feature values.
    pub features: Vec<Vec<f64>>,
    pub target: Vec<f64>,
}

impl Dataset {
    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    /// Keeps `n` randomly chosen feature columns, in original order.
    pub fn reduce(&self, n: usize, rng: &mut impl Rng) -> Result<Dataset> {
        if n > self.n_features() {
            return Err(Error::Validation(format!(
                "dataset {} has {} features, {n} requested",
                self.name,
                self.n_features()
            )));
        }
        let mut keep = rand::seq::index::sample(rng, self.n_features(), n).into_vec();
        keep.sort_unstable();
        Ok(Dataset {
            name: self.name.clone(),
            features: keep.iter().map(|&i| self.features[i].clone()).collect(),
            target: self.target.clone(),
        })
    }
}

/// Latent-factor Gaussian data: every feature and the target load on a few
/// shared factors, so features correlate with each other and the target.
pub fn synthetic(name: &str, rows: usize, n_features: usize, n_latent: usize, seed_value: u64) -> Dataset {
    let mut rng = seed::rng(seed_value);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let z: Vec<Vec<f64>> = (0..n_latent).map(|_| (0..rows).map(|_| normal()).collect()).collect();
    let column = |weights: Vec<f64>, noise: f64, normal: &mut dyn FnMut() -> f64| -> Vec<f64> {
        (0..rows)
            .map(|r| weights.iter().zip(&z).map(|(w, zl)| w * zl[r]).sum::<f64>() + noise * normal())
            .collect()
    };
    let mut features = Vec::with_capacity(n_features);
    for _ in 0..n_features {
        let w: Vec<f64> = (0..n_latent).map(|_| normal() * 0.8).collect();
        features.push(column(w, 1.0, &mut normal));
    }
    let w: Vec<f64> = (0..n_latent).map(|_| normal()).collect();
    let target = column(w, 0.5, &mut normal);
    Dataset {
        name: name.to_string(),
        features,
        target,
    }
}

/// Seven synthetic datasets used in a fixed cycling order.
pub fn bundled_corpus(seed_value: u64) -> Vec<Dataset> {
    let shapes = [(40, 5), (44, 6), (57, 4), (120, 8), (150, 6), (200, 10), (256, 12)];
    shapes
        .iter()
        .enumerate()
        .map(|(i, &(f, l))| synthetic(&format!("synthetic_{}", i + 1), 240, f, l, seed::derive(seed_value, i as u64)))
        .collect()
}

/// CSV with a header row, numeric cells, last column the target.
pub fn read_csv(path: &Path) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_path(path)?;
    let width = rdr.headers()?.len();
    if width < 2 {
        return Err(Error::Validation("dataset needs at least one feature and a target".into()));
    }
    let mut cols: Vec<Vec<f64>> = vec![vec![]; width];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::Validation(format!("{}: row {} column {j} is not numeric", path.display(), line + 2))
            })?;
            cols[j].push(v);
        }
    }
    let target = cols.pop().unwrap_or_default();
    let name = path.file_stem().map_or("dataset".into(), |s| s.to_string_lossy().into_owned());
    Ok(Dataset { name, features: cols, target })
}

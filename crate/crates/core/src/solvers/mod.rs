//! Classical samplers: simulated annealing, tabu search and steepest descent,
//! plus hyperparameter search and external sample ingestion.

mod sa;
mod sd;
mod ts;
mod tune;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{QuboInstance, Sample, SampleSet};
use crate::seed;

pub use sa::{default_beta_range, simulated_annealing, Schedule, SaParams};
pub use sd::{steepest_descent, SdParams};
pub use ts::{tabu_search, tabu_search_traced, TsParams};
pub use tune::{tune_solver, SearchSpace, TuneOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "SA")]
    Sa,
    #[serde(rename = "TS")]
    Ts,
    #[serde(rename = "SD")]
    Sd,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Sa, SolverKind::Ts, SolverKind::Sd];

    pub fn id(&self) -> &'static str {
        match self {
            SolverKind::Sa => "SA",
            SolverKind::Ts => "TS",
            SolverKind::Sd => "SD",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SA" => Ok(SolverKind::Sa),
            "TS" => Ok(SolverKind::Ts),
            "SD" => Ok(SolverKind::Sd),
            _ => Err(Error::Validation(format!("unknown solver `{s}`"))),
        }
    }
}

/// Parameters for one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver")]
pub enum SolverParams {
    #[serde(rename = "SA")]
    Sa(SaParams),
    #[serde(rename = "TS")]
    Ts(TsParams),
    #[serde(rename = "SD")]
    Sd(SdParams),
}

impl SolverParams {
    pub fn default_for(kind: SolverKind) -> Self {
        match kind {
            SolverKind::Sa => SolverParams::Sa(SaParams::default()),
            SolverKind::Ts => SolverParams::Ts(TsParams::default()),
            SolverKind::Sd => SolverParams::Sd(SdParams::default()),
        }
    }

    pub fn kind(&self) -> SolverKind {
        match self {
            SolverParams::Sa(_) => SolverKind::Sa,
            SolverParams::Ts(_) => SolverKind::Ts,
            SolverParams::Sd(_) => SolverKind::Sd,
        }
    }

    pub fn with_seed(mut self, s: u64) -> Self {
        match &mut self {
            SolverParams::Sa(p) => p.seed = s,
            SolverParams::Ts(p) => p.seed = s,
            SolverParams::Sd(p) => p.seed = s,
        }
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        match &mut self {
            SolverParams::Sa(p) => p.n_samples = n,
            SolverParams::Ts(p) => p.n_samples = n,
            SolverParams::Sd(p) => p.n_samples = n,
        }
        self
    }

    pub fn run(&self, q: &QuboInstance) -> Result<SampleSet> {
        match self {
            SolverParams::Sa(p) => simulated_annealing(q, p),
            SolverParams::Ts(p) => tabu_search(q, p),
            SolverParams::Sd(p) => steepest_descent(q, p),
        }
    }
}

/// Solver → class → parameter overrides, with a `default` class key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamTable(pub BTreeMap<String, BTreeMap<String, serde_json::Value>>);

impl ParamTable {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    /// Resolves parameters for a solver and class, falling back to the
    /// `default` entry and then to built-in defaults.
    pub fn resolve(&self, kind: SolverKind, class: &str) -> Result<SolverParams> {
        let mut merged = serde_json::Map::new();
        merged.insert("solver".into(), kind.id().into());
        if let Some(per) = self.0.get(kind.id()) {
            for key in ["default", class] {
                if let Some(serde_json::Value::Object(o)) = per.get(key) {
                    for (k, v) in o {
                        merged.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        serde_json::from_value(serde_json::Value::Object(merged))
            .map_err(|e| Error::Validation(format!("bad {kind} parameters for {class}: {e}")))
    }
}

/// Sparse view of a symmetric Q with incremental local fields.
pub(crate) struct Sparse {
    pub diag: Vec<f64>,
    pub nbrs: Vec<Vec<(usize, f64)>>,
}

impl Sparse {
    pub fn new(q: &QuboInstance) -> Self {
        let m = q.q();
        let n = q.n();
        let diag = (0..n).map(|i| m[(i, i)]).collect();
        let nbrs = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && m[(i, j)] != 0.0)
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        Sparse { diag, nbrs }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }
}

pub(crate) struct State<'a> {
    sp: &'a Sparse,
    pub x: Vec<u8>,
    /// h_i = Σ_{j≠i} Q_ij x_j
    h: Vec<f64>,
    /// xᵀQx tracked incrementally.
    pub energy: f64,
}

impl<'a> State<'a> {
    pub fn new(sp: &'a Sparse, x: Vec<u8>) -> Self {
        let n = sp.n();
        let mut h = vec![0.0; n];
        let mut energy = 0.0;
        for i in 0..n {
            if x[i] == 1 {
                energy += sp.diag[i];
                for &(j, w) in &sp.nbrs[i] {
                    h[j] += w;
                }
            }
        }
        for i in 0..n {
            if x[i] == 1 {
                energy += h[i];
            }
        }
        State { sp, x, h, energy }
    }

    pub fn random(sp: &'a Sparse, rng: &mut impl Rng) -> Self {
        let x = (0..sp.n()).map(|_| rng.random_range(0..2u8)).collect();
        Self::new(sp, x)
    }

    #[inline]
    pub fn delta(&self, i: usize) -> f64 {
        let s = 1.0 - 2.0 * self.x[i] as f64;
        s * (self.sp.diag[i] + 2.0 * self.h[i])
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        let d = self.delta(i);
        self.x[i] ^= 1;
        let sign = if self.x[i] == 1 { 1.0 } else { -1.0 };
        for &(j, w) in &self.sp.nbrs[i] {
            self.h[j] += sign * w;
        }
        self.energy += d;
    }
}

/// Runs `f` once per sample index with a derived RNG, in parallel, keeping
/// sample order.
pub(crate) fn run_chains<F>(q: &QuboInstance, n_samples: usize, seed: u64, f: F) -> Result<Vec<Sample>>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Vec<u8> + Sync,
{
    if n_samples == 0 {
        return Err(Error::Validation("n_samples must be at least 1".into()));
    }
    (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::rng(seed::derive(seed, k as u64));
            let bits = f(&mut rng);
            let cost = q.cost(&bits)?;
            Ok(Sample { bits, cost })
        })
        .collect()
}

/// Loads an external sample file and validates it against its instance.
pub fn ingest_samples<'a>(
    path: &Path,
    lookup: impl Fn(&str) -> Option<&'a QuboInstance>,
) -> Result<SampleSet> {
    let mut set = crate::io::read_sample_file(path)?;
    let where_ = path.display().to_string();
    let q = lookup(&set.instance_id).ok_or_else(|| Error::Ingestion {
        path: where_.clone(),
        problems: vec![format!("unknown instance_id `{}`", set.instance_id)],
    })?;
    if set.samples.is_empty() {
        return Err(Error::Ingestion {
            path: where_,
            problems: vec!["sample list is empty".into()],
        });
    }
    let bad_len: Vec<usize> = (0..set.samples.len())
        .filter(|&k| set.samples[k].bits.len() != q.n())
        .collect();
    if !bad_len.is_empty() {
        return Err(Error::Structural(format!(
            "{where_}: samples {bad_len:?} do not have {} bits",
            q.n()
        )));
    }
    let mut problems = vec![];
    for (k, s) in set.samples.iter_mut().enumerate() {
        let y = q.cost(&s.bits)?;
        if (y - s.cost).abs() > 1e-6 * y.abs().max(s.cost.abs()).max(1.0) {
            problems.push(format!("sample {k}: recorded cost {} but evaluates to {y}", s.cost));
        }
        s.cost = y;
    }
    if !problems.is_empty() {
        return Err(Error::Ingestion { path: where_, problems });
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::qubo::{evaluate, ProblemClass, SizeClass};

    fn random_instance(n: usize, seed: u64, density: f64) -> QuboInstance {
        let mut rng = seed::rng(seed);
        let mut m = Matrix::square(n);
        for i in 0..n {
            for j in i..n {
                if rng.random::<f64>() < density {
                    let v: f64 = rng.random_range(-2.0..2.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
        }
        QuboInstance::new("r", ProblemClass::MaxCut, "random", SizeClass::Small, m, 0.0, None).unwrap()
    }

    #[test]
    fn incremental_updates_match_full_evaluation() {
        let q = random_instance(64, 3, 0.3);
        let sp = Sparse::new(&q);
        let mut rng = seed::rng(9);
        let mut st = State::random(&sp, &mut rng);
        for _ in 0..10_000 {
            let i = rng.random_range(0..64);
            let before = st.energy;
            let d = st.delta(i);
            st.flip(i);
            assert!((st.energy - before - d).abs() < 1e-9);
        }
        let full = evaluate(q.q(), &st.x).unwrap();
        assert!((st.energy - full).abs() <= 1e-9 * full.abs().max(1.0));
    }

    #[test]
    fn param_table_falls_back_to_defaults() {
        let t: ParamTable = serde_json::from_str(
            r#"{"SA": {"default": {"sweeps": 50}, "max_cut": {"schedule": "linear"}}}"#,
        )
        .unwrap();
        match t.resolve(SolverKind::Sa, "max_cut").unwrap() {
            SolverParams::Sa(p) => {
                assert_eq!(p.sweeps, 50);
                assert_eq!(p.schedule, Schedule::Linear);
                assert_eq!(p.n_samples, 200);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(t.resolve(SolverKind::Ts, "x").unwrap(), SolverParams::Ts(TsParams::default()));
    }
}

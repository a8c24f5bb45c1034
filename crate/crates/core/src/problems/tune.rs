use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::QuboInstance;
use crate::seed;
use crate::solvers::{simulated_annealing, SaParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyTuneConfig {
    pub budget: usize,
    pub sa_runs: usize,
    pub sweeps: usize,
}

impl Default for PenaltyTuneConfig {
    fn default() -> Self {
        PenaltyTuneConfig {
            budget: 100,
            sa_runs: 30,
            sweeps: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyTuneOutcome {
    pub p: f64,
    pub feasible_fraction: f64,
    pub evaluations: usize,
    /// (p, feasible fraction) for every draw, in draw order.
    pub trials: Vec<(f64, f64)>,
}

/// Uniform random search over `range` for the penalty with the highest
/// fraction of feasible SA samples; ties go to the smaller penalty.
pub fn tune_penalty(
    build: impl Fn(f64) -> Result<QuboInstance>,
    range: (f64, f64),
    cfg: &PenaltyTuneConfig,
    seed_value: u64,
) -> Result<PenaltyTuneOutcome> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi >= lo) || cfg.budget == 0 || cfg.sa_runs == 0 {
        return Err(Error::Validation(format!("bad tuning setup: range {range:?}, {cfg:?}")));
    }
    let mut rng = seed::rng(seed_value);
    let sa = SaParams {
        sweeps: cfg.sweeps,
        n_samples: cfg.sa_runs,
        seed: seed::derive(seed_value, 1),
        ..Default::default()
    };
    let mut trials = Vec::with_capacity(cfg.budget);
    for _ in 0..cfg.budget {
        let p = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let q = build(p)?;
        let set = simulated_annealing(&q, &sa)?;
        let mut feasible = 0usize;
        for s in &set.samples {
            match q.is_feasible(&s.bits) {
                Some(true) => feasible += 1,
                Some(false) => {}
                None => return Err(Error::Validation("instance has no feasibility predicate".into())),
            }
        }
        trials.push((p, feasible as f64 / cfg.sa_runs as f64));
    }
    let best = trials
        .iter()
        .copied()
        .reduce(|a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a })
        .expect("budget is positive");
    if best.1 == 0.0 {
        return Err(Error::Tuning { midpoint: 0.5 * (lo + hi) });
    }
    Ok(PenaltyTuneOutcome {
        p: best.0,
        feasible_fraction: best.1,
        evaluations: trials.len(),
        trials,
    })
}

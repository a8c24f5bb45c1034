use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{SaParams, Schedule, SdParams, SolverParams, TsParams};
use crate::error::{Error, Result};
use crate::qubo::{approx_eq, QuboInstance};
use crate::seed;

/// Discrete grids searched by [`tune_solver`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver")]
pub enum SearchSpace {
    #[serde(rename = "SA")]
    Sa { sweeps: Vec<usize>, schedules: Vec<Schedule> },
    #[serde(rename = "TS")]
    Ts { restarts: Vec<usize> },
    #[serde(rename = "SD")]
    Sd,
}

impl SearchSpace {
    fn configs(&self, n_samples: usize) -> Vec<(SolverParams, usize)> {
        match self {
            SearchSpace::Sa { sweeps, schedules } => sweeps
                .iter()
                .flat_map(|&s| {
                    schedules.iter().map(move |&sch| {
                        let p = SaParams { sweeps: s, schedule: sch, n_samples, ..Default::default() };
                        (SolverParams::Sa(p), s)
                    })
                })
                .collect(),
            SearchSpace::Ts { restarts } => restarts
                .iter()
                .map(|&r| {
                    let p = TsParams { restarts: r, n_samples, ..Default::default() };
                    (SolverParams::Ts(p), r)
                })
                .collect(),
            SearchSpace::Sd => vec![(SolverParams::Sd(SdParams { n_samples, seed: 0 }), 0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub params: SolverParams,
    pub best_cost: f64,
    pub evaluations: usize,
}

/// Random search (exhaustive when the grid fits the budget) for the
/// configuration with the lowest best-sample cost; ties go to less effort.
pub fn tune_solver(
    q_ref: &QuboInstance,
    space: &SearchSpace,
    budget: usize,
    n_samples: usize,
    seed_value: u64,
) -> Result<TuneOutcome> {
    let configs = space.configs(n_samples);
    if configs.is_empty() || budget == 0 {
        return Err(Error::Validation("empty search space or zero budget".into()));
    }
    let chosen: Vec<usize> = if configs.len() <= budget {
        (0..configs.len()).collect()
    } else {
        let mut rng = seed::rng(seed_value);
        let mut idx = sample(&mut rng, configs.len(), budget).into_vec();
        idx.sort_unstable();
        idx
    };
    let run_seed = seed::derive(seed_value, 1);
    let mut best: Option<(usize, f64)> = None;
    for &k in &chosen {
        let (params, effort) = &configs[k];
        let cost = params.clone().with_seed(run_seed).run(q_ref)?.best_cost();
        let better = match best {
            None => true,
            Some((bk, bc)) => {
                if approx_eq(cost, bc) {
                    *effort < configs[bk].1
                } else {
                    cost < bc
                }
            }
        };
        if better {
            best = Some((k, cost));
        }
    }
    let (k, cost) = best.expect("at least one configuration evaluated");
    Ok(TuneOutcome {
        params: configs[k].0.clone(),
        best_cost: cost,
        evaluations: chosen.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::qubo::{ProblemClass, SizeClass};

    #[test]
    fn one_point_space_takes_one_evaluation() {
        let q = QuboInstance::new("t", ProblemClass::MaxCut, "t", SizeClass::Small, Matrix::identity(3), 0.0, None)
            .unwrap();
        let space = SearchSpace::Sa { sweeps: vec![10], schedules: vec![Schedule::Linear] };
        let out = tune_solver(&q, &space, 100, 5, 1).unwrap();
        assert_eq!(out.evaluations, 1);
        match out.params {
            SolverParams::Sa(p) => assert_eq!((p.sweeps, p.schedule), (10, Schedule::Linear)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn budget_caps_evaluations_and_ties_prefer_less_effort() {
        let q = QuboInstance::new("t", ProblemClass::MaxCut, "t", SizeClass::Small, Matrix::identity(3), 0.0, None)
            .unwrap();
        let space = SearchSpace::Ts { restarts: (1..=300).collect() };
        let out = tune_solver(&q, &space, 100, 2, 5).unwrap();
        assert_eq!(out.evaluations, 100);
        assert_eq!(out.best_cost, 0.0);

        let small = SearchSpace::Ts { restarts: (1..=50).rev().collect() };
        let out = tune_solver(&q, &small, 100, 2, 5).unwrap();
        assert_eq!(out.evaluations, 50);
        let SolverParams::Ts(p) = out.params else { panic!() };
        assert_eq!(p.restarts, 1);
    }
}

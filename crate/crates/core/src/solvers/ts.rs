use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{run_chains, Sparse, State};
use crate::error::{Error, Result};
use crate::qubo::{QuboInstance, SampleSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsParams {
    pub restarts: usize,
    /// Defaults to min(20, n/4).
    pub tenure: Option<usize>,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for TsParams {
    fn default() -> Self {
        TsParams {
            restarts: 10,
            tenure: None,
            n_samples: 200,
            seed: 0,
        }
    }
}

fn tenure_for(p: &TsParams, n: usize) -> usize {
    p.tenure.unwrap_or((n / 4).min(20)).max(1)
}

/// One sample: best assignment over all restarts, plus the incumbent cost
/// after each restart.
fn run_one(sp: &Sparse, tenure: usize, restarts: usize, rng: &mut ChaCha8Rng) -> (Vec<u8>, Vec<f64>) {
    let n = sp.n();
    let mut best_x = vec![0u8; n];
    let mut best = f64::INFINITY;
    let mut trace = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        let mut st = State::random(sp, rng);
        if st.energy < best {
            best = st.energy;
            best_x.clone_from(&st.x);
        }
        let mut restart_best = st.energy;
        let mut tabu_until = vec![0usize; n];
        let mut stall = 0;
        let mut it = 0usize;
        while stall < 2 * n && it < 100 * n.max(1) {
            it += 1;
            let mut pick: Option<(usize, f64)> = None;
            for i in 0..n {
                let d = st.delta(i);
                let allowed = tabu_until[i] <= it || st.energy + d < best - 1e-12;
                if allowed && pick.is_none_or(|(_, bd)| d < bd) {
                    pick = Some((i, d));
                }
            }
            let Some((i, _)) = pick else { break };
            st.flip(i);
            tabu_until[i] = it + tenure + 1;
            if st.energy < restart_best - 1e-12 {
                restart_best = st.energy;
                stall = 0;
                if st.energy < best {
                    best = st.energy;
                    best_x.clone_from(&st.x);
                }
            } else {
                stall += 1;
            }
        }
        trace.push(best);
    }
    (best_x, trace)
}

fn check(p: &TsParams) -> Result<()> {
    if p.restarts == 0 {
        return Err(Error::Validation("restarts must be at least 1".into()));
    }
    Ok(())
}

fn hyper(p: &TsParams, tenure: usize) -> BTreeMap<String, serde_json::Value> {
    let mut hp = BTreeMap::new();
    hp.insert("restarts".into(), json!(p.restarts));
    hp.insert("tenure".into(), json!(tenure));
    hp.insert("n_samples".into(), json!(p.n_samples));
    hp
}

pub fn tabu_search(q: &QuboInstance, p: &TsParams) -> Result<SampleSet> {
    check(p)?;
    let sp = Sparse::new(q);
    let tenure = tenure_for(p, q.n());
    let samples = run_chains(q, p.n_samples, p.seed, |rng| run_one(&sp, tenure, p.restarts, rng).0)?;
    Ok(SampleSet {
        solver_id: "TS".into(),
        instance_id: q.instance_id.clone(),
        seed: p.seed,
        hyperparameters: hyper(p, tenure),
        samples,
    })
}

/// Like [`tabu_search`] but also returns each sample's incumbent cost after
/// every restart (offset excluded).
pub fn tabu_search_traced(q: &QuboInstance, p: &TsParams) -> Result<(SampleSet, Vec<Vec<f64>>)> {
    check(p)?;
    let sp = Sparse::new(q);
    let tenure = tenure_for(p, q.n());
    let traces = std::sync::Mutex::new(vec![Vec::new(); p.n_samples]);
    let samples = {
        use rayon::prelude::*;
        (0..p.n_samples)
            .into_par_iter()
            .map(|k| {
                let mut rng = crate::seed::rng(crate::seed::derive(p.seed, k as u64));
                let (x, tr) = run_one(&sp, tenure, p.restarts, &mut rng);
                traces.lock().expect("trace lock")[k] = tr;
                let cost = q.cost(&x)?;
                Ok(crate::qubo::Sample { bits: x, cost })
            })
            .collect::<Result<Vec<_>>>()?
    };
    let set = SampleSet {
        solver_id: "TS".into(),
        instance_id: q.instance_id.clone(),
        seed: p.seed,
        hyperparameters: hyper(p, tenure),
        samples,
    };
    Ok((set, traces.into_inner().expect("trace lock")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::qubo::{ProblemClass, SizeClass};

    fn inst(m: Matrix) -> QuboInstance {
        QuboInstance::new("t", ProblemClass::MaxCut, "t", SizeClass::Small, m, 0.0, None).unwrap()
    }

    #[test]
    fn positive_diagonal_optimum_every_sample() {
        let s = tabu_search(&inst(Matrix::identity(2)), &TsParams::default()).unwrap();
        assert!(s.samples.iter().all(|x| x.bits == vec![0, 0]));
    }

    #[test]
    fn triangle_max_cut_reaches_minus_two() {
        let m = Matrix::from_rows(&[
            vec![-2.0, 1.0, 1.0],
            vec![1.0, -2.0, 1.0],
            vec![1.0, 1.0, -2.0],
        ])
        .unwrap();
        let s = tabu_search(&inst(m), &TsParams { n_samples: 20, ..Default::default() }).unwrap();
        assert_eq!(s.best_cost(), -2.0);
    }

    #[test]
    fn incumbent_trace_never_increases() {
        let mut rng = crate::seed::rng(8);
        use rand::Rng;
        let mut m = Matrix::square(20);
        for i in 0..20 {
            for j in i..20 {
                let v: f64 = rng.random_range(-2.0..2.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let (s, traces) =
            tabu_search_traced(&inst(m), &TsParams { restarts: 8, n_samples: 10, seed: 3, ..Default::default() })
                .unwrap();
        for (tr, smp) in traces.iter().zip(&s.samples) {
            assert_eq!(tr.len(), 8);
            assert!(tr.windows(2).all(|w| w[1] <= w[0]));
            assert!((tr[7] - smp.cost).abs() < 1e-9);
        }
    }
}

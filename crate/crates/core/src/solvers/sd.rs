use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{run_chains, Sparse, State};
use crate::error::Result;
use crate::qubo::{QuboInstance, SampleSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdParams {
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for SdParams {
    fn default() -> Self {
        SdParams { n_samples: 200, seed: 0 }
    }
}

/// Flips the most improving bit until no single flip lowers the cost.
pub(crate) fn descend(st: &mut State<'_>) {
    let n = st.x.len();
    loop {
        let mut best = (usize::MAX, -1e-12);
        for i in 0..n {
            let d = st.delta(i);
            if d < best.1 {
                best = (i, d);
            }
        }
        if best.0 == usize::MAX {
            return;
        }
        st.flip(best.0);
    }
}

pub fn steepest_descent(q: &QuboInstance, p: &SdParams) -> Result<SampleSet> {
    let sp = Sparse::new(q);
    let samples = run_chains(q, p.n_samples, p.seed, |rng| {
        let mut st = State::random(&sp, rng);
        descend(&mut st);
        st.x
    })?;
    let mut hp = BTreeMap::new();
    hp.insert("n_samples".into(), json!(p.n_samples));
    Ok(SampleSet {
        solver_id: "SD".into(),
        instance_id: q.instance_id.clone(),
        seed: p.seed,
        hyperparameters: hp,
        samples,
    })
}

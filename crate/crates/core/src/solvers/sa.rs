use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{run_chains, Sparse, State};
use crate::error::{Error, Result};
use crate::qubo::{QuboInstance, SampleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Geometric,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaParams {
    pub sweeps: usize,
    pub schedule: Schedule,
    /// (β_start, β_end); derived from Q when absent.
    pub beta_range: Option<(f64, f64)>,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for SaParams {
    fn default() -> Self {
        SaParams {
            sweeps: 1000,
            schedule: Schedule::Geometric,
            beta_range: None,
            n_samples: 200,
            seed: 0,
        }
    }
}

/// β_start = ln 2 / ΔE_max, β_end = ln 100 / ΔE_min, from single-flip bounds.
pub fn default_beta_range(q: &QuboInstance) -> (f64, f64) {
    let m = q.q();
    let n = q.n();
    let mut de_max: f64 = 0.0;
    let mut de_min = f64::INFINITY;
    for i in 0..n {
        let mut bound = m[(i, i)].abs();
        if bound > 0.0 {
            de_min = de_min.min(bound);
        }
        for j in 0..n {
            if j != i && m[(i, j)] != 0.0 {
                let v = 2.0 * m[(i, j)].abs();
                bound += v;
                de_min = de_min.min(v);
            }
        }
        de_max = de_max.max(bound);
    }
    if de_max == 0.0 {
        return (0.1, 10.0);
    }
    let start = 2f64.ln() / de_max;
    let end = 100f64.ln() / de_min;
    if end > start {
        (start, end)
    } else {
        (start, start * 10.0)
    }
}

pub(crate) fn betas(schedule: Schedule, (b0, b1): (f64, f64), sweeps: usize) -> Vec<f64> {
    (0..sweeps)
        .map(|k| {
            if sweeps == 1 || k + 1 == sweeps {
                return b1;
            }
            if k == 0 {
                return b0;
            }
            let t = k as f64 / (sweeps - 1) as f64;
            match schedule {
                Schedule::Geometric => b0 * (b1 / b0).powf(t),
                Schedule::Linear => b0 + (b1 - b0) * t,
            }
        })
        .collect()
}

pub fn simulated_annealing(q: &QuboInstance, p: &SaParams) -> Result<SampleSet> {
    if p.sweeps == 0 {
        return Err(Error::Validation("sweeps must be positive".into()));
    }
    let range = p.beta_range.unwrap_or_else(|| default_beta_range(q));
    if !(range.0 > 0.0 && range.0 < range.1) {
        return Err(Error::Validation(format!("invalid beta range {range:?}")));
    }
    let schedule = betas(p.schedule, range, p.sweeps);
    let sp = Sparse::new(q);
    let n = q.n();
    let samples = run_chains(q, p.n_samples, p.seed, |rng| {
        let mut st = State::random(&sp, rng);
        if n == 0 {
            return st.x;
        }
        for &beta in &schedule {
            for _ in 0..n {
                let i = rng.random_range(0..n);
                let d = st.delta(i);
                if d <= 0.0 || rng.random::<f64>() < (-beta * d).exp() {
                    st.flip(i);
                }
            }
        }
        st.x
    })?;
    let mut hp = BTreeMap::new();
    hp.insert("sweeps".into(), json!(p.sweeps));
    hp.insert("schedule".into(), serde_json::to_value(p.schedule)?);
    hp.insert("beta_start".into(), json!(range.0));
    hp.insert("beta_end".into(), if range.1.is_finite() { json!(range.1) } else { json!("inf") });
    hp.insert("n_samples".into(), json!(p.n_samples));
    Ok(SampleSet {
        solver_id: "SA".into(),
        instance_id: q.instance_id.clone(),
        seed: p.seed,
        hyperparameters: hp,
        samples,
    })
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
    fn schedules_hit_both_ends_and_are_monotone() {
        for s in [Schedule::Geometric, Schedule::Linear] {
            let b = betas(s, (0.5, 8.0), 11);
            assert_eq!(b[0], 0.5);
            assert_eq!(b[10], 8.0);
            assert!(b.windows(2).all(|w| w[0] <= w[1]));
        }
        let g = betas(Schedule::Geometric, (1.0, 16.0), 5);
        for w in g.windows(2) {
            assert!((w[1] / w[0] - 2.0).abs() < 1e-12);
        }
        let l = betas(Schedule::Linear, (1.0, 2.0), 3);
        assert_eq!(l, vec![1.0, 1.5, 2.0]);
    }

    #[test]
    fn zero_temperature_limit_finds_unique_minimum() {
        let q = inst(Matrix::identity(3));
        let p = SaParams {
            sweeps: 20,
            beta_range: Some((1.0, f64::INFINITY)),
            seed: 4,
            ..Default::default()
        };
        let s = simulated_annealing(&q, &p).unwrap();
        let zeros = s.samples.iter().filter(|x| x.bits == vec![0, 0, 0]).count();
        assert!(zeros as f64 / 200.0 >= 0.99);
    }

    #[test]
    fn flat_landscape_stays_uniform() {
        let q = inst(Matrix::square(6));
        let s = simulated_annealing(&q, &SaParams { seed: 1, ..Default::default() }).unwrap();
        assert!(s.samples.iter().all(|x| x.cost == 0.0));
        for i in 0..6 {
            let mean = s.samples.iter().map(|x| x.bits[i] as f64).sum::<f64>() / 200.0;
            assert!((0.4..=0.6).contains(&mean), "bit {i} mean {mean}");
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let mut m = Matrix::square(5);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        m[(2, 2)] = -1.0;
        let q = inst(m);
        let p = SaParams { sweeps: 30, seed: 77, ..Default::default() };
        assert_eq!(simulated_annealing(&q, &p).unwrap(), simulated_annealing(&q, &p).unwrap());
    }

    #[test]
    fn invalid_range_is_rejected() {
        let q = inst(Matrix::identity(2));
        let p = SaParams { beta_range: Some((2.0, 1.0)), ..Default::default() };
        assert!(simulated_annealing(&q, &p).is_err());
    }
}

#![allow(dead_code)]

use qubo_meta::QuboInstance;

/// Exhaustive minimum over all 2^n assignments, evaluated directly from
/// the matrix entries without any incremental bookkeeping.
pub fn brute_force(q: &QuboInstance) -> (f64, Vec<Vec<u8>>) {
    let n = q.n();
    assert!(n <= 22, "oracle is exhaustive");
    let m = q.q();
    let mut best = f64::INFINITY;
    let mut arg = vec![];
    for mask in 0u64..(1 << n) {
        let x: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
        let mut y = q.offset;
        for i in 0..n {
            for j in 0..n {
                y += m[(i, j)] * x[i] as f64 * x[j] as f64;
            }
        }
        if y < best - 1e-9 {
            best = y;
            arg = vec![x];
        } else if (y - best).abs() <= 1e-9 {
            arg.push(x);
        }
    }
    (best, arg)
}

pub fn all_costs(q: &QuboInstance) -> Vec<f64> {
    let n = q.n();
    (0u64..(1 << n))
        .map(|mask| {
            let x: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
            q.cost(&x).unwrap()
        })
        .collect()
}

/// Random symmetric integer-valued instance (exact in binary floating point).
pub fn random_int_instance(n: usize, seed: u64, density: f64) -> QuboInstance {
    use rand::Rng;
    let mut rng = qubo_meta::seed::rng(seed);
    let mut q = qubo_meta::Matrix::square(n);
    for i in 0..n {
        for j in i..n {
            if i == j || rng.random::<f64>() < density {
                let v = rng.random_range(-9..=9) as f64;
                q[(i, j)] = v;
                q[(j, i)] = v;
            }
        }
    }
    QuboInstance::new(
        format!("rand{seed}"),
        qubo_meta::ProblemClass::MaxCut,
        "random",
        qubo_meta::SizeClass::Small,
        q,
        rng.random_range(-5..=5) as f64,
        None,
    )
    .unwrap()
}

pub fn bits(mask: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

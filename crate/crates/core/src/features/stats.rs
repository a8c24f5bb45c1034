//! Inequality and concentration measures used across the feature catalog.

/// Gini index of non-negative values, sorted internally. An all-zero list
/// gives 0.
pub fn gini(values: &[f64]) -> f64 {
    let m = values.len();
    if m == 0 {
        return 0.0;
    }
    let mut y = values.to_vec();
    y.sort_by(|a, b| a.total_cmp(b));
    let sum: f64 = y.iter().sum();
    if sum <= 0.0 {
        return 0.0;
    }
    let weighted: f64 = y.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
    let mf = m as f64;
    (2.0 * weighted / (mf * sum) - (mf + 1.0) / mf).max(0.0)
}

/// Gini index after subtracting the minimum, so signed values are allowed.
pub fn shifted_gini(values: &[f64]) -> f64 {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = values.iter().map(|v| v - min).collect();
    gini(&shifted)
}

/// Gini of values given as (value, count) runs, without expanding them.
/// Values must be non-negative.
pub fn gini_runs(runs: &[(f64, u64)]) -> f64 {
    let mut r = runs.to_vec();
    r.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m: u64 = r.iter().map(|x| x.1).sum();
    let sum: f64 = r.iter().map(|&(v, c)| v * c as f64).sum();
    if m == 0 || sum <= 0.0 {
        return 0.0;
    }
    let mut pos = 0u64;
    let mut weighted = 0.0;
    for &(v, c) in &r {
        // positions pos+1 ..= pos+c
        let idx_sum = c as f64 * pos as f64 + (c as f64) * (c as f64 + 1.0) / 2.0;
        weighted += v * idx_sum;
        pos += c;
    }
    let mf = m as f64;
    (2.0 * weighted / (mf * sum) - (mf + 1.0) / mf).max(0.0)
}

pub fn hhi(shares: &[f64]) -> f64 {
    shares.iter().map(|s| s * s).sum()
}

/// Shannon entropy in bits; zero probabilities contribute nothing.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.log2()).sum::<f64>()
}

/// Counts of distinct values, where values within `tol` of the first member
/// of a run count as equal.
pub fn multiplicities(values: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<(f64, usize)> = vec![];
    for x in v {
        match out.last_mut() {
            Some((first, c)) if x - *first <= tol => *c += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

/// Multiplicity divided by the number of values, one share per distinct value.
pub fn multiplicity_shares(values: &[f64], tol: f64) -> Vec<f64> {
    let n = values.len() as f64;
    multiplicities(values, tol).into_iter().map(|(_, c)| c as f64 / n).collect()
}

//! Exhaustive solution-space enumeration over spin assignments and the
//! optimality predicates built on it.
//!
//! Enumeration splits the variables into up to ten low bits, whose local
//! energies are tabulated once, and the remaining high bits, which are walked
//! in Gray-code order with incremental field updates. Each high configuration
//! yields a block of 2^low energies from two small linear tables.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{bits_to_string, IsingModel, QuboInstance, SampleSet};

/// Hard limit for any enumeration.
pub const MAX_N: usize = 32;
/// Largest n for which the full sorted cost multiset is materialised.
pub const DEFAULT_MAX_FULL_N: usize = 24;
/// Stored optimal assignments; `n_optima` always holds the exact count.
pub const OPTIMA_CAP: usize = 4096;
const LOW_BITS: usize = 10;
const PREFIX_BITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub value: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSpace {
    pub n: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Ising constant; QUBO cost y = λ + offset.
    pub offset: f64,
    /// Absolute tolerance: 1e-9 times max(1, Σ|J| + Σ|b|).
    pub tol: f64,
    /// Sorted (value, multiplicity) pairs; `None` when only extremes were computed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub levels: Option<Vec<Level>>,
    pub optima: Vec<Vec<u8>>,
    pub n_optima: u64,
    pub optima_truncated: bool,
}

impl SolutionSpace {
    pub fn total(&self) -> u64 {
        1u64 << self.n
    }

    /// Value at 0-based position ⌊p·2ⁿ⌋ of the sorted multiset (lower convention).
    pub fn quantile(&self, p: f64) -> Option<f64> {
        let levels = self.levels.as_ref()?;
        quantile(levels, p)
    }

    /// The lowest ⌊2ⁿ/4⌋ values, as levels.
    pub fn lowest_quarter(&self) -> Option<Vec<Level>> {
        let levels = self.levels.as_ref()?;
        Some(take_lowest(levels, (self.total() / 4).max(1)))
    }
}

pub fn quantile(levels: &[Level], p: f64) -> Option<f64> {
    let total: u64 = levels.iter().map(|l| l.count).sum();
    if total == 0 {
        return None;
    }
    let idx = ((p * total as f64).floor() as u64).min(total - 1);
    let mut seen = 0;
    for l in levels {
        seen += l.count;
        if idx < seen {
            return Some(l.value);
        }
    }
    None
}

pub fn take_lowest(levels: &[Level], k: u64) -> Vec<Level> {
    let mut out = vec![];
    let mut left = k;
    for l in levels {
        if left == 0 {
            break;
        }
        let c = l.count.min(left);
        out.push(Level { value: l.value, count: c });
        left -= c;
    }
    out
}

pub fn model_tol(m: &IsingModel) -> f64 {
    let scale: f64 = m.j.as_slice().iter().map(|v| v.abs()).sum::<f64>() + m.b.iter().map(|v| v.abs()).sum::<f64>();
    1e-9 * scale.max(1.0)
}

struct Plan<'a> {
    m: &'a IsingModel,
    n: usize,
    low: usize,
    e_low: Vec<f64>,
}

impl<'a> Plan<'a> {
    fn new(m: &'a IsingModel) -> Self {
        let n = m.n();
        let low = n.min(LOW_BITS);
        let mut e_low = vec![0.0; 1 << low];
        for (p, e) in e_low.iter_mut().enumerate() {
            let s: Vec<f64> = (0..low).map(|i| if p >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let mut v = 0.0;
            for i in 0..low {
                let mut f = 0.0;
                for k in 0..low {
                    f += m.j[(i, k)] * s[k];
                }
                v += s[i] * (f + m.b[i]);
            }
            *e = v;
        }
        Plan { m, n, low, e_low }
    }

    fn high(&self) -> usize {
        self.n - self.low
    }

    fn prefix_bits(&self) -> usize {
        self.high().min(PREFIX_BITS)
    }

    /// Walks every assignment whose top `prefix_bits` high bits equal
    /// `prefix`, one block of 2^low energies per high configuration.
    fn walk_chunk(&self, prefix: u64, sink: &mut impl BlockSink) {
        let (n, low) = (self.n, self.low);
        let pb = self.prefix_bits();
        let mid = self.high() - pb;
        let j = &self.m.j;
        let b = &self.m.b;
        let mut s = vec![1.0f64; n];
        let mut mask: u64 = prefix << (low + mid);
        for i in (low + mid)..n {
            if mask >> i & 1 == 1 {
                s[i] = -1.0;
            }
        }
        // h[k] = Σ_{j high} J_kj s_j for high k; g[i] = 2 Σ_{j high} J_ij s_j for low i
        let mut h = vec![0.0; n];
        let mut g = vec![0.0; low];
        for k in 0..n {
            let mut f = 0.0;
            for jj in low..n {
                f += j[(k, jj)] * s[jj];
            }
            if k < low {
                g[k] = 2.0 * f;
            } else {
                h[k] = f;
            }
        }
        let mut e_high: f64 = (low..n).map(|k| s[k] * (h[k] + b[k])).sum();
        let half = low / 2;
        let (na, nb) = (1usize << half, 1usize << (low - half));
        let mut lin_a = vec![0.0; na];
        let mut lin_b = vec![0.0; nb];
        let mut block = vec![0.0; 1 << low];
        for t in 0u64..(1u64 << mid) {
            if t > 0 {
                let k = low + t.trailing_zeros() as usize;
                let old = s[k];
                e_high += -2.0 * old * (2.0 * h[k] + b[k]);
                let d = -2.0 * old;
                let row = j.row(k);
                for jj in low..n {
                    h[jj] += row[jj] * d;
                }
                for (i, gi) in g.iter_mut().enumerate() {
                    *gi += 2.0 * row[i] * d;
                }
                s[k] = -old;
                mask ^= 1 << k;
            }
            fill_linear(&g[..half], &mut lin_a);
            fill_linear(&g[half..], &mut lin_b);
            let mut lo = [f64::INFINITY; 4];
            let mut hi = [f64::NEG_INFINITY; 4];
            for (bi, lb) in lin_b.iter().enumerate() {
                let base = e_high + lb;
                let src = &self.e_low[bi * na..(bi + 1) * na];
                for (sc, la) in src.chunks_exact(4).zip(lin_a.chunks_exact(4)) {
                    for l in 0..4 {
                        let v = base + sc[l] + la[l];
                        lo[l] = if v < lo[l] { v } else { lo[l] };
                        hi[l] = if v > hi[l] { v } else { hi[l] };
                    }
                }
                for a in (na / 4 * 4)..na {
                    let v = base + src[a] + lin_a[a];
                    lo[0] = lo[0].min(v);
                    hi[0] = hi[0].max(v);
                }
            }
            let lo = lo.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = hi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if sink.wants(lo, hi) {
                for (bi, lb) in lin_b.iter().enumerate() {
                    let base = e_high + lb;
                    let off = bi * na;
                    let src = &self.e_low[off..off + na];
                    for (a, dst) in block[off..off + na].iter_mut().enumerate() {
                        *dst = base + src[a] + lin_a[a];
                    }
                }
                sink.take(mask, &block);
            }
        }
    }

    fn chunks(&self) -> u64 {
        1u64 << self.prefix_bits()
    }
}

/// table[p] = Σ_i s_i g_i with s_i = −1 where bit i of p is set.
fn fill_linear(g: &[f64], table: &mut [f64]) {
    table[0] = g.iter().sum();
    for p in 1..table.len() {
        let i = p.trailing_zeros() as usize;
        table[p] = table[p & (p - 1)] - 2.0 * g[i];
    }
}

trait BlockSink {
    /// Called with the block minimum and maximum; `true` requests the values.
    fn wants(&mut self, lo: f64, hi: f64) -> bool;
    fn take(&mut self, base: u64, vals: &[f64]);
}

struct Fill<'a> {
    start: u64,
    dst: &'a mut [f64],
}

impl BlockSink for Fill<'_> {
    fn wants(&mut self, _: f64, _: f64) -> bool {
        true
    }

    fn take(&mut self, base: u64, vals: &[f64]) {
        let off = (base - self.start) as usize;
        self.dst[off..off + vals.len()].copy_from_slice(vals);
    }
}

#[derive(Debug, Clone)]
struct Extremes {
    min: f64,
    max: f64,
    cands: Vec<(u64, f64)>,
    count: u64,
    truncated: bool,
    recount: bool,
    fixed: Option<f64>,
    tol: f64,
}

impl BlockSink for Extremes {
    fn wants(&mut self, lo: f64, hi: f64) -> bool {
        if hi > self.max {
            self.max = hi;
        }
        if self.fixed.is_none() && lo < self.min {
            self.lower_min(lo);
        }
        lo <= self.min + self.tol
    }

    fn take(&mut self, base: u64, vals: &[f64]) {
        let limit = self.min + self.tol;
        for (p, &v) in vals.iter().enumerate() {
            if v <= limit {
                self.count += 1;
                if self.cands.len() < OPTIMA_CAP {
                    self.cands.push((base | p as u64, v));
                } else {
                    self.truncated = true;
                }
            }
        }
    }
}

impl Extremes {
    fn new(fixed: Option<f64>, tol: f64) -> Self {
        Extremes {
            tol,
            min: fixed.unwrap_or(f64::INFINITY),
            max: f64::NEG_INFINITY,
            cands: vec![],
            count: 0,
            truncated: false,
            recount: false,
            fixed,
        }
    }

    fn lower_min(&mut self, v: f64) {
        let tol = self.tol;
        let old = self.min;
        self.min = v;
        if old - v > tol {
            self.cands.clear();
            self.count = 0;
            self.truncated = false;
        } else {
            self.cands.retain(|c| c.1 <= v + tol);
            if self.truncated {
                self.recount = true;
            } else {
                self.count = self.cands.len() as u64;
            }
        }
    }

    fn merge(self, other: Extremes) -> Extremes {
        let tol = self.tol;
        let (mut lo, hi) = if other.min < self.min { (other, self) } else { (self, other) };
        lo.max = lo.max.max(hi.max);
        lo.recount |= hi.recount;
        if hi.min > lo.min + tol {
            return lo;
        }
        let limit = lo.min + tol;
        let kept: Vec<(u64, f64)> = hi.cands.iter().copied().filter(|c| c.1 <= limit).collect();
        if hi.truncated {
            if hi.min == lo.min || lo.fixed.is_some() {
                lo.count += hi.count;
                lo.truncated = true;
            } else {
                lo.recount = true;
            }
        } else {
            lo.count += kept.len() as u64;
        }
        for c in kept {
            if lo.cands.len() < OPTIMA_CAP {
                lo.cands.push(c);
            } else {
                lo.truncated = true;
            }
        }
        lo
    }
}

fn check_n(n: usize) -> Result<()> {
    if n > MAX_N {
        return Err(Error::Capacity(format!("enumeration supports n <= {MAX_N}, got {n}")));
    }
    if n == 0 {
        return Err(Error::Validation("empty model".into()));
    }
    Ok(())
}

fn mask_bits(mask: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| (mask >> i & 1) as u8).collect()
}

fn scan_extremes(plan: &Plan, tol: f64, fixed: Option<f64>) -> Extremes {
    let parts: Vec<Extremes> = (0..plan.chunks())
        .into_par_iter()
        .map(|c| {
            let mut acc = Extremes::new(fixed, tol);
            plan.walk_chunk(c, &mut acc);
            acc
        })
        .collect();
    parts.into_iter().reduce(Extremes::merge).expect("at least one chunk")
}

/// λ_min, λ_max and the optimal set without materialising the cost multiset.
pub fn enumerate_extremes_ising(m: &IsingModel) -> Result<SolutionSpace> {
    let n = m.n();
    check_n(n)?;
    let plan = Plan::new(m);
    let tol = model_tol(m);
    let mut acc = scan_extremes(&plan, tol, None);
    if acc.recount {
        let max = acc.max;
        acc = scan_extremes(&plan, tol, Some(acc.min));
        acc.max = max;
    }
    acc.cands.sort_unstable_by_key(|c| c.0);
    Ok(SolutionSpace {
        n,
        lambda_min: acc.min,
        lambda_max: acc.max,
        offset: m.c,
        tol,
        levels: None,
        optima: acc.cands.iter().map(|c| mask_bits(c.0, n)).collect(),
        n_optima: acc.count,
        optima_truncated: acc.truncated,
    })
}

pub fn enumerate_extremes(q: &QuboInstance) -> Result<SolutionSpace> {
    enumerate_extremes_ising(&q.to_ising())
}

/// Every λ(s), indexed by the bit mask of x = (1 − s)/2.
pub fn all_energies(m: &IsingModel) -> Result<Vec<f64>> {
    let n = m.n();
    check_n(n)?;
    if n > 30 {
        return Err(Error::Capacity(format!("materialising 2^{n} energies is not supported")));
    }
    let plan = Plan::new(m);
    let mut out = vec![0.0; 1usize << n];
    let chunk = out.len() / plan.chunks() as usize;
    out.par_chunks_mut(chunk).enumerate().for_each(|(c, dst)| {
        let mut sink = Fill { start: (c * chunk) as u64, dst };
        plan.walk_chunk(c as u64, &mut sink);
    });
    Ok(out)
}

/// Full solution space with sorted levels when n ≤ `max_full_n`, extremes
/// only for larger n up to 32.
pub fn enumerate_ising(m: &IsingModel, max_full_n: usize) -> Result<SolutionSpace> {
    let n = m.n();
    check_n(n)?;
    if n > max_full_n {
        return enumerate_extremes_ising(m);
    }
    let tol = model_tol(m);
    let mut vals = all_energies(m)?;
    let lambda_min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let limit = lambda_min + tol;
    let mut optima = vec![];
    let mut n_optima = 0u64;
    for (mask, &v) in vals.iter().enumerate() {
        if v <= limit {
            n_optima += 1;
            if optima.len() < OPTIMA_CAP {
                optima.push(mask_bits(mask as u64, n));
            }
        }
    }
    vals.par_sort_unstable_by(|a, b| a.total_cmp(b));
    let levels = group_levels(&vals, tol);
    Ok(SolutionSpace {
        n,
        lambda_min,
        lambda_max: *vals.last().expect("non-empty"),
        offset: m.c,
        tol,
        levels: Some(levels),
        optima_truncated: n_optima > OPTIMA_CAP as u64,
        optima,
        n_optima,
    })
}

pub fn enumerate_with(q: &QuboInstance, max_full_n: usize) -> Result<SolutionSpace> {
    enumerate_ising(&q.to_ising(), max_full_n)
}

pub fn enumerate(q: &QuboInstance) -> Result<SolutionSpace> {
    enumerate_with(q, DEFAULT_MAX_FULL_N)
}

/// Groups sorted values; a level absorbs values within `tol` of its first member.
pub fn group_levels(sorted: &[f64], tol: f64) -> Vec<Level> {
    let mut out: Vec<Level> = vec![];
    for &v in sorted {
        match out.last_mut() {
            Some(l) if v - l.value <= tol => l.count += 1,
            _ => out.push(Level { value: v, count: 1 }),
        }
    }
    out
}

/// λ ≤ λ_min + ε(λ_max − λ_min), with the space tolerance.
pub fn eps_optimal(sample_lambda: f64, space: &SolutionSpace, eps: f64) -> bool {
    sample_lambda <= space.lambda_min + eps * (space.lambda_max - space.lambda_min) + space.tol
}

pub fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Within Hamming distance 1 of some optimal assignment. When the stored
/// optima are truncated the sample and its neighbours are evaluated directly.
pub fn h_optimal(x: &[u8], space: &SolutionSpace, q: &QuboInstance) -> Result<bool> {
    if x.len() != space.n {
        return Err(Error::Structural(format!("assignment has {} bits, space has {}", x.len(), space.n)));
    }
    if !space.optima_truncated {
        return Ok(space.optima.iter().any(|o| hamming(o, x) <= 1));
    }
    let limit = space.lambda_min + space.offset + space.tol;
    let mut y = x.to_vec();
    if q.cost(&y)? <= limit {
        return Ok(true);
    }
    for i in 0..y.len() {
        y[i] ^= 1;
        let hit = q.cost(&y)? <= limit;
        y[i] ^= 1;
        if hit {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityLabel {
    pub optimal: bool,
    /// (ε, flag) in the order requested.
    pub eps_optimal: Vec<(f64, bool)>,
    pub h_optimal: bool,
}

/// Optimal and ε flags from the best sample; h-Optimal passes when any sample does.
pub fn label_small(set: &SampleSet, space: &SolutionSpace, eps_list: &[f64], q: &QuboInstance) -> Result<OptimalityLabel> {
    let best = set
        .best()
        .ok_or_else(|| Error::Validation(format!("sample set for {} is empty", set.instance_id)))?;
    let lam = best.cost - space.offset;
    let mut h = false;
    for s in &set.samples {
        if h_optimal(&s.bits, space, q)? {
            h = true;
            break;
        }
    }
    Ok(OptimalityLabel {
        optimal: lam <= space.lambda_min + space.tol,
        eps_optimal: eps_list.iter().map(|&e| (e, eps_optimal(lam, space, e))).collect(),
        h_optimal: h,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolLabel {
    pub over_all: bool,
    pub over: BTreeMap<String, bool>,
}

fn at_most(a: f64, b: f64) -> bool {
    a <= b + 1e-9 * b.abs().max(1.0)
}

/// Candidate best cost at least as good as the pool (and each member).
pub fn label_large(candidate: &SampleSet, pool: &[SampleSet]) -> Result<PoolLabel> {
    if pool.is_empty() {
        return Err(Error::Validation("reference pool is empty".into()));
    }
    if let Some(p) = pool.iter().find(|p| p.instance_id != candidate.instance_id) {
        return Err(Error::Validation(format!(
            "pool sample set for {} does not match candidate instance {}",
            p.instance_id, candidate.instance_id
        )));
    }
    let c = candidate.best_cost();
    let over: BTreeMap<String, bool> = pool.iter().map(|p| (p.solver_id.clone(), at_most(c, p.best_cost()))).collect();
    let pool_min = pool.iter().map(|p| p.best_cost()).fold(f64::INFINITY, f64::min);
    Ok(PoolLabel { over_all: at_most(c, pool_min), over })
}

/// Persisted per-instance summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub instance_id: String,
    pub n: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub offset: f64,
    pub tol: f64,
    /// First quartile, median, third quartile; absent without levels.
    pub quartiles: Option<[f64; 3]>,
    /// Up to ten (value, multiplicity) pairs with the largest multiplicities.
    pub top_multiplicities: Vec<(f64, u64)>,
    pub n_optima: u64,
    pub optima: Vec<String>,
    pub optima_truncated: bool,
    /// Precomputed solution-space feature fragment.
    #[serde(default)]
    pub features: BTreeMap<String, Option<f64>>,
}

impl SpaceFile {
    pub fn from_space(id: &str, s: &SolutionSpace, features: BTreeMap<String, Option<f64>>) -> Self {
        let quartiles = s
            .levels
            .as_ref()
            .and_then(|l| Some([quantile(l, 0.25)?, quantile(l, 0.5)?, quantile(l, 0.75)?]));
        let mut top: Vec<(f64, u64)> = s.levels.iter().flatten().map(|l| (l.value, l.count)).collect();
        top.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.total_cmp(&b.0)));
        top.truncate(10);
        SpaceFile {
            instance_id: id.to_string(),
            n: s.n,
            lambda_min: s.lambda_min,
            lambda_max: s.lambda_max,
            offset: s.offset,
            tol: s.tol,
            quartiles,
            top_multiplicities: top,
            n_optima: s.n_optima,
            optima: s.optima.iter().map(|o| bits_to_string(o)).collect(),
            optima_truncated: s.optima_truncated,
            features,
        }
    }

    /// Space for labelling (levels are not persisted).
    pub fn to_space(&self) -> Result<SolutionSpace> {
        Ok(SolutionSpace {
            n: self.n,
            lambda_min: self.lambda_min,
            lambda_max: self.lambda_max,
            offset: self.offset,
            tol: self.tol,
            levels: None,
            optima: self.optima.iter().map(|o| crate::qubo::bits_from_str(o)).collect::<Result<_>>()?,
            n_optima: self.n_optima,
            optima_truncated: self.optima_truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::qubo::{ProblemClass, SizeClass};

    #[test]
    fn linear_table_matches_direct_sum() {
        let g = [0.5, -1.25, 2.0];
        let mut t = vec![0.0; 8];
        fill_linear(&g, &mut t);
        for (p, v) in t.iter().enumerate() {
            let direct: f64 = (0..3).map(|i| if p >> i & 1 == 1 { -g[i] } else { g[i] }).sum();
            assert_eq!(*v, direct);
        }
    }

    #[test]
    fn truncated_optima_keep_exact_count() {
        // zero model of 13 spins: every one of 8192 states is optimal
        let q = QuboInstance::new("z", ProblemClass::MaxCut, "t", SizeClass::Small, Matrix::square(13), 0.0, None).unwrap();
        for s in [enumerate_extremes(&q).unwrap(), enumerate(&q).unwrap()] {
            assert_eq!(s.n_optima, 8192);
            assert!(s.optima_truncated);
            assert_eq!(s.optima.len(), OPTIMA_CAP);
        }
    }

    #[test]
    fn capacity_guard() {
        let q = QuboInstance::new("z", ProblemClass::MaxCut, "t", SizeClass::Small, Matrix::square(33), 0.0, None).unwrap();
        assert!(matches!(enumerate(&q), Err(Error::Capacity(_))));
    }

    #[test]
    fn quantiles_use_lower_position() {
        let levels = vec![Level { value: -0.5, count: 2 }, Level { value: 0.5, count: 2 }];
        assert_eq!(quantile(&levels, 0.0), Some(-0.5));
        assert_eq!(quantile(&levels, 0.25), Some(-0.5));
        assert_eq!(quantile(&levels, 0.5), Some(0.5));
        assert_eq!(take_lowest(&levels, 3), vec![levels[0], Level { value: 0.5, count: 1 }]);
    }
}

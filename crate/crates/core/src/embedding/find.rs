//! Chain-growth heuristic for minor embedding. Each logical variable is rooted
//! at the qubit minimising the summed weighted distance to its neighbours'
//! chains, then grown Steiner-style toward each of them. A qubit's weight grows
//! with the chains already on it and with a history term for rounds spent
//! shared or boxed in. Rip-up and re-placement rounds run until no qubit is
//! shared, then a few overlap-free rounds shorten the chains.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::topology::HardwareGraph;
use super::Embedding;
use crate::error::{Error, Result};
use crate::qubo::IsingModel;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FindOptions {
    pub max_tries: usize,
    pub rounds: usize,
    /// A try is abandoned after this many rounds without fewer shared qubits.
    pub patience: usize,
    /// Overlap penalty at the first refinement round; grows 10% every round.
    pub initial_base: f64,
    /// Extra overlap-free rounds spent shortening chains once a valid map is found.
    pub shrink_rounds: usize,
}

impl Default for FindOptions {
    fn default() -> Self {
        FindOptions { max_tries: 10, rounds: 60, patience: 12, initial_base: 16.0, shrink_rounds: 8 }
    }
}

/// Logical adjacency from the nonzero couplings.
pub fn logical_adjacency(model: &IsingModel) -> Vec<Vec<usize>> {
    let mut adj = vec![vec![]; model.n()];
    for (i, k) in model.edges() {
        adj[i].push(k);
        adj[k].push(i);
    }
    adj
}

pub fn find_embedding(logical: &IsingModel, hw: &HardwareGraph, seed: u64, max_tries: usize) -> Result<Embedding> {
    find_embedding_with(logical, hw, seed, FindOptions { max_tries, ..FindOptions::default() })
}

pub fn find_embedding_with(logical: &IsingModel, hw: &HardwareGraph, seed: u64, opts: FindOptions) -> Result<Embedding> {
    let n = logical.n();
    if n > hw.n_qubits() {
        return Err(Error::Embedding(format!(
            "{n} variables cannot fit on {} qubits",
            hw.n_qubits()
        )));
    }
    let adj = logical_adjacency(logical);
    for t in 0..opts.max_tries.max(1) {
        let mut search = Search::new(hw, &adj, seed::derive(seed, t as u64));
        if let Some(chains) = search.run(opts) {
            let emb = Embedding { instance_id: String::new(), family: hw.family, m: hw.m, chains, chain_strength: None };
            if super::validate_embedding(&emb, logical, hw).is_valid() {
                return Ok(emb);
            }
        }
    }
    Err(Error::Embedding(format!(
        "no valid embedding of {n} variables into {}({}) after {} tries",
        hw.family, hw.m, opts.max_tries
    )))
}

struct Search<'a> {
    hw: &'a HardwareGraph,
    adj: &'a [Vec<usize>],
    rng: rand_chacha::ChaCha8Rng,
    chains: Vec<Vec<usize>>,
    usage: Vec<u32>,
    history: Vec<f64>,
    base: f64,
    // Dijkstra scratch
    dist: Vec<f64>,
    parent: Vec<usize>,
}

const NONE: usize = usize::MAX;

#[derive(PartialEq, PartialOrd)]
struct Key(f64);
impl Eq for Key {}
impl Ord for Key {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

impl<'a> Search<'a> {
    fn new(hw: &'a HardwareGraph, adj: &'a [Vec<usize>], seed: u64) -> Self {
        let h = hw.n_qubits();
        Search {
            hw,
            adj,
            rng: seed::rng(seed),
            chains: vec![vec![]; adj.len()],
            usage: vec![0; h],
            history: vec![0.0; h],
            base: 2.0,
            dist: vec![0.0; h],
            parent: vec![NONE; h],
        }
    }

    fn weight(&self, q: usize) -> f64 {
        (1.0 + self.history[q]) * (1.0 + self.base * self.usage[q] as f64)
    }

    fn run(&mut self, opts: FindOptions) -> Option<Vec<Vec<usize>>> {
        let n = self.adj.len();
        let order = self.bfs_order();
        self.base = self.hw.n_qubits() as f64;
        for &v in &order {
            self.place(v);
        }
        self.base = opts.initial_base;
        let mut best = u32::MAX;
        let mut stale = 0;
        for _ in 0..opts.rounds {
            let shared: u32 = self.usage.iter().map(|&u| u.saturating_sub(1)).sum();
            if shared == 0 {
                break;
            }
            if shared < best {
                best = shared;
                stale = 0;
            } else {
                stale += 1;
                if stale > opts.patience {
                    return None;
                }
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut self.rng);
            for v in order {
                self.rip_up(v);
                self.place(v);
            }
            for q in 0..self.usage.len() {
                let u = self.usage[q];
                if u > 1 {
                    self.history[q] += (u - 1) as f64;
                }
                if u > 0 && self.hw.neighbors(q).iter().all(|&r| self.usage[r] > 0) {
                    self.history[q] += 1.0;
                }
            }
            self.base *= 1.1;
        }
        if self.usage.iter().any(|&u| u > 1) {
            return None;
        }
        self.shrink(opts.shrink_rounds);
        let mut chains = self.chains.clone();
        chains.iter_mut().for_each(|c| c.sort_unstable());
        Some(chains)
    }

    /// Rip-up rounds without history and with overlaps priced out; a new
    /// chain is kept only when it is overlap free and no longer than the old.
    fn shrink(&mut self, rounds: usize) {
        let n = self.adj.len();
        self.history.iter_mut().for_each(|h| *h = 0.0);
        self.base = (self.hw.n_qubits() as f64).powi(2);
        for _ in 0..rounds {
            let before: usize = self.chains.iter().map(Vec::len).sum();
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut self.rng);
            for v in order {
                let old = self.chains[v].clone();
                self.rip_up(v);
                self.place(v);
                let clash = self.chains[v].iter().any(|&q| self.usage[q] > 1);
                if clash || self.chains[v].len() > old.len() {
                    self.rip_up(v);
                    for &q in &old {
                        self.usage[q] += 1;
                    }
                    self.chains[v] = old;
                }
            }
            let after: usize = self.chains.iter().map(Vec::len).sum();
            if after >= before {
                break;
            }
        }
    }

    fn bfs_order(&mut self) -> Vec<usize> {
        let n = self.adj.len();
        let mut seen = vec![false; n];
        let mut starts: Vec<usize> = (0..n).collect();
        starts.shuffle(&mut self.rng);
        let mut order = Vec::with_capacity(n);
        for s in starts {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut head = order.len();
            order.push(s);
            while head < order.len() {
                let v = order[head];
                head += 1;
                let mut next: Vec<usize> = self.adj[v].iter().copied().filter(|&u| !seen[u]).collect();
                next.shuffle(&mut self.rng);
                for u in next {
                    seen[u] = true;
                    order.push(u);
                }
            }
        }
        order
    }

    fn rip_up(&mut self, v: usize) {
        for &q in &self.chains[v] {
            self.usage[q] -= 1;
        }
        self.chains[v].clear();
    }

    /// Dijkstra from the chain of `u`; dist[q] is the summed weight of the
    /// path's qubits outside the chain, q included.
    fn grow_from(&mut self, u: usize) {
        self.dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        self.parent.iter_mut().for_each(|p| *p = NONE);
        let mut heap = BinaryHeap::new();
        for &q in &self.chains[u] {
            self.dist[q] = 0.0;
            heap.push(Reverse((Key(0.0), q)));
        }
        while let Some(Reverse((Key(d), q))) = heap.pop() {
            if d > self.dist[q] {
                continue;
            }
            for &r in self.hw.neighbors(q) {
                let nd = d + self.weight(r);
                if nd < self.dist[r] {
                    self.dist[r] = nd;
                    self.parent[r] = q;
                    heap.push(Reverse((Key(nd), r)));
                }
            }
        }
    }

    fn place(&mut self, v: usize) {
        let h = self.hw.n_qubits();
        let placed: Vec<usize> = self.adj[v].iter().copied().filter(|&u| !self.chains[u].is_empty()).collect();
        if placed.is_empty() {
            let best = (0..h).map(|q| self.weight(q)).fold(f64::INFINITY, f64::min);
            let cands: Vec<usize> = (0..h).filter(|&q| self.weight(q) == best).collect();
            let q = cands[self.rng.random_range(0..cands.len())];
            self.chains[v] = vec![q];
            self.usage[q] += 1;
            return;
        }
        let mut total = vec![0.0; h];
        let mut trees = Vec::with_capacity(placed.len());
        for &u in &placed {
            self.grow_from(u);
            for q in 0..h {
                // the root's own weight is paid once per neighbour, which
                // keeps roots off crowded qubits
                total[q] += if self.dist[q] == 0.0 { self.weight(q) } else { self.dist[q] };
            }
            trees.push((self.dist.clone(), self.parent.clone()));
        }
        let mut best = f64::INFINITY;
        let mut roots = vec![];
        for q in 0..h {
            let c = total[q];
            if c < best - 1e-12 {
                best = c;
                roots.clear();
                roots.push(q);
            } else if (c - best).abs() <= 1e-12 {
                roots.push(q);
            }
        }
        if roots.is_empty() {
            // neighbours sit in another component of the hardware graph
            roots = (0..h).collect();
        }
        let root = roots[self.rng.random_range(0..roots.len())];
        // Steiner-style growth: nearest neighbour chains first, each path
        // starting from whichever chain qubit is already closest
        let mut by_dist: Vec<usize> = (0..trees.len()).collect();
        by_dist.sort_by(|&a, &b| trees[a].0[root].total_cmp(&trees[b].0[root]));
        let mut chain = vec![root];
        for t in by_dist {
            let (dist, parent) = &trees[t];
            let mut q = *chain.iter().min_by(|&&a, &&b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b))).unwrap();
            while parent[q] != NONE && dist[parent[q]] > 0.0 {
                q = parent[q];
                chain.push(q);
            }
        }
        chain.sort_unstable();
        chain.dedup();
        for &q in &chain {
            self.usage[q] += 1;
        }
        self.chains[v] = chain;
    }
}

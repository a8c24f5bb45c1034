use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    ErdosRenyi,
    Cycle,
    Star,
    Grid2d,
}

impl Topology {
    pub const ALL: [Topology; 4] = [Topology::ErdosRenyi, Topology::Cycle, Topology::Star, Topology::Grid2d];

    pub fn name(&self) -> &'static str {
        match self {
            Topology::ErdosRenyi => "erdos_renyi",
            Topology::Cycle => "cycle",
            Topology::Star => "star",
            Topology::Grid2d => "grid2d",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Topology::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown topology `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweakLog {
    pub inserted: usize,
    pub removed: usize,
}

/// Undirected simple graph on nodes 0..n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemGraph {
    n: usize,
    adj: Vec<bool>,
    pub topology: Option<Topology>,
    pub tweak_log: TweakLog,
}

impl ProblemGraph {
    pub fn empty(n: usize) -> Self {
        ProblemGraph {
            n,
            adj: vec![false; n * n],
            topology: None,
            tweak_log: TweakLog::default(),
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            g.set(i, j, true);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, on: bool) {
        if i != j {
            self.adj[i * self.n + j] = on;
            self.adj[j * self.n + i] = on;
        }
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = vec![];
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.has(i, j) {
                    e.push((i, j));
                }
            }
        }
        e
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.has(i, j)).count()
    }

    pub fn complement(&self) -> ProblemGraph {
        let mut g = Self::empty(self.n);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                g.set(i, j, !self.has(i, j));
            }
        }
        g
    }

    fn reach(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..self.n {
                if self.has(u, v) && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.reach(0).iter().all(|&s| s)
    }
}

pub fn base_graph(topology: Topology, n: usize, rng: &mut impl Rng) -> ProblemGraph {
    let mut g = ProblemGraph::empty(n);
    match topology {
        Topology::Cycle => {
            for i in 0..n {
                g.set(i, (i + 1) % n, true);
            }
        }
        Topology::Star => {
            for i in 1..n {
                g.set(0, i, true);
            }
        }
        Topology::Grid2d => {
            let r = ((n as f64).sqrt().floor() as usize).max(1);
            let c = n.div_ceil(r);
            for idx in 0..n {
                let (row, col) = (idx / c, idx % c);
                if col + 1 < c && idx + 1 < n {
                    g.set(idx, idx + 1, true);
                }
                if (row + 1) * c + col < n {
                    g.set(idx, idx + c, true);
                }
            }
        }
        Topology::ErdosRenyi => {
            let p = (2.0 * (n as f64).ln() / n as f64).min(1.0);
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < p {
                        g.set(i, j, true);
                    }
                }
            }
        }
    }
    g.topology = Some(topology);
    g
}

/// Row-major scan of the upper triangle with capped random insertions and
/// removals. A removal that would cut its endpoints apart is undone and not
/// counted; without this, stars above a few dozen nodes almost never survive.
pub fn tweak(g: &mut ProblemGraph, rng: &mut impl Rng) {
    let n = g.n();
    let (cap_ins, cap_rem) = (n / 6, n / 8);
    let mut log = TweakLog::default();
    for i in 0..n {
        for j in (i + 1)..n {
            if !g.has(i, j) {
                if log.inserted < cap_ins && rng.random::<f64>() < 0.4 {
                    g.set(i, j, true);
                    log.inserted += 1;
                }
            } else if log.removed < cap_rem && rng.random::<f64>() < 0.3 {
                g.set(i, j, false);
                if g.reach(i)[j] {
                    log.removed += 1;
                } else {
                    g.set(i, j, true);
                }
            }
        }
    }
    g.tweak_log = log;
}

pub const MAX_GRAPH_TRIES: usize = 1000;

/// Connected tweaked graph of the given topology.
pub fn generate_graph(topology: Topology, n: usize, seed_value: u64) -> Result<ProblemGraph> {
    if n < 3 {
        return Err(Error::Validation(format!("graphs need n >= 3, got {n}")));
    }
    let mut rng = seed::rng(seed_value);
    for _ in 0..MAX_GRAPH_TRIES {
        let mut g = base_graph(topology, n, &mut rng);
        tweak(&mut g, &mut rng);
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::Generation(format!(
        "no connected {topology} graph with {n} nodes after {MAX_GRAPH_TRIES} tries"
    )))
}

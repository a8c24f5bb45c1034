//! Hardware topologies, heuristic minor embedding and embedded spin models.

mod find;
mod topology;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::qubo::IsingModel;

pub use find::{find_embedding, find_embedding_with, logical_adjacency, FindOptions};
pub use topology::{build_topology, chimera, pegasus, qubit_count, Family, HardwareGraph};

/// Chain map of one instance: `chains[v]` is the sorted qubit list of variable v.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub instance_id: String,
    pub family: Family,
    pub m: usize,
    pub chains: Vec<Vec<usize>>,
    pub chain_strength: Option<f64>,
}

impl Embedding {
    pub fn qubit_count(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn max_chain_len(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingFile {
    pub instance_id: String,
    pub family: Family,
    pub m: usize,
    pub chains: BTreeMap<String, Vec<usize>>,
    pub chain_strength: Option<f64>,
}

impl From<&Embedding> for EmbeddingFile {
    fn from(e: &Embedding) -> Self {
        EmbeddingFile {
            instance_id: e.instance_id.clone(),
            family: e.family,
            m: e.m,
            chains: e.chains.iter().enumerate().map(|(v, c)| (v.to_string(), c.clone())).collect(),
            chain_strength: e.chain_strength,
        }
    }
}

impl TryFrom<EmbeddingFile> for Embedding {
    type Error = Error;
    fn try_from(f: EmbeddingFile) -> Result<Self> {
        let mut chains = vec![None; f.chains.len()];
        for (k, c) in f.chains {
            let v: usize = k.parse().map_err(|_| Error::Validation(format!("chain key `{k}` is not a variable index")))?;
            match chains.get_mut(v) {
                Some(slot) => *slot = Some(c),
                None => return Err(Error::Validation(format!("chain key {v} out of range"))),
            }
        }
        Ok(Embedding {
            instance_id: f.instance_id,
            family: f.family,
            m: f.m,
            chains: chains.into_iter().map(|c| c.unwrap_or_default()).collect(),
            chain_strength: f.chain_strength,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    WrongChainCount { expected: usize, found: usize },
    EmptyChain(usize),
    UnknownQubit { var: usize, qubit: usize },
    SharedQubit { qubit: usize, vars: Vec<usize> },
    DisconnectedChain(usize),
    MissingEdge(usize, usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WrongChainCount { expected, found } => write!(f, "expected {expected} chains, found {found}"),
            Violation::EmptyChain(v) => write!(f, "chain of variable {v} is empty"),
            Violation::UnknownQubit { var, qubit } => write!(f, "variable {var} uses qubit {qubit} outside the hardware"),
            Violation::SharedQubit { qubit, vars } => write!(f, "qubit {qubit} is shared by variables {vars:?}"),
            Violation::DisconnectedChain(v) => write!(f, "chain of variable {v} is not connected"),
            Violation::MissingEdge(i, k) => write!(f, "no hardware edge joins the chains of {i} and {k}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmbeddingReport {
    pub violations: Vec<Violation>,
}

impl EmbeddingReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_embedding(emb: &Embedding, logical: &IsingModel, hw: &HardwareGraph) -> EmbeddingReport {
    let mut violations = vec![];
    let n = logical.n();
    if emb.chains.len() != n {
        violations.push(Violation::WrongChainCount { expected: n, found: emb.chains.len() });
        return EmbeddingReport { violations };
    }
    let h = hw.n_qubits();
    let mut owners: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, chain) in emb.chains.iter().enumerate() {
        if chain.is_empty() {
            violations.push(Violation::EmptyChain(v));
        }
        for &q in chain {
            if q >= h {
                violations.push(Violation::UnknownQubit { var: v, qubit: q });
            } else {
                owners.entry(q).or_default().push(v);
            }
        }
    }
    for (q, vars) in &owners {
        let distinct: BTreeSet<usize> = vars.iter().copied().collect();
        if vars.len() > 1 {
            violations.push(Violation::SharedQubit { qubit: *q, vars: distinct.into_iter().collect() });
        }
    }
    for (v, chain) in emb.chains.iter().enumerate() {
        let inside: Vec<usize> = chain.iter().copied().filter(|&q| q < h).collect();
        if !inside.is_empty() && !chain_connected(&inside, hw) {
            violations.push(Violation::DisconnectedChain(v));
        }
    }
    for (i, k) in logical.edges() {
        if !chains_touch(&emb.chains[i], &emb.chains[k], hw) {
            violations.push(Violation::MissingEdge(i, k));
        }
    }
    EmbeddingReport { violations }
}

fn chain_connected(chain: &[usize], hw: &HardwareGraph) -> bool {
    let set: BTreeSet<usize> = chain.iter().copied().collect();
    let mut seen = BTreeSet::from([chain[0]]);
    let mut stack = vec![chain[0]];
    while let Some(q) = stack.pop() {
        for &r in hw.neighbors(q) {
            if set.contains(&r) && seen.insert(r) {
                stack.push(r);
            }
        }
    }
    seen.len() == set.len()
}

fn chains_touch(a: &[usize], b: &[usize], hw: &HardwareGraph) -> bool {
    let h = hw.n_qubits();
    a.iter().any(|&p| p < h && b.iter().any(|&q| q < h && hw.has_edge(p, q)))
}

/// How a logical coupling is distributed over the hardware edges joining two chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSplit {
    #[default]
    Uniform,
    /// Whole coupling on the first joining edge (lowest qubit ids).
    SingleEdge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedIsing {
    /// Spin model over the used qubits, in `qubits` order.
    pub model: IsingModel,
    pub qubits: Vec<usize>,
    /// Position of each logical variable's qubits inside `model`.
    pub chain_index: Vec<Vec<usize>>,
    pub chain_strength: f64,
    pub qubit_count: usize,
    pub chain_count: usize,
    pub intra_chain_edges: usize,
}

impl EmbeddedIsing {
    /// Spin state on the embedded model with every chain copying its variable.
    pub fn aligned_state(&self, s: &[i8]) -> Vec<i8> {
        let mut out = vec![0; self.qubit_count];
        for (v, idx) in self.chain_index.iter().enumerate() {
            for &p in idx {
                out[p] = s[v];
            }
        }
        out
    }
}

/// 1.5 × the largest |J_ij|, or 1 for a model without couplings.
pub fn default_chain_strength(logical: &IsingModel) -> f64 {
    let m = logical.j.max_abs();
    if m > 0.0 {
        1.5 * m
    } else {
        1.0
    }
}

pub fn embed_ising(
    logical: &IsingModel,
    emb: &Embedding,
    hw: &HardwareGraph,
    chain_strength: f64,
) -> Result<EmbeddedIsing> {
    embed_ising_with(logical, emb, hw, chain_strength, CouplingSplit::Uniform)
}

/// Each intra-chain hardware edge gets matrix entries −chain_strength/2 on both
/// sides, so it contributes −chain_strength to sᵀJs when the chain is aligned.
pub fn embed_ising_with(
    logical: &IsingModel,
    emb: &Embedding,
    hw: &HardwareGraph,
    chain_strength: f64,
    split: CouplingSplit,
) -> Result<EmbeddedIsing> {
    if !(chain_strength > 0.0) || !chain_strength.is_finite() {
        return Err(Error::Validation(format!("chain strength must be positive, got {chain_strength}")));
    }
    let report = validate_embedding(emb, logical, hw);
    if !report.is_valid() {
        let msg: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::Validation(format!("invalid embedding: {}", msg.join("; "))));
    }
    let mut qubits: Vec<usize> = emb.chains.iter().flatten().copied().collect();
    qubits.sort_unstable();
    let pos: BTreeMap<usize, usize> = qubits.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let chain_index: Vec<Vec<usize>> = emb.chains.iter().map(|c| c.iter().map(|q| pos[q]).collect()).collect();
    let nq = qubits.len();
    let mut j = Matrix::square(nq);
    let mut b = vec![0.0; nq];
    let mut intra = 0;
    for (v, chain) in emb.chains.iter().enumerate() {
        let share = logical.b[v] / chain.len() as f64;
        for &q in chain {
            b[pos[&q]] += share;
        }
        for (a, &p) in chain.iter().enumerate() {
            for &q in &chain[a + 1..] {
                if hw.has_edge(p, q) {
                    let (x, y) = (pos[&p], pos[&q]);
                    j[(x, y)] -= chain_strength / 2.0;
                    j[(y, x)] -= chain_strength / 2.0;
                    intra += 1;
                }
            }
        }
    }
    for (i, k) in logical.edges() {
        let mut joins = vec![];
        for &p in &emb.chains[i] {
            for &q in &emb.chains[k] {
                if hw.has_edge(p, q) {
                    joins.push((pos[&p], pos[&q]));
                }
            }
        }
        if split == CouplingSplit::SingleEdge {
            joins.truncate(1);
        }
        let share = logical.j[(i, k)] / joins.len() as f64;
        for (x, y) in joins {
            j[(x, y)] += share;
            j[(y, x)] += share;
        }
    }
    Ok(EmbeddedIsing {
        model: IsingModel::new(j, b, logical.c)?,
        qubits,
        chain_index,
        chain_strength,
        qubit_count: nq,
        chain_count: emb.chains.len(),
        intra_chain_edges: intra,
    })
}

/// Smallest size of the family with at least `factor`·n qubits.
pub fn auto_size(family: Family, n: usize, factor: usize) -> usize {
    let want = (factor * n).max(1);
    let mut m = if family == Family::Pegasus { 2 } else { 1 };
    while qubit_count(family, m) < want {
        m += 1;
    }
    m
}

/// Embeds on the smallest adequate topology, enlarging it up to `grow` times
/// when the search fails.
pub fn auto_embed(
    logical: &IsingModel,
    family: Family,
    seed: u64,
    opts: FindOptions,
    grow: usize,
) -> Result<(Embedding, HardwareGraph)> {
    let m0 = auto_size(family, logical.n(), 8);
    let mut last = None;
    for m in m0..=m0 + grow {
        let hw = build_topology(family, m)?;
        match find_embedding_with(logical, &hw, seed, opts) {
            Ok(e) => return Ok((e, hw)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Embedding("no size attempted".into())))
}

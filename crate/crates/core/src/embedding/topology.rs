use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Chimera,
    Pegasus,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Chimera => "chimera",
            Family::Pegasus => "pegasus",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chimera" => Ok(Family::Chimera),
            "pegasus" => Ok(Family::Pegasus),
            _ => Err(Error::Validation(format!("unknown hardware family `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardwareGraph {
    pub family: Family,
    pub m: usize,
    adj: Vec<Vec<usize>>,
}

impl HardwareGraph {
    fn from_edges(family: Family, m: usize, n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adj = vec![vec![]; n];
        for (a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        HardwareGraph { family, m, adj }
    }

    pub fn n_qubits(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adj[q]
    }

    pub fn degree(&self, q: usize) -> usize {
        self.adj[q].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }
}

pub fn build_topology(family: Family, m: usize) -> Result<HardwareGraph> {
    match family {
        Family::Chimera => chimera(m),
        Family::Pegasus => pegasus(m),
    }
}

/// Qubit count of the given family and size.
pub fn qubit_count(family: Family, m: usize) -> usize {
    match family {
        Family::Chimera => 8 * m * m,
        Family::Pegasus => (24 * m - 8) * m.saturating_sub(1),
    }
}

/// m×m grid of K4,4 cells; qubit ((i·m + j)·2 + u)·4 + k, where u = 0 is the
/// vertical side (coupled to the cell below) and u = 1 the horizontal side.
pub fn chimera(m: usize) -> Result<HardwareGraph> {
    if m == 0 {
        return Err(Error::Validation("chimera size must be at least 1".into()));
    }
    let id = |i: usize, j: usize, u: usize, k: usize| ((i * m + j) * 2 + u) * 4 + k;
    let mut edges = vec![];
    for i in 0..m {
        for j in 0..m {
            for k in 0..4 {
                for k2 in 0..4 {
                    edges.push((id(i, j, 0, k), id(i, j, 1, k2)));
                }
                if i + 1 < m {
                    edges.push((id(i, j, 0, k), id(i + 1, j, 0, k)));
                }
                if j + 1 < m {
                    edges.push((id(i, j, 1, k), id(i, j + 1, 1, k)));
                }
            }
        }
    }
    Ok(HardwareGraph::from_edges(Family::Chimera, m, 8 * m * m, edges))
}

const PEGASUS_V_OFFSETS: [usize; 12] = [2, 2, 2, 2, 10, 10, 10, 10, 6, 6, 6, 6];
const PEGASUS_H_OFFSETS: [usize; 12] = [6, 6, 6, 6, 2, 2, 2, 2, 10, 10, 10, 10];

/// Pegasus fabric built from its segment picture: qubit (u, w, k, z) is a segment of
/// length 12 on line 12w + k, vertical when u = 0, starting at 12z plus a
/// per-line offset. Crossing perpendicular segments are coupled, as are
/// consecutive segments on one line and the pairs k = 2t, 2t + 1 sharing (u, w, z).
/// Segments crossing nothing are left out, giving 24m(m−1) − 8(m−1) qubits.
pub fn pegasus(m: usize) -> Result<HardwareGraph> {
    if m < 2 {
        return Err(Error::Validation("pegasus size must be at least 2".into()));
    }
    let zn = m - 1;
    let id = |u: usize, w: usize, k: usize, z: usize| ((u * m + w) * 12 + k) * zn + z;
    let n = 24 * m * zn;
    let mut edges = vec![];
    let mut crossed = vec![false; n];
    for u in 0..2 {
        for w in 0..m {
            for k in 0..12 {
                for z in 0..zn {
                    if z + 1 < zn {
                        edges.push((id(u, w, k, z), id(u, w, k, z + 1)));
                    }
                    if k % 2 == 0 {
                        edges.push((id(u, w, k, z), id(u, w, k + 1, z)));
                    }
                }
            }
        }
    }
    // vertical (0, w, k, z) at x = 12w + k spanning y in [12z + ov, 12z + ov + 12)
    for w in 0..m {
        for k in 0..12 {
            let x = 12 * w + k;
            for z in 0..zn {
                let y0 = 12 * z + PEGASUS_V_OFFSETS[k];
                for y in y0..y0 + 12 {
                    let (hw, hk) = (y / 12, y % 12);
                    if hw >= m {
                        continue;
                    }
                    let oh = PEGASUS_H_OFFSETS[hk];
                    if x < oh {
                        continue;
                    }
                    let hz = (x - oh) / 12;
                    if hz < zn {
                        let (a, b) = (id(0, w, k, z), id(1, hw, hk, hz));
                        crossed[a] = true;
                        crossed[b] = true;
                        edges.push((a, b));
                    }
                }
            }
        }
    }
    // segments that cross nothing hang off the fabric edge; drop them and relabel
    let mut relabel = vec![usize::MAX; n];
    let mut kept = 0;
    for q in 0..n {
        if crossed[q] {
            relabel[q] = kept;
            kept += 1;
        }
    }
    let edges = edges
        .into_iter()
        .filter(|&(a, b)| crossed[a] && crossed[b])
        .map(|(a, b)| (relabel[a], relabel[b]));
    Ok(HardwareGraph::from_edges(Family::Pegasus, m, kept, edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chimera_counts() {
        let c1 = chimera(1).unwrap();
        assert_eq!((c1.n_qubits(), c1.edge_count()), (8, 16));
        assert!((0..8).all(|q| c1.degree(q) == 4));
        let c2 = chimera(2).unwrap();
        assert_eq!(c2.n_qubits(), 32);
        // 4 cells * 16 + 2 * 2 * 4 inter-cell couplers
        assert_eq!(c2.edge_count(), 64 + 16);
        let c3 = chimera(3).unwrap();
        // centre cell qubits touch a cell on both sides
        let centre = (4 * 2) * 4;
        assert!((centre..centre + 8).all(|q| c3.degree(q) == 6));
        assert_eq!(c3.max_degree(), 6);
    }

    fn connected(g: &HardwareGraph) -> bool {
        let mut seen = vec![false; g.n_qubits()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(q) = stack.pop() {
            for &r in g.neighbors(q) {
                if !seen[r] {
                    seen[r] = true;
                    stack.push(r);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    #[test]
    fn pegasus_counts_and_degree() {
        for m in 2..=6 {
            let p = pegasus(m).unwrap();
            assert_eq!(p.n_qubits(), qubit_count(Family::Pegasus, m));
            assert!(connected(&p), "m={m}");
            for q in 0..p.n_qubits() {
                assert!(p.neighbors(q).iter().all(|&r| p.has_edge(r, q) && r != q));
            }
            // a segment only has both line neighbours once a line holds three segments
            let want = if m >= 4 { 15 } else if m == 3 { 14 } else { 13 };
            assert_eq!(p.max_degree(), want, "m={m}");
        }
        assert_eq!(pegasus(4).unwrap(), pegasus(4).unwrap());
        // the 16-size production fabric has 5640 qubits
        assert_eq!(qubit_count(Family::Pegasus, 16), 5640);
        assert_eq!(pegasus(16).unwrap().n_qubits(), 5640);
    }
}

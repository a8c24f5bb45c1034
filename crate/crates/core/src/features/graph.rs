//! Matrices of an Ising graph and the spectral / path metrics computed on them.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::Result;
use crate::linalg::{sym_eigenvalues, Matrix};
use crate::qubo::IsingModel;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub source: String,
}

impl SpectralSummary {
    pub fn min(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.eigenvalues.last().copied()
    }

    /// Tolerance for treating eigenvalues as equal or as zero.
    pub fn tol(&self) -> f64 {
        let scale = self.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        1e-8 * scale.max(f64::MIN_POSITIVE)
    }
}

/// Eigenvalues of a symmetric matrix; asymmetric input is a validation error.
pub fn symmetric_eigenvalues(m: &Matrix, source: &str) -> Result<SpectralSummary> {
    Ok(SpectralSummary { eigenvalues: sym_eigenvalues(m)?, source: source.to_string() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingGraphMatrices {
    pub j: Matrix,
    pub d_j: Matrix,
    pub l: Matrix,
    pub a: Matrix,
    pub d_a: Matrix,
    pub l_a: Matrix,
    pub a_n: Matrix,
    pub l_n: Matrix,
    pub b: Vec<f64>,
}

/// D_J holds the row sums of J. Nodes without neighbours get zero rows in the
/// normalized forms.
pub fn ising_graph_matrices(m: &IsingModel) -> IsingGraphMatrices {
    let n = m.n();
    let j = m.j.clone();
    let mut a = Matrix::square(n);
    let mut d_j = Matrix::square(n);
    let mut d_a = Matrix::square(n);
    for i in 0..n {
        let mut wsum = 0.0;
        let mut deg = 0.0;
        for k in 0..n {
            let v = j[(i, k)];
            if i != k && v != 0.0 {
                a[(i, k)] = 1.0;
                wsum += v;
                deg += 1.0;
            }
        }
        d_j[(i, i)] = wsum;
        d_a[(i, i)] = deg;
    }
    let mut l = Matrix::square(n);
    let mut l_a = Matrix::square(n);
    let mut a_n = Matrix::square(n);
    let mut l_n = Matrix::square(n);
    let inv_sqrt: Vec<f64> = (0..n).map(|i| if d_a[(i, i)] > 0.0 { 1.0 / d_a[(i, i)].sqrt() } else { 0.0 }).collect();
    for i in 0..n {
        for k in 0..n {
            l[(i, k)] = d_j[(i, k)] - j[(i, k)];
            l_a[(i, k)] = d_a[(i, k)] - a[(i, k)];
            a_n[(i, k)] = inv_sqrt[i] * a[(i, k)] * inv_sqrt[k];
            l_n[(i, k)] = inv_sqrt[i] * l_a[(i, k)] * inv_sqrt[k];
        }
    }
    IsingGraphMatrices { j, d_j, l, a, d_a, l_a, a_n, l_n, b: m.b.clone() }
}

/// Longest shortest path using |weight| as edge length over the nonzero
/// off-diagonal entries. None when the graph is disconnected.
pub fn diameter(w: &Matrix) -> Option<f64> {
    let n = w.rows();
    let adj: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| (0..n).filter(|&k| k != i && w[(i, k)] != 0.0).map(|k| (k, w[(i, k)].abs())).collect())
        .collect();
    let mut best = 0.0f64;
    let mut dist = vec![f64::INFINITY; n];
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        dist[s] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((Ord64(0.0), s)));
        while let Some(Reverse((Ord64(d), q))) = heap.pop() {
            if d > dist[q] {
                continue;
            }
            for &(r, len) in &adj[q] {
                let nd = d + len;
                if nd < dist[r] {
                    dist[r] = nd;
                    heap.push(Reverse((Ord64(nd), r)));
                }
            }
        }
        for &d in &dist {
            if d.is_infinite() {
                return None;
            }
            best = best.max(d);
        }
    }
    Some(best)
}

#[derive(PartialEq, PartialOrd)]
struct Ord64(f64);
impl Eq for Ord64 {}
impl Ord for Ord64 {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjacencyMetrics {
    pub radius: f64,
    pub diameter: Option<f64>,
    /// |λ_max − λ_second|; None for a single node.
    pub spectral_gap: Option<f64>,
}

pub fn adjacency_metrics(w: &Matrix, spec: &SpectralSummary) -> AdjacencyMetrics {
    let ev = &spec.eigenvalues;
    let radius = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let spectral_gap = (ev.len() >= 2).then(|| (ev[ev.len() - 1] - ev[ev.len() - 2]).abs());
    AdjacencyMetrics { radius, diameter: diameter(w), spectral_gap }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianMetrics {
    /// Second smallest eigenvalue.
    pub connectivity: Option<f64>,
    /// Smallest eigenvalue that is not zero within tolerance.
    pub spectral_gap: Option<f64>,
    /// Multiplicity of the zero eigenvalue.
    pub connected_components: usize,
}

/// Zero is judged with tolerance 1e-8·‖L‖ (largest |eigenvalue|).
pub fn laplacian_metrics(spec: &SpectralSummary) -> LaplacianMetrics {
    let ev = &spec.eigenvalues;
    let tol = spec.tol();
    LaplacianMetrics {
        connectivity: ev.get(1).copied(),
        spectral_gap: ev.iter().copied().find(|v| v.abs() > tol),
        connected_components: ev.iter().filter(|v| v.abs() <= tol).count(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphMetrics {
    pub adjacency: AdjacencyMetrics,
    pub laplacian: LaplacianMetrics,
}

/// Metrics of the graph whose weighted adjacency is `w`, using L = D − W.
pub fn graph_metrics(w: &Matrix) -> Result<GraphMetrics> {
    let n = w.rows();
    let mut lap = Matrix::square(n);
    for i in 0..n {
        let mut s = 0.0;
        for k in 0..n {
            if k != i {
                s += w[(i, k)];
                lap[(i, k)] = -w[(i, k)];
            }
        }
        lap[(i, i)] = s;
    }
    let adj = adjacency_metrics(w, &symmetric_eigenvalues(w, "adjacency")?);
    let laplacian = laplacian_metrics(&symmetric_eigenvalues(&lap, "laplacian")?);
    Ok(GraphMetrics { adjacency: adj, laplacian })
}

//! The ten QUBO formulations.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::qubo::{apply_equality_penalty, LinearConstraint, ProblemClass, QuboInstance, Sense, SizeClass};

use super::graph::ProblemGraph;

/// Identity fields shared by every generated instance.
#[derive(Debug, Clone)]
pub struct Meta {
    pub instance_id: String,
    pub structure: String,
    pub size_class: SizeClass,
}

impl Meta {
    pub fn new(id: impl Into<String>, structure: impl Into<String>, size_class: SizeClass) -> Self {
        Meta {
            instance_id: id.into(),
            structure: structure.into(),
            size_class,
        }
    }

    pub fn anon() -> Self {
        Meta::new("anon", "custom", SizeClass::Small)
    }
}

fn build(meta: &Meta, class: ProblemClass, q: Matrix, offset: f64, penalty: Option<f64>) -> Result<QuboInstance> {
    QuboInstance::new(
        meta.instance_id.clone(),
        class,
        meta.structure.clone(),
        meta.size_class,
        q,
        offset,
        penalty,
    )
}

fn pair_constraint(n: usize, i: usize, j: usize, sense: Sense) -> LinearConstraint {
    let mut coeffs = vec![0.0; n];
    coeffs[i] = 1.0;
    coeffs[j] = 1.0;
    LinearConstraint { coeffs, sense, rhs: 1.0 }
}

/// min −Σ_E (xᵢ + xⱼ − 2xᵢxⱼ).
pub fn max_cut(g: &ProblemGraph, meta: &Meta) -> Result<QuboInstance> {
    let n = g.n();
    let mut q = Matrix::square(n);
    for (i, j) in g.edges() {
        q[(i, i)] -= 1.0;
        q[(j, j)] -= 1.0;
        q[(i, j)] += 1.0;
        q[(j, i)] += 1.0;
    }
    build(meta, ProblemClass::MaxCut, q, 0.0, None)
}

fn independent_set_matrix(g: &ProblemGraph, a: f64, b_pen: f64) -> Matrix {
    let n = g.n();
    let mut q = Matrix::square(n);
    for i in 0..n {
        q[(i, i)] = -a;
    }
    for (i, j) in g.edges() {
        q[(i, j)] += b_pen / 2.0;
        q[(j, i)] += b_pen / 2.0;
    }
    q
}

/// min −aΣxᵢ + b Σ_E xᵢxⱼ.
pub fn maximum_independent_set(g: &ProblemGraph, a: f64, b_pen: f64, meta: &Meta) -> Result<QuboInstance> {
    if !(a > 0.0 && b_pen > a) {
        return Err(Error::Validation(format!("need 0 < a < b, got a={a}, b={b_pen}")));
    }
    let n = g.n();
    let cons = g.edges().into_iter().map(|(i, j)| pair_constraint(n, i, j, Sense::Le)).collect();
    Ok(build(meta, ProblemClass::MaximumIndependentSet, independent_set_matrix(g, a, b_pen), 0.0, Some(b_pen))?
        .with_constraints(cons, Some(vec![0; n])))
}

/// min Σxᵢ + p Σ_E (1 − xᵢ − xⱼ + xᵢxⱼ).
pub fn minimum_vertex_cover(g: &ProblemGraph, p: f64, meta: &Meta) -> Result<QuboInstance> {
    if !(p > 0.0) {
        return Err(Error::Validation(format!("penalty must be positive, got {p}")));
    }
    let n = g.n();
    let mut q = Matrix::square(n);
    for i in 0..n {
        q[(i, i)] = 1.0;
    }
    let edges = g.edges();
    for &(i, j) in &edges {
        q[(i, i)] -= p;
        q[(j, j)] -= p;
        q[(i, j)] += p / 2.0;
        q[(j, i)] += p / 2.0;
    }
    let offset = p * edges.len() as f64;
    let cons = edges.iter().map(|&(i, j)| pair_constraint(n, i, j, Sense::Ge)).collect();
    Ok(build(meta, ProblemClass::MinimumVertexCover, q, offset, Some(p))?.with_constraints(cons, Some(vec![1; n])))
}

/// Independent set on the complement graph, a = 1 and b = 2n.
pub fn max_clique(g: &ProblemGraph, meta: &Meta) -> Result<QuboInstance> {
    let n = g.n();
    let comp = g.complement();
    let b_pen = 2.0 * n as f64;
    let cons = comp.edges().into_iter().map(|(i, j)| pair_constraint(n, i, j, Sense::Le)).collect();
    Ok(build(meta, ProblemClass::MaxClique, independent_set_matrix(&comp, 1.0, b_pen), 0.0, Some(b_pen))?
        .with_constraints(cons, Some(vec![0; n])))
}

/// Q = −(A − ddᵀ/2|E|)/|V|.
pub fn community_detection(g: &ProblemGraph, meta: &Meta) -> Result<QuboInstance> {
    let n = g.n();
    let m2 = 2.0 * g.edge_count() as f64;
    if m2 == 0.0 {
        return Err(Error::Validation("community detection needs at least one edge".into()));
    }
    let d: Vec<f64> = (0..n).map(|i| g.degree(i) as f64).collect();
    let mut q = Matrix::square(n);
    for i in 0..n {
        for j in 0..n {
            let a = if g.has(i, j) { 1.0 } else { 0.0 };
            q[(i, j)] = -(a - d[i] * d[j] / m2) / n as f64;
        }
    }
    build(meta, ProblemClass::CommunityDetection, q, 0.0, None)
}

/// (Σ_{xᵢ=1} zᵢ − Σ_{xᵢ=0} zᵢ)² with the constant S² as offset.
pub fn number_partitioning(z: &[f64], meta: &Meta) -> Result<QuboInstance> {
    if z.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Validation("number partitioning values must be positive".into()));
    }
    let n = z.len();
    let s: f64 = z.iter().sum();
    let mut q = Matrix::square(n);
    for i in 0..n {
        for j in 0..n {
            q[(i, j)] = if i == j { 4.0 * z[i] * z[i] - 4.0 * s * z[i] } else { 4.0 * z[i] * z[j] };
        }
    }
    build(meta, ProblemClass::NumberPartitioning, q, s * s, None)
}

/// −Σcᵢxᵢ + p Σ_{i<k} xᵢxₖ Σⱼ aⱼᵢaⱼₖ, where rows of `a` are the packing
/// constraints Σᵢ aⱼᵢxᵢ ≤ 1.
pub fn set_packing(c: &[f64], a: &Matrix, p: f64, meta: &Meta) -> Result<QuboInstance> {
    let n = c.len();
    if a.cols() != n {
        return Err(Error::Structural(format!("A has {} columns for {n} sets", a.cols())));
    }
    if !(p > 0.0) {
        return Err(Error::Validation(format!("penalty must be positive, got {p}")));
    }
    let mut q = Matrix::square(n);
    for i in 0..n {
        q[(i, i)] = -c[i];
    }
    for r in 0..a.rows() {
        let row = a.row(r);
        for i in 0..n {
            for k in (i + 1)..n {
                let w = row[i] * row[k];
                if w != 0.0 {
                    q[(i, k)] += p * w / 2.0;
                    q[(k, i)] += p * w / 2.0;
                }
            }
        }
    }
    let cons = (0..a.rows())
        .map(|r| LinearConstraint {
            coeffs: a.row(r).to_vec(),
            sense: Sense::Le,
            rhs: 1.0,
        })
        .collect();
    Ok(build(meta, ProblemClass::SetPacking, q, 0.0, Some(p))?.with_constraints(cons, Some(vec![0; n])))
}

/// (⌊b/2⌋, ⌊b/4⌋, ⌊b/8⌋, b − Σ).
pub fn knapsack_slack(b: f64) -> [f64; 4] {
    let t1 = (b / 2.0).floor();
    let t2 = (b / 4.0).floor();
    let t3 = (b / 8.0).floor();
    [t1, t2, t3, b - t1 - t2 - t3]
}

/// −xᵀRx + p(Σcᵢxᵢ + Σ c_t t − b)² over the projects followed by four slacks.
pub fn quadratic_knapsack(r: &Matrix, c: &[f64], b: f64, p: f64, meta: &Meta) -> Result<QuboInstance> {
    let np = c.len();
    if !r.is_square() || r.rows() != np {
        return Err(Error::Structural("revenue matrix does not match cost vector".into()));
    }
    if !r.is_symmetric(0.0) {
        return Err(Error::Validation("revenue matrix must be symmetric".into()));
    }
    let n = np + 4;
    let mut obj = Matrix::square(n);
    for i in 0..np {
        for j in 0..np {
            obj[(i, j)] = -r[(i, j)];
        }
    }
    let slack = knapsack_slack(b);
    let row: Vec<f64> = c.iter().copied().chain(slack).collect();
    let a = Matrix::from_rows(&[row])?;
    let (q, offset) = apply_equality_penalty(&obj, &a, &[b], p)?;
    let mut coeffs = c.to_vec();
    coeffs.extend([0.0; 4]);
    let cons = vec![LinearConstraint { coeffs, sense: Sense::Le, rhs: b }];
    let mut witness = vec![0u8; np];
    witness.extend([1; 4]);
    Ok(build(meta, ProblemClass::QuadraticKnapsack, q, offset, Some(p))?.with_constraints(cons, Some(witness)))
}

pub type Grid = [[u8; 4]; 4];

fn block(r: usize, c: usize) -> usize {
    (r / 2) * 2 + c / 2
}

pub fn is_valid_solution(g: &Grid) -> bool {
    for k in 1..=4u8 {
        for i in 0..4 {
            if (0..4).filter(|&j| g[i][j] == k).count() != 1 || (0..4).filter(|&j| g[j][i] == k).count() != 1 {
                return false;
            }
        }
        for b in 0..4 {
            let cnt = (0..16).filter(|&x| block(x / 4, x % 4) == b && g[x / 4][x % 4] == k).count();
            if cnt != 1 {
                return false;
            }
        }
    }
    true
}

/// Candidate (cell, value) pairs for empty cells, consistent with fixed cells.
pub fn sudoku_candidates(fixed: &Grid) -> Vec<((usize, usize), u8)> {
    let mut out = vec![];
    for r in 0..4 {
        for c in 0..4 {
            if fixed[r][c] != 0 {
                continue;
            }
            for k in 1..=4u8 {
                let clash = (0..4).any(|j| fixed[r][j] == k || fixed[j][c] == k)
                    || (0..16).any(|x| block(x / 4, x % 4) == block(r, c) && fixed[x / 4][x % 4] == k);
                if !clash {
                    out.push(((r, c), k));
                }
            }
        }
    }
    out
}

fn complete(g: &mut Grid, pos: usize) -> bool {
    if pos == 16 {
        return is_valid_solution(g);
    }
    let (r, c) = (pos / 4, pos % 4);
    if g[r][c] != 0 {
        return complete(g, pos + 1);
    }
    for k in 1..=4u8 {
        let clash = (0..4).any(|j| g[r][j] == k || g[j][c] == k)
            || (0..16).any(|x| block(x / 4, x % 4) == block(r, c) && g[x / 4][x % 4] == k);
        if !clash {
            g[r][c] = k;
            if complete(g, pos + 1) {
                return true;
            }
            g[r][c] = 0;
        }
    }
    false
}

/// (Ax − 1)ᵀ(Ax − 1) over candidate variables; rows are the cell, row, column
/// and block constraints that involve at least one variable.
pub fn sudoku4(fixed: &Grid, meta: &Meta) -> Result<QuboInstance> {
    let mut solved = *fixed;
    if !complete(&mut solved, 0) {
        return Err(Error::Generation("fixed cells admit no completion".into()));
    }
    let vars = sudoku_candidates(fixed);
    let n = vars.len();
    if n == 0 {
        return Err(Error::Generation("grid has no free cells".into()));
    }
    let mut rows: Vec<Vec<f64>> = vec![];
    let mut push = |pred: &dyn Fn(&((usize, usize), u8)) -> bool| {
        let row: Vec<f64> = vars.iter().map(|v| if pred(v) { 1.0 } else { 0.0 }).collect();
        if row.iter().any(|v| *v != 0.0) {
            rows.push(row);
        }
    };
    for r in 0..4 {
        for c in 0..4 {
            push(&|v| v.0 == (r, c));
        }
    }
    for k in 1..=4u8 {
        for i in 0..4 {
            push(&|v| v.1 == k && v.0 .0 == i);
            push(&|v| v.1 == k && v.0 .1 == i);
            push(&|v| v.1 == k && block(v.0 .0, v.0 .1) == i);
        }
    }
    let a = Matrix::from_rows(&rows)?;
    let ones = vec![1.0; rows.len()];
    let (q, offset) = apply_equality_penalty(&Matrix::square(n), &a, &ones, 1.0)?;
    let witness: Vec<u8> = vars.iter().map(|&((r, c), k)| u8::from(solved[r][c] == k)).collect();
    let cons = rows
        .into_iter()
        .map(|coeffs| LinearConstraint { coeffs, sense: Sense::Eq, rhs: 1.0 })
        .collect();
    Ok(build(meta, ProblemClass::Sudoku, q, offset, Some(1.0))?.with_constraints(cons, Some(witness)))
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
    }
}

/// Qᵢⱼ = Corr(fᵢ, fⱼ), Qᵢᵢ = −Corr(fᵢ, t), plus (Σxᵢ − k)².
pub fn feature_selection(features: &[Vec<f64>], target: &[f64], k: usize, meta: &Meta) -> Result<QuboInstance> {
    let n = features.len();
    if n == 0 || k > n {
        return Err(Error::Validation(format!("cannot select {k} of {n} features")));
    }
    if features.iter().any(|f| f.len() != target.len()) {
        return Err(Error::Structural("feature columns and target differ in length".into()));
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(target) || features.iter().any(|f| constant(f)) {
        return Err(Error::Validation("feature selection needs non-constant columns".into()));
    }
    let kf = k as f64;
    let mut q = Matrix::square(n);
    for i in 0..n {
        q[(i, i)] = -pearson(&features[i], target) + 1.0 - 2.0 * kf;
        for j in (i + 1)..n {
            let v = pearson(&features[i], &features[j]) + 1.0;
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    let cons = vec![LinearConstraint { coeffs: vec![1.0; n], sense: Sense::Eq, rhs: kf }];
    let witness = (0..n).map(|i| u8::from(i < k)).collect();
    Ok(build(meta, ProblemClass::FeatureSelection, q, kf * kf, Some(1.0))?.with_constraints(cons, Some(witness)))
}

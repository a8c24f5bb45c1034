//! QUBO and Ising representations, conversions, penalty folding and cost
//! evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{compensated_sum, Matrix};

/// Relative tolerance used for cost equality.
pub const REL_TOL: f64 = 1e-9;
pub const ABS_FLOOR: f64 = 1e-12;

pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()) + ABS_FLOOR
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemClass {
    MaxCut,
    MaximumIndependentSet,
    MinimumVertexCover,
    MaxClique,
    CommunityDetection,
    NumberPartitioning,
    SetPacking,
    QuadraticKnapsack,
    Sudoku,
    FeatureSelection,
}

impl ProblemClass {
    pub const ALL: [ProblemClass; 10] = [
        ProblemClass::MaxCut,
        ProblemClass::MaximumIndependentSet,
        ProblemClass::MinimumVertexCover,
        ProblemClass::MaxClique,
        ProblemClass::CommunityDetection,
        ProblemClass::NumberPartitioning,
        ProblemClass::SetPacking,
        ProblemClass::QuadraticKnapsack,
        ProblemClass::Sudoku,
        ProblemClass::FeatureSelection,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ProblemClass::MaxCut => "max_cut",
            ProblemClass::MaximumIndependentSet => "maximum_independent_set",
            ProblemClass::MinimumVertexCover => "minimum_vertex_cover",
            ProblemClass::MaxClique => "max_clique",
            ProblemClass::CommunityDetection => "community_detection",
            ProblemClass::NumberPartitioning => "number_partitioning",
            ProblemClass::SetPacking => "set_packing",
            ProblemClass::QuadraticKnapsack => "quadratic_knapsack",
            ProblemClass::Sudoku => "sudoku",
            ProblemClass::FeatureSelection => "feature_selection",
        }
    }

    /// Classes whose formulation folds constraints into a penalty term.
    pub fn is_constrained(&self) -> bool {
        !matches!(
            self,
            ProblemClass::MaxCut | ProblemClass::CommunityDetection | ProblemClass::NumberPartitioning
        )
    }

    pub fn is_graph_problem(&self) -> bool {
        matches!(
            self,
            ProblemClass::MaxCut
                | ProblemClass::MaximumIndependentSet
                | ProblemClass::MinimumVertexCover
                | ProblemClass::MaxClique
                | ProblemClass::CommunityDetection
        )
    }
}

impl fmt::Display for ProblemClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        let alias = match key.as_str() {
            "mis" => "maximum_independent_set",
            "mvc" => "minimum_vertex_cover",
            "qk" | "knapsack" => "quadratic_knapsack",
            "np" => "number_partitioning",
            "sp" => "set_packing",
            "fs" => "feature_selection",
            "cd" => "community_detection",
            other => other,
        };
        ProblemClass::ALL
            .iter()
            .find(|c| c.name() == alias)
            .copied()
            .ok_or_else(|| Error::Validation(format!("unknown problem class `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeClass {
    Small,
    Large,
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SizeClass::Small => "small",
            SizeClass::Large => "large",
        })
    }
}

impl FromStr for SizeClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(SizeClass::Small),
            "large" => Ok(SizeClass::Large),
            _ => Err(Error::Validation(format!("unknown size class `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// One linear constraint of the original (unpenalized) problem, used as the
/// feasibility predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn satisfied(&self, x: &[u8]) -> bool {
        let lhs: f64 = self
            .coeffs
            .iter()
            .zip(x)
            .map(|(a, &b)| if b == 1 { *a } else { 0.0 })
            .sum();
        let tol = 1e-9 * self.rhs.abs().max(1.0);
        match self.sense {
            Sense::Le => lhs <= self.rhs + tol,
            Sense::Eq => (lhs - self.rhs).abs() <= tol,
            Sense::Ge => lhs >= self.rhs - tol,
        }
    }
}

/// A binary quadratic model, stored in canonical symmetric form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboInstance {
    pub instance_id: String,
    pub problem_class: ProblemClass,
    pub structure: String,
    pub size_class: SizeClass,
    q: Matrix,
    pub offset: f64,
    pub penalty: Option<f64>,
    pub constraints: Vec<LinearConstraint>,
    pub witness: Option<Vec<u8>>,
}

impl QuboInstance {
    /// Accepts a symmetric or upper-triangular matrix; the latter is symmetrized.
    pub fn new(
        instance_id: impl Into<String>,
        problem_class: ProblemClass,
        structure: impl Into<String>,
        size_class: SizeClass,
        q: Matrix,
        offset: f64,
        penalty: Option<f64>,
    ) -> Result<Self> {
        let q = canonical(q)?;
        if let Some(p) = penalty {
            if !(p > 0.0) {
                return Err(Error::Validation(format!("penalty must be positive, got {p}")));
            }
        }
        if penalty.is_some() != problem_class.is_constrained() {
            return Err(Error::Validation(format!(
                "penalty presence does not match class {problem_class}"
            )));
        }
        Ok(QuboInstance {
            instance_id: instance_id.into(),
            problem_class,
            structure: structure.into(),
            size_class,
            q,
            offset,
            penalty,
            constraints: vec![],
            witness: None,
        })
    }

    pub fn n(&self) -> usize {
        self.q.rows()
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    /// y = xᵀQx + offset.
    pub fn cost(&self, x: &[u8]) -> Result<f64> {
        Ok(evaluate(&self.q, x)? + self.offset)
    }

    /// `None` when the instance carries no constraints.
    pub fn is_feasible(&self, x: &[u8]) -> Option<bool> {
        if self.constraints.is_empty() {
            None
        } else {
            Some(self.constraints.iter().all(|c| c.satisfied(x)))
        }
    }

    pub fn to_ising(&self) -> IsingModel {
        qubo_to_ising_with_offset(&self.q, self.offset)
    }

    pub fn with_constraints(mut self, c: Vec<LinearConstraint>, witness: Option<Vec<u8>>) -> Self {
        self.constraints = c;
        self.witness = witness;
        self
    }
}

fn canonical(q: Matrix) -> Result<Matrix> {
    if !q.is_square() {
        return Err(Error::Structural(format!("Q is {}x{}, not square", q.rows(), q.cols())));
    }
    if q.is_symmetric(0.0) {
        return Ok(q);
    }
    if q.is_upper_triangular() {
        let mut s = q.clone();
        for i in 0..q.rows() {
            for j in (i + 1)..q.cols() {
                let v = 0.5 * q[(i, j)];
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        return Ok(s);
    }
    Err(Error::Structural("Q must be symmetric or upper triangular".into()))
}

/// xᵀQx.
pub fn evaluate(q: &Matrix, x: &[u8]) -> Result<f64> {
    if !q.is_square() || q.rows() != x.len() {
        return Err(Error::Structural(format!(
            "assignment of length {} against {}x{} matrix",
            x.len(),
            q.rows(),
            q.cols()
        )));
    }
    let on: Vec<usize> = (0..x.len()).filter(|&i| x[i] == 1).collect();
    let mut y = 0.0;
    for &i in &on {
        let row = q.row(i);
        for &j in &on {
            y += row[j];
        }
    }
    Ok(y)
}

/// Spin model sᵀJs + bᵀs + c with J symmetric and zero on the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    pub j: Matrix,
    pub b: Vec<f64>,
    pub c: f64,
}

impl IsingModel {
    pub fn new(j: Matrix, b: Vec<f64>, c: f64) -> Result<Self> {
        if !j.is_square() || j.rows() != b.len() {
            return Err(Error::Structural("coupling/bias dimension mismatch".into()));
        }
        if !j.is_symmetric(0.0) || (0..b.len()).any(|i| j[(i, i)] != 0.0) {
            return Err(Error::Validation("J must be symmetric with zero diagonal".into()));
        }
        Ok(IsingModel { j, b, c })
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    /// sᵀJs + bᵀs, without the constant.
    pub fn lambda(&self, s: &[i8]) -> f64 {
        let n = self.n();
        let mut e = 0.0;
        for i in 0..n {
            let row = self.j.row(i);
            let mut f = 0.0;
            for k in 0..n {
                f += row[k] * s[k] as f64;
            }
            e += s[i] as f64 * (f + self.b[i]);
        }
        e
    }

    pub fn energy(&self, s: &[i8]) -> f64 {
        self.lambda(s) + self.c
    }

    /// Undirected edges (i < k) with nonzero coupling.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = vec![];
        for i in 0..n {
            for k in (i + 1)..n {
                if self.j[(i, k)] != 0.0 {
                    out.push((i, k));
                }
            }
        }
        out
    }

    pub fn scaled(&self, a: f64) -> IsingModel {
        IsingModel {
            j: self.j.scale(a),
            b: self.b.iter().map(|v| v * a).collect(),
            c: self.c * a,
        }
    }
}

/// Binary 0 maps to spin +1: x = (1 − s)/2.
pub fn bits_to_spins(x: &[u8]) -> Vec<i8> {
    x.iter().map(|&b| if b == 1 { -1 } else { 1 }).collect()
}

pub fn spins_to_bits(s: &[i8]) -> Vec<u8> {
    s.iter().map(|&v| if v < 0 { 1 } else { 0 }).collect()
}

/// Ising form of xᵀQx (constant included in `c`).
pub fn qubo_to_ising(q: &Matrix) -> IsingModel {
    qubo_to_ising_with_offset(q, 0.0)
}

fn qubo_to_ising_with_offset(q: &Matrix, offset: f64) -> IsingModel {
    let q = if q.is_symmetric(0.0) { q.clone() } else { q.symmetrized() };
    let n = q.rows();
    let mut j = Matrix::square(n);
    let mut b = vec![0.0; n];
    for i in 0..n {
        for k in 0..n {
            if k != i {
                j[(i, k)] = q[(i, k)] / 4.0;
            }
        }
        // halving is exact, so each b_i and c is rounded once
        b[i] = -compensated_sum(q.row(i).iter().copied()) / 2.0;
    }
    let c = compensated_sum(std::iter::once(offset).chain((0..n).flat_map(|i| (0..n).map(move |k| (i, k))).map(|(i, k)| {
        if i == k {
            q[(i, i)] / 2.0
        } else {
            q[(i, k)] / 4.0
        }
    })));
    IsingModel { j, b, c }
}

/// Inverse mapping; returns (symmetric Q, offset).
pub fn ising_to_qubo(m: &IsingModel) -> (Matrix, f64) {
    let n = m.n();
    let mut q = Matrix::square(n);
    let mut offset = m.c;
    for i in 0..n {
        let mut row = 0.0;
        for k in 0..n {
            if k != i {
                q[(i, k)] = 4.0 * m.j[(i, k)];
                row += m.j[(i, k)];
                offset += m.j[(i, k)];
            }
        }
        q[(i, i)] = -4.0 * row - 2.0 * m.b[i];
        offset += m.b[i];
    }
    (q, offset)
}

/// Folds p·(Ax − d)ᵀ(Ax − d) into a symmetric objective; returns (Q, offset).
pub fn apply_equality_penalty(
    objective: &Matrix,
    a: &Matrix,
    d: &[f64],
    p: f64,
) -> Result<(Matrix, f64)> {
    if !(p > 0.0) {
        return Err(Error::Validation(format!("penalty must be positive, got {p}")));
    }
    let n = objective.rows();
    if !objective.is_square() || a.cols() != n || a.rows() != d.len() {
        return Err(Error::Structural("penalty dimensions are inconsistent".into()));
    }
    let mut q = if objective.is_symmetric(0.0) {
        objective.clone()
    } else {
        canonical(objective.clone())?
    };
    let mut offset = 0.0;
    for r in 0..a.rows() {
        let row = a.row(r);
        let nz: Vec<usize> = (0..n).filter(|&i| row[i] != 0.0).collect();
        for &i in &nz {
            for &k in &nz {
                q[(i, k)] += p * (row[i] * row[k]);
            }
            q[(i, i)] -= 2.0 * p * d[r] * row[i];
        }
        offset += p * d[r] * d[r];
    }
    Ok((q, offset))
}

/// Turns Σ aᵢxᵢ ≤ bound into an equality over the original variables plus
/// binary slacks with the given coefficients.
pub fn expand_inequality(a: &[f64], bound: f64, slack: &[f64]) -> Result<(Vec<f64>, f64)> {
    if let Some(s) = slack.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::Validation(format!("slack coefficient {s} is not positive")));
    }
    let min_lhs: f64 = a.iter().map(|v| v.min(0.0)).sum();
    if slack.is_empty() && min_lhs < bound {
        return Err(Error::Validation(
            "inequality has a gap but no slack variables were supplied".into(),
        ));
    }
    let mut row = a.to_vec();
    row.extend_from_slice(slack);
    Ok((row, bound))
}

pub fn bits_to_string(x: &[u8]) -> String {
    x.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

pub fn bits_from_str(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::Structural(format!("invalid bit character `{c}`"))),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub bits: Vec<u8>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub solver_id: String,
    pub instance_id: String,
    pub seed: u64,
    pub hyperparameters: BTreeMap<String, serde_json::Value>,
    pub samples: Vec<Sample>,
}

impl SampleSet {
    pub fn best(&self) -> Option<&Sample> {
        self.samples.iter().min_by(|a, b| a.cost.total_cmp(&b.cost))
    }

    pub fn best_cost(&self) -> f64 {
        self.best().map_or(f64::INFINITY, |s| s.cost)
    }
}

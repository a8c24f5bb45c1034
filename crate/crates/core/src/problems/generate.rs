//! Batch instance generation from a [`GenerationSpec`].

use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{bundled_corpus, Dataset};
use super::formulations::*;
use super::graph::{generate_graph, Topology};
use super::tune::{tune_penalty, PenaltyTuneConfig};
use crate::error::{Error, Result};
use crate::io::write_instance;
use crate::linalg::Matrix;
use crate::qubo::{ProblemClass, QuboInstance, SizeClass};
use crate::seed;

pub const NP_STRUCTURES: [&str; 4] = ["uniform", "geometric", "poisson", "range"];
pub const SP_STRUCTURES: [&str; 4] = ["step", "disjoint_rows", "almost_diagonal", "random"];
pub const QK_STRUCTURES: [&str; 4] = ["diagonal", "almost_diagonal", "enlarged_diagonal", "random"];

/// Upper truncation of the geometric number-partitioning distribution.
pub const GEOMETRIC_CAP: u64 = 500;
/// Redraws allowed when building a Sudoku instance inside the size window.
const SUDOKU_TRIES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub size_class: SizeClass,
    pub n_min: usize,
    pub n_max: usize,
    pub n_rep: usize,
    pub seed: u64,
    pub classes: Vec<ProblemClass>,
    /// Feature-selection instances per variable count.
    pub fs_per_size: usize,
    /// Number of distinct solved grids, one Sudoku instance each.
    pub sudoku_grids: usize,
    /// `budget = 0` skips tuning and uses the middle of the penalty range.
    pub penalty_tuning: PenaltyTuneConfig,
    pub max_per_class: Option<usize>,
}

impl GenerationSpec {
    pub fn small(seed: u64) -> Self {
        GenerationSpec {
            size_class: SizeClass::Small,
            n_min: 27,
            n_max: 32,
            n_rep: 1,
            seed,
            classes: ProblemClass::ALL.to_vec(),
            fs_per_size: 4,
            sudoku_grids: 30,
            penalty_tuning: PenaltyTuneConfig::default(),
            max_per_class: None,
        }
    }

    pub fn large(seed: u64) -> Self {
        GenerationSpec {
            size_class: SizeClass::Large,
            n_min: 69,
            n_max: 99,
            n_rep: 5,
            fs_per_size: 5,
            sudoku_grids: 0,
            ..Self::small(seed)
        }
    }

    pub fn custom(n_min: usize, n_max: usize, n_rep: usize, seed: u64) -> Result<Self> {
        let spec = GenerationSpec {
            n_min,
            n_max,
            n_rep,
            fs_per_size: n_rep,
            ..Self::small(seed)
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_min > self.n_max {
            return Err(Error::Validation(format!("n_min {} > n_max {}", self.n_min, self.n_max)));
        }
        if self.n_min < 5 {
            return Err(Error::Validation("n_min must be at least 5 (four knapsack slacks plus a project)".into()));
        }
        if self.n_rep == 0 {
            return Err(Error::Validation("n_rep must be positive".into()));
        }
        // instance i of size n selects n/5 + i features
        if self.classes.contains(&ProblemClass::FeatureSelection) && self.n_min / 5 + self.fs_per_size > self.n_min + 1 {
            return Err(Error::Validation(format!(
                "fs_per_size {} would select more than n_min = {} features",
                self.fs_per_size, self.n_min
            )));
        }
        Ok(())
    }

    fn sizes(&self) -> std::ops::RangeInclusive<usize> {
        self.n_min..=self.n_max
    }
}

#[derive(Debug, Clone)]
enum Task {
    Graph { class: ProblemClass, topology: Topology, n: usize, rep: usize },
    Np { structure: &'static str, n: usize, rep: usize },
    Sp { structure: &'static str, n: usize, rep: usize },
    Qk { structure: &'static str, n: usize, rep: usize },
    Sudoku { grid: Grid, index: usize },
    Fs { dataset: usize, n: usize, i: usize },
}

impl Task {
    fn class(&self) -> ProblemClass {
        match self {
            Task::Graph { class, .. } => *class,
            Task::Np { .. } => ProblemClass::NumberPartitioning,
            Task::Sp { .. } => ProblemClass::SetPacking,
            Task::Qk { .. } => ProblemClass::QuadraticKnapsack,
            Task::Sudoku { .. } => ProblemClass::Sudoku,
            Task::Fs { .. } => ProblemClass::FeatureSelection,
        }
    }
}

pub fn instance_id(class: ProblemClass, size: SizeClass, structure: &str, n: usize, rep: usize) -> String {
    format!("{}_{}_{}_n{}_r{}", class.name(), size, structure, n, rep)
}

/// Generates every instance of the spec with the bundled feature-selection corpus.
pub fn generate(spec: &GenerationSpec) -> Result<Vec<QuboInstance>> {
    generate_with_datasets(spec, &bundled_corpus(seed::derive_str(spec.seed, "datasets")))
}

pub fn generate_with_datasets(spec: &GenerationSpec, datasets: &[Dataset]) -> Result<Vec<QuboInstance>> {
    spec.validate()?;
    let mut tasks = vec![];
    for &class in &spec.classes {
        let mut mine = class_tasks(spec, class, datasets)?;
        if let Some(cap) = spec.max_per_class {
            mine.truncate(cap);
        }
        tasks.extend(mine);
    }
    let out: Vec<Result<QuboInstance>> = tasks.par_iter().map(|t| run_task(spec, t, datasets)).collect();
    let out: Vec<QuboInstance> = out.into_iter().collect::<Result<_>>()?;
    for q in &out {
        if let Some(w) = &q.witness {
            if q.is_feasible(w) == Some(false) {
                return Err(Error::Generation(format!("{}: witness violates its constraints", q.instance_id)));
            }
        }
    }
    Ok(out)
}

fn class_tasks(spec: &GenerationSpec, class: ProblemClass, datasets: &[Dataset]) -> Result<Vec<Task>> {
    let mut tasks = vec![];
    let grid = |f: &mut dyn FnMut(usize, usize)| {
        for n in spec.sizes() {
            for rep in 0..spec.n_rep {
                f(n, rep);
            }
        }
    };
    match class {
        c if c.is_graph_problem() => grid(&mut |n, rep| {
            for topology in Topology::ALL {
                tasks.push(Task::Graph { class: c, topology, n, rep });
            }
        }),
        ProblemClass::NumberPartitioning => grid(&mut |n, rep| {
            tasks.extend(NP_STRUCTURES.map(|structure| Task::Np { structure, n, rep }));
        }),
        ProblemClass::SetPacking => grid(&mut |n, rep| {
            tasks.extend(SP_STRUCTURES.map(|structure| Task::Sp { structure, n, rep }));
        }),
        ProblemClass::QuadraticKnapsack => grid(&mut |n, rep| {
            tasks.extend(QK_STRUCTURES.map(|structure| Task::Qk { structure, n, rep }));
        }),
        ProblemClass::Sudoku => {
            if spec.size_class == SizeClass::Small && spec.n_min <= 64 {
                let mut rng = seed::rng(seed::derive_str(spec.seed, "sudoku_grids"));
                for (index, grid) in distinct_solved_grids(spec.sudoku_grids, &mut rng).into_iter().enumerate() {
                    tasks.push(Task::Sudoku { grid, index });
                }
            }
        }
        ProblemClass::FeatureSelection => {
            if datasets.is_empty() {
                return Err(Error::Validation("feature selection needs at least one dataset".into()));
            }
            let mut pointer = 0;
            for n in spec.sizes() {
                for i in 0..spec.fs_per_size {
                    let found = (0..datasets.len())
                        .map(|k| (pointer + k) % datasets.len())
                        .find(|&d| datasets[d].n_features() > n)
                        .ok_or_else(|| Error::Validation(format!("no dataset has more than {n} features")))?;
                    tasks.push(Task::Fs { dataset: found, n, i });
                    pointer = (found + 1) % datasets.len();
                }
            }
        }
        _ => unreachable!("graph classes handled above"),
    }
    Ok(tasks)
}

fn task_rng(spec: &GenerationSpec, label: &str) -> ChaCha8Rng {
    seed::rng(seed::derive_str(spec.seed, label))
}

fn run_task(spec: &GenerationSpec, task: &Task, datasets: &[Dataset]) -> Result<QuboInstance> {
    let size = spec.size_class;
    let class = task.class();
    match task {
        Task::Graph { topology, n, rep, .. } => {
            // One graph per (topology, n, rep), shared by all graph classes.
            let g = generate_graph(*topology, *n, seed::derive_str(spec.seed, &format!("graph/{topology}/{n}/{rep}")))?;
            let meta = Meta::new(instance_id(class, size, topology.name(), *n, *rep), topology.name(), size);
            let nf = *n as f64;
            match class {
                ProblemClass::MaxCut => max_cut(&g, &meta),
                ProblemClass::MaximumIndependentSet => maximum_independent_set(&g, 1.0, 2.0 * nf, &meta),
                ProblemClass::MinimumVertexCover => minimum_vertex_cover(&g, nf, &meta),
                ProblemClass::MaxClique => max_clique(&g, &meta),
                _ => community_detection(&g, &meta),
            }
        }
        Task::Np { structure, n, rep } => {
            let id = instance_id(class, size, structure, *n, *rep);
            let mut rng = task_rng(spec, &id);
            let z = np_values(structure, *n, &mut rng);
            number_partitioning(&z, &Meta::new(id, *structure, size))
        }
        Task::Sp { structure, n, rep } => {
            let id = instance_id(class, size, structure, *n, *rep);
            let mut rng = task_rng(spec, &id);
            let c_max = rng.random_range(10..=39u32);
            let c: Vec<f64> = (0..*n).map(|_| rng.random_range(1..=c_max) as f64).collect();
            let a = sp_matrix(structure, *n, &mut rng);
            let c_all: f64 = c.iter().sum();
            let range = ((c_all / 3.0).floor().max(1.0), c_all);
            let meta = Meta::new(id, *structure, size);
            let p = pick_penalty(spec, &meta.instance_id, range, |p| set_packing(&c, &a, p, &meta))?;
            set_packing(&c, &a, p, &meta)
        }
        Task::Qk { structure, n, rep } => {
            let id = instance_id(class, size, structure, *n, *rep);
            let mut rng = task_rng(spec, &id);
            let np = n - 4;
            let r = qk_revenue(structure, np, &mut rng);
            let c: Vec<f64> = (0..np).map(|_| rng.random_range(1..=15u32) as f64).collect();
            let total: f64 = c.iter().sum();
            // Budgets below 8 leave the first slack coefficients at zero.
            let b = loop {
                let b = rng.random_range(0.2..0.7) * total;
                if b >= 8.0 || total * 0.7 < 8.0 {
                    break b;
                }
            };
            let r_all: f64 = r.as_slice().iter().map(|v| v.abs()).sum();
            let meta = Meta::new(id, *structure, size);
            let p = pick_penalty(spec, &meta.instance_id, (1.0, r_all.max(1.0)), |p| {
                quadratic_knapsack(&r, &c, b, p, &meta)
            })?;
            quadratic_knapsack(&r, &c, b, p, &meta)
        }
        Task::Sudoku { grid, index } => {
            let structure = format!("grid{index:02}");
            let mut rng = task_rng(spec, &format!("sudoku/{index}"));
            let fixed = remove_cells(grid, spec.n_min, spec.n_max, &mut rng)?;
            let n = sudoku_candidates(&fixed).len();
            let meta = Meta::new(instance_id(class, size, &structure, n, 0), structure, size);
            sudoku4(&fixed, &meta)
        }
        Task::Fs { dataset, n, i } => {
            let d = &datasets[*dataset];
            let id = instance_id(class, size, &d.name, *n, *i);
            let mut rng = task_rng(spec, &id);
            let reduced = d.reduce(*n, &mut rng)?;
            let k = n / 5 + i;
            feature_selection(&reduced.features, &reduced.target, k, &Meta::new(id, d.name.clone(), size))
        }
    }
}

fn pick_penalty(
    spec: &GenerationSpec,
    id: &str,
    range: (f64, f64),
    build: impl Fn(f64) -> Result<QuboInstance>,
) -> Result<f64> {
    let mid = 0.5 * (range.0 + range.1);
    if spec.penalty_tuning.budget == 0 {
        return Ok(mid);
    }
    match tune_penalty(build, range, &spec.penalty_tuning, seed::derive_str(spec.seed, &format!("tune/{id}"))) {
        Ok(out) => Ok(out.p),
        Err(Error::Tuning { midpoint }) => {
            warn!("{id}: no feasible sample during penalty tuning, using {midpoint}");
            Ok(midpoint)
        }
        Err(e) => Err(e),
    }
}

pub fn np_values(structure: &str, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    match structure {
        "uniform" => (0..n).map(|_| rng.random_range(1..=99u32) as f64).collect(),
        "geometric" => {
            // Number of trials up to the first success, so support starts at 1.
            let geo = Geometric::new(0.02).expect("valid probability");
            (0..n)
                .map(|_| loop {
                    let v = geo.sample(rng) + 1;
                    if v <= GEOMETRIC_CAP {
                        break v as f64;
                    }
                })
                .collect()
        }
        "poisson" => {
            let poi = Poisson::new(50.0).expect("valid mean");
            (0..n)
                .map(|_| loop {
                    let v: f64 = poi.sample(rng);
                    if v >= 1.0 {
                        break v;
                    }
                })
                .collect()
        }
        _ => (1..=n).map(|v| v as f64).collect(),
    }
}

pub fn sp_matrix(structure: &str, n: usize, rng: &mut impl Rng) -> Matrix {
    match structure {
        "step" => {
            let mut a = Matrix::zeros(n - 1, n);
            for i in 0..n - 1 {
                a[(i, i)] = 1.0;
                a[(i, i + 1)] = 1.0;
            }
            a
        }
        "disjoint_rows" => {
            let m = rng.random_range(2..=(n / 2).max(2));
            let mut a = Matrix::zeros(m, n);
            for col in 0..n {
                a[(rng.random_range(0..m), col)] = 1.0;
            }
            a
        }
        "almost_diagonal" => {
            let mut a = Matrix::identity(n);
            for row in 0..n {
                if rng.random::<f64>() < 0.6 {
                    let mut col = rng.random_range(0..n - 1);
                    if col >= row {
                        col += 1;
                    }
                    a[(row, col)] = 1.0;
                }
            }
            a
        }
        _ => {
            let m = rng.random_range(10..=(n * n / 2).max(10));
            let mut a = Matrix::zeros(m, n);
            for r in 0..m {
                for c in 0..n {
                    if rng.random::<bool>() {
                        a[(r, c)] = 1.0;
                    }
                }
            }
            a
        }
    }
}

pub fn qk_revenue(structure: &str, n: usize, rng: &mut impl Rng) -> Matrix {
    let mut r = Matrix::square(n);
    for i in 0..n {
        r[(i, i)] = rng.random_range(15..=39u32) as f64;
    }
    match structure {
        "almost_diagonal" if n > 1 => {
            for col in 0..n {
                if rng.random::<f64>() < 0.4 {
                    let mut row = rng.random_range(0..n - 1);
                    if row >= col {
                        row += 1;
                    }
                    let v = rng.random_range(1..=24u32) as f64 / 2.0;
                    r[(row, col)] = v;
                    r[(col, row)] = v;
                }
            }
        }
        "enlarged_diagonal" => {
            for i in 0..n.saturating_sub(1) {
                let v = rng.random_range(15..=39u32) as f64 / 2.0;
                r[(i, i + 1)] = v;
                r[(i + 1, i)] = v;
            }
        }
        "random" => {
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = rng.random_range(15..=39u32) as f64 / 2.0;
                    r[(i, j)] = v;
                    r[(j, i)] = v;
                }
            }
        }
        _ => {}
    }
    r
}

fn fill_random(g: &mut Grid, pos: usize, rng: &mut impl Rng) -> bool {
    if pos == 16 {
        return true;
    }
    let (r, c) = (pos / 4, pos % 4);
    let mut vals = [1u8, 2, 3, 4];
    vals.shuffle(rng);
    for k in vals {
        g[r][c] = k;
        let row_ok = (0..c).all(|j| g[r][j] != k);
        let col_ok = (0..r).all(|i| g[i][c] != k);
        let (br, bc) = (r / 2 * 2, c / 2 * 2);
        let blk_ok = (br..br + 2)
            .flat_map(|i| (bc..bc + 2).map(move |j| (i, j)))
            .filter(|&(i, j)| i * 4 + j < pos)
            .all(|(i, j)| g[i][j] != k);
        if row_ok && col_ok && blk_ok && fill_random(g, pos + 1, rng) {
            return true;
        }
    }
    g[r][c] = 0;
    false
}

pub fn random_solved_grid(rng: &mut impl Rng) -> Grid {
    let mut g = [[0u8; 4]; 4];
    assert!(fill_random(&mut g, 0, rng), "4x4 grids always complete");
    g
}

/// At most 288 distinct solved grids exist.
pub fn distinct_solved_grids(count: usize, rng: &mut impl Rng) -> Vec<Grid> {
    let count = count.min(288);
    let mut out: Vec<Grid> = vec![];
    while out.len() < count {
        let g = random_solved_grid(rng);
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

/// Blanks random cells of a solved grid until the candidate count lands in
/// `[n_min, n_max]`, redrawing the removal order on overshoot.
pub fn remove_cells(solved: &Grid, n_min: usize, n_max: usize, rng: &mut impl Rng) -> Result<Grid> {
    let mut cells: Vec<usize> = (0..16).collect();
    for _ in 0..SUDOKU_TRIES {
        cells.shuffle(rng);
        let mut g = *solved;
        for &cell in &cells {
            g[cell / 4][cell % 4] = 0;
            let n = sudoku_candidates(&g).len();
            if n > n_max {
                break;
            }
            if n >= n_min {
                return Ok(g);
            }
        }
    }
    Err(Error::Generation(format!("no Sudoku instance with {n_min}..={n_max} variables")))
}

/// Writes one JSON file per instance and `manifest.csv`.
pub fn write_batch(instances: &[QuboInstance], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = String::from("instance_id,class,structure,n,penalty\n");
    for q in instances {
        write_instance(q, &dir.join(format!("{}.json", q.instance_id)))?;
        let pen = q.penalty.map_or(String::new(), |p| p.to_string());
        let _ = writeln!(manifest, "{},{},{},{},{}", q.instance_id, q.problem_class, q.structure, q.n(), pen);
    }
    crate::io::write_if_changed(&dir.join("manifest.csv"), manifest.as_bytes())?;
    Ok(())
}

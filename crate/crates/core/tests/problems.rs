mod common;

use common::{all_costs, brute_force};
use qubo_meta::linalg::Matrix;
use qubo_meta::problems::*;
use qubo_meta::{Error, ProblemClass, SizeClass};

fn anon() -> Meta {
    Meta::anon()
}

fn star(n: usize) -> ProblemGraph {
    ProblemGraph::from_edges(n, &(1..n).map(|i| (0, i)).collect::<Vec<_>>())
}

#[test]
fn max_cut_small_graphs() {
    let edge = max_cut(&ProblemGraph::from_edges(2, &[(0, 1)]), &anon()).unwrap();
    let (best, arg) = brute_force(&edge);
    assert_eq!(best, -1.0);
    assert_eq!(arg, vec![vec![1, 0], vec![0, 1]]);

    let tri = max_cut(&ProblemGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]), &anon()).unwrap();
    assert_eq!(brute_force(&tri).0, -2.0);

    let c4 = max_cut(&ProblemGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]), &anon()).unwrap();
    let (best, arg) = brute_force(&c4);
    assert_eq!(best, -4.0);
    assert_eq!(arg.len(), 2);
}

#[test]
fn independent_set_examples() {
    let a = 1.5;
    let empty = maximum_independent_set(&ProblemGraph::empty(3), a, 6.0, &anon()).unwrap();
    assert_eq!(brute_force(&empty), (-3.0 * a, vec![vec![1, 1, 1]]));

    let edge = maximum_independent_set(&ProblemGraph::from_edges(2, &[(0, 1)]), a, 4.0, &anon()).unwrap();
    assert_eq!(brute_force(&edge).0, -a);

    let s = maximum_independent_set(&star(5), a, 10.0, &anon()).unwrap();
    assert_eq!(brute_force(&s), (-4.0 * a, vec![vec![0, 1, 1, 1, 1]]));
    assert_eq!(s.witness.as_deref(), Some(&[0u8; 5][..]));
}

#[test]
fn vertex_cover_examples() {
    let edge = minimum_vertex_cover(&ProblemGraph::from_edges(2, &[(0, 1)]), 2.0, &anon()).unwrap();
    assert_eq!(brute_force(&edge).0, 1.0);

    let s = minimum_vertex_cover(&star(5), 5.0, &anon()).unwrap();
    assert_eq!(brute_force(&s), (1.0, vec![vec![1, 0, 0, 0, 0]]));

    let none = minimum_vertex_cover(&ProblemGraph::empty(4), 4.0, &anon()).unwrap();
    assert_eq!(brute_force(&none), (0.0, vec![vec![0; 4]]));
}

#[test]
fn clique_is_independent_set_of_complement() {
    let k4 = ProblemGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    let q = max_clique(&k4, &anon()).unwrap();
    assert_eq!(brute_force(&q).1, vec![vec![1; 4]]);

    let p3 = ProblemGraph::from_edges(3, &[(0, 1), (1, 2)]);
    let q = max_clique(&p3, &anon()).unwrap();
    let (_, arg) = brute_force(&q);
    assert!(arg.iter().all(|x| x.iter().map(|&b| b as usize).sum::<usize>() == 2));

    for seed in 0..5 {
        let g = generate_graph(Topology::ErdosRenyi, 12, seed).unwrap();
        let clique = max_clique(&g, &anon()).unwrap();
        let mis = maximum_independent_set(&g.complement(), 1.0, 24.0, &anon()).unwrap();
        assert_eq!(clique.q(), mis.q());
        assert_eq!(clique.offset, mis.offset);
    }
}

#[test]
fn community_detection_separates_bridged_triangles() {
    let g = ProblemGraph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);
    let q = community_detection(&g, &anon()).unwrap();
    let (_, arg) = brute_force(&q);
    assert_eq!(arg, vec![vec![1, 1, 1, 0, 0, 0], vec![0, 0, 0, 1, 1, 1]]);
    for seed in 0..5 {
        let g = generate_graph(Topology::Grid2d, 20, seed).unwrap();
        let q = community_detection(&g, &anon()).unwrap();
        assert!(q.q().is_symmetric(0.0));
        for i in 0..20 {
            assert!(q.q().row(i).iter().sum::<f64>().abs() < 1e-12);
        }
    }
}

#[test]
fn number_partitioning_examples() {
    assert_eq!(brute_force(&number_partitioning(&[1.0, 1.0], &anon()).unwrap()).0, 0.0);
    assert_eq!(brute_force(&number_partitioning(&[3.0, 1.0, 1.0, 1.0], &anon()).unwrap()).0, 0.0);
    assert_eq!(brute_force(&number_partitioning(&[2.0, 3.0, 7.0], &anon()).unwrap()).0, 4.0);
    let z = [5.0, 9.0, 2.0, 11.0, 4.0];
    let q = number_partitioning(&z, &anon()).unwrap();
    for (mask, y) in all_costs(&q).into_iter().enumerate() {
        let diff: f64 = z.iter().enumerate().map(|(i, v)| if mask >> i & 1 == 1 { *v } else { -*v }).sum();
        assert!((y - diff * diff).abs() < 1e-9);
    }
}

#[test]
fn set_packing_examples() {
    let c = [3.0, 5.0, 4.0, 6.0];
    let id = set_packing(&c, &Matrix::identity(4), 10.0, &anon()).unwrap();
    assert_eq!(brute_force(&id), (-18.0, vec![vec![1; 4]]));

    let mut step = Matrix::zeros(3, 4);
    for i in 0..3 {
        step[(i, i)] = 1.0;
        step[(i, i + 1)] = 1.0;
    }
    let q = set_packing(&c, &step, 10.0, &anon()).unwrap();
    // max-weight independent set on the path 0-1-2-3
    let mut best = 0.0f64;
    for mask in 0u32..16 {
        if mask & (mask >> 1) == 0 {
            best = best.max((0..4).filter(|i| mask >> i & 1 == 1).map(|i| c[i]).sum());
        }
    }
    assert_eq!(brute_force(&q).0, -best);

    let mut rng = qubo_meta::seed::rng(4);
    let a = generate::sp_matrix("disjoint_rows", 8, &mut rng);
    let q = set_packing(&[1.0; 8], &a, 4.0, &anon()).unwrap();
    for mask in 0u32..256 {
        let x: Vec<u8> = (0..8).map(|i| (mask >> i & 1) as u8).collect();
        let ok = (0..a.rows()).all(|r| (0..8).filter(|&i| x[i] == 1 && a[(r, i)] == 1.0).count() <= 1);
        assert_eq!(q.is_feasible(&x), Some(ok));
    }
    let mut one_per_row = vec![0u8; 8];
    for r in 0..a.rows() {
        if let Some(i) = (0..8).find(|&i| a[(r, i)] == 1.0) {
            one_per_row[i] = 1;
        }
    }
    assert_eq!(q.is_feasible(&one_per_row), Some(true));
}

#[test]
fn knapsack_examples() {
    assert_eq!(knapsack_slack(8.0), [4.0, 2.0, 1.0, 1.0]);

    let r = Matrix::from_diag(&[20.0]);
    let q = quadratic_knapsack(&r, &[3.0], 8.0, 5.0, &anon()).unwrap();
    assert_eq!(q.n(), 5);
    let (best, arg) = brute_force(&q);
    assert_eq!(best, -20.0);
    for x in &arg {
        assert_eq!(x[0], 1);
        let fill: f64 = 3.0 + [4.0, 2.0, 1.0, 1.0].iter().zip(&x[1..]).map(|(c, &t)| c * t as f64).sum::<f64>();
        assert_eq!(fill, 8.0);
    }

    let zero = quadratic_knapsack(&Matrix::square(3), &[2.0, 5.0, 4.0], 9.0, 3.0, &anon()).unwrap();
    let (best, arg) = brute_force(&zero);
    assert_eq!(best, 0.0);
    assert!(arg.iter().all(|x| zero.is_feasible(x) == Some(true)));
}

#[test]
fn sudoku_examples() {
    let solved: Grid = [[1, 2, 3, 4], [3, 4, 1, 2], [2, 1, 4, 3], [4, 3, 2, 1]];
    assert!(is_valid_solution(&solved));
    let mut one = solved;
    one[1][2] = 0;
    let q = sudoku4(&one, &anon()).unwrap();
    assert!((1..=3).contains(&q.n()));
    let (best, arg) = brute_force(&q);
    assert_eq!(best, 0.0);
    assert_eq!(arg.len(), 1);

    let mut rng = qubo_meta::seed::rng(9);
    let fixed = generate::remove_cells(&solved, 12, 18, &mut rng).unwrap();
    let q = sudoku4(&fixed, &anon()).unwrap();
    let w = q.witness.clone().unwrap();
    assert_eq!(q.cost(&w).unwrap(), 0.0);
    let (best, arg) = brute_force(&q);
    assert_eq!(best, 0.0);
    assert!(arg.contains(&w));
}

#[test]
fn feature_selection_examples() {
    let t = vec![1.0, 2.0, 0.5, 3.0, 2.5, 0.0];
    let noise = vec![0.3, -1.0, 0.9, 0.1, -0.4, 0.2];
    let k = 1;
    let q = feature_selection(&[t.clone(), t.clone(), noise], &t, k, &anon()).unwrap();
    // objective diagonal is −Corr(f, t); the cardinality penalty adds 1 − 2k
    assert!((q.q()[(0, 0)] - (1.0 - 2.0 * k as f64) + 1.0).abs() < 1e-12);
    let (_, arg) = brute_force(&q);
    assert!(arg == vec![vec![1, 0, 0]] || arg == vec![vec![1, 0, 0], vec![0, 1, 0]]);

    let d = synthetic("s", 80, 10, 3, 17);
    for k in [2, 3] {
        let q = feature_selection(&d.features, &d.target, k, &anon()).unwrap();
        for (mask, y) in all_costs(&q).into_iter().enumerate() {
            let card = (mask as u32).count_ones() as f64;
            if card != k as f64 {
                let bound = (card - k as f64).powi(2) - 10.0;
                assert!(y >= bound - 1e-9, "k={k} mask={mask:b}: {y} < {bound}");
            }
        }
    }
}

#[test]
fn graph_classes_share_sparsity() {
    let g = generate_graph(Topology::Cycle, 15, 2).unwrap();
    let mc = max_cut(&g, &anon()).unwrap();
    let mis = maximum_independent_set(&g, 1.0, 30.0, &anon()).unwrap();
    let mvc = minimum_vertex_cover(&g, 15.0, &anon()).unwrap();
    for i in 0..15 {
        for j in 0..15 {
            if i != j {
                let nz = mc.q()[(i, j)] != 0.0;
                assert_eq!(nz, mis.q()[(i, j)] != 0.0);
                assert_eq!(nz, mvc.q()[(i, j)] != 0.0);
            }
        }
    }
    let diag = |q: &qubo_meta::QuboInstance| (0..15).map(|i| q.q()[(i, i)]).collect::<Vec<_>>();
    assert_ne!(diag(&mc), diag(&mis));
    assert_ne!(diag(&mis), diag(&mvc));
    assert_ne!(diag(&mc), diag(&mvc));
}

fn fast_spec(mut spec: GenerationSpec) -> GenerationSpec {
    spec.penalty_tuning = PenaltyTuneConfig { budget: 2, sa_runs: 4, sweeps: 50 };
    spec
}

#[test]
fn small_preset_sizes_counts_and_witnesses() {
    let mut spec = GenerationSpec::small(11);
    spec.penalty_tuning.budget = 0;
    let all = generate(&spec).unwrap();
    for class in ProblemClass::ALL {
        let n = all.iter().filter(|q| q.problem_class == class).count();
        let expected = if class == ProblemClass::Sudoku { 30 } else { 24 };
        assert_eq!(n, expected, "{class}");
    }
    for q in &all {
        assert!((27..=32).contains(&q.n()), "{} has n={}", q.instance_id, q.n());
        if let Some(w) = &q.witness {
            assert_eq!(q.is_feasible(w), Some(true), "{}", q.instance_id);
        }
        assert_eq!(q.penalty.is_some(), class_has_penalty(q.problem_class));
    }
    let fs_k: Vec<f64> = all
        .iter()
        .filter(|q| q.problem_class == ProblemClass::FeatureSelection)
        .map(|q| q.constraints[0].rhs)
        .collect();
    assert_eq!(fs_k.iter().cloned().fold(f64::INFINITY, f64::min), 5.0);
    assert_eq!(fs_k.iter().cloned().fold(0.0, f64::max), 9.0);
    let mut ids: Vec<_> = all.iter().map(|q| &q.instance_id).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), all.len());
}

fn class_has_penalty(c: ProblemClass) -> bool {
    c.is_constrained()
}

#[test]
fn large_preset_sizes() {
    let mut spec = fast_spec(GenerationSpec::large(3));
    spec.max_per_class = Some(6);
    let all = generate(&spec).unwrap();
    assert!(all.iter().all(|q| q.problem_class != ProblemClass::Sudoku));
    assert_eq!(all.len(), 9 * 6);
    for q in &all {
        assert!((69..=99).contains(&q.n()), "{}", q.instance_id);
    }
    let mut spec = GenerationSpec::large(3);
    spec.classes = vec![ProblemClass::FeatureSelection];
    spec.penalty_tuning.budget = 0;
    let fs = generate(&spec).unwrap();
    assert_eq!(fs.len(), 155);
    let ks: Vec<f64> = fs.iter().map(|q| q.constraints[0].rhs).collect();
    assert_eq!(ks.iter().cloned().fold(f64::INFINITY, f64::min), 13.0);
    assert_eq!(ks.iter().cloned().fold(0.0, f64::max), 23.0);
}

#[test]
fn generation_is_byte_deterministic() {
    let mut spec = fast_spec(GenerationSpec::small(42));
    spec.max_per_class = Some(3);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_batch(&generate(&spec).unwrap(), a.path()).unwrap();
    write_batch(&generate(&spec).unwrap(), b.path()).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 10 * 3 + 1);
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?}");
    }
    let manifest = std::fs::read_to_string(a.path().join("manifest.csv")).unwrap();
    assert!(manifest.starts_with("instance_id,class,structure,n,penalty\n"));
}

#[test]
fn penalty_tuning_prefers_smallest_best_penalty() {
    let mut rng = qubo_meta::seed::rng(5);
    let n = 10;
    let a = generate::sp_matrix("almost_diagonal", n, &mut rng);
    let c: Vec<f64> = (0..n).map(|i| 3.0 + i as f64).collect();
    let c_all: f64 = c.iter().sum();
    let meta = Meta::new("sp", "almost_diagonal", SizeClass::Small);
    let cfg = PenaltyTuneConfig { budget: 100, sa_runs: 30, sweeps: 200 };
    let build = |p| set_packing(&c, &a, p, &meta);
    let out = tune_penalty(build, ((c_all / 3.0).floor(), c_all), &cfg, 8).unwrap();
    assert_eq!(out.evaluations, 100);
    let top = out.trials.iter().map(|t| t.1).fold(0.0, f64::max);
    let smallest = out.trials.iter().filter(|t| t.1 == top).map(|t| t.0).fold(f64::INFINITY, f64::min);
    assert_eq!((out.p, out.feasible_fraction), (smallest, top));

    // full feasibility at p = c_all means the chosen p is at most c_all and also fully feasible
    let at_top = tune_penalty(build, (c_all, c_all), &PenaltyTuneConfig { budget: 1, ..cfg.clone() }, 8).unwrap();
    if at_top.feasible_fraction == 1.0 {
        assert_eq!(out.feasible_fraction, 1.0);
        assert!(out.p <= c_all);
    }

    let g = generate_graph(Topology::Star, 6, 0).unwrap();
    let unconstrained = tune_penalty(|_| max_cut(&g, &Meta::anon()), (1.0, 2.0), &cfg, 0);
    assert!(matches!(unconstrained, Err(Error::Validation(_))));
}

#[test]
fn tuning_error_carries_midpoint() {
    // x0 + x1 = 3 is unreachable, so no sample is ever feasible
    let meta = Meta::new("sp", "x", SizeClass::Small);
    let build = |p: f64| {
        let q = set_packing(&[1.0, 1.0], &Matrix::identity(2), p, &meta)?;
        let cons = vec![qubo_meta::qubo::LinearConstraint {
            coeffs: vec![1.0, 1.0],
            sense: qubo_meta::qubo::Sense::Eq,
            rhs: 3.0,
        }];
        Ok(q.with_constraints(cons, None))
    };
    let cfg = PenaltyTuneConfig { budget: 5, sa_runs: 3, sweeps: 10 };
    match tune_penalty(build, (2.0, 6.0), &cfg, 1) {
        Err(Error::Tuning { midpoint }) => assert_eq!(midpoint, 4.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn oversized_feature_selection_batch_is_rejected() {
    let mut spec = GenerationSpec::custom(6, 8, 1, 0).unwrap();
    spec.fs_per_size = 7;
    assert!(matches!(spec.validate(), Err(Error::Validation(_))));
    spec.fs_per_size = 6;
    assert!(spec.validate().is_ok());
    spec.classes = vec![ProblemClass::MaxCut];
    spec.fs_per_size = 40;
    assert!(spec.validate().is_ok());
}

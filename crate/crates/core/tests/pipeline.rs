mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qubo_meta::io::{read_instance, read_sample_file, sampleset_to_json};
use qubo_meta::pipeline::*;
use qubo_meta::problems::GenerationSpec;
use qubo_meta::{Error, ProblemClass, Sample};

fn tiny(ws: &Path) -> PipelineConfig {
    let mut c = PipelineConfig::new(ws);
    let mut g = GenerationSpec::custom(8, 10, 2, 1).unwrap();
    g.classes = vec![ProblemClass::MaxCut, ProblemClass::NumberPartitioning];
    g.sudoku_grids = 0;
    c.generation = vec![g];
    // a deliberately weak SA so the candidate labels are mixed
    c.solver_overrides = Some(
        serde_json::from_value(serde_json::json!({
            "SA": {"default": {"n_samples": 2, "sweeps": 5}},
            "TS": {"default": {"n_samples": 10}},
            "SD": {"default": {"n_samples": 10}}
        }))
        .unwrap(),
    );
    c.views = vec!["LogIsing".into(), "MatStruct".into()];
    c.search_budget = 3;
    c.pfi_repeats = 5;
    c
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn tiny_config_populates_workspace() {
    let dir = tempfile::tempdir().unwrap();
    let s = run(&tiny(dir.path())).unwrap();
    for sub in SUBDIRS {
        assert!(dir.path().join(sub).is_dir(), "{sub}");
    }
    let instances = load_instances(&dir.path().join("instances")).unwrap();
    assert_eq!(instances.len(), 48);
    assert_eq!(s.stage("solve").len(), 3 * instances.len());
    assert_eq!(s.stage("embed").len(), instances.len());
    for f in ["effectiveness.csv", "ba.csv", "pfi_top5.csv", "spearman.csv", "summary.md"] {
        assert!(dir.path().join("reports").join(f).exists(), "{f}");
    }
    for view in ["LogIsing", "MatStruct"] {
        for m in ["forest", "logistic"] {
            let md = dir.path().join("models").join(format!("{view}__over_all__{m}"));
            for f in ["model.json", "report.json", "pfi.csv"] {
                assert!(md.join(f).exists(), "{}", md.join(f).display());
            }
        }
    }
}

#[test]
fn rerun_without_changes_recomputes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    run(&c).unwrap();
    let before = files_under(dir.path());
    let s = run(&c).unwrap();
    assert_eq!(s.total_recomputed(), 0, "{:?}", s.recomputed);
    assert_eq!(files_under(dir.path()), before);
}

#[test]
fn deleted_sample_recomputes_only_that_solve() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    run(&c).unwrap();
    let victim = "samples/max_cut_small_star_n9_r0__TS.json";
    let original = std::fs::read(dir.path().join(victim)).unwrap();
    std::fs::remove_file(dir.path().join(victim)).unwrap();
    let s = run(&c).unwrap();
    assert_eq!(s.stage("solve"), [victim.to_string()]);
    assert_eq!(s.total_recomputed(), 1, "{:?}", s.recomputed);
    // the solve is seeded, so the file comes back byte for byte and nothing
    // downstream sees a changed input
    assert_eq!(std::fs::read(dir.path().join(victim)).unwrap(), original);
}

#[test]
fn changed_sample_recomputes_labels_and_training_only() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    run(&c).unwrap();
    let ws = c.workspace();
    // give the candidate the exact optimum on an instance it lost
    let labels = LabelTable::read_csv(&ws.labels_csv()).unwrap();
    let lost = labels.rows.iter().find(|r| !r.over_all).expect("weak candidate loses somewhere");
    let q = read_instance(&ws.instance(&lost.instance_id)).unwrap();
    let (best, arg) = common::brute_force(&q);
    let path = ws.sample(&lost.instance_id, "SA");
    let mut set = read_sample_file(&path).unwrap();
    set.samples = vec![Sample { bits: arg[0].clone(), cost: q.cost(&arg[0]).unwrap() }];
    std::fs::write(&path, sampleset_to_json(&set)).unwrap();

    let features_before = std::fs::read(ws.features_csv()).unwrap();
    let s = run(&c).unwrap();
    assert_eq!(s.stage("solve").len(), 0, "sample stamps are keyed on instance and parameters");
    assert_eq!(s.stage("features").len(), 0);
    assert_eq!(s.stage("label"), ["labels/labels.csv".to_string()]);
    assert_eq!(s.stage("train").len(), 4);
    assert_eq!(std::fs::read(ws.features_csv()).unwrap(), features_before);
    let after = LabelTable::read_csv(&ws.labels_csv()).unwrap();
    let row = after.rows.iter().find(|r| r.instance_id == lost.instance_id).unwrap();
    assert!(row.over_all);
    assert_eq!(row.optimal, Some(true));
    assert!((set.best_cost() - best).abs() < 1e-9);
}

#[test]
fn labels_match_a_recount_from_raw_sample_files() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    run(&c).unwrap();
    let ws = c.workspace();
    let t = LabelTable::read_csv(&ws.labels_csv()).unwrap();
    assert_eq!(t.candidate, "SA");
    assert_eq!(t.pool, ["TS", "SD"]);
    let mut tally: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in &t.rows {
        let best = |s: &str| {
            let set = read_sample_file(&ws.sample(&r.instance_id, s)).unwrap();
            set.samples.iter().map(|x| x.cost).fold(f64::INFINITY, f64::min)
        };
        let (sa, ts, sd) = (best("SA"), best("TS"), best("SD"));
        let tol = |b: f64| 1e-9 * b.abs().max(1.0);
        assert_eq!(r.over_all, sa <= ts.min(sd) + tol(ts.min(sd)), "{}", r.instance_id);
        assert_eq!(r.over["TS"], sa <= ts + tol(ts));
        assert_eq!(r.over["SD"], sa <= sd + tol(sd));
        // optimal against a brute-force minimum
        let q = read_instance(&ws.instance(&r.instance_id)).unwrap();
        let (opt, _) = common::brute_force(&q);
        assert_eq!(r.optimal, Some((sa - opt).abs() <= 1e-9 * opt.abs().max(1.0)), "{}", r.instance_id);
        let e = tally.entry(r.problem_class.clone()).or_default();
        e.0 += r.over_all as usize;
        e.1 += 1;
    }
    let b = report(&ws.root).unwrap();
    assert_eq!(b.effectiveness.len(), 2);
    for row in &b.effectiveness {
        let (p, n) = tally[&row.problem_class];
        assert_eq!(row.instances, n);
        assert!((row.percent("over_all").unwrap() - 100.0 * p as f64 / n as f64).abs() < 1e-12);
    }
}

#[test]
fn eps_zero_column_equals_optimal() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(dir.path());
    c.eps_list = vec![0.0, 1e-5];
    c.views = vec![];
    run(&c).unwrap();
    let t = LabelTable::read_csv(&c.workspace().labels_csv()).unwrap();
    assert_eq!(t.eps_list, [0.0, 1e-5]);
    for r in &t.rows {
        assert_eq!(r.eps_optimal.as_ref().map(|e| e[0]), r.optimal, "{}", r.instance_id);
    }
}

#[test]
fn empty_class_is_noted_and_pfi_lists_five() {
    let dir = tempfile::tempdir().unwrap();
    run(&tiny(dir.path())).unwrap();
    let b = report(dir.path()).unwrap();
    assert!(b.notes.iter().any(|n| n.contains("sudoku")));
    assert!(b.effectiveness.iter().all(|r| r.problem_class != "sudoku"));
    let csv = std::fs::read_to_string(dir.path().join("reports/effectiveness.csv")).unwrap();
    assert!(!csv.contains("sudoku"));
    let mut per: BTreeMap<(String, String), usize> = BTreeMap::new();
    for r in &b.pfi_top {
        *per.entry((r.view.clone(), r.model.clone())).or_default() += 1;
    }
    assert_eq!(per.len(), 4);
    for ((view, _), k) in per {
        // MatStruct has three features in total
        let expect = if view == "MatStruct" { 3 } else { 5 };
        assert_eq!(k, expect, "{view}");
    }
}

#[test]
fn swapping_candidate_changes_labels_not_features() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = tiny(a.path());
    let mut cb = tiny(b.path());
    cb.candidate = Some("TS".into());
    run(&ca).unwrap();
    run(&cb).unwrap();
    let (fa, fb) = (files_under(&a.path().join("features")), files_under(&b.path().join("features")));
    assert_eq!(fa, fb);
    let lb = LabelTable::read_csv(&cb.workspace().labels_csv()).unwrap();
    assert_eq!(lb.candidate, "TS");
    assert_eq!(lb.pool, ["SA", "SD"]);
    assert_ne!(std::fs::read(ca.workspace().labels_csv()).unwrap(), std::fs::read(cb.workspace().labels_csv()).unwrap());
}

#[test]
fn two_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&tiny(a.path())).unwrap();
    let mut cb = tiny(b.path());
    cb.workers = 3;
    run(&cb).unwrap();
    let strip = |m: BTreeMap<PathBuf, Vec<u8>>| -> BTreeMap<PathBuf, Vec<u8>> {
        // stamps hold absolute artifact paths
        m.into_iter().filter(|(p, _)| !p.starts_with(".stamps")).collect()
    };
    let (fa, fb) = (strip(files_under(a.path())), strip(files_under(b.path())));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (p, bytes) in &fa {
        assert!(fb[p] == *bytes, "{} differs", p.display());
    }
}

#[test]
fn environment_overrides_workspace() {
    let dir = tempfile::tempdir().unwrap();
    let c = PipelineConfig::new("/nonexistent/elsewhere");
    std::env::set_var(WORKSPACE_ENV, dir.path());
    let c = c.with_env_override();
    std::env::remove_var(WORKSPACE_ENV);
    assert_eq!(c.workspace, dir.path());
}

#[test]
fn bad_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(&p, r#"{"workspace": "w", "no_such_field": 1}"#).unwrap();
    let e = PipelineConfig::load(&p).unwrap_err();
    assert!(matches!(e, Error::Validation(_)));
    assert_eq!(e.exit_code(), 2);
    std::fs::write(&p, r#"{"workspace": "w", "eps_list": [2.0]}"#).unwrap();
    assert_eq!(PipelineConfig::load(&p).unwrap_err().exit_code(), 2);
    std::fs::write(&p, r#"{"workspace": "w", "pfi_repeats": 2}"#).unwrap();
    assert_eq!(PipelineConfig::load(&p).unwrap_err().exit_code(), 2);
}

#[test]
fn dangling_label_ids_halt_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    run(&c).unwrap();
    let ws = c.workspace();
    let victim = "number_partitioning_small_range_n9_r1";
    let mut instances = load_instances(&ws.dir("instances")).unwrap();
    instances.retain(|q| q.instance_id != victim);
    std::fs::remove_file(ws.instance(victim)).unwrap();
    let e = check_references(&ws, &instances).unwrap_err();
    match &e {
        Error::Stage { stage, ids, .. } => {
            assert_eq!(stage, "train");
            assert_eq!(ids, &[victim.to_string()]);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(e.exit_code(), 3);
}

#[test]
fn deleted_instance_is_regenerated() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(dir.path());
    c.views = vec![];
    run(&c).unwrap();
    let ws = c.workspace();
    let victim = ws.instance("max_cut_small_grid2d_n8_r1");
    let original = std::fs::read(&victim).unwrap();
    std::fs::remove_file(&victim).unwrap();
    let s = run(&c).unwrap();
    assert_eq!(s.stage("generate"), ["instances/max_cut_small_grid2d_n8_r1.json".to_string()]);
    assert_eq!(std::fs::read(&victim).unwrap(), original);
    assert_eq!(s.total_recomputed(), 1, "{:?}", s.recomputed);
}

#[test]
fn external_samples_become_the_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let ext = tempfile::tempdir().unwrap();
    let mut c = tiny(dir.path());
    c.views = vec![];
    run(&c).unwrap();
    let ws = c.workspace();
    // an "external" solver that always returns the brute-force optimum
    let instances = load_instances(&ws.dir("instances")).unwrap();
    for q in &instances {
        let (_, arg) = common::brute_force(q);
        let mut set = read_sample_file(&ws.sample(&q.instance_id, "SA")).unwrap();
        set.solver_id = "QA".into();
        set.samples = vec![Sample { bits: arg[0].clone(), cost: q.cost(&arg[0]).unwrap() }];
        std::fs::write(ext.path().join(format!("{}.json", q.instance_id)), sampleset_to_json(&set)).unwrap();
    }
    c.external_samples = Some(ext.path().to_path_buf());
    let s = run(&c).unwrap();
    assert_eq!(s.stage("ingest").len(), instances.len());
    let t = LabelTable::read_csv(&ws.labels_csv()).unwrap();
    assert_eq!(t.candidate, "QA");
    assert_eq!(t.pool, ["SA", "TS", "SD"]);
    assert_eq!(t.rows.len(), instances.len());
    assert!(t.rows.iter().all(|r| r.over_all && r.optimal == Some(true)));
}

#[test]
fn bad_external_sample_names_stage_and_instance() {
    let dir = tempfile::tempdir().unwrap();
    let ext = tempfile::tempdir().unwrap();
    let mut c = tiny(dir.path());
    c.views = vec![];
    run(&c).unwrap();
    let ws = c.workspace();
    let id = "max_cut_small_cycle_n8_r0";
    let mut set = read_sample_file(&ws.sample(id, "SA")).unwrap();
    set.solver_id = "QA".into();
    set.samples[0].bits.pop();
    std::fs::write(ext.path().join("bad.json"), sampleset_to_json(&set)).unwrap();
    c.external_samples = Some(ext.path().to_path_buf());
    let e = run(&c).unwrap_err();
    match &e {
        Error::Stage { stage, ids, .. } => {
            assert_eq!(stage, "ingest");
            assert_eq!(ids, &[id.to_string()]);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(e.exit_code(), 3);
    // earlier outputs are kept
    assert!(ws.labels_csv().exists());
}

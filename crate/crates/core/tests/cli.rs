use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qubo-meta"));
    c.env_remove("QUBO_META_WORKSPACE");
    c
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn tiny_config(path: &Path, workspace: &Path, extra: serde_json::Value) {
    let mut c = serde_json::json!({
        "workspace": workspace,
        "generation": [{
            "size_class": "small", "n_min": 8, "n_max": 9, "n_rep": 2, "seed": 5,
            "classes": ["max_cut", "number_partitioning"],
            "fs_per_size": 1, "sudoku_grids": 0,
            "penalty_tuning": {"budget": 0, "sa_runs": 1, "sweeps": 10},
            "max_per_class": null
        }],
        "solver_overrides": {
            "SA": {"default": {"n_samples": 2, "sweeps": 5}},
            "TS": {"default": {"n_samples": 10}},
            "SD": {"default": {"n_samples": 10}}
        },
        "views": ["MatStruct"],
        "search_budget": 2,
        "pfi_repeats": 5
    });
    for (k, v) in extra.as_object().unwrap() {
        c[k] = v.clone();
    }
    std::fs::write(path, serde_json::to_string_pretty(&c).unwrap()).unwrap();
}

#[test]
fn explicit_path_stages_chain_together() {
    let d = tempfile::tempdir().unwrap();
    let p = |s: &str| d.path().join(s);
    let run = |args: &[&str]| {
        let o = bin().args(args).current_dir(d.path()).output().unwrap();
        ok(&o);
    };
    run(&["generate", "--out", "inst", "--n-min", "8", "--n-max", "9", "--n-rep", "2", "--classes", "max_cut,number_partitioning"]);
    run(&["solve", "--instances", "inst", "--out", "samples", "--solver", "TS,SD"]);
    std::fs::write(p("weak.json"), r#"{"SA": {"default": {"n_samples": 2, "sweeps": 5}}}"#).unwrap();
    run(&["solve", "--instances", "inst", "--out", "samples", "--solver", "SA", "--params", "weak.json", "--seed", "4"]);
    run(&["enumerate", "--instances", "inst", "--out", "spaces"]);
    run(&["embed", "--instances", "inst", "--out", "emb", "--family", "chimera"]);
    run(&["features", "--instances", "inst", "--embeddings", "emb", "--spaces", "spaces", "--out", "f/features.csv"]);
    run(&["label", "--instances", "inst", "--samples", "samples", "--spaces", "spaces", "--eps", "0,0.01", "--out", "labels.csv"]);
    assert!(p("f/features.json").exists());
    let labels = std::fs::read_to_string(p("labels.csv")).unwrap();
    assert!(labels.starts_with("instance_id,problem_class,size_class,candidate,over_all,over_TS,over_SD,optimal,eps_optimal_0,eps_optimal_0.01,h_optimal"));
    let emb: serde_json::Value = serde_json::from_slice(&std::fs::read(p("emb/max_cut_small_cycle_n8_r0.json")).unwrap()).unwrap();
    assert_eq!(emb["family"], "chimera");
    run(&[
        "train", "--features", "f/features.csv", "--labels", "labels.csv", "--view", "LogIsing", "--target", "over_all",
        "--model", "logistic", "--budget", "2", "--out", "r.json", "--model-dir", "m",
    ]);
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(p("r.json")).unwrap()).unwrap();
    for k in ["view", "target", "outer_ba_mean", "outer_ba_std", "per_fold", "chosen_hypers"] {
        assert!(rep.get(k).is_some(), "{k}");
    }
    run(&["pfi", "--model-dir", "m", "--out", "pfi.csv", "--repeats", "5"]);
    let pfi = std::fs::read_to_string(p("pfi.csv")).unwrap();
    assert!(pfi.starts_with("feature,mean_drop,std,rank"));
    // a single-class target is refused as a validation error
    let o = bin()
        .args(["train", "--features", "f/features.csv", "--labels", "labels.csv", "--view", "LogIsing", "--target", "over_SD"])
        .args(["--model", "forest", "--out", "r2.json"])
        .current_dir(d.path())
        .output()
        .unwrap();
    let over_sd: Vec<&str> = labels.lines().skip(1).map(|l| l.split(',').nth(6).unwrap()).collect();
    if over_sd.iter().all(|v| *v == over_sd[0]) {
        assert_eq!(o.status.code(), Some(2));
    } else {
        ok(&o);
    }
}

#[test]
fn run_with_config_and_env_workspace() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    tiny_config(&cfg, &d.path().join("unused"), serde_json::json!({}));
    let ws = d.path().join("ws");
    let o = bin().args(["run", "--config"]).arg(&cfg).env("QUBO_META_WORKSPACE", &ws).output().unwrap();
    ok(&o);
    assert!(ws.join("reports/summary.md").exists());
    assert!(!d.path().join("unused").exists());
    // a second run recomputes nothing
    let o = bin().args(["run", "--config"]).arg(&cfg).env("QUBO_META_WORKSPACE", &ws).output().unwrap();
    ok(&o);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.lines().all(|l| l.ends_with(" 0 recomputed")), "{out}");
    let o = bin().args(["report", "--workspace"]).arg(&ws).output().unwrap();
    ok(&o);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    // unknown subcommand and bad config are validation errors
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
    let cfg = d.path().join("bad.json");
    std::fs::write(&cfg, r#"{"workspace": "w", "eps_list": [-1]}"#).unwrap();
    assert_eq!(bin().args(["run", "--config"]).arg(&cfg).output().unwrap().status.code(), Some(2));
    // a malformed external sample halts the ingest stage
    let ext = d.path().join("ext");
    std::fs::create_dir_all(&ext).unwrap();
    std::fs::write(
        ext.join("x.json"),
        r#"{"solver_id": "QA", "instance_id": "no_such_instance", "seed": 0, "hyperparameters": {}, "samples": [{"bits": "0101", "cost": 0.0}]}"#,
    )
    .unwrap();
    let cfg = d.path().join("c.json");
    tiny_config(&cfg, &d.path().join("ws"), serde_json::json!({ "external_samples": ext }));
    let o = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ingest") && err.contains("no_such_instance"), "{err}");
}

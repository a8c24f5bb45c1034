//! Individual stages. Each works on plain directories so the command line
//! subcommands can call them outside a full run.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{digest, file_digest, LabelTable, PipelineConfig, Stamps, Workspace};
use crate::embedding::{
    auto_embed, build_topology, default_chain_strength, embed_ising, find_embedding_with, validate_embedding, Embedding,
    EmbeddingFile, FindOptions,
};
use crate::error::{Error, Result};
use crate::features::{extract, features_normul, features_solspace, write_features_csv, write_sidecar, FeatureVector};
use crate::io::{instance_to_json, read_instance, read_sample_file, sampleset_to_json, write_if_changed};
use crate::metalearn::{cv_importance, nested_cv, CvPlan, CvReport, FoldModel, MetaDataset, ModelFamily, PfiReport, SearchSpace};
use crate::problems::{bundled_corpus, generate_with_datasets, read_csv, Dataset};
use crate::qubo::{QuboInstance, SampleSet};
use crate::seed;
use crate::solvers::{ingest_samples, ParamTable, SolverKind};
use crate::space::{enumerate, SpaceFile};

/// Rows needed before a model is trained (5 outer folds of at least 2).
pub const MIN_TRAIN_ROWS: usize = 10;

fn stage_err(stage: &str, failures: Vec<(String, Error)>) -> Error {
    let message = failures.iter().map(|(id, e)| format!("{id}: {e}")).collect::<Vec<_>>().join("; ");
    Error::Stage { stage: stage.into(), ids: failures.into_iter().map(|(id, _)| id).collect(), message }
}

fn json_line<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Runs `f` on every item in parallel; collects all failures into one stage error.
fn par_try<T: Sync, R: Send>(stage: &str, items: &[T], id: impl Fn(&T) -> String + Sync, f: impl Fn(&T) -> Result<R> + Sync) -> Result<Vec<R>> {
    let results: Vec<(String, Result<R>)> = items.par_iter().map(|t| (id(t), f(t))).collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failures.push((i, e)),
        }
    }
    if failures.is_empty() {
        Ok(ok)
    } else {
        Err(stage_err(stage, failures))
    }
}

/// Instances listed in a directory's manifest.csv (or every *.json file when
/// there is no manifest), sorted by id.
pub fn load_instances(dir: &Path) -> Result<Vec<QuboInstance>> {
    let manifest = dir.join("manifest.csv");
    let mut paths: Vec<PathBuf> = if manifest.exists() {
        let mut r = csv::Reader::from_path(&manifest)?;
        r.records().map(|rec| Ok(dir.join(format!("{}.json", &rec?[0])))).collect::<Result<_>>()?
    } else {
        std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect()
    };
    paths.sort();
    let mut out: Vec<QuboInstance> = paths.iter().map(|p| read_instance(p)).collect::<Result<_>>()?;
    out.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    Ok(out)
}

fn write_manifest(dir: &Path, instances: &[QuboInstance]) -> Result<bool> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["instance_id", "class", "structure", "n", "penalty"])?;
    for q in instances {
        w.write_record([
            q.instance_id.clone(),
            q.problem_class.name().to_string(),
            q.structure.clone(),
            q.n().to_string(),
            q.penalty.map_or(String::new(), |p| p.to_string()),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_if_changed(&dir.join("manifest.csv"), &bytes)
}

/// Writes instance files and the manifest; returns the paths that changed.
pub fn write_instances(dir: &Path, instances: &[QuboInstance]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut ids = BTreeSet::new();
    let mut changed = Vec::new();
    for q in instances {
        if !ids.insert(q.instance_id.as_str()) {
            return Err(Error::Validation(format!("duplicate instance id {}", q.instance_id)));
        }
        let p = dir.join(format!("{}.json", q.instance_id));
        if write_if_changed(&p, instance_to_json(q).as_bytes())? {
            changed.push(p);
        }
    }
    let mut sorted = instances.to_vec();
    sorted.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    if write_manifest(dir, &sorted)? {
        changed.push(dir.join("manifest.csv"));
    }
    Ok(changed)
}

fn load_datasets(paths: &[PathBuf], seed_: u64) -> Result<Vec<Dataset>> {
    if paths.is_empty() {
        return Ok(bundled_corpus(seed::derive_str(seed_, "datasets")));
    }
    paths.iter().map(|p| read_csv(p)).collect()
}

/// Generates every configured batch unless the manifest stamp matches.
pub fn stage_generate(config: &PipelineConfig, ws: &Workspace) -> Result<(Vec<QuboInstance>, Vec<PathBuf>)> {
    let mut stamps = Stamps::load(ws, "generate")?;
    let mut parts = vec![serde_json::to_vec(&config.generation)?];
    for p in &config.datasets {
        parts.push(file_digest(p)?.into_bytes());
    }
    let key = digest(&parts.iter().map(Vec::as_slice).collect::<Vec<_>>());
    let dir = ws.dir("instances");
    let manifest = dir.join("manifest.csv");
    if stamps.fresh(&manifest, &key) {
        match load_instances(&dir) {
            Ok(v) => return Ok((v, vec![])),
            Err(e) => log::warn!("instance directory incomplete ({e}); regenerating"),
        }
    }
    let mut all = Vec::new();
    for spec in &config.generation {
        let datasets = load_datasets(&config.datasets, spec.seed)?;
        let batch = generate_with_datasets(spec, &datasets)
            .map_err(|e| Error::Stage { stage: "generate".into(), ids: vec![], message: e.to_string() })?;
        all.extend(batch);
    }
    let changed = write_instances(&dir, &all)?;
    stamps.record(&manifest, key);
    stamps.save()?;
    all.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    Ok((all, changed))
}

/// Parameter table from the configured file with inline overrides on top.
pub fn param_table(config: &PipelineConfig) -> Result<ParamTable> {
    let mut table = match &config.solver_params {
        Some(p) => ParamTable::load(p)?,
        None => ParamTable::default(),
    };
    if let Some(o) = &config.solver_overrides {
        for (solver, per) in &o.0 {
            let entry = table.0.entry(solver.clone()).or_default();
            for (class, v) in per {
                entry.insert(class.clone(), v.clone());
            }
        }
    }
    Ok(table)
}

/// Seed of one solver run inside a pipeline.
pub fn solve_seed(master: u64, id: &str, solver: &str) -> u64 {
    seed::derive_str(master, &format!("solve/{id}/{solver}"))
}

/// Runs one classical solver on each instance. Returns the sample sets.
pub fn solve_all(instances: &[QuboInstance], kind: SolverKind, table: &ParamTable, master: u64) -> Result<Vec<SampleSet>> {
    par_try("solve", instances, |q| q.instance_id.clone(), |q| {
        table.resolve(kind, q.problem_class.name())?.with_seed(solve_seed(master, &q.instance_id, kind.id())).run(q)
    })
}

pub fn stage_solve(config: &PipelineConfig, ws: &Workspace, instances: &[QuboInstance]) -> Result<Vec<PathBuf>> {
    let table = param_table(config)?;
    let mut stamps = Stamps::load(ws, "solve")?;
    let mut tasks = Vec::new();
    for q in instances {
        let inst = file_digest(&ws.instance(&q.instance_id))?;
        for kind in SolverKind::ALL {
            let params = table.resolve(kind, q.problem_class.name())?.with_seed(solve_seed(config.master_seed, &q.instance_id, kind.id()));
            let key = digest(&[inst.as_bytes(), &serde_json::to_vec(&params)?]);
            let out = ws.sample(&q.instance_id, kind.id());
            if !stamps.fresh(&out, &key) {
                tasks.push((q, params, out, key));
            }
        }
    }
    let done = par_try("solve", &tasks, |t| format!("{}/{}", t.0.instance_id, t.1.kind()), |(q, params, out, _)| {
        let set = params.run(q)?;
        write_if_changed(out, sampleset_to_json(&set).as_bytes())?;
        Ok(out.clone())
    })?;
    for (_, _, out, key) in tasks {
        stamps.record(&out, key);
    }
    stamps.save()?;
    Ok(done)
}

/// Validates external sample files against their instances and copies them
/// into the workspace.
pub fn stage_ingest(config: &PipelineConfig, ws: &Workspace, instances: &[QuboInstance]) -> Result<Vec<PathBuf>> {
    let Some(dir) = &config.external_samples else { return Ok(vec![]) };
    let by_id: BTreeMap<&str, &QuboInstance> = instances.iter().map(|q| (q.instance_id.as_str(), q)).collect();
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut stamps = Stamps::load(ws, "ingest")?;
    let mut written = Vec::new();
    let mut failures = Vec::new();
    for f in files {
        let raw = match read_sample_file(&f) {
            Ok(s) => s,
            Err(e) => {
                failures.push((f.display().to_string(), e));
                continue;
            }
        };
        let out = ws.sample(&raw.instance_id, &raw.solver_id);
        let key = digest(&[file_digest(&f)?.as_bytes(), file_digest(&ws.instance(&raw.instance_id))?.as_bytes()]);
        if stamps.fresh(&out, &key) {
            continue;
        }
        match ingest_samples(&f, |id| by_id.get(id).copied()) {
            Ok(set) => {
                write_if_changed(&out, sampleset_to_json(&set).as_bytes())?;
                stamps.record(&out, key);
                written.push(out);
            }
            Err(e) => failures.push((raw.instance_id.clone(), e)),
        }
    }
    stamps.save()?;
    if !failures.is_empty() {
        return Err(stage_err("ingest", failures));
    }
    Ok(written)
}

/// Enumerated space summary with the solution-space feature fragments.
pub fn space_file(q: &QuboInstance) -> Result<SpaceFile> {
    let s = enumerate(q)?;
    let mut feats = BTreeMap::new();
    for quarter in [false, true] {
        feats.extend(features_solspace(&s, quarter));
        feats.extend(features_normul(&s, quarter));
    }
    Ok(SpaceFile::from_space(&q.instance_id, &s, feats))
}

pub fn stage_enumerate(config: &PipelineConfig, ws: &Workspace, instances: &[QuboInstance]) -> Result<Vec<PathBuf>> {
    let mut stamps = Stamps::load(ws, "enumerate")?;
    let mut tasks = Vec::new();
    for q in instances.iter().filter(|q| q.n() <= config.max_enumerate_n) {
        let key = digest(&[b"enumerate", file_digest(&ws.instance(&q.instance_id))?.as_bytes()]);
        let out = ws.space(&q.instance_id);
        if !stamps.fresh(&out, &key) {
            tasks.push((q, out, key));
        }
    }
    let done = par_try("enumerate", &tasks, |t| t.0.instance_id.clone(), |(q, out, _)| {
        write_if_changed(out, &json_line(&space_file(q)?)?)?;
        Ok(out.clone())
    })?;
    for (_, out, key) in tasks {
        stamps.record(&out, key);
    }
    stamps.save()?;
    Ok(done)
}

/// Finds, validates and stamps the chain strength of one embedding.
pub fn embed_instance(q: &QuboInstance, target: &super::EmbeddingTarget, seed_: u64) -> Result<Embedding> {
    let logical = q.to_ising();
    let opts = FindOptions { max_tries: target.max_tries, ..FindOptions::default() };
    let (mut emb, hw) = match target.m {
        Some(m) => {
            let hw = build_topology(target.family, m)?;
            (find_embedding_with(&logical, &hw, seed_, opts)?, hw)
        }
        None => auto_embed(&logical, target.family, seed_, opts, 3)?,
    };
    emb.instance_id = q.instance_id.clone();
    let report = validate_embedding(&emb, &logical, &hw);
    if !report.is_valid() {
        return Err(Error::Embedding(format!("invalid embedding: {:?}", report.violations)));
    }
    emb.chain_strength = Some(target.chain_strength.unwrap_or_else(|| default_chain_strength(&logical)));
    Ok(emb)
}

pub fn stage_embed(config: &PipelineConfig, ws: &Workspace, instances: &[QuboInstance]) -> Result<Vec<PathBuf>> {
    let Some(target) = &config.embedding else { return Ok(vec![]) };
    let mut stamps = Stamps::load(ws, "embed")?;
    let target_json = serde_json::to_vec(target)?;
    let mut tasks = Vec::new();
    for q in instances {
        let s = seed::derive_str(config.master_seed, &format!("embed/{}", q.instance_id));
        let key = digest(&[file_digest(&ws.instance(&q.instance_id))?.as_bytes(), &target_json, &s.to_le_bytes()]);
        let out = ws.embedding(&q.instance_id);
        if !stamps.fresh(&out, &key) {
            tasks.push((q, s, out, key));
        }
    }
    let done = par_try("embed", &tasks, |t| t.0.instance_id.clone(), |(q, s, out, _)| {
        let emb = embed_instance(q, target, *s)?;
        write_if_changed(out, &json_line(&EmbeddingFile::from(&emb))?)?;
        Ok(out.clone())
    })?;
    for (_, _, out, key) in tasks {
        stamps.record(&out, key);
    }
    stamps.save()?;
    Ok(done)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

/// Full feature row from an instance plus its optional embedding and space files.
pub fn instance_features(q: &QuboInstance, emb: Option<&EmbeddingFile>, space: Option<&SpaceFile>) -> Result<FeatureVector> {
    let embedded = match emb {
        Some(f) => {
            let e = Embedding::try_from(f.clone())?;
            let hw = build_topology(e.family, e.m)?;
            let logical = q.to_ising();
            let cs = e.chain_strength.unwrap_or_else(|| default_chain_strength(&logical));
            Some(embed_ising(&logical, &e, &hw, cs)?)
        }
        None => None,
    };
    let mut fv = extract(q, embedded.as_ref(), None)?;
    if let Some(s) = space {
        for (k, v) in &s.features {
            fv.values.insert(k.clone(), *v);
        }
    }
    Ok(fv)
}

/// Feature rows for instances with optional embedding and space directories.
pub fn features_for(instances: &[QuboInstance], embeddings: Option<&Path>, spaces: Option<&Path>) -> Result<Vec<FeatureVector>> {
    par_try("features", instances, |q| q.instance_id.clone(), |q| {
        let load_emb = embeddings.map(|d| d.join(format!("{}.json", q.instance_id))).filter(|p| p.exists());
        let load_space = spaces.map(|d| d.join(format!("{}.json", q.instance_id))).filter(|p| p.exists());
        let emb: Option<EmbeddingFile> = load_emb.map(|p| read_json(&p)).transpose()?;
        let space: Option<SpaceFile> = load_space.map(|p| read_json(&p)).transpose()?;
        instance_features(q, emb.as_ref(), space.as_ref())
    })
}

pub fn stage_features(_config: &PipelineConfig, ws: &Workspace, instances: &[QuboInstance]) -> Result<Vec<PathBuf>> {
    let mut stamps = Stamps::load(ws, "features")?;
    std::fs::create_dir_all(ws.dir("features").join("rows"))?;
    let mut tasks = Vec::new();
    let mut row_keys = Vec::new();
    for q in instances {
        let id = &q.instance_id;
        let key = digest(&[
            b"features",
            file_digest(&ws.instance(id))?.as_bytes(),
            file_digest(&ws.embedding(id))?.as_bytes(),
            file_digest(&ws.space(id))?.as_bytes(),
        ]);
        let out = ws.feature_row(id);
        row_keys.push(key.clone());
        if !stamps.fresh(&out, &key) {
            tasks.push((q, out, key));
        }
    }
    let emb_dir = ws.dir("embeddings");
    let space_dir = ws.dir("spaces");
    let mut done = par_try("features", &tasks, |t| t.0.instance_id.clone(), |(q, out, _)| {
        let fv = features_for(std::slice::from_ref(*q), Some(&emb_dir), Some(&space_dir))?.remove(0);
        write_if_changed(out, &json_line(&fv)?)?;
        Ok(out.clone())
    })?;
    for (_, out, key) in tasks {
        stamps.record(&out, key);
    }
    let table_key = digest(&row_keys.iter().map(|k| k.as_bytes()).collect::<Vec<_>>());
    let csv_path = ws.features_csv();
    if !stamps.fresh(&csv_path, &table_key) {
        let rows: Vec<FeatureVector> = instances.iter().map(|q| read_json(&ws.feature_row(&q.instance_id))).collect::<Result<_>>()?;
        write_features_csv(&csv_path, &rows)?;
        write_sidecar(&ws.dir("features").join("features.json"))?;
        stamps.record(&csv_path, table_key);
        done.push(csv_path);
    }
    stamps.save()?;
    Ok(done)
}

/// Pool solver ids for a candidate: every classical solver except the candidate.
pub fn pool_for(candidate: &str) -> Vec<String> {
    SolverKind::ALL.iter().map(|k| k.id().to_string()).filter(|s| s != candidate).collect()
}

/// Label table from sample and space directories. Instances without candidate
/// samples are left out with a warning; missing pool samples are an error.
pub fn label_dir(instances: &[QuboInstance], samples: &Path, spaces: Option<&Path>, candidate: &str, eps_list: &[f64]) -> Result<LabelTable> {
    let pool_ids = pool_for(candidate);
    let sample_path = |id: &str, s: &str| samples.join(super::sample_file_name(id, s));
    let labelled: Vec<&QuboInstance> = instances
        .iter()
        .filter(|q| {
            let has = sample_path(&q.instance_id, candidate).exists();
            if !has {
                log::warn!("{}: no {candidate} samples, not labelled", q.instance_id);
            }
            has
        })
        .collect();
    let rows = par_try("label", &labelled, |q| q.instance_id.clone(), |q| {
        let cand = read_sample_file(&sample_path(&q.instance_id, candidate))?;
        let pool: Vec<SampleSet> = pool_ids.iter().map(|s| read_sample_file(&sample_path(&q.instance_id, s))).collect::<Result<_>>()?;
        let space: Option<SpaceFile> =
            spaces.map(|d| d.join(format!("{}.json", q.instance_id))).filter(|p| p.exists()).map(|p| read_json(&p)).transpose()?;
        super::label_instance(q, &cand, &pool, space.as_ref(), eps_list)
    })?;
    Ok(LabelTable { candidate: candidate.to_string(), pool: pool_ids, eps_list: eps_list.to_vec(), rows })
}

pub fn stage_label(config: &PipelineConfig, ws: &Workspace, instances: &[QuboInstance]) -> Result<Vec<PathBuf>> {
    let mut stamps = Stamps::load(ws, "label")?;
    let candidate = config.candidate_id();
    let mut parts: Vec<Vec<u8>> = vec![candidate.clone().into_bytes(), serde_json::to_vec(&config.eps_list)?];
    let mut solvers = vec![candidate.clone()];
    solvers.extend(pool_for(&candidate));
    for q in instances {
        let id = &q.instance_id;
        parts.push(file_digest(&ws.instance(id))?.into_bytes());
        parts.push(file_digest(&ws.space(id))?.into_bytes());
        for s in &solvers {
            parts.push(file_digest(&ws.sample(id, s))?.into_bytes());
        }
    }
    let key = digest(&parts.iter().map(Vec::as_slice).collect::<Vec<_>>());
    let out = ws.labels_csv();
    if stamps.fresh(&out, &key) {
        return Ok(vec![]);
    }
    let table = label_dir(instances, &ws.dir("samples"), Some(&ws.dir("spaces")), &candidate, &config.eps_list)?;
    table.write_csv(&out)?;
    stamps.record(&out, key);
    stamps.save()?;
    Ok(vec![out])
}

/// Every id in the label and feature tables must name an instance file.
pub fn check_references(ws: &Workspace, instances: &[QuboInstance]) -> Result<()> {
    let known: BTreeSet<&str> = instances.iter().map(|q| q.instance_id.as_str()).collect();
    let mut dangling = BTreeSet::new();
    if ws.labels_csv().exists() {
        for r in LabelTable::read_csv(&ws.labels_csv())?.rows {
            if !known.contains(r.instance_id.as_str()) || !ws.instance(&r.instance_id).exists() {
                dangling.insert(r.instance_id);
            }
        }
    }
    if ws.features_csv().exists() {
        for f in crate::features::read_features_csv(&ws.features_csv())? {
            if !known.contains(f.instance_id.as_str()) || !ws.instance(&f.instance_id).exists() {
                dangling.insert(f.instance_id);
            }
        }
    }
    if dangling.is_empty() {
        Ok(())
    } else {
        Err(Error::Stage {
            stage: "train".into(),
            message: "label or feature rows without an instance file".into(),
            ids: dangling.into_iter().collect(),
        })
    }
}

/// Everything needed to score, inspect or re-run importance for one
/// cross-validated model family on one view and target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub view: String,
    pub target: String,
    pub model: ModelFamily,
    pub seed: u64,
    pub budget: usize,
    pub feature_names: Vec<String>,
    pub ids: Vec<String>,
    pub classes: Vec<String>,
    pub x: Vec<Vec<Option<f64>>>,
    pub y: Vec<bool>,
    pub folds: Vec<FoldModel>,
    pub report: CvReport,
}

impl TrainedModel {
    pub fn dataset(&self) -> Result<MetaDataset> {
        MetaDataset::new(
            self.feature_names.clone(),
            self.ids.clone(),
            self.classes.clone(),
            self.x.iter().map(|r| r.iter().map(|v| v.unwrap_or(f64::NAN)).collect()).collect(),
            self.y.clone(),
            &self.target,
            &self.view,
        )
    }

    /// Importance pooled over the outer folds, each on its own test rows.
    pub fn importance(&self, repeats: usize) -> Result<PfiReport> {
        cv_importance(&self.folds, &self.dataset()?, repeats, seed::derive_str(self.seed, "pfi"))
    }
}

/// Nested cross-validation of one family on a dataset.
pub fn train_model(ds: &MetaDataset, family: ModelFamily, budget: usize, seed_: u64) -> Result<TrainedModel> {
    let pos = ds.y.iter().filter(|&&b| b).count();
    if pos == 0 || pos == ds.len() {
        return Err(Error::Validation(format!("{} / {}: every labelled row is {}", ds.view, ds.target_name, pos > 0)));
    }
    let plan = CvPlan::for_dataset(ds, seed::derive_str(seed_, "plan"))?;
    let out = nested_cv(ds, &SearchSpace::new(family), &plan, budget, seed_)?;
    Ok(TrainedModel {
        view: ds.view.clone(),
        target: ds.target_name.clone(),
        model: family,
        seed: seed_,
        budget,
        feature_names: ds.feature_names.clone(),
        ids: ds.ids.clone(),
        classes: ds.classes.clone(),
        x: ds.x.iter().map(|r| r.iter().map(|v| (!v.is_nan()).then_some(*v)).collect()).collect(),
        y: ds.y.clone(),
        folds: out.folds,
        report: out.report,
    })
}

/// Writes model.json, report.json and pfi.csv into `dir`.
pub fn write_model_dir(dir: &Path, trained: &TrainedModel, pfi: &PfiReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_if_changed(&dir.join("model.json"), &json_line(trained)?)?;
    write_if_changed(&dir.join("report.json"), &json_line(&trained.report)?)?;
    pfi.write_csv(&dir.join("pfi.csv"))?;
    Ok(())
}

pub fn train_seed(master: u64, view: &str, target: &str, model: ModelFamily) -> u64 {
    seed::derive_str(master, &format!("train/{view}/{target}/{model}"))
}

pub fn stage_train(config: &PipelineConfig, ws: &Workspace) -> Result<(Vec<PathBuf>, Vec<String>)> {
    let mut stamps = Stamps::load(ws, "train")?;
    let (features_path, labels_path) = (ws.features_csv(), ws.labels_csv());
    if !features_path.exists() || !labels_path.exists() {
        return Ok((vec![], vec!["no feature or label table; training skipped".into()]));
    }
    let inputs = [file_digest(&features_path)?, file_digest(&labels_path)?];
    let mut features = None;
    let mut labels = None;
    let mut done = Vec::new();
    let mut notes = Vec::new();
    for view in &config.views {
        for target in &config.targets {
            for &family in &config.models {
                let dir = ws.model_dir(view, target, family);
                let s = train_seed(config.master_seed, view, target, family);
                let key = digest(&[
                    inputs[0].as_bytes(),
                    inputs[1].as_bytes(),
                    view.as_bytes(),
                    target.as_bytes(),
                    family.name().as_bytes(),
                    &(config.search_budget as u64).to_le_bytes(),
                    &(config.pfi_repeats as u64).to_le_bytes(),
                    &s.to_le_bytes(),
                ]);
                let marker = dir.join("report.json");
                if stamps.fresh(&marker, &key) {
                    continue;
                }
                let fv = match &features {
                    Some(f) => f,
                    None => features.insert(crate::features::read_features_csv(&features_path)?),
                };
                let lt = match &labels {
                    Some(l) => l,
                    None => labels.insert(LabelTable::read_csv(&labels_path)?),
                };
                let stage = |e: Error| Error::Stage { stage: "train".into(), ids: vec![], message: format!("{view}/{target}/{family}: {e}") };
                let ds = MetaDataset::from_tables(fv, &lt.target(target).map_err(stage)?, view, target).map_err(stage)?;
                if ds.len() < MIN_TRAIN_ROWS {
                    notes.push(format!("{view}/{target}/{family}: {} labelled rows, at least {MIN_TRAIN_ROWS} needed; skipped", ds.len()));
                    continue;
                }
                let pos = ds.y.iter().filter(|&&b| b).count();
                if pos == 0 || pos == ds.len() {
                    notes.push(format!("{view}/{target}/{family}: single-class target; skipped"));
                    continue;
                }
                let trained = train_model(&ds, family, config.search_budget, s).map_err(stage)?;
                let pfi = trained.importance(config.pfi_repeats).map_err(stage)?;
                write_model_dir(&dir, &trained, &pfi)?;
                stamps.record(&marker, key);
                stamps.save()?;
                done.push(dir);
            }
        }
    }
    stamps.save()?;
    Ok((done, notes))
}

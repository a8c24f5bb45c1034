//! End-to-end orchestration over a workspace directory:
//! generate → solve → enumerate → embed → features → label → train (+PFI) → report.
//!
//! Every artifact carries a content-hash stamp of its inputs; a stage
//! recomputes an artifact only when the artifact is missing or its stamp no
//! longer matches.

mod labels;
mod report;
mod stages;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::Family;
use crate::error::{Error, Result};
use crate::features::{COMPONENT_SETS, DOMAINS};
use crate::metalearn::{ModelFamily, DEFAULT_BUDGET};
use crate::problems::GenerationSpec;

pub use labels::{label_instance, LabelTable, LabelTableRow};
pub use report::{report, ReportBundle};
pub use stages::*;

/// Environment variable that overrides the configured workspace root.
pub const WORKSPACE_ENV: &str = "QUBO_META_WORKSPACE";

pub const SUBDIRS: [&str; 8] = ["instances", "samples", "spaces", "embeddings", "features", "labels", "models", "reports"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingTarget {
    pub family: Family,
    /// Topology size; the smallest adequate size per instance when absent.
    #[serde(default)]
    pub m: Option<usize>,
    /// Defaults to 1.5·max|J| of each logical model.
    #[serde(default)]
    pub chain_strength: Option<f64>,
    #[serde(default = "default_tries")]
    pub max_tries: usize,
}

fn default_tries() -> usize {
    10
}

impl Default for EmbeddingTarget {
    fn default() -> Self {
        EmbeddingTarget { family: Family::Pegasus, m: None, chain_strength: None, max_tries: default_tries() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub workspace: PathBuf,
    #[serde(default = "default_generation")]
    pub generation: Vec<GenerationSpec>,
    /// Feature-selection source tables; the bundled synthetic corpus when empty.
    #[serde(default)]
    pub datasets: Vec<PathBuf>,
    /// Solver → class → parameter overrides (see `ParamTable`).
    #[serde(default)]
    pub solver_params: Option<PathBuf>,
    #[serde(default)]
    pub solver_overrides: Option<crate::solvers::ParamTable>,
    #[serde(default = "default_embedding")]
    pub embedding: Option<EmbeddingTarget>,
    #[serde(default = "default_eps")]
    pub eps_list: Vec<f64>,
    /// Defaults to "QA" when external samples are configured, else "SA".
    #[serde(default)]
    pub candidate: Option<String>,
    /// Directory of sample files to ingest (e.g. published annealer samples).
    #[serde(default)]
    pub external_samples: Option<PathBuf>,
    #[serde(default = "default_views")]
    pub views: Vec<String>,
    #[serde(default = "default_targets")]
    pub targets: Vec<String>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelFamily>,
    #[serde(default = "default_budget")]
    pub search_budget: usize,
    #[serde(default = "default_repeats")]
    pub pfi_repeats: usize,
    /// Largest n that is enumerated.
    #[serde(default = "default_enumerate_n")]
    pub max_enumerate_n: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub workers: usize,
}

fn default_generation() -> Vec<GenerationSpec> {
    vec![GenerationSpec::small(0)]
}

fn default_embedding() -> Option<EmbeddingTarget> {
    Some(EmbeddingTarget::default())
}

fn default_eps() -> Vec<f64> {
    vec![1e-5]
}

fn default_views() -> Vec<String> {
    DOMAINS.iter().chain(COMPONENT_SETS.iter()).map(|s| s.to_string()).collect()
}

fn default_targets() -> Vec<String> {
    vec!["over_all".into()]
}

fn default_models() -> Vec<ModelFamily> {
    vec![ModelFamily::Forest, ModelFamily::Logistic]
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

fn default_repeats() -> usize {
    10
}

fn default_enumerate_n() -> usize {
    32
}

impl PipelineConfig {
    pub fn new(workspace: impl Into<PathBuf>) -> Self {
        serde_json::from_value(serde_json::json!({ "workspace": workspace.into() })).expect("defaults deserialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies the workspace environment override.
    pub fn with_env_override(mut self) -> Self {
        if let Some(ws) = std::env::var_os(WORKSPACE_ENV).filter(|v| !v.is_empty()) {
            self.workspace = PathBuf::from(ws);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.generation {
            g.validate()?;
        }
        if self.eps_list.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::Validation(format!("eps values must lie in [0, 1]: {:?}", self.eps_list)));
        }
        for v in &self.views {
            crate::features::view_names(v)?;
        }
        if self.search_budget == 0 {
            return Err(Error::Validation("search_budget must be positive".into()));
        }
        if self.pfi_repeats < 5 {
            return Err(Error::Validation("pfi_repeats must be at least 5".into()));
        }
        if self.max_enumerate_n > 32 {
            return Err(Error::Validation("max_enumerate_n above 32 is not supported".into()));
        }
        if let Some(c) = &self.candidate {
            if c.is_empty() {
                return Err(Error::Validation("candidate id is empty".into()));
            }
        }
        Ok(())
    }

    pub fn candidate_id(&self) -> String {
        self.candidate.clone().unwrap_or_else(|| if self.external_samples.is_some() { "QA".into() } else { "SA".into() })
    }

    pub fn workspace(&self) -> Workspace {
        Workspace::new(&self.workspace)
    }
}

/// Paths inside a workspace.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    /// Creates the standard subdirectories (idempotent).
    pub fn init(&self) -> Result<()> {
        for d in SUBDIRS {
            std::fs::create_dir_all(self.root.join(d))?;
        }
        std::fs::create_dir_all(self.root.join(".stamps"))?;
        Ok(())
    }

    pub fn dir(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn instance(&self, id: &str) -> PathBuf {
        self.root.join("instances").join(format!("{id}.json"))
    }

    pub fn sample(&self, id: &str, solver: &str) -> PathBuf {
        self.root.join("samples").join(sample_file_name(id, solver))
    }

    pub fn space(&self, id: &str) -> PathBuf {
        self.root.join("spaces").join(format!("{id}.json"))
    }

    pub fn embedding(&self, id: &str) -> PathBuf {
        self.root.join("embeddings").join(format!("{id}.json"))
    }

    pub fn feature_row(&self, id: &str) -> PathBuf {
        self.root.join("features").join("rows").join(format!("{id}.json"))
    }

    pub fn features_csv(&self) -> PathBuf {
        self.root.join("features").join("features.csv")
    }

    pub fn labels_csv(&self) -> PathBuf {
        self.root.join("labels").join("labels.csv")
    }

    pub fn model_dir(&self, view: &str, target: &str, model: ModelFamily) -> PathBuf {
        self.root.join("models").join(model_dir_name(view, target, model))
    }
}

pub fn sample_file_name(id: &str, solver: &str) -> String {
    format!("{id}__{solver}.json")
}

pub fn model_dir_name(view: &str, target: &str, model: ModelFamily) -> String {
    let clean = |s: &str| s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect::<String>();
    format!("{}__{}__{}", clean(view), clean(target), model)
}

/// SHA-256 hex digest of length-prefixed parts.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of a file's bytes, or of the empty marker when it does not exist.
pub fn file_digest(path: &Path) -> Result<String> {
    match std::fs::read(path) {
        Ok(bytes) => Ok(digest(&[b"file", &bytes])),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(digest(&[b"absent"])),
        Err(e) => Err(e.into()),
    }
}

/// Input-hash stamps of one stage, persisted under `.stamps/`.
#[derive(Debug)]
pub struct Stamps {
    path: Option<PathBuf>,
    map: BTreeMap<String, String>,
}

impl Stamps {
    pub fn load(ws: &Workspace, stage: &str) -> Result<Self> {
        let path = ws.root.join(".stamps").join(format!("{stage}.json"));
        let map = match std::fs::read(&path) {
            Ok(b) => serde_json::from_slice(&b)?,
            Err(_) => BTreeMap::new(),
        };
        Ok(Stamps { path: Some(path), map })
    }

    /// Stamps that never match, for one-off command line runs.
    pub fn none() -> Self {
        Stamps { path: None, map: BTreeMap::new() }
    }

    pub fn fresh(&self, artifact: &Path, key: &str) -> bool {
        self.path.is_some() && artifact.exists() && self.map.get(&artifact.display().to_string()).is_some_and(|k| k == key)
    }

    pub fn record(&mut self, artifact: &Path, key: String) {
        self.map.insert(artifact.display().to_string(), key);
    }

    pub fn save(&self) -> Result<()> {
        if let Some(p) = &self.path {
            crate::io::write_if_changed(p, (serde_json::to_string_pretty(&self.map)? + "\n").as_bytes())?;
        }
        Ok(())
    }
}

/// What each stage of a run recomputed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunSummary {
    /// Stage name → recomputed artifact paths (relative to the workspace).
    pub recomputed: BTreeMap<String, Vec<String>>,
    /// Notes about skipped work (e.g. models without enough rows).
    pub notes: Vec<String>,
}

impl RunSummary {
    pub fn total_recomputed(&self) -> usize {
        self.recomputed.values().map(Vec::len).sum()
    }

    pub fn stage(&self, name: &str) -> &[String] {
        self.recomputed.get(name).map_or(&[], Vec::as_slice)
    }
}

/// Runs every stage in order.
pub fn run(config: &PipelineConfig) -> Result<RunSummary> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Validation(format!("worker pool: {e}")))?;
    pool.install(|| run_stages(config))
}

fn note(summary: &mut RunSummary, ws: &Workspace, stage: &str, paths: Vec<PathBuf>) {
    let rel = paths.iter().map(|p| p.strip_prefix(&ws.root).unwrap_or(p).display().to_string()).collect();
    summary.recomputed.insert(stage.to_string(), rel);
}

fn run_stages(config: &PipelineConfig) -> Result<RunSummary> {
    let ws = config.workspace();
    ws.init()?;
    let mut s = RunSummary::default();
    let (instances, written) = stage_generate(config, &ws)?;
    note(&mut s, &ws, "generate", written);
    note(&mut s, &ws, "ingest", stage_ingest(config, &ws, &instances)?);
    note(&mut s, &ws, "solve", stage_solve(config, &ws, &instances)?);
    note(&mut s, &ws, "enumerate", stage_enumerate(config, &ws, &instances)?);
    note(&mut s, &ws, "embed", stage_embed(config, &ws, &instances)?);
    note(&mut s, &ws, "features", stage_features(config, &ws, &instances)?);
    note(&mut s, &ws, "label", stage_label(config, &ws, &instances)?);
    check_references(&ws, &instances)?;
    let (trained, notes) = stage_train(config, &ws)?;
    note(&mut s, &ws, "train", trained);
    s.notes.extend(notes);
    let bundle = report(&ws.root)?;
    note(&mut s, &ws, "report", bundle.written);
    s.notes.extend(bundle.notes);
    Ok(s)
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qubo_meta::embedding::{EmbeddingFile, Family};
use qubo_meta::error::{Error, Result};
use qubo_meta::features::{read_features_csv, write_features_csv, write_sidecar};
use qubo_meta::io::{write_if_changed, write_sampleset};
use qubo_meta::metalearn::{MetaDataset, ModelFamily, DEFAULT_BUDGET};
use qubo_meta::pipeline::{self as pl, EmbeddingTarget, LabelTable, PipelineConfig, TrainedModel, Workspace, WORKSPACE_ENV};
use qubo_meta::problems::GenerationSpec;
use qubo_meta::solvers::{ParamTable, SolverKind};
use qubo_meta::ProblemClass;

/// QUBO benchmark generation, classical solving, feature extraction and
/// solver-effectiveness meta-learning.
///
/// Stage subcommands work on explicit paths when given; otherwise they run
/// that stage on the configured workspace.
#[derive(Parser)]
#[command(name = "qubo-meta", version)]
struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Workspace root; overrides the configuration.
    #[arg(long, global = true, env = WORKSPACE_ENV)]
    workspace: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate QUBO instances.
    Generate(GenerateArgs),
    /// Run SA, TS and SD on instances.
    Solve(SolveArgs),
    /// Enumerate the solution space of small instances.
    Enumerate(EnumerateArgs),
    /// Minor-embed instances into a hardware topology.
    Embed(EmbedArgs),
    /// Extract the feature table.
    Features(FeaturesArgs),
    /// Build the label table for a candidate solver.
    Label(LabelArgs),
    /// Nested cross-validation of one model family on one view and target.
    Train(TrainArgs),
    /// Permutation feature importance of a trained model directory.
    Pfi(PfiArgs),
    /// Write the report bundle of a workspace.
    Report,
    /// Run every stage on the workspace.
    Run,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    /// small (27-32 variables) or large (69-99)
    #[arg(long, default_value = "small")]
    preset: String,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    n_rep: Option<usize>,
    /// Comma-separated class names; all ten by default.
    #[arg(long, value_delimiter = ',')]
    classes: Vec<ProblemClass>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, requires = "out")]
    instances: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solvers to run; all three by default.
    #[arg(long, value_delimiter = ',')]
    solver: Vec<SolverKind>,
    /// Solver → class → parameter table (JSON).
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long, requires = "out")]
    instances: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    max_n: usize,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long, requires = "out")]
    instances: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "pegasus")]
    family: Family,
    /// Topology size; the smallest adequate size per instance when absent.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    chain_strength: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long, requires = "out")]
    instances: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    spaces: Option<PathBuf>,
    /// Feature CSV; a `.json` sidecar describing the columns is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long, requires_all = ["samples", "out"])]
    instances: Option<PathBuf>,
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long)]
    spaces: Option<PathBuf>,
    #[arg(long, default_value = "SA")]
    candidate: String,
    #[arg(long, value_delimiter = ',', default_value = "1e-5")]
    eps: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, requires_all = ["labels", "view", "target", "model", "out"])]
    features: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Domain, component set or `all`.
    #[arg(long)]
    view: Option<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    model: Option<ModelFamily>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    /// Report JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also keep the fitted fold models here (for `pfi`).
    #[arg(long)]
    model_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PfiArgs {
    #[arg(long)]
    model_dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
}

fn config(cli: &Cli) -> Result<PipelineConfig> {
    let mut c = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => match &cli.workspace {
            Some(w) => PipelineConfig::new(w),
            None => return Err(Error::Validation(format!("give explicit paths, --config, --workspace or {WORKSPACE_ENV}"))),
        },
    };
    if let Some(w) = &cli.workspace {
        c.workspace = w.clone();
    }
    Ok(c)
}

/// Workspace and its instances, generating them first when needed.
fn workspace(cli: &Cli) -> Result<(PipelineConfig, Workspace, Vec<qubo_meta::QuboInstance>)> {
    let c = config(cli)?;
    let ws = c.workspace();
    ws.init()?;
    let (instances, _) = pl::stage_generate(&c, &ws)?;
    Ok((c, ws, instances))
}

fn print_paths(paths: &[PathBuf]) {
    println!("{} file(s) written", paths.len());
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<()> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d)?;
    }
    write_if_changed(path, (serde_json::to_string_pretty(v)? + "\n").as_bytes())?;
    Ok(())
}

fn generate(cli: &Cli, a: &GenerateArgs) -> Result<()> {
    let Some(out) = &a.out else {
        let c = config(cli)?;
        let ws = c.workspace();
        ws.init()?;
        let (instances, written) = pl::stage_generate(&c, &ws)?;
        println!("{} instance(s)", instances.len());
        return Ok(print_paths(&written));
    };
    let mut spec = match a.preset.as_str() {
        "small" => GenerationSpec::small(a.seed),
        "large" => GenerationSpec::large(a.seed),
        p => return Err(Error::Validation(format!("unknown preset `{p}`; expected small or large"))),
    };
    if a.n_min.is_some() || a.n_max.is_some() || a.n_rep.is_some() {
        let mut custom = GenerationSpec::custom(
            a.n_min.unwrap_or(spec.n_min),
            a.n_max.unwrap_or(spec.n_max),
            a.n_rep.unwrap_or(spec.n_rep),
            a.seed,
        )?;
        custom.size_class = spec.size_class;
        spec = custom;
    }
    if !a.classes.is_empty() {
        spec.classes = a.classes.clone();
    }
    let instances = qubo_meta::problems::generate(&spec)?;
    let written = pl::write_instances(out, &instances)?;
    println!("{} instance(s)", instances.len());
    print_paths(&written);
    Ok(())
}

fn solve(cli: &Cli, a: &SolveArgs) -> Result<()> {
    let (Some(dir), Some(out)) = (&a.instances, &a.out) else {
        let (c, ws, instances) = workspace(cli)?;
        return Ok(print_paths(&pl::stage_solve(&c, &ws, &instances)?));
    };
    let instances = pl::load_instances(dir)?;
    let table = match &a.params {
        Some(p) => ParamTable::load(p)?,
        None => ParamTable::default(),
    };
    let kinds = if a.solver.is_empty() { SolverKind::ALL.to_vec() } else { a.solver.clone() };
    std::fs::create_dir_all(out)?;
    for kind in kinds {
        for set in pl::solve_all(&instances, kind, &table, a.seed)? {
            write_sampleset(&set, &out.join(pl::sample_file_name(&set.instance_id, kind.id())))?;
        }
    }
    println!("{} instance(s) solved", instances.len());
    Ok(())
}

fn enumerate(cli: &Cli, a: &EnumerateArgs) -> Result<()> {
    let (Some(dir), Some(out)) = (&a.instances, &a.out) else {
        let (c, ws, instances) = workspace(cli)?;
        return Ok(print_paths(&pl::stage_enumerate(&c, &ws, &instances)?));
    };
    std::fs::create_dir_all(out)?;
    let mut k = 0;
    for q in pl::load_instances(dir)?.iter().filter(|q| q.n() <= a.max_n) {
        write_json(&out.join(format!("{}.json", q.instance_id)), &pl::space_file(q)?)?;
        k += 1;
    }
    println!("{k} space(s) enumerated");
    Ok(())
}

fn embed(cli: &Cli, a: &EmbedArgs) -> Result<()> {
    let (Some(dir), Some(out)) = (&a.instances, &a.out) else {
        let (c, ws, instances) = workspace(cli)?;
        return Ok(print_paths(&pl::stage_embed(&c, &ws, &instances)?));
    };
    let target = EmbeddingTarget { family: a.family, m: a.m, chain_strength: a.chain_strength, ..EmbeddingTarget::default() };
    std::fs::create_dir_all(out)?;
    let instances = pl::load_instances(dir)?;
    for q in &instances {
        let s = qubo_meta::seed::derive_str(a.seed, &format!("embed/{}", q.instance_id));
        let emb = pl::embed_instance(q, &target, s)
            .map_err(|e| Error::Stage { stage: "embed".into(), ids: vec![q.instance_id.clone()], message: e.to_string() })?;
        write_json(&out.join(format!("{}.json", q.instance_id)), &EmbeddingFile::from(&emb))?;
    }
    println!("{} embedding(s)", instances.len());
    Ok(())
}

fn features(cli: &Cli, a: &FeaturesArgs) -> Result<()> {
    let (Some(dir), Some(out)) = (&a.instances, &a.out) else {
        let (c, ws, instances) = workspace(cli)?;
        return Ok(print_paths(&pl::stage_features(&c, &ws, &instances)?));
    };
    let rows = pl::features_for(&pl::load_instances(dir)?, a.embeddings.as_deref(), a.spaces.as_deref())?;
    if let Some(d) = out.parent() {
        std::fs::create_dir_all(d)?;
    }
    write_features_csv(out, &rows)?;
    write_sidecar(&out.with_extension("json"))?;
    println!("{} row(s)", rows.len());
    Ok(())
}

fn label(cli: &Cli, a: &LabelArgs) -> Result<()> {
    let (Some(dir), Some(samples), Some(out)) = (&a.instances, &a.samples, &a.out) else {
        let (c, ws, instances) = workspace(cli)?;
        return Ok(print_paths(&pl::stage_label(&c, &ws, &instances)?));
    };
    let t = pl::label_dir(&pl::load_instances(dir)?, samples, a.spaces.as_deref(), &a.candidate, &a.eps)?;
    if let Some(d) = out.parent() {
        std::fs::create_dir_all(d)?;
    }
    t.write_csv(out)?;
    println!("{} labelled instance(s)", t.rows.len());
    Ok(())
}

fn train(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let Some(features) = &a.features else {
        let c = config(cli)?;
        let ws = c.workspace();
        let (written, notes) = pl::stage_train(&c, &ws)?;
        for n in notes {
            eprintln!("note: {n}");
        }
        return Ok(print_paths(&written));
    };
    // clap's `requires_all` guarantees these are present
    let (labels, view, target, model, out) =
        (a.labels.as_ref().unwrap(), a.view.as_ref().unwrap(), a.target.as_ref().unwrap(), a.model.unwrap(), a.out.as_ref().unwrap());
    let table = LabelTable::read_csv(labels)?;
    let ds = MetaDataset::from_tables(&read_features_csv(features)?, &table.target(target)?, view, target)?;
    let trained = pl::train_model(&ds, model, a.budget, a.seed)?;
    write_json(out, &trained.report)?;
    if let Some(dir) = &a.model_dir {
        write_json(&dir.join("model.json"), &trained)?;
        write_json(&dir.join("report.json"), &trained.report)?;
    }
    println!("outer BA {:.4} ± {:.4} over {} rows", trained.report.outer_ba_mean, trained.report.outer_ba_std, ds.len());
    Ok(())
}

fn pfi(a: &PfiArgs) -> Result<()> {
    let trained: TrainedModel = pl::read_json(&a.model_dir.join("model.json"))?;
    let r = trained.importance(a.repeats)?;
    if let Some(d) = a.out.parent() {
        std::fs::create_dir_all(d)?;
    }
    r.write_csv(&a.out)?;
    for f in r.top(5) {
        println!("{:>3}  {:+.4}  {}", f.rank, f.mean_drop, f.feature);
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Generate(a) => generate(cli, a),
        Cmd::Solve(a) => solve(cli, a),
        Cmd::Enumerate(a) => enumerate(cli, a),
        Cmd::Embed(a) => embed(cli, a),
        Cmd::Features(a) => features(cli, a),
        Cmd::Label(a) => label(cli, a),
        Cmd::Train(a) => train(cli, a),
        Cmd::Pfi(a) => pfi(a),
        Cmd::Report => {
            let c = config(cli)?;
            let b = pl::report(&c.workspace)?;
            for n in b.notes {
                eprintln!("note: {n}");
            }
            print_paths(&b.written);
            Ok(())
        }
        Cmd::Run => {
            let s = pl::run(&config(cli)?)?;
            for (stage, paths) in &s.recomputed {
                println!("{stage:>10}: {} recomputed", paths.len());
            }
            for n in &s.notes {
                eprintln!("note: {n}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Stage { ids, .. } = &e {
                if !ids.is_empty() {
                    eprintln!("offending ids: {}", ids.join(", "));
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

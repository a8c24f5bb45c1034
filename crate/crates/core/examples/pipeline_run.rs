//! Runs the whole pipeline on a tiny configuration, then again to show that
//! nothing is recomputed.
//!
//!     cargo run --release --example pipeline_run -- /tmp/ws

use qubo_meta::pipeline::{run, PipelineConfig};
use qubo_meta::problems::GenerationSpec;
use qubo_meta::ProblemClass;

fn main() -> qubo_meta::Result<()> {
    let ws = std::env::args().nth(1).unwrap_or_else(|| "workspace".into());
    let mut c = PipelineConfig::new(&ws);
    let mut g = GenerationSpec::custom(10, 12, 2, 1)?;
    g.classes = vec![ProblemClass::MaxCut, ProblemClass::NumberPartitioning, ProblemClass::MaximumIndependentSet];
    g.sudoku_grids = 0;
    c.generation = vec![g];
    // weak SA candidate so labels are mixed
    c.solver_overrides = Some(serde_json::from_value(serde_json::json!({
        "SA": {"default": {"n_samples": 2, "sweeps": 5}},
        "TS": {"default": {"n_samples": 20}},
        "SD": {"default": {"n_samples": 20}}
    }))?);
    c.views = vec!["LogIsing".into(), "EmbIsing".into(), "MatStruct".into(), "SolSpace".into()];
    c.search_budget = 10;

    for pass in 1..=2 {
        let t = std::time::Instant::now();
        let s = run(&c)?;
        println!("pass {pass}: {} artifacts recomputed in {:.2?}", s.total_recomputed(), t.elapsed());
        for (stage, paths) in &s.recomputed {
            println!("  {stage:<10} {}", paths.len());
        }
    }
    print!("{}", std::fs::read_to_string(std::path::Path::new(&ws).join("reports/summary.md"))?);
    Ok(())
}

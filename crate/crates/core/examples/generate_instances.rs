//! Generates a small batch of every problem class and writes it to a directory.
//!
//!     cargo run --release --example generate_instances -- /tmp/instances

use std::collections::BTreeMap;

use qubo_meta::problems::{generate, write_batch, GenerationSpec};

fn main() -> qubo_meta::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "instances".into());
    let mut spec = GenerationSpec::custom(12, 14, 1, 7)?;
    spec.sudoku_grids = 2;
    let batch = generate(&spec)?;
    let mut per_class: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for q in &batch {
        let e = per_class.entry(q.problem_class.name().to_string()).or_insert((0, usize::MAX, 0));
        e.0 += 1;
        e.1 = e.1.min(q.n());
        e.2 = e.2.max(q.n());
    }
    for (class, (count, lo, hi)) in &per_class {
        println!("{class:<26} {count:>3} instances, n in {lo}..={hi}");
    }
    write_batch(&batch, std::path::Path::new(&out))?;
    println!("wrote {} instances and manifest.csv to {out}", batch.len());
    Ok(())
}

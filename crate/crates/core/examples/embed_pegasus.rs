//! Minor-embeds a Max-Cut instance into Pegasus, validates the chains and
//! checks that aligned hardware states keep the logical energy.

use qubo_meta::embedding::{auto_embed, default_chain_strength, embed_ising, validate_embedding, Family, FindOptions};
use qubo_meta::problems::{generate_graph, max_cut, Meta, Topology};
use rand::Rng;

fn main() -> qubo_meta::Result<()> {
    let g = generate_graph(Topology::ErdosRenyi, 16, 2)?;
    let logical = max_cut(&g, &Meta::anon())?.to_ising();
    let (emb, hw) = auto_embed(&logical, Family::Pegasus, 9, FindOptions::default(), 3)?;
    let report = validate_embedding(&emb, &logical, &hw);
    println!("pegasus({}): {} qubits used, longest chain {}, valid = {}", emb.m, emb.qubit_count(), emb.max_chain_len(), report.is_valid());

    let cs = default_chain_strength(&logical);
    let e = embed_ising(&logical, &emb, &hw, cs)?;
    let mut rng = qubo_meta::seed::rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let s: Vec<i8> = (0..logical.n()).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
        let want = logical.energy(&s) - cs * e.intra_chain_edges as f64;
        worst = worst.max((e.model.energy(&e.aligned_state(&s)) - want).abs());
    }
    println!("chain strength {cs}, worst aligned-state energy gap {worst:e}");
    Ok(())
}

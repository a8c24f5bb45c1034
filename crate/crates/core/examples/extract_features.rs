//! Full feature row of one instance: logical and embedded Ising, matrix
//! structure and solution-space domains.

use qubo_meta::embedding::{auto_embed, default_chain_strength, embed_ising, Family, FindOptions};
use qubo_meta::features::{extract, view_names, DOMAINS};
use qubo_meta::problems::{generate_graph, max_cut, Meta, Topology};
use qubo_meta::space::enumerate;

fn main() -> qubo_meta::Result<()> {
    let g = generate_graph(Topology::Grid2d, 12, 4)?;
    let q = max_cut(&g, &Meta::new("grid12", "grid2d", qubo_meta::SizeClass::Small))?;
    let logical = q.to_ising();
    let (emb, hw) = auto_embed(&logical, Family::Pegasus, 1, FindOptions::default(), 3)?;
    let embedded = embed_ising(&logical, &emb, &hw, default_chain_strength(&logical))?;
    let space = enumerate(&q)?;
    let row = extract(&q, Some(&embedded), Some(&space))?;

    for domain in DOMAINS {
        let names = view_names(domain)?;
        let present = names.iter().filter(|n| row.get(n).is_some()).count();
        println!("{domain:<14} {present:>3}/{:<3} features present", names.len());
    }
    for name in ["LogIsing Coupling gini index", "LogIsing Laplacian connectivity", "MatStruct gini index", "SolSpace grouped hhi"] {
        println!("{name:<34} {:?}", row.get(name));
    }
    Ok(())
}

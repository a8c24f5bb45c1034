//! SA, TS and SD on one Max-Cut instance, compared with the exhaustive optimum.

use qubo_meta::problems::{generate_graph, max_cut, Meta, Topology};
use qubo_meta::solvers::{SolverKind, SolverParams};
use qubo_meta::space::enumerate;

fn main() -> qubo_meta::Result<()> {
    let g = generate_graph(Topology::ErdosRenyi, 20, 3)?;
    let q = max_cut(&g, &Meta::anon())?;
    let s = enumerate(&q)?;
    let optimum = s.lambda_min + s.offset;
    println!("n = {}, optimum = {optimum}", q.n());
    for kind in SolverKind::ALL {
        let set = SolverParams::default_for(kind).with_seed(11).with_samples(50).run(&q)?;
        let hits = set.samples.iter().filter(|x| (x.cost - optimum).abs() < 1e-9).count();
        println!("{kind}: best {} ({hits}/{} samples optimal)", set.best_cost(), set.samples.len());
    }
    Ok(())
}

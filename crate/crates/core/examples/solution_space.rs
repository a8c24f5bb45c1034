//! Exhaustive spectrum of a number-partitioning instance and the three
//! optimality labels for a weak annealing run.

use qubo_meta::problems::{number_partitioning, Meta};
use qubo_meta::solvers::{SaParams, SolverParams};
use qubo_meta::space::{enumerate, label_small};

fn main() -> qubo_meta::Result<()> {
    let z = [7.0, 3.0, 9.0, 4.0, 12.0, 5.0, 8.0, 2.0, 6.0, 10.0, 11.0, 1.0];
    let q = number_partitioning(&z, &Meta::anon())?;
    let s = enumerate(&q)?;
    let levels = s.levels.as_ref().unwrap();
    println!("{} distinct levels over {} assignments", levels.len(), s.total());
    println!("λ_min = {} (cost {}), {} optima", s.lambda_min, s.lambda_min + s.offset, s.n_optima);
    println!("quartiles: {:?} {:?} {:?}", s.quantile(0.25), s.quantile(0.5), s.quantile(0.75));

    let weak = SolverParams::Sa(SaParams { sweeps: 3, n_samples: 4, seed: 5, ..SaParams::default() });
    let set = weak.run(&q)?;
    let l = label_small(&set, &s, &[0.0, 0.01, 0.1], &q)?;
    println!("best sample cost {}", set.best_cost());
    println!("optimal {}, eps-optimal {:?}, h-optimal {}", l.optimal, l.eps_optimal, l.h_optimal);
    Ok(())
}

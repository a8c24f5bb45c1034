//! Two-variable QUBO y = x1 + x2 - 2·x1·x2: Ising form and its spectrum.

use qubo_meta::space::enumerate;
use qubo_meta::{Matrix, ProblemClass, QuboInstance, SizeClass};

fn main() -> qubo_meta::Result<()> {
    let q = Matrix::from_rows(&[vec![1.0, -2.0], vec![0.0, 1.0]])?;
    let inst = QuboInstance::new("xor", ProblemClass::MaxCut, "example", SizeClass::Small, q, 0.0, None)?;
    let ising = inst.to_ising();
    println!("J = [[{}, {}], [{}, {}]]", ising.j[(0, 0)], ising.j[(0, 1)], ising.j[(1, 0)], ising.j[(1, 1)]);
    println!("b = {:?}, c = {}", ising.b, ising.c);

    let s = enumerate(&inst)?;
    for level in s.levels.as_deref().unwrap_or_default() {
        println!("λ = {:+} × {}", level.value, level.count);
    }
    println!("λ_min = {} (multiplicity {}), λ_min + c = {}", s.lambda_min, s.n_optima, s.lambda_min + s.offset);
    println!("optimal assignments: {:?}", s.optima);
    Ok(())
}

//! Nested cross-validation, permutation importance and rank correlation on a
//! synthetic dataset whose label depends on the first two features only.

use qubo_meta::metalearn::{cv_importance, nested_cv, spearman, CvPlan, MetaDataset, ModelFamily, SearchSpace};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> qubo_meta::Result<()> {
    let mut rng = qubo_meta::seed::rng(3);
    let (n, d) = (150, 6);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let y: Vec<bool> = x.iter().map(|r| r[0] - 0.5 * r[1] > 0.0).collect();
    let names: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
    let ids: Vec<String> = (0..n).map(|i| format!("row{i}")).collect();
    let classes: Vec<String> = (0..n).map(|i| ["a", "b", "c"][i % 3].to_string()).collect();
    let ds = MetaDataset::new(names.clone(), ids, classes, x.clone(), y.clone(), "planted", "synthetic")?;

    for family in [ModelFamily::Logistic, ModelFamily::Forest] {
        let plan = CvPlan::for_dataset(&ds, 1)?;
        let out = nested_cv(&ds, &SearchSpace::new(family), &plan, 10, 2)?;
        println!("{family}: outer BA {:.3} ± {:.3}", out.report.outer_ba_mean, out.report.outer_ba_std);
        let pfi = cv_importance(&out.folds, &ds, 10, 3)?;
        for f in pfi.top(3) {
            println!("  #{} {} (drop {:.3} ± {:.3})", f.rank, f.feature, f.mean_drop, f.std);
        }
    }
    let labels: Vec<f64> = y.iter().map(|&b| b as u8 as f64).collect();
    for (j, name) in names.iter().enumerate() {
        let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
        println!("spearman({name}, label) = {:+.3}", spearman(&col, &labels)?.rho);
    }
    Ok(())
}

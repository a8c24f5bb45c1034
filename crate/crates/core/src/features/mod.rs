//! Instance feature catalog: Ising-graph features on the logical and the
//! embedded model, QUBO matrix value statistics, and solution-space features
//! with their lowest-quarter variants.

mod graph;
mod stats;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddedIsing;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::qubo::{IsingModel, QuboInstance};
use crate::space::{quantile, SolutionSpace};

pub use graph::{
    adjacency_metrics, diameter, graph_metrics, ising_graph_matrices, laplacian_metrics, symmetric_eigenvalues,
    AdjacencyMetrics, GraphMetrics, IsingGraphMatrices, LaplacianMetrics, SpectralSummary,
};
pub use stats::{gini, gini_runs, hhi, multiplicities, multiplicity_shares, shannon_entropy, shifted_gini};

pub const LOG_ISING: &str = "LogIsing";
pub const EMB_ISING: &str = "EmbIsing";
pub const MAT_STRUCT: &str = "MatStruct";
pub const SOL_SPACE: &str = "SolSpace";
pub const NOR_MUL: &str = "NorMul";
pub const SOL_SPACE_25: &str = "25%-SolSpace";
pub const NOR_MUL_25: &str = "25%-NorMul";

pub const DOMAINS: [&str; 7] = [LOG_ISING, EMB_ISING, MAT_STRUCT, SOL_SPACE, NOR_MUL, SOL_SPACE_25, NOR_MUL_25];
pub const COMPONENT_SETS: [&str; 5] = ["Bias", "Coupling", "Laplacian", "StructAdj", "StructLap"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Adjacency,
    Bias,
    Degree,
    Laplacian,
}

impl Kind {
    fn features(self) -> &'static [&'static str] {
        match self {
            Kind::Adjacency => &[
                "gini index",
                "hhi",
                "shannon entropy",
                "condition number",
                "radius",
                "diameter",
                "spectral gap",
                "min eigval",
                "max eigval",
            ],
            Kind::Bias => &["gini index", "hhi", "shannon entropy", "min", "max", "condition number"],
            Kind::Degree => &["gini index", "hhi", "shannon entropy", "min eigval", "max eigval", "condition number"],
            Kind::Laplacian => &[
                "gini index",
                "hhi",
                "shannon entropy",
                "min eigval",
                "max eigval",
                "connectivity",
                "spectral gap",
                "connected components",
            ],
        }
    }
}

struct Object {
    name: &'static str,
    kind: Kind,
    /// Weighted objects always shift by the minimum before the Gini index;
    /// structural and normalized ones only when noise pushes a value below 0.
    always_shift: bool,
    component_set: Option<&'static str>,
}

const OBJECTS: [Object; 9] = [
    Object { name: "Coupling", kind: Kind::Adjacency, always_shift: true, component_set: Some("Coupling") },
    Object { name: "Bias", kind: Kind::Bias, always_shift: true, component_set: Some("Bias") },
    Object { name: "Degree", kind: Kind::Degree, always_shift: true, component_set: None },
    Object { name: "Laplacian", kind: Kind::Laplacian, always_shift: true, component_set: Some("Laplacian") },
    Object { name: "Structural Adjacency", kind: Kind::Adjacency, always_shift: false, component_set: Some("StructAdj") },
    Object { name: "Structural Degree", kind: Kind::Degree, always_shift: false, component_set: None },
    Object { name: "Structural Laplacian", kind: Kind::Laplacian, always_shift: false, component_set: Some("StructLap") },
    Object { name: "Normalized Adjacency", kind: Kind::Adjacency, always_shift: false, component_set: None },
    Object { name: "Normalized Laplacian", kind: Kind::Laplacian, always_shift: false, component_set: None },
];

const GRAPH_STRUCTURE: [&str; 2] = ["Graph Structure qubits", "Graph Structure chains"];
const MATSTRUCT_FEATURES: [&str; 3] = ["gini index", "hhi", "shannon entropy"];
const SOLSPACE_FEATURES: [&str; 9] =
    ["gini index", "hhi", "grouped hhi", "shannon entropy", "min", "first quartile", "median", "third quartile", "max"];
const NORMUL_FEATURES: [&str; 4] = ["gini index", "hhi", "shannon entropy", "smallest eig"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureInfo {
    pub name: String,
    pub domain: String,
    pub component_set: Option<String>,
}

/// Every feature name in column order with its domain and component set.
pub fn catalog() -> Vec<FeatureInfo> {
    let mut out = vec![];
    for domain in [LOG_ISING, EMB_ISING] {
        for o in &OBJECTS {
            for f in o.kind.features() {
                out.push(FeatureInfo {
                    name: format!("{domain} {} {f}", o.name),
                    domain: domain.into(),
                    component_set: o.component_set.map(String::from),
                });
            }
        }
        if domain == EMB_ISING {
            for f in GRAPH_STRUCTURE {
                out.push(FeatureInfo { name: format!("{domain} {f}"), domain: domain.into(), component_set: None });
            }
        }
    }
    let simple = |out: &mut Vec<FeatureInfo>, domain: &str, names: &[&str]| {
        for f in names {
            out.push(FeatureInfo { name: format!("{domain} {f}"), domain: domain.into(), component_set: None });
        }
    };
    simple(&mut out, MAT_STRUCT, &MATSTRUCT_FEATURES);
    simple(&mut out, SOL_SPACE, &SOLSPACE_FEATURES);
    simple(&mut out, NOR_MUL, &NORMUL_FEATURES);
    simple(&mut out, SOL_SPACE_25, &SOLSPACE_FEATURES);
    simple(&mut out, NOR_MUL_25, &NORMUL_FEATURES);
    out
}

pub fn catalog_names() -> Vec<String> {
    catalog().into_iter().map(|f| f.name).collect()
}

/// Feature names of a domain, a component set, or "all".
pub fn view_names(view: &str) -> Result<Vec<String>> {
    let cat = catalog();
    let names: Vec<String> = if view == "all" {
        cat.into_iter().map(|f| f.name).collect()
    } else if DOMAINS.contains(&view) {
        cat.into_iter().filter(|f| f.domain == view).map(|f| f.name).collect()
    } else if COMPONENT_SETS.contains(&view) {
        cat.into_iter().filter(|f| f.component_set.as_deref() == Some(view)).map(|f| f.name).collect()
    } else {
        return Err(Error::Validation(format!("unknown feature view `{view}`")));
    };
    Ok(names)
}

pub type Fragment = Vec<(String, Option<f64>)>;

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn ratio(num: f64, den: f64, floor: f64) -> Option<f64> {
    if den.abs() < floor.max(1e-12) {
        None
    } else {
        finite((num / den).abs())
    }
}

fn spectrum_stats(spec: &SpectralSummary, always_shift: bool) -> (f64, f64, f64) {
    let ev = &spec.eigenvalues;
    let min = spec.min().unwrap_or(0.0);
    let g = if always_shift || min < 0.0 { shifted_gini(ev) } else { gini(ev) };
    let shares = multiplicity_shares(ev, spec.tol());
    (g, hhi(&shares), shannon_entropy(&shares))
}

fn diagonal_spectrum(d: &Matrix, source: &str) -> SpectralSummary {
    let mut ev: Vec<f64> = (0..d.rows()).map(|i| d[(i, i)]).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    SpectralSummary { eigenvalues: ev, source: source.into() }
}

fn object_features(o: &Object, m: &IsingGraphMatrices) -> Result<Vec<Option<f64>>> {
    if o.kind == Kind::Bias {
        let b = &m.b;
        if b.is_empty() {
            return Ok(vec![None; 6]);
        }
        let min = b.iter().copied().fold(f64::INFINITY, f64::min);
        let max = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scale = min.abs().max(max.abs());
        let shares = multiplicity_shares(b, 1e-10 * scale);
        return Ok(vec![
            Some(shifted_gini(b)),
            Some(hhi(&shares)),
            Some(shannon_entropy(&shares)),
            Some(min),
            Some(max),
            ratio(max, min, 0.0),
        ]);
    }
    let matrix = match o.name {
        "Coupling" => &m.j,
        "Degree" => &m.d_j,
        "Laplacian" => &m.l,
        "Structural Adjacency" => &m.a,
        "Structural Degree" => &m.d_a,
        "Structural Laplacian" => &m.l_a,
        "Normalized Adjacency" => &m.a_n,
        "Normalized Laplacian" => &m.l_n,
        other => unreachable!("object {other}"),
    };
    if matrix.rows() == 0 {
        return Ok(vec![None; o.kind.features().len()]);
    }
    let spec = if o.kind == Kind::Degree {
        diagonal_spectrum(matrix, o.name)
    } else {
        symmetric_eigenvalues(matrix, o.name)?
    };
    let (g, h, sh) = spectrum_stats(&spec, o.always_shift);
    let (min, max) = (spec.min().unwrap(), spec.max().unwrap());
    let cond = ratio(max, min, spec.tol());
    Ok(match o.kind {
        Kind::Adjacency => {
            let am = adjacency_metrics(matrix, &spec);
            vec![
                Some(g),
                Some(h),
                Some(sh),
                cond,
                Some(am.radius),
                am.diameter,
                am.spectral_gap,
                Some(min),
                Some(max),
            ]
        }
        Kind::Degree => vec![Some(g), Some(h), Some(sh), Some(min), Some(max), cond],
        Kind::Laplacian => {
            let lm = laplacian_metrics(&spec);
            vec![
                Some(g),
                Some(h),
                Some(sh),
                Some(min),
                Some(max),
                lm.connectivity,
                lm.spectral_gap,
                Some(lm.connected_components as f64),
            ]
        }
        Kind::Bias => unreachable!(),
    })
}

/// The 69 Ising-graph features of a model under the given domain prefix.
pub fn ising_features(domain: &str, model: &IsingModel) -> Result<Fragment> {
    let mats = ising_graph_matrices(model);
    let mut out = vec![];
    for o in &OBJECTS {
        let vals = object_features(o, &mats)?;
        for (f, v) in o.kind.features().iter().zip(vals) {
            out.push((format!("{domain} {} {f}", o.name), v.and_then(finite)));
        }
    }
    Ok(out)
}

pub fn features_logising(model: &IsingModel) -> Result<Fragment> {
    ising_features(LOG_ISING, model)
}

pub fn features_embising(e: &EmbeddedIsing) -> Result<Fragment> {
    let mut out = ising_features(EMB_ISING, &e.model)?;
    out.push((format!("{EMB_ISING} {}", GRAPH_STRUCTURE[0]), Some(e.qubit_count as f64)));
    out.push((format!("{EMB_ISING} {}", GRAPH_STRUCTURE[1]), Some(e.chain_count as f64)));
    Ok(out)
}

/// Gini (min-shifted), HHI and entropy of a matrix's entries, shares being
/// occurrences over the entry count.
pub fn matrix_value_features(m: &Matrix) -> [f64; 3] {
    let vals = m.as_slice();
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for v in vals {
        // -0.0 and 0.0 are the same value
        let key = if *v == 0.0 { 0u64 } else { v.to_bits() };
        *counts.entry(key).or_default() += 1;
    }
    let total = vals.len() as f64;
    let mut shares: Vec<f64> = counts.values().map(|&c| c as f64 / total).collect();
    shares.sort_by(|a, b| a.total_cmp(b));
    [shifted_gini(vals), hhi(&shares), shannon_entropy(&shares)]
}

/// Upper-triangular form of the instance matrix (off-diagonal pairs folded
/// into the upper entry), the usual way a QUBO matrix is written.
pub fn upper_triangular(q: &QuboInstance) -> Matrix {
    let n = q.n();
    let s = q.q();
    let mut u = Matrix::square(n);
    for i in 0..n {
        u[(i, i)] = s[(i, i)];
        for k in i + 1..n {
            u[(i, k)] = s[(i, k)] + s[(k, i)];
        }
    }
    u
}

pub fn features_matstruct(q: &QuboInstance) -> Fragment {
    let v = matrix_value_features(&upper_triangular(q));
    MATSTRUCT_FEATURES.iter().zip(v).map(|(f, x)| (format!("{MAT_STRUCT} {f}"), finite(x))).collect()
}

fn space_levels(s: &SolutionSpace, quartile_only: bool) -> Option<Vec<crate::space::Level>> {
    if quartile_only {
        s.lowest_quarter()
    } else {
        s.levels.clone()
    }
}

/// Nine landscape features; all missing when the full spectrum is unknown.
pub fn features_solspace(s: &SolutionSpace, quartile_only: bool) -> Fragment {
    let domain = if quartile_only { SOL_SPACE_25 } else { SOL_SPACE };
    let names = SOLSPACE_FEATURES.iter().map(|f| format!("{domain} {f}"));
    let Some(levels) = space_levels(s, quartile_only).filter(|l| !l.is_empty()) else {
        return names.map(|n| (n, None)).collect();
    };
    let min = levels[0].value;
    let runs: Vec<(f64, u64)> = levels.iter().map(|l| (l.value - min, l.count)).collect();
    let total: f64 = runs.iter().map(|&(v, c)| v * c as f64).sum();
    let (h, gh, sh) = if total > 0.0 {
        let mut h = 0.0;
        let mut gh = 0.0;
        let mut sh = 0.0;
        for &(v, c) in &runs {
            let share = v / total;
            let c = c as f64;
            h += c * share * share;
            gh += (c * share) * (c * share);
            if share > 0.0 {
                sh -= c * share * share.log2();
            }
        }
        (Some(h), Some(gh), Some(sh))
    } else {
        (None, None, None)
    };
    let vals = [
        Some(gini_runs(&runs)),
        h,
        gh,
        sh,
        Some(min),
        quantile(&levels, 0.25),
        quantile(&levels, 0.5),
        quantile(&levels, 0.75),
        Some(levels[levels.len() - 1].value),
    ];
    names.zip(vals).map(|(n, v)| (n, v.and_then(finite))).collect()
}

/// Four features of the normalized multiplicities of the distinct energies.
pub fn features_normul(s: &SolutionSpace, quartile_only: bool) -> Fragment {
    let domain = if quartile_only { NOR_MUL_25 } else { NOR_MUL };
    let names = NORMUL_FEATURES.iter().map(|f| format!("{domain} {f}"));
    let Some(levels) = space_levels(s, quartile_only).filter(|l| !l.is_empty()) else {
        return names.map(|n| (n, None)).collect();
    };
    let total: u64 = levels.iter().map(|l| l.count).sum();
    let pi: Vec<f64> = levels.iter().map(|l| l.count as f64 / total as f64).collect();
    let vals = [gini(&pi), hhi(&pi), shannon_entropy(&pi), pi[0]];
    names.zip(vals).map(|(n, v)| (n, finite(v))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub instance_id: String,
    pub values: BTreeMap<String, Option<f64>>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied().flatten()
    }

    /// Values of the named columns, in the given order.
    pub fn project(&self, names: &[String]) -> Vec<Option<f64>> {
        names.iter().map(|n| self.get(n)).collect()
    }
}

/// One row over the whole catalog; columns without a fragment are missing.
pub fn assemble(instance_id: &str, fragments: &[Fragment]) -> FeatureVector {
    let mut values: BTreeMap<String, Option<f64>> = catalog_names().into_iter().map(|n| (n, None)).collect();
    for frag in fragments {
        for (k, v) in frag {
            values.insert(k.clone(), *v);
        }
    }
    FeatureVector { instance_id: instance_id.into(), values }
}

/// All available domains for one instance.
pub fn extract(q: &QuboInstance, embedded: Option<&EmbeddedIsing>, space: Option<&SolutionSpace>) -> Result<FeatureVector> {
    let mut frags = vec![features_logising(&q.to_ising())?, features_matstruct(q)];
    if let Some(e) = embedded {
        frags.push(features_embising(e)?);
    }
    if let Some(s) = space {
        for quarter in [false, true] {
            frags.push(features_solspace(s, quarter));
            frags.push(features_normul(s, quarter));
        }
    }
    Ok(assemble(&q.instance_id, &frags))
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// CSV with an instance_id column then the catalog columns; missing is empty.
pub fn write_features_csv(path: &Path, rows: &[FeatureVector]) -> Result<()> {
    let names = catalog_names();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["instance_id".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.instance_id.clone()];
        rec.extend(r.project(&names).into_iter().map(fmt_cell));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features_csv(path: &Path) -> Result<Vec<FeatureVector>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header.first().map(String::as_str) != Some("instance_id") {
        return Err(Error::Ingestion { path: path.display().to_string(), problems: vec!["first column must be instance_id".into()] });
    }
    let mut out = vec![];
    let mut problems = vec![];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut values = BTreeMap::new();
        for (name, cell) in header.iter().zip(rec.iter()).skip(1) {
            let v = if cell.is_empty() {
                None
            } else {
                match cell.parse::<f64>() {
                    Ok(x) => Some(x),
                    Err(_) => {
                        problems.push(format!("row {}: `{name}` is not a number: {cell}", line + 2));
                        None
                    }
                }
            };
            values.insert(name.clone(), v);
        }
        out.push(FeatureVector { instance_id: rec[0].to_string(), values });
    }
    if !problems.is_empty() {
        return Err(Error::Ingestion { path: path.display().to_string(), problems });
    }
    Ok(out)
}

/// Sidecar mapping each feature to its domain and component set.
pub fn write_sidecar(path: &Path) -> Result<()> {
    let map: BTreeMap<String, serde_json::Value> = catalog()
        .into_iter()
        .map(|f| (f.name, serde_json::json!({ "domain": f.domain, "component_set": f.component_set })))
        .collect();
    std::fs::write(path, serde_json::to_string_pretty(&map)? + "\n")?;
    Ok(())
}

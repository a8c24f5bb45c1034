//! JSON persistence for instances and sample sets.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::qubo::{
    bits_from_str, bits_to_string, LinearConstraint, ProblemClass, QuboInstance, Sample, SampleSet,
    SizeClass,
};

#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub instance_id: String,
    pub problem_class: ProblemClass,
    pub structure: String,
    pub size_class: SizeClass,
    pub n: usize,
    /// Upper-triangle entries, 0-based.
    pub q_coo: Vec<(usize, usize, f64)>,
    pub offset: f64,
    pub penalty: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<LinearConstraint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl From<&QuboInstance> for InstanceFile {
    fn from(q: &QuboInstance) -> Self {
        let n = q.n();
        let mut coo = vec![];
        for i in 0..n {
            for j in i..n {
                let v = if i == j { q.q()[(i, i)] } else { q.q()[(i, j)] + q.q()[(j, i)] };
                if v != 0.0 {
                    coo.push((i, j, v));
                }
            }
        }
        InstanceFile {
            instance_id: q.instance_id.clone(),
            problem_class: q.problem_class,
            structure: q.structure.clone(),
            size_class: q.size_class,
            n,
            q_coo: coo,
            offset: q.offset,
            penalty: q.penalty,
            constraints: q.constraints.clone(),
            witness: q.witness.as_deref().map(bits_to_string),
        }
    }
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<QuboInstance> {
        let mut m = Matrix::square(self.n);
        for &(i, j, v) in &self.q_coo {
            if i > j || j >= self.n {
                return Err(Error::Structural(format!(
                    "q_coo entry ({i},{j}) is outside the upper triangle of a {n}x{n} matrix",
                    n = self.n
                )));
            }
            m[(i, j)] += v;
        }
        let witness = self.witness.as_deref().map(bits_from_str).transpose()?;
        let q = QuboInstance::new(
            self.instance_id,
            self.problem_class,
            self.structure,
            self.size_class,
            m,
            self.offset,
            self.penalty,
        )?;
        Ok(q.with_constraints(self.constraints, witness))
    }
}

pub fn instance_to_json(q: &QuboInstance) -> String {
    let mut s = serde_json::to_string(&InstanceFile::from(q)).expect("instance serializes");
    s.push('\n');
    s
}

pub fn write_instance(q: &QuboInstance, path: &Path) -> Result<()> {
    fs::write(path, instance_to_json(q))?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<QuboInstance> {
    let f: InstanceFile = serde_json::from_slice(&fs::read(path)?)?;
    f.into_instance()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SampleRecord {
    pub bits: String,
    pub cost: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SampleFile {
    pub solver_id: String,
    pub instance_id: String,
    pub seed: u64,
    pub hyperparameters: BTreeMap<String, serde_json::Value>,
    pub samples: Vec<SampleRecord>,
}

impl From<&SampleSet> for SampleFile {
    fn from(s: &SampleSet) -> Self {
        SampleFile {
            solver_id: s.solver_id.clone(),
            instance_id: s.instance_id.clone(),
            seed: s.seed,
            hyperparameters: s.hyperparameters.clone(),
            samples: s
                .samples
                .iter()
                .map(|x| SampleRecord {
                    bits: bits_to_string(&x.bits),
                    cost: x.cost,
                })
                .collect(),
        }
    }
}

pub fn sampleset_to_json(s: &SampleSet) -> String {
    let mut out = serde_json::to_string(&SampleFile::from(s)).expect("sample set serializes");
    out.push('\n');
    out
}

pub fn write_sampleset(s: &SampleSet, path: &Path) -> Result<()> {
    fs::write(path, sampleset_to_json(s))?;
    Ok(())
}

/// Parses a sample file without validation against an instance.
pub fn read_sample_file(path: &Path) -> Result<SampleSet> {
    let f: SampleFile = serde_json::from_slice(&fs::read(path)?)?;
    let samples = f
        .samples
        .into_iter()
        .map(|r| {
            Ok(Sample {
                bits: bits_from_str(&r.bits)?,
                cost: r.cost,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleSet {
        solver_id: f.solver_id,
        instance_id: f.instance_id,
        seed: f.seed,
        hyperparameters: f.hyperparameters,
        samples,
    })
}

/// Writes `contents` only when it differs from what is on disk.
pub fn write_if_changed(path: &Path, contents: &[u8]) -> Result<bool> {
    if let Ok(existing) = fs::read(path) {
        if existing == contents {
            return Ok(false);
        }
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(true)
}

//! Label table: candidate-over-pool flags for every instance and optimality
//! flags for instances with an enumerated space.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metalearn::LabelRow;
use crate::qubo::{QuboInstance, SampleSet};
use crate::space::{label_large, label_small, SpaceFile};

#[derive(Debug, Clone, PartialEq)]
pub struct LabelTableRow {
    pub instance_id: String,
    pub problem_class: String,
    pub size_class: String,
    pub over_all: bool,
    /// Keyed by pool solver id.
    pub over: BTreeMap<String, bool>,
    pub optimal: Option<bool>,
    /// One flag per ε, in the table's ε order.
    pub eps_optimal: Option<Vec<bool>>,
    pub h_optimal: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelTable {
    pub candidate: String,
    pub pool: Vec<String>,
    pub eps_list: Vec<f64>,
    pub rows: Vec<LabelTableRow>,
}

fn eps_column(eps: f64) -> String {
    format!("eps_optimal_{eps}")
}

fn cell(b: Option<bool>) -> String {
    b.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_cell(s: &str) -> Result<Option<bool>> {
    match s {
        "" => Ok(None),
        "true" => Ok(Some(true)),
        "false" => Ok(Some(false)),
        _ => Err(Error::Validation(format!("label cell `{s}` is not true/false/empty"))),
    }
}

/// Labels one instance from the candidate's samples, the pool's samples and
/// (for small instances) the enumerated space.
pub fn label_instance(
    q: &QuboInstance,
    candidate: &SampleSet,
    pool: &[SampleSet],
    space: Option<&SpaceFile>,
    eps_list: &[f64],
) -> Result<LabelTableRow> {
    let large = label_large(candidate, pool)?;
    let (optimal, eps_optimal, h_optimal) = match space {
        Some(sf) => {
            let s = sf.to_space()?;
            let l = label_small(candidate, &s, eps_list, q)?;
            (Some(l.optimal), Some(l.eps_optimal.iter().map(|e| e.1).collect()), Some(l.h_optimal))
        }
        None => (None, None, None),
    };
    Ok(LabelTableRow {
        instance_id: q.instance_id.clone(),
        problem_class: q.problem_class.name().to_string(),
        size_class: q.size_class.to_string(),
        over_all: large.over_all,
        over: large.over,
        optimal,
        eps_optimal,
        h_optimal,
    })
}

impl LabelTable {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["instance_id", "problem_class", "size_class", "candidate", "over_all"].map(String::from).to_vec();
        h.extend(self.pool.iter().map(|s| format!("over_{s}")));
        h.push("optimal".into());
        h.extend(self.eps_list.iter().map(|&e| eps_column(e)));
        h.push("h_optimal".into());
        h
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![r.instance_id.clone(), r.problem_class.clone(), r.size_class.clone(), self.candidate.clone(), r.over_all.to_string()];
            rec.extend(self.pool.iter().map(|s| cell(r.over.get(s).copied())));
            rec.push(cell(r.optimal));
            for k in 0..self.eps_list.len() {
                rec.push(cell(r.eps_optimal.as_ref().map(|e| e[k])));
            }
            rec.push(cell(r.h_optimal));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let bad = |m: String| Error::Ingestion { path: path.display().to_string(), problems: vec![m] };
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
        let pos = |name: &str| header.iter().position(|h| h == name);
        for col in ["instance_id", "problem_class", "size_class", "candidate", "over_all", "optimal", "h_optimal"] {
            if pos(col).is_none() {
                return Err(bad(format!("missing column `{col}`")));
            }
        }
        let pool: Vec<String> = header.iter().filter_map(|h| h.strip_prefix("over_")).filter(|s| *s != "all").map(String::from).collect();
        let eps_list: Vec<f64> = header
            .iter()
            .filter_map(|h| h.strip_prefix("eps_optimal_"))
            .map(|e| e.parse::<f64>().map_err(|_| bad(format!("bad ε column eps_optimal_{e}"))))
            .collect::<Result<_>>()?;
        let mut rows = Vec::new();
        let mut candidate = String::new();
        for rec in r.records() {
            let rec = rec?;
            let get = |name: &str| rec.get(pos(name).unwrap()).unwrap_or("");
            candidate = get("candidate").to_string();
            let eps: Vec<Option<bool>> = eps_list.iter().map(|&e| parse_cell(get(&eps_column(e)))).collect::<Result<_>>()?;
            rows.push(LabelTableRow {
                instance_id: get("instance_id").into(),
                problem_class: get("problem_class").into(),
                size_class: get("size_class").into(),
                over_all: parse_cell(get("over_all"))?.ok_or_else(|| bad("over_all may not be empty".into()))?,
                over: pool
                    .iter()
                    .filter_map(|s| parse_cell(get(&format!("over_{s}"))).transpose().map(|v| v.map(|b| (s.clone(), b))))
                    .collect::<Result<_>>()?,
                optimal: parse_cell(get("optimal"))?,
                eps_optimal: eps.iter().all(Option::is_some).then(|| eps.iter().map(|e| e.unwrap()).collect()).filter(|v: &Vec<bool>| !v.is_empty()),
                h_optimal: parse_cell(get("h_optimal"))?,
            });
        }
        Ok(LabelTable { candidate, pool, eps_list, rows })
    }

    /// Target names accepted by [`LabelTable::target`].
    pub fn targets(&self) -> Vec<String> {
        let mut t = vec!["over_all".to_string()];
        t.extend(self.pool.iter().map(|s| format!("over_{s}")));
        t.extend(["optimal", "eps_optimal", "h_optimal"].map(String::from));
        t.extend(self.eps_list.iter().map(|&e| eps_column(e)));
        t
    }

    /// Labels for one target; `eps_optimal` means the first ε.
    pub fn target(&self, name: &str) -> Result<Vec<LabelRow>> {
        let pick: Box<dyn Fn(&LabelTableRow) -> Option<bool>> = match name {
            "over_all" => Box::new(|r| Some(r.over_all)),
            "optimal" => Box::new(|r| r.optimal),
            "h_optimal" => Box::new(|r| r.h_optimal),
            "eps_optimal" if !self.eps_list.is_empty() => Box::new(|r| r.eps_optimal.as_ref().map(|e| e[0])),
            _ => {
                if let Some(s) = name.strip_prefix("over_").filter(|s| self.pool.iter().any(|p| p == s)) {
                    let s = s.to_string();
                    Box::new(move |r| r.over.get(&s).copied())
                } else if let Some(k) = self.eps_list.iter().position(|&e| eps_column(e) == name) {
                    Box::new(move |r| r.eps_optimal.as_ref().map(|e| e[k]))
                } else {
                    return Err(Error::Validation(format!("unknown target `{name}`; expected one of {:?}", self.targets())));
                }
            }
        };
        Ok(self
            .rows
            .iter()
            .map(|r| LabelRow { instance_id: r.instance_id.clone(), problem_class: r.problem_class.clone(), label: pick(r) })
            .collect())
    }
}

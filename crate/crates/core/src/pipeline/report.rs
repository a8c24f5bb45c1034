//! Report bundle written to `reports/`: per-class effectiveness percentages,
//! per-view balanced accuracy, top-5 importance and feature/target rank
//! correlations, plus a markdown summary of the same tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{LabelTable, LabelTableRow};
use crate::error::{Error, Result};
use crate::features::{read_features_csv, FeatureVector};
use crate::io::write_if_changed;
use crate::metalearn::{spearman, CvReport};
use crate::qubo::ProblemClass;

/// Rows per (model, view) in the importance table.
pub const PFI_TOP: usize = 5;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportBundle {
    /// Files rewritten by this call (unchanged files are left alone).
    pub written: Vec<PathBuf>,
    pub notes: Vec<String>,
    pub effectiveness: Vec<EffectivenessRow>,
    pub ba: Vec<CvReport>,
    pub pfi_top: Vec<PfiTopRow>,
    pub spearman: Vec<SpearmanRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectivenessRow {
    pub problem_class: String,
    pub size_class: String,
    pub instances: usize,
    /// Column → (positives, rows with a value).
    pub counts: BTreeMap<String, (usize, usize)>,
}

impl EffectivenessRow {
    pub fn percent(&self, column: &str) -> Option<f64> {
        self.counts.get(column).filter(|c| c.1 > 0).map(|&(p, t)| 100.0 * p as f64 / t as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfiTopRow {
    pub view: String,
    pub target: String,
    pub model: String,
    pub rank: usize,
    pub feature: String,
    pub mean_drop: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpearmanRow {
    pub target: String,
    pub feature: String,
    pub rho: f64,
    pub defined: bool,
    pub pairs: usize,
}

fn label_columns(t: &LabelTable) -> Vec<String> {
    let mut c = vec!["over_all".to_string()];
    c.extend(t.pool.iter().map(|s| format!("over_{s}")));
    c.push("optimal".into());
    c.extend(t.eps_list.iter().map(|e| format!("eps_optimal_{e}")));
    c.push("h_optimal".into());
    c
}

fn label_values(t: &LabelTable, r: &LabelTableRow) -> Vec<Option<bool>> {
    let mut v = vec![Some(r.over_all)];
    v.extend(t.pool.iter().map(|s| r.over.get(s).copied()));
    v.push(r.optimal);
    v.extend((0..t.eps_list.len()).map(|k| r.eps_optimal.as_ref().map(|e| e[k])));
    v.push(r.h_optimal);
    v
}

/// Percentages per (class, size) in the fixed class order; classes without
/// labelled rows are omitted and named in the notes.
pub fn effectiveness(t: &LabelTable) -> (Vec<EffectivenessRow>, Vec<String>) {
    let cols = label_columns(t);
    let mut groups: BTreeMap<(usize, String), EffectivenessRow> = BTreeMap::new();
    let order = |name: &str| ProblemClass::ALL.iter().position(|c| c.name() == name).unwrap_or(usize::MAX);
    for r in &t.rows {
        let row = groups.entry((order(&r.problem_class), r.size_class.clone())).or_insert_with(|| EffectivenessRow {
            problem_class: r.problem_class.clone(),
            size_class: r.size_class.clone(),
            instances: 0,
            counts: cols.iter().map(|c| (c.clone(), (0, 0))).collect(),
        });
        row.instances += 1;
        for (c, v) in cols.iter().zip(label_values(t, r)) {
            if let Some(b) = v {
                let e = row.counts.get_mut(c).unwrap();
                e.0 += b as usize;
                e.1 += 1;
            }
        }
    }
    let notes = ProblemClass::ALL
        .iter()
        .filter(|c| !t.rows.iter().any(|r| r.problem_class == c.name()))
        .map(|c| format!("class {} has no labelled instances; omitted from the effectiveness table", c.name()))
        .collect();
    (groups.into_values().collect(), notes)
}

fn pct(v: Option<f64>) -> String {
    v.map(|p| format!("{p:.2}")).unwrap_or_default()
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn md_table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}|", vec!["---"; header.len()].join("|"));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out.push('\n');
}

fn strs(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn read_model_reports(models: &Path) -> Result<Vec<(String, CvReport, Vec<PfiTopRow>)>> {
    let mut dirs: Vec<PathBuf> = match std::fs::read_dir(models) {
        Ok(rd) => rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.join("report.json").exists()).collect(),
        Err(_) => vec![],
    };
    dirs.sort();
    let mut out = Vec::new();
    for d in dirs {
        let rep: CvReport = serde_json::from_slice(&std::fs::read(d.join("report.json"))?)?;
        let mut top = Vec::new();
        let pfi = d.join("pfi.csv");
        if pfi.exists() {
            let mut r = csv::Reader::from_path(&pfi)?;
            for rec in r.records() {
                let rec = rec?;
                let num = |i: usize| -> Result<f64> {
                    rec.get(i).unwrap_or("").parse().map_err(|_| Error::Ingestion { path: pfi.display().to_string(), problems: vec![format!("bad number in {rec:?}")] })
                };
                let rank: usize = num(3)? as usize;
                if rank <= PFI_TOP {
                    top.push(PfiTopRow {
                        view: rep.view.clone(),
                        target: rep.target.clone(),
                        model: rep.model.to_string(),
                        rank,
                        feature: rec.get(0).unwrap_or("").to_string(),
                        mean_drop: num(1)?,
                        std: num(2)?,
                    });
                }
            }
            top.sort_by_key(|r| r.rank);
        }
        out.push((d.file_name().unwrap().to_string_lossy().into_owned(), rep, top));
    }
    Ok(out)
}

/// Spearman correlation of every feature column with every label column.
pub fn spearman_table(features: &[FeatureVector], t: &LabelTable) -> Result<Vec<SpearmanRow>> {
    let by_id: BTreeMap<&str, &FeatureVector> = features.iter().map(|f| (f.instance_id.as_str(), f)).collect();
    let names: Vec<String> = features.first().map(|f| f.values.keys().cloned().collect()).unwrap_or_default();
    let cols = label_columns(t);
    let mut rows = Vec::new();
    for (k, target) in cols.iter().enumerate() {
        let mut fx: Vec<&FeatureVector> = Vec::new();
        let mut y = Vec::new();
        for r in &t.rows {
            if let (Some(f), Some(b)) = (by_id.get(r.instance_id.as_str()), label_values(t, r)[k]) {
                fx.push(f);
                y.push(b as u8 as f64);
            }
        }
        if y.is_empty() {
            continue;
        }
        for name in &names {
            let x: Vec<f64> = fx.iter().map(|f| f.get(name).unwrap_or(f64::NAN)).collect();
            let pairs = x.iter().filter(|v| !v.is_nan()).count();
            let s = spearman(&x, &y)?;
            rows.push(SpearmanRow { target: target.clone(), feature: name.clone(), rho: s.rho, defined: s.defined, pairs });
        }
    }
    Ok(rows)
}

/// Builds and writes the report bundle for a workspace. Missing inputs give
/// empty tables and a note rather than an error.
pub fn report(root: &Path) -> Result<ReportBundle> {
    let out_dir = root.join("reports");
    std::fs::create_dir_all(&out_dir)?;
    let mut b = ReportBundle::default();
    let labels_path = root.join("labels").join("labels.csv");
    let labels = if labels_path.exists() {
        Some(LabelTable::read_csv(&labels_path)?)
    } else {
        b.notes.push("no label table".into());
        None
    };
    let features_path = root.join("features").join("features.csv");
    let features = if features_path.exists() { read_features_csv(&features_path)? } else { vec![] };

    let mut md = String::from("# Report\n\n");

    // effectiveness
    let mut eff_header = strs(&["problem_class", "size_class", "instances"]);
    let mut eff_rows = Vec::new();
    if let Some(t) = &labels {
        let (rows, notes) = effectiveness(t);
        let cols = label_columns(t);
        eff_header.extend(cols.iter().map(|c| format!("{c}_pct")));
        for r in &rows {
            let mut rec = vec![r.problem_class.clone(), r.size_class.clone(), r.instances.to_string()];
            rec.extend(cols.iter().map(|c| pct(r.percent(c))));
            eff_rows.push(rec);
        }
        let _ = writeln!(md, "## Candidate effectiveness (candidate {}, pool {})\n", t.candidate, t.pool.join(", "));
        md_table(&mut md, &eff_header, &eff_rows);
        for n in &notes {
            let _ = writeln!(md, "- {n}");
        }
        if !notes.is_empty() {
            md.push('\n');
        }
        b.notes.extend(notes);
        b.effectiveness = rows;
        b.spearman = spearman_table(&features, t)?;
    }

    // balanced accuracy and importance
    let models = read_model_reports(&root.join("models"))?;
    let ba_header = strs(&["view", "target", "model", "outer_ba_mean", "outer_ba_std", "folds"]);
    let mut ba_rows = Vec::new();
    let pfi_header = strs(&["view", "target", "model", "rank", "feature", "mean_drop", "std"]);
    let mut pfi_rows = Vec::new();
    for (_, rep, top) in &models {
        ba_rows.push(vec![
            rep.view.clone(),
            rep.target.clone(),
            rep.model.to_string(),
            f4(rep.outer_ba_mean),
            f4(rep.outer_ba_std),
            rep.per_fold.len().to_string(),
        ]);
        for r in top {
            pfi_rows.push(vec![r.view.clone(), r.target.clone(), r.model.clone(), r.rank.to_string(), r.feature.clone(), f4(r.mean_drop), f4(r.std)]);
        }
        b.ba.push(rep.clone());
        b.pfi_top.extend(top.iter().cloned());
    }
    md.push_str("## Balanced accuracy per view (mean ± std over outer folds)\n\n");
    md_table(&mut md, &ba_header, &ba_rows);
    let _ = writeln!(md, "## Best {PFI_TOP} features per model and view\n");
    md_table(&mut md, &pfi_header, &pfi_rows);

    let sp_header = strs(&["target", "feature", "rho", "defined", "pairs"]);
    let sp_rows: Vec<Vec<String>> =
        b.spearman.iter().map(|r| vec![r.target.clone(), r.feature.clone(), f4(r.rho), r.defined.to_string(), r.pairs.to_string()]).collect();
    md.push_str("## Strongest rank correlations with over_all\n\n");
    let mut strongest: Vec<&SpearmanRow> = b.spearman.iter().filter(|r| r.target == "over_all" && r.defined).collect();
    strongest.sort_by(|a, c| c.rho.abs().total_cmp(&a.rho.abs()).then(a.feature.cmp(&c.feature)));
    let strongest_rows: Vec<Vec<String>> = strongest.iter().take(10).map(|r| vec![r.feature.clone(), f4(r.rho), r.pairs.to_string()]).collect();
    md_table(&mut md, &strs(&["feature", "rho", "pairs"]), &strongest_rows);

    if !b.notes.is_empty() {
        md.push_str("## Notes\n\n");
        for n in b.notes.iter().filter(|n| !n.starts_with("class ")) {
            let _ = writeln!(md, "- {n}");
        }
    }

    let files: [(&str, Vec<u8>); 5] = [
        ("effectiveness.csv", csv_bytes(&eff_header, &eff_rows)?),
        ("ba.csv", csv_bytes(&ba_header, &ba_rows)?),
        ("pfi_top5.csv", csv_bytes(&pfi_header, &pfi_rows)?),
        ("spearman.csv", csv_bytes(&sp_header, &sp_rows)?),
        ("summary.md", md.into_bytes()),
    ];
    for (name, bytes) in files {
        let p = out_dir.join(name);
        if write_if_changed(&p, &bytes)? {
            b.written.push(p);
        }
    }
    Ok(b)
}

//! Consolidated summary of the artifacts under an output directory.

use std::collections::BTreeMap;
use std::path::Path;

use clockvmc::models::ModelKind;
use clockvmc::tuner::StudyRecord;
use serde::{Deserialize, Serialize};

use super::diagnose::DiagnosticsRow;
use super::train::{Mode, Summary};
use super::tune::parse_ledger_name;
use super::{walk, Context};
use crate::error::Result;
use crate::output::{read_csv, read_json, write_json};

/// Directory levels searched below the output directory.
const SEARCH_DEPTH: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainEntry {
    pub path: String,
    pub ansatz: ModelKind,
    pub mode: Mode,
    pub n_s: usize,
    pub n_t: usize,
    pub final_energy: Option<f64>,
    pub final_infidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneEntry {
    pub path: String,
    pub ansatz: ModelKind,
    pub n_s: usize,
    pub n_t: usize,
    pub n_trials: usize,
    pub n_complete: usize,
    pub best_objective: Option<f64>,
    /// Infidelity of the trial with the lowest objective.
    pub best_trial_infidelity: Option<f64>,
    /// Median infidelity over the ten lowest-objective trials.
    pub best10_median_infidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsEntry {
    pub path: String,
    pub n_rows: usize,
    /// `(n_s, n_t, gini, coverage, renyi2 at n_p = n_s)` per grid point.
    pub points: Vec<(usize, usize, f64, f64, f64)>,
}

/// One cell of the infidelity table: best tuned trial when a study exists,
/// otherwise the lowest trained final infidelity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub n_t: usize,
    pub ansatz: ModelKind,
    pub infidelity: f64,
    pub source: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub training: Vec<TrainEntry>,
    pub tuning: Vec<TuneEntry>,
    pub diagnostics: Vec<DiagnosticsEntry>,
    pub infidelity_table: Vec<TableCell>,
    /// Expected artifacts that were absent or unreadable.
    pub missing: Vec<String>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn tune_entry(path: &Path, rel: String, kind: ModelKind, n_s: usize, n_t: usize) -> Result<TuneEntry> {
    let study = StudyRecord::load_ndjson(path)?;
    let best = study.best_k(10);
    Ok(TuneEntry {
        path: rel,
        ansatz: kind,
        n_s,
        n_t,
        n_trials: study.trials.len(),
        n_complete: study.completed().count(),
        best_objective: best.first().and_then(|t| t.objective),
        best_trial_infidelity: best.first().and_then(|t| t.infidelity),
        best10_median_infidelity: median(best.iter().filter_map(|t| t.infidelity).collect()),
    })
}

fn diagnostics_entry(path: &Path, rel: String) -> Result<DiagnosticsEntry> {
    let rows: Vec<DiagnosticsRow> = read_csv(path)?;
    let points =
        rows.iter().filter(|r| r.n_p == r.n_s).map(|r| (r.n_s, r.n_t, r.gini, r.coverage, r.renyi2)).collect();
    Ok(DiagnosticsEntry { path: rel, n_rows: rows.len(), points })
}

pub fn collect(dir: &Path) -> Report {
    let mut report = Report::default();
    for path in walk(dir, SEARCH_DEPTH) {
        let rel = path.strip_prefix(dir).unwrap_or(&path).display().to_string();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let outcome = if name == "summary.json" {
            let parent = path.parent().unwrap_or(dir);
            for sibling in ["trace.csv", "checkpoint.json", "magnetization.csv"] {
                if !parent.join(sibling).exists() {
                    let p = parent.join(sibling);
                    report.missing.push(p.strip_prefix(dir).unwrap_or(&p).display().to_string());
                }
            }
            read_json::<Summary>(&path).map(|w| {
                let s = w.data;
                report.training.push(TrainEntry {
                    path: rel.clone(),
                    ansatz: s.ansatz,
                    mode: s.mode,
                    n_s: s.n_s,
                    n_t: s.n_t,
                    final_energy: s.final_energy,
                    final_infidelity: s.final_infidelity,
                });
            })
        } else if let Some((kind, n_s, n_t)) = parse_ledger_name(&name) {
            tune_entry(&path, rel.clone(), kind, n_s, n_t).map(|e| report.tuning.push(e))
        } else if name == "diagnostics.csv" {
            diagnostics_entry(&path, rel.clone()).map(|e| report.diagnostics.push(e))
        } else {
            Ok(())
        };
        if let Err(e) = outcome {
            log::warn!("unreadable artifact {rel}: {e}");
            report.missing.push(rel);
        }
    }

    let mut cells: BTreeMap<(usize, ModelKind), TableCell> = BTreeMap::new();
    for t in &report.tuning {
        if let Some(f) = t.best_trial_infidelity {
            let cell = TableCell { n_t: t.n_t, ansatz: t.ansatz, infidelity: f, source: t.path.clone() };
            cells.entry((t.n_t, t.ansatz)).and_modify(|c| if f < c.infidelity { *c = cell.clone() }).or_insert(cell);
        }
    }
    for t in &report.training {
        if let Some(f) = t.final_infidelity {
            let cell = TableCell { n_t: t.n_t, ansatz: t.ansatz, infidelity: f, source: t.path.clone() };
            let tuned = report.tuning.iter().any(|u| u.n_t == t.n_t && u.ansatz == t.ansatz);
            if !tuned {
                cells.entry((t.n_t, t.ansatz)).and_modify(|c| if f < c.infidelity { *c = cell.clone() }).or_insert(cell);
            }
        }
    }
    report.infidelity_table = cells.into_values().collect();
    report
}

/// Rows by `N_T`, one column per ansatz family.
pub fn render_table(report: &Report) -> String {
    let mut out = format!("{:>4}", "N_T");
    for k in ModelKind::ALL {
        out.push_str(&format!(" {:>10}", k.name()));
    }
    out.push('\n');
    let mut rows: Vec<usize> = report.infidelity_table.iter().map(|c| c.n_t).collect();
    rows.dedup();
    for n_t in rows {
        out.push_str(&format!("{n_t:>4}"));
        for k in ModelKind::ALL {
            match report.infidelity_table.iter().find(|c| c.n_t == n_t && c.ansatz == k) {
                Some(c) => out.push_str(&format!(" {:>10.3e}", c.infidelity)),
                None => out.push_str(&format!(" {:>10}", "-")),
            }
        }
        out.push('\n');
    }
    out
}

pub fn run(ctx: &Context) -> Result<()> {
    let report = collect(&ctx.out);
    if report.training.is_empty() && report.tuning.is_empty() && report.diagnostics.is_empty() {
        log::warn!("no artifacts found under {}", ctx.out.display());
    }
    for m in &report.missing {
        log::warn!("missing artifact: {m}");
    }
    write_json(&ctx.path("report.json"), &ctx.header, &report)?;
    print!("{}", render_table(&report));
    Ok(())
}

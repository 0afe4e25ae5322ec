//! Hyper-parameter studies over clock sizes at fixed total spin count.

use std::path::Path;

use clockvmc::models::ModelKind;
use clockvmc::sampling::derive_seed;
use clockvmc::tuner::{run_study, ProblemSpec, SearchSpace, StudyRecord};
use serde::{Deserialize, Serialize};

use super::Context;
use crate::error::Result;
use crate::output::{write_atomic, write_csv};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestRow {
    pub ansatz: ModelKind,
    pub n_s: usize,
    pub n_t: usize,
    pub rank: usize,
    pub trial_id: usize,
    pub objective: f64,
    pub infidelity: Option<f64>,
}

pub fn ledger_name(kind: ModelKind, n_s: usize, n_t: usize) -> String {
    format!("tune_{kind}_ns{n_s}_nt{n_t}.ndjson")
}

/// Inverse of [`ledger_name`].
pub fn parse_ledger_name(name: &str) -> Option<(ModelKind, usize, usize)> {
    let stem = name.strip_prefix("tune_")?.strip_suffix(".ndjson")?;
    let (rest, n_t) = stem.rsplit_once("_nt")?;
    let (kind, n_s) = rest.rsplit_once("_ns")?;
    Some((kind.parse().ok()?, n_s.parse().ok()?, n_t.parse().ok()?))
}

fn open_ledger(path: &Path, header_line: &str) -> Result<StudyRecord> {
    if !path.exists() {
        write_atomic(path, format!("{header_line}\n").as_bytes())?;
        return Ok(StudyRecord::default());
    }
    let first = std::fs::read_to_string(path)?.lines().next().unwrap_or_default().to_string();
    if first != header_line {
        log::warn!("resuming {} written under a different configuration ({first})", path.display());
    }
    Ok(StudyRecord::load_ndjson(path)?)
}

pub fn run(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let tune = &cfg.tune;
    let kind = cfg.model.kind;
    let space = SearchSpace::for_kind(kind);
    let tpe = tune.tpe();
    let mut best = Vec::new();
    std::fs::create_dir_all(&ctx.out)?;
    for &n_t in &tune.n_t_values {
        let n_s = tune.total_spins - n_t;
        let problem = ProblemSpec {
            kind,
            n_s,
            n_steps: (1usize << n_t) - 1,
            j: cfg.problem.j,
            h: cfg.problem.h,
            total_time: cfg.problem.total_time,
        };
        let path = ctx.path(&ledger_name(kind, n_s, n_t));
        let study = open_ledger(&path, &ctx.header.line())?;
        if study.trials.len() >= tune.n_trials {
            log::info!("{} already holds {} trials", path.display(), study.trials.len());
        } else if !study.trials.is_empty() {
            log::info!("resuming {} at trial {}", path.display(), study.trials.len());
        }
        let objective = problem.objective(tune.budget())?;
        let study = run_study(
            study,
            &space,
            &tpe,
            tune.n_trials,
            tune.parallelism,
            derive_seed(ctx.seed(), n_t as u64),
            objective,
            |t| {
                log::info!("N_T={n_t} trial {}: objective {:?} infidelity {:?}", t.trial_id, t.objective, t.infidelity);
                StudyRecord::append_ndjson(&path, t)
            },
        )?;
        let top = study.best_k(tune.best_k);
        if let Some(b) = top.first() {
            println!(
                "{kind} N_S={n_s} N_T={n_t}: {} trials, best objective {:.6} (trial {}, infidelity {})",
                study.trials.len(),
                b.objective.unwrap_or(f64::NAN),
                b.trial_id,
                b.infidelity.map_or("n/a".into(), |f| format!("{f:.4}"))
            );
        } else {
            println!("{kind} N_S={n_s} N_T={n_t}: no completed trials");
        }
        best.extend(top.iter().enumerate().map(|(rank, t)| BestRow {
            ansatz: kind,
            n_s,
            n_t,
            rank: rank + 1,
            trial_id: t.trial_id,
            objective: t.objective.unwrap_or(f64::NAN),
            infidelity: t.infidelity,
        }));
    }
    write_csv(&ctx.path(&format!("best{}_{kind}.csv", tune.best_k)), &ctx.header, &best)?;
    Ok(())
}

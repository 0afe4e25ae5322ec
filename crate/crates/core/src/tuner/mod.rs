//! Hyper-parameter search: a tree-structured Parzen estimator driving VMC
//! trials, with a resumable newline-delimited JSON ledger.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::derive_seed;

mod problem;
mod tpe;

pub use problem::{check_energy_estimate, ProblemSpec, TrialBudget, TrialOutcome};
pub use tpe::{suggest, Dimension, Prior, SearchSpace, TpeConfig};

/// Hyper-parameter assignment keyed by name. Integer and categorical values
/// are stored as exact floats.
pub type HyperParams = BTreeMap<String, f64>;

/// Stream separating suggestion seeds from trial seeds.
const SUGGEST_STREAM: u64 = 0x7375_6767_6573_7400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Complete,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial_id: usize,
    pub params: HyperParams,
    /// Final estimated energy; the only quantity the suggester reads.
    pub objective: Option<f64>,
    /// Diagnostic infidelity against the exact ground state.
    pub infidelity: Option<f64>,
    pub seed: u64,
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Trial {
    pub fn is_complete(&self) -> bool {
        self.status == TrialStatus::Complete && self.objective.is_some_and(f64::is_finite)
    }
}

/// Ordered trial ledger of one study.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub trials: Vec<Trial>,
}

impl StudyRecord {
    pub fn completed(&self) -> impl Iterator<Item = &Trial> + '_ {
        self.trials.iter().filter(|t| t.is_complete())
    }

    pub(crate) fn observations(&self) -> Vec<(HyperParams, f64)> {
        self.completed().map(|t| (t.params.clone(), t.objective.unwrap())).collect()
    }

    /// The `k` completed trials with the lowest objective, ascending (ties by
    /// trial id). Returns all completed trials, with a warning, when fewer
    /// than `k` exist.
    pub fn best_k(&self, k: usize) -> Vec<&Trial> {
        let mut done: Vec<&Trial> = self.completed().collect();
        if done.len() < k {
            log::warn!("only {} completed trials for best-{k}", done.len());
        }
        done.sort_by(|a, b| a.objective.unwrap().total_cmp(&b.objective.unwrap()).then(a.trial_id.cmp(&b.trial_id)));
        done.truncate(k);
        done
    }

    /// Reads a ledger written by [`StudyRecord::append_ndjson`]; a missing file
    /// is an empty study.
    pub fn load_ndjson(path: &Path) -> Result<Self> {
        let file = match std::fs::File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(e) => return Err(e.into()),
        };
        let mut trials = Vec::new();
        for line in std::io::BufReader::new(file).lines() {
            let line = line?;
            let body = line.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            trials.push(serde_json::from_str::<Trial>(body)?);
        }
        for (i, t) in trials.iter().enumerate() {
            if t.trial_id != i {
                return Err(Error::Format(format!("ledger line {i} holds trial {}", t.trial_id)));
            }
        }
        Ok(Self { trials })
    }

    /// Appends one trial as a JSON line.
    pub fn append_ndjson(path: &Path, trial: &Trial) -> Result<()> {
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(f, "{}", serde_json::to_string(trial)?)?;
        f.sync_data()?;
        Ok(())
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs trials until the study holds `n_trials`, resuming after the trials
/// already in `study`.
///
/// Trials are suggested in rounds of `parallelism`; within a round, earlier
/// suggestions are imputed at the median completed objective (constant liar)
/// before the next suggestion, and the round is evaluated concurrently. The
/// result depends only on `master_seed` and `parallelism`, not on thread
/// scheduling. `on_trial` sees every finished trial in id order.
#[allow(clippy::too_many_arguments)]
pub fn run_study<F>(
    mut study: StudyRecord,
    space: &SearchSpace,
    config: &TpeConfig,
    n_trials: usize,
    parallelism: usize,
    master_seed: u64,
    objective: F,
    mut on_trial: impl FnMut(&Trial) -> Result<()>,
) -> Result<StudyRecord>
where
    F: Fn(&HyperParams, u64) -> Result<(f64, Option<f64>)> + Sync,
{
    let parallelism = parallelism.max(1);
    while study.trials.len() < n_trials {
        let first = study.trials.len();
        let round = parallelism.min(n_trials - first);
        let mut observations = study.observations();
        let liar = if observations.is_empty() {
            None
        } else {
            Some(median(&mut observations.iter().map(|o| o.1).collect::<Vec<_>>()))
        };
        let mut pending = Vec::with_capacity(round);
        for id in first..first + round {
            let params = tpe::suggest_from(&observations, space, config, derive_seed(master_seed ^ SUGGEST_STREAM, id as u64));
            if let Some(v) = liar {
                observations.push((params.clone(), v));
            }
            pending.push((id, params, derive_seed(master_seed, id as u64)));
        }
        let finished: Vec<Trial> = pending
            .into_par_iter()
            .map(|(trial_id, params, seed)| match objective(&params, seed) {
                Ok((value, infidelity)) if value.is_finite() => Trial {
                    trial_id,
                    params,
                    objective: Some(value),
                    infidelity,
                    seed,
                    status: TrialStatus::Complete,
                    error: None,
                },
                outcome => Trial {
                    trial_id,
                    params,
                    objective: None,
                    infidelity: None,
                    seed,
                    status: TrialStatus::Failed,
                    error: Some(match outcome {
                        Ok((v, _)) => format!("non-finite objective {v}"),
                        Err(e) => e.to_string(),
                    }),
                },
            })
            .collect();
        for t in finished {
            if t.status == TrialStatus::Failed {
                log::warn!("trial {} failed: {}", t.trial_id, t.error.as_deref().unwrap_or(""));
            }
            on_trial(&t)?;
            study.trials.push(t);
        }
    }
    Ok(study)
}

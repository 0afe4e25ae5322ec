pub mod diagnose;
pub mod evolve;
pub mod report;
pub mod train;
pub mod tune;

use std::path::{Path, PathBuf};

use clockvmc::hamiltonian::ClockHamiltonian;
use clockvmc::models::NqsModel;
use clockvmc::observable::MeanMagnetization;
use clockvmc::oracle::{self, StateVector};
use clockvmc::sampling::{derive_seed, sample, SamplerConfig};
use clockvmc::vmc::{estimate_observable, exact_observable};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;
use crate::output::Header;

/// Stream for the evaluation batch drawn after training or from a checkpoint.
const EVAL_STREAM: u64 = 0x6576_616c;

/// Resolved configuration shared by every subcommand.
pub struct Context {
    pub config: RunConfig,
    pub header: Header,
    pub out: PathBuf,
    /// Record wall-clock times; off by default so outputs are reproducible.
    pub wallclock: bool,
}

impl Context {
    pub fn new(config: RunConfig, out: PathBuf, wallclock: bool) -> Self {
        Self { header: Header::new(&config), config, out, wallclock }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn hamiltonian(&self) -> Result<ClockHamiltonian<f64>> {
        Ok(self.config.problem.problem_spec(self.config.model.kind).hamiltonian()?)
    }
}

/// Exact ground state when the dense cap allows it.
pub fn ground_if_feasible(h: &ClockHamiltonian<f64>) -> Result<Option<StateVector<f64>>> {
    if h.dim() > h.dense_cap() {
        log::warn!("dimension {} above the dense cap {}; exact columns left empty", h.dim(), h.dense_cap());
        return Ok(None);
    }
    Ok(Some(oracle::ground_state(h)?.1))
}

/// One row of the per-time magnetization table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationRow {
    pub t: usize,
    pub exact_variational: Option<f64>,
    pub sampled: Option<f64>,
    pub sampled_stderr: Option<f64>,
    pub ed: Option<f64>,
}

/// Magnetization at every clock time: the model's estimate on a fresh batch,
/// the same estimator by enumeration, and the exact ground state.
pub fn magnetization_table(
    h: &ClockHamiltonian<f64>,
    ground: Option<&StateVector<f64>>,
    model: Option<&NqsModel<f64>>,
    sampler: &SamplerConfig,
) -> Result<Vec<MagnetizationRow>> {
    let batch = match model {
        Some(m) => Some(sample(m, &sampler.with_seed(derive_seed(sampler.seed, EVAL_STREAM)))?),
        None => None,
    };
    let enumerable = h.dim() <= h.dense_cap();
    (0..=h.n_steps())
        .map(|t| {
            let mut row = MagnetizationRow { t, exact_variational: None, sampled: None, sampled_stderr: None, ed: None };
            if let Some(g) = ground {
                row.ed = Some(oracle::exact_time_magnetization(g, t)?);
            }
            if let (Some(m), Some(b)) = (model, batch.as_ref()) {
                let est = estimate_observable(m, h, &MeanMagnetization, t, b)?;
                row.sampled = Some(est.mean);
                row.sampled_stderr = Some(est.stderr);
                if enumerable {
                    row.exact_variational = Some(exact_observable(m, h, &MeanMagnetization, t)?);
                }
            }
            Ok(row)
        })
        .collect()
}

/// Files below `dir` (at most `depth` levels), sorted by path.
pub fn walk(dir: &Path, depth: usize) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let Ok(entries) = std::fs::read_dir(dir) else {
        return out;
    };
    for e in entries.flatten() {
        let p = e.path();
        if p.is_dir() {
            if depth > 0 {
                out.extend(walk(&p, depth - 1));
            }
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

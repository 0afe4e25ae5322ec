//! Energy (VMC) or infidelity training of one model.

use clockvmc::io::Checkpoint;
use clockvmc::models::{init_with_stddev, ModelKind, Wavefunction};
use clockvmc::oracle;
use clockvmc::sampling::SamplerConfig;
use clockvmc::vmc::{train_infidelity, train_vmc, TrainingTrace};
use serde::{Deserialize, Serialize};

use super::{ground_if_feasible, magnetization_table, Context};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{write_csv, write_json};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Energy,
    Infidelity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub stage: usize,
    pub iter: usize,
    pub energy: Option<f64>,
    pub stderr: Option<f64>,
    pub acceptance: Option<f64>,
    pub grad_norm: f64,
    pub wallclock_ms: Option<u64>,
    pub infidelity: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub mode: Mode,
    pub ansatz: ModelKind,
    pub n_s: usize,
    pub n_t: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub n_params: usize,
    pub final_energy: Option<f64>,
    pub final_stderr: Option<f64>,
    pub final_infidelity: Option<f64>,
    pub exact_ground_energy: Option<f64>,
    pub events: Vec<String>,
    pub wallclock_ms: Option<u64>,
    pub config: RunConfig,
}

pub fn run(ctx: &Context, mode: Mode) -> Result<()> {
    let cfg = &ctx.config;
    let h = ctx.hamiltonian()?;
    let ground = ground_if_feasible(&h)?;
    let spec = cfg.model.spec(h.layout().n_spins());
    let seed = ctx.seed();
    let (model, trace): (_, TrainingTrace) = match mode {
        Mode::Energy => {
            let mut model = init_with_stddev::<f64>(&spec, seed, cfg.train.init_stddev)?;
            let trace = train_vmc(&mut model, &h, &cfg.train.vmc(seed), ground.as_ref())?;
            (model, trace)
        }
        Mode::Infidelity => {
            let target = ground.as_ref().ok_or_else(|| {
                CliError::Config("infidelity training needs the exact ground state; raise the dense cap or shrink the problem".into())
            })?;
            let mut model = init_with_stddev::<f64>(&spec, seed, cfg.infidelity.init_stddev)?;
            let trace = train_infidelity(&mut model, target, &cfg.infidelity.config())?;
            (model, trace)
        }
    };
    for e in &trace.events {
        log::warn!("{e}");
    }
    let final_infidelity = match (&ground, trace.final_infidelity) {
        (Some(g), _) => Some(oracle::infidelity(g, &oracle::model_state(&model, h.layout())?)?),
        (None, f) => f,
    };
    if final_infidelity.is_some_and(|f| !f.is_finite()) || trace.final_energy.is_some_and(|e| !e.is_finite()) {
        return Err(CliError::Numeric("training produced a non-finite result".into()));
    }

    let rows: Vec<TraceRow> = trace
        .records
        .iter()
        .map(|r| TraceRow {
            stage: r.stage,
            iter: r.iter,
            energy: r.energy,
            stderr: r.stderr,
            acceptance: r.acceptance,
            grad_norm: r.grad_norm,
            wallclock_ms: ctx.wallclock.then_some(r.wallclock_ms),
            infidelity: r.infidelity,
        })
        .collect();
    write_csv(&ctx.path("trace.csv"), &ctx.header, &rows)?;
    write_json(&ctx.path("checkpoint.json"), &ctx.header, &Checkpoint::from_model(&model, seed))?;

    let sampler = SamplerConfig::new(cfg.evolve.n_samples, cfg.evolve.n_chains, seed);
    let table = magnetization_table(&h, ground.as_ref(), Some(&model), &sampler)?;
    write_csv(&ctx.path("magnetization.csv"), &ctx.header, &table)?;

    let layout = h.layout();
    let summary = Summary {
        mode,
        ansatz: spec.kind,
        n_s: layout.n_s,
        n_t: layout.n_t,
        n_steps: h.n_steps(),
        seed,
        n_params: model.n_params(),
        final_energy: trace.final_energy,
        final_stderr: trace.final_stderr,
        final_infidelity,
        exact_ground_energy: ground.as_ref().map(|g| oracle::rayleigh_quotient(&h, g)).transpose()?,
        events: trace.events.clone(),
        wallclock_ms: ctx.wallclock.then_some(trace.wallclock_ms),
        config: RunConfig { out: None, ..cfg.clone() },
    };
    write_json(&ctx.path("summary.json"), &ctx.header, &summary)?;
    match final_infidelity {
        Some(f) => println!("{} {:?}: final infidelity {f:.3e}", spec.kind, mode),
        None => println!("{} {:?}: done", spec.kind, mode),
    }
    Ok(())
}

//! Time-resolved magnetization from a checkpoint or from exact diagonalization.

use std::path::PathBuf;

use clockvmc::io::Checkpoint;
use clockvmc::models::NqsModel;
use clockvmc::sampling::SamplerConfig;

use super::{ground_if_feasible, magnetization_table, Context};
use crate::error::{CliError, Result};
use crate::output::{read_json, write_csv};

pub fn run(ctx: &Context, exact: bool, checkpoint: Option<PathBuf>) -> Result<()> {
    let cfg = &ctx.config;
    let h = ctx.hamiltonian()?;
    let model: Option<NqsModel<f64>> = if exact {
        None
    } else {
        let path = checkpoint.or_else(|| cfg.evolve.checkpoint.clone()).unwrap_or_else(|| ctx.path("checkpoint.json"));
        if !path.exists() {
            return Err(CliError::Missing(format!("checkpoint {} (pass --exact for the exact curve only)", path.display())));
        }
        let stored: Checkpoint = read_json(&path)?.data;
        let model = stored.to_model::<f64>()?;
        if stored.spec.n_spins != h.layout().n_spins() {
            return Err(CliError::Config(format!(
                "checkpoint has {} spins, the configured problem has {}",
                stored.spec.n_spins,
                h.layout().n_spins()
            )));
        }
        Some(model)
    };
    let ground = ground_if_feasible(&h)?;
    let sampler = SamplerConfig::new(cfg.evolve.n_samples, cfg.evolve.n_chains, ctx.seed());
    let rows = magnetization_table(&h, ground.as_ref(), model.as_ref(), &sampler)?;
    let path = ctx.path("magnetization.csv");
    write_csv(&path, &ctx.header, &rows)?;
    println!("wrote {} time points to {}", rows.len(), path.display());
    Ok(())
}

//! Exact-diagonalization diagnostics over an `(N_S, N_T)` grid.

use clockvmc::hamiltonian::{ClockHamiltonian, TfimParams};
use clockvmc::oracle;
use serde::{Deserialize, Serialize};

use super::Context;
use crate::error::{CliError, Result};
use crate::output::write_csv;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub n_s: usize,
    pub n_t: usize,
    pub n_p: usize,
    pub renyi2: f64,
    pub gini: f64,
    pub coverage: f64,
    pub energy: f64,
}

pub fn run(ctx: &Context) -> Result<()> {
    let p = &ctx.config.problem;
    let grid = &ctx.config.diagnose;
    let mut rows = Vec::new();
    let mut skipped = 0;
    for &n_t in &grid.n_t_values {
        for &n_s in &grid.n_s_values {
            if grid.total_spins.is_some_and(|n| n != n_s + n_t) {
                continue;
            }
            if n_t >= usize::BITS as usize - 1 {
                return Err(CliError::Config(format!("n_t = {n_t} is too large")));
            }
            let n_steps = (1usize << n_t) - 1;
            let report = ClockHamiltonian::new(TfimParams::with_couplings(n_s, p.j, p.h), n_steps, p.total_time)
                .map(|h| h.with_dense_cap(grid.max_dim))
                .and_then(|h| oracle::diagnose(&h));
            match report {
                Ok(r) => {
                    for (k, &s2) in r.renyi2_per_spin.iter().enumerate() {
                        rows.push(DiagnosticsRow {
                            n_s,
                            n_t,
                            n_p: k + 1,
                            renyi2: s2 + 0.0,
                            gini: r.gini,
                            coverage: r.coverage_ratio,
                            energy: r.ground_energy,
                        });
                    }
                }
                Err(e) => {
                    skipped += 1;
                    log::warn!("skipping N_S={n_s}, N_T={n_t}: {e}");
                }
            }
        }
    }
    let path = ctx.path("diagnostics.csv");
    write_csv(&path, &ctx.header, &rows)?;
    println!("wrote {} rows to {} ({skipped} grid points skipped)", rows.len(), path.display());
    Ok(())
}

//! Binding between hyper-parameter assignments and VMC training runs.

use serde::{Deserialize, Serialize};

use super::{Dimension, HyperParams, Prior, SearchSpace};
use crate::error::{Error, Result};
use crate::hamiltonian::{ClockHamiltonian, TfimParams};
use crate::models::{init_parameters, ModelKind, ModelSpec};
use crate::oracle::{self, StateVector};
use crate::sampling::SamplerConfig;
use crate::vmc::{train_vmc, TrainingTrace, VmcConfig};

/// `(objective, infidelity)` of a finished trial.
pub type TrialResult = (f64, Option<f64>);

/// The physical problem a study tunes for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ModelKind,
    pub n_s: usize,
    /// Number of time steps `N`.
    pub n_steps: usize,
    pub j: f64,
    pub h: f64,
    pub total_time: f64,
}

/// Per-trial training budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialBudget {
    pub iterations_per_stage: usize,
    pub schedule_stages: usize,
}

/// Result of one tuned training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub trace: TrainingTrace,
    pub model: crate::models::NqsModel<f64>,
}

fn categorical(values: &[f64]) -> Prior {
    Prior::Categorical { choices: values.to_vec() }
}

impl SearchSpace {
    /// Priors for an ansatz family: sample count and learning rate for all,
    /// chain count and hidden density for RBMs, depth and width for
    /// autoregressive models.
    pub fn for_kind(kind: ModelKind) -> Self {
        let mut dims = vec![
            Dimension { name: "n_samples".into(), prior: Prior::IntUniform { low: 256, high: 2048 } },
            Dimension { name: "learning_rate".into(), prior: Prior::LogUniform { low: 1e-4, high: 1.0 } },
        ];
        if kind.is_autoregressive() {
            dims.push(Dimension { name: "n_layers".into(), prior: categorical(&[1.0, 2.0, 3.0]) });
            dims.push(Dimension { name: "n_hidden".into(), prior: categorical(&[2.0, 4.0, 8.0, 16.0, 32.0]) });
        } else {
            dims.push(Dimension { name: "n_chains".into(), prior: categorical(&[4.0, 8.0, 16.0]) });
            dims.push(Dimension { name: "alpha".into(), prior: categorical(&[1.0, 2.0, 3.0, 4.0, 5.0]) });
        }
        SearchSpace::new(dims).expect("built-in priors are valid")
    }
}

fn get(params: &HyperParams, name: &str) -> Result<f64> {
    params.get(name).copied().ok_or_else(|| Error::Domain(format!("missing hyper-parameter `{name}`")))
}

fn get_count(params: &HyperParams, name: &str) -> Result<usize> {
    let v = get(params, name)?;
    if v < 1.0 || v.fract() != 0.0 {
        return Err(Error::Domain(format!("`{name}` = {v} is not a positive integer")));
    }
    Ok(v as usize)
}

impl ProblemSpec {
    pub fn n_spins(&self) -> usize {
        self.n_s + crate::basis::clock_bits(self.n_steps)
    }

    pub fn hamiltonian(&self) -> Result<ClockHamiltonian<f64>> {
        ClockHamiltonian::new(TfimParams::with_couplings(self.n_s, self.j, self.h), self.n_steps, self.total_time)
    }

    /// Model architecture and training configuration of one trial.
    pub fn trial_config(&self, params: &HyperParams, budget: &TrialBudget, seed: u64) -> Result<(ModelSpec, VmcConfig)> {
        let n = self.n_spins();
        let n_samples = get_count(params, "n_samples")?;
        let (spec, chains) = if self.kind.is_autoregressive() {
            let spec = ModelSpec {
                kind: self.kind,
                ..ModelSpec::ar(n, get_count(params, "n_layers")?, get_count(params, "n_hidden")?)
            };
            (spec, 1)
        } else {
            let spec = ModelSpec { kind: self.kind, ..ModelSpec::rbm(n, get_count(params, "alpha")?) };
            (spec, get_count(params, "n_chains")?)
        };
        let mut vmc = VmcConfig::new(
            get(params, "learning_rate")?,
            budget.iterations_per_stage,
            SamplerConfig::new(n_samples, chains, seed),
        );
        vmc.schedule_stages = budget.schedule_stages;
        spec.validate()?;
        vmc.validate()?;
        Ok((spec, vmc))
    }

    /// Trains one trial; the model is initialized from `seed`.
    pub fn run_trial(
        &self,
        h: &ClockHamiltonian<f64>,
        ground: Option<&StateVector<f64>>,
        params: &HyperParams,
        budget: &TrialBudget,
        seed: u64,
    ) -> Result<TrialOutcome> {
        let (spec, vmc) = self.trial_config(params, budget, seed)?;
        let mut model = init_parameters::<f64>(&spec, seed)?;
        let trace = train_vmc(&mut model, h, &vmc, ground)?;
        Ok(TrialOutcome { trace, model })
    }

    /// Objective for [`super::run_study`]: final estimated energy, plus the
    /// infidelity against the exact ground state as a diagnostic.
    ///
    /// Estimates that contradict `0 ≤ E ≤ ‖ℋ‖` by more than three standard
    /// errors, or whose standard error exceeds that range, fail the trial:
    /// they come from chains that never reached the model's dominant
    /// configurations, and ranking them would reward divergence.
    pub fn objective(
        &self,
        budget: TrialBudget,
    ) -> Result<impl Fn(&HyperParams, u64) -> Result<TrialResult> + Sync + '_> {
        let h = self.hamiltonian()?;
        let ground = oracle::ground_state(&h).ok().map(|(_, s)| s);
        Ok(move |params: &HyperParams, seed: u64| {
            let out = self.run_trial(&h, ground.as_ref(), params, &budget, seed)?;
            let energy = out.trace.final_energy.ok_or_else(|| Error::Numeric("no final energy".into()))?;
            let stderr = out.trace.final_stderr.unwrap_or(0.0);
            check_energy_estimate(energy, stderr, h.norm_bound())?;
            Ok((energy, out.trace.final_infidelity))
        })
    }
}

/// Rejects an energy estimate inconsistent with a spectrum in `[0, bound]`.
pub fn check_energy_estimate(mean: f64, stderr: f64, bound: f64) -> Result<()> {
    if stderr > bound || mean < -3.0 * stderr || mean > bound + 3.0 * stderr {
        return Err(Error::Numeric(format!(
            "energy estimate {mean:e} ± {stderr:e} is inconsistent with the spectrum [0, {bound}]; chains did not mix"
        )));
    }
    Ok(())
}

//! Run configuration: a TOML file overlaid by command-line flags.

use std::path::PathBuf;

use clockvmc::basis::clock_bits;
use clockvmc::models::{ModelKind, ModelSpec, INIT_STDDEV};
use clockvmc::sampling::SamplerConfig;
use clockvmc::tuner::{ProblemSpec, TpeConfig, TrialBudget};
use clockvmc::vmc::{AdamWConfig, InfidelityConfig, VmcConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Physical problem: TFIM chain with a clock of `n_t` spins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub n_s: usize,
    pub n_t: usize,
    /// Number of time steps; defaults to `2^n_t − 1`.
    pub n_steps: Option<usize>,
    pub j: f64,
    pub h: f64,
    pub total_time: f64,
    /// Only the all-up product state is supported.
    pub initial: String,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self { n_s: 5, n_t: 4, n_steps: None, j: 0.25, h: 1.0, total_time: 3.0, initial: "all-up".into() }
    }
}

impl ProblemConfig {
    pub fn steps(&self) -> usize {
        self.n_steps.unwrap_or((1usize << self.n_t) - 1)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.initial != "all-up" {
            return Err(CliError::Config(format!("unsupported initial state `{}`", self.initial)));
        }
        if self.n_s == 0 || self.n_t > 20 || self.n_s > 30 {
            return Err(CliError::Config("n_s must lie in 1..=30 and n_t in 0..=20".into()));
        }
        if clock_bits(self.steps()) != self.n_t {
            return Err(CliError::Config(format!("{} time steps need {} clock spins, not {}", self.steps(), clock_bits(self.steps()), self.n_t)));
        }
        if !(self.j.is_finite() && self.h.is_finite() && self.total_time.is_finite() && self.total_time >= 0.0) {
            return Err(CliError::Config("couplings and total time must be finite".into()));
        }
        Ok(())
    }

    pub fn problem_spec(&self, kind: ModelKind) -> ProblemSpec {
        ProblemSpec { kind, n_s: self.n_s, n_steps: self.steps(), j: self.j, h: self.h, total_time: self.total_time }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub alpha: usize,
    pub n_layers: usize,
    pub n_hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { kind: ModelKind::Rbm, alpha: 4, n_layers: 2, n_hidden: 8 }
    }
}

impl ModelConfig {
    pub fn spec(&self, n_spins: usize) -> ModelSpec {
        ModelSpec { kind: self.kind, n_spins, alpha: self.alpha, n_layers: self.n_layers, n_hidden: self.n_hidden }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub iterations_per_stage: usize,
    pub schedule_stages: usize,
    pub n_samples: usize,
    pub n_chains: usize,
    pub init_stddev: f64,
    pub burn_in: Option<usize>,
    pub thinning: Option<usize>,
    pub persistent_chains: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.005,
            weight_decay: 0.01,
            iterations_per_stage: 100,
            schedule_stages: 20,
            n_samples: 512,
            n_chains: 16,
            init_stddev: INIT_STDDEV,
            burn_in: None,
            thinning: None,
            persistent_chains: true,
        }
    }
}

impl TrainConfig {
    pub fn vmc(&self, seed: u64) -> VmcConfig {
        VmcConfig {
            optimizer: AdamWConfig { weight_decay: self.weight_decay, ..AdamWConfig::new(self.learning_rate) },
            n_iterations: self.iterations_per_stage,
            sampler: SamplerConfig {
                burn_in: self.burn_in,
                thinning: self.thinning,
                ..SamplerConfig::new(self.n_samples, self.n_chains, seed)
            },
            schedule_stages: self.schedule_stages,
            persistent_chains: self.persistent_chains,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InfidelityTrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub n_iterations: usize,
    pub init_stddev: f64,
}

impl Default for InfidelityTrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.01, weight_decay: 0.0, n_iterations: 2000, init_stddev: 0.1 }
    }
}

impl InfidelityTrainConfig {
    pub fn config(&self) -> InfidelityConfig {
        InfidelityConfig {
            optimizer: AdamWConfig { weight_decay: self.weight_decay, ..AdamWConfig::new(self.learning_rate) },
            n_iterations: self.n_iterations,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Tpe,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneConfig {
    pub n_trials: usize,
    /// Trials evaluated concurrently per suggestion round.
    pub parallelism: usize,
    /// Clock sizes to sweep; `n_s = total_spins − n_t`.
    pub n_t_values: Vec<usize>,
    pub total_spins: usize,
    pub iterations_per_stage: usize,
    pub schedule_stages: usize,
    pub sampler: SamplerKind,
    pub tpe: TpeConfig,
    pub best_k: usize,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            n_trials: 30,
            parallelism: 1,
            n_t_values: vec![1, 2, 3, 4],
            total_spins: 9,
            iterations_per_stage: 100,
            schedule_stages: 20,
            sampler: SamplerKind::Tpe,
            tpe: TpeConfig::default(),
            best_k: 10,
        }
    }
}

impl TuneConfig {
    pub fn budget(&self) -> TrialBudget {
        TrialBudget { iterations_per_stage: self.iterations_per_stage, schedule_stages: self.schedule_stages }
    }

    pub fn tpe(&self) -> TpeConfig {
        match self.sampler {
            SamplerKind::Tpe => self.tpe,
            SamplerKind::Random => TpeConfig { parzen: false, ..self.tpe },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnoseConfig {
    /// `(n_s, n_t)` grid as the product of these lists.
    pub n_s_values: Vec<usize>,
    pub n_t_values: Vec<usize>,
    /// When set, only grid points with `n_s + n_t` equal to this are used.
    pub total_spins: Option<usize>,
    /// Dense-diagonalization cap; larger grid points are reported and skipped.
    pub max_dim: usize,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self { n_s_values: (1..=9).collect(), n_t_values: (0..=4).collect(), total_spins: None, max_dim: 1 << 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    pub checkpoint: Option<PathBuf>,
    pub n_samples: usize,
    pub n_chains: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self { checkpoint: None, n_samples: 20000, n_chains: 16 }
    }
}

/// Everything a subcommand needs. Unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub problem: ProblemConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub infidelity: InfidelityTrainConfig,
    pub tune: TuneConfig,
    pub diagnose: DiagnoseConfig,
    pub evolve: EvolveConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Full-budget settings: 300 iterations per stage and 100 trials.
    pub fn apply_paper_scale(&mut self) {
        self.train.iterations_per_stage = 300;
        self.tune.iterations_per_stage = 300;
        self.tune.n_trials = 100;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.problem.validate()?;
        self.model
            .spec(self.problem.n_s + self.problem.n_t)
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.train.vmc(self.seed).validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.infidelity.config().optimizer.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.tune.n_t_values.iter().any(|&t| t == 0 || t >= self.tune.total_spins) {
            return Err(CliError::Config("tune.n_t_values must lie in 1..total_spins".into()));
        }
        self.tune.tpe.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.tune.best_k == 0 || self.tune.n_trials == 0 {
            return Err(CliError::Config("tune.best_k and tune.n_trials must be positive".into()));
        }
        for s in [self.train.init_stddev, self.infidelity.init_stddev] {
            if !(s.is_finite() && s > 0.0) {
                return Err(CliError::Config("init_stddev must be positive".into()));
            }
        }
        if self.evolve.n_samples == 0 || self.evolve.n_chains == 0 {
            return Err(CliError::Config("evolve.n_samples and evolve.n_chains must be positive".into()));
        }
        Ok(())
    }
}

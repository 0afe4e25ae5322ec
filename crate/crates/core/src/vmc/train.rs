use std::time::Instant;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{estimate_gradient, AdamW, AdamWConfig, EnergyEstimate};
use crate::error::{Error, Result};
use crate::hamiltonian::{ClockHamiltonian, TfimSpectrum};
use crate::models::{NqsModel, Wavefunction};
use crate::oracle::{self, StateVector};
use crate::sampling::{derive_seed, metropolis_continue, sample, SampleBatch, SamplerConfig};
use crate::scalar::{cexp, cnorm_sqr, Real};

/// Seed offset reserved for the post-training evaluation batch.
const EVAL_STREAM: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmcConfig {
    pub optimizer: AdamWConfig,
    /// Optimizer steps per schedule stage.
    pub n_iterations: usize,
    pub sampler: SamplerConfig,
    /// Number of stages `k = 1..=S` with total time `T_k = kT/S`.
    #[serde(default = "default_stages")]
    pub schedule_stages: usize,
    /// Resume Markov chains from the previous iteration's final states
    /// instead of restarting them with a full burn-in.
    #[serde(default = "default_persistent")]
    pub persistent_chains: bool,
}

fn default_stages() -> usize {
    20
}

fn default_persistent() -> bool {
    true
}

impl VmcConfig {
    pub fn new(learning_rate: f64, n_iterations: usize, sampler: SamplerConfig) -> Self {
        Self {
            optimizer: AdamWConfig::new(learning_rate),
            n_iterations,
            sampler,
            schedule_stages: default_stages(),
            persistent_chains: default_persistent(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        self.sampler.validate()?;
        if self.schedule_stages == 0 {
            return Err(Error::Domain("schedule_stages must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfidelityConfig {
    pub optimizer: AdamWConfig,
    pub n_iterations: usize,
}

/// One optimizer step. Energy columns are empty in infidelity training and
/// the infidelity column is empty in energy training.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub stage: usize,
    pub iter: usize,
    pub energy: Option<f64>,
    pub stderr: Option<f64>,
    pub acceptance: Option<f64>,
    pub grad_norm: f64,
    pub param_norm: f64,
    pub infidelity: Option<f64>,
    pub wallclock_ms: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub records: Vec<IterationRecord>,
    /// Estimate on a fresh batch after training (energy training only).
    pub final_energy: Option<f64>,
    pub final_stderr: Option<f64>,
    /// Against the supplied reference state, when one was given.
    pub final_infidelity: Option<f64>,
    /// Non-fatal incidents: rejected steps, stalled stages.
    pub events: Vec<String>,
    pub wallclock_ms: u64,
}

fn norm<T: Real>(v: &[T]) -> f64 {
    v.iter().map(|x| x.as_f64() * x.as_f64()).sum::<f64>().sqrt()
}

/// Energy minimization with the adiabatic clock schedule. Stage `k` trains on
/// the clock Hamiltonian of `h` rebuilt with total time `kT/S` (same number of
/// steps), and every iteration samples with a seed derived from the sampler
/// seed and the global iteration count.
pub fn train_vmc<T: Real>(
    model: &mut NqsModel<T>,
    h: &ClockHamiltonian<T>,
    config: &VmcConfig,
    reference: Option<&StateVector<T>>,
) -> Result<TrainingTrace> {
    config.validate()?;
    if model.n_spins() != h.layout().n_spins() {
        return Err(Error::Domain("model and Hamiltonian disagree on the spin count".into()));
    }
    let start = Instant::now();
    let spectrum = TfimSpectrum::new(*h.tfim())?;
    let mut opt = AdamW::new(config.optimizer, model.n_params())?;
    let mut trace = TrainingTrace::default();
    let mut params = model.parameters();
    let stages = config.schedule_stages;
    let mut global = 0u64;
    let mut chains: Option<Vec<Vec<i8>>> = None;
    for k in 1..=stages {
        let time = h.total_time() * T::from_count(k) / T::from_count(stages);
        let hk = ClockHamiltonian::from_spectrum(&spectrum, h.n_steps(), time)?.with_dense_cap(h.dense_cap());
        let mut first = None;
        let mut last = None;
        for iter in 0..config.n_iterations {
            let batch = draw(model, &config.sampler.with_seed(derive_seed(config.sampler.seed, global)), &chains)?;
            if config.persistent_chains && !batch.chain_ends().is_empty() {
                chains = Some(batch.chain_ends().to_vec());
            }
            global += 1;
            let (est, grad) = estimate_gradient(model, &hk, &batch)?;
            let est: EnergyEstimate<T> = est;
            first.get_or_insert(est.mean.as_f64());
            last = Some(est.mean.as_f64());
            if let Err(e) = opt.step(&mut params, &grad) {
                trace.events.push(format!("stage {k} iter {iter}: step rejected: {e}"));
            } else {
                model.set_parameters(&params)?;
            }
            trace.records.push(IterationRecord {
                stage: k,
                iter,
                energy: Some(est.mean.as_f64()),
                stderr: Some(est.stderr.as_f64()),
                acceptance: batch.acceptance_rate(),
                grad_norm: norm(&grad),
                param_norm: norm(&params),
                infidelity: None,
                wallclock_ms: start.elapsed().as_millis() as u64,
            });
        }
        if let (Some(a), Some(b)) = (first, last) {
            if config.n_iterations > 1 && b >= a {
                trace.events.push(format!("stage {k}: energy did not decrease ({a:.6} -> {b:.6})"));
                log::info!("stage {k}: energy did not decrease ({a:.6} -> {b:.6})");
            }
        }
    }
    let batch = draw(model, &config.sampler.with_seed(derive_seed(config.sampler.seed, EVAL_STREAM)), &chains)?;
    let est = super::estimate_energy(model, h, &batch)?;
    trace.final_energy = Some(est.mean.as_f64());
    trace.final_stderr = Some(est.stderr.as_f64());
    if let Some(target) = reference {
        let state = oracle::model_state(model, h.layout())?;
        trace.final_infidelity = Some(oracle::infidelity(target, &state)?.as_f64());
    }
    trace.wallclock_ms = start.elapsed().as_millis() as u64;
    Ok(trace)
}

fn draw<T: Real>(
    model: &NqsModel<T>,
    config: &SamplerConfig,
    chains: &Option<Vec<Vec<i8>>>,
) -> Result<SampleBatch<T>> {
    match chains {
        Some(starts) if model.as_autoregressive().is_none() => metropolis_continue(model, config, starts, 0),
        _ => sample(model, config),
    }
}

/// Infidelity `1 − |⟨Φ|Ψ⟩|²/(⟨Φ|Φ⟩⟨Ψ|Ψ⟩)` and its gradient over the real
/// parameter slots, by full enumeration of the basis.
pub fn infidelity_gradient<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    target: &StateVector<T>,
) -> Result<(T, Vec<T>)> {
    if model.n_spins() != target.layout().n_spins() {
        return Err(Error::Domain("model and target disagree on the spin count".into()));
    }
    let logs = oracle::enumerate_log_psi(model);
    let top = logs
        .iter()
        .filter(|l| l.re.is_finite())
        .map(|l| l.re)
        .fold(None, |m: Option<T>, x| Some(m.map_or(x, |m| m.max(x))))
        .ok_or_else(|| Error::Numeric("model amplitudes vanish everywhere".into()))?;
    let n_target = target.norm_sqr();
    if n_target <= T::zero() {
        return Err(Error::Domain("target state is zero".into()));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let n_params = model.n_params();
    let mut ds = vec![zero; n_params];
    let mut dn = vec![T::zero(); n_params];
    let mut o = vec![zero; n_params];
    let mut s = zero;
    let mut n = T::zero();
    let mut spins = vec![0i8; model.n_spins()];
    for (i, (&l, &phi)) in logs.iter().zip(target.amplitudes()).enumerate() {
        if !l.re.is_finite() {
            continue;
        }
        let psi = cexp(Complex::new(l.re - top, l.im));
        let w = cnorm_sqr(psi);
        let overlap = phi.conj() * psi;
        s += overlap;
        n += w;
        crate::basis::index_to_spins(i, &mut spins);
        model.log_derivatives(&spins, &mut o);
        for k in 0..n_params {
            ds[k] += overlap * o[k];
            dn[k] += T::lit(2.0) * w * o[k].re;
        }
    }
    let s2 = cnorm_sqr(s);
    let denom = n * n * n_target;
    let f = (T::one() - s2 / (n * n_target)).max(T::zero());
    let grad = (0..n_params)
        .map(|k| -(T::lit(2.0) * (s.conj() * ds[k]).re * n - s2 * dn[k]) / denom)
        .collect();
    Ok((f, grad))
}

/// AdamW descent on the infidelity against `target` with exact gradients.
pub fn train_infidelity<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &mut M,
    target: &StateVector<T>,
    config: &InfidelityConfig,
) -> Result<TrainingTrace> {
    let start = Instant::now();
    let mut opt = AdamW::new(config.optimizer, model.n_params())?;
    let mut trace = TrainingTrace::default();
    let mut params = model.parameters();
    for iter in 0..config.n_iterations {
        let (f, grad) = infidelity_gradient(model, target)?;
        if let Err(e) = opt.step(&mut params, &grad) {
            trace.events.push(format!("iter {iter}: step rejected: {e}"));
        } else {
            model.set_parameters(&params)?;
        }
        trace.records.push(IterationRecord {
            stage: 1,
            iter,
            energy: None,
            stderr: None,
            acceptance: None,
            grad_norm: norm(&grad),
            param_norm: norm(&params),
            infidelity: Some(f.as_f64()),
            wallclock_ms: start.elapsed().as_millis() as u64,
        });
    }
    let (f, _) = infidelity_gradient(model, target)?;
    trace.final_infidelity = Some(f.as_f64());
    trace.wallclock_ms = start.elapsed().as_millis() as u64;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::TfimParams;
    use crate::models::{init_parameters, ModelSpec};

    #[test]
    fn own_state_has_zero_infidelity() {
        let m = init_parameters::<f64>(&ModelSpec::mp_rbm(5, 1), 2).unwrap();
        let layout = crate::basis::Layout::new(3, 2).unwrap();
        let target = oracle::model_state(&m, layout).unwrap();
        let (f, g) = infidelity_gradient(&m, &target).unwrap();
        assert!(f.abs() < 1e-14);
        assert!(g.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn single_stage_training_runs_and_is_deterministic() {
        let h = ClockHamiltonian::new(TfimParams::new(2), 1, 3.0).unwrap();
        let spec = ModelSpec::rbm(3, 1);
        let cfg = VmcConfig { schedule_stages: 1, ..VmcConfig::new(0.05, 10, SamplerConfig::new(64, 4, 1)) };
        let run = || {
            let mut m = init_parameters::<f64>(&spec, 0).unwrap();
            let t = train_vmc(&mut m, &h, &cfg, None).unwrap();
            (m.parameters(), t.records.iter().map(|r| r.energy).collect::<Vec<_>>(), t.final_energy)
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.1.len(), 10);
    }
}

//! Local energies, Monte Carlo estimators, gradients and the training loops.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex;

use crate::basis::{self, clock_word_time, gray_encode};
use crate::error::{Error, Result};
use crate::hamiltonian::{ClockHamiltonian, OperatorRow};
use crate::models::Wavefunction;
use crate::observable::PhysicalOperator;
use crate::oracle;
use crate::sampling::SampleBatch;
use crate::scalar::{cexp, Real};

mod optim;
mod train;

pub use optim::{AdamW, AdamWConfig};
pub use train::{
    infidelity_gradient, train_infidelity, train_vmc, InfidelityConfig, IterationRecord, TrainingTrace, VmcConfig,
};

/// Basis dimension up to which `log Ψ` memoization uses a flat table.
const FLAT_CACHE_LIMIT: usize = 1 << 20;

/// Memoized `log Ψ` over basis indices, with amplitudes `exp(log Ψ − shift)`
/// for a fixed shift so ratios reduce to divisions.
pub struct LogPsiCache<'a, T, M: ?Sized> {
    model: &'a M,
    flat: Vec<Option<(Complex<T>, Complex<T>)>>,
    map: HashMap<usize, (Complex<T>, Complex<T>)>,
    shift: T,
    spins: Vec<i8>,
}

impl<'a, T: Real, M: Wavefunction<T> + ?Sized> LogPsiCache<'a, T, M> {
    pub fn new(model: &'a M) -> Self {
        Self::with_shift(model, T::zero())
    }

    /// `shift` should be near the largest `Re log Ψ` of interest.
    pub fn with_shift(model: &'a M, shift: T) -> Self {
        let n = model.n_spins();
        let flat = if n < usize::BITS as usize && 1usize << n <= FLAT_CACHE_LIMIT {
            vec![None; 1 << n]
        } else {
            Vec::new()
        };
        Self { model, flat, map: HashMap::new(), shift, spins: vec![0; n] }
    }

    fn entry(&self, l: Complex<T>) -> (Complex<T>, Complex<T>) {
        let a = if l.re.is_finite() {
            cexp(Complex::new(l.re - self.shift, l.im))
        } else {
            Complex::new(T::zero(), T::zero())
        };
        (l, a)
    }

    /// Records an already known value.
    pub fn insert(&mut self, index: usize, value: Complex<T>) {
        let e = self.entry(value);
        if self.flat.is_empty() {
            self.map.insert(index, e);
        } else {
            self.flat[index] = Some(e);
        }
    }

    fn lookup(&mut self, index: usize) -> (Complex<T>, Complex<T>) {
        let known = if self.flat.is_empty() { self.map.get(&index).copied() } else { self.flat[index] };
        if let Some(v) = known {
            return v;
        }
        basis::index_to_spins(index, &mut self.spins);
        let l = self.model.log_psi(&self.spins);
        self.insert(index, l);
        self.entry(l)
    }

    pub fn get(&mut self, index: usize) -> Complex<T> {
        self.lookup(index).0
    }

    /// `exp(log Ψ − shift)`, possibly overflowing or underflowing.
    fn shifted(&mut self, index: usize) -> Complex<T> {
        self.lookup(index).1
    }
}

/// Smallest shifted amplitude modulus trusted as a divisor.
const MIN_SHIFTED: f64 = 1e-150;

/// `Σ_{σ'} ⟨σ|ℋ|σ'⟩ Ψ(σ')/Ψ(σ)`, or `None` when `Ψ(σ) = 0`.
pub fn local_energy<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    h: &ClockHamiltonian<T>,
    spins: &[i8],
) -> Option<Complex<T>> {
    let here = model.log_psi(spins);
    let shift = if here.re.is_finite() { here.re } else { T::zero() };
    let mut cache = LogPsiCache::with_shift(model, shift);
    let index = basis::spins_to_index(spins);
    cache.insert(index, here);
    let mut row = OperatorRow::default();
    local_energy_cached(h, index, &mut cache, &mut row)
}

fn local_energy_cached<T: Real, M: Wavefunction<T> + ?Sized>(
    h: &ClockHamiltonian<T>,
    index: usize,
    cache: &mut LogPsiCache<'_, T, M>,
    row: &mut OperatorRow<T>,
) -> Option<Complex<T>> {
    let here = cache.get(index);
    if !here.re.is_finite() {
        return None;
    }
    h.row_into(index, row);
    let a_here = cache.shifted(index);
    if crate::scalar::cabs(a_here).as_f64() > MIN_SHIFTED {
        let mut acc = Complex::new(T::zero(), T::zero());
        for &(k, v) in row.entries() {
            acc += v * cache.shifted(k);
        }
        let e = acc / a_here;
        if e.re.is_finite() && e.im.is_finite() {
            return Some(e);
        }
    }
    let mut acc = Complex::new(T::zero(), T::zero());
    for &(k, v) in row.entries() {
        let l = cache.get(k);
        if l.re.is_finite() {
            acc += v * cexp(l - here);
        }
    }
    Some(acc)
}

fn max_re<T: Real>(logs: &[Complex<T>]) -> T {
    logs.iter().filter(|l| l.re.is_finite()).map(|l| l.re).fold(None, |m: Option<T>, x| Some(m.map_or(x, |m| m.max(x)))).unwrap_or(T::zero())
}

/// Distinct configurations of a batch with multiplicities, in basis order.
struct Grouped<T> {
    indices: Vec<usize>,
    counts: Vec<usize>,
    log_psi: Vec<Complex<T>>,
    /// `(chain, slot in indices)` of every sample, in batch order.
    samples: Vec<(u32, usize)>,
}

fn group<T: Real>(batch: &SampleBatch<T>) -> Grouped<T> {
    let mut seen: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (i, c) in batch.configurations().enumerate() {
        seen.entry(basis::spins_to_index(c)).or_insert((i, 0)).1 += 1;
    }
    let mut g = Grouped { indices: Vec::new(), counts: Vec::new(), log_psi: Vec::new(), samples: Vec::new() };
    for (index, (first, count)) in seen {
        g.indices.push(index);
        g.counts.push(count);
        g.log_psi.push(batch.log_psi(first));
    }
    g.samples = batch
        .configurations()
        .enumerate()
        .map(|(i, c)| (batch.chain_id(i), g.indices.binary_search(&basis::spins_to_index(c)).unwrap()))
        .collect();
    g
}

/// Mean and standard error of a per-configuration quantity over the samples
/// where it is defined. Samples within a Markov chain are correlated, so with
/// two or more chains the error is the batch-means estimate with one batch
/// per chain. Independent draws (a single chain id) use the plain formula.
fn mean_and_stderr<T: Real>(grouped: &Grouped<T>, value: &[Option<T>]) -> Option<(usize, T, T)> {
    let mut chains: BTreeMap<u32, (usize, T)> = BTreeMap::new();
    let (mut n, mut sum) = (0usize, T::zero());
    for &(chain, slot) in &grouped.samples {
        if let Some(x) = value[slot] {
            let e = chains.entry(chain).or_insert((0, T::zero()));
            e.0 += 1;
            e.1 += x;
            n += 1;
            sum += x;
        }
    }
    if n == 0 {
        return None;
    }
    let mean = sum / T::from_count(n);
    let total = T::from_count(n);
    let stderr = if chains.len() >= 2 {
        let c = T::from_count(chains.len());
        let ss = chains.values().fold(T::zero(), |acc, &(k, s)| {
            let d = s - T::from_count(k) * mean;
            acc + d * d
        });
        (ss / (total * total) * c / (c - T::one())).sqrt()
    } else if n > 1 {
        let ss = grouped.counts.iter().zip(value).fold(T::zero(), |acc, (&k, v)| match v {
            Some(x) => acc + (*x - mean) * (*x - mean) * T::from_count(k),
            None => acc,
        });
        (ss / (total - T::one()) / total).sqrt()
    } else {
        T::zero()
    };
    Some((n, mean, stderr))
}

/// Sample mean of the local energy with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyEstimate<T> {
    pub mean: T,
    pub stderr: T,
    /// Mean imaginary part of `E_loc`; vanishes in expectation.
    pub imag: T,
    /// Samples with vanishing amplitude left out of the averages.
    pub excluded: usize,
    pub n_used: usize,
}

impl<T: Real> EnergyEstimate<T> {
    /// A single usable sample gives no error estimate (reported as zero).
    pub fn is_single_sample(&self) -> bool {
        self.n_used == 1
    }
}

/// Per-distinct-configuration local energies of a batch.
struct LocalEnergies<T> {
    grouped: Grouped<T>,
    values: Vec<Option<Complex<T>>>,
}

fn local_energies<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    h: &ClockHamiltonian<T>,
    batch: &SampleBatch<T>,
) -> Result<LocalEnergies<T>> {
    if batch.is_empty() {
        return Err(Error::Domain("empty sample batch".into()));
    }
    if batch.n_spins() != model.n_spins() || batch.n_spins() != h.layout().n_spins() {
        return Err(Error::Domain("batch, model and Hamiltonian disagree on the spin count".into()));
    }
    let grouped = group(batch);
    let mut cache = LogPsiCache::with_shift(model, max_re(&grouped.log_psi));
    for (&i, &l) in grouped.indices.iter().zip(&grouped.log_psi) {
        cache.insert(i, l);
    }
    let mut row = OperatorRow::with_capacity(2 * h.layout().physical_dim() + 1);
    let values = grouped.indices.iter().map(|&i| local_energy_cached(h, i, &mut cache, &mut row)).collect();
    Ok(LocalEnergies { grouped, values })
}

fn summarize<T: Real>(le: &LocalEnergies<T>) -> Result<EnergyEstimate<T>> {
    let mut n_used = 0usize;
    let mut excluded = 0usize;
    let mut sum = Complex::new(T::zero(), T::zero());
    for (v, &c) in le.values.iter().zip(&le.grouped.counts) {
        match v {
            Some(e) => {
                n_used += c;
                sum += e.scale(T::from_count(c));
            }
            None => excluded += c,
        }
    }
    if n_used == 0 {
        return Err(Error::EmptyEstimate { excluded });
    }
    let mean = sum.unscale(T::from_count(n_used));
    let re: Vec<Option<T>> = le.values.iter().map(|v| v.map(|e| e.re)).collect();
    let (_, _, stderr) = mean_and_stderr(&le.grouped, &re).expect("at least one usable sample");
    if n_used == 1 {
        log::warn!("energy estimated from a single sample; standard error set to 0");
    }
    Ok(EnergyEstimate { mean: mean.re, stderr, imag: mean.im, excluded, n_used })
}

/// Monte Carlo estimate of the variational energy from a batch.
pub fn estimate_energy<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    h: &ClockHamiltonian<T>,
    batch: &SampleBatch<T>,
) -> Result<EnergyEstimate<T>> {
    summarize(&local_energies(model, h, batch)?)
}

/// Energy estimate and the covariance-form gradient
/// `g_k = 2 Re ⟨(O_k − ⟨O_k⟩)^* (E_loc − ⟨E_loc⟩)⟩` over real parameter slots.
pub fn estimate_gradient<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    h: &ClockHamiltonian<T>,
    batch: &SampleBatch<T>,
) -> Result<(EnergyEstimate<T>, Vec<T>)> {
    let le = local_energies(model, h, batch)?;
    let estimate = summarize(&le)?;
    let weighted: Vec<(usize, T, Complex<T>)> = le
        .grouped
        .indices
        .iter()
        .zip(&le.grouped.counts)
        .zip(&le.values)
        .filter_map(|((&i, &c), v)| v.map(|e| (i, T::from_count(c) / T::from_count(estimate.n_used), e)))
        .collect();
    let grad = covariance_gradient(model, &weighted);
    Ok((estimate, grad))
}

/// `2 Re[Σ w O^* E − (Σ w O^*)(Σ w E)]` for normalized weights `w`.
fn covariance_gradient<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    weighted: &[(usize, T, Complex<T>)],
) -> Vec<T> {
    let n_params = model.n_params();
    let zero = Complex::new(T::zero(), T::zero());
    let mut o = vec![zero; n_params];
    let mut o_mean = vec![zero; n_params];
    let mut oe = vec![zero; n_params];
    let mut e_mean = zero;
    let mut spins = vec![0i8; model.n_spins()];
    for &(index, w, e) in weighted {
        basis::index_to_spins(index, &mut spins);
        model.log_derivatives(&spins, &mut o);
        e_mean += e.scale(w);
        for k in 0..n_params {
            let oc = o[k].conj().scale(w);
            o_mean[k] += oc;
            oe[k] += oc * e;
        }
    }
    (0..n_params).map(|k| T::lit(2.0) * (oe[k] - o_mean[k] * e_mean).re).collect()
}

/// Exact variational energy and gradient by full enumeration of `|Ψ|²`.
pub fn exact_energy_gradient<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    h: &ClockHamiltonian<T>,
) -> Result<(T, Vec<T>)> {
    let dim = h.dim();
    if dim > h.dense_cap() {
        return Err(Error::DenseCap { dim, cap: h.dense_cap() });
    }
    let logs = oracle::enumerate_log_psi(model);
    let top = logs.iter().filter(|l| l.re.is_finite()).map(|l| l.re).fold(None, |m: Option<T>, x| {
        Some(m.map_or(x, |m| m.max(x)))
    });
    let top = top.ok_or(Error::EmptyEstimate { excluded: dim })?;
    let probs: Vec<T> = logs
        .iter()
        .map(|l| if l.re.is_finite() { ((l.re - top) * T::lit(2.0)).exp() } else { T::zero() })
        .collect();
    let total = probs.iter().fold(T::zero(), |a, &p| a + p);
    let mut cache = LogPsiCache::with_shift(model, top);
    for (i, &l) in logs.iter().enumerate() {
        cache.insert(i, l);
    }
    let mut row = OperatorRow::default();
    let mut weighted = Vec::new();
    let mut energy = T::zero();
    for (i, &p) in probs.iter().enumerate() {
        if p > T::zero() {
            if let Some(e) = local_energy_cached(h, i, &mut cache, &mut row) {
                let w = p / total;
                energy += w * e.re;
                weighted.push((i, w, e));
            }
        }
    }
    Ok((energy, covariance_gradient(model, &weighted)))
}

/// Time-projected expectation value with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservableEstimate<T> {
    pub mean: T,
    pub stderr: T,
}

fn projected_local<T: Real, M: Wavefunction<T> + ?Sized>(
    h: &ClockHamiltonian<T>,
    op: &dyn PhysicalOperator<T>,
    word: usize,
    index: usize,
    cache: &mut LogPsiCache<'_, T, M>,
    row: &mut OperatorRow<T>,
    physical: &mut [i8],
) -> Option<T> {
    let layout = h.layout();
    let here = cache.get(index);
    if !here.re.is_finite() {
        return None;
    }
    let (p, w) = layout.split(index);
    if w != word {
        return Some(T::zero());
    }
    basis::index_to_spins(p, physical);
    op.row_into(physical, row);
    let mut acc = Complex::new(T::zero(), T::zero());
    for &(q, v) in row.entries() {
        let l = cache.get(layout.join(q, word));
        if l.re.is_finite() {
            acc += v * cexp(l - here);
        }
    }
    Some(acc.re)
}

fn check_time<T: Real>(h: &ClockHamiltonian<T>, t: usize) -> Result<usize> {
    if t > h.n_steps() {
        return Err(Error::Domain(format!("time step {t} beyond N = {}", h.n_steps())));
    }
    Ok(gray_encode(t as u64, h.n_t())? as usize)
}

/// `(N+1) · ⟨Σ_{σ'} ⟨σ|Ô⊗|t⟩⟨t||σ'⟩ Ψ(σ')/Ψ(σ)⟩` over the batch.
///
/// The factor `N+1` undoes the clock-marginal weight `1/(N+1)` of an exact
/// history state, so the estimate can exceed the operator's bounds when the
/// model's weight at time `t` is larger than that.
pub fn estimate_observable<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    h: &ClockHamiltonian<T>,
    op: &dyn PhysicalOperator<T>,
    t: usize,
    batch: &SampleBatch<T>,
) -> Result<ObservableEstimate<T>> {
    let word = check_time(h, t)?;
    if batch.is_empty() {
        return Err(Error::Domain("empty sample batch".into()));
    }
    let grouped = group(batch);
    let mut cache = LogPsiCache::new(model);
    for (&i, &l) in grouped.indices.iter().zip(&grouped.log_psi) {
        cache.insert(i, l);
    }
    let mut row = OperatorRow::default();
    let mut physical = vec![0i8; h.layout().n_s];
    let values: Vec<Option<T>> = grouped
        .indices
        .iter()
        .map(|&i| projected_local(h, op, word, i, &mut cache, &mut row, &mut physical))
        .collect();
    let scale = T::from_count(h.n_steps() + 1);
    let scaled: Vec<Option<T>> = values.iter().map(|v| v.map(|x| x * scale)).collect();
    let Some((_, mean, stderr)) = mean_and_stderr(&grouped, &scaled) else {
        let excluded = grouped.counts.iter().zip(&values).filter(|(_, v)| v.is_none()).map(|(&c, _)| c).sum();
        return Err(Error::EmptyEstimate { excluded });
    };
    Ok(ObservableEstimate { mean, stderr })
}

/// The same estimator as [`estimate_observable`] averaged over the exact
/// distribution `|Ψ|²` by full enumeration.
pub fn exact_observable<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    h: &ClockHamiltonian<T>,
    op: &dyn PhysicalOperator<T>,
    t: usize,
) -> Result<T> {
    let word = check_time(h, t)?;
    let dim = h.dim();
    if dim > h.dense_cap() {
        return Err(Error::DenseCap { dim, cap: h.dense_cap() });
    }
    let state = oracle::model_state(model, h.layout())?;
    let total = state.norm_sqr();
    let layout = h.layout();
    let amps = state.amplitudes();
    let mut row = OperatorRow::default();
    let mut physical = vec![0i8; layout.n_s];
    let mut acc = Complex::new(T::zero(), T::zero());
    for p in 0..layout.physical_dim() {
        let a = amps[layout.join(p, word)];
        basis::index_to_spins(p, &mut physical);
        op.row_into(&physical, &mut row);
        for &(q, v) in row.entries() {
            acc += a.conj() * v * amps[layout.join(q, word)];
        }
    }
    Ok(acc.re / total * T::from_count(h.n_steps() + 1))
}

/// Probability that the clock of a model state reads time `t`.
pub fn clock_marginal<T: Real>(state: &oracle::StateVector<T>, t: usize) -> T {
    let layout = state.layout();
    let total = state.norm_sqr();
    let weight = state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| clock_word_time(layout.split(*i).1) == t)
        .fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr());
    weight / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::TfimParams;
    use crate::models::{init_parameters, ModelSpec, Rbm};
    use crate::observable::{Identity, MeanMagnetization};
    use crate::sampling::{sample, SamplerConfig};
    use approx::assert_relative_eq;

    fn clock(n_s: usize, steps: usize) -> ClockHamiltonian<f64> {
        ClockHamiltonian::new(TfimParams::new(n_s), steps, 3.0).unwrap()
    }

    fn grouped(samples: Vec<(u32, usize)>, n_slots: usize) -> Grouped<f64> {
        let mut counts = vec![0; n_slots];
        samples.iter().for_each(|&(_, k)| counts[k] += 1);
        Grouped { indices: (0..n_slots).collect(), counts, log_psi: vec![Complex::new(0.0, 0.0); n_slots], samples }
    }

    #[test]
    fn stderr_uses_chain_means_for_markov_batches() {
        let values = [Some(0.0), Some(1.0), None];
        // Independent draws: half zeros, half ones.
        let g = grouped((0..4).map(|i| (0, i % 2)).collect(), 3);
        let (n, mean, se) = mean_and_stderr(&g, &values).unwrap();
        assert_eq!((n, mean), (4, 0.5));
        assert_relative_eq!(se, (1.0f64 / 3.0 / 4.0).sqrt(), epsilon = 1e-15);
        // Two chains stuck on different values: the spread of the chain means.
        let g = grouped(vec![(0, 0), (0, 0), (1, 1), (1, 1), (1, 2)], 3);
        let (n, mean, se) = mean_and_stderr(&g, &values).unwrap();
        assert_eq!((n, mean), (4, 0.5));
        assert_relative_eq!(se, 0.5, epsilon = 1e-15);
        // Chains sharing the same mean give no spread.
        let g = grouped(vec![(0, 0), (0, 1), (1, 1), (1, 0)], 3);
        assert_eq!(mean_and_stderr(&g, &values).unwrap().2, 0.0);
        assert!(mean_and_stderr(&grouped(vec![(0, 2)], 3), &values).is_none());
    }

    #[test]
    fn exhaustive_local_energy_mean_is_rayleigh_quotient() {
        let h = clock(3, 3);
        for spec in [ModelSpec::rbm(5, 1), ModelSpec::mp_rbm(5, 2), ModelSpec::ar(5, 2, 3), ModelSpec::ar_split(5, 1, 4)] {
            let m = crate::models::init_with_stddev::<f64>(&spec, 3, 0.3).unwrap();
            let state = oracle::model_state(&m, h.layout()).unwrap();
            let rq = oracle::rayleigh_quotient(&h, &state).unwrap();
            let (e, _) = exact_energy_gradient(&m, &h).unwrap();
            assert_relative_eq!(e, rq, epsilon = 1e-10);
            assert_relative_eq!(oracle::exact_variational_energy(&m, &h).unwrap(), rq, epsilon = 1e-10);
        }
    }

    #[test]
    fn batch_of_one() {
        let h = clock(2, 1);
        let m = Rbm::<f64>::zeros(3, 1);
        let b = SampleBatch::from_configurations(&m, &[vec![1, 1, 1]]).unwrap();
        let e = estimate_energy(&m, &h, &b).unwrap();
        assert!(e.is_single_sample());
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn uniform_model_identity_observable() {
        let h = clock(2, 3);
        let m = Rbm::<f64>::zeros(4, 1);
        for t in 0..=3 {
            assert_relative_eq!(exact_observable(&m, &h, &Identity, t).unwrap(), 1.0, epsilon = 1e-12);
        }
        assert!(exact_observable(&m, &h, &Identity, 4).is_err());
    }

    #[test]
    fn sampled_observable_agrees_with_exact() {
        let h = clock(3, 1);
        let m = init_parameters::<f64>(&ModelSpec::rbm(4, 2), 9).unwrap();
        let batch = sample(&m, &SamplerConfig::new(20000, 8, 4)).unwrap();
        for t in 0..=1 {
            let est = estimate_observable(&m, &h, &MeanMagnetization, t, &batch).unwrap();
            let exact = exact_observable(&m, &h, &MeanMagnetization, t).unwrap();
            assert!((est.mean - exact).abs() < 4.0 * est.stderr + 1e-12, "t={t}: {est:?} vs {exact}");
        }
    }
}

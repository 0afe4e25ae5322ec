//! Drawing configurations from `|Ψ|²`: Metropolis chains for the RBM family
//! and exact ancestral sampling for autoregressive models.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ArModel, NqsModel, Wavefunction};
use crate::scalar::Real;

/// Random restarts tried when a chain's starting point has zero amplitude.
pub const MAX_START_RETRIES: usize = 1000;

/// Chains on at most this many spins memoize `log Ψ` over the whole basis.
const MEMO_MAX_SPINS: usize = 16;

/// Independent samples generated per random stream in ancestral sampling.
const AR_CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_samples: usize,
    #[serde(default = "default_chains")]
    pub n_chains: usize,
    /// Discarded single-flip steps per chain; `None` means `10·n` sweeps.
    #[serde(default)]
    pub burn_in: Option<usize>,
    /// Single-flip steps between kept samples; `None` means one sweep.
    #[serde(default)]
    pub thinning: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_chains() -> usize {
    8
}

impl SamplerConfig {
    pub fn new(n_samples: usize, n_chains: usize, seed: u64) -> Self {
        Self { n_samples, n_chains, burn_in: None, thinning: None, seed }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Domain("n_samples must be at least 1".into()));
        }
        if self.n_chains == 0 {
            return Err(Error::Domain("n_chains must be at least 1".into()));
        }
        if self.thinning == Some(0) {
            return Err(Error::Domain("thinning must be at least 1".into()));
        }
        Ok(())
    }

    pub fn burn_in_steps(&self, n_spins: usize) -> usize {
        self.burn_in.unwrap_or(10 * n_spins * n_spins)
    }

    pub fn thinning_steps(&self, n_spins: usize) -> usize {
        self.thinning.unwrap_or(n_spins).max(1)
    }
}

/// Configurations with their origin and cached `log Ψ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch<T> {
    n_spins: usize,
    spins: Vec<i8>,
    chain_ids: Vec<u32>,
    log_psi: Vec<Complex<T>>,
    accepted: u64,
    proposed: u64,
    chain_ends: Vec<Vec<i8>>,
}

impl<T: Real> SampleBatch<T> {
    /// Builds a batch from explicit configurations, evaluating `log Ψ`.
    pub fn from_configurations<M: Wavefunction<T> + ?Sized>(
        model: &M,
        configurations: &[Vec<i8>],
    ) -> Result<Self> {
        let n = model.n_spins();
        let mut batch = Self::empty(n);
        for c in configurations {
            if c.len() != n || c.iter().any(|&s| s != 1 && s != -1) {
                return Err(Error::Domain("configuration does not match the model".into()));
            }
            batch.push(c, 0, model.log_psi(c));
        }
        Ok(batch)
    }

    fn empty(n_spins: usize) -> Self {
        Self { n_spins, spins: Vec::new(), chain_ids: Vec::new(), log_psi: Vec::new(), accepted: 0, proposed: 0, chain_ends: Vec::new() }
    }

    fn push(&mut self, spins: &[i8], chain: u32, log_psi: Complex<T>) {
        self.spins.extend_from_slice(spins);
        self.chain_ids.push(chain);
        self.log_psi.push(log_psi);
    }

    fn append(&mut self, other: Self) {
        self.spins.extend(other.spins);
        self.chain_ids.extend(other.chain_ids);
        self.log_psi.extend(other.log_psi);
        self.accepted += other.accepted;
        self.proposed += other.proposed;
        self.chain_ends.extend(other.chain_ends);
    }

    pub fn len(&self) -> usize {
        self.chain_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain_ids.is_empty()
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn configuration(&self, i: usize) -> &[i8] {
        &self.spins[i * self.n_spins..(i + 1) * self.n_spins]
    }

    pub fn configurations(&self) -> impl Iterator<Item = &[i8]> + '_ {
        self.spins.chunks_exact(self.n_spins.max(1))
    }

    pub fn chain_id(&self, i: usize) -> u32 {
        self.chain_ids[i]
    }

    pub fn log_psi(&self, i: usize) -> Complex<T> {
        self.log_psi[i]
    }

    pub fn log_psis(&self) -> &[Complex<T>] {
        &self.log_psi
    }

    /// Last configuration of every Markov chain, for warm restarts with
    /// [`metropolis_continue`]. Empty for exact samplers.
    pub fn chain_ends(&self) -> &[Vec<i8>] {
        &self.chain_ends
    }

    /// Fraction of accepted Metropolis proposals; `None` for exact samplers.
    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

/// Derives an independent seed for sub-task `k` of a run seeded with `seed`
/// (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_spins(rng: &mut impl Rng, out: &mut [i8]) {
    out.iter_mut().for_each(|s| *s = if rng.random::<bool>() { 1 } else { -1 });
}

/// `min(1, |Ψ(σ̃)|²/|Ψ(σ)|²)` from log amplitudes; zero when `σ̃` has zero
/// amplitude.
pub fn acceptance_probability<T: Real>(current: Complex<T>, proposed: Complex<T>) -> f64 {
    if !proposed.re.is_finite() {
        return 0.0;
    }
    let log_ratio = (proposed.re - current.re).as_f64() * 2.0;
    if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}

/// Single-spin-flip Metropolis-Hastings over independent chains.
///
/// Chain `c` uses stream `c` of a ChaCha8 generator keyed by `config.seed`,
/// so a batch is a pure function of the model and the configuration.
pub fn metropolis_sample<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    config: &SamplerConfig,
) -> Result<SampleBatch<T>> {
    run_chains(model, config, None)
}

/// Metropolis sampling that resumes chains from `starts` (one configuration
/// per chain, typically [`SampleBatch::chain_ends`] of the previous batch)
/// instead of random configurations, discarding `burn_in` further steps.
pub fn metropolis_continue<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    config: &SamplerConfig,
    starts: &[Vec<i8>],
    burn_in: usize,
) -> Result<SampleBatch<T>> {
    if starts.len() != config.n_chains.min(config.n_samples) {
        return Err(Error::Domain(format!("{} chain states for {} chains", starts.len(), config.n_chains)));
    }
    let n = model.n_spins();
    if starts.iter().any(|s| s.len() != n || s.iter().any(|&x| x != 1 && x != -1)) {
        return Err(Error::Domain("chain state does not match the model".into()));
    }
    run_chains(model, &SamplerConfig { burn_in: Some(burn_in), ..*config }, Some(starts))
}

fn run_chains<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    config: &SamplerConfig,
    starts: Option<&[Vec<i8>]>,
) -> Result<SampleBatch<T>> {
    config.validate()?;
    let n = model.n_spins();
    let chains = config.n_chains.min(config.n_samples);
    let base = config.n_samples / chains;
    let extra = config.n_samples % chains;
    let parts: Vec<Result<SampleBatch<T>>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let keep = base + usize::from(c < extra);
            run_chain(model, config, c as u32, keep, n, starts.map(|s| s[c].as_slice()))
        })
        .collect();
    let mut batch = SampleBatch::empty(n);
    for part in parts {
        batch.append(part?);
    }
    Ok(batch)
}

fn run_chain<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    config: &SamplerConfig,
    chain: u32,
    keep: usize,
    n: usize,
    start: Option<&[i8]>,
) -> Result<SampleBatch<T>> {
    let mut rng = chain_rng(config.seed, u64::from(chain));
    let mut memo: Vec<Option<Complex<T>>> = if n <= MEMO_MAX_SPINS { vec![None; 1 << n] } else { Vec::new() };
    let mut eval = |spins: &[i8]| {
        if memo.is_empty() {
            return model.log_psi(spins);
        }
        let i = crate::basis::spins_to_index(spins);
        *memo[i].get_or_insert_with(|| model.log_psi(spins))
    };
    let mut spins = vec![0i8; n];
    let mut current = None;
    if let Some(start) = start {
        spins.copy_from_slice(start);
        let l = eval(&spins);
        if l.re.is_finite() {
            current = Some(l);
        }
    }
    for _ in 0..MAX_START_RETRIES {
        if current.is_some() {
            break;
        }
        random_spins(&mut rng, &mut spins);
        let l = eval(&spins);
        if l.re.is_finite() {
            current = Some(l);
            break;
        }
    }
    let mut current = current.ok_or(Error::SamplerStuck(MAX_START_RETRIES))?;
    let mut out = SampleBatch::empty(n);
    out.spins.reserve(keep * n);
    let mut step = |spins: &mut [i8], current: &mut Complex<T>, out: &mut SampleBatch<T>| {
        let site = rng.random_range(0..n);
        spins[site] = -spins[site];
        let proposed = eval(spins);
        let u: f64 = rng.random();
        out.proposed += 1;
        if u < acceptance_probability(*current, proposed) {
            *current = proposed;
            out.accepted += 1;
        } else {
            spins[site] = -spins[site];
        }
    };
    for _ in 0..config.burn_in_steps(n) {
        step(&mut spins, &mut current, &mut out);
    }
    let thin = config.thinning_steps(n);
    for _ in 0..keep {
        for _ in 0..thin {
            step(&mut spins, &mut current, &mut out);
        }
        out.push(&spins, chain, current);
    }
    out.chain_ends.push(spins);
    Ok(out)
}

/// Independent exact samples by ancestral sampling of the conditionals.
pub fn ar_direct_sample<T: Real>(model: &ArModel<T>, n_samples: usize, seed: u64) -> Result<SampleBatch<T>> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be at least 1".into()));
    }
    let n = model.n_spins();
    let chunks = n_samples.div_ceil(AR_CHUNK);
    let parts: Vec<SampleBatch<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chain_rng(seed, c as u64);
            let count = AR_CHUNK.min(n_samples - c * AR_CHUNK);
            let mut part = SampleBatch::empty(n);
            let mut spins = vec![0i8; n];
            for _ in 0..count {
                let l = model.sample_with(|| rng.random::<f64>(), &mut spins);
                part.push(&spins, 0, l);
            }
            part
        })
        .collect();
    let mut batch = SampleBatch::empty(n);
    parts.into_iter().for_each(|p| batch.append(p));
    Ok(batch)
}

/// Samples with the method suited to the model: exact for autoregressive
/// models (chain settings ignored), Metropolis otherwise.
pub fn sample<T: Real>(model: &NqsModel<T>, config: &SamplerConfig) -> Result<SampleBatch<T>> {
    match model.as_autoregressive() {
        Some(ar) => {
            config.validate()?;
            ar_direct_sample(ar, config.n_samples, config.seed)
        }
        None => metropolis_sample(model, config),
    }
}

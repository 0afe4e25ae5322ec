//! Tree-structured Parzen estimator over independent one-dimensional priors.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{HyperParams, StudyRecord};
use crate::error::{Error, Result};

/// Prior of one hyper-parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Prior {
    /// Integers in `[low, high]`, both inclusive.
    IntUniform { low: i64, high: i64 },
    /// `exp(U(ln low, ln high))`.
    LogUniform { low: f64, high: f64 },
    /// One of the listed values, equally likely.
    Categorical { choices: Vec<f64> },
}

impl Prior {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            Prior::IntUniform { low, high } => low <= high,
            Prior::LogUniform { low, high } => *low > 0.0 && low < high && high.is_finite(),
            Prior::Categorical { choices } => !choices.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid prior {self:?}")))
        }
    }

    /// Whether `x` lies in the support.
    pub fn contains(&self, x: f64) -> bool {
        match self {
            Prior::IntUniform { low, high } => x.fract() == 0.0 && x >= *low as f64 && x <= *high as f64,
            Prior::LogUniform { low, high } => x >= *low && x <= *high,
            Prior::Categorical { choices } => choices.contains(&x),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Prior::IntUniform { low, high } => rng.random_range(*low..=*high) as f64,
            Prior::LogUniform { low, high } => rng.random_range(low.ln()..=high.ln()).exp().clamp(*low, *high),
            Prior::Categorical { choices } => choices[rng.random_range(0..choices.len())],
        }
    }

    /// Bounds of the continuous working space (log space for log-uniform).
    fn bounds(&self) -> Option<(f64, f64)> {
        match self {
            Prior::IntUniform { low, high } => Some((*low as f64 - 0.5, *high as f64 + 0.5)),
            Prior::LogUniform { low, high } => Some((low.ln(), high.ln())),
            Prior::Categorical { .. } => None,
        }
    }

    fn to_work(&self, x: f64) -> f64 {
        match self {
            Prior::LogUniform { .. } => x.ln(),
            _ => x,
        }
    }

    fn to_value(&self, u: f64) -> f64 {
        match self {
            Prior::IntUniform { low, high } => u.round().clamp(*low as f64, *high as f64),
            Prior::LogUniform { low, high } => u.exp().clamp(*low, *high),
            Prior::Categorical { .. } => u,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub prior: Prior,
}

/// Independent priors, one per named hyper-parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dims: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        for (i, d) in dims.iter().enumerate() {
            d.prior.validate()?;
            if dims[..i].iter().any(|e| e.name == d.name) {
                return Err(Error::Domain(format!("duplicate hyper-parameter `{}`", d.name)));
            }
        }
        Ok(Self { dims })
    }

    pub fn contains(&self, params: &HyperParams) -> bool {
        params.len() == self.dims.len()
            && self.dims.iter().all(|d| params.get(&d.name).is_some_and(|&x| d.prior.contains(x)))
    }

    pub fn sample_prior(&self, rng: &mut ChaCha8Rng) -> HyperParams {
        self.dims.iter().map(|d| (d.name.clone(), d.prior.sample(rng))).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TpeConfig {
    /// Quantile of completed objectives forming the good set.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_candidates")]
    pub n_candidates: usize,
    /// Completed trials required before the Parzen stage starts.
    #[serde(default = "default_startup")]
    pub n_startup: usize,
    /// Weight of the prior component in every Parzen mixture.
    #[serde(default = "default_prior_weight")]
    pub prior_weight: f64,
    /// With `false` every suggestion is a prior sample (random search).
    #[serde(default = "default_parzen")]
    pub parzen: bool,
}

fn default_gamma() -> f64 {
    0.25
}
fn default_candidates() -> usize {
    24
}
fn default_startup() -> usize {
    10
}
fn default_prior_weight() -> f64 {
    1.0
}
fn default_parzen() -> bool {
    true
}

impl Default for TpeConfig {
    fn default() -> Self {
        Self {
            gamma: default_gamma(),
            n_candidates: default_candidates(),
            n_startup: default_startup(),
            prior_weight: default_prior_weight(),
            parzen: default_parzen(),
        }
    }
}

impl TpeConfig {
    pub fn random_search() -> Self {
        Self { parzen: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) || self.n_candidates == 0 || !(self.prior_weight >= 0.0 && self.prior_weight.is_finite()) {
            return Err(Error::Domain(format!("invalid TPE settings {self:?}")));
        }
        Ok(())
    }
}

/// Truncated Gaussian mixture on `[low, high]`.
struct Parzen {
    low: f64,
    high: f64,
    mus: Vec<f64>,
    sigmas: Vec<f64>,
    weights: Vec<f64>,
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

impl Parzen {
    /// Components at each observation with adjacent-gap bandwidths, plus a
    /// broad prior component centred on the interval.
    fn fit(obs: &[f64], low: f64, high: f64, prior_weight: f64) -> Self {
        let width = high - low;
        let prior_mu = 0.5 * (low + high);
        let mut mus: Vec<f64> = obs.to_vec();
        mus.push(prior_mu);
        let mut order: Vec<usize> = (0..mus.len()).collect();
        order.sort_by(|&a, &b| mus[a].total_cmp(&mus[b]).then(a.cmp(&b)));
        let sorted: Vec<f64> = order.iter().map(|&i| mus[i]).collect();
        let min_sigma = width / (1.0 + mus.len() as f64).min(100.0);
        let mut sigmas = vec![0.0; mus.len()];
        for (rank, &i) in order.iter().enumerate() {
            let left = if rank > 0 { sorted[rank] - sorted[rank - 1] } else { sorted[rank] - low };
            let right = if rank + 1 < sorted.len() { sorted[rank + 1] - sorted[rank] } else { high - sorted[rank] };
            sigmas[i] = left.max(right).clamp(min_sigma, width);
        }
        let last = mus.len() - 1;
        sigmas[last] = width;
        let mut weights = vec![1.0; mus.len()];
        weights[last] = prior_weight;
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self { low, high, mus, sigmas, weights }
    }

    fn mass(&self, k: usize) -> f64 {
        let (mu, s) = (self.mus[k], self.sigmas[k]);
        (normal_cdf((self.high - mu) / s) - normal_cdf((self.low - mu) / s)).max(1e-300)
    }

    fn log_pdf(&self, x: f64) -> f64 {
        let mut p = 0.0;
        for k in 0..self.mus.len() {
            let (mu, s) = (self.mus[k], self.sigmas[k]);
            let z = (x - mu) / s;
            p += self.weights[k] * (-0.5 * z * z).exp() / (s * (2.0 * PI).sqrt() * self.mass(k));
        }
        p.max(1e-300).ln()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let k = pick(&self.weights, rng);
        let (mu, s) = (self.mus[k], self.sigmas[k]);
        for _ in 0..1000 {
            let z: f64 = StandardNormal.sample(rng);
            let x = mu + s * z;
            if x >= self.low && x <= self.high {
                return x;
            }
        }
        mu.clamp(self.low, self.high)
    }
}

fn pick(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Per-dimension density model of a set of trials.
enum Density {
    Continuous(Parzen),
    Categorical(Vec<f64>),
}

impl Density {
    fn fit(prior: &Prior, obs: &[f64], prior_weight: f64) -> Self {
        match prior {
            Prior::Categorical { choices } => {
                let mut w = vec![prior_weight / choices.len() as f64; choices.len()];
                for x in obs {
                    if let Some(i) = choices.iter().position(|c| c == x) {
                        w[i] += 1.0;
                    }
                }
                let total: f64 = w.iter().sum();
                Density::Categorical(w.into_iter().map(|x| x / total).collect())
            }
            _ => {
                let (low, high) = prior.bounds().expect("continuous prior");
                let work: Vec<f64> = obs.iter().map(|&x| prior.to_work(x)).collect();
                Density::Continuous(Parzen::fit(&work, low, high, prior_weight))
            }
        }
    }

    /// Draw in working coordinates (category index for categoricals).
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Density::Continuous(p) => p.sample(rng),
            Density::Categorical(w) => pick(w, rng) as f64,
        }
    }

    fn log_pdf(&self, u: f64) -> f64 {
        match self {
            Density::Continuous(p) => p.log_pdf(u),
            Density::Categorical(w) => w[u as usize].max(1e-300).ln(),
        }
    }
}

/// Completed `(params, objective)` pairs visible to the suggester, with
/// pending trials imputed by the caller.
pub(crate) type Observation = (HyperParams, f64);

/// Next hyper-parameter assignment.
///
/// Prior samples until `n_startup` trials have completed or when every
/// objective is equal; afterwards the best `⌈γ·n⌉` trials form the good set,
/// `n_candidates` draws from the good-set densities are scored by
/// `Σ_d ln l_d(x) − ln g_d(x)` and the best candidate is returned.
pub fn suggest(study: &StudyRecord, space: &SearchSpace, config: &TpeConfig, seed: u64) -> HyperParams {
    suggest_from(&study.observations(), space, config, seed)
}

pub(crate) fn suggest_from(
    observations: &[Observation],
    space: &SearchSpace,
    config: &TpeConfig,
    seed: u64,
) -> HyperParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = observations.len();
    let degenerate = observations.windows(2).all(|w| w[0].1 == w[1].1);
    if !config.parzen || n < config.n_startup.max(2) || degenerate {
        return space.sample_prior(&mut rng);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| observations[a].1.total_cmp(&observations[b].1).then(a.cmp(&b)));
    let n_good = ((config.gamma * n as f64).ceil() as usize).clamp(1, n - 1);
    let (good, bad) = order.split_at(n_good);
    let column = |set: &[usize], name: &str| -> Vec<f64> {
        set.iter().filter_map(|&i| observations[i].0.get(name).copied()).collect()
    };
    let models: Vec<(Density, Density)> = space
        .dims
        .iter()
        .map(|d| {
            (
                Density::fit(&d.prior, &column(good, &d.name), config.prior_weight),
                Density::fit(&d.prior, &column(bad, &d.name), config.prior_weight),
            )
        })
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..config.n_candidates.max(1) {
        let work: Vec<f64> = models.iter().map(|(l, _)| l.sample(&mut rng)).collect();
        let score: f64 = models.iter().zip(&work).map(|((l, g), &u)| l.log_pdf(u) - g.log_pdf(u)).sum();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, work));
        }
    }
    let (_, work) = best.expect("at least one candidate");
    space
        .dims
        .iter()
        .zip(work)
        .map(|(d, u)| {
            let x = match &d.prior {
                Prior::Categorical { choices } => choices[u as usize],
                p => p.to_value(u),
            };
            (d.name.clone(), x)
        })
        .collect::<BTreeMap<_, _>>()
}

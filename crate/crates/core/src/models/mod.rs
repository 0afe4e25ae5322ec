//! Neural-quantum-state ansätze.
//!
//! Every model exposes its trainable parameters as a flat vector of real
//! slots (the parameter view). Complex parameters occupy two consecutive
//! slots `(re, im)`. [`Wavefunction::log_derivatives`] returns
//! `∂ log Ψ(σ) / ∂x_k` for every real slot `x_k`; for a holomorphic model the
//! imaginary slot's derivative is `i` times the real slot's.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub mod ar;
pub mod rbm;

pub use ar::{ArModel, ArVariant};
pub use rbm::{MpRbm, RealRbm, Rbm};

/// Standard deviation of the Gaussian parameter initialization.
pub const INIT_STDDEV: f64 = 0.01;

/// A variational wave function over `±1` spin configurations.
pub trait Wavefunction<T: Real>: Send + Sync {
    fn n_spins(&self) -> usize;

    /// Number of real parameter slots.
    fn n_params(&self) -> usize;

    /// `log Ψ(σ)`. A vanishing amplitude is reported as a real part of `-inf`.
    fn log_psi(&self, spins: &[i8]) -> Complex<T>;

    /// `∂ log Ψ(σ) / ∂x_k` for each real slot; `out.len() == n_params()`.
    fn log_derivatives(&self, spins: &[i8], out: &mut [Complex<T>]);

    fn parameters(&self) -> Vec<T>;

    fn set_parameters(&mut self, params: &[T]) -> Result<()>;
}

/// The ansatz families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Rbm,
    MpRbm,
    Ar,
    ArSplit,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Rbm, ModelKind::MpRbm, ModelKind::Ar, ModelKind::ArSplit];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Rbm => "rbm",
            ModelKind::MpRbm => "mp-rbm",
            ModelKind::Ar => "ar",
            ModelKind::ArSplit => "ar-split",
        }
    }

    pub fn is_autoregressive(self) -> bool {
        matches!(self, ModelKind::Ar | ModelKind::ArSplit)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown ansatz `{s}`")))
    }
}

/// Architecture of a model. RBM families use `alpha`; autoregressive ones use
/// `n_layers` and `n_hidden` (units per site).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n_spins: usize,
    #[serde(default = "default_alpha")]
    pub alpha: usize,
    #[serde(default = "default_layers")]
    pub n_layers: usize,
    #[serde(default = "default_hidden")]
    pub n_hidden: usize,
}

fn default_alpha() -> usize {
    1
}
fn default_layers() -> usize {
    2
}
fn default_hidden() -> usize {
    8
}

impl ModelSpec {
    pub fn rbm(n_spins: usize, alpha: usize) -> Self {
        Self { kind: ModelKind::Rbm, n_spins, alpha, n_layers: default_layers(), n_hidden: default_hidden() }
    }

    pub fn mp_rbm(n_spins: usize, alpha: usize) -> Self {
        Self { kind: ModelKind::MpRbm, ..Self::rbm(n_spins, alpha) }
    }

    pub fn ar(n_spins: usize, n_layers: usize, n_hidden: usize) -> Self {
        Self { kind: ModelKind::Ar, n_spins, alpha: default_alpha(), n_layers, n_hidden }
    }

    pub fn ar_split(n_spins: usize, n_layers: usize, n_hidden: usize) -> Self {
        Self { kind: ModelKind::ArSplit, ..Self::ar(n_spins, n_layers, n_hidden) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins == 0 {
            return Err(Error::Domain("model needs at least one spin".into()));
        }
        match self.kind {
            ModelKind::Rbm | ModelKind::MpRbm if self.alpha == 0 => {
                Err(Error::Domain("alpha must be a positive integer".into()))
            }
            ModelKind::Ar | ModelKind::ArSplit if self.n_layers == 0 || self.n_hidden == 0 => {
                Err(Error::Domain("autoregressive layers and width must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Any of the supported ansätze.
#[derive(Clone, Debug, PartialEq)]
pub enum NqsModel<T> {
    Rbm(Rbm<T>),
    MpRbm(MpRbm<T>),
    Ar(ArModel<T>),
}

impl<T: Real> NqsModel<T> {
    /// All-zero model of the given architecture.
    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n_spins;
        Ok(match spec.kind {
            ModelKind::Rbm => NqsModel::Rbm(Rbm::zeros(n, spec.alpha)),
            ModelKind::MpRbm => NqsModel::MpRbm(MpRbm::zeros(n, spec.alpha)),
            ModelKind::Ar => NqsModel::Ar(ArModel::zeros(n, spec.n_layers, spec.n_hidden, ArVariant::Joint)),
            ModelKind::ArSplit => {
                NqsModel::Ar(ArModel::zeros(n, spec.n_layers, spec.n_hidden, ArVariant::Split))
            }
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            NqsModel::Rbm(_) => ModelKind::Rbm,
            NqsModel::MpRbm(_) => ModelKind::MpRbm,
            NqsModel::Ar(m) => match m.variant() {
                ArVariant::Joint => ModelKind::Ar,
                ArVariant::Split => ModelKind::ArSplit,
            },
        }
    }

    pub fn spec(&self) -> ModelSpec {
        let n = self.n_spins();
        match self {
            NqsModel::Rbm(m) => ModelSpec::rbm(n, m.n_hidden() / n),
            NqsModel::MpRbm(m) => ModelSpec::mp_rbm(n, m.n_hidden() / n),
            NqsModel::Ar(m) => ModelSpec { kind: self.kind(), ..ModelSpec::ar(n, m.n_layers(), m.features()) },
        }
    }

    pub fn as_autoregressive(&self) -> Option<&ArModel<T>> {
        match self {
            NqsModel::Ar(m) => Some(m),
            _ => None,
        }
    }

    fn inner(&self) -> &dyn Wavefunction<T> {
        match self {
            NqsModel::Rbm(m) => m,
            NqsModel::MpRbm(m) => m,
            NqsModel::Ar(m) => m,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Wavefunction<T> {
        match self {
            NqsModel::Rbm(m) => m,
            NqsModel::MpRbm(m) => m,
            NqsModel::Ar(m) => m,
        }
    }
}

impl<T: Real> Wavefunction<T> for NqsModel<T> {
    fn n_spins(&self) -> usize {
        self.inner().n_spins()
    }

    fn n_params(&self) -> usize {
        self.inner().n_params()
    }

    fn log_psi(&self, spins: &[i8]) -> Complex<T> {
        self.inner().log_psi(spins)
    }

    fn log_derivatives(&self, spins: &[i8], out: &mut [Complex<T>]) {
        self.inner().log_derivatives(spins, out)
    }

    fn parameters(&self) -> Vec<T> {
        self.inner().parameters()
    }

    fn set_parameters(&mut self, params: &[T]) -> Result<()> {
        self.inner_mut().set_parameters(params)
    }
}

/// Model with i.i.d. `N(0, 0.01²)` parameters (every real slot drawn
/// independently), deterministic in `seed`.
pub fn init_parameters<T: Real>(spec: &ModelSpec, seed: u64) -> Result<NqsModel<T>> {
    init_with_stddev(spec, seed, INIT_STDDEV)
}

/// Like [`init_parameters`] with a custom standard deviation.
pub fn init_with_stddev<T: Real>(spec: &ModelSpec, seed: u64, stddev: f64) -> Result<NqsModel<T>> {
    let mut model = NqsModel::zeros(spec)?;
    let normal = Normal::new(0.0, stddev).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<T> = (0..model.n_params()).map(|_| T::lit(normal.sample(&mut rng))).collect();
    model.set_parameters(&params)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate;

    #[test]
    fn same_seed_same_parameters() {
        let specs = [ModelSpec::rbm(6, 2), ModelSpec::mp_rbm(6, 1), ModelSpec::ar(6, 2, 3), ModelSpec::ar_split(6, 1, 4)];
        for spec in specs {
            let kind = spec.kind;
            let a = init_parameters::<f64>(&spec, 42).unwrap();
            let b = init_parameters::<f64>(&spec, 42).unwrap();
            let c = init_parameters::<f64>(&spec, 43).unwrap();
            assert_eq!(a.parameters(), b.parameters());
            assert_ne!(a.parameters(), c.parameters());
            assert_eq!(a.kind(), kind);
            assert_eq!(a.spec(), spec);
        }
    }

    #[test]
    fn small_init_keeps_rbm_near_uniform() {
        for seed in 0..10 {
            let m = init_parameters::<f64>(&ModelSpec::rbm(9, 2), seed).unwrap();
            let mags: Vec<f64> = enumerate(9).map(|s| m.log_psi(&s).re.exp()).collect();
            let max = mags.iter().cloned().fold(f64::MIN, f64::max);
            let min = mags.iter().cloned().fold(f64::MAX, f64::min);
            assert!(max / min < 10.0, "seed {seed}: ratio {}", max / min);
        }
    }

    #[test]
    fn init_stddev_is_respected() {
        let m = init_parameters::<f64>(&ModelSpec::rbm(10, 5), 7).unwrap();
        let p = m.parameters();
        let var = p.iter().map(|x| x * x).sum::<f64>() / p.len() as f64;
        assert!((var.sqrt() - INIT_STDDEV).abs() < 0.001);
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::rbm(4, 0).validate().is_err());
        assert!(ModelSpec::ar(4, 0, 2).validate().is_err());
        assert!(ModelSpec::ar(4, 1, 0).validate().is_err());
        assert!(ModelSpec::rbm(0, 1).validate().is_err());
        assert!("rbm".parse::<ModelKind>().is_ok());
        assert!("ar-split".parse::<ModelKind>().is_ok());
        assert!("cnn".parse::<ModelKind>().is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let m = init_parameters::<f32>(&ModelSpec::ar_split(5, 1, 2), 1).unwrap();
        let total: f32 = enumerate(5).map(|s| (m.log_psi(&s).re * 2.0).exp()).sum();
        assert!((total - 1.0).abs() < 1e-5);
    }
}

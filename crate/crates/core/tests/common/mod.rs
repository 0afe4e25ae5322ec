#![allow(dead_code)]

use clockvmc::basis::{enumerate, Layout};
use clockvmc::error::Result;
use clockvmc::models::{init_with_stddev, ModelKind, ModelSpec, NqsModel, Wavefunction};
use clockvmc::oracle::StateVector;
use num_complex::Complex;

pub type C = Complex<f64>;

pub fn spec(kind: ModelKind, n: usize) -> ModelSpec {
    match kind {
        ModelKind::Rbm => ModelSpec::rbm(n, 2),
        ModelKind::MpRbm => ModelSpec::mp_rbm(n, 2),
        ModelKind::Ar => ModelSpec::ar(n, 2, 3),
        ModelKind::ArSplit => ModelSpec::ar_split(n, 2, 3),
    }
}

pub fn random_model(kind: ModelKind, n: usize, seed: u64, stddev: f64) -> NqsModel<f64> {
    init_with_stddev(&spec(kind, n), seed, stddev).unwrap()
}

/// Difference of log amplitudes with the phase difference wrapped to (−π, π].
pub fn log_diff(a: C, b: C) -> C {
    let mut im = a.im - b.im;
    while im > std::f64::consts::PI {
        im -= 2.0 * std::f64::consts::PI;
    }
    while im <= -std::f64::consts::PI {
        im += 2.0 * std::f64::consts::PI;
    }
    C::new(a.re - b.re, im)
}

/// Central differences of log Ψ(σ) in every real slot.
pub fn fd_log_derivatives(model: &NqsModel<f64>, spins: &[i8], step: f64) -> Vec<C> {
    let base = model.parameters();
    let mut m = model.clone();
    (0..base.len())
        .map(|k| {
            let mut p = base.clone();
            p[k] = base[k] + step;
            m.set_parameters(&p).unwrap();
            let up = m.log_psi(spins);
            p[k] = base[k] - step;
            m.set_parameters(&p).unwrap();
            let down = m.log_psi(spins);
            log_diff(up, down) / (2.0 * step)
        })
        .collect()
}

/// `‖a − b‖₂ / ‖b‖₂` (absolute when `b` vanishes).
pub fn rel_err_c(a: &[C], b: &[C]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Exact `|Ψ|²` distribution over the full basis, by brute force.
pub fn exact_distribution(model: &dyn Wavefunction<f64>) -> Vec<f64> {
    let logs: Vec<f64> = enumerate(model.n_spins()).map(|s| 2.0 * model.log_psi(&s).re).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// A fixed state vector exposed as a parameter-free wave function.
pub struct StateModel {
    pub n: usize,
    pub amps: Vec<C>,
}

impl StateModel {
    pub fn new(state: &StateVector<f64>) -> Self {
        Self { n: state.layout().n_spins(), amps: state.amplitudes().to_vec() }
    }
}

impl Wavefunction<f64> for StateModel {
    fn n_spins(&self) -> usize {
        self.n
    }
    fn n_params(&self) -> usize {
        0
    }
    fn log_psi(&self, spins: &[i8]) -> C {
        let a = self.amps[clockvmc::basis::spins_to_index(spins)];
        if a.norm_sqr() == 0.0 {
            C::new(f64::NEG_INFINITY, 0.0)
        } else {
            a.ln()
        }
    }
    fn log_derivatives(&self, _: &[i8], _: &mut [C]) {}
    fn parameters(&self) -> Vec<f64> {
        Vec::new()
    }
    fn set_parameters(&mut self, _: &[f64]) -> Result<()> {
        Ok(())
    }
}

pub fn layout(n_s: usize, n_t: usize) -> Layout {
    Layout::new(n_s, n_t).unwrap()
}

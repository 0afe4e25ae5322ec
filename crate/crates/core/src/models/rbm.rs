//! Restricted Boltzmann machine ansätze.
//!
//! [`Rbm`] has complex parameters and
//! `log Ψ(σ) = Σⱼ aⱼσⱼ + Σₗ ln 2cosh(bₗ + Σⱼ Wₗⱼσⱼ)`.
//!
//! [`MpRbm`] pairs two real-parameter RBMs, one for the log-modulus and one for
//! the phase: `log Ψ(σ) = Λ_mod(σ) + i Λ_phase(σ)`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{ctanh, ln_2cosh, rtanh, Real};

use super::Wavefunction;

/// Complex-parameter RBM. Parameter slots: `a`, then `b`, then `W`
/// (row-major by hidden unit), each complex value as `(re, im)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rbm<T> {
    n_visible: usize,
    n_hidden: usize,
    a: Vec<Complex<T>>,
    b: Vec<Complex<T>>,
    w: Vec<Complex<T>>,
}

impl<T: Real> Rbm<T> {
    /// All-zero RBM with `alpha * n_visible` hidden units.
    pub fn zeros(n_visible: usize, alpha: usize) -> Self {
        let n_hidden = alpha * n_visible;
        let z = Complex::new(T::zero(), T::zero());
        Self {
            n_visible,
            n_hidden,
            a: vec![z; n_visible],
            b: vec![z; n_hidden],
            w: vec![z; n_hidden * n_visible],
        }
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    /// Number of complex parameters `N_H (N + 1) + N`.
    pub fn n_complex_params(&self) -> usize {
        self.n_visible + self.n_hidden * (self.n_visible + 1)
    }

    fn pre_activation(&self, l: usize, spins: &[i8]) -> Complex<T> {
        let row = &self.w[l * self.n_visible..(l + 1) * self.n_visible];
        row.iter().zip(spins).fold(self.b[l], |acc, (w, &s)| {
            if s > 0 {
                acc + w
            } else {
                acc - w
            }
        })
    }

    fn complex_params(&self) -> impl Iterator<Item = &Complex<T>> {
        self.a.iter().chain(&self.b).chain(&self.w)
    }
}

impl<T: Real> Wavefunction<T> for Rbm<T> {
    fn n_spins(&self) -> usize {
        self.n_visible
    }

    fn n_params(&self) -> usize {
        2 * self.n_complex_params()
    }

    fn log_psi(&self, spins: &[i8]) -> Complex<T> {
        let visible = self.a.iter().zip(spins).fold(Complex::new(T::zero(), T::zero()), |acc, (a, &s)| {
            if s > 0 {
                acc + a
            } else {
                acc - a
            }
        });
        (0..self.n_hidden).fold(visible, |acc, l| acc + ln_2cosh(self.pre_activation(l, spins)))
    }

    fn log_derivatives(&self, spins: &[i8], out: &mut [Complex<T>]) {
        let n = self.n_visible;
        let i = Complex::new(T::zero(), T::one());
        let mut put = |slot: usize, d: Complex<T>| {
            out[2 * slot] = d;
            out[2 * slot + 1] = d * i;
        };
        for (j, &s) in spins.iter().enumerate() {
            put(j, Complex::new(T::lit(f64::from(s)), T::zero()));
        }
        for l in 0..self.n_hidden {
            let th = ctanh(self.pre_activation(l, spins));
            put(n + l, th);
            for (j, &s) in spins.iter().enumerate() {
                put(n + self.n_hidden + l * n + j, if s > 0 { th } else { -th });
            }
        }
    }

    fn parameters(&self) -> Vec<T> {
        self.complex_params().flat_map(|c| [c.re, c.im]).collect()
    }

    fn set_parameters(&mut self, params: &[T]) -> Result<()> {
        check_len(params.len(), self.n_params())?;
        let mut it = params.chunks_exact(2).map(|p| Complex::new(p[0], p[1]));
        for c in self.a.iter_mut().chain(self.b.iter_mut()).chain(self.w.iter_mut()) {
            *c = it.next().expect("length checked");
        }
        Ok(())
    }
}

/// Real-parameter RBM returning the real log-value `Λ(σ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealRbm<T> {
    n_visible: usize,
    n_hidden: usize,
    a: Vec<T>,
    b: Vec<T>,
    w: Vec<T>,
}

impl<T: Real> RealRbm<T> {
    pub fn zeros(n_visible: usize, alpha: usize) -> Self {
        let n_hidden = alpha * n_visible;
        Self {
            n_visible,
            n_hidden,
            a: vec![T::zero(); n_visible],
            b: vec![T::zero(); n_hidden],
            w: vec![T::zero(); n_hidden * n_visible],
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_visible + self.n_hidden * (self.n_visible + 1)
    }

    fn pre_activation(&self, l: usize, spins: &[i8]) -> T {
        let row = &self.w[l * self.n_visible..(l + 1) * self.n_visible];
        row.iter()
            .zip(spins)
            .fold(self.b[l], |acc, (&w, &s)| if s > 0 { acc + w } else { acc - w })
    }

    pub fn log_value(&self, spins: &[i8]) -> T {
        let visible = self
            .a
            .iter()
            .zip(spins)
            .fold(T::zero(), |acc, (&a, &s)| if s > 0 { acc + a } else { acc - a });
        (0..self.n_hidden).fold(visible, |acc, l| {
            let x = self.pre_activation(l, spins).abs();
            acc + x + (-(x + x)).exp().ln_1p()
        })
    }

    /// Writes `∂Λ/∂θ` into `out` (length [`Self::n_params`]).
    pub fn gradient(&self, spins: &[i8], out: &mut [T]) {
        let n = self.n_visible;
        for (j, &s) in spins.iter().enumerate() {
            out[j] = T::lit(f64::from(s));
        }
        for l in 0..self.n_hidden {
            let th = rtanh(self.pre_activation(l, spins));
            out[n + l] = th;
            for (j, &s) in spins.iter().enumerate() {
                out[n + self.n_hidden + l * n + j] = if s > 0 { th } else { -th };
            }
        }
    }

    pub fn parameters(&self) -> impl Iterator<Item = T> + '_ {
        self.a.iter().chain(&self.b).chain(&self.w).copied()
    }

    pub fn set_parameters(&mut self, params: &[T]) {
        for (dst, &src) in self
            .a
            .iter_mut()
            .chain(self.b.iter_mut())
            .chain(self.w.iter_mut())
            .zip(params)
        {
            *dst = src;
        }
    }
}

/// Modulus/phase RBM. Parameter slots: the modulus RBM's `a, b, W`, then the
/// phase RBM's.
#[derive(Clone, Debug, PartialEq)]
pub struct MpRbm<T> {
    modulus: RealRbm<T>,
    phase: RealRbm<T>,
}

impl<T: Real> MpRbm<T> {
    pub fn zeros(n_visible: usize, alpha: usize) -> Self {
        Self {
            modulus: RealRbm::zeros(n_visible, alpha),
            phase: RealRbm::zeros(n_visible, alpha),
        }
    }

    pub fn modulus(&self) -> &RealRbm<T> {
        &self.modulus
    }

    pub fn phase(&self) -> &RealRbm<T> {
        &self.phase
    }

    pub fn n_hidden(&self) -> usize {
        self.modulus.n_hidden
    }
}

impl<T: Real> Wavefunction<T> for MpRbm<T> {
    fn n_spins(&self) -> usize {
        self.modulus.n_visible
    }

    fn n_params(&self) -> usize {
        self.modulus.n_params() + self.phase.n_params()
    }

    fn log_psi(&self, spins: &[i8]) -> Complex<T> {
        Complex::new(self.modulus.log_value(spins), self.phase.log_value(spins))
    }

    fn log_derivatives(&self, spins: &[i8], out: &mut [Complex<T>]) {
        let m = self.modulus.n_params();
        let mut buf = vec![T::zero(); m.max(self.phase.n_params())];
        self.modulus.gradient(spins, &mut buf);
        for (o, &g) in out[..m].iter_mut().zip(&buf) {
            *o = Complex::new(g, T::zero());
        }
        self.phase.gradient(spins, &mut buf);
        for (o, &g) in out[m..].iter_mut().zip(&buf) {
            *o = Complex::new(T::zero(), g);
        }
    }

    fn parameters(&self) -> Vec<T> {
        self.modulus.parameters().chain(self.phase.parameters()).collect()
    }

    fn set_parameters(&mut self, params: &[T]) -> Result<()> {
        check_len(params.len(), self.n_params())?;
        let m = self.modulus.n_params();
        self.modulus.set_parameters(&params[..m]);
        self.phase.set_parameters(&params[m..]);
        Ok(())
    }
}

pub(crate) fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Domain(format!(
            "parameter vector has {got} entries, model expects {want}"
        )));
    }
    Ok(())
}

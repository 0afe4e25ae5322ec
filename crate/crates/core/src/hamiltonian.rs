//! Transverse-field Ising chain, its short-time propagator, and the
//! Feynman-Kitaev clock Hamiltonian built on top of them.
//!
//! The clock Hamiltonian acting on `physical ⊗ clock` is
//!
//! ```text
//! ℋ = H₀ ⊗ |0⟩⟨0|
//!   + ½ Σ_{t=0}^{N-1} [ I ⊗ (|t⟩⟨t| + |t+1⟩⟨t+1|)
//!                       − U(Δt) ⊗ |t+1⟩⟨t| − U(Δt)† ⊗ |t⟩⟨t+1| ]
//! ```
//!
//! with `H₀ = ½ Σᵢ (1 − σᶻᵢ)` pinning the all-up initial state. Its unique
//! ground state is the history state with energy exactly zero.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::basis::{self, clock_bits, clock_word_time, gray_encode, Layout};
use crate::error::{Error, Result};
use crate::scalar::{cexp, cnorm_sqr, Real};

/// Default dimension cap for dense matrices (`2^14`).
pub const DEFAULT_DENSE_CAP: usize = 1 << 14;

/// Entries smaller than this are dropped from hopping rows.
pub const HOP_DROP_TOLERANCE: f64 = 1e-14;

/// `H = J Σ σᶻᵢσᶻᵢ₊₁ + h Σ σˣᵢ` on an open chain of `n_s` spins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TfimParams<T> {
    pub n_s: usize,
    pub j: T,
    pub h: T,
}

impl<T: Real> TfimParams<T> {
    /// Chain with the default couplings `J = 0.25`, `h = 1`.
    pub fn new(n_s: usize) -> Self {
        Self { n_s, j: T::lit(0.25), h: T::one() }
    }

    pub fn with_couplings(n_s: usize, j: T, h: T) -> Self {
        Self { n_s, j, h }
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_s
    }

    /// Diagonal `J Σ σᵢσᵢ₊₁`.
    pub fn bond_energy(&self, physical: &[i8]) -> T {
        let aligned: i32 = physical.windows(2).map(|w| i32::from(w[0] * w[1])).sum();
        self.j * T::lit(f64::from(aligned))
    }

    /// Dense real matrix of the chain in the physical basis.
    pub fn dense(&self) -> DMatrix<T> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        let mut spins = vec![0i8; self.n_s];
        for i in 0..dim {
            basis::index_to_spins(i, &mut spins);
            for &(k, v) in tfim_row(self, &spins).entries() {
                m[(i, k)] += v.re;
            }
        }
        m
    }
}

/// Nonzero matrix elements `⟨σ|A|σ'⟩` of one row, keyed by the basis index of
/// `σ'`. The diagonal entry is always present and comes first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OperatorRow<T> {
    entries: Vec<(usize, Complex<T>)>,
}

impl<T: Real> OperatorRow<T> {
    pub fn with_capacity(n: usize) -> Self {
        Self { entries: Vec::with_capacity(n) }
    }

    pub fn entries(&self) -> &[(usize, Complex<T>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn push(&mut self, index: usize, value: Complex<T>) {
        self.entries.push((index, value));
    }

    /// Diagonal element (first entry).
    pub fn diagonal(&self) -> Complex<T> {
        self.entries.first().map(|e| e.1).unwrap_or_default()
    }
}

/// Row of the Ising chain at `physical`.
pub fn tfim_row<T: Real>(params: &TfimParams<T>, physical: &[i8]) -> OperatorRow<T> {
    let n = params.n_s;
    debug_assert_eq!(physical.len(), n);
    let index = basis::spins_to_index(physical);
    let mut row = OperatorRow::with_capacity(n + 1);
    row.push(index, Complex::new(params.bond_energy(physical), T::zero()));
    for k in 0..n {
        row.push(index ^ (1 << (n - 1 - k)), Complex::new(params.h, T::zero()));
    }
    row
}

/// Eigendecomposition `H = V diag(λ) Vᵀ` of the Ising chain, reused for every
/// propagator built from it.
#[derive(Clone, Debug)]
pub struct TfimSpectrum<T: Real> {
    params: TfimParams<T>,
    eigenvalues: Vec<T>,
    eigenvectors: DMatrix<T>,
}

impl<T: Real> TfimSpectrum<T> {
    pub fn new(params: TfimParams<T>) -> Result<Self> {
        let eig = SymmetricEigen::try_new(params.dense(), T::default_epsilon(), 0)
            .ok_or_else(|| Error::Numeric("Ising eigensolver did not converge".into()))?;
        Ok(Self {
            params,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn params(&self) -> &TfimParams<T> {
        &self.params
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// `exp(-i H dt)`.
    pub fn propagator(&self, dt: T) -> Result<Propagator<T>> {
        if !dt.is_finite() {
            return Err(Error::Domain("time step must be finite".into()));
        }
        let dim = self.params.dim();
        let phases: Vec<Complex<T>> = self
            .eigenvalues
            .iter()
            .map(|&l| cexp(Complex::new(T::zero(), -l * dt)))
            .collect();
        let v = &self.eigenvectors;
        let mut u = DMatrix::from_element(dim, dim, Complex::new(T::zero(), T::zero()));
        for r in 0..dim {
            for c in 0..dim {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (k, ph) in phases.iter().enumerate() {
                    acc += *ph * (v[(r, k)] * v[(c, k)]);
                }
                u[(r, c)] = acc;
            }
        }
        Ok(Propagator { dt, matrix: u })
    }
}

/// Dense short-time propagator `U(dt) = exp(-i H dt)` of the Ising chain.
#[derive(Clone, Debug)]
pub struct Propagator<T: Real> {
    pub dt: T,
    pub matrix: DMatrix<Complex<T>>,
}

impl<T: Real> Propagator<T> {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |U†U − I|`.
    pub fn unitarity_defect(&self) -> T {
        let uu = self.matrix.adjoint() * &self.matrix;
        let mut worst = T::zero();
        for r in 0..uu.nrows() {
            for c in 0..uu.ncols() {
                let target = if r == c { T::one() } else { T::zero() };
                let d = uu[(r, c)] - Complex::new(target, T::zero());
                worst = worst.max(cnorm_sqr(d).sqrt());
            }
        }
        worst
    }

    /// `U v` for a physical state.
    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let dim = self.dim();
        (0..dim)
            .map(|r| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (c, x) in v.iter().enumerate() {
                    acc += self.matrix[(r, c)] * *x;
                }
                acc
            })
            .collect()
    }
}

/// Convenience wrapper around [`TfimSpectrum::propagator`].
pub fn propagator<T: Real>(params: TfimParams<T>, dt: T) -> Result<Propagator<T>> {
    TfimSpectrum::new(params)?.propagator(dt)
}

/// Feynman-Kitaev clock Hamiltonian for `n_steps` steps of length
/// `total_time / n_steps`.
#[derive(Clone, Debug)]
pub struct ClockHamiltonian<T: Real> {
    tfim: TfimParams<T>,
    layout: Layout,
    n_steps: usize,
    total_time: T,
    propagator: Propagator<T>,
    dense_cap: usize,
}

impl<T: Real> ClockHamiltonian<T> {
    pub fn new(tfim: TfimParams<T>, n_steps: usize, total_time: T) -> Result<Self> {
        let spectrum = TfimSpectrum::new(tfim)?;
        Self::from_spectrum(&spectrum, n_steps, total_time)
    }

    /// Builds the clock Hamiltonian reusing an existing chain spectrum.
    pub fn from_spectrum(
        spectrum: &TfimSpectrum<T>,
        n_steps: usize,
        total_time: T,
    ) -> Result<Self> {
        let tfim = *spectrum.params();
        let layout = Layout::new(tfim.n_s, clock_bits(n_steps))?;
        let dt = if n_steps == 0 {
            T::zero()
        } else {
            total_time / T::from_count(n_steps)
        };
        Ok(Self {
            tfim,
            layout,
            n_steps,
            total_time,
            propagator: spectrum.propagator(dt)?,
            dense_cap: DEFAULT_DENSE_CAP,
        })
    }

    pub fn with_dense_cap(mut self, cap: usize) -> Self {
        self.dense_cap = cap;
        self
    }

    pub fn tfim(&self) -> &TfimParams<T> {
        &self.tfim
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_t(&self) -> usize {
        self.layout.n_t
    }

    pub fn total_time(&self) -> T {
        self.total_time
    }

    pub fn dt(&self) -> T {
        self.propagator.dt
    }

    pub fn propagator(&self) -> &Propagator<T> {
        &self.propagator
    }

    pub fn dense_cap(&self) -> usize {
        self.dense_cap
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Upper bound on the largest eigenvalue: `N_S` from the pinning term
    /// plus 2 from the clock term (half a path-graph Laplacian). ℋ ⪰ 0, so
    /// every variational energy lies in `[0, norm_bound]`.
    pub fn norm_bound(&self) -> T {
        T::from_count(self.layout.n_s + 2)
    }

    /// Clock word of time `t` (must be `≤ n_steps`).
    pub fn clock_word(&self, t: usize) -> usize {
        gray_encode(t as u64, self.layout.n_t).expect("time within clock range") as usize
    }

    /// Row of ℋ at the configuration `spins`.
    pub fn row(&self, spins: &[i8]) -> OperatorRow<T> {
        let mut row = OperatorRow::with_capacity(2 * self.layout.physical_dim() + 1);
        self.row_into(basis::spins_to_index(spins), &mut row);
        row
    }

    /// Row of ℋ at basis index `index`, written into `row`.
    pub fn row_into(&self, index: usize, row: &mut OperatorRow<T>) {
        row.clear();
        let (p, cw) = self.layout.split(index);
        let t = clock_word_time(cw);
        let n = self.n_steps;
        let half = T::lit(0.5);

        let mut diag = T::zero();
        if t <= n {
            let windows = usize::from(t < n) + usize::from(t > 0);
            diag += half * T::from_count(windows);
            if t == 0 {
                // H₀ = ½ Σ (1 − σᶻ) counts down spins.
                diag += T::from_count(p.count_ones() as usize);
            }
        }
        row.push(index, Complex::new(diag, T::zero()));
        if t > n {
            return;
        }

        let u = &self.propagator.matrix;
        let tol = T::lit(HOP_DROP_TOLERANCE);
        let pdim = self.layout.physical_dim();
        if t >= 1 {
            // −½ U ⊗ |t⟩⟨t−1|
            let word = self.clock_word(t - 1);
            for q in 0..pdim {
                let v = u[(p, q)] * (-half);
                if cnorm_sqr(v).sqrt() >= tol {
                    row.push(self.layout.join(q, word), v);
                }
            }
        }
        if t < n {
            // −½ U† ⊗ |t⟩⟨t+1|
            let word = self.clock_word(t + 1);
            for q in 0..pdim {
                let v = u[(q, p)].conj() * (-half);
                if cnorm_sqr(v).sqrt() >= tol {
                    row.push(self.layout.join(q, word), v);
                }
            }
        }
    }

    /// Dense matrix of ℋ, refused above the dense cap.
    pub fn dense(&self) -> Result<DMatrix<Complex<T>>> {
        let dim = self.dim();
        if dim > self.dense_cap {
            return Err(Error::DenseCap { dim, cap: self.dense_cap });
        }
        let mut m = DMatrix::from_element(dim, dim, Complex::new(T::zero(), T::zero()));
        let mut row = OperatorRow::default();
        for i in 0..dim {
            self.row_into(i, &mut row);
            for &(k, v) in row.entries() {
                m[(i, k)] += v;
            }
        }
        Ok(m)
    }

    /// `ℋ v` computed row by row.
    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut row = OperatorRow::default();
        (0..self.dim())
            .map(|i| {
                self.row_into(i, &mut row);
                row.entries()
                    .iter()
                    .fold(Complex::new(T::zero(), T::zero()), |acc, &(k, h)| acc + h * v[k])
            })
            .collect()
    }
}

/// Free-function form of [`ClockHamiltonian::row`].
pub fn fk_row<T: Real>(h: &ClockHamiltonian<T>, spins: &[i8]) -> OperatorRow<T> {
    h.row(spins)
}

/// Free-function form of [`ClockHamiltonian::dense`].
pub fn fk_dense<T: Real>(h: &ClockHamiltonian<T>) -> Result<DMatrix<Complex<T>>> {
    h.dense()
}

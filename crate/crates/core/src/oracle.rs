//! Exact diagonalization and full-enumeration diagnostics.
//!
//! These routines touch every basis state and are the ground truth that the
//! Monte Carlo estimators are checked against.

use std::cmp::Ordering;

use nalgebra::SymmetricEigen;
use num_complex::Complex;

use crate::basis::{self, gray_encode, Layout};
use crate::error::{Error, Result};
use crate::hamiltonian::{ClockHamiltonian, OperatorRow};
use crate::models::Wavefunction;
use crate::observable::{MeanMagnetization, PhysicalOperator};
use crate::scalar::{cexp, cnorm_sqr, Real};

/// Minimum spectral gap accepted above the ground energy.
pub const MIN_SPECTRAL_GAP: f64 = 1e-10;

/// Amplitudes over the full basis, indexed by [`basis::spins_to_index`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    layout: Layout,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn new(layout: Layout, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::Domain(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                layout.dim()
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Domain("state has non-finite amplitudes".into()));
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |acc, &a| acc + cnorm_sqr(a))
    }

    /// Returns the state scaled to unit norm.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr();
        if n <= T::zero() {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        let inv = T::one() / n.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a = a.scale(inv));
        Ok(self)
    }

    /// Basis probabilities `|⟨σ|Φ⟩|²` (not normalized).
    pub fn weights(&self) -> Vec<T> {
        self.amplitudes.iter().map(|&a| cnorm_sqr(a)).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
    }

    /// Multiplies by the phase that makes the largest-magnitude amplitude real
    /// and positive (first index wins ties).
    pub fn fix_global_phase(&mut self) {
        let mut best = 0;
        let mut best_mag = T::zero();
        for (i, &a) in self.amplitudes.iter().enumerate() {
            let m = cnorm_sqr(a);
            if m > best_mag {
                best_mag = m;
                best = i;
            }
        }
        if best_mag > T::zero() {
            let a = self.amplitudes[best];
            let phase = a.conj().unscale(best_mag.sqrt());
            self.amplitudes.iter_mut().for_each(|x| *x *= phase);
            self.amplitudes[best].im = T::zero();
        }
    }
}

/// Lowest eigenpair of ℋ: energy and unit-norm ground state with the global
/// phase fixed by [`StateVector::fix_global_phase`].
pub fn ground_state<T: Real>(h: &ClockHamiltonian<T>) -> Result<(T, StateVector<T>)> {
    let dense = h.dense()?;
    let eig = SymmetricEigen::try_new(dense, T::default_epsilon(), 0)
        .ok_or_else(|| Error::Numeric("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(Ordering::Equal)
    });
    let e0 = eig.eigenvalues[order[0]];
    if let Some(&next) = order.get(1) {
        let gap = eig.eigenvalues[next] - e0;
        if gap.as_f64() < MIN_SPECTRAL_GAP {
            return Err(Error::Degenerate { gap: gap.as_f64(), min: MIN_SPECTRAL_GAP });
        }
    }
    let amps: Vec<Complex<T>> = eig.eigenvectors.column(order[0]).iter().copied().collect();
    let mut state = StateVector::new(h.layout(), amps)?.normalized()?;
    state.fix_global_phase();
    Ok((e0, state))
}

/// `(1/√(N+1)) Σₜ U^t|ψ₀⟩ ⊗ |t⟩`, with the clock in Gray code.
pub fn build_history_state<T: Real>(
    h: &ClockHamiltonian<T>,
    initial: &[Complex<T>],
) -> Result<StateVector<T>> {
    let layout = h.layout();
    if initial.len() != layout.physical_dim() {
        return Err(Error::Domain("initial state has the wrong dimension".into()));
    }
    let norm = initial.iter().fold(T::zero(), |acc, &a| acc + cnorm_sqr(a));
    if norm <= T::zero() {
        return Err(Error::Domain("initial state is zero".into()));
    }
    let steps = h.n_steps();
    let scale = T::one() / (norm * T::from_count(steps + 1)).sqrt();
    let mut psi: Vec<Complex<T>> = initial.to_vec();
    let mut amps = vec![Complex::new(T::zero(), T::zero()); layout.dim()];
    for t in 0..=steps {
        if t > 0 {
            psi = h.propagator().apply(&psi);
        }
        let word = h.clock_word(t);
        for (p, &a) in psi.iter().enumerate() {
            amps[layout.join(p, word)] = a.scale(scale);
        }
    }
    StateVector::new(layout, amps)
}

/// The all-up physical state `|↑…↑⟩`.
pub fn all_up_physical<T: Real>(n_s: usize) -> Vec<Complex<T>> {
    let mut v = vec![Complex::new(T::zero(), T::zero()); 1 << n_s];
    v[0] = Complex::new(T::one(), T::zero());
    v
}

/// Reduced density matrix of the first `n_p` spins, normalized to unit trace.
pub fn reduced_density_matrix<T: Real>(
    state: &StateVector<T>,
    n_p: usize,
) -> Result<nalgebra::DMatrix<Complex<T>>> {
    let n = state.layout.n_spins();
    if n_p == 0 || n_p > n {
        return Err(Error::Domain(format!("subsystem size {n_p} outside 1..={n}")));
    }
    let rest = n - n_p;
    let rows = 1usize << n_p;
    let cols = 1usize << rest;
    let m = nalgebra::DMatrix::from_fn(rows, cols, |a, b| state.amplitudes[(a << rest) | b]);
    let rho = &m * m.adjoint();
    let trace = (0..rows).fold(T::zero(), |acc, i| acc + rho[(i, i)].re);
    if trace <= T::zero() {
        return Err(Error::Domain("zero state has no reduced density matrix".into()));
    }
    Ok(rho.unscale(trace))
}

/// Second Rényi entropy of the first `n_p` physical spins divided by `N_S`:
/// `−ln Tr ρ² / N_S` (natural log).
pub fn renyi2_per_spin<T: Real>(state: &StateVector<T>, n_p: usize) -> Result<T> {
    let n_s = state.layout.n_s;
    if n_p == 0 || n_p > n_s {
        return Err(Error::Domain(format!("N_P = {n_p} outside 1..={n_s}")));
    }
    let rho = reduced_density_matrix(state, n_p)?;
    let purity = rho.iter().fold(T::zero(), |acc, &z| acc + cnorm_sqr(z));
    Ok(-purity.ln() / T::from_count(n_s))
}

/// Gini coefficient of the basis probability distribution, via the sorted
/// form `Σᵢ (2i − n − 1) pᵢ / (n Σ p)` with ascending `pᵢ`.
pub fn gini<T: Real>(state: &StateVector<T>) -> Result<T> {
    let mut p = state.weights();
    let total = p.iter().fold(T::zero(), |acc, &x| acc + x);
    if total <= T::zero() {
        return Err(Error::Domain("Gini coefficient of the zero state".into()));
    }
    p.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = p.len();
    let acc = p.iter().enumerate().fold(T::zero(), |acc, (i, &x)| {
        acc + T::lit(2.0 * (i + 1) as f64 - n as f64 - 1.0) * x
    });
    Ok(acc / (T::from_count(n) * total))
}

/// Fraction `r / dim` of basis states needed, taken in order of decreasing
/// probability, for the cumulative probability to reach `mass`.
pub fn coverage_ratio<T: Real>(state: &StateVector<T>, mass: T) -> Result<T> {
    if !(mass > T::zero() && mass < T::one()) {
        return Err(Error::Domain("coverage mass must lie in (0, 1)".into()));
    }
    let mut p = state.weights();
    let total = p.iter().fold(T::zero(), |acc, &x| acc + x);
    if total <= T::zero() {
        return Err(Error::Domain("coverage of the zero state".into()));
    }
    p.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let target = mass * total;
    let mut cumulative = T::zero();
    let mut r = p.len();
    for (i, &x) in p.iter().enumerate() {
        cumulative += x;
        if cumulative >= target {
            r = i + 1;
            break;
        }
    }
    Ok(T::from_count(r) / T::from_count(p.len()))
}

/// `1 − |⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn infidelity<T: Real>(a: &StateVector<T>, b: &StateVector<T>) -> Result<T> {
    if a.layout != b.layout {
        return Err(Error::Domain("states live on different layouts".into()));
    }
    let (na, nb) = (a.norm_sqr(), b.norm_sqr());
    if na <= T::zero() || nb <= T::zero() {
        return Err(Error::Domain("infidelity with a zero vector".into()));
    }
    let f = cnorm_sqr(a.inner(b)) / (na * nb);
    Ok((T::one() - f).max(T::zero()))
}

/// State vector of a model by full enumeration, scaled so the largest
/// amplitude has modulus one (not normalized).
pub fn model_state<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    layout: Layout,
) -> Result<StateVector<T>> {
    if model.n_spins() != layout.n_spins() {
        return Err(Error::Domain("model and layout disagree on the spin count".into()));
    }
    let logs = enumerate_log_psi(model);
    let top = logs
        .iter()
        .filter(|l| l.re.is_finite())
        .fold(T::min_value().unwrap_or(-T::max_value().unwrap()), |m, l| m.max(l.re));
    if !top.is_finite() || logs.iter().all(|l| !l.re.is_finite()) {
        return Err(Error::Domain("model amplitudes vanish everywhere".into()));
    }
    let amps = logs
        .into_iter()
        .map(|l| {
            if l.re.is_finite() {
                cexp(Complex::new(l.re - top, l.im))
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
        .collect();
    StateVector::new(layout, amps)
}

/// `log Ψ` of every basis configuration in index order.
pub fn enumerate_log_psi<T: Real, M: Wavefunction<T> + ?Sized>(model: &M) -> Vec<Complex<T>> {
    let n = model.n_spins();
    let mut spins = vec![0i8; n];
    (0..1usize << n)
        .map(|i| {
            basis::index_to_spins(i, &mut spins);
            model.log_psi(&spins)
        })
        .collect()
}

/// `⟨Φ|ℋ|Φ⟩ / ⟨Φ|Φ⟩` using the row-wise matrix-vector product.
pub fn rayleigh_quotient<T: Real>(h: &ClockHamiltonian<T>, state: &StateVector<T>) -> Result<T> {
    let n = state.norm_sqr();
    if n <= T::zero() {
        return Err(Error::Domain("Rayleigh quotient of the zero vector".into()));
    }
    let hv = h.apply(&state.amplitudes);
    let num = state
        .amplitudes
        .iter()
        .zip(&hv)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b);
    Ok(num.re / n)
}

/// Variational energy `Σ_{σ,σ'} P(σ) ⟨σ|ℋ|σ'⟩ Ψ(σ')/Ψ(σ)` by full enumeration.
pub fn exact_variational_energy<T: Real, M: Wavefunction<T> + ?Sized>(
    model: &M,
    h: &ClockHamiltonian<T>,
) -> Result<T> {
    let dim = h.dim();
    if dim > h.dense_cap() {
        return Err(Error::DenseCap { dim, cap: h.dense_cap() });
    }
    let state = model_state(model, h.layout())?;
    let logs = enumerate_log_psi(model);
    let amps = state.amplitudes();
    let total = state.norm_sqr();
    let mut row = OperatorRow::default();
    let mut energy = Complex::new(T::zero(), T::zero());
    for (i, &li) in logs.iter().enumerate() {
        let p = cnorm_sqr(amps[i]) / total;
        if p <= T::zero() {
            continue;
        }
        h.row_into(i, &mut row);
        let mut local = Complex::new(T::zero(), T::zero());
        for &(k, v) in row.entries() {
            if logs[k].re.is_finite() {
                local += v * cexp(logs[k] - li);
            }
        }
        energy += local.scale(p);
    }
    Ok(energy.re)
}

/// Expectation of `op` on the clock-`t` slice of `state`, renormalized by the
/// slice weight.
pub fn exact_time_expectation<T: Real>(
    state: &StateVector<T>,
    op: &dyn PhysicalOperator<T>,
    t: usize,
) -> Result<T> {
    let layout = state.layout;
    let word = gray_encode(t as u64, layout.n_t)? as usize;
    let slice: Vec<Complex<T>> =
        (0..layout.physical_dim()).map(|p| state.amplitudes[layout.join(p, word)]).collect();
    let weight = slice.iter().fold(T::zero(), |acc, &a| acc + cnorm_sqr(a));
    if weight <= T::zero() {
        return Err(Error::Domain(format!("clock time {t} carries no weight")));
    }
    let mut row = OperatorRow::default();
    let mut spins = vec![0i8; layout.n_s];
    let mut acc = Complex::new(T::zero(), T::zero());
    for (p, &a) in slice.iter().enumerate() {
        basis::index_to_spins(p, &mut spins);
        op.row_into(&spins, &mut row);
        for &(q, v) in row.entries() {
            acc += a.conj() * v * slice[q];
        }
    }
    Ok(acc.re / weight)
}

/// Average physical magnetization at clock time `t`.
pub fn exact_time_magnetization<T: Real>(state: &StateVector<T>, t: usize) -> Result<T> {
    exact_time_expectation(state, &MeanMagnetization, t)
}

/// Ground-state diagnostics for one `(N_S, N_T)` point.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsReport<T> {
    pub n_s: usize,
    pub n_t: usize,
    /// Entry `k` is the value for `N_P = k + 1`.
    pub renyi2_per_spin: Vec<T>,
    pub gini: T,
    pub coverage_ratio: T,
    pub ground_energy: T,
}

/// Mass used for the coverage ratio.
pub const COVERAGE_MASS: f64 = 0.99;

/// Exact diagonalization plus every diagnostic of the ground state.
pub fn diagnose<T: Real>(h: &ClockHamiltonian<T>) -> Result<DiagnosticsReport<T>> {
    let (energy, state) = ground_state(h)?;
    let layout = h.layout();
    let renyi = (1..=layout.n_s)
        .map(|n_p| renyi2_per_spin(&state, n_p))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagnosticsReport {
        n_s: layout.n_s,
        n_t: layout.n_t,
        renyi2_per_spin: renyi,
        gini: gini(&state)?,
        coverage_ratio: coverage_ratio(&state, T::lit(COVERAGE_MASS))?,
        ground_energy: energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::TfimParams;
    use approx::assert_relative_eq;

    type C = Complex<f64>;

    fn clock(n_s: usize, steps: usize) -> ClockHamiltonian<f64> {
        ClockHamiltonian::new(TfimParams::new(n_s), steps, 3.0).unwrap()
    }

    #[test]
    fn ground_state_is_history_state() {
        let h = clock(3, 3);
        let (e, gs) = ground_state(&h).unwrap();
        assert!(e.abs() < 1e-9);
        let hist = build_history_state(&h, &all_up_physical(3)).unwrap();
        assert!(infidelity(&gs, &hist).unwrap() < 1e-9);
        assert!((rayleigh_quotient(&h, &hist).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn no_clock_ground_state_is_all_up() {
        let h = clock(3, 0);
        let (e, gs) = ground_state(&h).unwrap();
        assert!(e.abs() < 1e-12);
        assert!((gs.amplitudes()[0] - C::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn history_state_single_step() {
        let h = clock(2, 1);
        let psi = build_history_state(&h, &all_up_physical(2)).unwrap();
        let s = 0.5_f64.sqrt();
        let u = &h.propagator().matrix;
        let layout = h.layout();
        for p in 0..4 {
            let at0 = if p == 0 { s } else { 0.0 };
            assert!((psi.amplitudes()[layout.join(p, 0)] - C::new(at0, 0.0)).norm() < 1e-15);
            assert!((psi.amplitudes()[layout.join(p, 1)] - u[(p, 0)] * s).norm() < 1e-15);
        }
        assert_relative_eq!(psi.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn history_state_projection_recovers_evolution() {
        let h = clock(3, 7);
        let psi = build_history_state(&h, &all_up_physical(3)).unwrap();
        let layout = h.layout();
        let mut step = all_up_physical::<f64>(3);
        let scale = 1.0 / 8f64.sqrt();
        for t in 0..=7 {
            if t > 0 {
                step = h.propagator().apply(&step);
            }
            let w = h.clock_word(t);
            for (p, &expected) in step.iter().enumerate() {
                let got = psi.amplitudes()[layout.join(p, w)];
                assert!((got - expected * scale).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn renyi_of_product_and_bell_states() {
        let layout = Layout::new(2, 0).unwrap();
        let product = StateVector::new(layout, vec![C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)]).unwrap();
        assert!(renyi2_per_spin(&product, 1).unwrap().abs() < 1e-14);
        assert!(renyi2_per_spin(&product, 2).unwrap().abs() < 1e-14);
        let s = 0.5_f64.sqrt();
        let bell = StateVector::new(layout, vec![C::new(s, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(s, 0.0)]).unwrap();
        assert_relative_eq!(renyi2_per_spin(&bell, 1).unwrap(), std::f64::consts::LN_2 / 2.0, epsilon = 1e-14);
        assert!(renyi2_per_spin(&bell, 3).is_err());
        assert!(renyi2_per_spin(&bell, 0).is_err());
    }

    #[test]
    fn reduced_density_matrix_is_a_density_matrix() {
        let h = clock(4, 3);
        let (_, gs) = ground_state(&h).unwrap();
        for n_p in 1..=4 {
            let rho = reduced_density_matrix(&gs, n_p).unwrap();
            let trace: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
            assert_relative_eq!(trace, 1.0, epsilon = 1e-12);
            let eig = SymmetricEigen::new(rho);
            assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-12));
        }
    }

    #[test]
    fn gini_closed_forms() {
        let layout = Layout::new(5, 4).unwrap();
        let uniform = StateVector::new(layout, vec![C::new(1.0, 0.0); 512]).unwrap();
        assert!(gini(&uniform).unwrap().abs() < 1e-15);
        let mut point = vec![C::new(0.0, 0.0); 512];
        point[17] = C::new(0.0, 2.0);
        let point = StateVector::new(layout, point).unwrap();
        assert_relative_eq!(gini(&point).unwrap(), 1.0 - 1.0 / 512.0, epsilon = 1e-15);
        let zero = StateVector::new(layout, vec![C::new(0.0, 0.0); 512]).unwrap();
        assert!(gini(&zero).is_err());
    }

    #[test]
    fn coverage_closed_forms() {
        let layout = Layout::new(5, 4).unwrap();
        let uniform = StateVector::new(layout, vec![C::new(1.0, 0.0); 512]).unwrap();
        assert_relative_eq!(coverage_ratio(&uniform, 0.99).unwrap(), 507.0 / 512.0);
        let mut point = vec![C::new(0.0, 0.0); 512];
        point[3] = C::new(1.0, 0.0);
        let point = StateVector::new(layout, point).unwrap();
        assert_relative_eq!(coverage_ratio(&point, 0.99).unwrap(), 1.0 / 512.0);
        assert!(coverage_ratio(&point, 1.0).is_err());
        assert!(coverage_ratio(&point, 0.0).is_err());
    }

    #[test]
    fn infidelity_properties() {
        let layout = Layout::new(2, 0).unwrap();
        let a = StateVector::new(layout, vec![C::new(0.3, 0.1), C::new(-0.2, 0.5), C::new(0.0, 0.4), C::new(0.7, 0.0)]).unwrap();
        assert!(infidelity(&a, &a).unwrap().abs() < 1e-15);
        let phase = C::from_polar(2.5, 1.1);
        let b = StateVector::new(layout, a.amplitudes().iter().map(|x| x * phase).collect()).unwrap();
        assert!(infidelity(&a, &b).unwrap().abs() < 1e-14);
        let e0 = StateVector::new(layout, vec![C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)]).unwrap();
        let e1 = StateVector::new(layout, vec![C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)]).unwrap();
        assert_relative_eq!(infidelity(&e0, &e1).unwrap(), 1.0);
        let zero = StateVector::new(layout, vec![C::new(0.0, 0.0); 4]).unwrap();
        assert!(infidelity(&a, &zero).is_err());
    }

    #[test]
    fn magnetization_of_history_state() {
        let h = clock(3, 3);
        let psi = build_history_state(&h, &all_up_physical(3)).unwrap();
        assert_relative_eq!(exact_time_magnetization(&psi, 0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_spin_rabi_oscillation() {
        let (h_field, total, steps) = (1.0, 3.0, 7);
        let h = ClockHamiltonian::new(TfimParams::with_couplings(1, 0.25, h_field), steps, total).unwrap();
        let (_, gs) = ground_state(&h).unwrap();
        for t in 0..=steps {
            let time = total * t as f64 / steps as f64;
            let m = exact_time_magnetization(&gs, t).unwrap();
            assert_relative_eq!(m, (2.0 * h_field * time).cos(), epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_slice_is_rejected() {
        let layout = Layout::new(1, 1).unwrap();
        let s = StateVector::new(layout, vec![C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)]).unwrap();
        assert!(exact_time_magnetization(&s, 1).is_err());
    }

    #[test]
    fn fixed_phase_is_deterministic() {
        let layout = Layout::new(1, 0).unwrap();
        let mut s = StateVector::new(layout, vec![C::new(0.0, -0.6), C::new(0.8, 0.0)]).unwrap();
        s.fix_global_phase();
        assert!((s.amplitudes()[1] - C::new(0.0, 0.8)).norm() > 0.0 || true);
        assert_eq!(s.amplitudes()[1].im, 0.0);
        assert!(s.amplitudes()[1].re > 0.0);
    }
}

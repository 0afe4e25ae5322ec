//! Operators on the physical spins, used for time-projected measurements.

use num_complex::Complex;

use crate::basis;
use crate::hamiltonian::OperatorRow;
use crate::scalar::Real;

/// Operator acting on the physical register with row access. Row entries are
/// keyed by physical basis index.
pub trait PhysicalOperator<T: Real>: Sync {
    fn row_into(&self, physical: &[i8], row: &mut OperatorRow<T>);

    /// Whether every row holds only its diagonal entry.
    fn is_diagonal(&self) -> bool {
        false
    }
}

/// `(1/N_S) Σᵢ σᶻᵢ`.
#[derive(Clone, Copy, Debug, Default)]
pub struct MeanMagnetization;

impl<T: Real> PhysicalOperator<T> for MeanMagnetization {
    fn row_into(&self, physical: &[i8], row: &mut OperatorRow<T>) {
        row.clear();
        let sum: i32 = physical.iter().map(|&s| i32::from(s)).sum();
        let v = T::lit(f64::from(sum)) / T::from_count(physical.len());
        row.push(basis::spins_to_index(physical), Complex::new(v, T::zero()));
    }

    fn is_diagonal(&self) -> bool {
        true
    }
}

/// `(1/N_S) Σᵢ σˣᵢ`.
#[derive(Clone, Copy, Debug, Default)]
pub struct MeanTransverse;

impl<T: Real> PhysicalOperator<T> for MeanTransverse {
    fn row_into(&self, physical: &[i8], row: &mut OperatorRow<T>) {
        row.clear();
        let n = physical.len();
        let index = basis::spins_to_index(physical);
        let v = Complex::new(T::one() / T::from_count(n), T::zero());
        row.push(index, Complex::new(T::zero(), T::zero()));
        for k in 0..n {
            row.push(index ^ (1 << (n - 1 - k)), v);
        }
    }
}

/// The identity.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl<T: Real> PhysicalOperator<T> for Identity {
    fn row_into(&self, physical: &[i8], row: &mut OperatorRow<T>) {
        row.clear();
        row.push(basis::spins_to_index(physical), Complex::new(T::one(), T::zero()));
    }

    fn is_diagonal(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnetization_row() {
        let mut row = OperatorRow::<f64>::default();
        MeanMagnetization.row_into(&[1, 1, -1, 1], &mut row);
        assert_eq!(row.len(), 1);
        assert_eq!(row.diagonal().re, 0.5);
        Identity.row_into(&[1, -1], &mut row);
        assert_eq!(row.diagonal().re, 1.0);
        MeanTransverse.row_into(&[1, -1], &mut row);
        assert_eq!(row.len(), 3);
        assert_eq!(row.entries()[1], (3, Complex::new(0.5, 0.0)));
        assert_eq!(row.entries()[2], (0, Complex::new(0.5, 0.0)));
    }
}

pub mod basis;
pub mod error;
pub mod hamiltonian;
pub mod io;
pub mod models;
pub mod observable;
pub mod oracle;
pub mod sampling;
pub mod scalar;
pub mod tuner;
pub mod vmc;

/// Double-precision clock Hamiltonian.
pub type Hamiltonian = hamiltonian::ClockHamiltonian<f64>;
pub type Hamiltonian32 = hamiltonian::ClockHamiltonian<f32>;
/// Double-precision network wave function.
pub type Model = models::NqsModel<f64>;
pub type Model32 = models::NqsModel<f32>;
pub type State = oracle::StateVector<f64>;
pub type State32 = oracle::StateVector<f32>;

//! Discrete global minimum variance portfolio (DGMVP) solver built on a
//! budget-conserving QAOA ansatz, simulated on dense statevectors.

pub mod circuits;
pub mod encoding;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod market;
pub mod metrics;
pub mod noise;
pub mod optimizers;
pub mod pauli;
pub mod simulator;

pub use error::{Error, Result};

//! Variational Monte Carlo on small spin lattices with natural-gradient
//! optimizers: SR, MinSR, SPRING and its spectral variant PRIME-SR.

pub mod analysis;
pub mod counterexample;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod hamiltonian;
pub mod linalg;
pub mod optimizer;
pub mod prime;
pub mod sampler;
pub mod spins;
pub mod wavefunction;

pub use faer;

pub use error::{Result, VmcError};

use super::{Parameterized, Wavefunction};
use crate::error::{Result, VmcError};
use crate::spins::index_of;

/// A wavefunction given explicitly on all `2^N` basis states.
///
/// It has no parameters, so its score vectors are empty.
#[derive(Clone, Debug)]
pub struct TableWavefunction {
    n_sites: usize,
    log_abs: Vec<f64>,
    signs: Vec<f64>,
}

impl TableWavefunction {
    pub fn from_amplitudes(n_sites: usize, amplitudes: &[f64]) -> Result<Self> {
        if amplitudes.len() != 1usize << n_sites {
            return Err(VmcError::DimensionMismatch {
                expected: 1 << n_sites,
                actual: amplitudes.len(),
                context: "amplitude table",
            });
        }
        if amplitudes.iter().all(|&a| a == 0.0) {
            return Err(VmcError::ZeroWavefunction);
        }
        Ok(Self {
            n_sites,
            log_abs: amplitudes.iter().map(|a| a.abs().ln()).collect(),
            signs: amplitudes
                .iter()
                .map(|&a| if a < 0.0 { -1.0 } else { 1.0 })
                .collect(),
        })
    }

    pub fn from_log_abs(n_sites: usize, log_abs: Vec<f64>) -> Result<Self> {
        if log_abs.len() != 1usize << n_sites {
            return Err(VmcError::DimensionMismatch {
                expected: 1 << n_sites,
                actual: log_abs.len(),
                context: "log-amplitude table",
            });
        }
        let signs = vec![1.0; log_abs.len()];
        Ok(Self {
            n_sites,
            log_abs,
            signs,
        })
    }

    pub fn log_table(&self) -> &[f64] {
        &self.log_abs
    }

    pub fn sign_table(&self) -> &[f64] {
        &self.signs
    }
}

impl Wavefunction for TableWavefunction {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn log_abs_psi(&self, x: &[i8]) -> f64 {
        self.log_abs[index_of(x)]
    }

    fn sign(&self, x: &[i8]) -> f64 {
        self.signs[index_of(x)]
    }
}

impl Parameterized for TableWavefunction {
    fn n_params(&self) -> usize {
        0
    }

    fn grad_log_abs_psi_into(&self, _x: &[i8], _out: &mut [f64]) {}
}

/// `ψ ≡ 1`.
#[derive(Clone, Copy, Debug)]
pub struct UniformWavefunction {
    n_sites: usize,
}

impl UniformWavefunction {
    pub fn new(n_sites: usize) -> Self {
        Self { n_sites }
    }
}

impl Wavefunction for UniformWavefunction {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn log_abs_psi(&self, _x: &[i8]) -> f64 {
        0.0
    }
}

impl Parameterized for UniformWavefunction {
    fn n_params(&self) -> usize {
        0
    }

    fn grad_log_abs_psi_into(&self, _x: &[i8], _out: &mut [f64]) {}
}

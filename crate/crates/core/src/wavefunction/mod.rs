//! Trial wavefunctions.

mod analytic;
mod checkpoint;
mod rbm;
mod table;

pub use analytic::{GaussianShiftAnsatz, PhaseAnsatz};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use rbm::{log_cosh, Rbm, RbmWavefunction, DEFAULT_DENSITY, DEFAULT_INIT_SCALE};
pub use table::{TableWavefunction, UniformWavefunction};

/// A real wavefunction on `{-1, 1}^N`, accessed through `log|ψ|` and sign.
pub trait Wavefunction {
    fn n_sites(&self) -> usize;

    /// `log|ψ(x)|`, or `-∞` where `ψ(x) = 0`.
    fn log_abs_psi(&self, x: &[i8]) -> f64;

    fn sign(&self, _x: &[i8]) -> f64 {
        1.0
    }
}

/// A wavefunction with a differentiable parameter vector.
pub trait Parameterized: Wavefunction {
    fn n_params(&self) -> usize;

    /// Writes `∇_θ log|ψ_θ(x)|` into `out` (length `n_params`).
    fn grad_log_abs_psi_into(&self, x: &[i8], out: &mut [f64]);

    /// `log|ψ(x)|`, with the gradient written into `out`.
    fn log_abs_and_grad_into(&self, x: &[i8], out: &mut [f64]) -> f64 {
        self.grad_log_abs_psi_into(x, out);
        self.log_abs_psi(x)
    }

    fn grad_log_abs_psi(&self, x: &[i8]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_params()];
        self.grad_log_abs_psi_into(x, &mut out);
        out
    }
}

impl<W: Wavefunction + ?Sized> Wavefunction for &W {
    fn n_sites(&self) -> usize {
        (**self).n_sites()
    }
    fn log_abs_psi(&self, x: &[i8]) -> f64 {
        (**self).log_abs_psi(x)
    }
    fn sign(&self, x: &[i8]) -> f64 {
        (**self).sign(x)
    }
}

impl<W: Parameterized + ?Sized> Parameterized for &W {
    fn n_params(&self) -> usize {
        (**self).n_params()
    }
    fn grad_log_abs_psi_into(&self, x: &[i8], out: &mut [f64]) {
        (**self).grad_log_abs_psi_into(x, out)
    }
    fn log_abs_and_grad_into(&self, x: &[i8], out: &mut [f64]) -> f64 {
        (**self).log_abs_and_grad_into(x, out)
    }
}

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{Parameterized, Wavefunction};
use crate::error::{Result, VmcError};

/// Hidden units per visible spin.
pub const DEFAULT_DENSITY: usize = 5;
/// Standard deviation of the i.i.d. normal parameter initialization.
pub const DEFAULT_INIT_SCALE: f64 = 0.01;

/// `log cosh(t)` without overflow for large `|t|`.
#[inline]
pub fn log_cosh(t: f64) -> f64 {
    let a = t.abs();
    a - std::f64::consts::LN_2 + (-2.0 * a).exp().ln_1p()
}

/// Shape of a real restricted Boltzmann machine
/// `ψ(x) = exp(Σ_j a_j x_j) Π_k cosh(b_k + Σ_j W_kj x_j)`.
///
/// Parameters are packed as `(a, b, W)` with `W` stored row-major
/// (`D × N`); the packing is shared by every serialization path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rbm {
    n_visible: usize,
    n_hidden: usize,
}

impl Rbm {
    pub fn new(n_visible: usize, n_hidden: usize) -> Self {
        Self { n_visible, n_hidden }
    }

    pub fn with_density(n_visible: usize, density: usize) -> Self {
        Self::new(n_visible, density * n_visible)
    }

    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn n_params(&self) -> usize {
        self.n_visible + self.n_hidden + self.n_hidden * self.n_visible
    }

    pub fn visible_bias<'a>(&self, theta: &'a [f64]) -> &'a [f64] {
        &theta[..self.n_visible]
    }

    pub fn hidden_bias<'a>(&self, theta: &'a [f64]) -> &'a [f64] {
        &theta[self.n_visible..self.n_visible + self.n_hidden]
    }

    pub fn weights<'a>(&self, theta: &'a [f64]) -> &'a [f64] {
        &theta[self.n_visible + self.n_hidden..]
    }

    /// Packs `(a, b, W)` into a parameter vector.
    pub fn pack(&self, a: &[f64], b: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        if a.len() != self.n_visible
            || b.len() != self.n_hidden
            || w.len() != self.n_hidden * self.n_visible
        {
            return Err(VmcError::InvalidArgument(
                "RBM blocks do not match (N, D)".into(),
            ));
        }
        Ok(a.iter().chain(b).chain(w).copied().collect())
    }

    pub fn random_parameters<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> Vec<f64> {
        let normal = Normal::new(0.0, scale).expect("finite nonnegative scale");
        (0..self.n_params()).map(|_| normal.sample(rng)).collect()
    }

    fn check(&self, theta: &[f64], x: &[i8]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(VmcError::DimensionMismatch {
                expected: self.n_params(),
                actual: theta.len(),
                context: "RBM parameter vector",
            });
        }
        if x.len() != self.n_visible {
            return Err(VmcError::DimensionMismatch {
                expected: self.n_visible,
                actual: x.len(),
                context: "spin configuration length",
            });
        }
        Ok(())
    }

    /// Hidden pre-activations `t_k = b_k + Σ_j W_kj x_j`.
    pub fn angles_into(&self, theta: &[f64], x: &[i8], out: &mut [f64]) {
        let n = self.n_visible;
        let b = self.hidden_bias(theta);
        let w = self.weights(theta);
        for (k, t) in out.iter_mut().enumerate() {
            let row = &w[k * n..(k + 1) * n];
            *t = b[k]
                + row
                    .iter()
                    .zip(x)
                    .map(|(wkj, &xj)| wkj * f64::from(xj))
                    .sum::<f64>();
        }
    }

    fn log_abs_from_angles(&self, theta: &[f64], x: &[i8], angles: &[f64]) -> f64 {
        let visible: f64 = self
            .visible_bias(theta)
            .iter()
            .zip(x)
            .map(|(a, &s)| a * f64::from(s))
            .sum();
        visible + angles.iter().map(|&t| log_cosh(t)).sum::<f64>()
    }

    pub fn log_abs_psi(&self, theta: &[f64], x: &[i8]) -> Result<f64> {
        self.check(theta, x)?;
        let mut angles = vec![0.0; self.n_hidden];
        self.angles_into(theta, x, &mut angles);
        Ok(self.log_abs_from_angles(theta, x, &angles))
    }

    pub fn grad_log_abs_psi(&self, theta: &[f64], x: &[i8]) -> Result<Vec<f64>> {
        self.check(theta, x)?;
        let mut out = vec![0.0; self.n_params()];
        let mut angles = vec![0.0; self.n_hidden];
        self.grad_into(theta, x, &mut angles, &mut out);
        Ok(out)
    }

    fn grad_into(&self, theta: &[f64], x: &[i8], angles: &mut [f64], out: &mut [f64]) {
        let n = self.n_visible;
        let d = self.n_hidden;
        self.angles_into(theta, x, angles);
        for (o, &s) in out[..n].iter_mut().zip(x) {
            *o = f64::from(s);
        }
        let (hidden, weights) = out[n..].split_at_mut(d);
        for k in 0..d {
            let th = angles[k].tanh();
            hidden[k] = th;
            for (o, &s) in weights[k * n..(k + 1) * n].iter_mut().zip(x) {
                *o = th * f64::from(s);
            }
        }
    }

    /// Binds a parameter vector, producing an evaluable wavefunction.
    pub fn bind<'a>(&self, theta: &'a [f64]) -> Result<RbmWavefunction<'a>> {
        if theta.len() != self.n_params() {
            return Err(VmcError::DimensionMismatch {
                expected: self.n_params(),
                actual: theta.len(),
                context: "RBM parameter vector",
            });
        }
        Ok(RbmWavefunction { rbm: *self, theta })
    }
}

/// An [`Rbm`] at a fixed parameter vector.
#[derive(Clone, Copy, Debug)]
pub struct RbmWavefunction<'a> {
    rbm: Rbm,
    theta: &'a [f64],
}

impl RbmWavefunction<'_> {
    pub fn rbm(&self) -> Rbm {
        self.rbm
    }

    pub fn theta(&self) -> &[f64] {
        self.theta
    }
}

impl Wavefunction for RbmWavefunction<'_> {
    fn n_sites(&self) -> usize {
        self.rbm.n_visible
    }

    fn log_abs_psi(&self, x: &[i8]) -> f64 {
        let mut angles = vec![0.0; self.rbm.n_hidden];
        self.rbm.angles_into(self.theta, x, &mut angles);
        self.rbm.log_abs_from_angles(self.theta, x, &angles)
    }
}

impl Parameterized for RbmWavefunction<'_> {
    fn n_params(&self) -> usize {
        self.rbm.n_params()
    }

    fn grad_log_abs_psi_into(&self, x: &[i8], out: &mut [f64]) {
        let mut angles = vec![0.0; self.rbm.n_hidden];
        self.rbm.grad_into(self.theta, x, &mut angles, out);
    }

    fn log_abs_and_grad_into(&self, x: &[i8], out: &mut [f64]) -> f64 {
        let mut angles = vec![0.0; self.rbm.n_hidden];
        self.rbm.grad_into(self.theta, x, &mut angles, out);
        self.rbm.log_abs_from_angles(self.theta, x, &angles)
    }
}

//! Two wavefunction families whose SR matrix does not depend on `θ`:
//! a Gaussian shifted by `Aθ`, and a pure phase `exp(i xᵀAθ)` on `{-1,1}^N`.
//!
//! Only their score vectors enter the optimizer algebra, so the phase family
//! is represented by the real coefficient vector `Aᵀx` (the imaginary unit
//! is factored out).

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Col, Mat, MatRef, Side};

use crate::error::{Result, VmcError};
use crate::linalg::row_space_basis;

fn check_rank(a: MatRef<'_, f64>) -> Result<()> {
    let rank = row_space_basis(a)?.ncols();
    if rank == 0 || rank >= a.ncols() {
        return Err(VmcError::InvalidArgument(format!(
            "need 0 < rank(A) < N_p, got rank {rank} with N_p = {}",
            a.ncols()
        )));
    }
    Ok(())
}

/// `ψ_θ(x) = exp(-¼ (x - Aθ)ᵀ Σ⁻¹ (x - Aθ))`, so that `π_θ = N(Aθ, Σ)`.
#[derive(Clone, Debug)]
pub struct GaussianShiftAnsatz {
    a: Mat<f64>,
    sigma: Mat<f64>,
    sigma_inv: Mat<f64>,
    chol_lower: Mat<f64>,
}

impl GaussianShiftAnsatz {
    pub fn new(a: Mat<f64>, sigma: Mat<f64>) -> Result<Self> {
        let d = a.nrows();
        if sigma.nrows() != d || sigma.ncols() != d {
            return Err(VmcError::DimensionMismatch {
                expected: d,
                actual: sigma.nrows(),
                context: "covariance dimension",
            });
        }
        if (&sigma - sigma.transpose()).norm_l2() > 1e-12 * sigma.norm_l2() {
            return Err(VmcError::InvalidArgument("Σ must be symmetric".into()));
        }
        let llt = sigma.llt(Side::Lower).map_err(|_| {
            VmcError::InvalidArgument("Σ must be positive definite".into())
        })?;
        check_rank(a.as_ref())?;
        let chol_lower = llt.L().to_owned();
        let sigma_inv = llt.inverse();
        Ok(Self {
            a,
            sigma,
            sigma_inv,
            chol_lower,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> MatRef<'_, f64> {
        self.a.as_ref()
    }

    pub fn sigma(&self) -> MatRef<'_, f64> {
        self.sigma.as_ref()
    }

    pub fn cholesky_lower(&self) -> MatRef<'_, f64> {
        self.chol_lower.as_ref()
    }

    pub fn mean(&self, theta: &Col<f64>) -> Col<f64> {
        &self.a * theta
    }

    /// `½ AᵀΣ⁻¹(x - Aθ)`.
    pub fn score(&self, theta: &Col<f64>, x: &Col<f64>) -> Col<f64> {
        let r = x - &self.a * theta;
        let w = &self.sigma_inv * &r;
        (self.a.transpose() * &w) * 0.5
    }

    /// `¼ AᵀΣ⁻¹A`.
    pub fn exact_sr_matrix(&self) -> Mat<f64> {
        let w = &self.sigma_inv * &self.a;
        (self.a.transpose() * &w) * 0.25
    }

    pub fn solve_sigma(&self, rhs: &Col<f64>) -> Col<f64> {
        self.sigma.llt(Side::Lower).expect("checked at construction").solve(rhs)
    }
}

/// `ψ_θ(x) = 2^{-N/2} exp(i xᵀAθ)` on `{-1,1}^N`; `π_θ` is uniform.
#[derive(Clone, Debug)]
pub struct PhaseAnsatz {
    a: Mat<f64>,
}

impl PhaseAnsatz {
    pub fn new(a: Mat<f64>) -> Result<Self> {
        check_rank(a.as_ref())?;
        Ok(Self { a })
    }

    pub fn n_sites(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> MatRef<'_, f64> {
        self.a.as_ref()
    }

    /// `Aᵀx`, the score with the imaginary unit removed.
    pub fn score(&self, x: &[i8]) -> Col<f64> {
        let xc = Col::from_fn(x.len(), |i| f64::from(x[i]));
        self.a.transpose() * &xc
    }

    /// `AᵀA`, the real part of the score covariance.
    pub fn exact_sr_matrix(&self) -> Mat<f64> {
        self.a.transpose() * &self.a
    }
}

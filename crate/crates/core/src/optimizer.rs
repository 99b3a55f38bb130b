//! Iteration maps of the SR family.
//!
//! All directions follow the sign convention `Δθ ≈ −½ S⁻¹ g`, and the
//! parameters move by `θ ← θ + Δθ·min(η_k, √C/‖Δθ‖)`.

use faer::{Col, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VmcError};
use crate::estimator::{FullBatchQuantities, SampleBatch};
use crate::linalg::{shifted, spd_solve};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Sr,
    Minsr,
    Spring,
    Fspring,
    Prime,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sgd => "sgd",
            Self::Sr => "sr",
            Self::Minsr => "minsr",
            Self::Spring => "spring",
            Self::Fspring => "fspring",
            Self::Prime => "prime",
        }
    }
}

/// `η_k = η₀ / (1 + c·k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub eta0: f64,
    pub c: f64,
}

impl StepSchedule {
    pub fn new(eta0: f64, c: f64) -> Result<Self> {
        if !(eta0 > 0.0 && eta0.is_finite()) || !(c >= 0.0 && c.is_finite()) {
            return Err(VmcError::InvalidArgument(format!(
                "step schedule needs η₀ > 0 and c ≥ 0, got η₀ = {eta0}, c = {c}"
            )));
        }
        Ok(Self { eta0, c })
    }

    pub fn constant(eta: f64) -> Result<Self> {
        Self::new(eta, 0.0)
    }

    pub fn step_size(&self, k: usize) -> f64 {
        self.eta0 / (1.0 + self.c * k as f64)
    }
}

/// Momentum memory and hyperparameters of one optimization run.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    pub delta_prev: Col<f64>,
    pub k: usize,
    pub lambda: f64,
    pub mu: f64,
    pub schedule: StepSchedule,
    pub norm_c: Option<f64>,
}

impl OptimizerState {
    pub fn new(
        n_params: usize,
        lambda: f64,
        mu: f64,
        schedule: StepSchedule,
        norm_c: Option<f64>,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(VmcError::InvalidArgument(format!("λ must be positive, got {lambda}")));
        }
        if !(0.0..=1.0).contains(&mu) {
            return Err(VmcError::InvalidArgument(format!("μ must lie in [0, 1], got {mu}")));
        }
        if let Some(c) = norm_c {
            if !(c > 0.0 && c.is_finite()) {
                return Err(VmcError::InvalidArgument(format!(
                    "norm constraint must be positive, got {c}"
                )));
            }
        }
        Ok(Self {
            delta_prev: Col::zeros(n_params),
            k: 0,
            lambda,
            mu,
            schedule,
            norm_c,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.schedule.step_size(self.k)
    }

    /// Stores `Δθ_k` and advances `k`.
    pub fn advance(&mut self, delta: Col<f64>) {
        self.delta_prev = delta;
        self.k += 1;
    }
}

fn check_prev(batch: &SampleBatch, delta_prev: &Col<f64>) -> Result<()> {
    if delta_prev.nrows() != batch.n_params() {
        return Err(VmcError::DimensionMismatch {
            expected: batch.n_params(),
            actual: delta_prev.nrows(),
            context: "previous update",
        });
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(VmcError::InvalidArgument(format!("λ must be positive, got {lambda}")))
    }
}

/// SPRING in sample space:
/// `Δθ = μΔθ_prev − O(λI + OᵀO + 𝟙𝟙ᵀ/N_s)⁻¹ζ`, `ζ = μOᵀΔθ_prev + Ē`.
///
/// With `stabilize = false` the `𝟙𝟙ᵀ/N_s` term is dropped.
pub fn spring_direction(
    batch: &SampleBatch,
    delta_prev: &Col<f64>,
    lambda: f64,
    mu: f64,
    stabilize: bool,
) -> Result<Col<f64>> {
    check_prev(batch, delta_prev)?;
    check_lambda(lambda)?;
    let o = batch.o();
    let n_s = batch.n_samples();
    let zeta = (o.transpose() * delta_prev) * mu + batch.ebar();
    let mut t = shifted(batch.sample_gram().as_ref(), lambda);
    if stabilize {
        let w = 1.0 / n_s as f64;
        for i in 0..n_s {
            for j in 0..n_s {
                t[(i, j)] += w;
            }
        }
    }
    let y = spd_solve(t.as_ref(), zeta.as_ref())?;
    Ok(delta_prev * mu - o * &y)
}

/// `(λI + S)⁻¹(λμΔθ_prev − ½g)`, the parameter-space form shared by SR,
/// F-SPRING and SPRING.
pub fn regularized_direction(
    s: MatRef<'_, f64>,
    g: &Col<f64>,
    delta_prev: &Col<f64>,
    lambda: f64,
    mu: f64,
) -> Result<Col<f64>> {
    check_lambda(lambda)?;
    if s.nrows() != g.nrows() || delta_prev.nrows() != g.nrows() {
        return Err(VmcError::DimensionMismatch {
            expected: s.nrows(),
            actual: g.nrows().min(delta_prev.nrows()),
            context: "parameter-space system",
        });
    }
    let rhs = delta_prev * (lambda * mu) - g * 0.5;
    spd_solve(shifted(s, lambda).as_ref(), rhs.as_ref())
}

/// SPRING through the `N_p × N_p` system `(λI + OOᵀ)Δθ = λμΔθ_prev − OĒ`.
///
/// Identical to [`spring_direction`] in exact arithmetic and cheaper when
/// `N_p` is below the number of distinct samples.
pub fn spring_direction_param_space(
    batch: &SampleBatch,
    delta_prev: &Col<f64>,
    lambda: f64,
    mu: f64,
) -> Result<Col<f64>> {
    check_prev(batch, delta_prev)?;
    let half_g = batch.o_ebar();
    regularized_direction(batch.sr_matrix().as_ref(), &(half_g * 2.0), delta_prev, lambda, mu)
}

/// SPRING through whichever linear system is smaller.
pub fn spring_direction_auto(
    batch: &SampleBatch,
    delta_prev: &Col<f64>,
    lambda: f64,
    mu: f64,
) -> Result<Col<f64>> {
    if batch.n_samples() > batch.n_params() {
        spring_direction_param_space(batch, delta_prev, lambda, mu)
    } else {
        spring_direction(batch, delta_prev, lambda, mu, true)
    }
}

/// Regularized minimum-norm SR step `−O(λI + OᵀO)⁻¹Ē`.
pub fn minsr_direction(batch: &SampleBatch, lambda: f64) -> Result<Col<f64>> {
    spring_direction(batch, &Col::zeros(batch.n_params()), lambda, 0.0, true)
}

/// Regularized SR step `−(λI + OOᵀ)⁻¹OĒ` solved in parameter space.
pub fn sr_direction(batch: &SampleBatch, lambda: f64) -> Result<Col<f64>> {
    spring_direction_param_space(batch, &Col::zeros(batch.n_params()), lambda, 0.0)
}

/// F-SPRING: `(λI + S(θ))⁻¹(λμΔθ_prev − ½g(θ))`.
pub fn full_spring_direction(
    fbq: &FullBatchQuantities,
    delta_prev: &Col<f64>,
    lambda: f64,
    mu: f64,
) -> Result<Col<f64>> {
    regularized_direction(fbq.sr_matrix.as_ref(), &fbq.gradient, delta_prev, lambda, mu)
}

/// `−½g(θ;B) = −OĒ`.
pub fn sgd_direction(batch: &SampleBatch) -> Col<f64> {
    -batch.o_ebar()
}

/// `θ + Δθ·min(η, √C/‖Δθ‖)`; returns the new parameters and the 2-norm of
/// the applied change.
pub fn apply_update(
    theta: &Col<f64>,
    delta: &Col<f64>,
    eta: f64,
    norm_c: Option<f64>,
) -> (Col<f64>, f64) {
    let norm = delta.norm_l2();
    if norm == 0.0 {
        return (theta.clone(), 0.0);
    }
    let factor = match norm_c {
        Some(c) => eta.min(c.sqrt() / norm),
        None => eta,
    };
    (theta + delta * factor, factor * norm)
}

/// Dense `N_p × N_p` argmin form, used as a reference in tests.
pub fn spring_closed_form(
    o: MatRef<'_, f64>,
    ebar: &Col<f64>,
    delta_prev: &Col<f64>,
    lambda: f64,
    mu: f64,
) -> Result<Col<f64>> {
    let s: Mat<f64> = o * o.transpose();
    let rhs = delta_prev * (lambda * mu) - o * ebar;
    spd_solve(shifted(s.as_ref(), lambda).as_ref(), rhs.as_ref())
}

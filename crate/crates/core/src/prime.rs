//! Spectral indicators and the PRIME-SR step.
//!
//! The nonzero spectrum of `T = OᵀO` (equivalently of `S = OOᵀ`) gives the
//! effective spectral dimension `α = (Σσ²)² / Σσ⁴` and the numerical rank
//! `r`. The leading `⌈α⌉` right singular vectors of `O` span the principal
//! range, and the Frobenius overlap of consecutive principal ranges sets the
//! momentum through [`adaptive_mu`].

use faer::{Col, Mat, MatRef};

use crate::error::{Result, VmcError};
use crate::estimator::SampleBatch;
use crate::linalg::sym_eigen_desc;

/// Tolerance slack used by the bound checks.
pub const BOUND_SLACK: f64 = 1e-10;

/// Rank threshold `n·ε·σ²_max`.
pub fn rank_tolerance(n: usize, sigma2_max: f64) -> f64 {
    n as f64 * f64::EPSILON * sigma2_max
}

/// `(α, r)` from a nonincreasing spectrum, keeping eigenvalues above
/// `rank_tolerance(n_ref, σ²_max)`.
pub fn effective_dimension(eigenvalues: &[f64], n_ref: usize) -> Result<(f64, usize)> {
    let max = eigenvalues.first().copied().unwrap_or(0.0);
    if !(max > 0.0) || !max.is_finite() {
        return Err(VmcError::DegenerateSpectrum);
    }
    let tol = rank_tolerance(n_ref, max);
    let kept: Vec<f64> = eigenvalues.iter().copied().filter(|&v| v > tol).collect();
    let rank = kept.len();
    let s1: f64 = kept.iter().sum();
    let s2: f64 = kept.iter().map(|v| v * v).sum();
    let alpha = (s1 * s1 / s2).clamp(1.0, rank as f64);
    Ok((alpha, rank))
}

pub fn ceil_width(alpha: f64) -> usize {
    alpha.ceil() as usize
}

#[derive(Clone, Debug)]
enum Eigenbasis {
    /// Eigenvectors of `T` (`N_s × N_s`).
    Sample(Mat<f64>),
    /// Eigenvectors of `S` (`N_p × N_p`).
    Param(Mat<f64>),
}

/// Spectral summary of one batch.
#[derive(Clone, Debug)]
pub struct SpectralSnapshot {
    eigenvalues: Vec<f64>,
    alpha: f64,
    rank: usize,
    v_alpha: Mat<f64>,
    u_alpha: Mat<f64>,
    basis: Eigenbasis,
}

impl SpectralSnapshot {
    /// Nonzero-padded spectrum of whichever Gram matrix was decomposed.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Leading `⌈α⌉` right singular vectors of `O` (`N_s × ⌈α⌉`).
    pub fn v_alpha(&self) -> MatRef<'_, f64> {
        self.v_alpha.as_ref()
    }

    /// Leading `⌈α⌉` left singular vectors of `O` (`N_p × ⌈α⌉`).
    pub fn u_alpha(&self) -> MatRef<'_, f64> {
        self.u_alpha.as_ref()
    }

    /// `(λI + OOᵀ)⁻¹ b`, from the stored eigendecomposition.
    fn solve_param(&self, o: MatRef<'_, f64>, lambda: f64, b: &Col<f64>) -> Col<f64> {
        match &self.basis {
            Eigenbasis::Param(u) => {
                let mut c = u.transpose() * b;
                for (i, v) in self.eigenvalues.iter().enumerate() {
                    c[i] /= lambda + v.max(0.0);
                }
                u * &c
            }
            Eigenbasis::Sample(v) => {
                // (λI + OOᵀ)⁻¹ = (1/λ)(I − O(λI + OᵀO)⁻¹Oᵀ)
                let mut c = v.transpose() * (o.transpose() * b);
                for (i, e) in self.eigenvalues.iter().enumerate() {
                    c[i] /= lambda + e.max(0.0);
                }
                (b - o * (v * &c)) * (1.0 / lambda)
            }
        }
    }
}

/// Eigendecomposition of `T = OᵀO`, or of `S = OOᵀ` when `N_p < N_s`, with
/// the rank tolerance `N_s·ε·σ²_max`.
pub fn spectral_snapshot(batch: &SampleBatch) -> Result<SpectralSnapshot> {
    let o = batch.o();
    let n_s = batch.n_samples();
    if n_s < 2 {
        return Err(VmcError::InvalidArgument("need at least two samples".into()));
    }
    if batch.n_params() < n_s {
        let (eigenvalues, u) = sym_eigen_desc(batch.sr_matrix().as_ref())?;
        let (alpha, rank) = effective_dimension(&eigenvalues, n_s)?;
        let m = ceil_width(alpha);
        let u_alpha = u.subcols(0, m).to_owned();
        // v_i = Oᵀu_i / σ_i
        let mut v_alpha = o.transpose() * &u_alpha;
        for j in 0..m {
            let sigma = eigenvalues[j].sqrt();
            for i in 0..n_s {
                v_alpha[(i, j)] /= sigma;
            }
        }
        Ok(SpectralSnapshot {
            eigenvalues,
            alpha,
            rank,
            v_alpha,
            u_alpha,
            basis: Eigenbasis::Param(u),
        })
    } else {
        let (eigenvalues, v) = sym_eigen_desc(batch.sample_gram().as_ref())?;
        let (alpha, rank) = effective_dimension(&eigenvalues, n_s)?;
        let m = ceil_width(alpha);
        let v_alpha = v.subcols(0, m).to_owned();
        let mut u_alpha = o * &v_alpha;
        for j in 0..m {
            let sigma = eigenvalues[j].sqrt();
            for i in 0..u_alpha.nrows() {
                u_alpha[(i, j)] /= sigma;
            }
        }
        Ok(SpectralSnapshot {
            eigenvalues,
            alpha,
            rank,
            v_alpha,
            u_alpha,
            basis: Eigenbasis::Sample(v),
        })
    }
}

/// `(α, r)` of an exact SR matrix, with the rank tolerance scaled by `N_p`.
pub fn full_batch_dimension(sr_matrix: MatRef<'_, f64>) -> Result<(f64, usize)> {
    let (eigenvalues, _) = sym_eigen_desc(sr_matrix)?;
    effective_dimension(&eigenvalues, sr_matrix.nrows())
}

/// `‖V_curᵀ V_prev‖_F`.
pub fn subspace_overlap(current: MatRef<'_, f64>, previous: MatRef<'_, f64>) -> Result<f64> {
    if current.nrows() != previous.nrows() {
        return Err(VmcError::DimensionMismatch {
            expected: current.nrows(),
            actual: previous.nrows(),
            context: "subspace row dimension",
        });
    }
    Ok((current.transpose() * previous).norm_l2())
}

/// `√min{⌈α_k⌉, ⌈α_{k−1}⌉}`, the largest possible overlap.
pub fn overlap_cap(alpha: f64, alpha_prev: f64) -> f64 {
    (ceil_width(alpha).min(ceil_width(alpha_prev)) as f64).sqrt()
}

/// `μ = 1 − (1 − √(β̃/cap))·(1 − (α/r)^{1/4})`, clamped to `[0, 1]`.
pub fn adaptive_mu(alpha: f64, alpha_prev: f64, rank: usize, beta: f64) -> Result<f64> {
    let r = rank as f64;
    if !(alpha >= 1.0 && alpha <= r + BOUND_SLACK) || !(alpha_prev >= 1.0) {
        return Err(VmcError::InvalidArgument(format!(
            "need 1 ≤ α ≤ r, got α = {alpha}, α_prev = {alpha_prev}, r = {rank}"
        )));
    }
    let cap = overlap_cap(alpha, alpha_prev);
    if !(beta >= 0.0 && beta <= cap + BOUND_SLACK) {
        return Err(VmcError::InvalidArgument(format!(
            "need 0 ≤ β̃ ≤ {cap}, got {beta}"
        )));
    }
    let reliability = 1.0 - (beta / cap).min(1.0).sqrt();
    let spread = 1.0 - (alpha / r).min(1.0).powf(0.25);
    Ok((1.0 - reliability * spread).clamp(0.0, 1.0))
}

/// Indicator history carried between PRIME-SR iterations.
#[derive(Clone, Debug, Default)]
pub struct PrimeState {
    prev_alpha: Option<f64>,
    prev_v_alpha: Option<Mat<f64>>,
    prev_u_alpha: Option<Mat<f64>>,
}

impl PrimeState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn prev_alpha(&self) -> Option<f64> {
        self.prev_alpha
    }

    /// Computes `(α, r, β̃, β^(U))` for a new snapshot and stores it.
    ///
    /// Both overlaps are `1` on the first call.
    pub fn observe(&mut self, snapshot: &SpectralSnapshot) -> Result<Indicators> {
        let alpha_prev = self.prev_alpha.unwrap_or(snapshot.alpha);
        let beta = match &self.prev_v_alpha {
            Some(prev) => subspace_overlap(snapshot.v_alpha(), prev.as_ref())?,
            None => 1.0,
        };
        let beta_left = match &self.prev_u_alpha {
            Some(prev) => subspace_overlap(snapshot.u_alpha(), prev.as_ref())?,
            None => 1.0,
        };
        self.prev_alpha = Some(snapshot.alpha);
        self.prev_v_alpha = Some(snapshot.v_alpha.clone());
        self.prev_u_alpha = Some(snapshot.u_alpha.clone());
        Ok(Indicators {
            alpha: snapshot.alpha,
            alpha_prev,
            rank: snapshot.rank,
            beta,
            beta_left,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Indicators {
    pub alpha: f64,
    pub alpha_prev: f64,
    pub rank: usize,
    pub beta: f64,
    pub beta_left: f64,
}

impl Indicators {
    pub fn overlap_cap(&self) -> f64 {
        overlap_cap(self.alpha, self.alpha_prev)
    }

    pub fn mu(&self) -> Result<f64> {
        adaptive_mu(self.alpha, self.alpha_prev, self.rank, self.beta)
    }

    /// `1 ≤ α ≤ r ≤ N_s` and `0 ≤ β̃ ≤ cap`.
    pub fn check_bounds(&self, n_samples: usize, iteration: usize) -> Result<()> {
        let r = self.rank as f64;
        let ok = self.alpha >= 1.0
            && self.alpha <= r + BOUND_SLACK
            && self.rank <= n_samples
            && self.beta >= 0.0
            && self.beta <= self.overlap_cap() + BOUND_SLACK;
        if ok {
            Ok(())
        } else {
            Err(VmcError::BoundViolation {
                iteration,
                detail: format!(
                    "α = {}, r = {}, N_s = {n_samples}, β̃ = {}, cap = {}",
                    self.alpha,
                    self.rank,
                    self.beta,
                    self.overlap_cap()
                ),
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct PrimeStep {
    pub delta: Col<f64>,
    pub mu: f64,
    pub indicators: Indicators,
}

/// One PRIME-SR direction:
/// `Δθ = −O(λI + OᵀO)⁻¹(μ_k OᵀΔθ_prev + Ē) + μ_k Δθ_prev`.
pub fn prime_step(
    batch: &SampleBatch,
    state: &mut PrimeState,
    delta_prev: &Col<f64>,
    lambda: f64,
) -> Result<PrimeStep> {
    if delta_prev.nrows() != batch.n_params() {
        return Err(VmcError::DimensionMismatch {
            expected: batch.n_params(),
            actual: delta_prev.nrows(),
            context: "previous update",
        });
    }
    if !(lambda > 0.0) {
        return Err(VmcError::InvalidArgument(format!("λ must be positive, got {lambda}")));
    }
    let snapshot = spectral_snapshot(batch)?;
    let indicators = state.observe(&snapshot)?;
    let mu = indicators.mu()?;
    let o = batch.o();
    let delta = match &snapshot.basis {
        Eigenbasis::Sample(v) => {
            let zeta = (o.transpose() * delta_prev) * mu + batch.ebar();
            let mut c = v.transpose() * &zeta;
            for (i, e) in snapshot.eigenvalues.iter().enumerate() {
                c[i] /= lambda + e.max(0.0);
            }
            delta_prev * mu - o * (v * &c)
        }
        Eigenbasis::Param(_) => {
            let b = delta_prev * (lambda * mu) - batch.o_ebar();
            snapshot.solve_param(o, lambda, &b)
        }
    };
    Ok(PrimeStep {
        delta,
        mu,
        indicators,
    })
}

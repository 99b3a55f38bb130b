//! Kernel drift of SPRING under a constant SR matrix.
//!
//! For the Gaussian-shift and phase ansätze the SR matrix never sees
//! `kernel(A)`, so the kernel part of the update obeys
//! `P_K Δθ_k = μ^k P_K Δθ_0` and, at `μ = 1`, the parameters drift by
//! `(Σ η_m) P_K Δθ_0`.

use std::io::Write;

use faer::linalg::solvers::{Llt, Solve};
use faer::{Col, Mat, MatRef};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, VmcError};
use crate::estimator::SampleBatch;
use crate::linalg::{row_space_basis, shifted, spd_factor};
use crate::optimizer::{spring_direction, StepSchedule};
use crate::sampler::gaussian_sample;
use crate::wavefunction::{GaussianShiftAnsatz, PhaseAnsatz};

/// `I − V_r V_rᵀ`, with `V_r` an orthonormal basis of the row space of `A`.
pub fn kernel_projector(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let basis = row_space_basis(a)?;
    if basis.ncols() == 0 {
        return Err(VmcError::InvalidArgument("A has no nonzero singular value".into()));
    }
    let n = a.ncols();
    Ok(Mat::<f64>::identity(n, n) - &basis * basis.transpose())
}

#[derive(Clone, Debug)]
pub enum Construction {
    Gaussian(GaussianShiftAnsatz),
    Phase(PhaseAnsatz),
}

impl Construction {
    pub fn n_params(&self) -> usize {
        match self {
            Self::Gaussian(g) => g.n_params(),
            Self::Phase(p) => p.n_params(),
        }
    }

    pub fn a(&self) -> MatRef<'_, f64> {
        match self {
            Self::Gaussian(g) => g.a(),
            Self::Phase(p) => p.a(),
        }
    }

    pub fn exact_sr_matrix(&self) -> Mat<f64> {
        match self {
            Self::Gaussian(g) => g.exact_sr_matrix(),
            Self::Phase(p) => p.exact_sr_matrix(),
        }
    }

    /// Raw score columns of `n` samples drawn from the ansatz's own law.
    pub fn sample_scores<R: Rng + ?Sized>(&self, theta: &Col<f64>, n: usize, rng: &mut R) -> Mat<f64> {
        let mut out = Mat::<f64>::zeros(self.n_params(), n);
        match self {
            Self::Gaussian(g) => {
                for (j, x) in gaussian_sample(g, theta, n, rng).iter().enumerate() {
                    out.col_mut(j).copy_from(g.score(theta, x));
                }
            }
            Self::Phase(p) => {
                for j in 0..n {
                    let x: Vec<i8> = (0..p.n_sites())
                        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                        .collect();
                    out.col_mut(j).copy_from(p.score(&x));
                }
            }
        }
        out
    }
}

/// How `g_k` is produced; every rule keeps `g_k ∈ range(S_k)`.
#[derive(Clone, Debug)]
pub enum GradientSource {
    /// `g = S·w` for a fixed `w`.
    Fixed(Col<f64>),
    /// `g = 2S(θ − θ*)`, the gradient of `(θ − θ*)ᵀS(θ − θ*)`.
    Quadratic(Col<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    FullBatch,
    /// `S_k = OOᵀ` from `n_samples` draws and `g_k = 2OĒ` with synthetic
    /// standard-normal local energies.
    Sampled { n_samples: usize },
}

#[derive(Clone, Debug)]
pub struct FixedKernelProblem {
    construction: Construction,
    s_exact: Mat<f64>,
    p_k: Mat<f64>,
    g_source: GradientSource,
    delta0_kernel: Col<f64>,
    lambda: f64,
}

impl FixedKernelProblem {
    /// `delta0_kernel` is projected onto `kernel(A)` before use.
    pub fn new(
        construction: Construction,
        g_source: GradientSource,
        delta0_kernel: Col<f64>,
        lambda: f64,
    ) -> Result<Self> {
        let n_p = construction.n_params();
        let source_len = match &g_source {
            GradientSource::Fixed(w) | GradientSource::Quadratic(w) => w.nrows(),
        };
        for len in [source_len, delta0_kernel.nrows()] {
            if len != n_p {
                return Err(VmcError::DimensionMismatch {
                    expected: n_p,
                    actual: len,
                    context: "counterexample vector",
                });
            }
        }
        if !(lambda > 0.0) {
            return Err(VmcError::InvalidArgument(format!("λ must be positive, got {lambda}")));
        }
        let p_k = kernel_projector(construction.a())?;
        let delta0_kernel = &p_k * &delta0_kernel;
        Ok(Self {
            s_exact: construction.exact_sr_matrix(),
            construction,
            p_k,
            g_source,
            delta0_kernel,
            lambda,
        })
    }

    pub fn n_params(&self) -> usize {
        self.construction.n_params()
    }

    pub fn projector(&self) -> MatRef<'_, f64> {
        self.p_k.as_ref()
    }

    pub fn s_exact(&self) -> MatRef<'_, f64> {
        self.s_exact.as_ref()
    }

    pub fn delta0_kernel(&self) -> &Col<f64> {
        &self.delta0_kernel
    }

    fn exact_gradient(&self, theta: &Col<f64>) -> Col<f64> {
        match &self.g_source {
            GradientSource::Fixed(w) => &self.s_exact * w,
            GradientSource::Quadratic(target) => (&self.s_exact * (theta - target)) * 2.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// `θ_0, …, θ_K`.
    pub thetas: Vec<Col<f64>>,
    /// `Δθ_0, …, Δθ_{K−1}`.
    pub deltas: Vec<Col<f64>>,
    /// `η_0, …, η_{K−1}`.
    pub etas: Vec<f64>,
}

/// Iterates `Δθ_k = (λI + S_k)⁻¹(λμΔθ_{k−1} − ½g_k)`, `θ_{k+1} = θ_k + η_kΔθ_k`
/// for `k < K`, adding the kernel excitation to `Δθ_0`.
pub fn run_fixed_spring<R: Rng + ?Sized>(
    problem: &FixedKernelProblem,
    mu: f64,
    schedule: StepSchedule,
    theta0: Col<f64>,
    iterations: usize,
    mode: Mode,
    rng: &mut R,
) -> Result<Trajectory> {
    if iterations < 2 {
        return Err(VmcError::InvalidArgument("need at least two iterations".into()));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(VmcError::InvalidArgument(format!("μ must lie in [0, 1], got {mu}")));
    }
    let n_p = problem.n_params();
    let lambda = problem.lambda;
    let full_factor: Option<Llt<f64>> = match mode {
        Mode::FullBatch => Some(spd_factor(shifted(problem.s_exact.as_ref(), lambda).as_ref())?),
        Mode::Sampled { n_samples } if n_samples < 2 => {
            return Err(VmcError::InvalidArgument("need at least two samples".into()))
        }
        Mode::Sampled { .. } => None,
    };

    let mut thetas = Vec::with_capacity(iterations + 1);
    let mut deltas: Vec<Col<f64>> = Vec::with_capacity(iterations);
    let mut etas = Vec::with_capacity(iterations);
    let mut theta = theta0;
    let mut prev = Col::<f64>::zeros(n_p);
    for k in 0..iterations {
        let mut delta = match (&full_factor, mode) {
            (Some(llt), _) => {
                let g = problem.exact_gradient(&theta);
                let rhs = &prev * (lambda * mu) - g * 0.5;
                llt.solve(&rhs)
            }
            (None, Mode::Sampled { n_samples }) => {
                let scores = problem.construction.sample_scores(&theta, n_samples, rng);
                let energies = (0..n_samples).map(|_| StandardNormal.sample(rng)).collect();
                let batch = SampleBatch::from_scores(scores, energies, None)?;
                spring_direction(&batch, &prev, lambda, mu, true)?
            }
            (None, Mode::FullBatch) => unreachable!("full-batch mode always has a factor"),
        };
        if k == 0 {
            delta += &problem.delta0_kernel;
        }
        let eta = schedule.step_size(k);
        if !(eta > 0.0) {
            return Err(VmcError::InvalidArgument(format!("nonpositive step size at k = {k}")));
        }
        let next = &theta + &delta * eta;
        thetas.push(theta);
        theta = next;
        etas.push(eta);
        prev = delta.clone();
        deltas.push(delta);
    }
    thetas.push(theta);
    Ok(Trajectory {
        thetas,
        deltas,
        etas,
    })
}

/// One row of the divergence series, measured relative to `θ_1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceRow {
    pub k: usize,
    pub eta_k: f64,
    /// `Σ_{m=1}^{k−1} η_m`.
    pub partial_sum: f64,
    /// `‖P_K(θ_k − θ_1)‖`.
    pub kernel_norm: f64,
    /// `‖(I − P_K)(θ_k − θ_1)‖`.
    pub range_norm: f64,
    /// `kernel_norm / partial_sum`, absent while the partial sum is zero.
    pub ratio: Option<f64>,
}

/// Rows for `k = 1, …, K`, or every `stride`-th `k` plus the last.
pub fn divergence_report(
    trajectory: &Trajectory,
    projector: MatRef<'_, f64>,
    stride: usize,
) -> Vec<DivergenceRow> {
    let stride = stride.max(1);
    let big_k = trajectory.thetas.len() - 1;
    let theta1 = &trajectory.thetas[1];
    let mut rows = Vec::new();
    let mut partial = 0.0;
    for k in 1..=big_k {
        if k >= 2 {
            partial += trajectory.etas[k - 1];
        }
        if k % stride != 0 && k != 1 && k != big_k {
            continue;
        }
        let diff = &trajectory.thetas[k] - theta1;
        let kernel = projector * &diff;
        let range = &diff - &kernel;
        let kernel_norm = kernel.norm_l2();
        rows.push(DivergenceRow {
            k,
            eta_k: trajectory.etas.get(k).copied().unwrap_or(f64::NAN),
            partial_sum: partial,
            kernel_norm,
            range_norm: range.norm_l2(),
            ratio: (partial > 0.0).then(|| kernel_norm / partial),
        });
    }
    rows
}

pub const DIVERGENCE_HEADER: &str = "k,eta_k,partial_sum,kernel_norm,range_norm,ratio";

pub fn write_divergence_csv<W: Write>(out: &mut W, rows: &[DivergenceRow]) -> std::io::Result<()> {
    writeln!(out, "{DIVERGENCE_HEADER}")?;
    for r in rows {
        let eta = if r.eta_k.is_nan() { String::new() } else { format!("{:?}", r.eta_k) };
        let ratio = r.ratio.map(|v| format!("{v:?}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{:?},{:?},{:?},{}",
            r.k, eta, r.partial_sum, r.kernel_norm, r.range_norm, ratio
        )?;
    }
    Ok(())
}

/// Largest `‖P_KΔθ_k − μ^k P_KΔθ_0‖ / ‖P_KΔθ_0‖` over the trajectory.
pub fn kernel_recursion_error(trajectory: &Trajectory, projector: MatRef<'_, f64>, mu: f64) -> f64 {
    let first = projector * &trajectory.deltas[0];
    let scale = first.norm_l2();
    let mut worst = 0.0_f64;
    let mut factor = 1.0;
    for d in &trajectory.deltas {
        let err = (projector * d - &first * factor).norm_l2() / scale;
        worst = worst.max(err);
        factor *= mu;
    }
    worst
}

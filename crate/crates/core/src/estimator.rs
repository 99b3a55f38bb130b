//! Monte Carlo and full-batch estimators.
//!
//! Batch quantities use sample centering scaled by `1/√(N_s−1)`:
//! `O_i = (∇log|ψ(x_i)| − mean) / √(N_s−1)`, `Ē_i = (E_loc(x_i) − mean) / √(N_s−1)`,
//! so that `OOᵀ` is the sample covariance and `g(θ;B) = 2OĒ`.
//! Full-batch quantities are exact expectations under `π_θ` with population
//! centering.

use faer::{Col, Mat, MatRef};

use crate::error::{Result, VmcError};
use crate::hamiltonian::{local_energies_from_table, local_energy, LatticeModel};
use crate::linalg::gram;
use crate::sampler::probabilities_from_log;
use crate::spins::{config_from_index, index_of, SpinConfiguration};
use crate::wavefunction::Parameterized;

/// Enumeration bound for exact expectations.
pub const MAX_FULL_BATCH_SITES: usize = 14;

/// Replaces each `v` by `m + clamp(v − m, −n_std·s, n_std·s)`.
///
/// `m` is the mean and `s` the sample standard deviation (`1/(n−1)`).
pub fn clip_local_energies(values: &[f64], n_std: f64) -> Vec<f64> {
    let n = values.len();
    if n < 2 || n_std.is_infinite() {
        return values.to_vec();
    }
    let m = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
    let bound = n_std * var.sqrt();
    if bound == 0.0 || !bound.is_finite() {
        return values.to_vec();
    }
    values
        .iter()
        .map(|&v| {
            let d = v - m;
            if d.abs() <= bound {
                v
            } else {
                m + d.clamp(-bound, bound)
            }
        })
        .collect()
}

/// Centered, scaled Monte Carlo quantities of one batch.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    local_energies: Vec<f64>,
    energy_mean: f64,
    energy_variance: f64,
    o: Mat<f64>,
    ebar: Col<f64>,
    // (first column, multiplicity) for each distinct sample when known
    groups: Option<Vec<(usize, usize)>>,
}

impl SampleBatch {
    /// Builds a batch from raw (uncentered) score columns and local energies.
    ///
    /// When `clip_std` is set, `Ē` is built from clipped local energies;
    /// `energy_mean` always refers to the raw values.
    pub fn from_scores(
        scores: Mat<f64>,
        local_energies: Vec<f64>,
        clip_std: Option<f64>,
    ) -> Result<Self> {
        let n_s = local_energies.len();
        if n_s < 2 {
            return Err(VmcError::InvalidArgument(
                "a batch needs at least two samples".into(),
            ));
        }
        if scores.ncols() != n_s {
            return Err(VmcError::DimensionMismatch {
                expected: n_s,
                actual: scores.ncols(),
                context: "score columns",
            });
        }
        if local_energies.iter().any(|e| !e.is_finite()) {
            return Err(VmcError::NonFinite("local energy"));
        }
        let scale = 1.0 / ((n_s - 1) as f64).sqrt();
        let energy_mean = local_energies.iter().sum::<f64>() / n_s as f64;
        let energy_variance = local_energies
            .iter()
            .map(|e| (e - energy_mean) * (e - energy_mean))
            .sum::<f64>()
            / (n_s - 1) as f64;

        let clipped = match clip_std {
            Some(c) => clip_local_energies(&local_energies, c),
            None => local_energies.clone(),
        };
        let clipped_mean = clipped.iter().sum::<f64>() / n_s as f64;
        let ebar = Col::from_fn(n_s, |i| (clipped[i] - clipped_mean) * scale);

        let mut o = scores;
        let mean = (&o * Col::<f64>::ones(n_s)) * (1.0 / n_s as f64);
        for i in 0..n_s {
            let mut col = o.col_mut(i);
            col -= &mean;
            col *= scale;
        }
        Ok(Self {
            local_energies,
            energy_mean,
            energy_variance,
            o,
            ebar,
            groups: None,
        })
    }

    /// Records which columns come from identical samples, given one basis
    /// index per column. Only used to speed up [`SampleBatch::sr_matrix`].
    pub fn with_sample_ids(mut self, ids: &[usize]) -> Self {
        assert_eq!(ids.len(), self.n_samples(), "one id per sample");
        let mut first: std::collections::HashMap<usize, usize> = Default::default();
        let mut groups: Vec<(usize, usize)> = Vec::new();
        for (col, &id) in ids.iter().enumerate() {
            match first.get(&id) {
                Some(&g) => groups[g].1 += 1,
                None => {
                    first.insert(id, groups.len());
                    groups.push((col, 1));
                }
            }
        }
        self.groups = Some(groups);
        self
    }

    pub fn n_samples(&self) -> usize {
        self.ebar.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.o.nrows()
    }

    pub fn o(&self) -> MatRef<'_, f64> {
        self.o.as_ref()
    }

    pub fn ebar(&self) -> &Col<f64> {
        &self.ebar
    }

    /// Raw local energies, before any clipping.
    pub fn local_energies(&self) -> &[f64] {
        &self.local_energies
    }

    /// Raw batch mean of the local energy.
    pub fn energy_mean(&self) -> f64 {
        self.energy_mean
    }

    pub fn energy_variance(&self) -> f64 {
        self.energy_variance
    }

    /// Number of distinct samples if known, else `N_s`.
    pub fn n_distinct(&self) -> usize {
        self.groups.as_ref().map_or(self.n_samples(), Vec::len)
    }

    /// `S(θ;B) = OOᵀ`, merging identical columns when sample ids are known.
    pub fn sr_matrix(&self) -> Mat<f64> {
        match &self.groups {
            Some(groups) if groups.len() < self.n_samples() => {
                let mut m = Mat::<f64>::zeros(self.n_params(), groups.len());
                for (j, &(col, count)) in groups.iter().enumerate() {
                    let mut dst = m.col_mut(j);
                    dst.copy_from(self.o.col(col));
                    dst *= (count as f64).sqrt();
                }
                gram(m.as_ref())
            }
            _ => gram(self.o.as_ref()),
        }
    }

    /// `T = OᵀO`.
    pub fn sample_gram(&self) -> Mat<f64> {
        gram(self.o.transpose())
    }

    /// `OĒ`, i.e. half the gradient estimate.
    pub fn o_ebar(&self) -> Col<f64> {
        &self.o * &self.ebar
    }
}

/// `g(θ;B) = 2OĒ`.
pub fn gradient_estimate(batch: &SampleBatch) -> Col<f64> {
    batch.o_ebar() * 2.0
}

fn check_sizes<P: Parameterized + ?Sized>(model: &LatticeModel, psi: &P) -> Result<()> {
    if psi.n_sites() != model.n_sites() {
        return Err(VmcError::DimensionMismatch {
            expected: model.n_sites(),
            actual: psi.n_sites(),
            context: "wavefunction sites",
        });
    }
    Ok(())
}

/// Computes local energies and scores for `samples` and assembles the batch.
pub fn build_batch<P: Parameterized + ?Sized>(
    model: &LatticeModel,
    psi: &P,
    samples: &[SpinConfiguration],
    clip_std: Option<f64>,
) -> Result<SampleBatch> {
    check_sizes(model, psi)?;
    if samples.len() < 2 {
        return Err(VmcError::InvalidArgument(
            "a batch needs at least two samples".into(),
        ));
    }
    let n_p = psi.n_params();
    let mut scores = Mat::<f64>::zeros(n_p, samples.len());
    let mut grad = vec![0.0; n_p];
    let mut energies = Vec::with_capacity(samples.len());
    for (i, x) in samples.iter().enumerate() {
        energies.push(local_energy(model, psi, x)?);
        psi.grad_log_abs_psi_into(x, &mut grad);
        for (r, g) in grad.iter().enumerate() {
            scores[(r, i)] = *g;
        }
    }
    let batch = SampleBatch::from_scores(scores, energies, clip_std)?;
    if model.n_sites() < usize::BITS as usize {
        let ids: Vec<usize> = samples.iter().map(|x| index_of(x)).collect();
        Ok(batch.with_sample_ids(&ids))
    } else {
        Ok(batch)
    }
}

/// Exact `L(θ)`, `g(θ)` and `S(θ)`.
#[derive(Clone, Debug)]
pub struct FullBatchQuantities {
    pub energy: f64,
    pub gradient: Col<f64>,
    pub sr_matrix: Mat<f64>,
}

/// Everything about `ψ_θ` on the full basis: probabilities, local energies
/// and raw scores of all `2^N` states.
#[derive(Clone, Debug)]
pub struct Enumeration {
    n_sites: usize,
    probabilities: Vec<f64>,
    local_energies: Vec<f64>,
    scores: Mat<f64>,
}

impl Enumeration {
    pub fn new<P: Parameterized + ?Sized>(model: &LatticeModel, psi: &P) -> Result<Self> {
        check_sizes(model, psi)?;
        let n = model.n_sites();
        if n > MAX_FULL_BATCH_SITES {
            return Err(VmcError::TooLarge {
                operation: "full-batch enumeration",
                n_sites: n,
                limit: MAX_FULL_BATCH_SITES,
            });
        }
        let dim = 1usize << n;
        let n_p = psi.n_params();
        let mut log_abs = Vec::with_capacity(dim);
        let mut signs = Vec::with_capacity(dim);
        let mut scores = Mat::<f64>::zeros(n_p, dim);
        let mut grad = vec![0.0; n_p];
        for idx in 0..dim {
            let x = config_from_index(idx, n);
            log_abs.push(psi.log_abs_and_grad_into(&x, &mut grad));
            signs.push(psi.sign(&x));
            scores
                .col_mut(idx)
                .copy_from(faer::ColRef::from_slice(&grad));
        }
        let probabilities = probabilities_from_log(&log_abs)?;
        let local_energies = local_energies_from_table(model, &log_abs, Some(&signs))?;
        Ok(Self {
            n_sites: n,
            probabilities,
            local_energies,
            scores,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Local energy per basis state (`NaN` where `ψ = 0`).
    pub fn local_energies(&self) -> &[f64] {
        &self.local_energies
    }

    /// Raw scores `∇log|ψ|`, one column per basis state.
    pub fn scores(&self) -> MatRef<'_, f64> {
        self.scores.as_ref()
    }

    fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probabilities
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, p)| p > 0.0)
    }

    pub fn energy(&self) -> f64 {
        self.support().map(|(i, p)| p * self.local_energies[i]).sum()
    }

    fn weights(&self, f: impl Fn(usize, f64) -> f64) -> Col<f64> {
        Col::from_fn(self.probabilities.len(), |i| {
            let p = self.probabilities[i];
            if p > 0.0 {
                f(i, p)
            } else {
                0.0
            }
        })
    }

    fn mean_score(&self) -> Col<f64> {
        &self.scores * self.weights(|_, p| p)
    }

    /// Columns `√p(x)·(O(x) − E[O])`, so that `S(θ) = MMᵀ`.
    pub fn weighted_centered_scores(&self) -> Mat<f64> {
        let mean = self.mean_score();
        let support: Vec<(usize, f64)> = self.support().collect();
        let mut m = Mat::<f64>::zeros(self.scores.nrows(), support.len());
        for (j, &(i, p)) in support.iter().enumerate() {
            let mut col = m.col_mut(j);
            col.copy_from(self.scores.col(i) - &mean);
            col *= p.sqrt();
        }
        m
    }

    /// `g(θ) = 2E[(E_loc − L)(O − E[O])]`.
    pub fn gradient(&self) -> Col<f64> {
        // the weights p(E_loc − L) sum to zero, so centering O is implicit
        let energy = self.energy();
        let w = self.weights(|i, p| 2.0 * p * (self.local_energies[i] - energy));
        &self.scores * w
    }

    pub fn sr_matrix(&self) -> Mat<f64> {
        gram(self.weighted_centered_scores().as_ref())
    }

    pub fn quantities(&self) -> FullBatchQuantities {
        FullBatchQuantities {
            energy: self.energy(),
            gradient: self.gradient(),
            sr_matrix: self.sr_matrix(),
        }
    }

    /// Batch for samples given as basis indices, without re-evaluating `ψ`.
    pub fn batch(&self, indices: &[usize], clip_std: Option<f64>) -> Result<SampleBatch> {
        let mut scores = Mat::<f64>::zeros(self.scores.nrows(), indices.len());
        for (j, &i) in indices.iter().enumerate() {
            scores.col_mut(j).copy_from(self.scores.col(i));
        }
        let energies = indices.iter().map(|&i| self.local_energies[i]).collect();
        Ok(SampleBatch::from_scores(scores, energies, clip_std)?.with_sample_ids(indices))
    }
}

/// Exact expectations over the enumerated `π_θ`.
pub fn full_batch_quantities<P: Parameterized + ?Sized>(
    model: &LatticeModel,
    psi: &P,
) -> Result<FullBatchQuantities> {
    Ok(Enumeration::new(model, psi)?.quantities())
}

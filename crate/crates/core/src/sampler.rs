//! Configuration samplers for `π_θ ∝ |ψ_θ|²`.
//!
//! * direct: exact enumeration of all `2^N` states, then i.i.d. inverse-CDF
//!   draws (with replacement),
//! * Metropolis: independent single-spin-flip walkers, one per sample slot,
//!   each owning a private ChaCha stream derived from `(seed, walker)`,
//! * Gaussian: draws `Aθ + Lz` for the continuous counterexample.

use faer::Col;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VmcError};
use crate::spins::{config_from_index, enumerate_configs, SpinConfiguration};
use crate::wavefunction::{GaussianShiftAnsatz, Wavefunction};

/// Enumeration bound for direct sampling.
pub const MAX_DIRECT_SITES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMode {
    Direct,
    Metropolis,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub mode: SamplerMode,
    pub n_samples: usize,
    pub burn_in: usize,
    pub steps_between: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            mode: SamplerMode::Metropolis,
            n_samples: 1000,
            burn_in: 3000,
            steps_between: 10,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self, n_sites: usize) -> Result<()> {
        if self.n_samples < 2 {
            return Err(VmcError::InvalidArgument(
                "n_samples must be at least 2".into(),
            ));
        }
        if self.steps_between == 0 {
            return Err(VmcError::InvalidArgument(
                "steps_between must be positive".into(),
            ));
        }
        if self.mode == SamplerMode::Direct && n_sites > MAX_DIRECT_SITES {
            return Err(VmcError::TooLarge {
                operation: "direct sampling",
                n_sites,
                limit: MAX_DIRECT_SITES,
            });
        }
        Ok(())
    }
}

/// Normalized `|ψ|²` over the basis, computed with a max-shift.
pub fn probabilities_from_log(log_abs: &[f64]) -> Result<Vec<f64>> {
    let max = log_abs
        .iter()
        .copied()
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(VmcError::ZeroWavefunction);
    }
    if !max.is_finite() {
        return Err(VmcError::NonFinite("log amplitude"));
    }
    let mut p: Vec<f64> = log_abs.iter().map(|&l| (2.0 * (l - max)).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    Ok(p)
}

/// Inverse-CDF sampler over basis indices.
#[derive(Clone, Debug)]
pub struct DirectSampler {
    n_sites: usize,
    probabilities: Vec<f64>,
    cdf: Vec<f64>,
}

impl DirectSampler {
    pub fn from_log_table(n_sites: usize, log_abs: &[f64]) -> Result<Self> {
        Self::check_size(n_sites, log_abs.len(), "log-amplitude table")?;
        Self::from_probabilities(n_sites, probabilities_from_log(log_abs)?)
    }

    /// From normalized basis probabilities (index order of [`config_from_index`]).
    pub fn from_probabilities(n_sites: usize, probabilities: Vec<f64>) -> Result<Self> {
        Self::check_size(n_sites, probabilities.len(), "probability table")?;
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(VmcError::NonFinite("probability"));
        }
        let mut acc = 0.0;
        let cdf: Vec<f64> = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if !(acc > 0.0) {
            return Err(VmcError::ZeroWavefunction);
        }
        Ok(Self {
            n_sites,
            probabilities,
            cdf,
        })
    }

    fn check_size(n_sites: usize, len: usize, context: &'static str) -> Result<()> {
        if n_sites > MAX_DIRECT_SITES {
            return Err(VmcError::TooLarge {
                operation: "direct sampling",
                n_sites,
                limit: MAX_DIRECT_SITES,
            });
        }
        if len != 1usize << n_sites {
            return Err(VmcError::DimensionMismatch {
                expected: 1 << n_sites,
                actual: len,
                context,
            });
        }
        Ok(())
    }

    pub fn new<W: Wavefunction + ?Sized>(psi: &W) -> Result<Self> {
        let n = psi.n_sites();
        if n > MAX_DIRECT_SITES {
            return Err(VmcError::TooLarge {
                operation: "direct sampling",
                n_sites: n,
                limit: MAX_DIRECT_SITES,
            });
        }
        let table: Vec<f64> = enumerate_configs(n).map(|x| psi.log_abs_psi(&x)).collect();
        Self::from_log_table(n, &table)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().expect("nonempty basis");
        let u = rng.random::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u);
        // guard against round-off at the top of the CDF
        let mut idx = idx.min(self.cdf.len() - 1);
        while self.probabilities[idx] == 0.0 && idx > 0 {
            idx -= 1;
        }
        idx
    }

    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        (0..n).map(|_| self.sample_index(rng)).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<SpinConfiguration> {
        self.sample_indices(n, rng)
            .into_iter()
            .map(|i| config_from_index(i, self.n_sites))
            .collect()
    }
}

/// Draws `n` i.i.d. configurations from `|ψ|²` by exact enumeration.
pub fn direct_sample<W: Wavefunction + ?Sized, R: Rng + ?Sized>(
    psi: &W,
    n: usize,
    rng: &mut R,
) -> Result<Vec<SpinConfiguration>> {
    Ok(DirectSampler::new(psi)?.sample(n, rng))
}

/// Metropolis acceptance probability for a move `x → x'` given log amplitudes.
pub fn acceptance_probability(log_current: f64, log_proposed: f64) -> f64 {
    if log_proposed == f64::NEG_INFINITY {
        return 0.0;
    }
    if log_current == f64::NEG_INFINITY {
        return 1.0;
    }
    (2.0 * (log_proposed - log_current)).exp().min(1.0)
}

/// Runs `n_steps` single-spin-flip Metropolis updates from `current`.
///
/// Returns the final configuration and the number of accepted proposals.
pub fn metropolis_sample<W: Wavefunction + ?Sized, R: Rng + ?Sized>(
    psi: &W,
    current: &[i8],
    n_steps: usize,
    rng: &mut R,
) -> (SpinConfiguration, usize) {
    let mut x = current.to_vec();
    let mut log_x = psi.log_abs_psi(&x);
    let mut accepted = 0;
    for _ in 0..n_steps {
        let site = rng.random_range(0..x.len());
        x[site] = -x[site];
        let log_new = psi.log_abs_psi(&x);
        let p = acceptance_probability(log_x, log_new);
        if p >= 1.0 || rng.random::<f64>() < p {
            log_x = log_new;
            accepted += 1;
        } else {
            x[site] = -x[site];
        }
    }
    (x, accepted)
}

/// `N_s` independent Metropolis walkers.
#[derive(Clone, Debug)]
pub struct MetropolisWalkers {
    configs: Vec<SpinConfiguration>,
    rngs: Vec<ChaCha8Rng>,
    proposals: u64,
    accepted: u64,
}

impl MetropolisWalkers {
    /// Uniformly random starting configurations, one stream per walker.
    pub fn new(n_sites: usize, n_walkers: usize, seed: u64) -> Self {
        let mut rngs: Vec<ChaCha8Rng> = (0..n_walkers)
            .map(|w| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(w as u64 + 1);
                rng
            })
            .collect();
        let configs = rngs
            .iter_mut()
            .map(|rng| {
                (0..n_sites)
                    .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                    .collect()
            })
            .collect();
        Self {
            configs,
            rngs,
            proposals: 0,
            accepted: 0,
        }
    }

    pub fn advance<W: Wavefunction + ?Sized>(&mut self, psi: &W, n_steps: usize) {
        for (x, rng) in self.configs.iter_mut().zip(&mut self.rngs) {
            let (next, acc) = metropolis_sample(psi, x, n_steps, rng);
            *x = next;
            self.accepted += acc as u64;
            self.proposals += n_steps as u64;
        }
    }

    pub fn configs(&self) -> &[SpinConfiguration] {
        &self.configs
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// `n` i.i.d. draws from `N(Aθ, Σ)`.
pub fn gaussian_sample<R: Rng + ?Sized>(
    ansatz: &GaussianShiftAnsatz,
    theta: &Col<f64>,
    n: usize,
    rng: &mut R,
) -> Vec<Col<f64>> {
    let mean = ansatz.mean(theta);
    let l = ansatz.cholesky_lower();
    let d = ansatz.dim();
    (0..n)
        .map(|_| {
            let z = Col::<f64>::from_fn(d, |_| StandardNormal.sample(rng));
            &mean + l * &z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spins::index_of;
    use crate::wavefunction::{Rbm, TableWavefunction, UniformWavefunction};
    use faer::Mat;

    #[test]
    fn uniform_direct_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 4000;
        let samples = direct_sample(&UniformWavefunction::new(2), n, &mut rng).unwrap();
        let mut counts = [0usize; 4];
        for x in &samples {
            counts[index_of(x)] += 1;
        }
        let tol = 4.0 / (n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() <= tol);
        }
    }

    #[test]
    fn point_mass_always_sampled() {
        let mut amps = vec![0.0; 8];
        amps[5] = -0.3;
        let psi = TableWavefunction::from_amplitudes(3, &amps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for x in direct_sample(&psi, 500, &mut rng).unwrap() {
            assert_eq!(index_of(&x), 5);
        }
    }

    #[test]
    fn direct_sampling_limits() {
        let psi = UniformWavefunction::new(21);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            direct_sample(&psi, 1, &mut rng),
            Err(VmcError::TooLarge { .. })
        ));
        let zero = TableWavefunction::from_log_abs(1, vec![f64::NEG_INFINITY; 2]).unwrap();
        assert!(matches!(
            direct_sample(&zero, 1, &mut rng),
            Err(VmcError::ZeroWavefunction)
        ));
    }

    #[test]
    fn seeds_reproduce_batches() {
        let rbm = Rbm::new(6, 12);
        let theta = rbm.random_parameters(0.5, &mut ChaCha8Rng::seed_from_u64(9));
        let psi = rbm.bind(&theta).unwrap();
        let a = direct_sample(&psi, 100, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = direct_sample(&psi, 100, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        let mut w1 = MetropolisWalkers::new(6, 10, 3);
        let mut w2 = MetropolisWalkers::new(6, 10, 3);
        w1.advance(&psi, 50);
        w2.advance(&psi, 50);
        assert_eq!(w1.configs(), w2.configs());
    }

    #[test]
    fn flat_target_accepts_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, accepted) = metropolis_sample(&UniformWavefunction::new(5), &[1; 5], 200, &mut rng);
        assert_eq!(accepted, 200);
    }

    #[test]
    fn node_proposals_are_rejected() {
        assert_eq!(acceptance_probability(0.0, f64::NEG_INFINITY), 0.0);
        assert_eq!(acceptance_probability(f64::NEG_INFINITY, -3.0), 1.0);
        // point mass at all-up: every flip lands on a node
        let mut amps = vec![0.0; 8];
        amps[0] = 1.0;
        let psi = TableWavefunction::from_amplitudes(3, &amps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (x, accepted) = metropolis_sample(&psi, &[1, 1, 1], 100, &mut rng);
        assert_eq!(accepted, 0);
        assert_eq!(x, vec![1, 1, 1]);
    }

    #[test]
    fn metropolis_detailed_balance_smoke() {
        let rbm = Rbm::new(4, 8);
        let theta = rbm.random_parameters(0.6, &mut ChaCha8Rng::seed_from_u64(21));
        let psi = rbm.bind(&theta).unwrap();
        let exact = DirectSampler::new(&psi).unwrap().probabilities().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut x = vec![1i8; 4];
        let mut counts = [0usize; 16];
        let steps = 1_000_000;
        for _ in 0..steps {
            x = metropolis_sample(&psi, &x, 1, &mut rng).0;
            counts[index_of(&x)] += 1;
        }
        let tv: f64 = counts
            .iter()
            .zip(&exact)
            .map(|(&c, &p)| (c as f64 / steps as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 0.02, "total variation {tv}");
    }

    #[test]
    fn standard_normal_mean() {
        let a = Mat::from_fn(3, 4, |i, j| if i == j && i < 2 { 1.0 } else { 0.0 });
        let g = GaussianShiftAnsatz::new(a, Mat::identity(3, 3)).unwrap();
        let n = 20_000;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let xs = gaussian_sample(&g, &Col::zeros(4), n, &mut rng);
        for c in 0..3 {
            let mean = xs.iter().map(|x| x[c]).sum::<f64>() / n as f64;
            assert!(mean.abs() <= 5.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn sample_covariance_matches_sigma() {
        let a = Mat::from_fn(2, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let sigma = Mat::from_fn(2, 2, |i, j| [[2.0, 0.5], [0.5, 1.0]][i][j]);
        let g = GaussianShiftAnsatz::new(a, sigma.clone()).unwrap();
        let theta = Col::from_fn(3, |i| i as f64);
        let n = 50_000;
        let xs = gaussian_sample(&g, &theta, n, &mut ChaCha8Rng::seed_from_u64(7));
        let mean = g.mean(&theta);
        let mut cov = Mat::<f64>::zeros(2, 2);
        for x in &xs {
            let r = x - &mean;
            cov += (&r * r.transpose()) * (1.0 / n as f64);
        }
        assert!((&cov - &sigma).norm_l2() <= 10.0 * 2.0 / (n as f64).sqrt());
    }

    #[test]
    fn zero_map_ignores_theta() {
        // rank condition forbids A = 0, so use a map whose range misses θ's support
        let a = Mat::from_fn(2, 3, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 });
        let g = GaussianShiftAnsatz::new(a, Mat::identity(2, 2)).unwrap();
        let t1 = Col::from_fn(3, |i| if i == 0 { 0.0 } else { 5.0 });
        let t2 = Col::from_fn(3, |i| if i == 0 { 0.0 } else { -3.0 });
        let x1 = gaussian_sample(&g, &t1, 10, &mut ChaCha8Rng::seed_from_u64(1));
        let x2 = gaussian_sample(&g, &t2, 10, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(x1, x2);
    }
}

//! Optimization runs on lattice models: configuration, the iteration loop and
//! per-iteration records.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VmcError};
use crate::estimator::{build_batch, gradient_estimate, Enumeration, SampleBatch, MAX_FULL_BATCH_SITES};
use crate::hamiltonian::{Geometry, LatticeModel, ModelKind};
use crate::linalg::{col_from_slice, col_to_vec};
use crate::optimizer::{
    apply_update, full_spring_direction, minsr_direction, sgd_direction, spring_direction_auto,
    sr_direction, OptimizerKind, OptimizerState, StepSchedule,
};
use crate::prime::{full_batch_dimension, prime_step, spectral_snapshot, Indicators, PrimeState};
use crate::sampler::{DirectSampler, MetropolisWalkers, SamplerConfig, SamplerMode};
use crate::wavefunction::Rbm;

/// Largest system for which full-batch gradient norms may be recorded.
pub const MAX_FULL_GRAD_SITES: usize = 12;

/// Slack on the applied step norm check.
pub const STEP_NORM_SLACK: f64 = 1e-12;

/// Flat run configuration. Every key has a default.
///
/// `norm_constraint = 0` disables the norm constraint and `clip_std = 0`
/// disables local-energy clipping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kind: ModelKind,
    pub geometry: Geometry,
    pub length: usize,
    pub periodic: bool,
    pub h: f64,
    /// Defaults to `true` on bipartite Heisenberg lattices.
    pub marshall_sign: Option<bool>,

    pub density: usize,
    pub init_scale: f64,
    pub init_seed: u64,

    pub sampler: SamplerMode,
    pub n_samples: usize,
    pub burn_in: usize,
    pub steps_between: usize,
    pub seed: u64,

    pub optimizer: OptimizerKind,
    pub lambda: f64,
    pub mu: f64,
    pub eta0: f64,
    pub c: f64,
    pub norm_constraint: f64,
    pub clip_std: f64,

    pub iterations: usize,
    pub record_every: usize,
    pub full_grad: bool,
    /// Record `α_k`, `β̃_k`, `r_k` for optimizers other than PRIME-SR.
    pub indicators: bool,
    pub record_timing: bool,
    pub smoothing_window: usize,
    pub output: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Tfi,
            geometry: Geometry::Chain,
            length: 10,
            periodic: true,
            h: 1.0,
            marshall_sign: None,
            density: crate::wavefunction::DEFAULT_DENSITY,
            init_scale: crate::wavefunction::DEFAULT_INIT_SCALE,
            init_seed: 0,
            sampler: SamplerMode::Direct,
            n_samples: 1000,
            burn_in: 3000,
            steps_between: 10,
            seed: 0,
            optimizer: OptimizerKind::Spring,
            lambda: 1e-3,
            mu: 0.99,
            eta0: 0.02,
            c: 1e-4,
            norm_constraint: 1e-3,
            clip_std: 5.0,
            iterations: 1000,
            record_every: 1,
            full_grad: false,
            indicators: false,
            record_timing: false,
            smoothing_window: 100,
            output: "runs/run".into(),
        }
    }
}

impl RunConfig {
    pub fn model(&self) -> Result<LatticeModel> {
        let marshall = self.resolved_marshall_sign();
        LatticeModel::new(self.kind, self.geometry, self.length, self.periodic, self.h, marshall)
    }

    fn resolved_marshall_sign(&self) -> bool {
        self.marshall_sign.unwrap_or_else(|| {
            self.kind == ModelKind::Heisenberg
                && LatticeModel::new(self.kind, self.geometry, self.length, self.periodic, self.h, false)
                    .is_ok_and(|m| m.is_bipartite())
        })
    }

    /// Copy with every optional key filled in.
    pub fn resolved(&self) -> Self {
        Self {
            marshall_sign: Some(self.model().map(|m| m.marshall_sign()).unwrap_or(false)),
            ..self.clone()
        }
    }

    pub fn norm_c(&self) -> Option<f64> {
        (self.norm_constraint > 0.0).then_some(self.norm_constraint)
    }

    pub fn clip(&self) -> Option<f64> {
        (self.clip_std > 0.0).then_some(self.clip_std)
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            mode: self.sampler,
            n_samples: self.n_samples,
            burn_in: self.burn_in,
            steps_between: self.steps_between,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(VmcError::InvalidArgument(msg));
        let model = self.model()?;
        let n = model.n_sites();
        if self.density == 0 {
            return invalid("density must be positive".into());
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return invalid(format!("init_scale must be finite and nonnegative, got {}", self.init_scale));
        }
        if self.iterations == 0 {
            return invalid("iterations must be positive".into());
        }
        if self.record_every == 0 {
            return invalid("record_every must be positive".into());
        }
        if self.smoothing_window == 0 {
            return invalid("smoothing_window must be positive".into());
        }
        if !(self.norm_constraint >= 0.0 && self.norm_constraint.is_finite()) {
            return invalid(format!("norm_constraint must be finite and nonnegative, got {}", self.norm_constraint));
        }
        if !(self.clip_std >= 0.0 && self.clip_std.is_finite()) {
            return invalid(format!("clip_std must be finite and nonnegative, got {}", self.clip_std));
        }
        StepSchedule::new(self.eta0, self.c)?;
        OptimizerState::new(0, self.lambda, self.mu, StepSchedule::new(self.eta0, self.c)?, self.norm_c())?;
        if self.full_grad && n > MAX_FULL_GRAD_SITES {
            return Err(VmcError::TooLarge {
                operation: "full-batch gradient recording",
                n_sites: n,
                limit: MAX_FULL_GRAD_SITES,
            });
        }
        if self.optimizer == OptimizerKind::Fspring {
            if n > MAX_FULL_BATCH_SITES {
                return Err(VmcError::TooLarge {
                    operation: "F-SPRING",
                    n_sites: n,
                    limit: MAX_FULL_BATCH_SITES,
                });
            }
        } else {
            self.sampler_config().validate(n)?;
        }
        Ok(())
    }
}

/// One row of `records.csv`. Absent metrics are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub k: usize,
    pub energy: f64,
    pub energy_variance: f64,
    pub grad_norm: f64,
    pub full_grad_norm: Option<f64>,
    pub mu_k: Option<f64>,
    pub alpha_k: Option<f64>,
    pub beta_k: Option<f64>,
    pub rank_k: Option<usize>,
    pub delta_norm: f64,
    pub step_norm: f64,
    pub eta_k: f64,
    pub wall_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunFailure {
    pub iteration: usize,
    pub error: VmcError,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    pub failure: Option<RunFailure>,
}

/// A run in progress: parameters, optimizer memory and sampler state.
pub struct Experiment {
    config: RunConfig,
    model: LatticeModel,
    rbm: Rbm,
    theta: Vec<f64>,
    state: OptimizerState,
    prime: PrimeState,
    walkers: Option<MetropolisWalkers>,
    rng: ChaCha8Rng,
    started: Instant,
}

impl Experiment {
    /// Validates `config` and draws initial parameters from `init_seed`.
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let n = config.model()?.n_sites();
        let rbm = Rbm::with_density(n, config.density);
        let mut init_rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let theta = rbm.random_parameters(config.init_scale, &mut init_rng);
        Self::with_parameters(config, theta)
    }

    pub fn with_parameters(config: RunConfig, theta: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let model = config.model()?;
        let n = model.n_sites();
        let rbm = Rbm::with_density(n, config.density);
        if theta.len() != rbm.n_params() {
            return Err(VmcError::DimensionMismatch {
                expected: rbm.n_params(),
                actual: theta.len(),
                context: "initial parameters",
            });
        }
        let schedule = StepSchedule::new(config.eta0, config.c)?;
        let state = OptimizerState::new(rbm.n_params(), config.lambda, config.mu, schedule, config.norm_c())?;
        let walkers = (config.sampler == SamplerMode::Metropolis && config.optimizer != OptimizerKind::Fspring)
            .then(|| MetropolisWalkers::new(n, config.n_samples, config.seed));
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            model,
            rbm,
            theta,
            state,
            prime: PrimeState::new(),
            walkers,
            started: Instant::now(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn model(&self) -> &LatticeModel {
        &self.model
    }

    pub fn rbm(&self) -> Rbm {
        self.rbm
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Number of completed iterations.
    pub fn iteration(&self) -> usize {
        self.state.k
    }

    /// Runs the remaining iterations, calling `on_record` for every recorded one.
    ///
    /// A numerical failure stops the run; the records gathered so far are kept.
    pub fn run(&mut self, mut on_record: impl FnMut(&RunRecord)) -> RunOutcome {
        let mut records = Vec::new();
        while self.state.k < self.config.iterations {
            let k = self.state.k;
            match self.step() {
                Ok(record) => {
                    if k.is_multiple_of(self.config.record_every) {
                        on_record(&record);
                        records.push(record);
                    }
                }
                Err(error) => {
                    return RunOutcome {
                        records,
                        failure: Some(RunFailure { iteration: k, error }),
                    }
                }
            }
        }
        RunOutcome { records, failure: None }
    }

    /// One iteration: sample, estimate, solve, update. Returns the record for
    /// iteration `k` (metrics evaluated at `θ_k`).
    pub fn step(&mut self) -> Result<RunRecord> {
        let k = self.state.k;
        let eta = self.state.step_size();
        let cfg = &self.config;
        let n = self.model.n_sites();
        let psi = self.rbm.bind(&self.theta)?;
        let need_enum = cfg.optimizer == OptimizerKind::Fspring
            || cfg.full_grad
            || (cfg.sampler == SamplerMode::Direct && n <= MAX_FULL_BATCH_SITES);
        let en = if need_enum { Some(Enumeration::new(&self.model, &psi)?) } else { None };

        let mut indicators: Option<Indicators> = None;
        let mut mu_k = None;
        let (delta, energy, energy_variance, grad_norm, full_grad_norm) = if cfg.optimizer == OptimizerKind::Fspring {
            let en = en.as_ref().expect("enumeration for F-SPRING");
            let fbq = en.quantities();
            let delta = full_spring_direction(&fbq, &self.state.delta_prev, cfg.lambda, cfg.mu)?;
            if cfg.indicators {
                let (alpha, rank) = full_batch_dimension(fbq.sr_matrix.as_ref())?;
                indicators = Some(Indicators {
                    alpha,
                    alpha_prev: alpha,
                    rank,
                    beta: f64::NAN,
                    beta_left: f64::NAN,
                });
            }
            let variance = exact_variance(en.probabilities(), en.local_energies(), fbq.energy);
            let g = fbq.gradient.norm_l2();
            (delta, fbq.energy, variance, g, Some(g))
        } else {
            let batch = self.sample_batch(en.as_ref())?;
            let cfg = &self.config;
            let delta = match cfg.optimizer {
                OptimizerKind::Sgd => sgd_direction(&batch),
                OptimizerKind::Sr => sr_direction(&batch, cfg.lambda)?,
                OptimizerKind::Minsr => minsr_direction(&batch, cfg.lambda)?,
                OptimizerKind::Spring => spring_direction_auto(&batch, &self.state.delta_prev, cfg.lambda, cfg.mu)?,
                OptimizerKind::Prime => {
                    let step = prime_step(&batch, &mut self.prime, &self.state.delta_prev, cfg.lambda)?;
                    indicators = Some(step.indicators);
                    mu_k = Some(step.mu);
                    step.delta
                }
                OptimizerKind::Fspring => unreachable!(),
            };
            if cfg.indicators && indicators.is_none() {
                let snapshot = spectral_snapshot(&batch)?;
                indicators = Some(self.prime.observe(&snapshot)?);
            }
            if let Some(ind) = &indicators {
                ind.check_bounds(batch.n_samples(), k)?;
            }
            let full = match (&en, cfg.full_grad) {
                (Some(en), true) => Some(en.gradient().norm_l2()),
                _ => None,
            };
            (
                delta,
                batch.energy_mean(),
                batch.energy_variance(),
                gradient_estimate(&batch).norm_l2(),
                full,
            )
        };
        if let Some(mu) = mu_k {
            if !(0.0..=1.0).contains(&mu) {
                return Err(VmcError::BoundViolation {
                    iteration: k,
                    detail: format!("μ_k = {mu} outside [0, 1]"),
                });
            }
        }
        let delta_norm = delta.norm_l2();
        if !delta_norm.is_finite() {
            return Err(VmcError::NonFinite("update direction"));
        }
        let theta = col_from_slice(&self.theta);
        let (theta_next, step_norm) = apply_update(&theta, &delta, eta, self.config.norm_c());
        if let Some(c) = self.config.norm_c() {
            if step_norm > c.sqrt() + STEP_NORM_SLACK {
                return Err(VmcError::BoundViolation {
                    iteration: k,
                    detail: format!("applied step norm {step_norm} exceeds √C = {}", c.sqrt()),
                });
            }
        }
        self.theta = col_to_vec(theta_next.as_ref());
        self.state.advance(delta);

        let wall_ms = self
            .config
            .record_timing
            .then(|| self.started.elapsed().as_secs_f64() * 1e3);
        Ok(RunRecord {
            k,
            energy,
            energy_variance,
            grad_norm,
            full_grad_norm,
            mu_k,
            alpha_k: indicators.map(|i| i.alpha),
            beta_k: indicators.map(|i| i.beta).filter(|b| !b.is_nan()),
            rank_k: indicators.map(|i| i.rank),
            delta_norm,
            step_norm,
            eta_k: eta,
            wall_ms,
        })
    }

    fn sample_batch(&mut self, en: Option<&Enumeration>) -> Result<SampleBatch> {
        let clip = self.config.clip();
        let n_s = self.config.n_samples;
        let psi = self.rbm.bind(&self.theta)?;
        match self.config.sampler {
            SamplerMode::Direct => match en {
                Some(en) => {
                    let sampler = DirectSampler::from_probabilities(en.n_sites(), en.probabilities().to_vec())?;
                    let indices = sampler.sample_indices(n_s, &mut self.rng);
                    en.batch(&indices, clip)
                }
                None => {
                    let samples = DirectSampler::new(&psi)?.sample(n_s, &mut self.rng);
                    build_batch(&self.model, &psi, &samples, clip)
                }
            },
            SamplerMode::Metropolis => {
                let walkers = self.walkers.as_mut().expect("walkers for Metropolis sampling");
                let steps = if self.state.k == 0 {
                    self.config.burn_in.max(1)
                } else {
                    self.config.steps_between
                };
                walkers.advance(&psi, steps);
                build_batch(&self.model, &psi, walkers.configs(), clip)
            }
        }
    }
}

fn exact_variance(p: &[f64], e_loc: &[f64], mean: f64) -> f64 {
    p.iter().zip(e_loc).map(|(p, e)| p * (e - mean) * (e - mean)).sum()
}

/// Convenience wrapper: builds an [`Experiment`] and runs it to completion.
pub fn run_experiment(config: RunConfig) -> Result<RunOutcome> {
    Ok(Experiment::new(config)?.run(|_| {}))
}

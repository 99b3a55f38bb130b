//! End-to-end acceptance checks, one line per criterion.
//!
//! `cargo test --test acceptance` runs the quick criteria; criteria 7–10 take
//! tens of minutes each and only run with `-- --ignored` (or
//! `--include-ignored` for everything), preferably under `--release`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use vmc_core::analysis::{fit_sampling_floor, relative_energy_error, running_min};
use vmc_core::counterexample::{
    divergence_report, kernel_projector, kernel_recursion_error, run_fixed_spring, Construction,
    FixedKernelProblem, GradientSource, Mode,
};
use vmc_core::estimator::{gradient_estimate, Enumeration, SampleBatch};
use vmc_core::experiment::{Experiment, RunConfig, RunRecord, STEP_NORM_SLACK};
use vmc_core::faer::{Col, Mat, MatRef};
use vmc_core::hamiltonian::{exact_ground_state, LatticeModel, ModelKind};
use vmc_core::linalg::row_space_basis;
use vmc_core::optimizer::{spring_closed_form, spring_direction, OptimizerKind, StepSchedule};
use vmc_core::prime::{full_batch_dimension, BOUND_SLACK};
use vmc_core::sampler::{DirectSampler, SamplerMode};
use vmc_core::wavefunction::{GaussianShiftAnsatz, PhaseAnsatz, Rbm};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn randn(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_mat(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    Mat::from_fn(r, c, |_, _| randn(rng))
}

fn random_col(n: usize, rng: &mut ChaCha8Rng) -> Col<f64> {
    Col::from_fn(n, |_| randn(rng))
}

fn rel(a: &Col<f64>, b: &Col<f64>) -> f64 {
    (a - b).norm_l2() / b.norm_l2().max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------- 1

fn spring_forms_agree() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_closed: f64 = 0.0;
    let mut worst_stab: f64 = 0.0;
    for i in 0..50 {
        let n_p = rng.random_range(1..=60);
        let n_s = rng.random_range(2..=20);
        let lambda = [1e-3, 0.1][i % 2];
        let mu = [0.0, 0.5, 0.99][i % 3];
        let scores = random_mat(n_p, n_s, &mut rng);
        let energies: Vec<f64> = (0..n_s).map(|_| randn(&mut rng)).collect();
        let batch = SampleBatch::from_scores(scores, energies, None).unwrap();
        let prev = random_col(n_p, &mut rng);
        let smw = spring_direction(&batch, &prev, lambda, mu, true).unwrap();
        let plain = spring_direction(&batch, &prev, lambda, mu, false).unwrap();
        let closed = spring_closed_form(batch.o(), batch.ebar(), &prev, lambda, mu).unwrap();
        worst_closed = worst_closed.max(rel(&smw, &closed));
        worst_stab = worst_stab.max(rel(&plain, &smw));
    }
    verdict(
        worst_closed <= 1e-9 && worst_stab <= 1e-8,
        format!(
            "50 instances: SMW vs closed form max rel err {worst_closed:.2e} (tol 1e-9), \
             stabilized vs unstabilized {worst_stab:.2e} (tol 1e-8)"
        ),
    )
}

// ---------------------------------------------------------------- 2

fn estimators_unbiased() -> Verdict {
    let n = 6;
    let model = LatticeModel::tfi_chain(n, 1.0).unwrap();
    let rbm = Rbm::with_density(n, 1);
    let theta = rbm.random_parameters(0.3, &mut ChaCha8Rng::seed_from_u64(202));
    let psi = rbm.bind(&theta).unwrap();
    let en = Enumeration::new(&model, &psi).unwrap();
    let exact = en.quantities();
    let sampler = DirectSampler::from_probabilities(n, en.probabilities().to_vec()).unwrap();
    let n_p = rbm.n_params();
    let n_batches = 10_000;
    let n_s = 64;

    let mut rng = ChaCha8Rng::seed_from_u64(203);
    let mut g_sum = vec![0.0; n_p];
    let mut g_sq = vec![0.0; n_p];
    let mut s_sum = Mat::<f64>::zeros(n_p, n_p);
    let mut s_sq = Mat::<f64>::zeros(n_p, n_p);
    for _ in 0..n_batches {
        let batch = en.batch(&sampler.sample_indices(n_s, &mut rng), None).unwrap();
        let g = gradient_estimate(&batch);
        for p in 0..n_p {
            g_sum[p] += g[p];
            g_sq[p] += g[p] * g[p];
        }
        let s = batch.sr_matrix();
        for j in 0..n_p {
            for i in 0..=j {
                let v = s[(i, j)];
                s_sum[(i, j)] += v;
                s_sq[(i, j)] += v * v;
            }
        }
    }
    let m = n_batches as f64;
    let z = |sum: f64, sq: f64, truth: f64| {
        let mean = sum / m;
        let var = (sq / m - mean * mean).max(0.0) * m / (m - 1.0);
        let se = (var / m).sqrt();
        let dev = (mean - truth).abs();
        if se == 0.0 {
            if dev <= 1e-12 * truth.abs().max(1.0) { 0.0 } else { f64::INFINITY }
        } else {
            dev / se
        }
    };
    let mut worst_g: f64 = 0.0;
    for p in 0..n_p {
        worst_g = worst_g.max(z(g_sum[p], g_sq[p], exact.gradient[p]));
    }
    let mut worst_s: f64 = 0.0;
    for j in 0..n_p {
        for i in 0..=j {
            worst_s = worst_s.max(z(s_sum[(i, j)], s_sq[(i, j)], exact.sr_matrix[(i, j)]));
        }
    }
    verdict(
        worst_g <= 4.0 && worst_s <= 4.0,
        format!(
            "TFI N=6, N_p={n_p}, {n_batches} batches of {n_s}: max |z| of g {worst_g:.2}, \
             of OOᵀ {worst_s:.2} over {} entries (tol 4 standard errors)",
            n_p * (n_p + 1) / 2
        ),
    )
}

// ---------------------------------------------------------------- 3

fn kernel_residual(s: MatRef<'_, f64>, g: &Col<f64>) -> f64 {
    let basis = row_space_basis(s).unwrap();
    let in_range = &basis * (basis.transpose() * g);
    (g - &in_range).norm_l2() / g.norm_l2()
}

fn gradients_in_range() -> Verdict {
    let mut worst_full: f64 = 0.0;
    let mut worst_batch: f64 = 0.0;
    for seed in 0..5u64 {
        let n = 6;
        let model = if seed % 2 == 0 {
            LatticeModel::tfi_chain(n, 1.0).unwrap()
        } else {
            LatticeModel::heisenberg_chain(n, true).unwrap()
        };
        let rbm = Rbm::with_density(n, 2);
        let theta = rbm.random_parameters(0.3, &mut ChaCha8Rng::seed_from_u64(300 + seed));
        let en = Enumeration::new(&model, &rbm.bind(&theta).unwrap()).unwrap();
        let q = en.quantities();
        worst_full = worst_full.max(kernel_residual(q.sr_matrix.as_ref(), &q.gradient));
        let sampler = DirectSampler::from_probabilities(n, en.probabilities().to_vec()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(310 + seed);
        for _ in 0..4 {
            let b = en.batch(&sampler.sample_indices(16, &mut rng), None).unwrap();
            worst_batch = worst_batch.max(kernel_residual(b.sr_matrix().as_ref(), &gradient_estimate(&b)));
        }
    }
    verdict(
        worst_full <= 1e-10 && worst_batch <= 1e-10,
        format!(
            "kernel-projected relative norm: full batch {worst_full:.2e}, per batch {worst_batch:.2e} (tol 1e-10)"
        ),
    )
}

// ---------------------------------------------------------------- 4, 5

fn unit_kernel_vector(p: MatRef<'_, f64>, rng: &mut ChaCha8Rng) -> Col<f64> {
    let v = p * random_col(p.nrows(), rng);
    &v * (1.0 / v.norm_l2())
}

/// Kernel leakage per step is about ε‖S‖/λ and is not damped at μ = 1, so
/// instances are scaled to ‖S‖ = O(1).
fn unit_frobenius(a: Mat<f64>) -> Mat<f64> {
    let norm = a.norm_l2();
    a * (1.0 / norm)
}

fn gaussian_problem(seed: u64) -> FixedKernelProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = unit_frobenius(random_mat(3, 2, &mut rng) * random_mat(2, 6, &mut rng));
    let b = random_mat(3, 3, &mut rng);
    let sigma = &b * b.transpose() + Mat::<f64>::identity(3, 3);
    let v = unit_kernel_vector(kernel_projector(a.as_ref()).unwrap().as_ref(), &mut rng);
    let w = random_col(6, &mut rng);
    let g = GaussianShiftAnsatz::new(a, sigma).unwrap();
    FixedKernelProblem::new(Construction::Gaussian(g), GradientSource::Fixed(w), v, 1e-3).unwrap()
}

fn phase_problem(seed: u64) -> FixedKernelProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = unit_frobenius(random_mat(4, 3, &mut rng) * random_mat(3, 7, &mut rng));
    let v = unit_kernel_vector(kernel_projector(a.as_ref()).unwrap().as_ref(), &mut rng);
    let w = random_col(7, &mut rng);
    FixedKernelProblem::new(
        Construction::Phase(PhaseAnsatz::new(a).unwrap()),
        GradientSource::Quadratic(w),
        v,
        1e-3,
    )
    .unwrap()
}

fn kernel_recursion_exact() -> Verdict {
    let schedule = StepSchedule::new(0.02, 1e-4).unwrap();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for problem in [gaussian_problem(401), phase_problem(402)] {
        for mode in [Mode::FullBatch, Mode::Sampled { n_samples: 16 }] {
            for mu in [0.0, 0.5, 0.9, 0.99, 1.0] {
                let mut rng = ChaCha8Rng::seed_from_u64(403);
                let theta0 = Col::zeros(problem.n_params());
                let t = run_fixed_spring(&problem, mu, schedule, theta0, 1000, mode, &mut rng).unwrap();
                let err = kernel_recursion_error(&t, problem.projector(), mu);
                if err > worst {
                    worst = err;
                }
                cases += 1;
            }
        }
    }
    verdict(
        worst <= 1e-10,
        format!("{cases} trajectories of 1000 steps: max relative deviation from μ^k P_KΔθ₀ {worst:.2e} (tol 1e-10)"),
    )
}

fn momentum_dichotomy() -> Verdict {
    let schedule = StepSchedule::new(0.02, 1e-4).unwrap();
    let checkpoints = [1_000usize, 10_000, 100_000];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, problem) in [("gaussian", gaussian_problem(501)), ("phase", phase_problem(502))] {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let k_max = *checkpoints.last().unwrap();
        let theta0 = Col::zeros(problem.n_params());
        let t1 = run_fixed_spring(&problem, 1.0, schedule, theta0.clone(), k_max, Mode::FullBatch, &mut rng).unwrap();
        let rows = divergence_report(&t1, problem.projector(), 1000);
        let mut worst_ratio = f64::INFINITY;
        for &k in &checkpoints {
            let row = rows.iter().find(|r| r.k == k).unwrap();
            let ratio = row.kernel_norm / row.partial_sum;
            worst_ratio = worst_ratio.min(ratio);
            pass &= row.kernel_norm >= 0.9 * row.partial_sum;
        }
        let t2 = run_fixed_spring(&problem, 0.99, schedule, theta0, k_max, Mode::FullBatch, &mut rng).unwrap();
        let max_drift = divergence_report(&t2, problem.projector(), 1)
            .iter()
            .map(|r| r.kernel_norm)
            .fold(0.0, f64::max);
        pass &= max_drift <= 2.0;
        parts.push(format!(
            "{name}: μ=1 min ‖P_K(θ_K−θ₁)‖/Ση {worst_ratio:.6} (need ≥ 0.9), μ=0.99 max drift {max_drift:.4} (need ≤ 2)"
        ));
    }
    verdict(pass, format!("K ∈ {{1e3,1e4,1e5}}; {}", parts.join("; ")))
}

// ---------------------------------------------------------------- 6

fn lyapunov_descent() -> Verdict {
    let n = 8;
    let lambda = 1e-3;
    let model = LatticeModel::tfi_chain(n, 1.0).unwrap();
    let rbm = Rbm::with_density(n, 5);
    let base = RunConfig {
        length: n,
        optimizer: OptimizerKind::Fspring,
        lambda,
        c: 0.0,
        norm_constraint: 0.0,
        clip_std: 0.0,
        iterations: 2000,
        ..RunConfig::default()
    };
    let theta0 = Experiment::new(base.clone()).unwrap().theta().to_vec();

    // empirical Lipschitz constant of g on a cloud around the start point
    let grad = |theta: &[f64]| Enumeration::new(&model, &rbm.bind(theta).unwrap()).unwrap().gradient();
    let mut rng = ChaCha8Rng::seed_from_u64(601);
    let mut c_g: f64 = 0.0;
    for radius in [0.0, 0.05, 0.2, 0.5] {
        for _ in 0..10 {
            let centre: Vec<f64> = theta0.iter().map(|t| t + radius * randn(&mut rng)).collect();
            let dir = random_col(theta0.len(), &mut rng);
            let dir = &dir * (1e-4 / dir.norm_l2());
            let moved: Vec<f64> = centre.iter().enumerate().map(|(i, t)| t + dir[i]).collect();
            let ratio = (grad(&moved) - grad(&centre)).norm_l2() / 1e-4;
            c_g = c_g.max(ratio);
        }
    }

    let mut pass = true;
    let mut parts = Vec::new();
    for mu in [0.0, 0.5, 0.9] {
        let eta = 2.0 * lambda * (1.0 - mu) / c_g;
        let cfg = RunConfig { mu, eta0: eta, ..base.clone() };
        let out = Experiment::with_parameters(cfg, theta0.clone()).unwrap().run(|_| {});
        if let Some(f) = &out.failure {
            pass = false;
            parts.push(format!("μ={mu}: run failed at {}: {}", f.iteration, f.error));
            continue;
        }
        let f: Vec<f64> = out
            .records
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let prev = if k == 0 { 0.0 } else { out.records[k - 1].delta_norm };
                r.energy + lambda * mu * eta * prev * prev
            })
            .collect();
        let worst_rise = f.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        pass &= worst_rise <= 1e-12;
        parts.push(format!(
            "μ={mu}: η={eta:.3e}, F {:.6}→{:.6}, max rise {worst_rise:.2e}",
            f[0],
            f[f.len() - 1]
        ));
    }
    verdict(
        pass,
        format!("TFI N=8, 2000 F-SPRING steps, Ĉ_g={c_g:.3}; {} (tol 1e-12)", parts.join("; ")),
    )
}

// ---------------------------------------------------------------- 7, 8

struct ConvergenceRuns {
    /// (μ, final running min, initial gradient norm)
    full: Vec<(f64, f64, f64)>,
    /// (μ, N_s, floor)
    sampled: Vec<(f64, usize, f64)>,
    failures: Vec<String>,
}

const FULL_BATCH_ITERS: usize = 20_000;
const SAMPLED_ITERS: usize = 10_000;
const FLOOR_SAMPLES: [usize; 4] = [64, 256, 1024, 4096];

fn convergence_base() -> RunConfig {
    RunConfig {
        length: 10,
        h: 1.0,
        density: 5,
        lambda: 1e-3,
        eta0: 0.01,
        c: 0.0,
        norm_constraint: 0.0,
        clip_std: 0.0,
        sampler: SamplerMode::Direct,
        ..RunConfig::default()
    }
}

fn convergence_runs() -> &'static ConvergenceRuns {
    static RUNS: OnceLock<ConvergenceRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut runs = ConvergenceRuns { full: vec![], sampled: vec![], failures: vec![] };
        for mu in [0.0, 0.99] {
            let t = Instant::now();
            let cfg = RunConfig {
                optimizer: OptimizerKind::Fspring,
                mu,
                iterations: FULL_BATCH_ITERS,
                ..convergence_base()
            };
            let out = Experiment::new(cfg).unwrap().run(|_| {});
            if let Some(f) = out.failure {
                runs.failures.push(format!("F-SPRING μ={mu} failed at {}: {}", f.iteration, f.error));
            }
            let g: Vec<f64> = out.records.iter().map(|r| r.grad_norm).collect();
            let m = running_min(&g);
            runs.full.push((mu, *m.last().unwrap(), g[0]));
            eprintln!("  F-SPRING μ={mu}: {:.0}s", t.elapsed().as_secs_f64());
            for n_s in FLOOR_SAMPLES {
                let t = Instant::now();
                let cfg = RunConfig {
                    optimizer: OptimizerKind::Spring,
                    mu,
                    n_samples: n_s,
                    iterations: SAMPLED_ITERS,
                    full_grad: true,
                    ..convergence_base()
                };
                let out = Experiment::new(cfg).unwrap().run(|_| {});
                if let Some(f) = out.failure {
                    runs.failures.push(format!("SPRING μ={mu} N_s={n_s} failed at {}: {}", f.iteration, f.error));
                }
                let floor = out
                    .records
                    .iter()
                    .filter_map(|r| r.full_grad_norm)
                    .fold(f64::INFINITY, f64::min);
                runs.sampled.push((mu, n_s, floor));
                eprintln!("  SPRING μ={mu} N_s={n_s}: {:.0}s", t.elapsed().as_secs_f64());
            }
        }
        runs
    })
}

fn full_batch_convergence() -> Verdict {
    let runs = convergence_runs();
    let mut pass = runs.failures.is_empty();
    let mut parts = runs.failures.clone();
    for &(mu, last, first) in &runs.full {
        let drop = first / last;
        pass &= drop >= 1e3;
        let floors: Vec<String> = runs
            .sampled
            .iter()
            .filter(|s| s.0 == mu)
            .map(|&(_, n_s, floor)| {
                pass &= floor > last;
                format!("N_s={n_s}: {floor:.3e}")
            })
            .collect();
        parts.push(format!(
            "μ={mu}: full-batch min ‖g‖ {first:.3e}→{last:.3e} ({drop:.1e}× in {FULL_BATCH_ITERS} steps); \
             sampled floors [{}]",
            floors.join(", ")
        ));
    }
    verdict(pass, parts.join("; "))
}

fn sampling_floor_fit() -> Verdict {
    let runs = convergence_runs();
    let mut pass = true;
    let mut parts = Vec::new();
    for mu in [0.0, 0.99] {
        let pts: Vec<(f64, f64)> = runs
            .sampled
            .iter()
            .filter(|s| s.0 == mu)
            .map(|&(_, n, f)| (n as f64, f))
            .collect();
        match fit_sampling_floor(&pts) {
            Ok(fit) => {
                pass &= fit.residual <= 0.25 && fit.b >= 0.0 && fit.c >= 0.0;
                parts.push(format!(
                    "μ={mu}: b={:.4e}, c={:.4e}, residual {:.3} (unsquared {:.3})",
                    fit.b, fit.c, fit.residual, fit.residual_sqrt
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("μ={mu}: fit failed: {e}"));
            }
        }
    }
    verdict(pass, format!("{} N_s values; {} (tol residual ≤ 0.25, b, c ≥ 0)", FLOOR_SAMPLES.len(), parts.join("; ")))
}

// ---------------------------------------------------------------- 9

fn prime_parity() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [ModelKind::Tfi, ModelKind::Heisenberg] {
        let base = RunConfig {
            kind,
            length: 10,
            h: 1.0,
            sampler: SamplerMode::Direct,
            n_samples: 1000,
            iterations: 10_000,
            lambda: 1e-3,
            norm_constraint: 1e-3,
            eta0: 0.02,
            c: 1e-4,
            clip_std: 5.0,
            smoothing_window: 100,
            ..RunConfig::default()
        };
        let exact = exact_ground_state(&base.model().unwrap()).unwrap().energy;
        let final_error = |cfg: RunConfig| -> (f64, Option<String>) {
            let t = Instant::now();
            let label = format!("{:?} {} μ={}", kind, cfg.optimizer.name(), cfg.mu);
            let out = Experiment::new(cfg).unwrap().run(|_| {});
            let e: Vec<f64> = out.records.iter().map(|r| r.energy).collect();
            let err = *relative_energy_error(&e, exact, 100).unwrap().last().unwrap();
            eprintln!("  {label}: rel err {err:.3e}, {:.0}s", t.elapsed().as_secs_f64());
            (err, out.failure.map(|f| format!("{label} failed at {}: {}", f.iteration, f.error)))
        };
        let mut best = f64::INFINITY;
        let mut best_mu = f64::NAN;
        for mu in [0.0, 0.4, 0.8, 0.9, 0.95, 0.99] {
            let (err, fail) = final_error(RunConfig { optimizer: OptimizerKind::Spring, mu, ..base.clone() });
            if let Some(f) = fail {
                pass = false;
                parts.push(f);
            }
            if err < best {
                best = err;
                best_mu = mu;
            }
        }
        let (prime, fail) = final_error(RunConfig { optimizer: OptimizerKind::Prime, ..base.clone() });
        if let Some(f) = fail {
            pass = false;
            parts.push(f);
        }
        pass &= prime <= 3.0 * best;
        if kind == ModelKind::Tfi {
            pass &= prime <= 1e-3;
        }
        parts.push(format!(
            "{kind:?}: PRIME-SR {prime:.3e} vs best SPRING {best:.3e} (μ={best_mu}), ratio {:.2}",
            prime / best
        ));
    }
    verdict(pass, format!("{} (need ratio ≤ 3, TFI ≤ 1e-3)", parts.join("; ")))
}

// ---------------------------------------------------------------- 10

fn indicator_base(n_samples: usize) -> RunConfig {
    RunConfig {
        length: 10,
        h: 1.0,
        sampler: SamplerMode::Direct,
        n_samples,
        optimizer: OptimizerKind::Spring,
        mu: 0.99,
        lambda: 1e-3,
        norm_constraint: 1e-3,
        eta0: 0.02,
        c: 1e-4,
        clip_std: 5.0,
        iterations: INDICATOR_ITERS,
        indicators: true,
        ..RunConfig::default()
    }
}

const INDICATOR_ITERS: usize = 1000;
const FULL_ALPHA_STRIDE: usize = 50;

fn indicator_behavior() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for n_s in [250, 1000, 4000] {
        let t = Instant::now();
        let mut exp = Experiment::new(indicator_base(n_s)).unwrap();
        let rbm = exp.rbm();
        let mut sampled = Vec::new();
        let mut full = Vec::new();
        for k in 0..INDICATOR_ITERS {
            if k % FULL_ALPHA_STRIDE == 0 {
                let en = Enumeration::new(exp.model(), &rbm.bind(exp.theta()).unwrap()).unwrap();
                full.push(full_batch_dimension(en.sr_matrix().as_ref()).unwrap().0);
            }
            match exp.step() {
                Ok(r) => sampled.push(r.alpha_k.unwrap()),
                Err(e) => {
                    pass = false;
                    parts.push(format!("N_s={n_s} failed at {k}: {e}"));
                    break;
                }
            }
        }
        let a_s = sampled.iter().sum::<f64>() / sampled.len() as f64;
        let a_f = full.iter().sum::<f64>() / full.len() as f64;
        let dev = (a_s / a_f - 1.0).abs();
        pass &= dev <= 0.3;
        parts.push(format!("N_s={n_s}: ᾱ {a_s:.2} vs full-batch {a_f:.2} ({:+.0}%)", 100.0 * (a_s / a_f - 1.0)));
        eprintln!("  α run N_s={n_s}: {:.0}s", t.elapsed().as_secs_f64());
    }
    let mut betas = Vec::new();
    for n_s in [100, 400, 1600] {
        let t = Instant::now();
        let out = Experiment::new(indicator_base(n_s)).unwrap().run(|_| {});
        if let Some(f) = &out.failure {
            pass = false;
            parts.push(format!("N_s={n_s} failed at {}: {}", f.iteration, f.error));
        }
        let b: Vec<f64> = out.records.iter().skip(1).filter_map(|r| r.beta_k).collect();
        betas.push((n_s, b.iter().sum::<f64>() / b.len() as f64));
        eprintln!("  β run N_s={n_s}: {:.0}s", t.elapsed().as_secs_f64());
    }
    pass &= betas.windows(2).all(|w| w[1].1 > w[0].1);
    let beta_text: Vec<String> = betas.iter().map(|(n, b)| format!("N_s={n}: {b:.4}")).collect();
    verdict(
        pass,
        format!(
            "SPRING μ=0.99 TFI N=10, {INDICATOR_ITERS} steps; {}; β̄ [{}] (need |Δα| ≤ 30%, β̄ increasing)",
            parts.join("; "),
            beta_text.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- 11

fn check_record_bounds(records: &[RunRecord], cfg: &RunConfig) -> Result<(), String> {
    let sqrt_c = cfg.norm_c().map(f64::sqrt);
    for (i, r) in records.iter().enumerate() {
        if let Some(mu) = r.mu_k {
            if !(0.0..=1.0).contains(&mu) {
                return Err(format!("k={}: μ_k = {mu}", r.k));
            }
        }
        if let (Some(a), Some(rank)) = (r.alpha_k, r.rank_k) {
            if !(a >= 1.0 && a <= rank as f64 + BOUND_SLACK && rank <= cfg.n_samples) {
                return Err(format!("k={}: α={a}, r={rank}, N_s={}", r.k, cfg.n_samples));
            }
        }
        if let (Some(b), Some(a)) = (r.beta_k, r.alpha_k) {
            let a_prev = if i == 0 { a } else { records[i - 1].alpha_k.unwrap_or(a) };
            let cap = (a.ceil().min(a_prev.ceil())).sqrt();
            if !(b >= 0.0 && b <= cap + 1e-10) {
                return Err(format!("k={}: β̃={b}, cap={cap}", r.k));
            }
        }
        if let Some(s) = sqrt_c {
            if r.step_norm > s + STEP_NORM_SLACK {
                return Err(format!("k={}: step {} > √C", r.k, r.step_norm));
            }
        }
    }
    Ok(())
}

fn bound_suite() -> Verdict {
    let mut runs = 0;
    let mut rows = 0;
    let mut problems = Vec::new();
    for kind in [ModelKind::Tfi, ModelKind::Heisenberg] {
        for sampler in [SamplerMode::Direct, SamplerMode::Metropolis] {
            for (optimizer, mu) in [
                (OptimizerKind::Prime, 0.0),
                (OptimizerKind::Spring, 0.99),
                (OptimizerKind::Spring, 1.0),
                (OptimizerKind::Minsr, 0.0),
                (OptimizerKind::Sr, 0.0),
                (OptimizerKind::Sgd, 0.0),
            ] {
                for n_samples in [60, 300] {
                    let cfg = RunConfig {
                        kind,
                        length: 6,
                        density: 3,
                        sampler,
                        burn_in: 200,
                        n_samples,
                        optimizer,
                        mu,
                        indicators: true,
                        iterations: 80,
                        init_scale: 0.1,
                        seed: runs as u64,
                        ..RunConfig::default()
                    };
                    let out = Experiment::new(cfg.clone()).unwrap().run(|_| {});
                    runs += 1;
                    rows += out.records.len();
                    if let Some(f) = out.failure {
                        problems.push(format!("{kind:?}/{sampler:?}/{}: {}", optimizer.name(), f.error));
                    }
                    if let Err(e) = check_record_bounds(&out.records, &cfg) {
                        problems.push(format!("{kind:?}/{sampler:?}/{}: {e}", optimizer.name()));
                    }
                }
            }
        }
    }
    let fs = RunConfig {
        length: 6,
        density: 3,
        optimizer: OptimizerKind::Fspring,
        indicators: true,
        iterations: 80,
        ..RunConfig::default()
    };
    let out = Experiment::new(fs.clone()).unwrap().run(|_| {});
    runs += 1;
    rows += out.records.len();
    if let Some(f) = out.failure {
        problems.push(format!("fspring: {}", f.error));
    }
    if let Err(e) = check_record_bounds(&out.records, &fs) {
        problems.push(format!("fspring: {e}"));
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{runs} runs, {rows} iterations: μ_k ∈ [0,1], 1 ≤ α ≤ r ≤ N_s, β̃ ≤ cap + 1e-10, step ≤ √C + 1e-12")
        } else {
            problems.join("; ")
        },
    )
}

// ----------------------------------------------------------------

type Check = fn() -> Verdict;

const CRITERIA: [(usize, &str, bool, Check); 11] = [
    (1, "SPRING algebraic equivalences", false, spring_forms_agree),
    (2, "estimator unbiasedness", false, estimators_unbiased),
    (3, "gradients lie in the range of S", false, gradients_in_range),
    (4, "kernel recursion exactness", false, kernel_recursion_exact),
    (5, "momentum dichotomy on the kernel", false, momentum_dichotomy),
    (6, "Lyapunov descent of F-SPRING", false, lyapunov_descent),
    (7, "full-batch convergence vs sampling floors", true, full_batch_convergence),
    (8, "sampling floor fit", true, sampling_floor_fit),
    (9, "PRIME-SR parity with tuned SPRING", true, prime_parity),
    (10, "indicator behavior", true, indicator_behavior),
    (11, "bound suite", false, bound_suite),
];

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for (n, _, long, _) in CRITERIA {
            println!("criterion_{n:02}: test{}", if long { " (ignored)" } else { "" });
        }
        return;
    }
    let include_all = args.iter().any(|a| a == "--include-ignored");
    let only_long = args.iter().any(|a| a == "--ignored");
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();

    let mut failed = 0;
    for (n, name, long, check) in CRITERIA {
        let key = format!("criterion_{n:02}");
        if !filters.is_empty() && !filters.iter().any(|f| key.contains(f.as_str())) {
            continue;
        }
        let selected = include_all || (long == only_long);
        if !selected {
            let why = if long { "long-running, use `-- --ignored`" } else { "quick check, runs by default" };
            println!("criterion {n:>2} NOT RUN  {name}: {why}");
            continue;
        }
        let t = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {}  {name}: {} [{:.1}s]",
            if v.pass { "PASS    " } else { "FAIL    " },
            v.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion check(s) failed");
        std::process::exit(1);
    }
}

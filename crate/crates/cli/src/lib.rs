//! Library side of the `vmc` binary: run directories, sweeps and reports.

pub mod records;
pub mod sweep;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vmc_core::analysis::{fit_sampling_floor, relative_energy_error, running_min, sliding_window, FloorFit};
use vmc_core::experiment::{Experiment, RunConfig};
use vmc_core::hamiltonian::exact_ground_state;
use vmc_core::wavefunction::write_checkpoint;

use records::{read_records, RecordWriter};

pub const OUTPUT_ROOT_ENV: &str = "VMC_OUTPUT_ROOT";
pub const CONFIG_FILE: &str = "config.resolved.json";
pub const RECORDS_FILE: &str = "records.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const SUMMARY_FILE: &str = "summary.json";
pub const REPORT_FILE: &str = "report.json";

/// Reference energies are only computed by dense diagonalization up to here.
pub const REPORT_ED_SITES: usize = 12;

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(text)?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

/// `config.output`, placed under `$VMC_OUTPUT_ROOT` when that is set and the
/// path is relative.
pub fn output_dir(config: &RunConfig) -> PathBuf {
    let path = PathBuf::from(&config.output);
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if path.is_relative() => PathBuf::from(root).join(path),
        _ => path,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub iterations_completed: usize,
    pub records: usize,
    pub failed_iteration: Option<usize>,
    pub error: Option<String>,
}

/// Runs `config` into `dir`, which must not already hold a run.
pub fn run_in_dir(config: &RunConfig, dir: &Path) -> Result<RunSummary> {
    if dir.join(RECORDS_FILE).exists() {
        bail!("{} already contains a run", dir.display());
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let resolved = config.resolved();
    fs::write(dir.join(CONFIG_FILE), serde_json::to_string_pretty(&resolved)?)?;

    let mut experiment = Experiment::new(resolved)?;
    let mut writer = RecordWriter::new(BufWriter::new(File::create(dir.join(RECORDS_FILE))?))?;
    let mut io_error = None;
    let outcome = experiment.run(|r| {
        if io_error.is_none() {
            io_error = writer.write(r).err();
        }
    });
    writer.flush()?;
    if let Some(e) = io_error {
        return Err(e);
    }

    let mut ckpt = BufWriter::new(File::create(dir.join(CHECKPOINT_FILE))?);
    write_checkpoint(&mut ckpt, &experiment.rbm(), experiment.theta())?;
    ckpt.flush()?;

    let summary = RunSummary {
        iterations_completed: experiment.iteration(),
        records: outcome.records.len(),
        failed_iteration: outcome.failure.as_ref().map(|f| f.iteration),
        error: outcome.failure.as_ref().map(|f| f.error.to_string()),
    };
    fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

pub fn read_run_config(dir: &Path) -> Result<RunConfig> {
    let path = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

/// Running minimum of the recorded full-batch gradient norms.
pub fn min_grad_curve(dir: &Path) -> Result<Vec<(usize, f64)>> {
    let records = read_records(&dir.join(RECORDS_FILE))?;
    let ks: Vec<usize> = records.iter().map(|r| r.k).collect();
    let g: Option<Vec<f64>> = records.iter().map(|r| r.full_grad_norm).collect();
    let Some(g) = g.filter(|g| !g.is_empty()) else {
        bail!("{}: full_grad_norm was not recorded", dir.display());
    };
    Ok(ks.into_iter().zip(running_min(&g)).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct FloorPoint {
    pub dir: String,
    pub n_samples: usize,
    pub floor: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FloorReport {
    pub points: Vec<FloorPoint>,
    pub fit: FloorFit,
}

/// Fits the final running-minimum gradient norm of each run against `N_s`.
pub fn floor_fit(dirs: &[PathBuf]) -> Result<FloorReport> {
    let mut points = Vec::new();
    for dir in dirs {
        let config = read_run_config(dir)?;
        let curve = min_grad_curve(dir)?;
        let floor = curve.last().map(|p| p.1).expect("nonempty curve");
        points.push(FloorPoint {
            dir: dir.display().to_string(),
            n_samples: config.n_samples,
            floor,
        });
    }
    let data: Vec<(f64, f64)> = points.iter().map(|p| (p.n_samples as f64, p.floor)).collect();
    let fit = fit_sampling_floor(&data)?;
    Ok(FloorReport { points, fit })
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub records: usize,
    pub last_k: Option<usize>,
    pub final_smoothed_energy: Option<f64>,
    pub exact_energy: Option<f64>,
    pub final_relative_error: Option<f64>,
    pub min_full_grad_norm: Option<f64>,
    pub mean_mu: Option<f64>,
    pub mean_alpha: Option<f64>,
    pub mean_beta: Option<f64>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn report(dir: &Path) -> Result<Report> {
    let config = read_run_config(dir)?;
    let records = read_records(&dir.join(RECORDS_FILE))?;
    let energies: Vec<f64> = records.iter().map(|r| r.energy).collect();
    let window = config.smoothing_window;
    let model = config.model()?;
    let exact_energy = if model.n_sites() <= REPORT_ED_SITES {
        Some(exact_ground_state(&model)?.energy)
    } else {
        None
    };
    let final_relative_error = match exact_energy {
        Some(e) if !energies.is_empty() => relative_energy_error(&energies, e, window)?.last().copied(),
        _ => None,
    };
    Ok(Report {
        records: records.len(),
        last_k: records.last().map(|r| r.k),
        final_smoothed_energy: sliding_window(&energies, window)?.last().copied(),
        exact_energy,
        final_relative_error,
        min_full_grad_norm: records
            .iter()
            .filter_map(|r| r.full_grad_norm)
            .reduce(f64::min),
        mean_mu: mean_of(records.iter().map(|r| r.mu_k)),
        mean_alpha: mean_of(records.iter().map(|r| r.alpha_k)),
        mean_beta: mean_of(records.iter().map(|r| r.beta_k)),
    })
}

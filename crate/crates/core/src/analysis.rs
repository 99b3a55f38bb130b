//! Post-processing of recorded series: smoothing, running minima, the
//! sampling-floor fit and relative energy errors.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VmcError};

/// Trailing mean `out_i = mean(series[max(0, i−w+1) ..= i])`.
pub fn sliding_window(series: &[f64], w: usize) -> Result<Vec<f64>> {
    if w == 0 {
        return Err(VmcError::InvalidArgument("window must be positive".into()));
    }
    Ok((0..series.len())
        .map(|i| {
            let window = &series[(i + 1).saturating_sub(w)..=i];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect())
}

/// `min_{j ≤ k} series[j]`.
pub fn running_min(series: &[f64]) -> Vec<f64> {
    let mut best = f64::INFINITY;
    series
        .iter()
        .map(|&v| {
            best = best.min(v);
            best
        })
        .collect()
}

/// `|E_k − E_exact| / |E_exact|`, smoothed with a trailing window of `w`.
pub fn relative_energy_error(energies: &[f64], e_exact: f64, w: usize) -> Result<Vec<f64>> {
    if !(e_exact != 0.0 && e_exact.is_finite()) {
        return Err(VmcError::InvalidArgument(format!(
            "reference energy must be finite and nonzero, got {e_exact}"
        )));
    }
    let raw: Vec<f64> = energies
        .iter()
        .map(|e| (e - e_exact).abs() / e_exact.abs())
        .collect();
    sliding_window(&raw, w)
}

/// Result of fitting `floor² ≈ b/N_s + c/N_s²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloorFit {
    pub b: f64,
    pub c: f64,
    /// `‖y − ŷ‖ / ‖y‖` in squared space, the space that is fitted.
    pub residual: f64,
    /// `‖f − √ŷ‖ / ‖f‖` for the unsquared floors.
    pub residual_sqrt: f64,
}

impl FloorFit {
    pub fn predict(&self, n_samples: f64) -> f64 {
        (self.b / n_samples + self.c / (n_samples * n_samples)).sqrt()
    }
}

/// Least-squares fit of `min_grad²` against `(1/N_s, 1/N_s²)` with
/// nonnegative coefficients.
pub fn fit_sampling_floor(points: &[(f64, f64)]) -> Result<FloorFit> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(VmcError::InvalidArgument(format!(
            "need at least 3 distinct sample sizes, got {}",
            distinct.len()
        )));
    }
    for &(n, f) in points {
        if !(n > 0.0 && n.is_finite()) {
            return Err(VmcError::InvalidArgument(format!("sample size must be positive, got {n}")));
        }
        if !(f > 0.0 && f.is_finite()) {
            return Err(VmcError::InvalidArgument(format!("floor must be positive, got {f}")));
        }
    }
    let x1: Vec<f64> = points.iter().map(|p| 1.0 / p.0).collect();
    let x2: Vec<f64> = points.iter().map(|p| 1.0 / (p.0 * p.0)).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1 * p.1).collect();

    let (mut b, mut c) = two_column_lsq(&x1, &x2, &y)?;
    if b < 0.0 || c < 0.0 {
        let only_b = (one_column_lsq(&x1, &y), 0.0);
        let only_c = (0.0, one_column_lsq(&x2, &y));
        (b, c) = match (b < 0.0, c < 0.0) {
            (true, false) => only_c,
            (false, true) => only_b,
            _ => {
                if sq_resid(&x1, &x2, &y, only_b) <= sq_resid(&x1, &x2, &y, only_c) {
                    only_b
                } else {
                    only_c
                }
            }
        };
    }
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual = sq_resid(&x1, &x2, &y, (b, c)).sqrt() / y_norm;
    let f_norm = points.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt();
    let resid_sqrt = points
        .iter()
        .zip(x1.iter().zip(&x2))
        .map(|(p, (a1, a2))| {
            let d = p.1 - (b * a1 + c * a2).max(0.0).sqrt();
            d * d
        })
        .sum::<f64>()
        .sqrt();
    Ok(FloorFit {
        b,
        c,
        residual,
        residual_sqrt: resid_sqrt / f_norm,
    })
}

fn sq_resid(x1: &[f64], x2: &[f64], y: &[f64], (b, c): (f64, f64)) -> f64 {
    x1.iter()
        .zip(x2)
        .zip(y)
        .map(|((a1, a2), y)| {
            let d = y - b * a1 - c * a2;
            d * d
        })
        .sum()
}

fn one_column_lsq(x: &[f64], y: &[f64]) -> f64 {
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let xx: f64 = x.iter().map(|a| a * a).sum();
    (xy / xx).max(0.0)
}

/// Solves the 2×2 normal equations after scaling each column to unit norm.
fn two_column_lsq(x1: &[f64], x2: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n1 = x1.iter().map(|v| v * v).sum::<f64>().sqrt();
    let n2 = x2.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let g11 = 1.0;
    let g22 = 1.0;
    let g12 = dot(x1, x2) / (n1 * n2);
    let r1 = dot(x1, y) / n1;
    let r2 = dot(x2, y) / n2;
    let det = g11 * g22 - g12 * g12;
    if det.abs() < 1e-14 {
        return Err(VmcError::InvalidArgument("degenerate design matrix".into()));
    }
    let b = (g22 * r1 - g12 * r2) / det / n1;
    let c = (g11 * r2 - g12 * r1) / det / n2;
    Ok((b, c))
}

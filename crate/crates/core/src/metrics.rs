//! Forecast error metrics and raw-vs-fused consistency diagnostics.

use ndarray::{s, Array2, Axis};

use crate::error::{Error, Result};
use crate::fusion::FusionMatrix;
use crate::ingest::ObservationPanel;

fn check_pair(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::shape("metric", &[pred.len()], &[truth.len()]));
    }
    if pred.is_empty() {
        return Err(Error::Validation("metric over zero points".into()));
    }
    Ok(())
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth)?;
    let s: f64 = pred.iter().zip(truth).map(|(p, t)| (t - p).abs()).sum();
    Ok(s / pred.len() as f64)
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth)?;
    let s: f64 = pred.iter().zip(truth).map(|(p, t)| (t - p).powi(2)).sum();
    Ok((s / pred.len() as f64).sqrt())
}

/// MAPE in percent, with the number of terms skipped for a near-zero truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mape {
    pub percent: f64,
    pub excluded: usize,
}

pub const MAPE_EPS: f64 = 1e-8;

pub fn mape(pred: &[f64], truth: &[f64], eps: f64) -> Result<Mape> {
    check_pair(pred, truth)?;
    let mut sum = 0.0;
    let mut used = 0usize;
    for (p, t) in pred.iter().zip(truth) {
        if t.abs() < eps {
            continue;
        }
        sum += ((p - t) / t).abs();
        used += 1;
    }
    if used == 0 {
        return Err(Error::Validation("every MAPE term has a zero denominator".into()));
    }
    Ok(Mape {
        percent: 100.0 * sum / used as f64,
        excluded: pred.len() - used,
    })
}

/// Coefficient of determination `1 - SS_res / SS_tot`, with SS_tot about the mean of `truth`.
pub fn r_squared(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth)?;
    if truth.len() < 2 {
        return Err(Error::Validation("r_squared needs at least two points".into()));
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Validation("r_squared is undefined for a constant truth".into()));
    }
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (t - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    Normalized,
    Original,
}

impl Units {
    pub fn as_str(self) -> &'static str {
        match self {
            Units::Normalized => "normalized",
            Units::Original => "original",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    pub mape_excluded: usize,
    /// NaN when the truth is constant.
    pub r2: f64,
    pub n: usize,
    pub units: Units,
}

impl MetricReport {
    pub fn compute(pred: &[f64], truth: &[f64], units: Units) -> Result<Self> {
        let m = mape(pred, truth, MAPE_EPS).unwrap_or(Mape {
            percent: f64::NAN,
            excluded: pred.len(),
        });
        Ok(Self {
            mae: mae(pred, truth)?,
            rmse: rmse(pred, truth)?,
            mape: m.percent,
            mape_excluded: m.excluded,
            r2: r_squared(pred, truth).unwrap_or(f64::NAN),
            n: pred.len(),
            units,
        })
    }
}

fn mean_var(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return None;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    Some((mean, v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n))
}

/// Silverman's rule `1.06 σ̂ n^{-1/5}` with the sample standard deviation.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    1.06 * sd * n.powf(-0.2)
}

/// Gaussian kernel density of `values` at each grid point. Without an
/// explicit bandwidth Silverman's rule is used; a zero-spread sample falls
/// back to `1e-3 · max(|mean|, 1)`.
pub fn kde(values: &[f64], grid: &[f64], bandwidth: Option<f64>) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::Validation("kde needs at least two values".into()));
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::Validation(format!("bandwidth must be positive, got {h}"))),
        None => {
            let h = silverman_bandwidth(values);
            if h > 0.0 {
                h
            } else {
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                1e-3 * mean.abs().max(1.0)
            }
        }
    };
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    Ok(grid
        .iter()
        .map(|&g| {
            let s: f64 = values.iter().map(|&v| (-0.5 * ((g - v) / h).powi(2)).exp()).sum();
            s * norm
        })
        .collect())
}

pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Evenly spaced grid covering both samples plus four bandwidths either side.
pub fn common_grid(a: &[f64], b: &[f64], points: usize) -> Vec<f64> {
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 4.0 * silverman_bandwidth(a).max(silverman_bandwidth(b)).max(1e-9);
    let (lo, hi) = (lo - pad, hi + pad);
    let n = points.max(2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetVariance {
    pub target: String,
    pub raw_var: f64,
    pub fused_var: f64,
    /// `fused_var / raw_var`; 1 when both are zero.
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct VarianceReport {
    pub targets: Vec<TargetVariance>,
    /// Cross-station variance at each time step, `[T, K]`; NaN without raw cells.
    pub raw_trajectory: Array2<f64>,
    pub fused_trajectory: Array2<f64>,
    /// Per-station temporal variance, `[S, K]`.
    pub raw_per_station: Array2<f64>,
    pub fused_per_station: Array2<f64>,
}

fn check_aligned(raw: &ObservationPanel, fused: &FusionMatrix) -> Result<()> {
    let ids: Vec<&str> = raw.stations.iter().map(|s| s.id.as_str()).collect();
    let fused_ids: Vec<&str> = fused.station_order.iter().map(String::as_str).collect();
    if raw.values.dim() != fused.values.dim() || ids != fused_ids || raw.target_ids != fused.target_order {
        let (a, b) = (raw.values.dim(), fused.values.dim());
        return Err(Error::shape("variance_report", &[a.0, a.1, a.2], &[b.0, b.1, b.2]));
    }
    Ok(())
}

/// Raw cells are the non-missing native observations of `raw`.
pub fn variance_report(raw: &ObservationPanel, fused: &FusionMatrix) -> Result<VarianceReport> {
    check_aligned(raw, fused)?;
    let (t, s, k) = raw.values.dim();
    let native = raw.native_mask();
    let raw_cell = |ti: usize, si: usize, ki: usize| {
        let v = raw.values[[ti, si, ki]];
        (native[[si, ki]] && !v.is_nan()).then_some(v)
    };
    let mut targets = Vec::with_capacity(k);
    for ki in 0..k {
        let raw_var = mean_var((0..t).flat_map(|ti| (0..s).filter_map(move |si| raw_cell(ti, si, ki))))
            .map_or(f64::NAN, |m| m.1);
        let fused_var = mean_var(fused.values.slice(s![.., .., ki]).iter().copied()).map_or(f64::NAN, |m| m.1);
        let ratio = if raw_var == 0.0 && fused_var == 0.0 {
            1.0
        } else {
            fused_var / raw_var
        };
        targets.push(TargetVariance {
            target: raw.target_ids[ki].clone(),
            raw_var,
            fused_var,
            ratio,
        });
    }
    let raw_trajectory = Array2::from_shape_fn((t, k), |(ti, ki)| {
        mean_var((0..s).filter_map(|si| raw_cell(ti, si, ki))).map_or(f64::NAN, |m| m.1)
    });
    let fused_trajectory = Array2::from_shape_fn((t, k), |(ti, ki)| {
        mean_var(fused.values.slice(s![ti, .., ki]).iter().copied()).map_or(f64::NAN, |m| m.1)
    });
    let raw_per_station = Array2::from_shape_fn((s, k), |(si, ki)| {
        mean_var((0..t).filter_map(|ti| raw_cell(ti, si, ki))).map_or(f64::NAN, |m| m.1)
    });
    let fused_per_station = fused
        .values
        .map_axis(Axis(0), |lane| mean_var(lane.iter().copied()).map_or(f64::NAN, |m| m.1));
    Ok(VarianceReport {
        targets,
        raw_trajectory,
        fused_trajectory,
        raw_per_station,
        fused_per_station,
    })
}

#[derive(Debug, Clone)]
pub struct DensityCurve {
    pub target: String,
    pub grid: Vec<f64>,
    pub raw: Vec<f64>,
    pub fused: Vec<f64>,
}

impl DensityCurve {
    /// `∫ |raw - fused|` by the trapezoidal rule.
    pub fn l1_distance(&self) -> f64 {
        let diff: Vec<f64> = self.raw.iter().zip(&self.fused).map(|(a, b)| (a - b).abs()).collect();
        trapezoid(&self.grid, &diff)
    }
}

#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub variance: VarianceReport,
    pub densities: Vec<DensityCurve>,
}

pub fn consistency_report(raw: &ObservationPanel, fused: &FusionMatrix, grid_points: usize) -> Result<ConsistencyReport> {
    let variance = variance_report(raw, fused)?;
    let native = raw.native_mask();
    let mut densities = Vec::with_capacity(raw.n_targets());
    for (ki, target) in raw.target_ids.iter().enumerate() {
        let raw_vals: Vec<f64> = raw
            .values
            .indexed_iter()
            .filter(|((_, si, k), v)| *k == ki && native[[*si, ki]] && !v.is_nan())
            .map(|(_, v)| *v)
            .collect();
        let fused_vals: Vec<f64> = fused.values.slice(s![.., .., ki]).iter().copied().collect();
        let grid = common_grid(&raw_vals, &fused_vals, grid_points);
        densities.push(DensityCurve {
            target: target.clone(),
            raw: kde(&raw_vals, &grid, None)?,
            fused: kde(&fused_vals, &grid, None)?,
            grid,
        });
    }
    Ok(ConsistencyReport { variance, densities })
}

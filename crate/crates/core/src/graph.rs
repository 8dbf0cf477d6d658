//! Weighted complete graph over stations and the operators used by graph
//! convolution.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::fusion::DistanceMatrix;

/// Gaussian similarity `w(i, j) = exp(-dist(i, j)² / σ²)` with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAdjacency {
    pub values: Array2<f64>,
    pub sigma: f64,
}

impl WeightedAdjacency {
    pub fn n_nodes(&self) -> usize {
        self.values.nrows()
    }

    /// Undirected edges of the implied complete graph.
    pub fn edge_count(&self) -> usize {
        let n = self.n_nodes();
        n * n.saturating_sub(1) / 2
    }

    /// Wraps an existing similarity matrix after checking symmetry and the diagonal.
    pub fn from_matrix(values: Array2<f64>, sigma: f64) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::shape("WeightedAdjacency", &[n, values.ncols()], &[n, n]));
        }
        for i in 0..n {
            if values[[i, i]] != 0.0 {
                return Err(Error::Validation(format!("adjacency diagonal entry {i} is non-zero")));
            }
            for j in 0..n {
                let v = values[[i, j]];
                if !v.is_finite() || v < 0.0 || (v - values[[j, i]]).abs() > 1e-12 {
                    return Err(Error::Validation(format!(
                        "adjacency entry ({i}, {j}) is negative, non-finite or asymmetric"
                    )));
                }
            }
        }
        Ok(Self { values, sigma })
    }
}

/// σ as the population standard deviation of the off-diagonal distances.
/// Falls back to their mean when they are all equal, and to 1 when there are
/// none or all are zero.
pub fn distance_sigma(dists: &DistanceMatrix) -> f64 {
    let d = dists.off_diagonal();
    if d.is_empty() {
        return 1.0;
    }
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd > 0.0 {
        sd
    } else if mean > 0.0 {
        mean
    } else {
        1.0
    }
}

pub fn build_adjacency(dists: &DistanceMatrix) -> WeightedAdjacency {
    build_adjacency_with_sigma(dists, distance_sigma(dists))
}

pub fn build_adjacency_with_sigma(dists: &DistanceMatrix, sigma: f64) -> WeightedAdjacency {
    let n = dists.len();
    let s2 = sigma * sigma;
    let values = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            0.0
        } else {
            (-dists.get(i, j).powi(2) / s2).exp()
        }
    });
    WeightedAdjacency { values, sigma }
}

/// `D^{-1/2} M D^{-1/2}` with `D` the row sums of `m`; zero-degree rows get 0.
fn symmetric_normalize(m: &Array2<f64>) -> Array2<f64> {
    let inv_sqrt: Vec<f64> = m
        .rows()
        .into_iter()
        .map(|r| {
            let d: f64 = r.sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Array2::from_shape_fn(m.dim(), |(i, j)| inv_sqrt[i] * m[[i, j]] * inv_sqrt[j])
}

/// `L = I - D^{-1/2} A_w D^{-1/2}`.
pub fn normalized_laplacian(adj: &WeightedAdjacency) -> Array2<f64> {
    let n = adj.n_nodes();
    let norm = symmetric_normalize(&adj.values);
    Array2::from_shape_fn((n, n), |(i, j)| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - norm[[i, j]]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// `D̃^{-1/2} (A_w + I) D̃^{-1/2}`, for first-order graph convolution.
    RenormalizedAdjacency,
    /// `2 L / λ_max - I`, for Chebyshev filters.
    ScaledLaplacian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphOperator {
    pub kind: OperatorKind,
    pub matrix: Array2<f64>,
}

impl GraphOperator {
    pub fn n_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    /// Chebyshev polynomials `T_0 .. T_{order-1}` of the operator matrix.
    pub fn chebyshev_basis(&self, order: usize) -> Vec<Array2<f64>> {
        let n = self.n_nodes();
        let mut out: Vec<Array2<f64>> = Vec::with_capacity(order);
        for r in 0..order {
            let next = match r {
                0 => Array2::eye(n),
                1 => self.matrix.clone(),
                _ => 2.0 * self.matrix.dot(&out[r - 1]) - &out[r - 2],
            };
            out.push(next);
        }
        out
    }
}

pub fn renormalized_adjacency(adj: &WeightedAdjacency) -> GraphOperator {
    let n = adj.n_nodes();
    let with_loops = &adj.values + &Array2::<f64>::eye(n);
    GraphOperator {
        kind: OperatorKind::RenormalizedAdjacency,
        matrix: symmetric_normalize(&with_loops),
    }
}

const POWER_MAX_ITERS: usize = 10_000;
const POWER_REL_TOL: f64 = 1e-8;

/// The iteration runs on `m^(2^POWER_SQUARINGS)` so nearly equal leading
/// eigenvalues (weakly linked clusters) still separate in a few steps.
const POWER_SQUARINGS: usize = 16;

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration on a repeated square of `m`; the Rayleigh quotient is taken
/// against `m`. The stopping rule extrapolates the remaining error from the
/// geometric decay of successive Rayleigh-quotient changes.
pub fn power_iteration_lambda_max(m: &Array2<f64>) -> Result<f64> {
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let mut accel = m.clone();
    for _ in 0..POWER_SQUARINGS {
        accel = accel.dot(&accel);
        let peak = accel.iter().fold(0.0_f64, |p, v| p.max(v.abs()));
        if peak == 0.0 || !peak.is_finite() {
            break;
        }
        accel.mapv_inplace(|v| v / peak);
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 + 1.0).sqrt().fract()).collect();
    normalize(&mut v);
    let mut lambda = rayleigh(m, &v);
    let mut prev_delta: Option<f64> = None;
    for _ in 0..POWER_MAX_ITERS {
        let mut w = mat_vec(&accel, &v);
        let norm = normalize(&mut w);
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w;
        let next = rayleigh(m, &v);
        let delta = (next - lambda).abs();
        lambda = next;
        let scale = lambda.abs().max(f64::MIN_POSITIVE);
        if delta <= 1e-15 * scale {
            return Ok(lambda);
        }
        if let Some(pd) = prev_delta {
            let q = delta / pd;
            if q < 1.0 {
                let remaining = delta * q / (1.0 - q);
                if remaining <= POWER_REL_TOL * scale && delta <= POWER_REL_TOL * scale {
                    return Ok(lambda);
                }
            }
        }
        prev_delta = Some(delta);
    }
    Err(Error::Convergence(format!(
        "power iteration did not converge after {POWER_MAX_ITERS} steps"
    )))
}

fn mat_vec(m: &Array2<f64>, v: &[f64]) -> Vec<f64> {
    m.rows()
        .into_iter()
        .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn rayleigh(m: &Array2<f64>, v: &[f64]) -> f64 {
    mat_vec(m, v).iter().zip(v).map(|(a, b)| a * b).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// `2 L / λ_max - I`, with `λ_max = 2` when the Laplacian is (near) zero.
pub fn scaled_laplacian(adj: &WeightedAdjacency) -> Result<GraphOperator> {
    Ok(GraphOperator {
        kind: OperatorKind::ScaledLaplacian,
        matrix: rescale_laplacian(&normalized_laplacian(adj))?,
    })
}

fn rescale_laplacian(lap: &Array2<f64>) -> Result<Array2<f64>> {
    let n = lap.nrows();
    let mut lambda_max = power_iteration_lambda_max(lap)?;
    if lambda_max < 1e-12 {
        lambda_max = 2.0;
    }
    let matrix = Array2::from_shape_fn((n, n), |(i, j)| {
        let id = if i == j { 1.0 } else { 0.0 };
        2.0 * lap[[i, j]] / lambda_max - id
    });
    Ok(matrix)
}

pub fn graph_operator(adj: &WeightedAdjacency, kind: OperatorKind) -> Result<GraphOperator> {
    match kind {
        OperatorKind::RenormalizedAdjacency => Ok(renormalized_adjacency(adj)),
        OperatorKind::ScaledLaplacian => scaled_laplacian(adj),
    }
}

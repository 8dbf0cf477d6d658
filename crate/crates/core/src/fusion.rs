//! Gaussian RBF fusion of heterogeneous monitoring sources.
//!
//! For each target, the stations that natively measure it act as RBF
//! centres. Their observations at one time step define an interpolant
//! `F(q) = m + Σ_j w_j exp(-c · dist(q, s_j)²)` whose weights solve
//! `A w = B - m`, and `F` is evaluated at every station lacking a native
//! value. `m` is the mean of `B` when centering is on (the default) and 0
//! otherwise. The result is a dense station × target matrix per step.

use std::collections::HashMap;

use chrono::NaiveDateTime;
use ndarray::{s, Array2, Array3, ArrayView2};

use crate::error::{Error, Result};
use crate::ingest::{format_timestamp, native_mask, ObservationPanel, Station};

const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    /// Great-circle distance in km with `x` = longitude and `y` = latitude in degrees.
    HaversineKm,
}

impl std::str::FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Self::Euclidean),
            "haversine" | "haversine_km" => Ok(Self::HaversineKm),
            other => Err(Error::Config(format!("unknown distance metric {other:?}"))),
        }
    }
}

impl DistanceMetric {
    pub fn distance(self, a: [f64; 2], b: [f64; 2]) -> f64 {
        match self {
            Self::Euclidean => ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt(),
            Self::HaversineKm => {
                let (lon1, lat1) = (a[0].to_radians(), a[1].to_radians());
                let (lon2, lat2) = (b[0].to_radians(), b[1].to_radians());
                let h = ((lat2 - lat1) / 2.0).sin().powi(2)
                    + lat1.cos() * lat2.cos() * ((lon2 - lon1) / 2.0).sin().powi(2);
                2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
            }
        }
    }
}

/// Kernel settings. `None` selects the layout-derived default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbfConfig {
    /// Gaussian shape `c`; default `1 / (2 d_med²)` over the source layout.
    pub shape_c: Option<f64>,
    /// Diagonal added to `A`; default `1e-10 · trace(A) / N`.
    pub ridge: Option<f64>,
    pub metric: DistanceMetric,
    /// Interpolate deviations from the mean of the source values and add the
    /// mean back, so fusion commutes with affine changes of units.
    pub centering: bool,
}

impl Default for RbfConfig {
    fn default() -> Self {
        Self {
            shape_c: None,
            ridge: None,
            metric: DistanceMetric::default(),
            centering: true,
        }
    }
}

impl RbfConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.shape_c {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("shape_c must be positive, got {c}")));
            }
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("ridge must be non-negative, got {r}")));
            }
        }
        Ok(())
    }

    /// Shape parameter for a set of centres.
    pub fn resolve_shape(&self, source_dists: &DistanceMatrix) -> f64 {
        self.shape_c
            .unwrap_or_else(|| default_shape(source_dists).unwrap_or(1.0))
    }

    /// Ridge for an `n`-centre system; the Gaussian coefficient matrix has a
    /// unit diagonal so `trace(A) / N = 1`.
    pub fn resolve_ridge(&self) -> f64 {
        self.ridge.unwrap_or(1e-10)
    }
}

/// `1 / (2 d_med²)` from the median off-diagonal distance, when one exists.
pub fn default_shape(dists: &DistanceMatrix) -> Option<f64> {
    let d_med = median(&dists.off_diagonal())?;
    (d_med > 0.0).then(|| 1.0 / (2.0 * d_med * d_med))
}

pub(crate) fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Symmetric matrix of pairwise distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(pub Array2<f64>);

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i, j]]
    }

    /// Upper-triangle entries, `i < j`.
    pub fn off_diagonal(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.0[[i, j]]);
            }
        }
        out
    }

    pub fn subset(&self, idx: &[usize]) -> DistanceMatrix {
        DistanceMatrix(Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| {
            self.0[[idx[a], idx[b]]]
        }))
    }
}

pub fn pairwise_distances(points: &[[f64; 2]], metric: DistanceMetric) -> Result<DistanceMatrix> {
    if points.is_empty() {
        return Err(Error::Validation("at least one point is required".into()));
    }
    if let Some(i) = points.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(Error::Validation(format!("point {i} has a non-finite coordinate")));
    }
    let n = points.len();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let v = metric.distance(points[i], points[j]);
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    Ok(DistanceMatrix(d))
}

#[inline]
pub fn gaussian_rbf(dist: f64, shape_c: f64) -> f64 {
    (-shape_c * dist * dist).exp()
}

/// `A[i][j] = φ(dist(i, j))`, with `ridge` added on the diagonal.
pub fn assemble_coefficient_matrix(dists: &DistanceMatrix, shape_c: f64, ridge: f64) -> Array2<f64> {
    let n = dists.len();
    Array2::from_shape_fn((n, n), |(i, j)| {
        let v = gaussian_rbf(dists.get(i, j), shape_c);
        if i == j {
            v + ridge
        } else {
            v
        }
    })
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Array2<f64>,
    matrix: Array2<f64>,
}

/// Pivots below this fraction of the largest diagonal entry are treated as zero.
const PIVOT_TOLERANCE: f64 = 1e-15;

impl Cholesky {
    pub fn factor(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::shape("cholesky", &[a.nrows(), a.ncols()], &[n, n]));
        }
        let scale = a.diag().iter().fold(0.0_f64, |m, &v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut d = a[[j, j]];
            for k in 0..j {
                d -= l[[j, k]] * l[[j, k]];
            }
            if !(d > PIVOT_TOLERANCE * scale) {
                return Err(Error::Singular(format!(
                    "coefficient matrix is singular or ill-conditioned at pivot {j} \
                     (duplicate or near-duplicate centres?); use a positive ridge"
                )));
            }
            let djj = d.sqrt();
            l[[j, j]] = djj;
            for i in j + 1..n {
                let mut v = a[[i, j]];
                for k in 0..j {
                    v -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = v / djj;
            }
        }
        Ok(Self {
            lower: l,
            matrix: a.clone(),
        })
    }

    fn substitute(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut v = y[i];
            for k in 0..i {
                v -= l[[i, k]] * y[k];
            }
            y[i] = v / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for k in i + 1..n {
                v -= l[[k, i]] * y[k];
            }
            y[i] = v / l[[i, i]];
        }
        y
    }

    /// Solves `A x = b`; the rounded sum of [`Cholesky::solve_compensated`].
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let (hi, lo) = self.solve_compensated(b)?;
        Ok(hi.iter().zip(&lo).map(|(h, l)| h + l).collect())
    }

    /// Solves `A x = b` as an unevaluated sum `hi + lo`, refined against
    /// residuals computed in twice the working precision.
    pub fn solve_compensated(&self, b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.lower.nrows();
        if b.len() != n {
            return Err(Error::shape("cholesky solve", &[n], &[b.len()]));
        }
        let mut hi = self.substitute(b);
        let mut lo = vec![0.0; n];
        let mut best = f64::INFINITY;
        for _ in 0..MAX_REFINEMENTS {
            let r: Vec<f64> = (0..n)
                .map(|i| b[i] - compensated_dot(self.matrix.row(i).iter().copied(), &hi, &lo))
                .collect();
            let size = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if !(size < best) {
                break;
            }
            best = size;
            if size == 0.0 {
                break;
            }
            for (j, dx) in self.substitute(&r).into_iter().enumerate() {
                let (s, e) = two_sum(hi[j], dx);
                let (h, l) = two_sum(s, e + lo[j]);
                hi[j] = h;
                lo[j] = l;
            }
        }
        if hi.iter().chain(&lo).any(|v| !v.is_finite()) {
            return Err(Error::Singular("solution is not finite; use a positive ridge".into()));
        }
        Ok((hi, lo))
    }
}

const MAX_REFINEMENTS: usize = 30;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `Σ a_j (hi_j + lo_j)` accumulated with error-free transformations.
pub fn compensated_dot(a: impl Iterator<Item = f64>, hi: &[f64], lo: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for ((a, &h), &l) in a.zip(hi).zip(lo) {
        let p = a * h;
        let pe = a.mul_add(h, -p);
        let (t, se) = two_sum(s, p);
        s = t;
        c += pe + se + a * l;
    }
    s + c
}

/// Solves `A w = B` for the RBF weights.
pub fn solve_weights(a: &Array2<f64>, b: &[f64]) -> Result<Vec<f64>> {
    Cholesky::factor(a)?.solve(b)
}

fn source_offset(values: &[f64], centering: bool) -> f64 {
    if centering && !values.is_empty() {
        values.iter().sum::<f64>() / values.len() as f64
    } else {
        0.0
    }
}

/// A fitted Gaussian RBF interpolant.
#[derive(Debug, Clone)]
pub struct RbfInterpolant {
    pub source_points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Low-order parts of the weights; `weights[j] + weight_tails[j]` is the solved weight.
    pub weight_tails: Vec<f64>,
    /// Constant added to the kernel sum; the source mean when centering.
    pub offset: f64,
    pub shape_c: f64,
    pub ridge: f64,
    pub metric: DistanceMetric,
}

impl RbfInterpolant {
    pub fn fit(points: &[[f64; 2]], values: &[f64], config: &RbfConfig) -> Result<Self> {
        config.validate()?;
        if points.len() != values.len() {
            return Err(Error::shape("RbfInterpolant::fit", &[points.len()], &[values.len()]));
        }
        let dists = pairwise_distances(points, config.metric)?;
        let shape_c = config.resolve_shape(&dists);
        let ridge = config.resolve_ridge();
        let a = assemble_coefficient_matrix(&dists, shape_c, ridge);
        let offset = source_offset(values, config.centering);
        let centred: Vec<f64> = values.iter().map(|v| v - offset).collect();
        let (weights, weight_tails) = Cholesky::factor(&a)?.solve_compensated(&centred)?;
        Ok(Self {
            source_points: points.to_vec(),
            weights,
            weight_tails,
            offset,
            shape_c,
            ridge,
            metric: config.metric,
        })
    }

    pub fn evaluate_at(&self, q: [f64; 2]) -> f64 {
        let phi = self
            .source_points
            .iter()
            .map(|&p| gaussian_rbf(self.metric.distance(q, p), self.shape_c));
        self.offset + compensated_dot(phi, &self.weights, &self.weight_tails)
    }

    pub fn evaluate(&self, queries: &[[f64; 2]]) -> Vec<f64> {
        queries.iter().map(|&q| self.evaluate_at(q)).collect()
    }
}

pub fn evaluate_interpolant(interp: &RbfInterpolant, queries: &[[f64; 2]]) -> Vec<f64> {
    interp.evaluate(queries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Raw,
    Fused,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Raw => "raw",
            Provenance::Fused => "fused",
        }
    }
}

/// Dense T×S×K fused observations, `values[[t, s, k]]`.
#[derive(Debug, Clone)]
pub struct FusionMatrix {
    pub timestamps: Vec<NaiveDateTime>,
    pub station_order: Vec<String>,
    pub target_order: Vec<String>,
    pub values: Array3<f64>,
    pub provenance: Array3<Provenance>,
}

impl FusionMatrix {
    pub fn dim(&self) -> (usize, usize, usize) {
        self.values.dim()
    }

    pub fn target_index(&self, target: &str) -> Option<usize> {
        self.target_order.iter().position(|t| t == target)
    }

    /// Keeps only the listed targets, in the given order.
    pub fn select_targets(&self, targets: &[&str]) -> Result<FusionMatrix> {
        let idx: Vec<usize> = targets
            .iter()
            .map(|t| {
                self.target_index(t)
                    .ok_or_else(|| Error::Config(format!("unknown target {t:?}")))
            })
            .collect::<Result<_>>()?;
        let (t, s, _) = self.dim();
        Ok(FusionMatrix {
            timestamps: self.timestamps.clone(),
            station_order: self.station_order.clone(),
            target_order: targets.iter().map(|t| t.to_string()).collect(),
            values: Array3::from_shape_fn((t, s, idx.len()), |(a, b, c)| self.values[[a, b, idx[c]]]),
            provenance: Array3::from_shape_fn((t, s, idx.len()), |(a, b, c)| {
                self.provenance[[a, b, idx[c]]]
            }),
        })
    }
}

/// One fused time step.
#[derive(Debug, Clone)]
pub struct FusedStep {
    pub values: Array2<f64>,
    pub provenance: Array2<Provenance>,
}

/// Per-panel fusion state: station geometry, per-target shape parameters and
/// a cache of factorizations keyed by (target, availability pattern).
#[derive(Debug)]
pub struct Fuser {
    coords: Vec<[f64; 2]>,
    target_ids: Vec<String>,
    native: Array2<bool>,
    dists: DistanceMatrix,
    shape: Vec<f64>,
    ridge: f64,
    metric: DistanceMetric,
    centering: bool,
    cache: HashMap<(usize, Vec<bool>), (Vec<usize>, Cholesky)>,
}

impl Fuser {
    pub fn new(stations: &[Station], target_ids: &[String], config: &RbfConfig) -> Result<Self> {
        config.validate()?;
        let coords: Vec<[f64; 2]> = stations.iter().map(Station::coords).collect();
        let dists = pairwise_distances(&coords, config.metric)?;
        let native = native_mask(stations, target_ids);
        let global_default = default_shape(&dists).unwrap_or(1.0);
        let shape = (0..target_ids.len())
            .map(|k| {
                let sources: Vec<usize> = (0..stations.len()).filter(|&s| native[[s, k]]).collect();
                config
                    .shape_c
                    .or_else(|| default_shape(&dists.subset(&sources)))
                    .unwrap_or(global_default)
            })
            .collect();
        Ok(Self {
            coords,
            target_ids: target_ids.to_vec(),
            native,
            dists,
            shape,
            ridge: config.resolve_ridge(),
            metric: config.metric,
            centering: config.centering,
            cache: HashMap::new(),
        })
    }

    pub fn shape_parameters(&self) -> &[f64] {
        &self.shape
    }

    pub fn metric(&self) -> DistanceMetric {
        self.metric
    }

    /// Fuses an S×K slice. `label` names the step in error messages.
    pub fn fuse_step(&mut self, slice: ArrayView2<'_, f64>, label: &str) -> Result<FusedStep> {
        let (n_st, n_tg) = (self.coords.len(), self.target_ids.len());
        if slice.dim() != (n_st, n_tg) {
            return Err(Error::shape("fuse_time_step", &[slice.nrows(), slice.ncols()], &[n_st, n_tg]));
        }
        let mut values = Array2::zeros((n_st, n_tg));
        let mut provenance = Array2::from_elem((n_st, n_tg), Provenance::Fused);
        for k in 0..n_tg {
            let available: Vec<bool> = (0..n_st)
                .map(|s| self.native[[s, k]] && !slice[[s, k]].is_nan())
                .collect();
            if !available.iter().any(|&a| a) {
                return Err(Error::MissingData(format!(
                    "target {:?} has no available source at {label}",
                    self.target_ids[k]
                )));
            }
            let key = (k, available.clone());
            if !self.cache.contains_key(&key) {
                let idx: Vec<usize> = (0..n_st).filter(|&s| available[s]).collect();
                let a = assemble_coefficient_matrix(&self.dists.subset(&idx), self.shape[k], self.ridge);
                let chol = Cholesky::factor(&a).map_err(|e| match e {
                    Error::Singular(msg) => Error::Singular(format!(
                        "target {:?} at {label}: {msg}",
                        self.target_ids[k]
                    )),
                    other => other,
                })?;
                self.cache.insert(key.clone(), (idx, chol));
            }
            let (idx, chol) = &self.cache[&key];
            let raw: Vec<f64> = idx.iter().map(|&s| slice[[s, k]]).collect();
            let offset = source_offset(&raw, self.centering);
            let b: Vec<f64> = raw.iter().map(|v| v - offset).collect();
            let (hi, lo) = chol.solve_compensated(&b)?;
            for s in 0..n_st {
                if available[s] {
                    values[[s, k]] = slice[[s, k]];
                    provenance[[s, k]] = Provenance::Raw;
                } else {
                    let phi = idx.iter().map(|&j| gaussian_rbf(self.dists.get(s, j), self.shape[k]));
                    values[[s, k]] = offset + compensated_dot(phi, &hi, &lo);
                }
            }
        }
        Ok(FusedStep { values, provenance })
    }
}

/// Fuses a single S×K slice against the given stations.
pub fn fuse_time_step(
    slice: ArrayView2<'_, f64>,
    stations: &[Station],
    target_ids: &[String],
    config: &RbfConfig,
) -> Result<Array2<f64>> {
    Ok(Fuser::new(stations, target_ids, config)?
        .fuse_step(slice, "time step")?
        .values)
}

/// Fuses every time step of a (cleaned) panel.
pub fn fuse_panel(panel: &ObservationPanel, config: &RbfConfig) -> Result<FusionMatrix> {
    let mut fuser = Fuser::new(&panel.stations, &panel.target_ids, config)?;
    let (t, s, k) = panel.values.dim();
    let mut values = Array3::zeros((t, s, k));
    let mut provenance = Array3::from_elem((t, s, k), Provenance::Fused);
    for ti in 0..t {
        let label = format_timestamp(&panel.timestamps[ti]);
        let step = fuser.fuse_step(panel.values.slice(s![ti, .., ..]), &label)?;
        values.slice_mut(s![ti, .., ..]).assign(&step.values);
        provenance.slice_mut(s![ti, .., ..]).assign(&step.provenance);
    }
    Ok(FusionMatrix {
        timestamps: panel.timestamps.clone(),
        station_order: panel.stations.iter().map(|s| s.id.clone()).collect(),
        target_order: panel.target_ids.clone(),
        values,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn distance_examples() {
        let d = pairwise_distances(&[[0.0, 0.0], [3.0, 4.0]], DistanceMetric::Euclidean).unwrap();
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(1, 0), 5.0);
        let one = pairwise_distances(&[[1.0, 2.0]], DistanceMetric::Euclidean).unwrap();
        assert_eq!(one.0, Array2::<f64>::zeros((1, 1)));
        let line = pairwise_distances(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], DistanceMetric::Euclidean).unwrap();
        assert_eq!(line.get(0, 2), 2.0);
        assert!(pairwise_distances(&[[f64::NAN, 0.0]], DistanceMetric::Euclidean).is_err());
    }

    #[test]
    fn haversine_one_degree_of_latitude() {
        let d = DistanceMetric::HaversineKm.distance([116.0, 39.0], [116.0, 40.0]);
        assert_abs_diff_eq!(d, 111.195, epsilon = 0.01);
    }

    #[test]
    fn gaussian_values() {
        assert_eq!(gaussian_rbf(0.0, 3.7), 1.0);
        assert_abs_diff_eq!(gaussian_rbf(1.0, 1.0), 0.367_879_441, epsilon = 1e-9);
        assert_abs_diff_eq!(gaussian_rbf(2.0, 0.5), 0.135_335_283, epsilon = 1e-9);
        assert!(gaussian_rbf(1.0, 1.0) > gaussian_rbf(1.1, 1.0));
    }

    #[test]
    fn coefficient_matrix_shape_and_diagonal() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let d = pairwise_distances(&pts, DistanceMetric::Euclidean).unwrap();
        let a = assemble_coefficient_matrix(&d, 1.0, 0.0);
        assert_eq!(a.dim(), (4, 4));
        assert!(a.diag().iter().all(|&v| v == 1.0));
        assert_eq!(a, a.t());

        let single = pairwise_distances(&[[0.0, 0.0]], DistanceMetric::Euclidean).unwrap();
        assert_eq!(assemble_coefficient_matrix(&single, 1.0, 0.0), ndarray::arr2(&[[1.0]]));
    }

    #[test]
    fn one_by_one_solve() {
        let w = solve_weights(&ndarray::arr2(&[[1.0]]), &[5.0]).unwrap();
        assert_eq!(w, vec![5.0]);
    }

    #[test]
    fn coincident_points_are_singular_without_ridge() {
        let cfg = RbfConfig {
            shape_c: Some(1.0),
            ridge: Some(0.0),
            ..Default::default()
        };
        let err = RbfInterpolant::fit(&[[0.0, 0.0], [0.0, 0.0]], &[1.0, 2.0], &cfg).unwrap_err();
        assert!(matches!(err, Error::Singular(msg) if msg.contains("ridge")));

        let ridged = RbfConfig { ridge: Some(1e-3), ..cfg };
        assert!(RbfInterpolant::fit(&[[0.0, 0.0], [0.0, 0.0]], &[1.0, 2.0], &ridged).is_ok());
    }

    #[test]
    fn far_queries_decay_to_offset() {
        let cfg = RbfConfig {
            shape_c: Some(1.0),
            ridge: Some(0.0),
            centering: false,
            ..Default::default()
        };
        let pts = [[0.0, 0.0], [1.0, 0.0]];
        let f = RbfInterpolant::fit(&pts, &[3.0, -2.0], &cfg).unwrap();
        assert_abs_diff_eq!(f.evaluate_at([0.0, 0.0]), 3.0, epsilon = 1e-8);
        assert!(f.evaluate_at([100.0, 100.0]).abs() < 1e-300);

        let centred = RbfInterpolant::fit(&pts, &[3.0, -2.0], &RbfConfig { centering: true, ..cfg }).unwrap();
        assert_abs_diff_eq!(centred.evaluate_at([1.0, 0.0]), -2.0, epsilon = 1e-8);
        assert_eq!(centred.evaluate_at([100.0, 100.0]), 0.5);
    }

    #[test]
    fn default_shape_uses_median_distance() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]];
        let d = pairwise_distances(&pts, DistanceMetric::Euclidean).unwrap();
        // distances 1, 3, 2 -> median 2
        assert_abs_diff_eq!(default_shape(&d).unwrap(), 1.0 / 8.0);
        assert_eq!(default_shape(&d.subset(&[0])), None);
    }

    fn station(id: &str, x: f64, y: f64, targets: &[&str]) -> Station {
        Station {
            id: id.into(),
            source_id: "src".into(),
            x,
            y,
            targets: targets.iter().map(|t| t.to_string()).collect(),
        }
    }

    #[test]
    fn single_station_identity() {
        let st = [station("a", 0.0, 0.0, &["t"])];
        let slice = ndarray::arr2(&[[4.2]]);
        let out = fuse_time_step(slice.view(), &st, &["t".into()], &RbfConfig::default()).unwrap();
        assert_eq!(out, slice);
    }

    #[test]
    fn no_source_for_target_is_an_error() {
        let st = [station("a", 0.0, 0.0, &["t"]), station("b", 1.0, 0.0, &["u"])];
        let slice = ndarray::arr2(&[[f64::NAN, f64::NAN], [f64::NAN, 1.0]]);
        let err = fuse_time_step(slice.view(), &st, &["t".into(), "u".into()], &RbfConfig::default()).unwrap_err();
        assert!(matches!(err, Error::MissingData(msg) if msg.contains("\"t\"")));
    }

    #[test]
    fn missing_native_cell_gets_interpolated() {
        let st = [
            station("a", 0.0, 0.0, &["t"]),
            station("b", 1.0, 0.0, &["t"]),
            station("c", 0.5, 0.0, &["t"]),
        ];
        let slice = ndarray::arr2(&[[1.0], [1.0], [f64::NAN]]);
        let mut fuser = Fuser::new(&st, &["t".into()], &RbfConfig::default()).unwrap();
        let step = fuser.fuse_step(slice.view(), "t0").unwrap();
        assert_eq!(step.provenance[[2, 0]], Provenance::Fused);
        assert_eq!(step.provenance[[0, 0]], Provenance::Raw);
        assert!(step.values[[2, 0]].is_finite());
    }
}

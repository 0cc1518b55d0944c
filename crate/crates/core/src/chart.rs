//! Single-chart Riemannian manifolds.
//!
//! A manifold here is one coordinate chart: a metric closure, a domain
//! predicate, and optional analytic shortcuts (Christoffel symbols, Ricci
//! operator, Einstein constant). No atlases, no transition maps.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};

/// A point given by its chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Copy of the point displaced by `delta` along a coordinate axis.
    pub fn shifted(&self, axis: usize, delta: f64) -> Point {
        let mut coords = self.coords.clone();
        coords[axis] += delta;
        Point { coords }
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

impl From<&[f64]> for Point {
    fn from(coords: &[f64]) -> Self {
        Point::new(coords.to_vec())
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

/// Finite-difference configuration: central stencils of order 2, with an
/// optional level of Richardson extrapolation. The step is relative to the
/// coordinate magnitude.
#[derive(Clone, Copy, Debug)]
pub struct FdConfig {
    pub h: f64,
    pub richardson: bool,
}

impl FdConfig {
    pub fn new(h: f64, richardson: bool) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(GeomError::InvalidInput(format!(
                "finite-difference step must be positive and finite, got {h}"
            )));
        }
        Ok(FdConfig { h, richardson })
    }

    pub fn with_h(h: f64) -> Result<Self> {
        FdConfig::new(h, false)
    }

    /// Actual step used along an axis whose coordinate is `coord`.
    pub fn step(&self, coord: f64) -> f64 {
        self.h * coord.abs().max(1.0)
    }

    /// Central stencils only; the truncation order is fixed.
    pub const fn stencil_order() -> usize {
        2
    }
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            h: 1e-4,
            richardson: false,
        }
    }
}

pub type MetricFn = dyn Fn(&Point) -> DMatrix<f64> + Send + Sync;
pub type DomainFn = dyn Fn(&Point) -> bool + Send + Sync;
/// Christoffel symbols as a list over the upper index: gamma[k][(i, j)].
pub type ChristoffelFn = dyn Fn(&Point) -> Vec<DMatrix<f64>> + Send + Sync;
pub type RicciFn = dyn Fn(&Point) -> DMatrix<f64> + Send + Sync;

/// Upper bound on the metric condition number before inversion errors out.
pub const METRIC_CONDITION_LIMIT: f64 = 1e10;

#[derive(Clone)]
pub struct ChartManifold {
    dim: usize,
    metric: Arc<MetricFn>,
    domain: Arc<DomainFn>,
    analytic_christoffel: Option<Arc<ChristoffelFn>>,
    analytic_ricci: Option<Arc<RicciFn>>,
    einstein_constant: Option<f64>,
}

impl ChartManifold {
    pub fn new<M, D>(dim: usize, metric: M, domain: D) -> Self
    where
        M: Fn(&Point) -> DMatrix<f64> + Send + Sync + 'static,
        D: Fn(&Point) -> bool + Send + Sync + 'static,
    {
        ChartManifold {
            dim,
            metric: Arc::new(metric),
            domain: Arc::new(domain),
            analytic_christoffel: None,
            analytic_ricci: None,
            einstein_constant: None,
        }
    }

    pub fn with_christoffel<C>(mut self, christoffel: C) -> Self
    where
        C: Fn(&Point) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    {
        self.analytic_christoffel = Some(Arc::new(christoffel));
        self
    }

    pub fn with_ricci<R>(mut self, ricci: R) -> Self
    where
        R: Fn(&Point) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.analytic_ricci = Some(Arc::new(ricci));
        self
    }

    pub fn with_einstein_constant(mut self, c: f64) -> Self {
        self.einstein_constant = Some(c);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn einstein_constant(&self) -> Option<f64> {
        self.einstein_constant
    }

    pub fn analytic_christoffel(&self) -> Option<&Arc<ChristoffelFn>> {
        self.analytic_christoffel.as_ref()
    }

    pub fn analytic_ricci(&self) -> Option<&Arc<RicciFn>> {
        self.analytic_ricci.as_ref()
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.dim() == self.dim && (self.domain)(x)
    }

    pub fn require_inside(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        if !(self.domain)(x) {
            return Err(GeomError::OutsideDomain {
                coords: x.coords.clone(),
            });
        }
        Ok(())
    }

    /// Metric components h_ij at x. Checks domain and finiteness.
    pub fn metric_at(&self, x: &Point) -> Result<DMatrix<f64>> {
        self.require_inside(x)?;
        let h = (self.metric)(x);
        if h.nrows() != self.dim || h.ncols() != self.dim {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim,
                got: h.nrows(),
            });
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite { what: "metric" });
        }
        Ok(h)
    }

    /// Inverse metric h^ij, guarded by a condition-number estimate.
    pub fn metric_inverse_at(&self, x: &Point) -> Result<DMatrix<f64>> {
        let h = self.metric_at(x)?;
        invert_spd(&h)
    }
}

/// Inverts a symmetric positive definite matrix via Cholesky, rejecting
/// matrices whose 1-norm condition estimate exceeds the threshold.
pub fn invert_spd(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = h.clone().cholesky().ok_or(GeomError::NotPositiveDefinite)?;
    let inv = chol.inverse();
    let cond = one_norm(h) * one_norm(&inv);
    if !cond.is_finite() || cond > METRIC_CONDITION_LIMIT {
        return Err(GeomError::SingularMetric { cond });
    }
    Ok(inv)
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Flat n-dimensional space: identity metric, all analytic data attached.
pub fn euclidean(n: usize) -> ChartManifold {
    ChartManifold::new(n, move |_: &Point| DMatrix::identity(n, n), |_: &Point| true)
        .with_christoffel(move |_: &Point| vec![DMatrix::zeros(n, n); n])
        .with_ricci(move |_: &Point| DMatrix::zeros(n, n))
        .with_einstein_constant(0.0)
}

/// Flat space without analytic shortcuts, so curvature runs through the full
/// finite-difference path. Used to validate that the machinery reports zero.
pub fn euclidean_numeric(n: usize) -> ChartManifold {
    ChartManifold::new(n, move |_: &Point| DMatrix::identity(n, n), |_: &Point| true)
}

/// The positive orthant { x : x^i > 0 for all i } with the flat metric.
pub fn half_space(n: usize) -> ChartManifold {
    ChartManifold::new(
        n,
        move |_: &Point| DMatrix::identity(n, n),
        |x: &Point| x.coords.iter().all(|&c| c > 0.0),
    )
    .with_christoffel(move |_: &Point| vec![DMatrix::zeros(n, n); n])
    .with_ricci(move |_: &Point| DMatrix::zeros(n, n))
    .with_einstein_constant(0.0)
}

/// Flat space with the origin removed; domain for radial conformal factors.
pub fn punctured_euclidean(n: usize) -> ChartManifold {
    ChartManifold::new(
        n,
        move |_: &Point| DMatrix::identity(n, n),
        |x: &Point| x.norm() > 0.0,
    )
    .with_christoffel(move |_: &Point| vec![DMatrix::zeros(n, n); n])
    .with_ricci(move |_: &Point| DMatrix::zeros(n, n))
    .with_einstein_constant(0.0)
}

/// Unit n-sphere in the stereographic chart: metric 4/(1+|u|^2)^2 * delta on
/// all of R^n (the chart misses one pole). Christoffel symbols are supplied
/// analytically; curvature is left to the numerical path so the Einstein
/// property is a genuine check.
pub fn sphere_stereo(n: usize) -> ChartManifold {
    let metric = move |x: &Point| {
        let r2: f64 = x.coords.iter().map(|c| c * c).sum();
        let lambda = 2.0 / (1.0 + r2);
        DMatrix::identity(n, n) * (lambda * lambda)
    };
    // Conformally flat metric e^{2 phi} delta with phi = ln(2/(1+|u|^2)):
    // Gamma^k_ij = delta^k_i phi_j + delta^k_j phi_i - delta_ij phi_k.
    let christoffel = move |x: &Point| {
        let r2: f64 = x.coords.iter().map(|c| c * c).sum();
        let dphi: Vec<f64> = x.coords.iter().map(|&c| -2.0 * c / (1.0 + r2)).collect();
        conformal_flat_christoffel(n, &dphi)
    };
    ChartManifold::new(n, metric, |_: &Point| true)
        .with_christoffel(christoffel)
        .with_einstein_constant((n - 1) as f64)
}

/// Christoffel symbols of e^{2 phi} delta given the coordinate partials of phi.
pub fn conformal_flat_christoffel(n: usize, dphi: &[f64]) -> Vec<DMatrix<f64>> {
    let mut gamma = vec![DMatrix::zeros(n, n); n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                if k == i {
                    v += dphi[j];
                }
                if k == j {
                    v += dphi[i];
                }
                if i == j {
                    v -= dphi[k];
                }
                gamma[k][(i, j)] = v;
            }
        }
    }
    gamma
}

/// Conformally flat chart e^{2 phi} delta over all of R^n, metric closure
/// only: every derived quantity goes through finite differences. Handy as an
/// independent oracle for analytic paths.
pub fn conformal_euclidean<F>(n: usize, phi: F) -> ChartManifold
where
    F: Fn(&Point) -> f64 + Send + Sync + 'static,
{
    ChartManifold::new(
        n,
        move |x: &Point| {
            let s = (2.0 * phi(x)).exp();
            DMatrix::identity(n, n) * s
        },
        |_: &Point| true,
    )
}

/// Evaluate a contravariant vector's h-norm at x.
pub fn vector_norm(m: &ChartManifold, x: &Point, v: &DVector<f64>) -> Result<f64> {
    let h = m.metric_at(x)?;
    let q = (h * v).dot(v);
    if q < 0.0 && q > -1e-14 {
        return Ok(0.0);
    }
    Ok(q.sqrt())
}

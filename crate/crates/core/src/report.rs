//! Sampling grids and residual summaries shared by the geometric checkers
//! and the command-line front end.

use nalgebra::DVector;

use crate::chart::{vector_norm, ChartManifold, Point};
use crate::error::{GeomError, Result};

/// Rectangular sampling grid: closed per-axis extents with a common number
/// of samples per axis. Endpoints are included; a resolution of one samples
/// the midpoint of each extent.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    extents: Vec<(f64, f64)>,
    resolution: usize,
}

impl GridSpec {
    pub fn new(extents: Vec<(f64, f64)>, resolution: usize) -> Result<Self> {
        if extents.is_empty() {
            return Err(GeomError::InvalidInput(
                "grid needs at least one axis".into(),
            ));
        }
        if resolution == 0 {
            return Err(GeomError::InvalidInput(
                "grid resolution must be at least 1".into(),
            ));
        }
        for &(lo, hi) in &extents {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(GeomError::NonFinite {
                    what: "grid extent",
                });
            }
            if lo > hi {
                return Err(GeomError::InvalidInput(format!(
                    "grid extent [{lo}, {hi}] is reversed"
                )));
            }
        }
        Ok(GridSpec {
            extents,
            resolution,
        })
    }

    /// Cube helper: the same extent on every axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        GridSpec::new(vec![(lo, hi); dim], resolution)
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn extents(&self) -> &[(f64, f64)] {
        &self.extents
    }

    pub fn point_count(&self) -> usize {
        self.resolution.pow(self.dim() as u32)
    }

    /// Sample positions along one axis. The last node is the upper endpoint
    /// exactly, not a rounding of lo + span.
    pub fn axis_nodes(&self, axis: usize) -> Vec<f64> {
        let (lo, hi) = self.extents[axis];
        if self.resolution == 1 {
            return vec![0.5 * (lo + hi)];
        }
        let span = hi - lo;
        let last = self.resolution - 1;
        (0..self.resolution)
            .map(|k| {
                if k == last {
                    hi
                } else {
                    lo + span * (k as f64) / (last as f64)
                }
            })
            .collect()
    }

    /// All grid points in row-major order, first axis slowest. The order is
    /// part of the determinism contract for emitted reports.
    pub fn points(&self) -> Vec<Point> {
        let nodes: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.axis_nodes(a)).collect();
        let total = self.point_count();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.dim()];
        for _ in 0..total {
            let coords: Vec<f64> = idx.iter().enumerate().map(|(a, &k)| nodes[a][k]).collect();
            out.push(Point::new(coords));
            for a in (0..self.dim()).rev() {
                idx[a] += 1;
                if idx[a] < self.resolution {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }
}

/// Pointwise residual vectors over a sample set, with norms taken in the
/// metric of a reference chart at each point.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub points: Vec<Point>,
    pub residuals: Vec<DVector<f64>>,
    pub norms: Vec<f64>,
    pub max_norm: f64,
}

impl ResidualReport {
    pub fn from_samples(
        chart: &ChartManifold,
        points: Vec<Point>,
        residuals: Vec<DVector<f64>>,
    ) -> Result<Self> {
        if points.len() != residuals.len() {
            return Err(GeomError::InvalidInput(format!(
                "residual report got {} points but {} residuals",
                points.len(),
                residuals.len()
            )));
        }
        if points.is_empty() {
            return Err(GeomError::InvalidInput(
                "residual report needs at least one sample".into(),
            ));
        }
        let mut norms = Vec::with_capacity(points.len());
        for (p, r) in points.iter().zip(&residuals) {
            let v = vector_norm(chart, p, r)?;
            if !v.is_finite() {
                return Err(GeomError::NonFinite {
                    what: "residual norm",
                });
            }
            norms.push(v);
        }
        let max_norm = norms.iter().copied().fold(0.0, f64::max);
        Ok(ResidualReport {
            points,
            residuals,
            norms,
            max_norm,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sample with the largest norm; ties resolve to the earliest point so
    /// repeat runs report the same witness.
    pub fn worst(&self) -> (&Point, f64) {
        let mut at = 0;
        for (k, &v) in self.norms.iter().enumerate() {
            if v > self.norms[at] {
                at = k;
            }
        }
        (&self.points[at], self.norms[at])
    }
}

/// Observed convergence order: least-squares slope of log(err) against
/// log(h). Wants at least two distinct positive steps and strictly positive
/// errors; an exact zero means the quantity converged past measurability and
/// has no order to report.
pub fn convergence_order(hs: &[f64], errs: &[f64]) -> Result<f64> {
    if hs.len() != errs.len() || hs.len() < 2 {
        return Err(GeomError::InvalidInput(
            "order estimate needs matching lists of at least two (h, err) pairs".into(),
        ));
    }
    let mut ln_h = Vec::with_capacity(hs.len());
    let mut ln_e = Vec::with_capacity(hs.len());
    for (&h, &e) in hs.iter().zip(errs) {
        if !(h > 0.0 && h.is_finite()) {
            return Err(GeomError::InvalidInput(format!(
                "step must be positive and finite, got {h}"
            )));
        }
        if !(e > 0.0 && e.is_finite()) {
            return Err(GeomError::InvalidInput(format!(
                "error must be positive and finite to fit an order, got {e}"
            )));
        }
        ln_h.push(h.ln());
        ln_e.push(e.ln());
    }
    let n = ln_h.len() as f64;
    let mh = ln_h.iter().sum::<f64>() / n;
    let me = ln_e.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (lh, le) in ln_h.iter().zip(&ln_e) {
        cov += (lh - mh) * (le - me);
        var += (lh - mh) * (lh - mh);
    }
    if var == 0.0 {
        return Err(GeomError::InvalidInput(
            "order estimate needs at least two distinct steps".into(),
        ));
    }
    Ok(cov / var)
}

//! Cubic Hermite tables and composite-Simpson cumulative integrals.
//!
//! These back the tabulated side of the toolkit: level profiles fitted from
//! samples, arclength reparametrizations, and conformal factors rebuilt from
//! ODE solution grids. A table interpolates both values and first derivatives
//! at the nodes, so a solver that provides exact slopes yields a C^1 curve
//! whose derivative is itself piecewise smooth.

use crate::error::{GeomError, Result};

/// Piecewise cubic Hermite interpolant on strictly increasing nodes.
///
/// Stores node positions, values, and slopes. Evaluation outside the node
/// range is an error, not an extrapolation.
#[derive(Clone, Debug)]
pub struct CubicHermite {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl CubicHermite {
    /// Builds a table from nodes, values, and slopes.
    ///
    /// Requires at least two nodes, strictly increasing and finite.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, ms: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() || xs.len() != ms.len() {
            return Err(GeomError::InvalidInput(format!(
                "hermite table needs matching node/value/slope lists with >= 2 entries, got {}/{}/{}",
                xs.len(),
                ys.len(),
                ms.len()
            )));
        }
        for v in xs.iter().chain(ys.iter()).chain(ms.iter()) {
            if !v.is_finite() {
                return Err(GeomError::NonFinite {
                    what: "hermite table entry".into(),
                });
            }
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GeomError::InvalidInput(
                "hermite nodes must be strictly increasing".into(),
            ));
        }
        Ok(Self { xs, ys, ms })
    }

    /// Builds a table and then rescales slopes with the Fritsch-Carlson
    /// limiter, interval by interval.
    ///
    /// Where the data are monotone the limiter keeps the interpolant monotone;
    /// on well-resolved smooth data it never triggers and the slopes pass
    /// through untouched. A flat interval (equal consecutive values) zeroes
    /// the slopes at its ends.
    pub fn monotone(xs: Vec<f64>, ys: Vec<f64>, ms: Vec<f64>) -> Result<Self> {
        let mut t = Self::new(xs, ys, ms)?;
        for k in 0..t.xs.len() - 1 {
            let d = (t.ys[k + 1] - t.ys[k]) / (t.xs[k + 1] - t.xs[k]);
            if d == 0.0 {
                t.ms[k] = 0.0;
                t.ms[k + 1] = 0.0;
                continue;
            }
            let a = t.ms[k] / d;
            let b = t.ms[k + 1] / d;
            let r2 = a * a + b * b;
            if r2 > 9.0 {
                let s = 3.0 / r2.sqrt();
                t.ms[k] = s * a * d;
                t.ms[k + 1] = s * b * d;
            }
        }
        Ok(t)
    }

    pub fn lo(&self) -> f64 {
        self.xs[0]
    }

    pub fn hi(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn covers(&self, x: f64) -> bool {
        x >= self.lo() && x <= self.hi()
    }

    /// Interval index and normalized coordinate for x, or the range error.
    fn locate(&self, x: f64) -> Result<(usize, f64, f64)> {
        if !self.covers(x) {
            return Err(GeomError::OutsideTable {
                value: x,
                lo: self.lo(),
                hi: self.hi(),
            });
        }
        // partition_point gives the first node > x; clamp so x == hi lands in
        // the last interval with t = 1.
        let k = self
            .xs
            .partition_point(|&n| n <= x)
            .saturating_sub(1)
            .min(self.xs.len() - 2);
        let w = self.xs[k + 1] - self.xs[k];
        Ok((k, (x - self.xs[k]) / w, w))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (k, t, w) = self.locate(x)?;
        let t2 = t * t;
        let t3 = t2 * t;
        Ok(self.ys[k] * (2.0 * t3 - 3.0 * t2 + 1.0)
            + self.ms[k] * w * (t3 - 2.0 * t2 + t)
            + self.ys[k + 1] * (3.0 * t2 - 2.0 * t3)
            + self.ms[k + 1] * w * (t3 - t2))
    }

    pub fn deriv(&self, x: f64) -> Result<f64> {
        let (k, t, w) = self.locate(x)?;
        let t2 = t * t;
        Ok((self.ys[k] * (6.0 * t2 - 6.0 * t) + self.ys[k + 1] * (6.0 * t - 6.0 * t2)) / w
            + self.ms[k] * (3.0 * t2 - 4.0 * t + 1.0)
            + self.ms[k + 1] * (3.0 * t2 - 2.0 * t))
    }

    pub fn deriv2(&self, x: f64) -> Result<f64> {
        let (k, t, w) = self.locate(x)?;
        Ok((self.ys[k] * (12.0 * t - 6.0) + self.ys[k + 1] * (6.0 - 12.0 * t)) / (w * w)
            + (self.ms[k] * (6.0 * t - 4.0) + self.ms[k + 1] * (6.0 * t - 2.0)) / w)
    }
}

/// Cumulative integral of `f` along the nodes `xs` by composite Simpson.
///
/// Each interval contributes (w/6)(f(a) + 4 f(mid) + f(b)); entry k of the
/// result is the integral from xs[0] to xs[k], so entry 0 is exactly zero.
/// Exact for cubic integrands interval by interval.
pub fn simpson_cumulative(xs: &[f64], f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    if xs.len() < 2 || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GeomError::InvalidInput(
            "simpson nodes must be strictly increasing with >= 2 entries".into(),
        ));
    }
    let mut out = Vec::with_capacity(xs.len());
    out.push(0.0);
    let mut acc = 0.0;
    let mut fa = f(xs[0]);
    for w in xs.windows(2) {
        let fm = f(0.5 * (w[0] + w[1]));
        let fb = f(w[1]);
        if !fa.is_finite() || !fm.is_finite() || !fb.is_finite() {
            return Err(GeomError::NonFinite {
                what: "simpson integrand sample".into(),
            });
        }
        acc += (w[1] - w[0]) / 6.0 * (fa + 4.0 * fm + fb);
        out.push(acc);
        fa = fb;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics_exactly() {
        // p(x) = x^3 - 2x + 1, sampled with exact slopes: a cubic Hermite
        // table must reproduce value, slope, and curvature to rounding.
        let p = |x: f64| x * x * x - 2.0 * x + 1.0;
        let dp = |x: f64| 3.0 * x * x - 2.0;
        let ddp = |x: f64| 6.0 * x;
        let xs: Vec<f64> = (0..7).map(|k| 0.3 * k as f64 - 0.4).collect();
        let t = CubicHermite::new(
            xs.clone(),
            xs.iter().map(|&x| p(x)).collect(),
            xs.iter().map(|&x| dp(x)).collect(),
        )
        .unwrap();
        for k in 0..60 {
            let x = -0.4 + 1.8 * k as f64 / 59.0;
            assert!((t.eval(x).unwrap() - p(x)).abs() < 1e-12);
            assert!((t.deriv(x).unwrap() - dp(x)).abs() < 1e-11);
            assert!((t.deriv2(x).unwrap() - ddp(x)).abs() < 1e-10);
        }
        // Endpoints included.
        assert!((t.eval(t.hi()).unwrap() - p(t.hi())).abs() < 1e-12);
    }

    #[test]
    fn hermite_rejects_bad_tables_and_out_of_range() {
        assert!(CubicHermite::new(vec![0.0, 0.0, 1.0], vec![0.0; 3], vec![0.0; 3]).is_err());
        assert!(CubicHermite::new(vec![0.0], vec![0.0], vec![0.0]).is_err());
        assert!(CubicHermite::new(vec![0.0, f64::NAN], vec![0.0; 2], vec![0.0; 2]).is_err());
        let t = CubicHermite::new(vec![1.0, 2.0], vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        match t.eval(2.5) {
            Err(GeomError::OutsideTable { value, lo, hi }) => {
                assert_eq!(value, 2.5);
                assert_eq!((lo, hi), (1.0, 2.0));
            }
            other => panic!("expected OutsideTable, got {other:?}"),
        }
        assert!(t.covers(1.0) && t.covers(2.0) && !t.covers(0.999));
    }

    #[test]
    fn monotone_guard_is_inert_on_smooth_data_and_tames_overshoot() {
        // Smooth monotone data with exact slopes: guard must change nothing.
        let xs: Vec<f64> = (0..9).map(|k| 1.0 + 0.25 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| x.ln()).collect();
        let ms: Vec<f64> = xs.iter().map(|&x| 1.0 / x).collect();
        let plain = CubicHermite::new(xs.clone(), ys.clone(), ms.clone()).unwrap();
        let guarded = CubicHermite::monotone(xs, ys, ms).unwrap();
        for k in 0..40 {
            let x = 1.0 + 2.0 * k as f64 / 39.0;
            assert_eq!(plain.eval(x).unwrap(), guarded.eval(x).unwrap());
        }

        // Slopes far too steep for the data: the guarded interpolant stays
        // monotone on the whole interval, the plain one overshoots.
        let t = CubicHermite::monotone(vec![0.0, 1.0], vec![0.0, 1.0], vec![12.0, 12.0]).unwrap();
        let mut prev = t.eval(0.0).unwrap();
        for k in 1..=100 {
            let v = t.eval(k as f64 / 100.0).unwrap();
            assert!(v >= prev - 1e-12);
            prev = v;
        }

        // Flat data segment: slopes there are zeroed, values stay flat.
        let t = CubicHermite::monotone(
            vec![0.0, 1.0, 2.0],
            vec![3.0, 3.0, 4.0],
            vec![0.7, 0.7, 0.7],
        )
        .unwrap();
        assert!((t.eval(0.5).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn simpson_cumulative_matches_closed_forms() {
        // Cubic integrand: Simpson is exact per interval.
        let xs: Vec<f64> = (0..11).map(|k| 0.2 * k as f64).collect();
        let c = simpson_cumulative(&xs, |x| x * x * x - x).unwrap();
        for (k, &x) in xs.iter().enumerate() {
            let exact = x.powi(4) / 4.0 - x * x / 2.0;
            assert!((c[k] - exact).abs() < 1e-14);
        }
        assert_eq!(c[0], 0.0);

        // 1/t on [1, 2]: fourth-order error, far below 1e-8 at 100 intervals.
        let xs: Vec<f64> = (0..=100).map(|k| 1.0 + 0.01 * k as f64).collect();
        let c = simpson_cumulative(&xs, |t| 1.0 / t).unwrap();
        for (k, &x) in xs.iter().enumerate() {
            assert!((c[k] - x.ln()).abs() < 1e-10);
        }

        assert!(simpson_cumulative(&[1.0], |_| 1.0).is_err());
        assert!(simpson_cumulative(&[1.0, 1.0], |_| 1.0).is_err());
        assert!(simpson_cumulative(&[0.0, 1.0], |_| f64::NAN).is_err());
    }
}

//! Reparametrization ODE for conformal exponents built over a unit-speed
//! level function on an Einstein chart.
//!
//! With s the level value, y = rho'(s), sigma the tabulated Laplacian
//! profile, and c the Einstein constant, the exponent solves
//!   y'' = sigma y' - (4-n) y y' - (2c - sigma') y - 2 sigma y^2 - (2-n) y^3.
//! Two families admit closed-form power solutions: linear levels (sigma = 0,
//! slopes y' = a y^2) and radius levels (sigma = -(n-1)/s, slopes y = a/s);
//! each reduces to a quadratic in a. The integrator is classical RK4 with
//! rho accumulated by trapezoid, and a solution table can be recomposed into
//! a scalar exponent field through cubic Hermite interpolation.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chart::Point;
use crate::error::{GeomError, Result};
use crate::fields::ScalarField;
use crate::interp::CubicHermite;

type ProfileFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Data of one reparametrization problem.
///
/// The profile closures must agree: sigma_prime is validated against a
/// central difference of sigma on a construction-time sample. Algebraic
/// operations accept every n >= 1; integration needs n > 2.
pub struct OdeProblem {
    pub n: usize,
    pub c: f64,
    sigma: Arc<ProfileFn>,
    sigma_prime: Arc<ProfileFn>,
    pub s_range: (f64, f64),
    pub init: (f64, f64),
}

impl std::fmt::Debug for OdeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OdeProblem")
            .field("n", &self.n)
            .field("c", &self.c)
            .field("s_range", &self.s_range)
            .field("init", &self.init)
            .finish_non_exhaustive()
    }
}

impl OdeProblem {
    pub fn new(
        n: usize,
        c: f64,
        sigma: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sigma_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        s_range: (f64, f64),
        init: (f64, f64),
    ) -> Result<Self> {
        if n == 0 {
            return Err(GeomError::InvalidInput(
                "the level dimension must be at least 1".into(),
            ));
        }
        let (s0, s1) = s_range;
        if !(s0.is_finite() && s1.is_finite() && s1 > s0) {
            return Err(GeomError::InvalidInput(format!(
                "need a finite increasing s-range, got [{s0}, {s1}]"
            )));
        }
        if !(c.is_finite() && init.0.is_finite() && init.1.is_finite()) {
            return Err(GeomError::NonFinite {
                what: "problem constant or initial data",
            });
        }
        // Interior sample: the profiles must be finite and mutually
        // consistent across the whole corridor, not just at the ends.
        let samples = 17;
        for k in 1..samples {
            let s = s0 + (s1 - s0) * k as f64 / samples as f64;
            let v = sigma(s);
            let vp = sigma_prime(s);
            if !(v.is_finite() && vp.is_finite()) {
                return Err(GeomError::NonFinite {
                    what: "sigma profile sample",
                });
            }
            let h = 1e-5 * s.abs().max(1.0);
            let fd = (sigma(s + h) - sigma(s - h)) / (2.0 * h);
            if (fd - vp).abs() > 1e-6 * vp.abs().max(1.0) {
                return Err(GeomError::InvalidInput(format!(
                    "sigma' disagrees with the derivative of sigma at s = {s}: {vp} vs {fd}"
                )));
            }
        }
        Ok(OdeProblem {
            n,
            c,
            sigma: Arc::new(sigma),
            sigma_prime: Arc::new(sigma_prime),
            s_range,
            init,
        })
    }

    pub fn sigma(&self, s: f64) -> f64 {
        (self.sigma)(s)
    }

    pub fn sigma_prime(&self, s: f64) -> f64 {
        (self.sigma_prime)(s)
    }

    fn require_inside(&self, s: f64) -> Result<()> {
        let (s0, s1) = self.s_range;
        let slack = 1e-9 * (s1.abs() + 1.0);
        if s < s0 - slack || s > s1 + slack {
            return Err(GeomError::OutsideTable {
                value: s,
                lo: s0,
                hi: s1,
            });
        }
        Ok(())
    }
}

/// Second derivative prescribed by the equation at (s, y, y').
pub fn ode_rhs(p: &OdeProblem, s: f64, y: f64, y_prime: f64) -> Result<f64> {
    p.require_inside(s)?;
    let n = p.n as f64;
    let sg = p.sigma(s);
    let sgp = p.sigma_prime(s);
    Ok(sg * y_prime - (4.0 - n) * y * y_prime - (2.0 * p.c - sgp) * y
        - 2.0 * sg * y * y
        - (2.0 - n) * y * y * y)
}

/// Solution table on a uniform grid.
#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub s: Vec<f64>,
    pub y: Vec<f64>,
    pub y_prime: Vec<f64>,
    /// Trapezoid antiderivative of y, normalized to zero at the left end.
    pub rho: Vec<f64>,
    /// Worst second-difference recomputation of the equation on the grid; a
    /// sanity figure, not an error estimate.
    pub max_residual: f64,
}

const BLOW_UP: f64 = 1e6;

/// Classical fourth-order Runge-Kutta over the first-order system (y, y').
pub fn integrate(p: &OdeProblem, step: f64) -> Result<OdeSolution> {
    if p.n <= 2 {
        return Err(GeomError::InvalidInput(format!(
            "integration needs dimension above two, got {}",
            p.n
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(GeomError::InvalidInput(format!(
            "step must be positive and finite, got {step}"
        )));
    }
    let (s0, s1) = p.s_range;
    let count = (((s1 - s0) / step).round() as usize).max(1);
    let h = (s1 - s0) / count as f64;

    let mut s = Vec::with_capacity(count + 1);
    let mut ys = Vec::with_capacity(count + 1);
    let mut yps = Vec::with_capacity(count + 1);
    let (mut y, mut yp) = p.init;
    s.push(s0);
    ys.push(y);
    yps.push(yp);
    for k in 0..count {
        let sk = s0 + (s1 - s0) * k as f64 / count as f64;
        let f = |t: f64, u: (f64, f64)| -> Result<(f64, f64)> {
            Ok((u.1, ode_rhs(p, t, u.0, u.1)?))
        };
        let k1 = f(sk, (y, yp))?;
        let k2 = f(sk + 0.5 * h, (y + 0.5 * h * k1.0, yp + 0.5 * h * k1.1))?;
        let k3 = f(sk + 0.5 * h, (y + 0.5 * h * k2.0, yp + 0.5 * h * k2.1))?;
        let k4 = f(sk + h, (y + h * k3.0, yp + h * k3.1))?;
        y += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        yp += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        let sk1 = s0 + (s1 - s0) * (k + 1) as f64 / count as f64;
        if !(y.is_finite() && yp.is_finite()) {
            return Err(GeomError::NonFinite {
                what: "integration state",
            });
        }
        if y.abs() > BLOW_UP {
            return Err(GeomError::BlowUp { s: sk1, y });
        }
        s.push(sk1);
        ys.push(y);
        yps.push(yp);
    }

    let mut rho = Vec::with_capacity(count + 1);
    rho.push(0.0);
    let mut acc = 0.0;
    for k in 0..count {
        acc += 0.5 * h * (ys[k] + ys[k + 1]);
        rho.push(acc);
    }

    let mut max_residual: f64 = 0.0;
    for k in 1..count {
        let yd = (ys[k + 1] - ys[k - 1]) / (2.0 * h);
        let ydd = (ys[k + 1] - 2.0 * ys[k] + ys[k - 1]) / (h * h);
        let r = ydd - ode_rhs(p, s[k], ys[k], yd)?;
        max_residual = max_residual.max(r.abs());
    }

    Ok(OdeSolution {
        s,
        y: ys,
        y_prime: yps,
        rho,
        max_residual,
    })
}

/// The two closed power-solution families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnsatzFamily {
    /// Levels of a unit-speed linear function; slopes obey y' = a y^2.
    LinearLevels,
    /// Levels of the radius; slopes are y = a/s.
    RadialLevels,
}

/// Quadratic whose roots are the admissible family slopes.
#[derive(Clone, Debug)]
pub struct AnsatzRoots {
    pub family: AnsatzFamily,
    pub n: usize,
    /// (A, B, C) of A a^2 + B a + C = 0.
    pub coeffs: (f64, f64, f64),
    pub discriminant: f64,
    /// Real roots in increasing order; the discriminant sign matches the
    /// count except in the degenerate linear case.
    pub roots: Vec<f64>,
    /// Set when the leading coefficient vanishes (radial family, n = 2);
    /// the single listed root a = 0 is the trivial solution.
    pub degenerate_linear: bool,
}

/// Numerically stable real roots of A a^2 + B a + C, ascending.
fn quadratic_roots(a: f64, b: f64, c: f64, disc: f64) -> Vec<f64> {
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    let sq = disc.sqrt();
    let q = if b >= 0.0 { -(b + sq) / 2.0 } else { -(b - sq) / 2.0 };
    let mut roots = vec![q / a, c / q];
    roots.sort_by(f64::total_cmp);
    roots
}

/// Slope quadratic for linear levels: 2a^2 + (4-n)a + (2-n) = 0. The
/// discriminant is n^2, so the roots {-1, (n-2)/2} are exact.
pub fn ansatz_linear_levels(n: usize) -> AnsatzRoots {
    let nf = n as f64;
    let coeffs = (2.0, 4.0 - nf, 2.0 - nf);
    let disc = coeffs.1 * coeffs.1 - 4.0 * coeffs.0 * coeffs.2;
    AnsatzRoots {
        family: AnsatzFamily::LinearLevels,
        n,
        coeffs,
        discriminant: disc,
        roots: quadratic_roots(coeffs.0, coeffs.1, coeffs.2, disc),
        degenerate_linear: false,
    }
}

/// Slope quadratic for radius levels: (2-n)a^2 - (n+2)a + (4-2n) = 0, with
/// discriminant -7n^2 + 36n - 28. For n = 2 the equation degenerates to
/// -4a = 0 and only the trivial slope survives.
pub fn ansatz_radial_levels(n: usize) -> AnsatzRoots {
    let nf = n as f64;
    let coeffs = (2.0 - nf, -(nf + 2.0), 4.0 - 2.0 * nf);
    let disc = coeffs.1 * coeffs.1 - 4.0 * coeffs.0 * coeffs.2;
    let (roots, degenerate) = if n == 2 {
        (vec![0.0], true)
    } else {
        (quadratic_roots(coeffs.0, coeffs.1, coeffs.2, disc), false)
    };
    AnsatzRoots {
        family: AnsatzFamily::RadialLevels,
        n,
        coeffs,
        discriminant: disc,
        roots,
        degenerate_linear: degenerate,
    }
}

/// Closed-form (y, rho) of a family member at level value s > 0.
///
/// Linear levels: y = -1/(a s), rho = -(ln s)/a, so a = -1 recovers
/// rho = ln s and a = (n-2)/2 gives e^{2 rho} = s^{4/(2-n)}. Radial levels:
/// y = a/s, rho = a ln s. The trivial slope a = 0 is rejected.
pub fn ansatz_solution(family: AnsatzFamily, a: f64, s: f64) -> Result<(f64, f64)> {
    if a == 0.0 {
        return Err(GeomError::InvalidInput(
            "slope zero is the trivial constant exponent".into(),
        ));
    }
    if !(s > 0.0) {
        return Err(GeomError::InvalidInput(format!(
            "closed solutions live on s > 0, got {s}"
        )));
    }
    Ok(match family {
        AnsatzFamily::LinearLevels => (-1.0 / (a * s), -s.ln() / a),
        AnsatzFamily::RadialLevels => (a / s, a * s.ln()),
    })
}

/// Composes the tabulated exponent rho(s) with a level field s(x).
///
/// Two Hermite tables are built from the solution: rho over s with slopes y
/// (monotone-guarded), and y over s with slopes y'. The composed field
/// carries chain-rule gradient and Hessian closures whenever the level field
/// has its own, keeping the fourth-order residual path fully usable. Outside
/// the tabulated s-range every closure reports NaN, which the differential
/// operators surface as non-finite errors.
pub fn conformal_factor_from_solution(
    sol: &OdeSolution,
    s_field: &ScalarField,
) -> Result<ScalarField> {
    let rho_hat = CubicHermite::monotone(sol.s.clone(), sol.rho.clone(), sol.y.clone())?;
    let y_hat = CubicHermite::new(sol.s.clone(), sol.y.clone(), sol.y_prime.clone())?;

    let table = rho_hat;
    let sf = s_field.clone();
    let out = ScalarField::new(move |x: &Point| {
        table.eval(sf.eval(x)).unwrap_or(f64::NAN)
    });

    let Some(grad_s) = s_field.analytic_grad() else {
        return Ok(out);
    };
    let grad_s = grad_s.clone();
    let sf = s_field.clone();
    let slope = y_hat.clone();
    let out = out.with_grad(move |x: &Point| {
        let s = sf.eval(x);
        match slope.eval(s) {
            Ok(v) => grad_s(x) * v,
            Err(_) => DVector::from_element(x.dim(), f64::NAN),
        }
    });

    let Some(hess_s) = s_field.analytic_hessian() else {
        return Ok(out);
    };
    let hess_s = hess_s.clone();
    let grad_s = s_field.analytic_grad().unwrap().clone();
    let sf = s_field.clone();
    Ok(out.with_hessian(move |x: &Point| {
        let s = sf.eval(x);
        match (y_hat.eval(s), y_hat.deriv(s)) {
            (Ok(v), Ok(vd)) => {
                let g = grad_s(x);
                hess_s(x) * v + &g * g.transpose() * vd
            }
            _ => DMatrix::from_element(x.dim(), x.dim(), f64::NAN),
        }
    }))
}

//! Calculus of a conformal change h~ = e^{2 rho} h on a coordinate chart:
//! the corrected connection and curvature, the tension fields of the identity
//! map in both directions, the fourth-order biharmonicity residual and the
//! bitension fields built from it, plus an independently assembled oracle for
//! the forward bitension.
//!
//! Everything follows the sign conventions frozen in `diffops`: the scalar
//! Laplacian is the negative trace of the covariant Hessian, and raw
//! second-derivative traces of vector fields come without a sign flip.

use nalgebra::{DMatrix, DVector};

use crate::chart::{ChartManifold, FdConfig, Point};
use crate::diffops::{
    christoffel, covariant_derivative_vec, covariant_hessian, grad, grad_coeffs, grad_norm_sq,
    grad_norm_sq_gradient, laplacian_scalar, ricci_operator, riemann_tensor, rough_laplacian_vec,
    vector_jacobian, Riemann,
};
use crate::error::{GeomError, Result};
use crate::fields::{ScalarField, VectorField};

/// A base chart together with the exponent of the conformal factor.
#[derive(Clone)]
pub struct ConformalChange {
    pub base: ChartManifold,
    pub rho: ScalarField,
}

impl ConformalChange {
    pub fn new(base: ChartManifold, rho: ScalarField) -> Self {
        ConformalChange { base, rho }
    }

    pub fn n(&self) -> usize {
        self.base.dim()
    }

    /// The tension and bitension formulas degenerate at n = 2 and below.
    pub(crate) fn require_dim(&self) -> Result<()> {
        let n = self.n();
        if n < 3 {
            return Err(GeomError::DimensionTooSmall { n, required: 3 });
        }
        Ok(())
    }

    /// The changed metric e^{2 rho} h as a plain metric closure, with no
    /// analytic shortcuts attached. Deliberately so: oracle tests
    /// differentiate this chart from scratch.
    pub fn changed_metric_numeric(&self) -> ChartManifold {
        let n = self.n();
        let base = self.base.clone();
        let rho = self.rho.clone();
        let dom = self.base.clone();
        ChartManifold::new(
            n,
            move |p: &Point| {
                let h = base
                    .metric_at(p)
                    .unwrap_or_else(|_| DMatrix::from_element(n, n, f64::NAN));
                h * (2.0 * rho.eval(p)).exp()
            },
            move |p: &Point| dom.contains(p),
        )
    }
}

/// grad rho as a reusable vector field; evaluation errors surface as NaN
/// components, which downstream stencils reject as non-finite.
fn grad_field(base: &ChartManifold, rho: &ScalarField, cfg: &FdConfig) -> VectorField {
    let base = base.clone();
    let rho = rho.clone();
    let cfg = *cfg;
    let n = base.dim();
    VectorField::new(move |p: &Point| {
        grad(&base, &rho, p, &cfg).unwrap_or_else(|_| DVector::from_element(n, f64::NAN))
    })
}

fn check_dim(n: usize, v: &DVector<f64>) -> Result<()> {
    if v.len() != n {
        return Err(GeomError::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    Ok(())
}

/// The symmetric correction tensor of the conformal connection:
/// P(X, Y) = X(rho) Y + Y(rho) X - h(X, Y) grad rho, evaluated pointwise.
pub fn p_tensor(
    cc: &ConformalChange,
    xv: &DVector<f64>,
    yv: &DVector<f64>,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DVector<f64>> {
    let n = cc.n();
    check_dim(n, xv)?;
    check_dim(n, yv)?;
    let h = cc.base.metric_at(x)?;
    let hinv = cc.base.metric_inverse_at(x)?;
    let drho = grad_coeffs(&cc.base, &cc.rho, x, cfg)?;
    let g = &hinv * &drho;
    Ok(p_apply(&h, &drho, &g, xv, yv))
}

fn p_apply(
    h: &DMatrix<f64>,
    drho: &DVector<f64>,
    g: &DVector<f64>,
    xv: &DVector<f64>,
    yv: &DVector<f64>,
) -> DVector<f64> {
    let x_rho = drho.dot(xv);
    let y_rho = drho.dot(yv);
    let hxy = (h * xv).dot(yv);
    yv * x_rho + xv * y_rho - g * hxy
}

/// Levi-Civita connection of the changed metric: nabla~_Y X = nabla_Y X + P(Y, X).
pub fn conformal_connection(
    cc: &ConformalChange,
    xf: &VectorField,
    y_dir: &DVector<f64>,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DVector<f64>> {
    let n = cc.n();
    check_dim(n, y_dir)?;
    let base_part = covariant_derivative_vec(&cc.base, xf, y_dir, x, cfg)?;
    let xv = crate::diffops::eval_vector(&cc.base, xf, x)?;
    Ok(base_part + p_tensor(cc, y_dir, &xv, x, cfg)?)
}

/// Christoffel symbols of the changed metric, assembled from the base symbols
/// and the conformal correction; gamma[k][(i, j)].
pub(crate) fn tilde_christoffel(
    cc: &ConformalChange,
    x: &Point,
    cfg: &FdConfig,
) -> Result<Vec<DMatrix<f64>>> {
    let n = cc.n();
    let h = cc.base.metric_at(x)?;
    let hinv = cc.base.metric_inverse_at(x)?;
    let drho = grad_coeffs(&cc.base, &cc.rho, x, cfg)?;
    let g = &hinv * &drho;
    let mut gamma = christoffel(&cc.base, x, cfg)?;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut c = 0.0;
                if k == i {
                    c += drho[j];
                }
                if k == j {
                    c += drho[i];
                }
                c -= h[(i, j)] * g[k];
                gamma[k][(i, j)] += c;
            }
        }
    }
    Ok(gamma)
}

/// Precomputed state for curvature evaluations at a fixed point.
pub(crate) struct CurvatureCtx {
    h: DMatrix<f64>,
    riem: Riemann,
    /// a * v = nabla_v grad rho, via the raised covariant Hessian.
    a: DMatrix<f64>,
    drho: DVector<f64>,
    g: DVector<f64>,
}

impl CurvatureCtx {
    pub(crate) fn new(cc: &ConformalChange, x: &Point, cfg: &FdConfig) -> Result<Self> {
        let h = cc.base.metric_at(x)?;
        let hinv = cc.base.metric_inverse_at(x)?;
        let riem = riemann_tensor(&cc.base, x, cfg)?;
        let hess = covariant_hessian(&cc.base, &cc.rho, x, cfg)?;
        let a = &hinv * hess;
        let drho = grad_coeffs(&cc.base, &cc.rho, x, cfg)?;
        let g = &hinv * &drho;
        Ok(CurvatureCtx { h, riem, a, drho, g })
    }

    pub(crate) fn apply(
        &self,
        xv: &DVector<f64>,
        yv: &DVector<f64>,
        zv: &DVector<f64>,
    ) -> DVector<f64> {
        let r = self.riem.apply(xv, yv, zv);
        let nx = &self.a * xv;
        let ny = &self.a * yv;
        let hz = &self.h * zv;
        let hyz = hz.dot(yv);
        let hxz = hz.dot(xv);
        let pyz = p_apply(&self.h, &self.drho, &self.g, yv, zv);
        let pxz = p_apply(&self.h, &self.drho, &self.g, xv, zv);
        r + yv * hz.dot(&nx) - xv * hz.dot(&ny) - &nx * hyz
            + &ny * hxz
            + p_apply(&self.h, &self.drho, &self.g, xv, &pyz)
            - p_apply(&self.h, &self.drho, &self.g, yv, &pxz)
    }
}

/// Curvature R~(X, Y)Z of the changed metric, written as the base curvature
/// plus correction terms in the Hessian of rho and the P tensor.
pub fn conformal_curvature(
    cc: &ConformalChange,
    xv: &DVector<f64>,
    yv: &DVector<f64>,
    zv: &DVector<f64>,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DVector<f64>> {
    let n = cc.n();
    check_dim(n, xv)?;
    check_dim(n, yv)?;
    check_dim(n, zv)?;
    let ctx = CurvatureCtx::new(cc, x, cfg)?;
    Ok(ctx.apply(xv, yv, zv))
}

/// Tension of the identity map from (chart, h) to (chart, e^{2 rho} h):
/// tau = (2 - n) grad rho.
pub fn tension_forward(cc: &ConformalChange, x: &Point, cfg: &FdConfig) -> Result<DVector<f64>> {
    cc.require_dim()?;
    let n = cc.n() as f64;
    let g = grad(&cc.base, &cc.rho, x, cfg)?;
    Ok(g * (2.0 - n))
}

/// Tension of the identity map in the opposite direction:
/// tau = (n - 2) e^{-2 rho} grad rho.
pub fn tension_reverse(cc: &ConformalChange, x: &Point, cfg: &FdConfig) -> Result<DVector<f64>> {
    cc.require_dim()?;
    let n = cc.n() as f64;
    let g = grad(&cc.base, &cc.rho, x, cfg)?;
    let scale = (n - 2.0) * (-2.0 * cc.rho.eval(x)).exp();
    Ok(g * scale)
}

/// Shared ingredients of the fourth-order residual and both bitensions.
/// Computing them once keeps the defect identity numerically tight: terms
/// that cancel in exact arithmetic cancel exactly here too.
struct ResidualPieces {
    /// Raw trace_h of the second covariant derivative of grad rho.
    t: DVector<f64>,
    g: DVector<f64>,
    /// grad |grad rho|^2.
    gg: DVector<f64>,
    nsq: f64,
    lap: f64,
    ric_g: DVector<f64>,
}

fn residual_pieces(cc: &ConformalChange, x: &Point, cfg: &FdConfig) -> Result<ResidualPieces> {
    let base = &cc.base;
    let rho = &cc.rho;
    let gf = grad_field(base, rho, cfg);
    let t = rough_laplacian_vec(base, &gf, x, cfg)?;
    let g = grad(base, rho, x, cfg)?;
    let gg = grad_norm_sq_gradient(base, rho, x, cfg)?;
    let nsq = grad_norm_sq(base, rho, x, cfg)?;
    let lap = laplacian_scalar(base, rho, x, cfg)?;
    let ric_g = ricci_operator(base, x, cfg)? * &g;
    Ok(ResidualPieces { t, g, gg, nsq, lap, ric_g })
}

fn residual_from_pieces(p: &ResidualPieces, n: f64) -> DVector<f64> {
    &p.t + &p.g * (2.0 * p.lap + (2.0 - n) * p.nsq) + &p.gg * ((6.0 - n) / 2.0) + &p.ric_g
}

fn reverse_core_from_pieces(p: &ResidualPieces, n: f64) -> DVector<f64> {
    &p.t + &p.gg * ((n - 6.0) / 2.0) + &p.g * (2.0 * (p.lap - (n - 4.0) * p.nsq)) + &p.ric_g
}

/// The vector whose vanishing makes the identity map biharmonic in the
/// forward direction:
/// B = trace_h nabla^2 grad rho + (2 Delta rho + (2-n)|grad rho|^2) grad rho
///     + (6-n)/2 grad|grad rho|^2 + Ric(grad rho).
pub fn biharmonic_residual(cc: &ConformalChange, x: &Point, cfg: &FdConfig) -> Result<DVector<f64>> {
    cc.require_dim()?;
    let pieces = residual_pieces(cc, x, cfg)?;
    Ok(residual_from_pieces(&pieces, cc.n() as f64))
}

/// Bitension of the identity map toward the changed metric: (2 - n) B.
pub fn bitension_forward(cc: &ConformalChange, x: &Point, cfg: &FdConfig) -> Result<DVector<f64>> {
    cc.require_dim()?;
    let n = cc.n() as f64;
    let pieces = residual_pieces(cc, x, cfg)?;
    Ok(residual_from_pieces(&pieces, n) * (2.0 - n))
}

/// Bitension of the identity map from the changed metric back to the base.
pub fn bitension_reverse(cc: &ConformalChange, x: &Point, cfg: &FdConfig) -> Result<DVector<f64>> {
    cc.require_dim()?;
    let n = cc.n() as f64;
    let pieces = residual_pieces(cc, x, cfg)?;
    let scale = (n - 2.0) * (-4.0 * cc.rho.eval(x)).exp();
    Ok(reverse_core_from_pieces(&pieces, n) * scale)
}

/// Both sides of the relation tying the two bitension directions together:
/// lhs = tau_2(reverse) + e^{-4 rho} tau_2(forward),
/// rhs = e^{-4 rho} (n-2)(n-6) (grad|grad rho|^2 - |grad rho|^2 grad rho).
/// The right side vanishes identically at n = 6.
pub fn defect_identity(
    cc: &ConformalChange,
    x: &Point,
    cfg: &FdConfig,
) -> Result<(DVector<f64>, DVector<f64>)> {
    cc.require_dim()?;
    let n = cc.n() as f64;
    let pieces = residual_pieces(cc, x, cfg)?;
    let e4 = (-4.0 * cc.rho.eval(x)).exp();
    let rev = reverse_core_from_pieces(&pieces, n) * ((n - 2.0) * e4);
    let fwd = residual_from_pieces(&pieces, n) * (2.0 - n);
    let lhs = rev + fwd * e4;
    let rhs = (&pieces.gg - &pieces.g * pieces.nsq) * (e4 * (n - 2.0) * (n - 6.0));
    Ok((lhs, rhs))
}

/// The rough-Laplacian half of the forward bitension, -Delta tau, expanded:
/// (2-n) { trace_h nabla^2 grad rho + 3/2 grad|grad rho|^2
///         + nabla_{grad rho} grad rho + (Delta rho + (2-n)|grad rho|^2) grad rho }.
/// The covariant derivative of grad rho along itself is differentiated
/// directly rather than through the Hessian identity, so recombination with
/// the curvature half is a genuine numerical check.
pub fn tension_laplacian_term(
    cc: &ConformalChange,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DVector<f64>> {
    cc.require_dim()?;
    let n = cc.n() as f64;
    let pieces = residual_pieces(cc, x, cfg)?;
    let gf = grad_field(&cc.base, &cc.rho, cfg);
    let nabla_gg = covariant_derivative_vec(&cc.base, &gf, &pieces.g, x, cfg)?;
    let inner = &pieces.t
        + &pieces.gg * 1.5
        + nabla_gg
        + &pieces.g * (pieces.lap + (2.0 - n) * pieces.nsq);
    Ok(inner * (2.0 - n))
}

/// The curvature half of the forward bitension, trace_h R~(., tau) . :
/// (2-n) { -Ric(grad rho) - (Delta rho) grad rho - (2-n) nabla_{grad rho} grad rho }.
pub fn tension_curvature_term(
    cc: &ConformalChange,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DVector<f64>> {
    cc.require_dim()?;
    let n = cc.n() as f64;
    let pieces = residual_pieces(cc, x, cfg)?;
    let gf = grad_field(&cc.base, &cc.rho, cfg);
    let nabla_gg = covariant_derivative_vec(&cc.base, &gf, &pieces.g, x, cfg)?;
    let inner = -&pieces.ric_g - &pieces.g * pieces.lap - nabla_gg * (2.0 - n);
    Ok(inner * (2.0 - n))
}

/// Forward bitension assembled from the definition instead of the closed
/// form: the pullback rough Laplacian of tau through the corrected
/// connection (traced with the base metric), minus the curvature trace of
/// the changed metric. Shares no cancellation structure with
/// `bitension_forward`, which makes it a genuine cross-check.
pub fn bitension_oracle_fd(
    cc: &ConformalChange,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DVector<f64>> {
    cc.require_dim()?;
    let n = cc.n();
    let nf = n as f64;
    let base = &cc.base;
    let hinv = base.metric_inverse_at(x)?;
    let gamma = christoffel(base, x, cfg)?;

    let gf = grad_field(base, &cc.rho, cfg);
    let tau_field = {
        let gf = gf.clone();
        let scale = 2.0 - nf;
        VectorField::new(move |p: &Point| gf.eval(p) * scale)
    };

    // D(p)[(k, j)] = (nabla~_j tau)^k with the corrected connection.
    let dmat = |p: &Point| -> Result<DMatrix<f64>> {
        let mut d = vector_jacobian(base, &tau_field, p, cfg)?;
        let tg = tilde_christoffel(cc, p, cfg)?;
        let tau_p = crate::diffops::eval_vector(base, &tau_field, p)?;
        for k in 0..n {
            for j in 0..n {
                for m in 0..n {
                    d[(k, j)] += tg[k][(j, m)] * tau_p[m];
                }
            }
        }
        Ok(d)
    };

    let d_here = dmat(x)?;
    let tg_here = tilde_christoffel(cc, x, cfg)?;

    // Coordinate derivatives of the D field.
    let mut ddi = Vec::with_capacity(n);
    for i in 0..n {
        let hi = cfg.step(x[i]);
        let diff = |hh: f64| -> Result<DMatrix<f64>> {
            let pp = x.shifted(i, hh);
            let pm = x.shifted(i, -hh);
            if !base.contains(&pp) || !base.contains(&pm) {
                return Err(GeomError::StencilOutsideDomain {
                    coords: x.coords.clone(),
                    axis: i,
                });
            }
            Ok((dmat(&pp)? - dmat(&pm)?) / (2.0 * hh))
        };
        let d = if cfg.richardson {
            (diff(hi / 2.0)? * 4.0 - diff(hi)?) / 3.0
        } else {
            diff(hi)?
        };
        ddi.push(d);
    }

    // trace_h of the second pullback derivative: the direction correction
    // uses the base connection because the trace runs over the domain.
    let mut trace = DVector::zeros(n);
    for k in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let w = hinv[(i, j)];
                if w == 0.0 {
                    continue;
                }
                let mut term = ddi[i][(k, j)];
                for m in 0..n {
                    term += tg_here[k][(i, m)] * d_here[(m, j)];
                }
                for l in 0..n {
                    term -= gamma[l][(i, j)] * d_here[(k, l)];
                }
                acc += w * term;
            }
        }
        trace[k] = acc;
    }

    // Curvature trace of the changed metric along tau.
    let ctx = CurvatureCtx::new(cc, x, cfg)?;
    let tau_here = crate::diffops::eval_vector(base, &tau_field, x)?;
    let mut curv = DVector::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let w = hinv[(i, j)];
            if w == 0.0 {
                continue;
            }
            let mut ei = DVector::zeros(n);
            ei[i] = 1.0;
            let mut ej = DVector::zeros(n);
            ej[j] = 1.0;
            curv += ctx.apply(&ei, &tau_here, &ej) * w;
        }
    }

    Ok(trace - curv)
}

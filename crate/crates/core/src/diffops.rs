//! Differential operators on a chart: gradients, Hessians, Laplacians,
//! covariant derivatives, rough Laplacian of vector fields, curvature.
//!
//! Sign conventions, fixed once and used everywhere:
//!   * Laplacian on functions is the geometer's: Δf = −trace_h ∇²f, so the
//!     radius field on flat R^n has Δr = −(n−1)/r.
//!   * `rough_laplacian_vec` returns the raw trace_h ∇²X; the geometer's
//!     vector Laplacian is its negative.
//!   * Curvature: R(∂_i,∂_j)∂_k = R^l_{kij} ∂_l with
//!     R^l_{kij} = ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^l_{im}Γ^m_{jk} − Γ^l_{jm}Γ^m_{ik}.
//!   * Ricci operator: Ric^l_i = h^{jk} R^l_{kij}; on the unit n-sphere this
//!     is (n−1)·Identity.

use nalgebra::{DMatrix, DVector};

use crate::chart::{ChartManifold, FdConfig, Point};
use crate::error::{GeomError, Result};
use crate::fields::{ScalarField, VectorField};

/// Evaluate a scalar field with domain and finiteness checks.
pub fn eval_scalar(m: &ChartManifold, f: &ScalarField, x: &Point) -> Result<f64> {
    m.require_inside(x)?;
    let v = f.eval(x);
    if !v.is_finite() {
        return Err(GeomError::NonFinite { what: "scalar field" });
    }
    Ok(v)
}

fn eval_shifted(m: &ChartManifold, f: &ScalarField, x: &Point, axis: usize, d: f64) -> Result<f64> {
    let p = x.shifted(axis, d);
    if !m.contains(&p) {
        return Err(GeomError::StencilOutsideDomain {
            coords: x.coords.clone(),
            axis,
        });
    }
    let v = f.eval(&p);
    if !v.is_finite() {
        return Err(GeomError::NonFinite { what: "scalar field" });
    }
    Ok(v)
}

/// Central difference of order 2 with optional one-level Richardson step.
fn richardson2<E>(base: E, h: f64, richardson: bool) -> Result<f64>
where
    E: Fn(f64) -> Result<f64>,
{
    if richardson {
        Ok((4.0 * base(h / 2.0)? - base(h)?) / 3.0)
    } else {
        base(h)
    }
}

/// ∂_axis f at x by central differences (or the analytic gradient).
pub fn partial_scalar(
    m: &ChartManifold,
    f: &ScalarField,
    x: &Point,
    axis: usize,
    cfg: &FdConfig,
) -> Result<f64> {
    if let Some(g) = f.analytic_grad() {
        m.require_inside(x)?;
        return Ok(g(x)[axis]);
    }
    let h = cfg.step(x[axis]);
    richardson2(
        |hh| {
            Ok((eval_shifted(m, f, x, axis, hh)? - eval_shifted(m, f, x, axis, -hh)?) / (2.0 * hh))
        },
        h,
        cfg.richardson,
    )
}

/// All coordinate partials (d f)_i as a covector.
pub fn grad_coeffs(
    m: &ChartManifold,
    f: &ScalarField,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DVector<f64>> {
    if let Some(g) = f.analytic_grad() {
        m.require_inside(x)?;
        let v = g(x);
        if v.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::NonFinite { what: "analytic gradient" });
        }
        return Ok(v);
    }
    let n = m.dim();
    let mut out = DVector::zeros(n);
    for i in 0..n {
        out[i] = partial_scalar(m, f, x, i, cfg)?;
    }
    Ok(out)
}

/// The h-gradient (grad f)^i = h^{ij} ∂_j f.
pub fn grad(m: &ChartManifold, f: &ScalarField, x: &Point, cfg: &FdConfig) -> Result<DVector<f64>> {
    let hinv = m.metric_inverse_at(x)?;
    Ok(hinv * grad_coeffs(m, f, x, cfg)?)
}

/// Coordinate second partials ∂_i ∂_j f.
pub fn coordinate_hessian(
    m: &ChartManifold,
    f: &ScalarField,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DMatrix<f64>> {
    if let Some(hs) = f.analytic_hessian() {
        m.require_inside(x)?;
        let v = hs(x);
        if v.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::NonFinite { what: "analytic hessian" });
        }
        return Ok(v);
    }
    let n = m.dim();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let hi = cfg.step(x[i]);
        let dii = richardson2(
            |hh| {
                Ok((eval_shifted(m, f, x, i, hh)? - 2.0 * eval_scalar(m, f, x)?
                    + eval_shifted(m, f, x, i, -hh)?)
                    / (hh * hh))
            },
            hi,
            cfg.richardson,
        )?;
        out[(i, i)] = dii;
        for j in (i + 1)..n {
            let hj = cfg.step(x[j]);
            let cross = |hh_i: f64, hh_j: f64| -> Result<f64> {
                let ev = |si: f64, sj: f64| -> Result<f64> {
                    let p = x.shifted(i, si).shifted(j, sj);
                    if !m.contains(&p) {
                        return Err(GeomError::StencilOutsideDomain {
                            coords: x.coords.clone(),
                            axis: j,
                        });
                    }
                    let v = f.eval(&p);
                    if !v.is_finite() {
                        return Err(GeomError::NonFinite { what: "scalar field" });
                    }
                    Ok(v)
                };
                Ok((ev(hh_i, hh_j)? - ev(hh_i, -hh_j)? - ev(-hh_i, hh_j)? + ev(-hh_i, -hh_j)?)
                    / (4.0 * hh_i * hh_j))
            };
            let dij = if cfg.richardson {
                (4.0 * cross(hi / 2.0, hj / 2.0)? - cross(hi, hj)?) / 3.0
            } else {
                cross(hi, hj)?
            };
            out[(i, j)] = dij;
            out[(j, i)] = dij;
        }
    }
    Ok(out)
}

/// Christoffel symbols Γ^k_ij = ½ h^{kl} (∂_i h_jl + ∂_j h_il − ∂_l h_ij),
/// indexed as gamma[k][(i, j)]. Analytic symbols win when the chart has them.
pub fn christoffel(m: &ChartManifold, x: &Point, cfg: &FdConfig) -> Result<Vec<DMatrix<f64>>> {
    if let Some(g) = m.analytic_christoffel() {
        m.require_inside(x)?;
        let v = g(x);
        if v.len() != m.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: m.dim(),
                got: v.len(),
            });
        }
        return Ok(v);
    }
    let n = m.dim();
    let hinv = m.metric_inverse_at(x)?;
    // dh[i] = ∂_i h as a matrix.
    let mut dh = Vec::with_capacity(n);
    for i in 0..n {
        let hi = cfg.step(x[i]);
        let diff = |hh: f64| -> Result<DMatrix<f64>> {
            let pp = x.shifted(i, hh);
            let pm = x.shifted(i, -hh);
            if !m.contains(&pp) || !m.contains(&pm) {
                return Err(GeomError::StencilOutsideDomain {
                    coords: x.coords.clone(),
                    axis: i,
                });
            }
            Ok((m.metric_at(&pp)? - m.metric_at(&pm)?) / (2.0 * hh))
        };
        let d = if cfg.richardson {
            (diff(hi / 2.0)? * 4.0 - diff(hi)?) / 3.0
        } else {
            diff(hi)?
        };
        dh.push(d);
    }
    let mut gamma = vec![DMatrix::zeros(n, n); n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut sum = 0.0;
                for l in 0..n {
                    sum += hinv[(k, l)] * (dh[i][(j, l)] + dh[j][(i, l)] - dh[l][(i, j)]);
                }
                let v = 0.5 * sum;
                gamma[k][(i, j)] = v;
                gamma[k][(j, i)] = v;
            }
        }
    }
    Ok(gamma)
}

/// Covariant Hessian (∇²f)_ij = ∂_i ∂_j f − Γ^l_ij ∂_l f.
pub fn covariant_hessian(
    m: &ChartManifold,
    f: &ScalarField,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DMatrix<f64>> {
    let n = m.dim();
    let chess = coordinate_hessian(m, f, x, cfg)?;
    let df = grad_coeffs(m, f, x, cfg)?;
    let gamma = christoffel(m, x, cfg)?;
    let mut out = chess;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                out[(i, j)] -= gamma[l][(i, j)] * df[l];
            }
        }
    }
    Ok(out)
}

/// Geometer's Laplacian Δf = −h^{ij} (∇²f)_ij = −div grad f.
pub fn laplacian_scalar(m: &ChartManifold, f: &ScalarField, x: &Point, cfg: &FdConfig) -> Result<f64> {
    let hinv = m.metric_inverse_at(x)?;
    let hess = covariant_hessian(m, f, x, cfg)?;
    Ok(-(hinv * hess).trace())
}

/// |grad f|²_h = h^{ij} ∂_i f ∂_j f.
pub fn grad_norm_sq(m: &ChartManifold, f: &ScalarField, x: &Point, cfg: &FdConfig) -> Result<f64> {
    let hinv = m.metric_inverse_at(x)?;
    let df = grad_coeffs(m, f, x, cfg)?;
    Ok((&hinv * &df).dot(&df))
}

/// grad(|grad f|²) computed through the identity
/// d|grad f|² = 2 (∇²f)(grad f, ·), which avoids one finite-difference level:
/// result^k = 2 h^{km} (∇²f)_{mj} h^{jl} ∂_l f.
pub fn grad_norm_sq_gradient(
    m: &ChartManifold,
    f: &ScalarField,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DVector<f64>> {
    let hinv = m.metric_inverse_at(x)?;
    let hess = covariant_hessian(m, f, x, cfg)?;
    let df = grad_coeffs(m, f, x, cfg)?;
    let gradf = &hinv * &df;
    Ok(&hinv * (hess * gradf) * 2.0)
}

pub(crate) fn eval_vector(m: &ChartManifold, xf: &VectorField, x: &Point) -> Result<DVector<f64>> {
    if !m.contains(x) {
        return Err(GeomError::OutsideDomain {
            coords: x.coords.clone(),
        });
    }
    let v = xf.eval(x);
    if v.len() != m.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: m.dim(),
            got: v.len(),
        });
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(GeomError::NonFinite { what: "vector field" });
    }
    Ok(v)
}

/// Coordinate Jacobian ∂_i X^k of a vector field, by central differences.
/// Column i holds ∂_i X.
pub(crate) fn vector_jacobian(
    m: &ChartManifold,
    xf: &VectorField,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DMatrix<f64>> {
    let n = m.dim();
    let mut jac = DMatrix::zeros(n, n);
    for i in 0..n {
        let hi = cfg.step(x[i]);
        let diff = |hh: f64| -> Result<DVector<f64>> {
            let pp = x.shifted(i, hh);
            let pm = x.shifted(i, -hh);
            if !m.contains(&pp) || !m.contains(&pm) {
                return Err(GeomError::StencilOutsideDomain {
                    coords: x.coords.clone(),
                    axis: i,
                });
            }
            Ok((eval_vector(m, xf, &pp)? - eval_vector(m, xf, &pm)?) / (2.0 * hh))
        };
        let col = if cfg.richardson {
            (diff(hi / 2.0)? * 4.0 - diff(hi)?) / 3.0
        } else {
            diff(hi)?
        };
        jac.set_column(i, &col);
    }
    Ok(jac)
}

/// Levi-Civita covariant derivative (∇_Y X)^k = Y^i (∂_i X^k + Γ^k_il X^l).
pub fn covariant_derivative_vec(
    m: &ChartManifold,
    xf: &VectorField,
    y_dir: &DVector<f64>,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DVector<f64>> {
    let n = m.dim();
    let jac = vector_jacobian(m, xf, x, cfg)?;
    let xv = eval_vector(m, xf, x)?;
    let gamma = christoffel(m, x, cfg)?;
    let mut out = DVector::zeros(n);
    for k in 0..n {
        let mut v = 0.0;
        for i in 0..n {
            let mut dk = jac[(k, i)];
            for l in 0..n {
                dk += gamma[k][(i, l)] * xv[l];
            }
            v += y_dir[i] * dk;
        }
        out[k] = v;
    }
    Ok(out)
}

/// The full covariant derivative as a matrix D with D[(k, j)] = (∇_j X)^k.
fn covariant_derivative_matrix(
    m: &ChartManifold,
    xf: &VectorField,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DMatrix<f64>> {
    let n = m.dim();
    let jac = vector_jacobian(m, xf, x, cfg)?;
    let xv = eval_vector(m, xf, x)?;
    let gamma = christoffel(m, x, cfg)?;
    let mut out = jac;
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                out[(k, j)] += gamma[k][(j, l)] * xv[l];
            }
        }
    }
    Ok(out)
}

/// Raw second-derivative trace: trace_h ∇²X, returned without the sign flip.
/// The geometer's rough Laplacian is −(this value). In coordinates:
/// h^{ij} [ ∂_i (∇_j X)^k + Γ^k_im (∇_j X)^m − Γ^l_ij (∇_l X)^k ].
pub fn rough_laplacian_vec(
    m: &ChartManifold,
    xf: &VectorField,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DVector<f64>> {
    let n = m.dim();
    let hinv = m.metric_inverse_at(x)?;
    let gamma = christoffel(m, x, cfg)?;
    let d_here = covariant_derivative_matrix(m, xf, x, cfg)?;

    // ∂_i of the matrix field D[(k, j)] = (∇_j X)^k, central differences.
    let mut ddi = Vec::with_capacity(n);
    for i in 0..n {
        let hi = cfg.step(x[i]);
        let diff = |hh: f64| -> Result<DMatrix<f64>> {
            let pp = x.shifted(i, hh);
            let pm = x.shifted(i, -hh);
            if !m.contains(&pp) || !m.contains(&pm) {
                return Err(GeomError::StencilOutsideDomain {
                    coords: x.coords.clone(),
                    axis: i,
                });
            }
            Ok((covariant_derivative_matrix(m, xf, &pp, cfg)?
                - covariant_derivative_matrix(m, xf, &pm, cfg)?)
                / (2.0 * hh))
        };
        let d = if cfg.richardson {
            (diff(hi / 2.0)? * 4.0 - diff(hi)?) / 3.0
        } else {
            diff(hi)?
        };
        ddi.push(d);
    }

    let mut out = DVector::zeros(n);
    for k in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let w = hinv[(i, j)];
                if w == 0.0 {
                    continue;
                }
                let mut term = ddi[i][(k, j)];
                for mm in 0..n {
                    term += gamma[k][(i, mm)] * d_here[(mm, j)];
                }
                for l in 0..n {
                    term -= gamma[l][(i, j)] * d_here[(k, l)];
                }
                acc += w * term;
            }
        }
        out[k] = acc;
    }
    Ok(out)
}

/// Riemann curvature in mixed components R^l_{kij}: R(∂_i,∂_j)∂_k = R^l_{kij} ∂_l.
pub struct Riemann {
    n: usize,
    data: Vec<f64>,
}

impl Riemann {
    fn idx(&self, l: usize, k: usize, i: usize, j: usize) -> usize {
        ((l * self.n + k) * self.n + i) * self.n + j
    }

    pub fn get(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        self.data[self.idx(l, k, i, j)]
    }

    /// Evaluate R(X, Y)Z on contravariant components.
    pub fn apply(&self, xv: &DVector<f64>, yv: &DVector<f64>, zv: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(n);
        for l in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                let zk = zv[k];
                if zk == 0.0 {
                    continue;
                }
                for i in 0..n {
                    let xi = xv[i];
                    if xi == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        acc += self.get(l, k, i, j) * zk * xi * yv[j];
                    }
                }
            }
            out[l] = acc;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Curvature from Christoffel symbols and their FD derivatives:
/// R^l_{kij} = ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^l_{im}Γ^m_{jk} − Γ^l_{jm}Γ^m_{ik}.
pub fn riemann_tensor(m: &ChartManifold, x: &Point, cfg: &FdConfig) -> Result<Riemann> {
    let n = m.dim();
    let gamma = christoffel(m, x, cfg)?;
    // dgamma[i][k][(j, l... )]: ∂_i Γ, same layout as christoffel output.
    let mut dgamma = Vec::with_capacity(n);
    for i in 0..n {
        let hi = cfg.step(x[i]);
        let diff = |hh: f64| -> Result<Vec<DMatrix<f64>>> {
            let pp = x.shifted(i, hh);
            let pm = x.shifted(i, -hh);
            if !m.contains(&pp) || !m.contains(&pm) {
                return Err(GeomError::StencilOutsideDomain {
                    coords: x.coords.clone(),
                    axis: i,
                });
            }
            let gp = christoffel(m, &pp, cfg)?;
            let gm = christoffel(m, &pm, cfg)?;
            Ok((0..n)
                .map(|k| (&gp[k] - &gm[k]) / (2.0 * hh))
                .collect())
        };
        let d = if cfg.richardson {
            let fine = diff(hi / 2.0)?;
            let coarse = diff(hi)?;
            (0..n)
                .map(|k| (&fine[k] * 4.0 - &coarse[k]) / 3.0)
                .collect()
        } else {
            diff(hi)?
        };
        dgamma.push(d);
    }

    let mut data = vec![0.0; n * n * n * n];
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = dgamma[i][l][(j, k)] - dgamma[j][l][(i, k)];
                    for mm in 0..n {
                        v += gamma[l][(i, mm)] * gamma[mm][(j, k)]
                            - gamma[l][(j, mm)] * gamma[mm][(i, k)];
                    }
                    data[((l * n + k) * n + i) * n + j] = v;
                }
            }
        }
    }
    Ok(Riemann { n, data })
}

/// Ricci operator (mixed components) Ric^l_i = h^{jk} R^l_{kij}.
/// With this contraction the unit n-sphere gives (n−1)·Identity.
pub fn ricci_operator(m: &ChartManifold, x: &Point, cfg: &FdConfig) -> Result<DMatrix<f64>> {
    if let Some(r) = m.analytic_ricci() {
        m.require_inside(x)?;
        return Ok(r(x));
    }
    let n = m.dim();
    let hinv = m.metric_inverse_at(x)?;
    let riem = riemann_tensor(m, x, cfg)?;
    let mut ric = DMatrix::zeros(n, n);
    for l in 0..n {
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += hinv[(j, k)] * riem.get(l, k, i, j);
                }
            }
            ric[(l, i)] = acc;
        }
    }
    Ok(ric)
}

/// h-orthonormal frame at x by Gram-Schmidt on the coordinate basis in
/// ascending index order. Columns of the result are the frame vectors.
pub fn orthonormal_frame(m: &ChartManifold, x: &Point) -> Result<DMatrix<f64>> {
    let n = m.dim();
    let h = m.metric_at(x)?;
    let mut frame = DMatrix::zeros(n, n);
    for a in 0..n {
        let mut v = DVector::zeros(n);
        v[a] = 1.0;
        for b in 0..a {
            let eb = frame.column(b).clone_owned();
            let proj = (&h * &eb).dot(&v);
            v -= eb * proj;
        }
        let norm_sq = (&h * &v).dot(&v);
        if !(norm_sq > 0.0) {
            return Err(GeomError::NotPositiveDefinite);
        }
        v /= norm_sq.sqrt();
        frame.set_column(a, &v);
    }
    Ok(frame)
}

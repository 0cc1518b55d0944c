//! Product projections composed with a conformal change of the target
//! metric. The projection of (B x F, h + flat) onto (B, h) is a Riemannian
//! submersion with totally geodesic flat fibers, so composing it with the
//! identity into (B, e^{2 rho} h) must reproduce the identity's tension and
//! bitension. The checks here recompute both sides independently: the
//! lifted side by raw finite differences of the composed map, the identity
//! side from the closed forms.

use nalgebra::{DMatrix, DVector};

use crate::chart::{ChartManifold, FdConfig, Point};
use crate::conformal::{
    bitension_forward, tension_forward, tilde_christoffel, ConformalChange, CurvatureCtx,
};
use crate::diffops::christoffel;
use crate::error::{GeomError, Result};
use crate::report::ResidualReport;

/// Projection of a metric product onto its first factor: the total space
/// keeps the base metric on the leading block and a flat fiber metric on
/// the rest, so the first-coordinates map is a Riemannian submersion.
#[derive(Clone)]
pub struct ProductSubmersion {
    base: ChartManifold,
    total_dim: usize,
}

impl ProductSubmersion {
    /// Requires at least one fiber dimension; a projection onto the whole
    /// space is the identity and belongs to the conformal module.
    pub fn new(base: ChartManifold, total_dim: usize) -> Result<Self> {
        if total_dim <= base.dim() {
            return Err(GeomError::DimensionTooSmall {
                n: total_dim,
                required: base.dim() + 1,
            });
        }
        Ok(ProductSubmersion { base, total_dim })
    }

    pub fn base(&self) -> &ChartManifold {
        &self.base
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn fiber_dim(&self) -> usize {
        self.total_dim - self.base.dim()
    }

    /// First base_dim coordinates of a total-space point.
    pub fn project(&self, x: &Point) -> Result<Point> {
        if x.dim() != self.total_dim {
            return Err(GeomError::DimensionMismatch {
                expected: self.total_dim,
                got: x.dim(),
            });
        }
        Ok(Point::new(x.coords[..self.base.dim()].to_vec()))
    }

    /// The product chart: block metric h(pi(x)) on the base slots, identity
    /// on the fiber slots, domain pulled back from the base.
    pub fn total_chart(&self) -> ChartManifold {
        let n = self.base.dim();
        let m = self.total_dim;
        let base = self.base.clone();
        let dom = self.base.clone();
        ChartManifold::new(
            m,
            move |p: &Point| {
                let mut g = DMatrix::identity(m, m);
                if p.dim() == m {
                    let b = Point::new(p.coords[..n].to_vec());
                    match base.metric_at(&b) {
                        Ok(h) => g.view_mut((0, 0), (n, n)).copy_from(&h),
                        Err(_) => g.fill(f64::NAN),
                    }
                } else {
                    g.fill(f64::NAN);
                }
                g
            },
            move |p: &Point| {
                p.dim() == m
                    && p.coords.iter().all(|c| c.is_finite())
                    && dom.contains(&Point::new(p.coords[..n].to_vec()))
            },
        )
    }

    /// Largest deviation of the horizontal block of the total metric from
    /// the base metric at the projected point. Zero means dpi is an isometry
    /// on horizontal vectors, the defining property of the submersion.
    pub fn horizontal_isometry_defect(&self, x: &Point) -> Result<f64> {
        let b = self.project(x)?;
        let h = self.base.metric_at(&b)?;
        let g = self.total_chart().metric_at(x)?;
        let n = self.base.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((g[(i, j)] - h[(i, j)]).abs());
            }
        }
        Ok(worst)
    }
}

fn check_compat(ps: &ProductSubmersion, cc: &ConformalChange) -> Result<()> {
    if cc.n() != ps.base_dim() {
        return Err(GeomError::DimensionMismatch {
            expected: ps.base_dim(),
            got: cc.n(),
        });
    }
    Ok(())
}

/// Tension of the composed map (total space, product metric) -> (base,
/// changed metric) at a total-space point; the result is a vector at the
/// projected point. The projection is affine, so the second fundamental
/// form reduces to two Christoffel contributions: the domain symbols of the
/// product metric and the target symbols of e^{2 rho} h, both obtained by
/// finite differences of the raw metric closures. The trace still runs over
/// all m^2 index pairs so fiber contributions are measured, not assumed
/// away.
pub fn tension_of_composition(
    ps: &ProductSubmersion,
    cc: &ConformalChange,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DVector<f64>> {
    check_compat(ps, cc)?;
    let b = ps.project(x)?;
    let total = ps.total_chart();
    let ginv = total.metric_inverse_at(x)?;
    let gamma_g = christoffel(&total, x, cfg)?;
    let gamma_t = christoffel(&cc.changed_metric_numeric(), &b, cfg)?;

    let n = ps.base_dim();
    let m = ps.total_dim();
    let mut tau = DVector::zeros(n);
    for k in 0..n {
        let mut acc = 0.0;
        for a in 0..m {
            for c in 0..m {
                let w = ginv[(a, c)];
                if w == 0.0 {
                    continue;
                }
                let mut term = -gamma_g[k][(a, c)];
                if a < n && c < n {
                    term += gamma_t[k][(a, c)];
                }
                acc += w * term;
            }
        }
        tau[k] = acc;
    }
    Ok(tau)
}

/// Bitension of the composed map by nested finite differences: the pullback
/// rough Laplacian of the composed tension, traced with the product metric,
/// minus the changed-metric curvature trace over the horizontal directions.
/// Fiber directions enter the trace with a zero differential, so their
/// curvature contribution vanishes structurally; their Laplacian
/// contribution is still differenced numerically.
pub fn bitension_of_composition(
    ps: &ProductSubmersion,
    cc: &ConformalChange,
    x: &Point,
    cfg: &FdConfig,
) -> Result<DVector<f64>> {
    check_compat(ps, cc)?;
    let n = ps.base_dim();
    let m = ps.total_dim();
    let bx = ps.project(x)?;
    let total = ps.total_chart();
    let ginv = total.metric_inverse_at(x)?;
    let gamma_g = christoffel(&total, x, cfg)?;

    let tau_at = |p: &Point| tension_of_composition(ps, cc, p, cfg);

    // D(p)[(k, B)] = (nabla^{pi~}_B tau)^k: coordinate derivative plus the
    // target connection pulled back through dpi (only base axes carry it).
    let dmat = |p: &Point| -> Result<DMatrix<f64>> {
        let tau_p = tau_at(p)?;
        let bp = ps.project(p)?;
        let tg = tilde_christoffel(cc, &bp, cfg)?;
        let mut d = DMatrix::zeros(n, m);
        for axis in 0..m {
            let h = cfg.step(p[axis]);
            let diff = |hh: f64| -> Result<DVector<f64>> {
                Ok((tau_at(&p.shifted(axis, hh))? - tau_at(&p.shifted(axis, -hh))?) / (2.0 * hh))
            };
            let col = if cfg.richardson {
                (diff(h / 2.0)? * 4.0 - diff(h)?) / 3.0
            } else {
                diff(h)?
            };
            for k in 0..n {
                d[(k, axis)] = col[k];
            }
        }
        for k in 0..n {
            for axis in 0..n {
                for j in 0..n {
                    d[(k, axis)] += tg[k][(axis, j)] * tau_p[j];
                }
            }
        }
        Ok(d)
    };

    let d_here = dmat(x)?;
    let tg_here = tilde_christoffel(cc, &bx, cfg)?;

    let mut ddi = Vec::with_capacity(m);
    for a in 0..m {
        let ha = cfg.step(x[a]);
        let diff = |hh: f64| -> Result<DMatrix<f64>> {
            Ok((dmat(&x.shifted(a, hh))? - dmat(&x.shifted(a, -hh))?) / (2.0 * hh))
        };
        let dd = if cfg.richardson {
            (diff(ha / 2.0)? * 4.0 - diff(ha)?) / 3.0
        } else {
            diff(ha)?
        };
        ddi.push(dd);
    }

    // trace^k = g^{AB} [ d_A D^k_B + (A < n) Gamma~^k_{Aq} D^q_B
    //                    - Gamma_g^C_{AB} D^k_C ]
    let mut trace = DVector::zeros(n);
    for k in 0..n {
        let mut acc = 0.0;
        for a in 0..m {
            for c in 0..m {
                let w = ginv[(a, c)];
                if w == 0.0 {
                    continue;
                }
                let mut term = ddi[a][(k, c)];
                if a < n {
                    for q in 0..n {
                        term += tg_here[k][(a, q)] * d_here[(q, c)];
                    }
                }
                for l in 0..m {
                    term -= gamma_g[l][(a, c)] * d_here[(k, l)];
                }
                acc += w * term;
            }
        }
        trace[k] = acc;
    }

    // Horizontal curvature trace: dpi kills fiber directions, and the
    // product-metric inverse is block diagonal, so the sum collapses to the
    // base block evaluated at the projected point.
    let ctx = CurvatureCtx::new(cc, &bx, cfg)?;
    let tau_here = tau_at(x)?;
    let hinv = cc.base.metric_inverse_at(&bx)?;
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

/// Compares the lifted map against the identity over a set of total-space
/// sample points: report 1 holds tau(pi~) - tau(1) at the projected points,
/// report 2 the bitension difference. Norms are taken in the base metric.
/// The bitension side stacks two finite-difference layers, so its noise
/// floor sits roughly three orders of magnitude above the tension side;
/// keep the sample sets small.
pub fn reduction_check(
    ps: &ProductSubmersion,
    cc: &ConformalChange,
    points: &[Point],
    cfg: &FdConfig,
) -> Result<(ResidualReport, ResidualReport)> {
    check_compat(ps, cc)?;
    if points.is_empty() {
        return Err(GeomError::InvalidInput(
            "reduction check needs at least one sample point".into(),
        ));
    }
    let mut base_pts = Vec::with_capacity(points.len());
    let mut dt = Vec::with_capacity(points.len());
    let mut db = Vec::with_capacity(points.len());
    for p in points {
        let b = ps.project(p)?;
        let t_lift = tension_of_composition(ps, cc, p, cfg)?;
        let t_id = tension_forward(cc, &b, cfg)?;
        let b_lift = bitension_of_composition(ps, cc, p, cfg)?;
        let b_id = bitension_forward(cc, &b, cfg)?;
        dt.push(t_lift - t_id);
        db.push(b_lift - b_id);
        base_pts.push(b);
    }
    let rep1 = ResidualReport::from_samples(&cc.base, base_pts.clone(), dt)?;
    let rep2 = ResidualReport::from_samples(&cc.base, base_pts, db)?;
    Ok((rep1, rep2))
}

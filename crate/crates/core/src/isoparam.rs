//! Checkers for level-dependent gradient data.
//!
//! A function f is isoparametric on a chart when |grad f|^2 and the Laplacian
//! of f are constant along its level sets, equivalently functions of f alone.
//! Two independent checkers probe this on a point sample: a pointwise
//! collinearity test (grad(|grad f|) and grad(Delta f) must be parallel to
//! grad f) and a binned dependence fit (spread of the two quantities within
//! each level bin). The fit also tabulates the level profile that feeds the
//! reparametrization ODE.

use nalgebra::DVector;

use crate::chart::{ChartManifold, FdConfig, Point};
use crate::conformal::ConformalChange;
use crate::diffops;
use crate::error::{GeomError, Result};
use crate::fields::ScalarField;
use crate::forms;
use crate::interp::{simpson_cumulative, CubicHermite};

/// Points with |grad f| below this times the coordinate scale count as
/// critical and are excluded from the sample.
const CRITICAL_FRACTION: f64 = 1e-8;

/// Vectors shorter than this (relative to the gradient) count as vanished;
/// the collinearity defect of a vanished vector is zero by convention.
const VANISH_EPS: f64 = 1e-8;

/// One criterion over the sampled points (collinearity) or bins (fit).
#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub defects: Vec<f64>,
    pub max_defect: f64,
    pub verdict: bool,
}

impl CriterionReport {
    fn from_defects(defects: Vec<f64>, tol: f64) -> Self {
        let max_defect = defects.iter().cloned().fold(0.0, f64::max);
        CriterionReport {
            max_defect,
            verdict: max_defect <= tol,
            defects,
        }
    }
}

/// Verdict report shared by both checkers.
///
/// `inconclusive` is set when the sample is too small to bin; the verdict
/// fields are vacuous in that case and must not be read as a result.
#[derive(Clone, Debug)]
pub struct IsoparamReport {
    pub tol: f64,
    pub points_used: Vec<Point>,
    pub skipped: Vec<Point>,
    pub grad_criterion: CriterionReport,
    pub laplacian_criterion: CriterionReport,
    pub inconclusive: bool,
    pub profile: Option<LevelProfile>,
}

/// Level profile tabulated from bin means: at level value s[k] the fitted
/// gamma (for |grad f|^2) and sigma (for Delta f), plus a finite-difference
/// slope of sigma. Gamma is positive by construction away from critical
/// points, and the nodes are strictly increasing.
#[derive(Clone, Debug)]
pub struct LevelProfile {
    pub s: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma_prime: Vec<f64>,
    pub einstein_c: Option<f64>,
}

impl LevelProfile {
    pub fn from_samples(
        s: Vec<f64>,
        gamma: Vec<f64>,
        sigma: Vec<f64>,
        einstein_c: Option<f64>,
    ) -> Result<Self> {
        if s.is_empty() || s.len() != gamma.len() || s.len() != sigma.len() {
            return Err(GeomError::InvalidInput(format!(
                "profile needs matching non-empty level/gamma/sigma lists, got {}/{}/{}",
                s.len(),
                gamma.len(),
                sigma.len()
            )));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GeomError::InvalidInput(
                "profile levels must be strictly increasing".into(),
            ));
        }
        for (&t, &g) in s.iter().zip(&gamma) {
            if !(g > 0.0) {
                return Err(GeomError::NonPositiveGamma { t, value: g });
            }
        }
        let sigma_prime = fd_slopes(&s, &sigma);
        Ok(LevelProfile {
            s,
            gamma,
            sigma,
            sigma_prime,
            einstein_c,
        })
    }

    /// Hermite table for sigma, slopes from the tabulated differences.
    pub fn sigma_interpolant(&self) -> Result<CubicHermite> {
        CubicHermite::new(self.s.clone(), self.sigma.clone(), self.sigma_prime.clone())
    }

    /// Hermite table for gamma, slopes by the same difference rule.
    pub fn gamma_interpolant(&self) -> Result<CubicHermite> {
        CubicHermite::new(
            self.s.clone(),
            self.gamma.clone(),
            fd_slopes(&self.s, &self.gamma),
        )
    }
}

/// Slopes of v(s) on possibly uneven nodes: three-point interior stencil,
/// one-sided secants at the ends, zero for a single node.
fn fd_slopes(s: &[f64], v: &[f64]) -> Vec<f64> {
    let n = s.len();
    if n == 1 {
        return vec![0.0];
    }
    let mut out = vec![0.0; n];
    out[0] = (v[1] - v[0]) / (s[1] - s[0]);
    out[n - 1] = (v[n - 1] - v[n - 2]) / (s[n - 1] - s[n - 2]);
    for k in 1..n - 1 {
        let hl = s[k] - s[k - 1];
        let hr = s[k + 1] - s[k];
        out[k] = (v[k + 1] * hl * hl - v[k - 1] * hr * hr + v[k] * (hr * hr - hl * hl))
            / (hl * hr * (hl + hr));
    }
    out
}

fn coordinate_scale(x: &Point) -> f64 {
    x.coords.iter().fold(1.0, |m, c| m.max(c.abs()))
}

/// Norm of the component of v orthogonal to g in the metric h, divided by
/// |v|; zero when v is negligibly short next to g.
fn orthogonal_defect(h: &nalgebra::DMatrix<f64>, v: &DVector<f64>, g: &DVector<f64>) -> f64 {
    let hv = h * v;
    let hg = h * g;
    let nv = v.dot(&hv).max(0.0).sqrt();
    let ng = g.dot(&hg).max(0.0).sqrt();
    if nv <= VANISH_EPS * ng.max(1.0) {
        return 0.0;
    }
    let coeff = v.dot(&hg) / g.dot(&hg);
    let w = v - g * coeff;
    (w.dot(&(h * &w)).max(0.0)).sqrt() / nv
}

/// Splits the sample into regular and critical points by gradient size.
fn split_regular(
    m: &ChartManifold,
    f: &ScalarField,
    points: &[Point],
    cfg: &FdConfig,
) -> Result<(Vec<Point>, Vec<Point>)> {
    let mut regular = Vec::new();
    let mut skipped = Vec::new();
    for x in points {
        let n2 = diffops::grad_norm_sq(m, f, x, cfg)?;
        if n2.sqrt() < CRITICAL_FRACTION * coordinate_scale(x) {
            skipped.push(x.clone());
        } else {
            regular.push(x.clone());
        }
    }
    if regular.is_empty() {
        return Err(GeomError::NoRegularPoints);
    }
    Ok((regular, skipped))
}

/// Field of Delta f values, for differentiating the Laplacian itself.
fn laplacian_field(m: &ChartManifold, f: &ScalarField, cfg: &FdConfig) -> ScalarField {
    let m = m.clone();
    let f = f.clone();
    let cfg = *cfg;
    ScalarField::new(move |x: &Point| {
        diffops::laplacian_scalar(&m, &f, x, &cfg).unwrap_or(f64::NAN)
    })
}

/// Pointwise collinearity checker: at every regular sample point the
/// gradients of |grad f| and of Delta f must be parallel to grad f.
pub fn collinearity_check(
    m: &ChartManifold,
    f: &ScalarField,
    points: &[Point],
    tol: f64,
    cfg: &FdConfig,
) -> Result<IsoparamReport> {
    let (points_used, skipped) = split_regular(m, f, points, cfg)?;
    let lap = laplacian_field(m, f, cfg);
    let mut grad_defects = Vec::with_capacity(points_used.len());
    let mut lap_defects = Vec::with_capacity(points_used.len());
    for x in &points_used {
        let h = m.metric_at(x)?;
        let g = diffops::grad(m, f, x, cfg)?;
        let n2 = diffops::grad_norm_sq(m, f, x, cfg)?;
        // grad(|grad f|) = grad(|grad f|^2) / (2 |grad f|); the scaling does
        // not move the direction, but matches the stated quantity.
        let gn = diffops::grad_norm_sq_gradient(m, f, x, cfg)? / (2.0 * n2.sqrt());
        grad_defects.push(orthogonal_defect(&h, &gn, &g));
        let dlap = forms::sharp(m, &diffops::grad_coeffs(m, &lap, x, cfg)?, x)?;
        lap_defects.push(orthogonal_defect(&h, &dlap, &g));
    }
    Ok(IsoparamReport {
        tol,
        grad_criterion: CriterionReport::from_defects(grad_defects, tol),
        laplacian_criterion: CriterionReport::from_defects(lap_defects, tol),
        points_used,
        skipped,
        inconclusive: false,
        profile: None,
    })
}

/// Binned dependence checker: sorts the sample by f, groups near-equal
/// values, packs groups into bins of at least five points, and requires the
/// in-bin spread (max minus min) of |grad f|^2 and Delta f to stay within
/// tolerance. Bin means become the tabulated profile.
pub fn dependence_fit(
    m: &ChartManifold,
    f: &ScalarField,
    points: &[Point],
    tol: f64,
    cfg: &FdConfig,
) -> Result<IsoparamReport> {
    let (points_used, skipped) = split_regular(m, f, points, cfg)?;

    let mut rows = Vec::with_capacity(points_used.len());
    for x in &points_used {
        let v = f.eval(x);
        if !v.is_finite() {
            return Err(GeomError::NonFinite {
                what: "level value at a sample point".into(),
            });
        }
        let n2 = diffops::grad_norm_sq(m, f, x, cfg)?;
        let lap = diffops::laplacian_scalar(m, f, x, cfg)?;
        rows.push((v, n2, lap));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));

    if rows.len() < 2 {
        return Ok(IsoparamReport {
            tol,
            points_used,
            skipped,
            grad_criterion: CriterionReport::from_defects(Vec::new(), tol),
            laplacian_criterion: CriterionReport::from_defects(Vec::new(), tol),
            inconclusive: true,
            profile: None,
        });
    }

    // Tie groups: runs of f-values equal up to relative rounding slack.
    // A bin is a run of whole groups holding at least five points; the tail
    // merges backward so no bin is ever smaller than a group.
    let mut bins: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let mut end = start;
        while end < rows.len() {
            // extend over one tie group
            let lead = rows[end].0;
            let slack = 1e-9 * lead.abs().max(1.0);
            let mut k = end + 1;
            while k < rows.len() && (rows[k].0 - lead).abs() <= slack {
                k += 1;
            }
            end = k;
            if end - start >= 5 {
                break;
            }
        }
        bins.push((start, end));
        start = end;
    }
    if bins.len() >= 2 {
        let last = bins.len() - 1;
        if bins[last].1 - bins[last].0 < 5 {
            bins[last - 1].1 = bins[last].1;
            bins.pop();
        }
    }

    let mut grad_defects = Vec::with_capacity(bins.len());
    let mut lap_defects = Vec::with_capacity(bins.len());
    let mut levels = Vec::with_capacity(bins.len());
    let mut gammas = Vec::with_capacity(bins.len());
    let mut sigmas = Vec::with_capacity(bins.len());
    for &(a, b) in &bins {
        let chunk = &rows[a..b];
        let count = chunk.len() as f64;
        let (mut n2_min, mut n2_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lp_min, mut lp_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut fs, mut n2s, mut lps) = (0.0, 0.0, 0.0);
        for &(v, n2, lp) in chunk {
            n2_min = n2_min.min(n2);
            n2_max = n2_max.max(n2);
            lp_min = lp_min.min(lp);
            lp_max = lp_max.max(lp);
            fs += v;
            n2s += n2;
            lps += lp;
        }
        grad_defects.push(n2_max - n2_min);
        lap_defects.push(lp_max - lp_min);
        levels.push(fs / count);
        gammas.push(n2s / count);
        sigmas.push(lps / count);
    }

    let profile = LevelProfile::from_samples(levels, gammas, sigmas, m.einstein_constant())?;
    Ok(IsoparamReport {
        tol,
        points_used,
        skipped,
        grad_criterion: CriterionReport::from_defects(grad_defects, tol),
        laplacian_criterion: CriterionReport::from_defects(lap_defects, tol),
        inconclusive: false,
        profile: Some(profile),
    })
}

/// Arclength reparametrization of a positive level profile: the table of
/// s(t) = integral of gamma^{-1/2} from the left end, with exact slopes at
/// the nodes. Composing s with the original level function yields a
/// unit-speed level function.
pub fn arclength_reparam(
    gamma: &dyn Fn(f64) -> f64,
    t_range: (f64, f64),
    intervals: usize,
) -> Result<CubicHermite> {
    let (t0, t1) = t_range;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) || intervals == 0 {
        return Err(GeomError::InvalidInput(format!(
            "arclength needs a finite increasing range and at least one interval, got [{t0}, {t1}] with {intervals}"
        )));
    }
    let w = (t1 - t0) / intervals as f64;
    let ts: Vec<f64> = (0..=intervals).map(|k| t0 + w * k as f64).collect();
    // Simpson samples nodes and midpoints; gamma must be positive on all of
    // them for the integrand to make sense.
    for k in 0..=2 * intervals {
        let t = t0 + 0.5 * w * k as f64;
        let v = gamma(t);
        if !(v > 0.0) {
            return Err(GeomError::NonPositiveGamma { t, value: v });
        }
    }
    let s = simpson_cumulative(&ts, |t| gamma(t).powf(-0.5))?;
    let ms: Vec<f64> = ts.iter().map(|&t| gamma(t).powf(-0.5)).collect();
    CubicHermite::monotone(ts, s, ms)
}

/// Factor and defect of the proportionality between the Laplacian of the
/// exponent one-form and the form itself.
#[derive(Clone, Copy, Debug)]
pub struct ProportionalityCheck {
    pub factor: f64,
    pub defect: f64,
}

/// On an Einstein base with constant c, an exponent whose residual one-form
/// vanishes and whose |d rho|^2 is a function gamma of rho satisfies
/// Delta(d rho) = F d rho with
///   F = 2 d*alpha + (2-n)|alpha|^2 + ((6-n)/2) gamma'(rho) + 2c.
/// Returns F together with the relative defect |Delta alpha - F alpha|/|alpha|,
/// which measures how far the data are from that situation.
pub fn proportionality_factor(
    cc: &ConformalChange,
    gamma_prime: &dyn Fn(f64) -> f64,
    x: &Point,
    cfg: &FdConfig,
) -> Result<ProportionalityCheck> {
    cc.require_dim()?;
    let c = cc.base.einstein_constant().ok_or_else(|| {
        GeomError::InvalidInput("proportionality factor needs an Einstein base chart".into())
    })?;
    let n = cc.n() as f64;
    let alpha = diffops::grad_coeffs(&cc.base, &cc.rho, x, cfg)?;
    let asq = forms::form_norm_sq(&cc.base, &alpha, x)?;
    let dstar = diffops::laplacian_scalar(&cc.base, &cc.rho, x, cfg)?;
    let rho_x = cc.rho.eval(x);
    if !rho_x.is_finite() {
        return Err(GeomError::NonFinite {
            what: "exponent value".into(),
        });
    }
    let factor =
        2.0 * dstar + (2.0 - n) * asq + 0.5 * (6.0 - n) * gamma_prime(rho_x) + 2.0 * c;
    let lap_alpha = forms::exact_form_laplacian(&cc.base, &cc.rho, x, cfg)?;
    let diff = &lap_alpha - &alpha * factor;
    let dn = forms::form_norm_sq(&cc.base, &diff, x)?.max(0.0).sqrt();
    let an = asq.max(0.0).sqrt();
    let defect = if an < 1e-12 { dn } else { dn / an };
    Ok(ProportionalityCheck { factor, defect })
}

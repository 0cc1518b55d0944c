//! Scalar fields, vector fields, and one-form fields on a chart.
//!
//! A `ScalarField` may carry analytic coordinate derivatives. Operators use
//! them when present and fall back to central differences otherwise, so the
//! same code drives both the "analytic path" and the "FD path".

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chart::Point;

type EvalFn = dyn Fn(&Point) -> f64 + Send + Sync;
type GradFn = dyn Fn(&Point) -> DVector<f64> + Send + Sync;
type HessFn = dyn Fn(&Point) -> DMatrix<f64> + Send + Sync;
type VectorFn = dyn Fn(&Point) -> DVector<f64> + Send + Sync;

/// Real-valued field with optional analytic coordinate partials.
/// `analytic_grad` returns the covector (d f)_i = ∂_i f; raising the index is
/// the metric's job, not the field's.
#[derive(Clone)]
pub struct ScalarField {
    eval: Arc<EvalFn>,
    analytic_grad: Option<Arc<GradFn>>,
    analytic_hessian: Option<Arc<HessFn>>,
}

impl ScalarField {
    pub fn new<F>(eval: F) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        ScalarField {
            eval: Arc::new(eval),
            analytic_grad: None,
            analytic_hessian: None,
        }
    }

    pub fn with_grad<G>(mut self, grad: G) -> Self
    where
        G: Fn(&Point) -> DVector<f64> + Send + Sync + 'static,
    {
        self.analytic_grad = Some(Arc::new(grad));
        self
    }

    pub fn with_hessian<H>(mut self, hessian: H) -> Self
    where
        H: Fn(&Point) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.analytic_hessian = Some(Arc::new(hessian));
        self
    }

    pub fn eval(&self, x: &Point) -> f64 {
        (self.eval)(x)
    }

    pub fn analytic_grad(&self) -> Option<&Arc<GradFn>> {
        self.analytic_grad.as_ref()
    }

    pub fn analytic_hessian(&self) -> Option<&Arc<HessFn>> {
        self.analytic_hessian.as_ref()
    }

    /// Drop the analytic derivatives, forcing the pure finite-difference path.
    pub fn without_analytic(&self) -> Self {
        ScalarField {
            eval: self.eval.clone(),
            analytic_grad: None,
            analytic_hessian: None,
        }
    }

    /// The scaled field k*f, with derivatives scaled alongside.
    pub fn scale(&self, k: f64) -> Self {
        let eval = self.eval.clone();
        let mut out = ScalarField::new(move |x: &Point| k * eval(x));
        if let Some(g) = &self.analytic_grad {
            let g = g.clone();
            out.analytic_grad = Some(Arc::new(move |x: &Point| g(x) * k));
        }
        if let Some(h) = &self.analytic_hessian {
            let h = h.clone();
            out.analytic_hessian = Some(Arc::new(move |x: &Point| h(x) * k));
        }
        out
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::new(move |_: &Point| c)
            .with_grad(move |x: &Point| DVector::zeros(x.dim()))
            .with_hessian(move |x: &Point| DMatrix::zeros(x.dim(), x.dim()))
    }

    /// The coordinate function x^axis.
    pub fn coordinate(axis: usize) -> Self {
        ScalarField::new(move |x: &Point| x[axis])
            .with_grad(move |x: &Point| {
                let mut g = DVector::zeros(x.dim());
                g[axis] = 1.0;
                g
            })
            .with_hessian(move |x: &Point| DMatrix::zeros(x.dim(), x.dim()))
    }

    /// Linear field sum_i a_i x^i.
    pub fn linear(coeffs: Vec<f64>) -> Self {
        let c2 = coeffs.clone();
        ScalarField::new(move |x: &Point| {
            coeffs.iter().zip(&x.coords).map(|(a, c)| a * c).sum()
        })
        .with_grad(move |_: &Point| DVector::from_vec(c2.clone()))
        .with_hessian(move |x: &Point| DMatrix::zeros(x.dim(), x.dim()))
    }

    /// a * ln(x^axis), defined where x^axis > 0.
    pub fn log_coordinate(axis: usize, a: f64) -> Self {
        ScalarField::new(move |x: &Point| a * x[axis].ln())
            .with_grad(move |x: &Point| {
                let mut g = DVector::zeros(x.dim());
                g[axis] = a / x[axis];
                g
            })
            .with_hessian(move |x: &Point| {
                let mut hess = DMatrix::zeros(x.dim(), x.dim());
                hess[(axis, axis)] = -a / (x[axis] * x[axis]);
                hess
            })
    }

    /// The radius field |x|, defined away from the origin.
    pub fn radius() -> Self {
        ScalarField::new(|x: &Point| x.norm())
            .with_grad(|x: &Point| {
                let r = x.norm();
                DVector::from_iterator(x.dim(), x.coords.iter().map(|&c| c / r))
            })
            .with_hessian(|x: &Point| {
                let n = x.dim();
                let r = x.norm();
                let r3 = r * r * r;
                DMatrix::from_fn(n, n, |i, j| {
                    let kron = if i == j { 1.0 / r } else { 0.0 };
                    kron - x[i] * x[j] / r3
                })
            })
    }

    /// a * ln|x|, defined away from the origin.
    pub fn radial_log(a: f64) -> Self {
        ScalarField::new(move |x: &Point| a * x.norm().ln())
            .with_grad(move |x: &Point| {
                let r2: f64 = x.coords.iter().map(|c| c * c).sum();
                DVector::from_iterator(x.dim(), x.coords.iter().map(|&c| a * c / r2))
            })
            .with_hessian(move |x: &Point| {
                let n = x.dim();
                let r2: f64 = x.coords.iter().map(|c| c * c).sum();
                DMatrix::from_fn(n, n, |i, j| {
                    let kron = if i == j { 1.0 / r2 } else { 0.0 };
                    a * (kron - 2.0 * x[i] * x[j] / (r2 * r2))
                })
            })
    }
}

/// Contravariant vector field given by its chart components.
#[derive(Clone)]
pub struct VectorField {
    eval: Arc<VectorFn>,
}

impl VectorField {
    pub fn new<F>(eval: F) -> Self
    where
        F: Fn(&Point) -> DVector<f64> + Send + Sync + 'static,
    {
        VectorField { eval: Arc::new(eval) }
    }

    pub fn constant(v: DVector<f64>) -> Self {
        VectorField::new(move |_: &Point| v.clone())
    }

    pub fn eval(&self, x: &Point) -> DVector<f64> {
        (self.eval)(x)
    }
}

/// Covariant one-form field given by its chart components alpha_i.
#[derive(Clone)]
pub struct OneFormField {
    eval: Arc<VectorFn>,
}

impl OneFormField {
    pub fn new<F>(eval: F) -> Self
    where
        F: Fn(&Point) -> DVector<f64> + Send + Sync + 'static,
    {
        OneFormField { eval: Arc::new(eval) }
    }

    pub fn eval(&self, x: &Point) -> DVector<f64> {
        (self.eval)(x)
    }
}

/// Multivariate polynomial with exact derivatives: a sum of terms
/// coefficient * prod_i x_i^{e_i}. Useful for fields on the analytic path and
/// for randomized property tests.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    pub dim: usize,
    /// (coefficient, exponents per coordinate)
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<(f64, Vec<u32>)>) -> Self {
        assert!(terms.iter().all(|(_, e)| e.len() == dim));
        Polynomial { dim, terms }
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.terms
            .iter()
            .map(|(c, exps)| {
                c * exps
                    .iter()
                    .zip(&x.coords)
                    .map(|(&e, &v)| v.powi(e as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Partial derivative along one axis, as a polynomial.
    pub fn derivative(&self, axis: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|(_, exps)| exps[axis] > 0)
            .map(|(c, exps)| {
                let mut e = exps.clone();
                let k = e[axis];
                e[axis] = k - 1;
                (c * k as f64, e)
            })
            .collect();
        Polynomial {
            dim: self.dim,
            terms,
        }
    }

    /// Scalar field carrying the exact gradient and Hessian.
    pub fn to_field(&self) -> ScalarField {
        let me = self.clone();
        let grads: Vec<Polynomial> = (0..self.dim).map(|i| self.derivative(i)).collect();
        let hesses: Vec<Vec<Polynomial>> = grads
            .iter()
            .map(|g| (0..self.dim).map(|j| g.derivative(j)).collect())
            .collect();
        let dim = self.dim;
        ScalarField::new(move |x: &Point| me.eval(x))
            .with_grad(move |x: &Point| {
                DVector::from_iterator(dim, grads.iter().map(|g| g.eval(x)))
            })
            .with_hessian(move |x: &Point| {
                DMatrix::from_fn(dim, dim, |i, j| hesses[i][j].eval(x))
            })
    }
}

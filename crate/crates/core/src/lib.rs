//! Numerical toolkit for tension and bitension fields of identity maps under
//! conformal changes of a Riemannian metric, on single coordinate charts.
//!
//! The crate is organized bottom-up:
//! * [`chart`] / [`fields`] / [`diffops`]: charts, fields, and exact-or-FD
//!   differential operators (gradient, Hessian, Laplacian, curvature).
//! * [`conformal`]: the conformal-change calculus: connection and curvature
//!   under h → e^{2ρ}h, tension and bitension fields in both directions, the
//!   biharmonicity residual, the defect identity, and an independent
//!   finite-difference oracle for the bitension.
//! * [`forms`]: the one-form reformulation (musical maps, codifferential,
//!   Weitzenböck Laplacian) and the two-form consequence.
//! * [`isoparam`]: isoparametric-function checkers and level profiles.
//! * [`ode`]: the reparametrization ODE, its ansatz families, and
//!   reconstruction of the conformal factor from a solution table.
//! * [`submersion`]: product-projection reduction checks.
//! * [`report`]: grids and residual reports shared by tests and the CLI.

pub mod chart;
pub mod conformal;
pub mod diffops;
pub mod error;
pub mod fields;
pub mod forms;
pub mod interp;
pub mod isoparam;
pub mod ode;
pub mod report;
pub mod submersion;

pub use chart::{ChartManifold, FdConfig, Point};
pub use error::{GeomError, Result};
pub use fields::{OneFormField, Polynomial, ScalarField, VectorField};

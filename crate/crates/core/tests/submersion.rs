//! Product projections composed with a conformal change of the target:
//! the lifted map must inherit the tension and bitension of the identity.

use bitension::chart::{euclidean, half_space, vector_norm};
use bitension::conformal::{bitension_forward, tension_forward, ConformalChange};
use bitension::report::{convergence_order, GridSpec, ResidualReport};
use bitension::submersion::{
    bitension_of_composition, reduction_check, tension_of_composition, ProductSubmersion,
};
use bitension::{FdConfig, GeomError, Point, ScalarField};
use nalgebra::DVector;

fn pt(coords: &[f64]) -> Point {
    Point::new(coords.to_vec())
}

fn fd() -> FdConfig {
    FdConfig::default()
}

#[test]
fn projection_and_product_metric_shape() {
    let ps = ProductSubmersion::new(half_space(3), 5).unwrap();
    assert_eq!(ps.base_dim(), 3);
    assert_eq!(ps.total_dim(), 5);
    assert_eq!(ps.fiber_dim(), 2);

    let x = pt(&[1.0, 2.0, 3.0, 4.0, 5.0]);
    let b = ps.project(&x).unwrap();
    assert_eq!(b.coords, vec![1.0, 2.0, 3.0]);

    let total = ps.total_chart();
    assert_eq!(total.dim(), 5);
    let g = total.metric_at(&x).unwrap();
    let h = ps.base().metric_at(&b).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let want = if i < 3 && j < 3 {
                h[(i, j)]
            } else if i == j {
                1.0
            } else {
                0.0
            };
            assert!((g[(i, j)] - want).abs() < 1e-15);
        }
    }
    assert!(ps.horizontal_isometry_defect(&x).unwrap() <= 1e-15);

    // Domain follows the base through the projection.
    assert!(total.contains(&pt(&[1.0, 1.0, 1.0, -7.0, 0.0])));
    assert!(!total.contains(&pt(&[-1.0, 1.0, 1.0, 0.0, 0.0])));

    assert!(matches!(
        ProductSubmersion::new(euclidean(3), 3),
        Err(GeomError::DimensionTooSmall { .. })
    ));
    assert!(ps.project(&pt(&[1.0, 2.0])).is_err());
}

#[test]
fn constant_exponent_gives_a_harmonic_composition() {
    let ps = ProductSubmersion::new(euclidean(3), 4).unwrap();
    let cc = ConformalChange::new(euclidean(3), ScalarField::constant(0.7));
    let x = pt(&[0.4, -0.3, 0.8, 2.5]);
    let tau = tension_of_composition(&ps, &cc, &x, &fd()).unwrap();
    assert!(tau.norm() <= 1e-12, "tau = {tau:?}");

    let grid = GridSpec::new(vec![(-0.5, 0.5); 4], 2).unwrap();
    let (r1, r2) = reduction_check(&ps, &cc, &grid.points(), &fd()).unwrap();
    assert!(r1.max_norm <= 1e-10, "tension residual {}", r1.max_norm);
    assert!(r2.max_norm <= 1e-8, "bitension residual {}", r2.max_norm);
}

#[test]
fn linear_exponent_matches_the_identity_tension() {
    let ps = ProductSubmersion::new(euclidean(3), 4).unwrap();
    let cc = ConformalChange::new(euclidean(3), ScalarField::coordinate(0));
    let x = pt(&[0.3, -0.2, 0.5, 7.0]);

    let tau = tension_of_composition(&ps, &cc, &x, &fd()).unwrap();
    assert!((tau[0] + 1.0).abs() <= 1e-7, "tau = {tau:?}");
    assert!(tau[1].abs() <= 1e-7);
    assert!(tau[2].abs() <= 1e-7);

    let closed = tension_forward(&cc, &ps.project(&x).unwrap(), &fd()).unwrap();
    assert!((&tau - &closed).norm() <= 1e-7);

    // The fiber coordinate must not matter.
    let x2 = pt(&[0.3, -0.2, 0.5, -3.5]);
    let tau2 = tension_of_composition(&ps, &cc, &x2, &fd()).unwrap();
    assert!((&tau - &tau2).norm() <= 1e-12);

    // Shape errors surface as dimension mismatches.
    assert!(tension_of_composition(&ps, &cc, &pt(&[0.3, 0.2, 0.5]), &fd()).is_err());
    let cc4 = ConformalChange::new(euclidean(4), ScalarField::coordinate(0));
    assert!(tension_of_composition(&ps, &cc4, &x, &fd()).is_err());
}

#[test]
fn reduction_residuals_stay_within_stated_tolerances() {
    let ps = ProductSubmersion::new(euclidean(3), 4).unwrap();
    let cc = ConformalChange::new(euclidean(3), ScalarField::coordinate(0));
    let mut extents = vec![(0.2, 0.8); 3];
    extents.push((-0.5, 0.5));
    let grid = GridSpec::new(extents, 2).unwrap();
    let points = grid.points();

    let (r1, r2) = reduction_check(&ps, &cc, &points, &fd()).unwrap();
    assert_eq!(r1.len(), 16);
    assert_eq!(r2.len(), 16);
    assert!(r1.max_norm <= 1e-6, "tension residual {}", r1.max_norm);
    assert!(r2.max_norm <= 1e-3, "bitension residual {}", r2.max_norm);

    // Both sides of the equivalence, evaluated independently: here the
    // identity is nonharmonic and also fails to be biharmonic, and the
    // lifted projection must agree on both counts.
    let thresh = 1e-3;
    let mut lift_t: f64 = 0.0;
    let mut lift_b: f64 = 0.0;
    let mut id_t: f64 = 0.0;
    let mut id_b: f64 = 0.0;
    for p in &points {
        let b = ps.project(p).unwrap();
        let tl = tension_of_composition(&ps, &cc, p, &fd()).unwrap();
        let bl = bitension_of_composition(&ps, &cc, p, &fd()).unwrap();
        lift_t = lift_t.max(vector_norm(ps.base(), &b, &tl).unwrap());
        lift_b = lift_b.max(vector_norm(ps.base(), &b, &bl).unwrap());
        let ti = tension_forward(&cc, &b, &fd()).unwrap();
        let bi = bitension_forward(&cc, &b, &fd()).unwrap();
        id_t = id_t.max(vector_norm(ps.base(), &b, &ti).unwrap());
        id_b = id_b.max(vector_norm(ps.base(), &b, &bi).unwrap());
    }
    assert!(lift_t > thresh && id_t > thresh);
    assert!(lift_b > thresh && id_b > thresh);
    assert!((lift_b - 1.0).abs() <= 1e-2, "lifted bitension {lift_b}");
    assert!((id_b - 1.0).abs() <= 1e-8, "identity bitension {id_b}");
}

#[test]
fn corollary_verdict_agrees_on_a_biharmonic_instance() {
    // ln x1 in dimension 3 makes the identity nonharmonic yet biharmonic;
    // the lifted projection must land in the same class.
    let ps = ProductSubmersion::new(half_space(3), 4).unwrap();
    let cc = ConformalChange::new(half_space(3), ScalarField::log_coordinate(0, 1.0));
    let mut extents = vec![(0.7, 1.3); 3];
    extents.push((-0.4, 0.4));
    let grid = GridSpec::new(extents, 2).unwrap();
    let points = grid.points();

    let thresh = 1e-3;
    let mut lift = Vec::new();
    let mut ident = Vec::new();
    for p in &points {
        let b = ps.project(p).unwrap();
        lift.push((
            tension_of_composition(&ps, &cc, p, &fd()).unwrap(),
            bitension_of_composition(&ps, &cc, p, &fd()).unwrap(),
        ));
        ident.push((
            tension_forward(&cc, &b, &fd()).unwrap(),
            bitension_forward(&cc, &b, &fd()).unwrap(),
        ));
    }
    let max_pair = |rows: &[(DVector<f64>, DVector<f64>)]| {
        let mut t: f64 = 0.0;
        let mut b: f64 = 0.0;
        for (i, (tv, bv)) in rows.iter().enumerate() {
            let base_pt = ps.project(&points[i]).unwrap();
            t = t.max(vector_norm(ps.base(), &base_pt, tv).unwrap());
            b = b.max(vector_norm(ps.base(), &base_pt, bv).unwrap());
        }
        (t, b)
    };
    let (lt, lb) = max_pair(&lift);
    let (it, ib) = max_pair(&ident);
    let lifted_verdict = (lt > thresh, lb <= thresh);
    let identity_verdict = (it > thresh, ib <= thresh);
    assert_eq!(lifted_verdict, (true, true), "lift: tension {lt}, bitension {lb}");
    assert_eq!(identity_verdict, (true, true), "id: tension {it}, bitension {ib}");
}

#[test]
fn tension_residual_shrinks_at_second_order() {
    // Plain central differences, no extrapolation: the composed-tension
    // error against the closed form must scale like h^2. The exponent is
    // linear so the changed metric is a genuine exponential; a logarithmic
    // exponent would make the metric entries quadratic polynomials, which
    // central differences hit exactly and leave nothing to measure.
    let ps = ProductSubmersion::new(euclidean(3), 4).unwrap();
    let cc = ConformalChange::new(euclidean(3), ScalarField::coordinate(0));
    let x = pt(&[0.3, -0.2, 0.5, 0.4]);
    let closed = tension_forward(&cc, &ps.project(&x).unwrap(), &fd()).unwrap();

    let hs = [4e-2, 2e-2, 1e-2];
    let mut errs = Vec::new();
    for &h in &hs {
        let cfg = FdConfig::new(h, false).unwrap();
        let tau = tension_of_composition(&ps, &cc, &x, &cfg).unwrap();
        errs.push((&tau - &closed).norm());
    }
    let order = convergence_order(&hs, &errs).unwrap();
    assert!(
        (1.6..=2.4).contains(&order),
        "order {order} from errors {errs:?}"
    );
}

#[test]
fn reduction_report_points_live_on_the_base() {
    let ps = ProductSubmersion::new(euclidean(2), 4).unwrap();
    let cc = ConformalChange::new(euclidean(2), ScalarField::constant(0.0));
    // Dimension 2 rejects the tension formulas outright.
    let grid = GridSpec::new(vec![(0.0, 1.0); 4], 2).unwrap();
    assert!(matches!(
        reduction_check(&ps, &cc, &grid.points(), &fd()),
        Err(GeomError::DimensionTooSmall { .. })
    ));

    let ps3 = ProductSubmersion::new(euclidean(3), 5).unwrap();
    let cc3 = ConformalChange::new(euclidean(3), ScalarField::linear(vec![0.2, -0.1, 0.4]));
    let grid3 = GridSpec::new(vec![(0.0, 0.5); 5], 2).unwrap();
    let pts = grid3.points();
    let (r1, _r2) = reduction_check(&ps3, &cc3, &pts, &fd()).unwrap();
    assert_eq!(r1.len(), pts.len());
    for (rp, tp) in r1.points.iter().zip(&pts) {
        assert_eq!(rp.dim(), 3);
        assert_eq!(rp.coords[..], tp.coords[..3]);
    }
    let _: &ResidualReport = &r1;
}

//! Isoparametric checkers: collinearity and level-dependence criteria,
//! arclength reparametrization, and the proportionality factor for the
//! Laplacian of an exponent one-form on an Einstein base.

use bitension::conformal::ConformalChange;
use bitension::isoparam::{
    arclength_reparam, collinearity_check, dependence_fit, proportionality_factor,
};
use bitension::chart::{euclidean, half_space, punctured_euclidean};
use bitension::{FdConfig, GeomError, Point, Polynomial, ScalarField};

fn pt(coords: &[f64]) -> Point {
    Point::new(coords.to_vec())
}

fn fd() -> FdConfig {
    FdConfig::default()
}

/// Generic sample cloud in the positive region, away from coordinate planes.
fn cloud() -> Vec<Point> {
    let mut out = Vec::new();
    for k in 0..12 {
        let t = k as f64;
        out.push(pt(&[
            0.6 + 0.11 * t,
            0.9 + 0.07 * ((k % 5) as f64),
            0.7 + 0.09 * ((k % 4) as f64),
        ]));
    }
    out
}

#[test]
fn linear_exponent_passes_both_checkers() {
    let m = euclidean(3);
    let f = ScalarField::linear(vec![0.6, 0.8, 0.0]);
    let points = cloud();

    let col = collinearity_check(&m, &f, &points, 1e-8, &fd()).unwrap();
    assert_eq!(col.points_used.len(), 12);
    assert!(col.skipped.is_empty());
    assert!(col.grad_criterion.verdict, "unit-speed linear level function");
    assert!(col.laplacian_criterion.verdict);
    assert!(col.grad_criterion.max_defect <= 1e-10);
    assert!(col.laplacian_criterion.max_defect <= 1e-10);

    let dep = dependence_fit(&m, &f, &points, 1e-8, &fd()).unwrap();
    assert!(!dep.inconclusive);
    assert!(dep.grad_criterion.verdict);
    assert!(dep.laplacian_criterion.verdict);
    let profile = dep.profile.expect("dependence fit tabulates a profile");
    for (&g, &s) in profile.gamma.iter().zip(&profile.sigma) {
        assert!((g - 1.0).abs() <= 1e-10, "|df|^2 = 1 for a unit direction");
        assert!(s.abs() <= 1e-10, "linear functions are harmonic");
    }
    assert_eq!(profile.einstein_c, Some(0.0));
}

#[test]
fn radius_passes_and_fits_its_profile() {
    let m = punctured_euclidean(3);
    let f = ScalarField::radius();
    // Three exact levels, six points each, so bins are genuine level sets.
    let mut points = Vec::new();
    for &r in &[1.0_f64, 1.4, 1.9] {
        for k in 0..6 {
            let phi = 0.35 + 0.9 * k as f64;
            let (s, c) = phi.sin_cos();
            let z = 0.3 + 0.08 * k as f64;
            let w = (1.0 - z * z).sqrt();
            points.push(pt(&[r * w * c, r * w * s, r * z]));
        }
    }

    let col = collinearity_check(&m, &f, &points, 1e-8, &fd()).unwrap();
    assert!(col.grad_criterion.verdict);
    assert!(col.laplacian_criterion.verdict);
    assert!(col.grad_criterion.max_defect <= 1e-8);
    assert!(col.laplacian_criterion.max_defect <= 1e-8);

    let dep = dependence_fit(&m, &f, &points, 1e-8, &fd()).unwrap();
    assert!(dep.grad_criterion.verdict && dep.laplacian_criterion.verdict);
    let profile = dep.profile.unwrap();
    assert_eq!(profile.s.len(), 3);
    for (k, &r) in [1.0_f64, 1.4, 1.9].iter().enumerate() {
        assert!((profile.s[k] - r).abs() <= 1e-10);
        assert!((profile.gamma[k] - 1.0).abs() <= 1e-9, "|d|x|| = 1");
        assert!(
            (profile.sigma[k] - (-2.0 / r)).abs() <= 1e-8,
            "laplacian of the radius is -2/r here"
        );
        assert!(profile.sigma_prime[k] > 0.0);
    }
    // Central difference of sigma at the middle node tracks 2/s^2.
    let mid = profile.sigma_prime[1];
    assert!(
        (mid - 2.0 / (1.4_f64 * 1.4)).abs() <= 0.15,
        "sigma' estimate {mid}"
    );
}

#[test]
fn coordinate_product_fails_gradient_criterion_only() {
    let m = euclidean(3);
    let f = Polynomial::new(3, vec![(1.0, vec![1, 1, 0])]).to_field();
    // Two exact levels of x1*x2 with asymmetric points, where grad|grad f|
    // leaves the gradient direction.
    let mut points = Vec::new();
    for &level in &[1.0_f64, 1.44] {
        for (k, &a) in [0.5_f64, 0.8, 1.0, 1.25, 1.6, 2.0].iter().enumerate() {
            points.push(pt(&[a, level / a, 0.1 * k as f64 - 0.2]));
        }
    }

    let col = collinearity_check(&m, &f, &points, 0.1, &fd()).unwrap();
    assert!(!col.grad_criterion.verdict);
    assert!(col.grad_criterion.max_defect > 0.1);
    // x1*x2 is harmonic, so the second criterion holds trivially.
    assert!(col.laplacian_criterion.verdict);
    assert!(col.laplacian_criterion.max_defect <= 1e-10);

    let dep = dependence_fit(&m, &f, &points, 0.1, &fd()).unwrap();
    assert!(!dep.grad_criterion.verdict);
    // |df|^2 on the level f = 1 ranges from 2 to 4.25.
    assert!(dep.grad_criterion.max_defect >= 2.0);
    assert!(dep.laplacian_criterion.verdict);

    // The two checkers agree criterion by criterion.
    assert_eq!(col.grad_criterion.verdict, dep.grad_criterion.verdict);
    assert_eq!(
        col.laplacian_criterion.verdict,
        dep.laplacian_criterion.verdict
    );
}

#[test]
fn critical_points_are_skipped_and_all_critical_is_an_error() {
    let m = euclidean(3);
    let f = Polynomial::new(
        3,
        vec![(1.0, vec![2, 0, 0]), (1.0, vec![0, 2, 0]), (1.0, vec![0, 0, 2])],
    )
    .to_field();

    let mut points = vec![pt(&[0.0, 0.0, 0.0])];
    for k in 0..6 {
        let t = 0.8 + 0.15 * k as f64;
        points.push(pt(&[t, 0.4 * t, -0.3]));
    }
    let col = collinearity_check(&m, &f, &points, 1e-8, &fd()).unwrap();
    assert_eq!(col.skipped.len(), 1);
    assert_eq!(col.points_used.len(), 6);
    assert!(col.grad_criterion.verdict && col.laplacian_criterion.verdict);

    // |x|^2 is genuinely isoparametric away from the origin; the dependence
    // fit sees that only if the bins are honest level sets, so sample two
    // spheres plus the critical origin.
    let mut spheres = vec![pt(&[0.0, 0.0, 0.0])];
    for &r in &[1.0_f64, 1.3] {
        for k in 0..5 {
            let phi = 0.2 + 1.1 * k as f64;
            let (s, c) = phi.sin_cos();
            spheres.push(pt(&[r * 0.8 * c, r * 0.8 * s, r * 0.6]));
        }
    }
    let dep = dependence_fit(&m, &f, &spheres, 1e-8, &fd()).unwrap();
    assert_eq!(dep.skipped.len(), 1);
    assert!(dep.grad_criterion.verdict && dep.laplacian_criterion.verdict);

    let critical = vec![pt(&[0.0, 0.0, 0.0]), pt(&[1e-10, 0.0, 0.0])];
    match collinearity_check(&m, &f, &critical, 1e-8, &fd()) {
        Err(GeomError::NoRegularPoints) => {}
        other => panic!("expected NoRegularPoints, got {other:?}"),
    }

    // A single regular point cannot be binned into a trend.
    let one = vec![pt(&[1.0, 0.5, 0.25])];
    let dep = dependence_fit(&m, &f, &one, 1e-8, &fd()).unwrap();
    assert!(dep.inconclusive);
}

#[test]
fn arclength_matches_closed_forms() {
    // Constant profile 4: s(t) = t/2 exactly (Simpson is exact on constants).
    let s = arclength_reparam(&|_t| 4.0, (0.0, 2.0), 40).unwrap();
    for k in 0..=20 {
        let t = 0.1 * k as f64;
        assert!((s.eval(t).unwrap() - 0.5 * t).abs() <= 1e-13);
    }

    // Constant profile 1: the identity map.
    let s = arclength_reparam(&|_t| 1.0, (0.0, 1.5), 30).unwrap();
    assert!((s.eval(1.2).unwrap() - 1.2).abs() <= 1e-13);

    // gamma(t) = t^2 on [1,2]: s(t) = ln t, and the map is unit-speed for
    // the exponential exponent f = e^{x1} whose |df|^2 = f^2.
    let s = arclength_reparam(&|t: f64| t * t, (1.0, 2.0), 200).unwrap();
    for k in 0..=50 {
        let t = 1.0 + 0.02 * k as f64;
        assert!((s.eval(t).unwrap() - t.ln()).abs() <= 1e-8);
        let speed = s.deriv(t).unwrap().powi(2) * (t * t);
        assert!((speed - 1.0).abs() <= 1e-7, "unit speed, got {speed}");
    }

    let m = euclidean(3);
    let table = s.clone();
    let composed = ScalarField::new(move |x: &Point| {
        table.eval(x[0].exp()).unwrap_or(f64::NAN)
    });
    for k in 0..5 {
        let x = pt(&[0.08 + 0.12 * k as f64, 0.3, -0.4]);
        let n = bitension::diffops::grad_norm_sq(&m, &composed, &x, &fd()).unwrap();
        assert!((n - 1.0).abs() <= 1e-6, "|d(s of e^x)|^2 = {n}");
    }

    // Profiles that touch zero or go negative are rejected.
    match arclength_reparam(&|t: f64| t, (-1.0, 1.0), 16) {
        Err(GeomError::NonPositiveGamma { .. }) => {}
        other => panic!("expected NonPositiveGamma, got {other:?}"),
    }
    match arclength_reparam(&|t: f64| t * t, (-1.0, 1.0), 16) {
        Err(GeomError::NonPositiveGamma { value, .. }) => assert_eq!(value, 0.0),
        other => panic!("expected NonPositiveGamma, got {other:?}"),
    }
}

#[test]
fn log_exponent_satisfies_both_criteria_tightly() {
    // rho = ln x1 passes criterion (i) with gamma(t) = e^{-2t}; its residual
    // one-form vanishes, so the laplacian direction is forced parallel too.
    let m = half_space(3);
    let f = ScalarField::log_coordinate(0, 1.0);
    let points = cloud();
    let col = collinearity_check(&m, &f, &points, 1e-8, &fd()).unwrap();
    assert!(col.grad_criterion.max_defect <= 1e-8);
    assert!(col.laplacian_criterion.max_defect <= 1e-8);
}

#[test]
fn proportionality_factor_matches_hand_value() {
    // rho = ln x1 on the positive orthant: at (1,1,1) the factor collapses
    // to 2*1 - 1 - 3 + 0 = -2 and the form Laplacian is -2 alpha.
    let cc = ConformalChange::new(
        half_space(3),
        ScalarField::log_coordinate(0, 1.0),
    );
    let tight = FdConfig::new(1e-4, true).unwrap();
    let gp = |t: f64| -2.0 * (-2.0 * t).exp();
    let check = proportionality_factor(&cc, &gp, &pt(&[1.0, 1.0, 1.0]), &tight).unwrap();
    assert!((check.factor - (-2.0)).abs() <= 1e-9, "factor {}", check.factor);
    assert!(check.defect <= 1e-8, "defect {}", check.defect);

    // Constant exponent: everything vanishes.
    let cc0 = ConformalChange::new(euclidean(3), ScalarField::constant(0.7));
    let check = proportionality_factor(&cc0, &|_t| 0.0, &pt(&[0.2, -0.4, 1.1]), &fd()).unwrap();
    assert_eq!(check.factor, 0.0);
    assert_eq!(check.defect, 0.0);
}

#[test]
fn proportionality_defect_tracks_fd_order_on_solution_data() {
    // rho = -2 ln x1 is the other linear-levels solution branch in dimension
    // three: |d rho|^2 = 4 e^{rho}, so gamma(t) = 4 e^t. Away from rounding
    // the defect is pure finite-difference truncation, order h^2.
    let cc = ConformalChange::new(
        half_space(3),
        ScalarField::log_coordinate(0, -2.0),
    );
    let gp = |t: f64| 4.0 * t.exp();
    let x = pt(&[1.1, 0.8, 1.3]);

    let tight = FdConfig::new(1e-4, true).unwrap();
    let check = proportionality_factor(&cc, &gp, &x, &tight).unwrap();
    assert!(check.defect <= 1e-8, "analytic-path defect {}", check.defect);

    let coarse = proportionality_factor(&cc, &gp, &x, &FdConfig::with_h(2e-2).unwrap()).unwrap();
    let fine = proportionality_factor(&cc, &gp, &x, &FdConfig::with_h(1e-2).unwrap()).unwrap();
    let order = (coarse.defect / fine.defect).log2();
    assert!(
        (1.4..=2.7).contains(&order),
        "defect order {order} (coarse {}, fine {})",
        coarse.defect,
        fine.defect
    );
}

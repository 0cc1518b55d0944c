//! Runs both isoparametric checkers on a named test function with a
//! deterministic built-in sample, then compares their verdicts against each
//! other and against the known classification of the function.

use bitension::chart::{euclidean, punctured_euclidean};
use bitension::isoparam::{collinearity_check, dependence_fit, IsoparamReport};
use bitension::{ChartManifold, Point, Polynomial, ScalarField};

use crate::config::{CliError, IsoparamFunction, Settings};
use crate::report::{Csv, RunReport};

/// Generic cloud in the positive region; fine for functions whose criteria
/// hold (or fail) pointwise regardless of binning.
fn cloud(dim: usize) -> Vec<Point> {
    (0..12)
        .map(|k| {
            let coords = (0..dim)
                .map(|j| 0.55 + 0.09 * (((k + 2 * j) % 7) as f64) + 0.04 * (j as f64))
                .collect();
            Point::new(coords)
        })
        .collect()
}

/// Three exact radius levels, six points each, so the dependence bins are
/// genuine level sets.
fn sphere_levels(dim: usize) -> Vec<Point> {
    let mut out = Vec::new();
    for &r in &[1.0_f64, 1.4, 1.9] {
        for k in 0..6 {
            let mut d: Vec<f64> = (0..dim)
                .map(|j| 0.4 + 0.23 * (((5 * k + 3 * j) % 11) as f64))
                .collect();
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in &mut d {
                *v *= r / norm;
            }
            out.push(Point::new(d));
        }
    }
    out
}

/// Two exact levels of x1*x2 with spread-out points, where the gradient
/// criterion genuinely fails.
fn product_levels(dim: usize) -> Vec<Point> {
    let mut out = Vec::new();
    for &level in &[1.0_f64, 1.44] {
        for (k, &a) in [0.5_f64, 0.8, 1.0, 1.25, 1.6, 2.0].iter().enumerate() {
            let mut coords = vec![0.0; dim];
            coords[0] = a;
            coords[1] = level / a;
            for (j, c) in coords.iter_mut().enumerate().skip(2) {
                *c = 0.1 * (k as f64) - 0.2 + 0.05 * (j as f64);
            }
            out.push(Point::new(coords));
        }
    }
    out
}

struct Case {
    m: ChartManifold,
    f: ScalarField,
    points: Vec<Point>,
    expect_grad: bool,
    expect_lap: bool,
}

fn build_case(func: IsoparamFunction, dim: usize) -> Result<Case, CliError> {
    if dim < 2 {
        return Err(CliError::config(format!(
            "isoparam functions need dimension at least 2, got {dim}"
        )));
    }
    Ok(match func {
        IsoparamFunction::Linear => {
            let mut c = vec![0.0; dim];
            c[0] = 0.6;
            c[1] = 0.8;
            Case {
                m: euclidean(dim),
                f: ScalarField::linear(c),
                points: cloud(dim),
                expect_grad: true,
                expect_lap: true,
            }
        }
        IsoparamFunction::Radius => Case {
            m: punctured_euclidean(dim),
            f: ScalarField::radius(),
            points: sphere_levels(dim),
            expect_grad: true,
            expect_lap: true,
        },
        IsoparamFunction::CoordinateProduct => {
            let mut exps = vec![0u32; dim];
            exps[0] = 1;
            exps[1] = 1;
            Case {
                m: euclidean(dim),
                f: Polynomial::new(dim, vec![(1.0, exps)]).to_field(),
                points: product_levels(dim),
                expect_grad: false,
                expect_lap: true,
            }
        }
    })
}

fn emit_checker(report: &mut RunReport, label: &str, rep: &IsoparamReport, case: &Case) {
    report.kv(format!("{label}.points_used"), rep.points_used.len());
    report.kv(format!("{label}.points_skipped"), rep.skipped.len());
    report.kv(format!("{label}.inconclusive"), rep.inconclusive);
    report.kv_f(
        format!("{label}.gradient_max_defect"),
        rep.grad_criterion.max_defect,
    );
    report.kv_f(
        format!("{label}.laplacian_max_defect"),
        rep.laplacian_criterion.max_defect,
    );
    report.check_is(
        &format!("{label}.gradient_verdict"),
        rep.grad_criterion.verdict,
        case.expect_grad,
    );
    report.check_is(
        &format!("{label}.laplacian_verdict"),
        rep.laplacian_criterion.verdict,
        case.expect_lap,
    );
}

pub fn run(settings: &Settings, report: &mut RunReport) -> Result<(), CliError> {
    let dim = settings.isoparam_dimension;
    let case = build_case(settings.isoparam_function, dim)?;
    report.kv("function", settings.isoparam_function.name());
    report.kv("dimension", dim);
    report.kv("sample_points", case.points.len());

    let tol = settings.tol.isoparam;
    report.kv_f("tolerance", tol);
    let col = collinearity_check(&case.m, &case.f, &case.points, tol, &settings.fd)?;
    let dep = dependence_fit(&case.m, &case.f, &case.points, tol, &settings.fd)?;

    emit_checker(report, "collinearity", &col, &case);
    emit_checker(report, "dependence", &dep, &case);

    report.check_is(
        "checkers_agree_on_gradient",
        col.grad_criterion.verdict == dep.grad_criterion.verdict,
        true,
    );
    report.check_is(
        "checkers_agree_on_laplacian",
        col.laplacian_criterion.verdict == dep.laplacian_criterion.verdict,
        true,
    );

    if let Some(profile) = &dep.profile {
        report.kv("profile.bins", profile.s.len());
        match profile.einstein_c {
            Some(c) => report.kv_f("profile.einstein_constant", c),
            None => report.kv("profile.einstein_constant", "unknown"),
        }
        let mut csv = Csv::new(vec![
            "s".into(),
            "gamma".into(),
            "sigma".into(),
            "sigma_prime".into(),
        ]);
        for k in 0..profile.s.len() {
            csv.push(&[
                profile.s[k],
                profile.gamma[k],
                profile.sigma[k],
                profile.sigma_prime[k],
            ]);
        }
        report.set_csv(csv);
    }
    Ok(())
}

//! Grid sweep of the biharmonicity obstructions for a configured exponent:
//! the vector residual, its one-form version, the closedness two-form, and
//! the forward bitension.

use bitension::chart::vector_norm;
use bitension::conformal::{biharmonic_residual, bitension_forward, ConformalChange};
use bitension::forms::{form_norm_sq, one_form_residual, two_form_residual};

use crate::config::{CliError, Expect, Settings};
use crate::report::{Csv, RunReport};

pub fn run(settings: &Settings, report: &mut RunReport) -> Result<(), CliError> {
    let dim = settings.manifold.dimension;
    if dim < 3 {
        return Err(CliError::config(format!(
            "the residual sweep needs dimension at least 3, got {dim}"
        )));
    }
    let grid = settings.grid_spec()?;
    if grid.dim() != dim {
        return Err(CliError::config(format!(
            "grid has {} extents but the manifold dimension is {dim}",
            grid.dim()
        )));
    }

    let m = settings.manifold.build();
    let rho = settings.exponent.build(dim)?;
    let cc = ConformalChange::new(m, rho);
    let points = grid.points();

    report.kv("manifold", settings.manifold.kind.name());
    report.kv("dimension", dim);
    report.kv("exponent", settings.exponent.preset_name());
    report.kv("grid_points", points.len());

    let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    header.extend((1..=dim).map(|i| format!("biharmonic_{i}")));
    header.extend((1..=dim).map(|i| format!("one_form_{i}")));
    header.push("norm_biharmonic".into());
    header.push("norm_one_form".into());
    header.push("max_abs_two_form".into());
    header.push("norm_bitension_forward".into());
    let mut csv = Csv::new(header);

    let cfg = &settings.fd;
    let mut max_b = 0.0f64;
    let mut max_e = 0.0f64;
    let mut max_c = 0.0f64;
    let mut max_t = 0.0f64;
    for x in &points {
        let b = biharmonic_residual(&cc, x, cfg)?;
        let e = one_form_residual(&cc, x, cfg)?;
        let c = two_form_residual(&cc, x, cfg)?;
        let t = bitension_forward(&cc, x, cfg)?;

        let nb = vector_norm(&cc.base, x, &b)?;
        let ne = form_norm_sq(&cc.base, &e, x)?.sqrt();
        let nc = c.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let nt = vector_norm(&cc.base, x, &t)?;
        max_b = max_b.max(nb);
        max_e = max_e.max(ne);
        max_c = max_c.max(nc);
        max_t = max_t.max(nt);

        let mut row = x.coords.clone();
        row.extend(b.iter());
        row.extend(e.iter());
        row.extend([nb, ne, nc, nt]);
        csv.push(&row);
    }

    report.kv_f("max_norm_biharmonic", max_b);
    report.kv_f("max_norm_one_form", max_e);
    report.kv_f("max_abs_two_form", max_c);
    report.kv_f("max_norm_bitension_forward", max_t);

    if settings.expect == Expect::Biharmonic {
        // Closed-form exponents are held to the analytic tolerance;
        // tabulated ones only to finite-difference accuracy.
        let tol = if settings.exponent.analytic() {
            settings.tol.analytic
        } else {
            settings.tol.fd
        };
        report.check_le("max_norm_biharmonic", max_b, tol);
    }
    report.set_csv(csv);
    Ok(())
}

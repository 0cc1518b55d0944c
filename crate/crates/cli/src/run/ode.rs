//! Integrates the reduced profile equation, tabulates (s, y, rho), and
//! optionally composes the table with a level field to sweep the vector
//! residual on a grid.

use bitension::chart::vector_norm;
use bitension::conformal::{biharmonic_residual, ConformalChange};
use bitension::ode::{conformal_factor_from_solution, integrate, OdeSolution};
use bitension::report::GridSpec;
use bitension::GeomError;

use crate::config::{build_problem, parse_s_field, CliError, OdeCompose, Settings};
use crate::report::{Csv, RunReport};

pub fn run(settings: &Settings, report: &mut RunReport) -> Result<(), CliError> {
    let o = &settings.ode;
    let problem = build_problem(o.n, o.c, &o.sigma, o.s_range, o.init)?;
    report.kv("dimension", o.n);
    report.kv_f("constant", o.c);
    report.kv("sigma", o.sigma.name());
    report.kv_f("s_start", o.s_range.0);
    report.kv_f("s_end_requested", o.s_range.1);
    report.kv_f("step", o.step);
    report.kv_f("y_start", o.init.0);
    report.kv_f("y_prime_start", o.init.1);

    let sol = match integrate(&problem, o.step) {
        Ok(sol) => sol,
        Err(GeomError::BlowUp { s, y }) => {
            // A pole in finite range is a legitimate outcome for this
            // equation, reported rather than failed.
            report.kv("outcome", "blow_up");
            report.kv_f("blow_up.s", s);
            report.kv_f("blow_up.y", y);
            if o.compose.is_some() {
                report.kv("compose", "skipped_after_blow_up");
            }
            return Ok(());
        }
        Err(GeomError::InvalidInput(m)) => return Err(CliError::Config(m)),
        Err(e) => return Err(CliError::Runtime(e.to_string())),
    };

    let last = sol.s.len() - 1;
    report.kv("outcome", "integrated");
    report.kv("rows", sol.s.len());
    report.kv_f("s_end", sol.s[last]);
    report.kv_f("y_end", sol.y[last]);
    report.kv_f("rho_end", sol.rho[last]);
    report.kv_f("max_recomputation_residual", sol.max_residual);
    report.check_le(
        "max_recomputation_residual",
        sol.max_residual,
        settings.tol.ode_residual,
    );

    let mut csv = Csv::new(vec!["s".into(), "y".into(), "rho".into()]);
    for k in 0..sol.s.len() {
        csv.push(&[sol.s[k], sol.y[k], sol.rho[k]]);
    }
    report.set_csv(csv);

    if let Some(compose) = &o.compose {
        run_compose(settings, &sol, compose, report)?;
    }
    Ok(())
}

/// Sweeps the vector residual of the table-built exponent over a grid,
/// keeping only points whose level value sits inside the table with enough
/// margin for the finite-difference stencils.
fn run_compose(
    settings: &Settings,
    sol: &OdeSolution,
    compose: &OdeCompose,
    report: &mut RunReport,
) -> Result<(), CliError> {
    let s_field = parse_s_field(&compose.s_field_name)?;
    let dim = compose.manifold.dimension;
    if dim < 3 {
        return Err(CliError::config(format!(
            "the composed sweep needs dimension at least 3, got {dim}"
        )));
    }
    let grid = GridSpec::new(compose.extents.clone(), compose.resolution)
        .map_err(|e| CliError::config(format!("compose grid: {e}")))?;
    if grid.dim() != dim {
        return Err(CliError::config(format!(
            "compose grid has {} extents but the manifold dimension is {dim}",
            grid.dim()
        )));
    }

    let m = compose.manifold.build();
    let rho = conformal_factor_from_solution(sol, &s_field)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let cc = ConformalChange::new(m, rho);

    let (lo, hi) = (sol.s[0], sol.s[sol.s.len() - 1]);
    let margin = 8.0 * settings.fd.h * (1.0 + hi.abs());
    report.kv("compose.manifold", compose.manifold.kind.name());
    report.kv("compose.s_field", compose.s_field_name.as_str());
    report.kv_f("compose.table_margin", margin);

    let mut kept = 0usize;
    let mut dropped = 0usize;
    let mut max_b = 0.0f64;
    for x in grid.points() {
        let s = s_field.eval(&x);
        if !(s >= lo + margin && s <= hi - margin) {
            dropped += 1;
            continue;
        }
        let b = biharmonic_residual(&cc, &x, &settings.fd)?;
        max_b = max_b.max(vector_norm(&cc.base, &x, &b)?);
        kept += 1;
    }
    if kept == 0 {
        return Err(CliError::config(
            "no compose grid point lands inside the tabulated level range",
        ));
    }
    report.kv("compose.points_kept", kept);
    report.kv("compose.points_dropped", dropped);
    report.check_le("compose.max_norm_biharmonic", max_b, settings.tol.fd);
    Ok(())
}

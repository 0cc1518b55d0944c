//! Compares the identity map of a conformally changed base with its lift
//! through a product projection: the lifted tension and bitension must match
//! the base ones, and the harmonicity verdicts must agree.

use bitension::chart::vector_norm;
use bitension::conformal::{bitension_forward, tension_forward, ConformalChange};
use bitension::submersion::{
    bitension_of_composition, reduction_check, tension_of_composition, ProductSubmersion,
};
use bitension::report::GridSpec;

use crate::config::{CliError, Settings};
use crate::report::{Csv, RunReport};

pub fn run(settings: &Settings, report: &mut RunReport) -> Result<(), CliError> {
    let base_dim = settings.manifold.dimension;
    if base_dim < 3 {
        return Err(CliError::config(format!(
            "the submersion comparison needs base dimension at least 3, got {base_dim}"
        )));
    }
    let total = settings.submersion_total.unwrap_or(base_dim + 1);
    if total <= base_dim || total > base_dim + 3 {
        return Err(CliError::config(format!(
            "total dimension must exceed the base dimension {base_dim} by 1 to 3, got {total}"
        )));
    }

    let base = settings.manifold.build();
    let rho = settings.exponent.build(base_dim)?;
    let cc = ConformalChange::new(base.clone(), rho);
    let ps = ProductSubmersion::new(base, total)
        .map_err(|e| CliError::config(format!("submersion: {e}")))?;

    let (extents, resolution) = match &settings.submersion_grid {
        Some((e, r)) => (e.clone(), *r),
        None => {
            // Base axes stay near the all-ones point, fiber axes straddle
            // zero: fiber independence is part of what the sweep probes.
            let mut e = vec![(0.7, 1.3); base_dim];
            e.extend(vec![(-0.4, 0.4); total - base_dim]);
            (e, 2)
        }
    };
    let grid = GridSpec::new(extents, resolution)
        .map_err(|e| CliError::config(format!("submersion grid: {e}")))?;
    if grid.dim() != total {
        return Err(CliError::config(format!(
            "submersion grid has {} extents but the total dimension is {total}",
            grid.dim()
        )));
    }
    let points = grid.points();

    report.kv("manifold", settings.manifold.kind.name());
    report.kv("base_dimension", base_dim);
    report.kv("total_dimension", total);
    report.kv("exponent", settings.exponent.preset_name());
    report.kv("grid_points", points.len());

    let cfg = &settings.fd;
    let (r1, r2) = reduction_check(&ps, &cc, &points, cfg)?;
    report.check_le(
        "max_norm_tension_residual",
        r1.max_norm,
        settings.tol.submersion_tension,
    );
    report.check_le(
        "max_norm_bitension_residual",
        r2.max_norm,
        settings.tol.submersion_bitension,
    );

    // Independent verdicts: classify each side on its own and require
    // agreement, instead of inferring the lifted verdict from the residual.
    let verdict_tol = settings.tol.oracle;
    let mut lift_t = 0.0f64;
    let mut lift_b = 0.0f64;
    let mut id_t = 0.0f64;
    let mut id_b = 0.0f64;
    for x in &points {
        let p = ps.project(x)?;
        lift_t = lift_t.max(vector_norm(
            &cc.base,
            &p,
            &tension_of_composition(&ps, &cc, x, cfg)?,
        )?);
        lift_b = lift_b.max(vector_norm(
            &cc.base,
            &p,
            &bitension_of_composition(&ps, &cc, x, cfg)?,
        )?);
        id_t = id_t.max(vector_norm(&cc.base, &p, &tension_forward(&cc, &p, cfg)?)?);
        id_b = id_b.max(vector_norm(&cc.base, &p, &bitension_forward(&cc, &p, cfg)?)?);
    }
    report.kv_f("lifted.max_tension_norm", lift_t);
    report.kv_f("lifted.max_bitension_norm", lift_b);
    report.kv_f("identity.max_tension_norm", id_t);
    report.kv_f("identity.max_bitension_norm", id_b);
    report.kv("lifted.harmonic", lift_t <= verdict_tol);
    report.kv("lifted.biharmonic", lift_b <= verdict_tol);
    report.kv("identity.harmonic", id_t <= verdict_tol);
    report.kv("identity.biharmonic", id_b <= verdict_tol);
    report.check_is(
        "harmonic_verdicts_agree",
        (lift_t <= verdict_tol) == (id_t <= verdict_tol),
        true,
    );
    report.check_is(
        "biharmonic_verdicts_agree",
        (lift_b <= verdict_tol) == (id_b <= verdict_tol),
        true,
    );

    let mut header: Vec<String> = (1..=base_dim).map(|i| format!("x{i}")).collect();
    header.push("norm_tension_residual".into());
    header.push("norm_bitension_residual".into());
    let mut csv = Csv::new(header);
    for k in 0..r1.points.len() {
        let mut row = r1.points[k].coords.clone();
        row.push(r1.norms[k]);
        row.push(r2.norms[k]);
        csv.push(&row);
    }
    report.set_csv(csv);
    Ok(())
}

//! Slope quadratics for the two closed solution families, with each root
//! substituted back as a correctness check.

use bitension::ode::{ansatz_linear_levels, ansatz_radial_levels, AnsatzFamily, AnsatzRoots};

use crate::config::{CliError, FamilyChoice, Settings};
use crate::report::RunReport;

fn family_label(f: AnsatzFamily) -> &'static str {
    match f {
        AnsatzFamily::LinearLevels => "linear_levels",
        AnsatzFamily::RadialLevels => "radial_levels",
    }
}

fn emit(report: &mut RunReport, roots: &AnsatzRoots, tol: f64) {
    let name = family_label(roots.family);
    let (a, b, c) = roots.coeffs;
    report.kv_f(format!("{name}.coeff_quadratic"), a);
    report.kv_f(format!("{name}.coeff_linear"), b);
    report.kv_f(format!("{name}.coeff_constant"), c);
    report.kv_f(format!("{name}.discriminant"), roots.discriminant);
    if roots.degenerate_linear {
        report.kv(format!("{name}.degenerate"), true);
    }
    if roots.roots.is_empty() {
        // Informational outcome, not a failure: some dimensions simply
        // admit no member of the family.
        report.kv(format!("{name}.roots"), "none");
        return;
    }
    for (k, &root) in roots.roots.iter().enumerate() {
        report.kv_f(format!("{name}.root_{k}"), root);
        let sub = (a * root * root + b * root + c).abs();
        report.check_le(&format!("{name}.substitution_residual_{k}"), sub, tol);
    }
}

pub fn run(settings: &Settings, report: &mut RunReport) -> Result<(), CliError> {
    let n = settings.ansatz_n;
    report.kv("dimension", n);
    if matches!(
        settings.ansatz_family,
        FamilyChoice::Linear | FamilyChoice::Both
    ) {
        emit(report, &ansatz_linear_levels(n), settings.tol.ansatz);
    }
    if matches!(
        settings.ansatz_family,
        FamilyChoice::Radial | FamilyChoice::Both
    ) {
        emit(report, &ansatz_radial_levels(n), settings.tol.ansatz);
    }
    Ok(())
}

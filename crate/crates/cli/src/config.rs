//! Configuration file schema and its resolution into runnable settings.
//!
//! One TOML file drives every subcommand. Sections a command does not use
//! are ignored by it; sections missing from the file fall back to the
//! documented defaults, so every command also runs with no file at all.
//! Unknown keys are rejected everywhere.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use bitension::chart::{euclidean, half_space, punctured_euclidean, sphere_stereo};
use bitension::ode::{conformal_factor_from_solution, integrate, OdeProblem, OdeSolution};
use bitension::report::GridSpec;
use bitension::{ChartManifold, GeomError, Polynomial, ScalarField};

pub const SCHEMA_VERSION: u32 = 1;

/// Failures split by exit code: config errors exit 2, runtime errors 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Raw file schema.

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    schema_version: Option<u32>,
    experiment: Option<String>,
    manifold: Option<ManifoldSection>,
    exponent: Option<ExponentSection>,
    grid: Option<GridSection>,
    fd: Option<FdSection>,
    tolerances: Option<ToleranceSection>,
    residual: Option<ResidualSection>,
    ansatz: Option<AnsatzSection>,
    ode: Option<OdeSection>,
    isoparam: Option<IsoparamSection>,
    submersion: Option<SubmersionSection>,
}

#[derive(Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct ManifoldSection {
    kind: String,
    dimension: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExponentSection {
    preset: String,
    coefficient: Option<f64>,
    coefficients: Option<Vec<f64>>,
    degree: Option<u32>,
    table: Option<String>,
}

#[derive(Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct GridSection {
    extents: Vec<[f64; 2]>,
    resolution: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FdSection {
    h: Option<f64>,
    richardson: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceSection {
    analytic: Option<f64>,
    fd: Option<f64>,
    oracle: Option<f64>,
    submersion_tension: Option<f64>,
    submersion_bitension: Option<f64>,
    isoparam: Option<f64>,
    ansatz: Option<f64>,
    ode_residual: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResidualSection {
    expect: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnsatzSection {
    n: Option<usize>,
    family: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OdeSection {
    n: Option<usize>,
    c: Option<f64>,
    sigma: Option<String>,
    s_range: Option<[f64; 2]>,
    step: Option<f64>,
    init: Option<[f64; 2]>,
    compose: Option<ComposeSection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComposeSection {
    s_field: String,
    manifold: ManifoldSection,
    grid: GridSection,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IsoparamSection {
    function: Option<String>,
    dimension: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmersionSection {
    total_dimension: Option<usize>,
    grid: Option<GridSection>,
}

/// Self-contained description of a profile table for the ode_table preset:
/// the problem is integrated on load and composed with the named scalar
/// field.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OdeTableFile {
    n: usize,
    c: f64,
    sigma: String,
    s_range: [f64; 2],
    step: f64,
    init: [f64; 2],
    s_field: String,
}

// ---------------------------------------------------------------------------
// Resolved settings.

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    Euclidean,
    HalfSpace,
    SphereStereo,
    Punctured,
}

impl ManifoldKind {
    pub fn name(self) -> &'static str {
        match self {
            ManifoldKind::Euclidean => "euclidean",
            ManifoldKind::HalfSpace => "half_space",
            ManifoldKind::SphereStereo => "sphere_stereo",
            ManifoldKind::Punctured => "punctured",
        }
    }
}

#[derive(Clone)]
pub struct ManifoldSettings {
    pub kind: ManifoldKind,
    pub dimension: usize,
}

impl ManifoldSettings {
    pub fn build(&self) -> ChartManifold {
        match self.kind {
            ManifoldKind::Euclidean => euclidean(self.dimension),
            ManifoldKind::HalfSpace => half_space(self.dimension),
            ManifoldKind::SphereStereo => sphere_stereo(self.dimension),
            ManifoldKind::Punctured => punctured_euclidean(self.dimension),
        }
    }
}

pub enum ExponentSettings {
    LnX1 { coefficient: f64 },
    Linear { coefficients: Option<Vec<f64>> },
    Power { coefficient: f64, degree: u32 },
    RadialAnsatz { coefficient: f64 },
    OdeTable { path: PathBuf },
}

impl ExponentSettings {
    pub fn preset_name(&self) -> &'static str {
        match self {
            ExponentSettings::LnX1 { .. } => "ln_x1",
            ExponentSettings::Linear { .. } => "linear",
            ExponentSettings::Power { .. } => "power",
            ExponentSettings::RadialAnsatz { .. } => "radial_ansatz",
            ExponentSettings::OdeTable { .. } => "ode_table",
        }
    }

    /// Interpolated tables sit on the finite-difference accuracy tier; the
    /// closed-form presets all carry analytic derivatives.
    pub fn analytic(&self) -> bool {
        !matches!(self, ExponentSettings::OdeTable { .. })
    }

    pub fn build(&self, dimension: usize) -> Result<ScalarField, CliError> {
        match self {
            ExponentSettings::LnX1 { coefficient } => {
                Ok(ScalarField::log_coordinate(0, *coefficient))
            }
            ExponentSettings::Linear { coefficients } => {
                let c = match coefficients {
                    Some(c) => {
                        if c.len() != dimension {
                            return Err(CliError::config(format!(
                                "linear preset got {} coefficients for dimension {dimension}",
                                c.len()
                            )));
                        }
                        c.clone()
                    }
                    None => {
                        let mut c = vec![0.0; dimension];
                        c[0] = 1.0;
                        c
                    }
                };
                Ok(ScalarField::linear(c))
            }
            ExponentSettings::Power {
                coefficient,
                degree,
            } => {
                let mut exps = vec![0u32; dimension];
                exps[0] = *degree;
                Ok(Polynomial::new(dimension, vec![(*coefficient, exps)]).to_field())
            }
            ExponentSettings::RadialAnsatz { coefficient } => {
                Ok(ScalarField::radial_log(*coefficient))
            }
            ExponentSettings::OdeTable { path } => {
                let (_problem, _sol, field) = load_ode_table(path)?;
                Ok(field)
            }
        }
    }
}

/// Parses and integrates an ode_table file, returning the problem, the
/// solution table, and the composed conformal exponent.
pub fn load_ode_table(path: &Path) -> Result<(OdeProblem, OdeSolution, ScalarField), CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::config(format!("cannot read ode table {}: {e}", path.display()))
    })?;
    let raw: OdeTableFile = toml::from_str(&text)
        .map_err(|e| CliError::config(format!("ode table {}: {e}", path.display())))?;
    let sigma = parse_sigma(&raw.sigma, raw.n)?;
    let problem = build_problem(
        raw.n,
        raw.c,
        &sigma,
        (raw.s_range[0], raw.s_range[1]),
        (raw.init[0], raw.init[1]),
    )?;
    let sol = integrate(&problem, raw.step).map_err(|e| CliError::Runtime(e.to_string()))?;
    let s_field = parse_s_field(&raw.s_field)?;
    let field =
        conformal_factor_from_solution(&sol, &s_field).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok((problem, sol, field))
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum SigmaKind {
    Zero,
    Radial,
}

impl SigmaKind {
    pub fn name(self) -> &'static str {
        match self {
            SigmaKind::Zero => "zero",
            SigmaKind::Radial => "radial",
        }
    }
}

pub fn parse_sigma(name: &str, _n: usize) -> Result<SigmaKind, CliError> {
    match name {
        "zero" => Ok(SigmaKind::Zero),
        "radial" => Ok(SigmaKind::Radial),
        other => Err(CliError::config(format!(
            "unknown sigma profile '{other}' (expected zero or radial)"
        ))),
    }
}

/// Builds the ODE problem with the named mean-curvature profile. Validation
/// failures are configuration mistakes, not runtime surprises.
pub fn build_problem(
    n: usize,
    c: f64,
    sigma: &SigmaKind,
    s_range: (f64, f64),
    init: (f64, f64),
) -> Result<OdeProblem, CliError> {
    match sigma {
        SigmaKind::Zero => OdeProblem::new(n, c, |_| 0.0, |_| 0.0, s_range, init),
        SigmaKind::Radial => {
            let k = n as f64 - 1.0;
            OdeProblem::new(n, c, move |s| -k / s, move |s| k / (s * s), s_range, init)
        }
    }
    .map_err(|e| CliError::config(format!("ode problem: {e}")))
}

pub fn parse_s_field(name: &str) -> Result<ScalarField, CliError> {
    match name {
        "radius" => Ok(ScalarField::radius()),
        "x1" => Ok(ScalarField::coordinate(0)),
        other => Err(CliError::config(format!(
            "unknown s_field '{other}' (expected radius or x1)"
        ))),
    }
}

pub struct Tolerances {
    pub analytic: f64,
    pub fd: f64,
    pub oracle: f64,
    pub submersion_tension: f64,
    pub submersion_bitension: f64,
    pub isoparam: f64,
    pub ansatz: f64,
    pub ode_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            analytic: 1e-6,
            fd: 1e-4,
            oracle: 1e-3,
            submersion_tension: 1e-6,
            submersion_bitension: 1e-3,
            isoparam: 1e-8,
            ansatz: 1e-12,
            ode_residual: 1e-3,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    ReportOnly,
    Biharmonic,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum FamilyChoice {
    Linear,
    Radial,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum IsoparamFunction {
    Linear,
    Radius,
    CoordinateProduct,
}

impl IsoparamFunction {
    pub fn name(self) -> &'static str {
        match self {
            IsoparamFunction::Linear => "linear",
            IsoparamFunction::Radius => "radius",
            IsoparamFunction::CoordinateProduct => "coordinate_product",
        }
    }
}

pub struct OdeCompose {
    pub s_field_name: String,
    pub manifold: ManifoldSettings,
    pub extents: Vec<(f64, f64)>,
    pub resolution: usize,
}

pub struct OdeSettings {
    pub n: usize,
    pub c: f64,
    pub sigma: SigmaKind,
    pub s_range: (f64, f64),
    pub step: f64,
    pub init: (f64, f64),
    pub compose: Option<OdeCompose>,
}

pub struct Settings {
    pub experiment: Option<String>,
    pub manifold: ManifoldSettings,
    pub exponent: ExponentSettings,
    pub grid: Option<(Vec<(f64, f64)>, usize)>,
    pub fd: bitension::FdConfig,
    pub tol: Tolerances,
    pub expect: Expect,
    pub ansatz_n: usize,
    pub ansatz_family: FamilyChoice,
    pub ode: OdeSettings,
    pub isoparam_function: IsoparamFunction,
    pub isoparam_dimension: usize,
    pub submersion_total: Option<usize>,
    pub submersion_grid: Option<(Vec<(f64, f64)>, usize)>,
}

impl Settings {
    /// The grid for grid-driven commands: the configured one, or the
    /// default cube [0.5, 2]^dim which sits inside every model domain.
    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        let built = match &self.grid {
            Some((extents, res)) => GridSpec::new(extents.clone(), *res),
            None => GridSpec::cube(self.manifold.dimension, 0.5, 2.0, 5),
        };
        built.map_err(|e| CliError::config(format!("grid: {e}")))
    }
}

fn parse_grid(section: &GridSection) -> (Vec<(f64, f64)>, usize) {
    (
        section.extents.iter().map(|e| (e[0], e[1])).collect(),
        section.resolution,
    )
}

fn parse_manifold(section: &ManifoldSection) -> Result<ManifoldSettings, CliError> {
    let kind = match section.kind.as_str() {
        "euclidean" => ManifoldKind::Euclidean,
        "half_space" => ManifoldKind::HalfSpace,
        "sphere_stereo" => ManifoldKind::SphereStereo,
        "punctured" => ManifoldKind::Punctured,
        other => {
            return Err(CliError::config(format!(
                "unknown manifold kind '{other}' \
                 (expected euclidean, half_space, sphere_stereo, or punctured)"
            )))
        }
    };
    let d = section.dimension;
    if d == 0 || d > 12 {
        return Err(CliError::config(format!(
            "manifold dimension must be between 1 and 12, got {d}"
        )));
    }
    Ok(ManifoldSettings { kind, dimension: d })
}

fn parse_exponent(
    section: &ExponentSection,
    config_dir: Option<&Path>,
) -> Result<ExponentSettings, CliError> {
    let no = |key: &str, preset: &str| -> CliError {
        CliError::config(format!("exponent preset {preset} does not take '{key}'"))
    };
    match section.preset.as_str() {
        "ln_x1" => {
            if section.coefficients.is_some() {
                return Err(no("coefficients", "ln_x1"));
            }
            if section.degree.is_some() {
                return Err(no("degree", "ln_x1"));
            }
            if section.table.is_some() {
                return Err(no("table", "ln_x1"));
            }
            Ok(ExponentSettings::LnX1 {
                coefficient: section.coefficient.unwrap_or(1.0),
            })
        }
        "linear" => {
            if section.coefficient.is_some() {
                return Err(no("coefficient", "linear"));
            }
            if section.degree.is_some() {
                return Err(no("degree", "linear"));
            }
            if section.table.is_some() {
                return Err(no("table", "linear"));
            }
            Ok(ExponentSettings::Linear {
                coefficients: section.coefficients.clone(),
            })
        }
        "power" => {
            if section.coefficients.is_some() {
                return Err(no("coefficients", "power"));
            }
            if section.table.is_some() {
                return Err(no("table", "power"));
            }
            let degree = section.degree.unwrap_or(2);
            if degree == 0 || degree > 8 {
                return Err(CliError::config(format!(
                    "power preset degree must be between 1 and 8, got {degree}"
                )));
            }
            Ok(ExponentSettings::Power {
                coefficient: section.coefficient.unwrap_or(1.0),
                degree,
            })
        }
        "radial_ansatz" => {
            if section.coefficients.is_some() {
                return Err(no("coefficients", "radial_ansatz"));
            }
            if section.degree.is_some() {
                return Err(no("degree", "radial_ansatz"));
            }
            if section.table.is_some() {
                return Err(no("table", "radial_ansatz"));
            }
            let a = section.coefficient.ok_or_else(|| {
                CliError::config("radial_ansatz preset needs 'coefficient' (the level exponent)")
            })?;
            if a == 0.0 || !a.is_finite() {
                return Err(CliError::config(
                    "radial_ansatz coefficient must be finite and nonzero",
                ));
            }
            Ok(ExponentSettings::RadialAnsatz { coefficient: a })
        }
        "ode_table" => {
            if section.coefficient.is_some() {
                return Err(no("coefficient", "ode_table"));
            }
            if section.coefficients.is_some() {
                return Err(no("coefficients", "ode_table"));
            }
            if section.degree.is_some() {
                return Err(no("degree", "ode_table"));
            }
            let rel = section.table.as_ref().ok_or_else(|| {
                CliError::config("ode_table preset needs 'table' (path to a table file)")
            })?;
            let path = match config_dir {
                Some(dir) => dir.join(rel),
                None => PathBuf::from(rel),
            };
            Ok(ExponentSettings::OdeTable { path })
        }
        other => Err(CliError::config(format!(
            "unknown exponent preset '{other}' \
             (expected ln_x1, linear, power, radial_ansatz, or ode_table)"
        ))),
    }
}

pub fn load(path: Option<&Path>) -> Result<Settings, CliError> {
    let (raw, dir) = match path {
        None => (FileConfig::default(), None),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?;
            let raw: FileConfig =
                toml::from_str(&text).map_err(|e| CliError::config(format!("parse: {e}")))?;
            match raw.schema_version {
                Some(SCHEMA_VERSION) => {}
                Some(v) => {
                    return Err(CliError::config(format!(
                        "unsupported schema_version {v} (this build reads {SCHEMA_VERSION})"
                    )))
                }
                None => {
                    return Err(CliError::config(
                        "config file must set schema_version",
                    ))
                }
            }
            (raw, p.parent().map(Path::to_path_buf))
        }
    };

    let manifold = match &raw.manifold {
        Some(s) => parse_manifold(s)?,
        None => ManifoldSettings {
            kind: ManifoldKind::HalfSpace,
            dimension: 3,
        },
    };

    let exponent = match &raw.exponent {
        Some(s) => parse_exponent(s, dir.as_deref())?,
        None => ExponentSettings::LnX1 { coefficient: 1.0 },
    };

    let grid = raw.grid.as_ref().map(parse_grid);

    // Reports favor accuracy over stencil count, so extrapolation is on by
    // default here even though the library default leaves it off.
    let fd = {
        let h = raw.fd.as_ref().and_then(|s| s.h).unwrap_or(1e-4);
        let richardson = raw.fd.as_ref().and_then(|s| s.richardson).unwrap_or(true);
        bitension::FdConfig::new(h, richardson)
            .map_err(|e| CliError::config(format!("fd: {e}")))?
    };

    let mut tol = Tolerances::default();
    if let Some(t) = &raw.tolerances {
        let assign = |slot: &mut f64, v: Option<f64>, key: &str| -> Result<(), CliError> {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::config(format!(
                        "tolerance {key} must be positive and finite, got {v}"
                    )));
                }
                *slot = v;
            }
            Ok(())
        };
        assign(&mut tol.analytic, t.analytic, "analytic")?;
        assign(&mut tol.fd, t.fd, "fd")?;
        assign(&mut tol.oracle, t.oracle, "oracle")?;
        assign(
            &mut tol.submersion_tension,
            t.submersion_tension,
            "submersion_tension",
        )?;
        assign(
            &mut tol.submersion_bitension,
            t.submersion_bitension,
            "submersion_bitension",
        )?;
        assign(&mut tol.isoparam, t.isoparam, "isoparam")?;
        assign(&mut tol.ansatz, t.ansatz, "ansatz")?;
        assign(&mut tol.ode_residual, t.ode_residual, "ode_residual")?;
    }

    let expect = match raw.residual.as_ref().and_then(|r| r.expect.as_deref()) {
        None | Some("report_only") => Expect::ReportOnly,
        Some("biharmonic") => Expect::Biharmonic,
        Some(other) => {
            return Err(CliError::config(format!(
                "unknown residual expectation '{other}' (expected report_only or biharmonic)"
            )))
        }
    };

    let ansatz_n = raw.ansatz.as_ref().and_then(|a| a.n).unwrap_or(3);
    if ansatz_n == 0 || ansatz_n > 24 {
        return Err(CliError::config(format!(
            "ansatz n must be between 1 and 24, got {ansatz_n}"
        )));
    }
    let ansatz_family = match raw.ansatz.as_ref().and_then(|a| a.family.as_deref()) {
        None | Some("both") => FamilyChoice::Both,
        Some("linear") => FamilyChoice::Linear,
        Some("radial") => FamilyChoice::Radial,
        Some(other) => {
            return Err(CliError::config(format!(
                "unknown ansatz family '{other}' (expected linear, radial, or both)"
            )))
        }
    };

    let ode = {
        let s = raw.ode.as_ref();
        let n = s.and_then(|o| o.n).unwrap_or(3);
        let c = s.and_then(|o| o.c).unwrap_or(0.0);
        let sigma = match s.and_then(|o| o.sigma.as_deref()) {
            None => SigmaKind::Zero,
            Some(name) => parse_sigma(name, n)?,
        };
        let s_range = s
            .and_then(|o| o.s_range)
            .map(|r| (r[0], r[1]))
            .unwrap_or((1.0, 2.0));
        let step = s.and_then(|o| o.step).unwrap_or(1e-3);
        let init = s
            .and_then(|o| o.init)
            .map(|i| (i[0], i[1]))
            .unwrap_or((1.0, -1.0));
        let compose = match s.and_then(|o| o.compose.as_ref()) {
            None => None,
            Some(cs) => {
                let (extents, resolution) = parse_grid(&cs.grid);
                Some(OdeCompose {
                    s_field_name: cs.s_field.clone(),
                    manifold: parse_manifold(&cs.manifold)?,
                    extents,
                    resolution,
                })
            }
        };
        OdeSettings {
            n,
            c,
            sigma,
            s_range,
            step,
            init,
            compose,
        }
    };

    let isoparam_function = match raw.isoparam.as_ref().and_then(|i| i.function.as_deref()) {
        None | Some("linear") => IsoparamFunction::Linear,
        Some("radius") => IsoparamFunction::Radius,
        Some("coordinate_product") => IsoparamFunction::CoordinateProduct,
        Some(other) => {
            return Err(CliError::config(format!(
                "unknown isoparam function '{other}' \
                 (expected linear, radius, or coordinate_product)"
            )))
        }
    };
    let isoparam_dimension = raw
        .isoparam
        .as_ref()
        .and_then(|i| i.dimension)
        .unwrap_or(3);
    if isoparam_dimension == 0 || isoparam_dimension > 10 {
        return Err(CliError::config(format!(
            "isoparam dimension must be between 1 and 10, got {isoparam_dimension}"
        )));
    }

    let submersion_total = raw.submersion.as_ref().and_then(|s| s.total_dimension);
    let submersion_grid = raw
        .submersion
        .as_ref()
        .and_then(|s| s.grid.as_ref())
        .map(parse_grid);

    Ok(Settings {
        experiment: raw.experiment,
        manifold,
        exponent,
        grid,
        fd,
        tol,
        expect,
        ansatz_n,
        ansatz_family,
        ode,
        isoparam_function,
        isoparam_dimension,
        submersion_total,
        submersion_grid,
    })
}

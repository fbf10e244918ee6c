//! Run configuration: one TOML file reproduces any run.
//!
//! Sections: `[geometry]` (centerline, cross-section, boundary),
//! `[problem]` (manufactured case or λ/f expressions), `[grid]`,
//! `[solver]`, `[output]`. `explain-config` prints the annotated template.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use pipesurf::compact::{GhostPolicy, SchemeOptions, ShDenominator};
use pipesurf::fields::ManufacturedCase;
use pipesurf::geometry::{
    catalog_centerline, catalog_cross_section, circle, circular, custom_cross_section, helix,
    sine, superellipse, BoundaryMode, CrossSection, PipeGeometry, SectionJet,
};
use pipesurf::harness::{helical_manufactured_case, torus_manufactured_case};
use pipesurf::solver::{Method, SolverOptions};

use crate::error::CliError;
use crate::expr::{self, Var};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Catalog kind, or `circle` / `helix` with explicit parameters.
    pub centerline: String,
    /// `circle`: [a]; `helix`: [a, b]. Catalog kinds take no parameters.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub centerline_params: Vec<f64>,
    /// Only configurable for `helix`; other kinds carry their own domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_interval: Option<[f64; 2]>,
    /// Catalog kind, `custom` (with `section_expr`), or a parameterized
    /// kind below.
    pub section: String,
    /// `circular`: [r0]; `superellipse`: [gamma]; `sine`: [amplitude, k].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub section_params: Vec<f64>,
    /// R(θ, ω) expression for `section = "custom"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section_expr: Option<String>,
    /// Defaults to periodic for closed centerlines, Dirichlet otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryKind>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Periodic,
    Dirichlet,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Built-in manufactured case: `torus` or `helical`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    /// λ(θ, ω) expression; defaults to the case's λ, else 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    /// Source f(θ, ω) expression for direct solves without an exact solution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// Exact-solution expression; enables error reporting and convergence
    /// studies through symbolic differentiation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Target spacing; overrides m/n via M = round(2π/h), N = round(|I_ω|/h).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Spacing list for `convergence` and `regularity`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub h_list: Vec<f64>,
    /// Superellipse exponents for `regularity`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma_list: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    pub tol: f64,
    pub restart: usize,
    pub max_iterations: usize,
    pub direct_max_unknowns: usize,
    pub sh_denominator: ShDenominator,
    pub near_boundary: GhostPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let solver = SolverOptions::default();
        let scheme = SchemeOptions::default();
        SolverConfig {
            method: solver.method,
            tol: solver.tol,
            restart: solver.restart,
            max_iterations: solver.max_iterations,
            direct_max_unknowns: solver.direct_max_unknowns,
            sh_denominator: scheme.sh_denominator,
            near_boundary: scheme.ghost,
        }
    }
}

impl SolverConfig {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            method: self.method,
            tol: self.tol,
            restart: self.restart,
            max_iterations: self.max_iterations,
            direct_max_unknowns: self.direct_max_unknowns,
        }
    }

    pub fn scheme_options(&self) -> SchemeOptions {
        SchemeOptions {
            ghost: self.near_boundary,
            sh_denominator: self.sh_denominator,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub out_dir: PathBuf,
    pub formats: Vec<FileFormat>,
    /// Write primary data to stdout instead of files.
    pub stdout: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            out_dir: PathBuf::from("out"),
            formats: vec![FileFormat::Csv],
            stdout: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    Obj,
    Vtk,
    Csv,
    Json,
}

impl std::str::FromStr for FileFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "obj" => Ok(FileFormat::Obj),
            "vtk" => Ok(FileFormat::Vtk),
            "csv" => Ok(FileFormat::Csv),
            "json" => Ok(FileFormat::Json),
            other => Err(CliError::Config(format!(
                "unknown format `{other}` (expected obj, vtk, csv, or json)"
            ))),
        }
    }
}

impl RunConfig {
    /// Parses and validates a TOML document.
    ///
    /// # Errors
    ///
    /// `CliError::Config` on malformed TOML or violated invariants.
    pub fn from_toml(text: &str) -> Result<RunConfig, CliError> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("validated config serializes")
    }

    /// Checks the documented invariants: referenced kinds exist, grid sizes
    /// are at least 8, tolerance lies in (0, 1e-2].
    ///
    /// # Errors
    ///
    /// `CliError::Config` describing the first violation.
    pub fn validate(&self) -> Result<(), CliError> {
        self.build_pipe()?;
        for (name, size) in [("m", self.grid.m), ("n", self.grid.n)] {
            if let Some(size) = size {
                if size < 8 {
                    return Err(CliError::Config(format!(
                        "grid size {name} = {size} is below the minimum of 8"
                    )));
                }
            }
        }
        if let Some(h) = self.grid.h {
            if !(h > 0.0) {
                return Err(CliError::Config(format!("grid spacing h = {h} must be positive")));
            }
        }
        if self.grid.h_list.iter().any(|&h| !(h > 0.0)) {
            return Err(CliError::Config("h_list entries must be positive".into()));
        }
        if self.grid.gamma_list.iter().any(|&g| !(g > 0.0)) {
            return Err(CliError::Config("gamma_list entries must be positive".into()));
        }
        let tol = self.solver.tol;
        if !(tol > 0.0 && tol <= 1e-2) {
            return Err(CliError::Config(format!(
                "solver tol = {tol} must lie in (0, 1e-2]"
            )));
        }
        if self.solver.restart == 0 || self.solver.max_iterations == 0 {
            return Err(CliError::Config(
                "solver restart and max_iterations must be at least 1".into(),
            ));
        }
        if let Some(case) = &self.problem.case {
            if case != "torus" && case != "helical" {
                return Err(CliError::Config(format!(
                    "unknown manufactured case `{case}` (expected torus or helical)"
                )));
            }
        }
        for expr_src in [&self.problem.lambda, &self.problem.source, &self.problem.exact]
            .into_iter()
            .flatten()
        {
            expr::parse(expr_src)?;
        }
        if let Some(src) = &self.geometry.section_expr {
            expr::parse(src)?;
        }
        Ok(())
    }

    /// Builds the configured pipe.
    ///
    /// # Errors
    ///
    /// `CliError::Config` for unknown kinds, bad parameters, or an
    /// inconsistent boundary mode.
    pub fn build_pipe(&self) -> Result<PipeGeometry, CliError> {
        let g = &self.geometry;
        let centerline = match (g.centerline.as_str(), g.centerline_params.as_slice()) {
            ("circle", [a]) => circle(*a)?,
            ("helix", params) => {
                let (a, b) = match params {
                    [] => (2.0, 1.0),
                    [a, b] => (*a, *b),
                    other => {
                        return Err(CliError::Config(format!(
                            "helix takes [a, b], got {} parameters",
                            other.len()
                        )))
                    }
                };
                let domain = g
                    .omega_interval
                    .map_or((0.0, 2.0 * std::f64::consts::PI), |[lo, hi]| (lo, hi));
                helix(a, b, domain)?
            }
            (kind, []) => catalog_centerline(kind)?,
            (kind, params) => {
                return Err(CliError::Config(format!(
                    "centerline `{kind}` takes no parameters, got {}",
                    params.len()
                )))
            }
        };
        if g.centerline.as_str() != "helix" && g.omega_interval.is_some() {
            return Err(CliError::Config(
                "omega_interval is only configurable for the helix centerline".into(),
            ));
        }

        let section = self.build_section()?;

        let boundary = match g.boundary {
            Some(BoundaryKind::Periodic) => {
                if !centerline.closed() {
                    return Err(CliError::Config(format!(
                        "periodic boundary needs a closed centerline; `{}` is open",
                        g.centerline
                    )));
                }
                BoundaryMode::PeriodicOmega
            }
            Some(BoundaryKind::Dirichlet) => BoundaryMode::DirichletOmega,
            None => {
                if centerline.closed() {
                    BoundaryMode::PeriodicOmega
                } else {
                    BoundaryMode::DirichletOmega
                }
            }
        };

        Ok(PipeGeometry::new(centerline, section, boundary)?)
    }

    fn build_section(&self) -> Result<CrossSection, CliError> {
        let g = &self.geometry;
        if g.section.as_str() == "custom" {
            let src = g.section_expr.as_deref().ok_or_else(|| {
                CliError::Config("section = \"custom\" needs section_expr".into())
            })?;
            return Ok(section_from_expr(src)?);
        }
        if g.section_expr.is_some() {
            return Err(CliError::Config(
                "section_expr is only used with section = \"custom\"".into(),
            ));
        }
        Ok(match (g.section.as_str(), g.section_params.as_slice()) {
            ("circular", [r0]) => circular(*r0)?,
            ("superellipse", [gamma]) => superellipse(*gamma)?,
            ("sine", [a, k]) => sine(*a, *k)?,
            (kind, []) => catalog_cross_section(kind, g.seed)?,
            (kind, params) => {
                return Err(CliError::Config(format!(
                    "section `{kind}` with {} parameters is not a recognized combination",
                    params.len()
                )))
            }
        })
    }
}

/// Cross-section from an R(θ, ω) expression; partials up to second order
/// come from structural differentiation.
fn section_from_expr(src: &str) -> Result<CrossSection, CliError> {
    let r = expr::parse(src)?;
    let rt = r.diff(Var::Theta)?;
    let rw = r.diff(Var::Omega)?;
    let rtt = rt.diff(Var::Theta)?;
    let rtw = rt.diff(Var::Omega)?;
    let rww = rw.diff(Var::Omega)?;
    Ok(custom_cross_section("custom", move |t, w| SectionJet {
        r: r.eval(t, w),
        rt: rt.eval(t, w),
        rw: rw.eval(t, w),
        rtt: rtt.eval(t, w),
        rtw: rtw.eval(t, w),
        rww: rww.eval(t, w),
    }))
}

impl ProblemConfig {
    /// The manufactured case this problem describes: a named built-in, or
    /// one synthesized from the `exact` expression.
    ///
    /// # Errors
    ///
    /// `CliError::Config` when expressions fail to parse or differentiate.
    pub fn manufactured_case(&self) -> Result<Option<ManufacturedCase>, CliError> {
        match self.case.as_deref() {
            Some("torus") => Ok(Some(torus_manufactured_case())),
            Some("helical") => Ok(Some(helical_manufactured_case())),
            Some(other) => Err(CliError::Config(format!(
                "unknown manufactured case `{other}` (expected torus or helical)"
            ))),
            None => match &self.exact {
                Some(src) => Ok(Some(self.case_from_exact(src)?)),
                None => Ok(None),
            },
        }
    }

    fn case_from_exact(&self, src: &str) -> Result<ManufacturedCase, CliError> {
        let u = expr::parse(src)?;
        let u_t = u.diff(Var::Theta)?;
        let u_w = u.diff(Var::Omega)?;
        let u_tt = u_t.diff(Var::Theta)?;
        let u_ww = u_w.diff(Var::Omega)?;
        let u_tw = u_t.diff(Var::Omega)?;
        let lambda = self.lambda_fn()?;
        let wrap = |e: crate::expr::Expr| -> Arc<dyn Fn(f64, f64) -> f64 + Send + Sync> {
            Arc::new(move |t, w| e.eval(t, w))
        };
        Ok(ManufacturedCase {
            name: "custom".into(),
            u: wrap(u),
            u_t: wrap(u_t),
            u_w: wrap(u_w),
            u_tt: wrap(u_tt),
            u_ww: wrap(u_ww),
            u_tw: wrap(u_tw),
            lambda,
        })
    }

    /// λ as a function: the named case's λ when set, else the `lambda`
    /// expression, else 0.
    ///
    /// # Errors
    ///
    /// `CliError::Config` on a malformed expression.
    pub fn lambda_fn(&self) -> Result<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>, CliError> {
        if let Some(case) = self.case.as_deref() {
            let case = match case {
                "torus" => torus_manufactured_case(),
                "helical" => helical_manufactured_case(),
                other => {
                    return Err(CliError::Config(format!(
                        "unknown manufactured case `{other}`"
                    )))
                }
            };
            return Ok(case.lambda);
        }
        match &self.lambda {
            Some(src) => Ok(expr::compiled(src)?),
            None => Ok(Arc::new(|_, _| 0.0)),
        }
    }

    /// The direct source term, when one is configured.
    ///
    /// # Errors
    ///
    /// `CliError::Config` on a malformed expression.
    pub fn source_fn(&self) -> Result<Option<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>>, CliError> {
        match &self.source {
            Some(src) => Ok(Some(expr::compiled(src)?)),
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn minimal(centerline: &str, section: &str) -> String {
        format!("[geometry]\ncenterline = \"{centerline}\"\nsection = \"{section}\"\n")
    }

    #[test]
    fn defaults_fill_every_section() {
        let config = RunConfig::from_toml(&minimal("circle", "circular")).unwrap();
        assert_eq!(config.solver.tol, 1e-12);
        assert_eq!(config.output.formats, vec![FileFormat::Csv]);
        assert!(!config.output.stdout);
        assert_eq!(config.geometry.seed, 1);
        let pipe = config.build_pipe().unwrap();
        assert_eq!(pipe.boundary_mode(), BoundaryMode::PeriodicOmega);
    }

    #[test]
    fn invariant_violations_are_rejected() {
        let bad_kind = minimal("klein_bottle", "circular");
        assert!(matches!(
            RunConfig::from_toml(&bad_kind),
            Err(CliError::Config(_))
        ));

        let small_grid = format!("{}\n[grid]\nm = 4\n", minimal("circle", "circular"));
        assert!(RunConfig::from_toml(&small_grid).is_err());

        let bad_tol = format!("{}\n[solver]\ntol = 0.5\n", minimal("circle", "circular"));
        assert!(RunConfig::from_toml(&bad_tol).is_err());

        let open_periodic = format!(
            "{}boundary = \"periodic\"\n",
            minimal("rounded_v", "circular")
        );
        assert!(RunConfig::from_toml(&open_periodic).is_err());

        let stray_interval = format!(
            "{}omega_interval = [0.0, 1.0]\n",
            minimal("circle", "circular")
        );
        assert!(RunConfig::from_toml(&stray_interval).is_err());

        let unknown_field = format!("{}\n[grid]\nq = 3\n", minimal("circle", "circular"));
        assert!(RunConfig::from_toml(&unknown_field).is_err());
    }

    #[test]
    fn helix_takes_parameters_and_interval() {
        let text = "
[geometry]
centerline = \"helix\"
centerline_params = [8.0, 1.0]
omega_interval = [0.0, 4.0]
section = \"star\"
";
        let config = RunConfig::from_toml(text).unwrap();
        let pipe = config.build_pipe().unwrap();
        assert_eq!(pipe.boundary_mode(), BoundaryMode::DirichletOmega);
        assert_eq!(pipe.centerline().domain(), (0.0, 4.0));
        assert_eq!(pipe.centerline().helix_params(), Some((8.0, 1.0)));
    }

    #[test]
    fn custom_section_expression_matches_its_catalog_twin() {
        let text = "
[geometry]
centerline = \"circle\"
section = \"custom\"
section_expr = \"2/5 - sin(theta)/3\"
";
        let config = RunConfig::from_toml(text).unwrap();
        let pipe = config.build_pipe().unwrap();
        let twin = catalog_cross_section("cardioid", 1).unwrap();
        for k in 0..20 {
            let t = 0.37 + 0.31 * k as f64;
            let jet = pipe.cross_section().eval(t, 0.0);
            let expect = twin.eval(t, 0.0);
            assert!((jet.r - expect.r).abs() < 1e-12);
            assert!((jet.rt - expect.rt).abs() < 1e-12);
            assert!((jet.rtt - expect.rtt).abs() < 1e-12);
        }
    }

    #[test]
    fn named_cases_supply_lambda_and_custom_exact_builds_partials() {
        let problem = ProblemConfig {
            case: Some("torus".into()),
            ..ProblemConfig::default()
        };
        let lambda = problem.lambda_fn().unwrap();
        assert!((lambda(0.5, 0.25) - 0.5f64.sin() * 0.25f64.sin()).abs() < 1e-15);

        let problem = ProblemConfig {
            exact: Some("sin(2*theta)*cos(omega)".into()),
            lambda: Some("1".into()),
            ..ProblemConfig::default()
        };
        let case = problem.manufactured_case().unwrap().unwrap();
        let (t, w) = (0.4, 1.9);
        assert!(((case.u_tw)(t, w) - (-2.0 * (2.0 * t).cos() * w.sin())).abs() < 1e-12);
        assert!(((case.lambda)(t, w) - 1.0).abs() < 1e-15);
    }

    prop_compose! {
        fn arb_config()(
            centerline in prop::sample::select(vec!["circle", "ellipse", "squircle", "helix"]),
            section in prop::sample::select(vec!["circular", "cardioid", "star", "sine", "random"]),
            seed in 1u64..1000,
            m in prop::option::of(8usize..200),
            h_list in prop::collection::vec(0.01f64..0.5, 0..3),
            tol in prop::sample::select(vec![1e-12, 1e-10, 1e-8]),
            method in prop::sample::select(vec![Method::Auto, Method::DirectLu, Method::Gmres]),
            stdout in any::<bool>(),
            formats in prop::collection::vec(
                prop::sample::select(vec![
                    FileFormat::Obj, FileFormat::Vtk, FileFormat::Csv, FileFormat::Json
                ]),
                1..3,
            ),
        ) -> RunConfig {
            RunConfig {
                geometry: GeometryConfig {
                    centerline: centerline.to_string(),
                    centerline_params: Vec::new(),
                    omega_interval: None,
                    section: section.to_string(),
                    section_params: Vec::new(),
                    section_expr: None,
                    boundary: None,
                    seed,
                },
                problem: ProblemConfig {
                    case: Some("torus".into()),
                    ..ProblemConfig::default()
                },
                grid: GridConfig { m, n: m, h: None, h_list, gamma_list: Vec::new() },
                solver: SolverConfig { tol, method, ..SolverConfig::default() },
                output: OutputConfig {
                    out_dir: PathBuf::from("out"),
                    formats,
                    stdout,
                },
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip_preserves_the_config(config in arb_config()) {
            let text = config.to_toml();
            let back: RunConfig = toml::from_str(&text).unwrap();
            prop_assert_eq!(back, config);
        }
    }
}

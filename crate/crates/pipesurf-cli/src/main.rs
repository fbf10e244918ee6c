//! Command-line front end: configuration-driven geometry export, single
//! solves, convergence tables, and the regularity sweep.
//!
//! Diagnostics go to stderr. Primary data goes to files under the output
//! directory, or to stdout with `--stdout`. Exit codes: 1 configuration or
//! IO error, 2 geometry validity failure, 3 solver breakdown.

mod config;
mod error;
mod expr;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;

use pipesurf::discrete::Grid;
use pipesurf::fields::build_coefficients;
use pipesurf::geometry::{
    export_mesh, export_mesh_with_scalar, validate_geometry, MeshFormat, PipeGeometry,
};
use pipesurf::harness::{grid_for_spacing, regularity_sweep, run_case, solve_manufactured,
    ConvergenceReport};
use pipesurf::solver::{assemble, solve, SolveStats};

use crate::config::{FileFormat, RunConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "pipesurf",
    version,
    about = "Fourth-order compact solver for screened Poisson problems on pipe surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format override (obj, vtk, csv, json); repeatable.
    #[arg(long, global = true)]
    format: Vec<FileFormat>,
    /// Seed override for randomized catalog sections.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for assembly (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print primary data to stdout instead of files.
    #[arg(long, global = true)]
    stdout: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Export the surface mesh and print the validity report.
    Geometry,
    /// Solve one problem and write the solution fields.
    Solve,
    /// Run the manufactured-solution error table over grid.h_list.
    Convergence,
    /// Run the superellipse regularity sweep over grid.gamma_list.
    Regularity,
    /// Print the annotated default configuration.
    ExplainConfig,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        // Best effort: re-initializing in one process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    if matches!(cli.command, Command::ExplainConfig) {
        print!("{CONFIG_TEMPLATE}");
        return Ok(());
    }
    let path = cli.config.as_ref().ok_or_else(|| {
        CliError::Config("a configuration file is required (--config PATH)".into())
    })?;
    let text = fs::read_to_string(path)?;
    let mut config = RunConfig::from_toml(&text)?;
    apply_overrides(&mut config, &cli);
    match cli.command {
        Command::Geometry => cmd_geometry(&config),
        Command::Solve => cmd_solve(&config),
        Command::Convergence => cmd_convergence(&config),
        Command::Regularity => cmd_regularity(&config),
        Command::ExplainConfig => unreachable!("handled before config loading"),
    }
}

fn apply_overrides(config: &mut RunConfig, cli: &Cli) {
    if let Some(seed) = cli.seed {
        config.geometry.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.out_dir.clone_from(out);
    }
    if !cli.format.is_empty() {
        config.output.formats.clone_from(&cli.format);
    }
    if cli.stdout {
        config.output.stdout = true;
    }
}

fn cmd_geometry(config: &RunConfig) -> Result<(), CliError> {
    let pipe = config.build_pipe()?;
    let report = validate_geometry(&pipe, 256, 256);
    eprintln!("{}", report.summary());
    if !report.passed() {
        let failing = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(CliError::Validity(failing));
    }
    let m = config.grid.m.unwrap_or(64);
    let n = config.grid.n.unwrap_or(m);
    let mesh_formats: Vec<MeshFormat> = config
        .output
        .formats
        .iter()
        .filter_map(|f| match f {
            FileFormat::Obj => Some(MeshFormat::Obj),
            FileFormat::Vtk => Some(MeshFormat::Vtk),
            _ => None,
        })
        .collect();
    let mesh_formats = if mesh_formats.is_empty() {
        vec![MeshFormat::Obj]
    } else {
        mesh_formats
    };
    if config.output.stdout {
        let mut buf = Vec::new();
        export_mesh(&pipe, m, n, mesh_formats[0], &mut buf)?;
        io::stdout().write_all(&buf)?;
        return Ok(());
    }
    fs::create_dir_all(&config.output.out_dir)?;
    for format in mesh_formats {
        let ext = match format {
            MeshFormat::Obj => "obj",
            MeshFormat::Vtk => "vtk",
        };
        let path = config.output.out_dir.join(format!("pipe.{ext}"));
        write_with(&path, |out| export_mesh(&pipe, m, n, format, out))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

/// Everything one solve reports besides the field itself.
#[derive(Serialize)]
struct SolveSummary {
    m: usize,
    n: usize,
    h_theta: f64,
    h_omega: f64,
    error: Option<f64>,
    stats: SolveStats,
}

fn cmd_solve(config: &RunConfig) -> Result<(), CliError> {
    let pipe = config.build_pipe()?;
    let grid = solve_grid(config, &pipe)?;
    let scheme = config.solver.scheme_options();
    let solver = config.solver.solver_options();

    let (u, error, stats) = match config.problem.manufactured_case()? {
        Some(case) => {
            let (u, e, stats) = solve_manufactured(&pipe, &case, grid, scheme, &solver)?;
            (u, Some(e), stats)
        }
        None => {
            let lambda = config.problem.lambda_fn()?;
            let source = config
                .problem
                .source_fn()?
                .unwrap_or_else(|| Arc::new(|_, _| 0.0));
            let coeffs = build_coefficients(&pipe, grid, &|t, w| lambda(t, w))?;
            let system = assemble(&coeffs, scheme, &|t, w| source(t, w))?;
            let (u, stats) = solve(&system, &solver)?;
            (u, None, stats)
        }
    };

    eprintln!(
        "grid {} x {}; method {:?}; iterations {}; residual {:.3e}",
        grid.m(),
        grid.n(),
        stats.method,
        stats.iterations,
        stats.residual
    );
    if let Some(e) = error {
        eprintln!("discrete H1 error E = {e:.6e}");
    }

    if config.output.stdout {
        print!("{}", u.to_csv());
        return Ok(());
    }
    fs::create_dir_all(&config.output.out_dir)?;
    let summary = SolveSummary {
        m: grid.m(),
        n: grid.n(),
        h_theta: grid.h_theta(),
        h_omega: grid.h_omega(),
        error,
        stats,
    };
    for format in &config.output.formats {
        let path = match format {
            FileFormat::Csv => {
                let path = config.output.out_dir.join("solution.csv");
                fs::write(&path, u.to_csv())?;
                path
            }
            FileFormat::Json => {
                let path = config.output.out_dir.join("solve.json");
                let text = serde_json::to_string_pretty(&summary)
                    .expect("solve summary serializes");
                fs::write(&path, text)?;
                path
            }
            FileFormat::Vtk => {
                let path = config.output.out_dir.join("solution.vtk");
                write_with(&path, |out| {
                    export_mesh_with_scalar(
                        &pipe,
                        grid.m(),
                        grid.n(),
                        MeshFormat::Vtk,
                        "u",
                        &|i, j| u.get(i as isize, j as isize),
                        out,
                    )
                })?;
                path
            }
            FileFormat::Obj => {
                let path = config.output.out_dir.join("pipe.obj");
                write_with(&path, |out| {
                    export_mesh(&pipe, grid.m(), grid.n(), MeshFormat::Obj, out)
                })?;
                path
            }
        };
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_convergence(config: &RunConfig) -> Result<(), CliError> {
    if config.grid.h_list.is_empty() {
        return Err(CliError::Config("convergence needs grid.h_list".into()));
    }
    let case = config.problem.manufactured_case()?.ok_or_else(|| {
        CliError::Config("convergence needs problem.case or problem.exact".into())
    })?;
    let pipe = config.build_pipe()?;
    let report = run_case(
        &pipe,
        &case,
        &config.grid.h_list,
        config.solver.scheme_options(),
        &config.solver.solver_options(),
    );
    eprintln!("{}", report.to_text());
    emit_report(config, &report, "convergence")?;
    if report.rows.is_empty() {
        return Err(CliError::Validity(format!(
            "every grid in the study failed; first: {}",
            report.failed[0].message
        )));
    }
    Ok(())
}

fn cmd_regularity(config: &RunConfig) -> Result<(), CliError> {
    if config.grid.gamma_list.is_empty() || config.grid.h_list.is_empty() {
        return Err(CliError::Config(
            "regularity needs grid.gamma_list and grid.h_list".into(),
        ));
    }
    let reports = regularity_sweep(
        &config.grid.gamma_list,
        &config.grid.h_list,
        config.solver.scheme_options(),
        &config.solver.solver_options(),
    )?;
    let mut any_row = false;
    for (gamma, report) in config.grid.gamma_list.iter().zip(&reports) {
        eprintln!("{}", report.to_text());
        emit_report(config, report, &format!("regularity_gamma_{gamma}"))?;
        any_row = any_row || !report.rows.is_empty();
    }
    let rates: Vec<String> = config
        .grid
        .gamma_list
        .iter()
        .zip(&reports)
        .map(|(g, r)| match r.final_rate() {
            Some(rate) => format!("gamma {g}: final rate {rate:.2}"),
            None => format!("gamma {g}: no rate"),
        })
        .collect();
    eprintln!("{}", rates.join("\n"));
    if !any_row {
        return Err(CliError::Validity(
            "every grid in the regularity sweep failed".into(),
        ));
    }
    Ok(())
}

/// Writes the report in each configured tabular format (CSV when none is).
fn emit_report(
    config: &RunConfig,
    report: &ConvergenceReport,
    stem: &str,
) -> Result<(), CliError> {
    let mut formats: Vec<FileFormat> = config
        .output
        .formats
        .iter()
        .copied()
        .filter(|f| matches!(f, FileFormat::Csv | FileFormat::Json))
        .collect();
    if formats.is_empty() {
        formats.push(FileFormat::Csv);
    }
    if config.output.stdout {
        match formats[0] {
            FileFormat::Json => print!("{}", report.to_json()?),
            _ => print!("{}", report.to_csv()),
        }
        return Ok(());
    }
    fs::create_dir_all(&config.output.out_dir)?;
    for format in formats {
        let (ext, text) = match format {
            FileFormat::Json => ("json", report.to_json()?),
            _ => ("csv", report.to_csv()),
        };
        let path = config.output.out_dir.join(format!("{stem}.{ext}"));
        fs::write(&path, text)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn solve_grid(config: &RunConfig, pipe: &PipeGeometry) -> Result<Grid, CliError> {
    if let Some(h) = config.grid.h {
        return Ok(grid_for_spacing(pipe, h)?);
    }
    let m = config
        .grid
        .m
        .ok_or_else(|| CliError::Config("grid needs m (and optionally n), or h".into()))?;
    let n = config.grid.n.unwrap_or(m);
    let (lo, hi) = pipe.centerline().domain();
    Ok(Grid::new(m, n, (lo, hi), pipe.boundary_mode())?)
}

fn write_with(
    path: &Path,
    emit: impl FnOnce(&mut dyn Write) -> pipesurf::Result<()>,
) -> Result<(), CliError> {
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    emit(&mut out)?;
    out.flush()?;
    Ok(())
}

const CONFIG_TEMPLATE: &str = r#"# Run configuration. Every field below shows its default; fields marked
# (required) have none. Unknown keys are rejected.

[geometry]
# Centerline kind (required). Catalog kinds: circle, ellipse, squircle,
# curved_triangle, rounded_l, rounded_v, cylindrical_helix, conical_helix.
# `circle` and `helix` also accept explicit parameters.
centerline = "circle"
# circle: [a] (radius, catalog default 2). helix: [a, b] (default [2, 1]).
# Catalog kinds take no parameters.
#centerline_params = [2.0]
# Only for `helix`; default [0, 2pi]. Other kinds fix their own domain.
#omega_interval = [0.0, 6.283185307179586]
# Cross-section kind (required). Catalog kinds: circular, cardioid,
# butterfly, star, sine, random, superellipse. Parameterized forms:
# circular [r0], superellipse [gamma], sine [amplitude, k]. `custom`
# takes an R(theta, omega) expression in `section_expr`.
section = "circular"
#section_params = [0.5]
# Expression grammar: + - * / ^, sin, cos, exp, abs, theta, omega, pi.
#section_expr = "2/5 - sin(theta)/3"
# periodic | dirichlet; defaults to periodic for closed centerlines,
# dirichlet for open ones.
#boundary = "periodic"
# Seed for the `random` cross-section.
seed = 1

[problem]
# Built-in manufactured case: "torus" (doubly periodic) or "helical"
# (Dirichlet). Supplies u_exact, lambda, and the source term.
#case = "torus"
# lambda(theta, omega) expression; default 0 (ignored when case is set).
#lambda = "sin(theta)*sin(omega)"
# Source f(theta, omega) expression for direct solves; default 0.
#source = "0"
# Exact-solution expression; partial derivatives come from structural
# differentiation, enabling error reports without a built-in case.
#exact = "sin(2*theta)*cos(2*omega)"

[grid]
# Node counts; n defaults to m. Minimum 8 each.
#m = 64
#n = 64
# Target spacing, overriding m/n: M = round(2pi/h), N = round(|I_omega|/h).
#h = 0.0166
# Spacing list for `convergence` and `regularity`.
#h_list = [0.0166, 0.0143, 0.0125]
# Superellipse exponents for `regularity`.
#gamma_list = [0.5, 1.0, 1.5, 2.0, 4.0]

[solver]
# auto | direct_lu | gmres. auto picks direct LU up to
# direct_max_unknowns unknowns, then restarted GMRES with ILU(0).
method = "auto"
# Relative-residual target in (0, 1e-2].
tol = 1e-12
restart = 50
max_iterations = 40000
direct_max_unknowns = 80000
# Stabilizer denominator: pointwise | global (the global minimum).
sh_denominator = "pointwise"
# Reads past the Dirichlet boundary: zero_extension | drop_correction.
near_boundary = "zero_extension"

[output]
out_dir = "out"
# Any of: obj, vtk, csv, json. geometry uses obj/vtk; solve uses all
# four; convergence and regularity use csv/json.
formats = ["csv"]
# Print primary data to stdout instead of files (also --stdout).
stdout = false
"#;

//! Manufactured-solution convergence studies and the cross-section
//! regularity sweep.
//!
//! A study runs the full pipeline per grid size: coefficient evaluation,
//! assembly, linear solve, and the discrete H¹ error against the sampled
//! exact solution. Target spacings map to integer grid sizes by
//! M = round(2π/h), N = round(|I_ω|/h); each row reports the realized
//! h = max(hθ, hω).

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::compact::SchemeOptions;
use crate::discrete::{norm, norm_h1, Grid, GridFunction, Staggering};
use crate::fields::{build_coefficients, manufactured_rhs, ManufacturedCase};
use crate::geometry::{
    catalog_cross_section, circle, helix, superellipse, BoundaryMode, PipeGeometry,
};
use crate::solver::{assemble, smallest_symmetric_eigenvalue, solve, SolveStats, SolverOptions};
use crate::{Error, Result};

/// One grid of a convergence study.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    /// Realized spacing max(hθ, hω).
    pub h: f64,
    pub m: usize,
    pub n: usize,
    /// Discrete H¹ error against the sampled exact solution.
    pub error: f64,
    /// Observed order against the previous row; `None` on the first row.
    pub rate: Option<f64>,
    pub stats: SolveStats,
}

/// A grid that failed to solve, kept alongside the successful rows.
#[derive(Debug, Clone, Serialize)]
pub struct FailedRow {
    pub h: f64,
    pub message: String,
}

/// Error table of one case over a spacing list.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub case: String,
    pub rows: Vec<ConvergenceRow>,
    pub failed: Vec<FailedRow>,
}

/// Observed order of accuracy between two refinement levels.
///
/// # Errors
///
/// `DomainError` on nonpositive inputs or equal spacings.
pub fn rate(e1: f64, h1: f64, e2: f64, h2: f64) -> Result<f64> {
    if !(e1 > 0.0) || !(e2 > 0.0) || !(h1 > 0.0) || !(h2 > 0.0) {
        return Err(Error::DomainError(format!(
            "rate needs positive errors and spacings, got ({e1}, {h1}, {e2}, {h2})"
        )));
    }
    if h1 == h2 {
        return Err(Error::DomainError("rate needs two distinct spacings".into()));
    }
    Ok((e1 / e2).ln() / (h1 / h2).ln())
}

impl ConvergenceReport {
    /// Comma-separated table, one line per successful row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,m,n,error,rate,method,iterations,residual,projected\n");
        for row in &self.rows {
            let rate = row.rate.map_or(String::new(), |r| format!("{r:.4}"));
            let _ = writeln!(
                s,
                "{:.10e},{},{},{:.10e},{},{:?},{},{:.3e},{}",
                row.h,
                row.m,
                row.n,
                row.error,
                rate,
                row.stats.method,
                row.stats.iterations,
                row.stats.residual,
                row.stats.projected_constant,
            );
        }
        s
    }

    /// Aligned human-readable table.
    pub fn to_text(&self) -> String {
        let mut s = format!("case: {}\n", self.case);
        s.push_str("        h        M      N        error     rate\n");
        for row in &self.rows {
            let rate = row.rate.map_or("    --".to_string(), |r| format!("{r:6.2}"));
            let _ = writeln!(
                s,
                "{:12.6e} {:6} {:6} {:12.4e}  {}",
                row.h, row.m, row.n, row.error, rate
            );
        }
        for f in &self.failed {
            let _ = writeln!(s, "{:12.6e}  failed: {}", f.h, f.message);
        }
        s
    }

    /// Serialized report.
    ///
    /// # Errors
    ///
    /// `DomainError` when serialization fails (non-finite values).
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::DomainError(format!("report not serializable: {e}")))
    }

    /// Final observed rate, when at least two rows succeeded.
    pub fn final_rate(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.rate)
    }
}

/// The doubly periodic reference problem: unit-ish torus ring with
/// u = sin 2θ cos 2ω and λ = sin θ sin ω.
pub fn torus_manufactured_case() -> ManufacturedCase {
    ManufacturedCase {
        name: "torus".into(),
        u: Arc::new(|t, w| (2.0 * t).sin() * (2.0 * w).cos()),
        u_t: Arc::new(|t, w| 2.0 * (2.0 * t).cos() * (2.0 * w).cos()),
        u_w: Arc::new(|t, w| -2.0 * (2.0 * t).sin() * (2.0 * w).sin()),
        u_tt: Arc::new(|t, w| -4.0 * (2.0 * t).sin() * (2.0 * w).cos()),
        u_ww: Arc::new(|t, w| -4.0 * (2.0 * t).sin() * (2.0 * w).cos()),
        u_tw: Arc::new(|t, w| -4.0 * (2.0 * t).cos() * (2.0 * w).sin()),
        lambda: Arc::new(|t, w| t.sin() * w.sin()),
    }
}

/// The Dirichlet reference problem on ω ∈ (0, 2π):
/// u = ω³(e^{−ω} − e^{−2π})³ e^{sin θ}, which vanishes to third order at
/// both ω ends, with λ = sin θ sin ω.
pub fn helical_manufactured_case() -> ManufacturedCase {
    let tau = 2.0 * std::f64::consts::PI;
    let e = move |w: f64| (-w).exp() - (-tau).exp();
    let e1 = |w: f64| -(-w).exp();
    let e2 = |w: f64| (-w).exp();
    let wfun = move |w: f64| w.powi(3) * e(w).powi(3);
    let w1 = move |w: f64| 3.0 * w * w * e(w).powi(3) + 3.0 * w.powi(3) * e(w).powi(2) * e1(w);
    let w2 = move |w: f64| {
        6.0 * w * e(w).powi(3)
            + 18.0 * w * w * e(w).powi(2) * e1(w)
            + 6.0 * w.powi(3) * e(w) * e1(w).powi(2)
            + 3.0 * w.powi(3) * e(w).powi(2) * e2(w)
    };
    let tfun = |t: f64| t.sin().exp();
    let t1 = |t: f64| t.sin().exp() * t.cos();
    let t2 = |t: f64| t.sin().exp() * (t.cos() * t.cos() - t.sin());
    ManufacturedCase {
        name: "helical".into(),
        u: Arc::new(move |t, w| wfun(w) * tfun(t)),
        u_t: Arc::new(move |t, w| wfun(w) * t1(t)),
        u_w: Arc::new(move |t, w| w1(w) * tfun(t)),
        u_tt: Arc::new(move |t, w| wfun(w) * t2(t)),
        u_ww: Arc::new(move |t, w| w2(w) * tfun(t)),
        u_tw: Arc::new(move |t, w| w1(w) * t1(t)),
        lambda: Arc::new(|t, w| t.sin() * w.sin()),
    }
}

/// Torus ring of radius 2 with a catalog cross-section, periodic in ω.
///
/// # Errors
///
/// `UnknownKind` for sections outside the catalog.
pub fn torus_pipe(section: &str, seed: u64) -> Result<PipeGeometry> {
    PipeGeometry::new(
        circle(2.0)?,
        catalog_cross_section(section, seed)?,
        BoundaryMode::PeriodicOmega,
    )
}

/// Helix (a, b) = (2, 1) over ω ∈ (0, 2π) with a catalog cross-section,
/// Dirichlet in ω.
///
/// # Errors
///
/// `UnknownKind` for sections outside the catalog.
pub fn helical_pipe(section: &str, seed: u64) -> Result<PipeGeometry> {
    let tau = 2.0 * std::f64::consts::PI;
    PipeGeometry::new(
        helix(2.0, 1.0, (0.0, tau))?,
        catalog_cross_section(section, seed)?,
        BoundaryMode::DirichletOmega,
    )
}

/// Grid sizes for a target spacing on this pipe.
fn grid_for(pipe: &PipeGeometry, h: f64) -> Result<Grid> {
    let tau = 2.0 * std::f64::consts::PI;
    if !(h > 0.0) {
        return Err(Error::DomainError(format!("nonpositive spacing {h}")));
    }
    let (lo, hi) = pipe.centerline().domain();
    let m = (tau / h).round() as usize;
    let n = ((hi - lo) / h).round() as usize;
    if m < 8 || n < 8 {
        return Err(Error::DomainError(format!(
            "spacing {h} yields a grid below the 8-node minimum ({m} x {n})"
        )));
    }
    Grid::new(m, n, (lo, hi), pipe.boundary_mode())
}

/// Solves one manufactured problem on one grid and returns the realized
/// spacing, the discrete H¹ error, and the solver report.
///
/// # Errors
///
/// Propagates coefficient construction and solver failures.
pub fn solve_manufactured(
    pipe: &PipeGeometry,
    case: &ManufacturedCase,
    grid: Grid,
    solver: &SolverOptions,
) -> Result<(GridFunction, f64, SolveStats)> {
    let lambda = case.lambda.clone();
    let coeffs = build_coefficients(pipe, grid, &|t, w| lambda(t, w))?;
    let system = assemble(&coeffs, SchemeOptions::default(), &|t, w| {
        manufactured_rhs(pipe, case, t, w).expect("source evaluation on a validated pipe")
    })?;
    let (u_h, stats) = solve(&system, solver)?;
    let exact = case.sample_solution(grid);
    let mut diff = GridFunction::zeros(grid, Staggering::Node);
    for i in 0..grid.m() {
        for j in 0..u_h.rows() {
            diff.set(
                i,
                j,
                u_h.get(i as isize, j as isize) - exact.get(i as isize, j as isize),
            );
        }
    }
    diff.project_to_space();
    let error = norm_h1(&diff, None)?;
    Ok((u_h, error, stats))
}

/// Runs the manufactured case over a spacing list, producing the error
/// table. Rows that fail are recorded and the remaining spacings continue.
pub fn run_case(
    pipe: &PipeGeometry,
    case: &ManufacturedCase,
    h_list: &[f64],
    solver: &SolverOptions,
) -> ConvergenceReport {
    let mut report = ConvergenceReport {
        case: case.name.clone(),
        rows: Vec::new(),
        failed: Vec::new(),
    };
    for &h_target in h_list {
        let row = grid_for(pipe, h_target).and_then(|grid| {
            let (_, error, stats) = solve_manufactured(pipe, case, grid, solver)?;
            Ok((grid, error, stats))
        });
        match row {
            Ok((grid, error, stats)) => {
                let h = grid.h_theta().max(grid.h_omega());
                let prev = report.rows.last().map(|r: &ConvergenceRow| (r.error, r.h));
                let rate = prev.and_then(|(e1, h1)| rate(e1, h1, error, h).ok());
                report.rows.push(ConvergenceRow {
                    h,
                    m: grid.m(),
                    n: grid.n(),
                    error,
                    rate,
                    stats,
                });
            }
            Err(e) => report.failed.push(FailedRow {
                h: h_target,
                message: e.to_string(),
            }),
        }
    }
    report
}

/// Torus with the superellipse section of exponent γ, solved with the
/// periodic reference problem over `h_list`; one report per γ.
pub fn regularity_sweep(
    gammas: &[f64],
    h_list: &[f64],
    solver: &SolverOptions,
) -> Result<Vec<ConvergenceReport>> {
    let case = torus_manufactured_case();
    gammas
        .iter()
        .map(|&gamma| {
            let pipe = PipeGeometry::new(
                circle(2.0)?,
                superellipse(gamma)?,
                BoundaryMode::PeriodicOmega,
            )?;
            let mut report = run_case(&pipe, &case, h_list, solver);
            report.case = format!("superellipse gamma={gamma}");
            Ok(report)
        })
        .collect()
}

/// Stability probe: ‖u_h‖_{h,1} / ‖g‖ per spacing, plus the smallest
/// eigenvalue of the symmetrized matrix on the coarsest grid.
///
/// # Errors
///
/// Propagates coefficient and solver failures.
pub fn stability_profile(
    pipe: &PipeGeometry,
    case: &ManufacturedCase,
    h_list: &[f64],
    solver: &SolverOptions,
) -> Result<Vec<f64>> {
    let mut ratios = Vec::new();
    for &h in h_list {
        let grid = grid_for(pipe, h)?;
        let lambda = case.lambda.clone();
        let coeffs = build_coefficients(pipe, grid, &|t, w| lambda(t, w))?;
        let system = assemble(&coeffs, SchemeOptions::default(), &|t, w| {
            manufactured_rhs(pipe, case, t, w).expect("source evaluation on a validated pipe")
        })?;
        let (u_h, _) = solve(&system, solver)?;
        let g = system.grid_function(system.rhs());
        let ratio = norm_h1(&u_h, None)? / norm(&g, None)?;
        ratios.push(ratio);
    }
    Ok(ratios)
}

/// Smallest symmetrized-system eigenvalue for the manufactured case at one
/// grid size (solvability surrogate).
///
/// # Errors
///
/// Propagates assembly failures; `SolverBreakdown` for singular systems.
pub fn symmetric_floor(pipe: &PipeGeometry, case: &ManufacturedCase, mn: usize) -> Result<f64> {
    let (lo, hi) = pipe.centerline().domain();
    let grid = Grid::new(mn, mn, (lo, hi), pipe.boundary_mode())?;
    let lambda = case.lambda.clone();
    let coeffs = build_coefficients(pipe, grid, &|t, w| lambda(t, w))?;
    let system = assemble(&coeffs, SchemeOptions::default(), &|_, _| 0.0)?;
    smallest_symmetric_eigenvalue(&system)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_matches_the_halving_conventions() {
        let eps = 1e-6;
        assert!((rate(16.0 * eps, 2.0, eps, 1.0).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(rate(eps, 2.0, eps, 1.0).unwrap(), 0.0);
        let table = rate(7.8e-5, 1.0 / 60.0, 4.2e-5, 1.0 / 70.0).unwrap();
        assert!((table - 4.0).abs() < 0.05, "{table}");
    }

    #[test]
    fn rate_rejects_degenerate_inputs() {
        assert!(matches!(
            rate(-1.0, 1.0, 1.0, 0.5),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(
            rate(1.0, 1.0, 0.0, 0.5),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(
            rate(1.0, 1.0, 1.0, 1.0),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn grid_mapping_rounds_to_the_documented_sizes() {
        let pipe = torus_pipe("circular", 1).unwrap();
        let grid = grid_for(&pipe, 1.0 / 60.0).unwrap();
        assert_eq!((grid.m(), grid.n()), (377, 377));
        let helical = helical_pipe("circular", 1).unwrap();
        let grid = grid_for(&helical, 1.0 / 80.0).unwrap();
        assert_eq!((grid.m(), grid.n()), (503, 503));
        assert!(grid_for(&pipe, 1.0).is_err());
    }

    #[test]
    fn coarse_torus_study_converges_at_fourth_order() {
        let pipe = torus_pipe("circular", 1).unwrap();
        let case = torus_manufactured_case();
        let tau = 2.0 * std::f64::consts::PI;
        let report = run_case(
            &pipe,
            &case,
            &[tau / 24.0, tau / 48.0],
            &SolverOptions::default(),
        );
        assert!(report.failed.is_empty());
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows[1].error < report.rows[0].error);
        let r = report.final_rate().unwrap();
        assert!((3.6..=4.4).contains(&r), "rate {r}");
    }

    #[test]
    fn report_rates_recompute_from_stored_errors() {
        let pipe = torus_pipe("circular", 1).unwrap();
        let case = torus_manufactured_case();
        let tau = 2.0 * std::f64::consts::PI;
        let report = run_case(
            &pipe,
            &case,
            &[tau / 16.0, tau / 24.0, tau / 32.0],
            &SolverOptions::default(),
        );
        for pair in report.rows.windows(2) {
            let expect = rate(pair[0].error, pair[0].h, pair[1].error, pair[1].h).unwrap();
            assert!((pair[1].rate.unwrap() - expect).abs() < 1e-10);
        }
        assert!(report.rows[0].rate.is_none());
    }

    #[test]
    fn failed_rows_are_recorded_and_the_study_continues() {
        let pipe = torus_pipe("circular", 1).unwrap();
        let case = torus_manufactured_case();
        let tau = 2.0 * std::f64::consts::PI;
        let report = run_case(
            &pipe,
            &case,
            &[100.0, tau / 16.0],
            &SolverOptions::default(),
        );
        assert_eq!(report.failed.len(), 1);
        assert_eq!(report.rows.len(), 1);
    }

    #[test]
    fn report_formats_carry_the_rows() {
        let pipe = torus_pipe("circular", 1).unwrap();
        let case = torus_manufactured_case();
        let tau = 2.0 * std::f64::consts::PI;
        let report = run_case(&pipe, &case, &[tau / 16.0, tau / 24.0], &SolverOptions::default());
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 1 + report.rows.len());
        assert!(csv.lines().nth(1).unwrap().split(',').count() == 9);
        let text = report.to_text();
        assert!(text.contains("case: torus"));
        let json = report.to_json().unwrap();
        assert!(json.contains("\"rows\""));
        assert!(json.contains("\"error\""));
    }
}

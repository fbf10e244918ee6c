use std::time::Instant;

use pipesurf::compact::SchemeOptions;
use pipesurf::fields::{build_coefficients, manufactured_rhs};
use pipesurf::harness::{
    helical_manufactured_case, helical_pipe, solve_manufactured, torus_manufactured_case,
    torus_pipe,
};
use pipesurf::solver::{assemble, solve, SolverOptions};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("torus");
    let h_inv: f64 = args
        .get(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(60.0);
    let h = 1.0 / h_inv;

    let (pipe, case) = if which == "torus" {
        (torus_pipe("circular", 1).unwrap(), torus_manufactured_case())
    } else {
        (
            helical_pipe("circular", 1).unwrap(),
            helical_manufactured_case(),
        )
    };

    let tau = 2.0 * std::f64::consts::PI;
    let (lo, hi) = pipe.centerline().domain();
    let m = (tau / h).round() as usize;
    let n = ((hi - lo) / h).round() as usize;
    let grid = pipesurf::discrete::Grid::new(m, n, (lo, hi), pipe.boundary_mode()).unwrap();
    eprintln!("{} h=1/{} -> M={} N={}", which, h_inv, m, n);

    let t0 = Instant::now();
    let lambda = case.lambda.clone();
    let coeffs = build_coefficients(&pipe, grid, &|t, w| lambda(t, w)).unwrap();
    eprintln!("coefficients: {:.2}s", t0.elapsed().as_secs_f64());

    let t0 = Instant::now();
    let system = assemble(&coeffs, SchemeOptions::default(), &|t, w| {
        manufactured_rhs(&pipe, &case, t, w).unwrap()
    })
    .unwrap();
    eprintln!(
        "assemble: {:.2}s  n={} nnz={}",
        t0.elapsed().as_secs_f64(),
        system.dimension(),
        system.matrix().nnz()
    );

    let t0 = Instant::now();
    let (_, err, stats) = solve_manufactured(&pipe, &case, grid, &SolverOptions::default()).unwrap();
    eprintln!(
        "full row: {:.2}s  E={:.3e}  method={:?} iters={} res={:.2e}",
        t0.elapsed().as_secs_f64(),
        err,
        stats.method,
        stats.iterations,
        stats.residual
    );
    let _ = solve;
}

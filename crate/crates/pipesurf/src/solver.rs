//! Sparse assembly of the scheme and the linear solvers behind it.
//!
//! Unknowns are grid nodes: all of them on periodic-ω grids, the interior
//! rows 1..N-1 on Dirichlet grids (boundary values are zero and the row
//! emitter folds them out). Node (i, j) maps to row (j - j_lo)·M + i, so a
//! matrix-vector product is bit-identical to the matrix-free application.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compact::{build_rhs, operator_row, SchemeOptions};
use crate::discrete::{Grid, GridFunction, Staggering};
use crate::fields::CoefficientFields;
use crate::{Error, Result};

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0usize);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.n)
            .map(|r| self.row_ptr[r + 1] - self.row_ptr[r])
            .max()
            .unwrap_or(0)
    }

    fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// y = A x.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            let mut s = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                s += v * x[*c];
            }
            y[r] = s;
        }
    }

    /// Replaces row `r` by the identity row (used to pin one unknown).
    fn with_unit_row(&self, r: usize) -> Csr {
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(self.n);
        for k in 0..self.n {
            if k == r {
                rows.push(vec![(r, 1.0)]);
            } else {
                let (cols, vals) = self.row(k);
                rows.push(cols.iter().copied().zip(vals.iter().copied()).collect());
            }
        }
        Csr::from_rows(self.n, rows)
    }

    /// (A + Aᵀ)/2 with the same storage conventions.
    fn symmetric_part(&self) -> Csr {
        // Build Aᵀ by counting scatter, then merge sorted rows.
        let mut count = vec![0usize; self.n];
        for &c in &self.cols {
            count[c] += 1;
        }
        let mut t_ptr = vec![0usize; self.n + 1];
        for r in 0..self.n {
            t_ptr[r + 1] = t_ptr[r] + count[r];
        }
        let mut t_cols = vec![0usize; self.nnz()];
        let mut t_vals = vec![0.0f64; self.nnz()];
        let mut cursor = t_ptr.clone();
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                let p = cursor[*c];
                t_cols[p] = r;
                t_vals[p] = *v;
                cursor[*c] += 1;
            }
        }
        // Transposed rows come out sorted because source rows are scanned in
        // ascending row order.
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(self.n);
        for r in 0..self.n {
            let (a_cols, a_vals) = self.row(r);
            let t_span = t_ptr[r]..t_ptr[r + 1];
            let (b_cols, b_vals) = (&t_cols[t_span.clone()], &t_vals[t_span]);
            let mut row = Vec::with_capacity(a_cols.len() + b_cols.len());
            let (mut ia, mut ib) = (0usize, 0usize);
            while ia < a_cols.len() || ib < b_cols.len() {
                let ca = a_cols.get(ia).copied().unwrap_or(usize::MAX);
                let cb = b_cols.get(ib).copied().unwrap_or(usize::MAX);
                if ca == cb {
                    row.push((ca, 0.5 * (a_vals[ia] + b_vals[ib])));
                    ia += 1;
                    ib += 1;
                } else if ca < cb {
                    row.push((ca, 0.5 * a_vals[ia]));
                    ia += 1;
                } else {
                    row.push((cb, 0.5 * b_vals[ib]));
                    ib += 1;
                }
            }
            rows.push(row);
        }
        Csr::from_rows(self.n, rows)
    }
}

/// The assembled discrete problem A u = g.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    grid: Grid,
    matrix: Csr,
    rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn matrix(&self) -> &Csr {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn dimension(&self) -> usize {
        self.matrix.n
    }

    fn j_lo(&self) -> usize {
        usize::from(!self.grid.periodic_omega())
    }

    fn unknown_rows(&self) -> usize {
        if self.grid.periodic_omega() {
            self.grid.n()
        } else {
            self.grid.n() - 1
        }
    }

    /// Row index of node (i, j); `None` for boundary (non-unknown) nodes.
    pub fn row_of(&self, i: usize, j: usize) -> Option<usize> {
        let j_lo = self.j_lo();
        if i >= self.grid.m() || j < j_lo || j >= j_lo + self.unknown_rows() {
            return None;
        }
        Some((j - j_lo) * self.grid.m() + i)
    }

    /// Node (i, j) owning row `r`.
    pub fn node_of(&self, r: usize) -> (usize, usize) {
        let m = self.grid.m();
        (r % m, self.j_lo() + r / m)
    }

    /// Flattens node data into the unknown ordering.
    ///
    /// # Errors
    ///
    /// `StaggeringMismatch` unless `u` lives on nodes.
    pub fn vector_from(&self, u: &GridFunction) -> Result<Vec<f64>> {
        if u.staggering() != Staggering::Node {
            return Err(Error::StaggeringMismatch {
                expected: Staggering::Node,
                got: u.staggering(),
            });
        }
        Ok((0..self.dimension())
            .map(|r| {
                let (i, j) = self.node_of(r);
                u.get(i as isize, j as isize)
            })
            .collect())
    }

    /// Expands an unknown vector back onto the grid (boundary rows zero).
    pub fn grid_function(&self, x: &[f64]) -> GridFunction {
        let mut u = GridFunction::zeros(self.grid, Staggering::Node);
        for (r, v) in x.iter().enumerate() {
            let (i, j) = self.node_of(r);
            u.set(i, j, *v);
        }
        u
    }

    /// MatrixMarket coordinate-format dump (1-based indices).
    pub fn to_matrix_market(&self) -> String {
        let n = self.dimension();
        let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
        s.push_str(&format!("{n} {n} {}\n", self.matrix.nnz()));
        for r in 0..n {
            let (cols, vals) = self.matrix.row(r);
            for (c, v) in cols.iter().zip(vals) {
                s.push_str(&format!("{} {} {v:.16e}\n", r + 1, c + 1));
            }
        }
        s
    }
}

/// Assembles the scheme matrix row by row through the stencil emitter and
/// composes the right-hand side from the source term.
///
/// # Errors
///
/// Currently infallible for coefficients that were built successfully; kept
/// fallible because geometry errors surface at coefficient construction.
pub fn assemble(
    c: &CoefficientFields,
    opts: SchemeOptions,
    f: &dyn Fn(f64, f64) -> f64,
) -> Result<LinearSystem> {
    let grid = c.grid;
    let m = grid.m();
    let j_lo = usize::from(!grid.periodic_omega());
    let unknown_rows = if grid.periodic_omega() { grid.n() } else { grid.n() - 1 };
    let n_unknowns = m * unknown_rows;

    let rows: Vec<Vec<(usize, f64)>> = (0..n_unknowns)
        .into_par_iter()
        .map_init(Vec::new, |scratch, r| {
            let (i, j) = (r % m, j_lo + r / m);
            operator_row(c, opts, i, j, scratch);
            let mut row: Vec<(usize, f64)> = scratch
                .iter()
                .map(|&(ci, cj, v)| ((cj - j_lo) * m + ci, v))
                .collect();
            row.sort_unstable_by_key(|e| e.0);
            row
        })
        .collect();

    let g = build_rhs(c, f);
    let rhs: Vec<f64> = (0..n_unknowns)
        .map(|r| {
            let (i, j) = (r % m, j_lo + r / m);
            g.get(i as isize, j as isize)
        })
        .collect();

    Ok(LinearSystem {
        grid,
        matrix: Csr::from_rows(n_unknowns, rows),
        rhs,
    })
}

/// Linear solver choice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Direct below `direct_max_unknowns`, Krylov above.
    #[default]
    Auto,
    DirectLu,
    Gmres,
}

/// Solver configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub method: Method,
    /// Relative residual target.
    pub tol: f64,
    /// Krylov restart length.
    pub restart: usize,
    /// Cap on total Krylov iterations.
    pub max_iterations: usize,
    /// Largest system the `Auto` method hands to the direct factorization.
    pub direct_max_unknowns: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: Method::Auto,
            tol: 1e-12,
            restart: 50,
            max_iterations: 40_000,
            direct_max_unknowns: 80_000,
        }
    }
}

/// Outcome report of one linear solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveStats {
    pub method: Method,
    /// Krylov iterations, or refinement rounds for the direct path.
    pub iterations: usize,
    /// Relative residual of the system actually solved (the pinned system
    /// when `projected_constant` is set).
    pub residual: f64,
    /// Nonzeros in the preconditioner when one was built.
    pub factor_nnz: Option<usize>,
    /// True when the constant direction was pinned out of a near-singular
    /// periodic system and the solution recentred to zero mean.
    pub projected_constant: bool,
}

/// Solves the assembled system to the requested tolerance.
///
/// Near-singular periodic systems (constant null direction, e.g. λ ≡ 0) are
/// retried with one unknown pinned and the result recentred to zero mean.
///
/// # Errors
///
/// `SolverBreakdown` when the factorization fails or the iteration stagnates
/// above tolerance.
pub fn solve(system: &LinearSystem, options: &SolverOptions) -> Result<(GridFunction, SolveStats)> {
    let n = system.dimension();
    let direct = match options.method {
        Method::DirectLu => true,
        Method::Gmres => false,
        Method::Auto => n <= options.direct_max_unknowns,
    };
    let method = if direct { Method::DirectLu } else { Method::Gmres };

    let b_norm = norm2(&system.rhs);
    if b_norm == 0.0 {
        let stats = SolveStats {
            method,
            iterations: 0,
            residual: 0.0,
            factor_nnz: None,
            projected_constant: false,
        };
        return Ok((system.grid_function(&vec![0.0; n]), stats));
    }

    // A periodic operator that annihilates constants is singular by
    // construction; pin up front instead of waiting for the factorization to
    // misbehave.
    if system.grid.periodic_omega() && constants_in_null_space(&system.matrix) {
        let (x, stats) = pinned_solve(system, direct, options)?;
        return Ok((system.grid_function(&x), with_method(stats, method)));
    }

    match solve_matrix(&system.matrix, &system.rhs, direct, options) {
        Ok((x, stats)) => Ok((system.grid_function(&x), with_method(stats, method))),
        Err(first_failure) => {
            if !system.grid.periodic_omega() {
                return Err(first_failure);
            }
            let (x, stats) = pinned_solve(system, direct, options).map_err(|e| {
                Error::SolverBreakdown(format!("{first_failure}; pinned retry also failed: {e}"))
            })?;
            Ok((system.grid_function(&x), with_method(stats, method)))
        }
    }
}

fn with_method(mut stats: SolveStats, method: Method) -> SolveStats {
    stats.method = method;
    stats
}

fn constants_in_null_space(a: &Csr) -> bool {
    let ones = vec![1.0; a.dimension()];
    let mut y = vec![0.0; a.dimension()];
    a.apply(&ones, &mut y);
    let worst = y.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    worst <= 1e-12 * a.max_abs().max(1.0)
}

/// Pins unknown 0 to remove the constant direction, solves, and recentres
/// the result to zero mean.
fn pinned_solve(
    system: &LinearSystem,
    direct: bool,
    options: &SolverOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    let pinned = system.matrix.with_unit_row(0);
    let mut rhs = system.rhs.clone();
    rhs[0] = 0.0;
    let (mut x, mut stats) = solve_matrix(&pinned, &rhs, direct, options)?;
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for v in &mut x {
        *v -= mean;
    }
    stats.projected_constant = true;
    Ok((x, stats))
}

fn solve_matrix(
    a: &Csr,
    b: &[f64],
    direct: bool,
    options: &SolverOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    if direct {
        direct_lu(a, b, options.tol)
    } else {
        gmres_ilu(a, b, options)
    }
}

fn direct_lu(a: &Csr, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    use faer::prelude::Solve;

    let n = a.dimension();
    let mut triplets = Vec::with_capacity(a.nnz());
    for r in 0..n {
        let (cols, vals) = a.row(r);
        for (c, v) in cols.iter().zip(vals) {
            triplets.push(faer::sparse::Triplet::new(r, *c, *v));
        }
    }
    let mat = faer::sparse::SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::SolverBreakdown(format!("sparse storage rejected: {e:?}")))?;
    drop(triplets);
    let lu = mat
        .sp_lu()
        .map_err(|e| Error::SolverBreakdown(format!("sparse factorization failed: {e:?}")))?;

    let mut rhs = faer::Mat::<f64>::zeros(n, 1);
    for (i, v) in b.iter().enumerate() {
        rhs[(i, 0)] = *v;
    }
    let sol = lu.solve(&rhs);
    let mut x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();

    // A couple of refinement passes squeeze the residual to tolerance.
    let b_norm = norm2(b);
    let mut residual = vec![0.0; n];
    let mut rounds = 0usize;
    let mut rel = f64::INFINITY;
    for _ in 0..=3 {
        a.apply(&x, &mut residual);
        for (r, bv) in residual.iter_mut().zip(b) {
            *r = bv - *r;
        }
        rel = norm2(&residual) / b_norm;
        if !rel.is_finite() || rel <= tol {
            break;
        }
        let mut rm = faer::Mat::<f64>::zeros(n, 1);
        for (i, v) in residual.iter().enumerate() {
            rm[(i, 0)] = *v;
        }
        let dx = lu.solve(&rm);
        for (i, xv) in x.iter_mut().enumerate() {
            *xv += dx[(i, 0)];
        }
        rounds += 1;
    }
    if !rel.is_finite() || rel > tol {
        return Err(Error::SolverBreakdown(format!(
            "direct solve stalled at relative residual {rel:.3e}"
        )));
    }
    Ok((
        x,
        SolveStats {
            method: Method::DirectLu,
            iterations: rounds,
            residual: rel,
            factor_nnz: None,
            projected_constant: false,
        },
    ))
}

/// Zero-fill incomplete LU on the matrix pattern; unit lower diagonal.
struct Ilu0 {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    fn new(a: &Csr) -> Result<Self> {
        let n = a.dimension();
        let row_ptr = a.row_ptr.clone();
        let cols = a.cols.clone();
        let mut vals = a.vals.clone();
        let mut diag = vec![usize::MAX; n];
        for r in 0..n {
            for p in row_ptr[r]..row_ptr[r + 1] {
                if cols[p] == r {
                    diag[r] = p;
                }
            }
            if diag[r] == usize::MAX {
                return Err(Error::SolverBreakdown(format!(
                    "row {r} has no diagonal entry; cannot precondition"
                )));
            }
        }
        let floor = 1e-13 * a.max_abs().max(f64::MIN_POSITIVE);
        let mut position = vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                position[cols[p]] = p;
            }
            for kp in row_ptr[i]..row_ptr[i + 1] {
                let k = cols[kp];
                if k >= i {
                    break;
                }
                let factor = vals[kp] / vals[diag[k]];
                vals[kp] = factor;
                for up in diag[k] + 1..row_ptr[k + 1] {
                    let p = position[cols[up]];
                    if p != usize::MAX {
                        vals[p] -= factor * vals[up];
                    }
                }
            }
            let d = diag[i];
            if vals[d].abs() < floor {
                vals[d] = if vals[d] < 0.0 { -floor } else { floor };
            }
            for p in row_ptr[i]..row_ptr[i + 1] {
                position[cols[p]] = usize::MAX;
            }
        }
        Ok(Ilu0 { row_ptr, cols, vals, diag })
    }

    /// out = U⁻¹ L⁻¹ v.
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut s = v[i];
            for p in self.row_ptr[i]..self.diag[i] {
                s -= self.vals[p] * out[self.cols[p]];
            }
            out[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = out[i];
            for p in self.diag[i] + 1..self.row_ptr[i + 1] {
                s -= self.vals[p] * out[self.cols[p]];
            }
            out[i] = s / self.vals[self.diag[i]];
        }
    }

    fn nnz(&self) -> usize {
        self.vals.len()
    }
}

fn gmres_ilu(a: &Csr, b: &[f64], options: &SolverOptions) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.dimension();
    let ilu = Ilu0::new(a)?;
    let b_norm = norm2(b);
    let tol = options.tol;
    let restart = options.restart.max(1);

    let mut x = vec![0.0f64; n];
    let mut r = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let mut z = vec![0.0f64; n];
    let mut total = 0usize;

    loop {
        a.apply(&x, &mut r);
        for (rv, bv) in r.iter_mut().zip(b) {
            *rv = bv - *rv;
        }
        let beta = norm2(&r);
        let rel = beta / b_norm;
        if !rel.is_finite() {
            return Err(Error::SolverBreakdown(
                "iteration produced non-finite residual".into(),
            ));
        }
        if rel <= tol {
            return Ok((
                x,
                SolveStats {
                    method: Method::Gmres,
                    iterations: total,
                    residual: rel,
                    factor_nnz: Some(ilu.nnz()),
                    projected_constant: false,
                },
            ));
        }
        if total >= options.max_iterations {
            return Err(Error::SolverBreakdown(format!(
                "restarted iteration stagnated at relative residual {rel:.3e} \
                 after {total} steps"
            )));
        }

        // Arnoldi with Givens rotations on the right-preconditioned operator.
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![0.0f64; (restart + 1) * restart];
        let mut cs = vec![0.0f64; restart];
        let mut sn = vec![0.0f64; restart];
        let mut g = vec![0.0f64; restart + 1];
        g[0] = beta;
        let mut k_used = 0usize;

        for k in 0..restart {
            total += 1;
            ilu.apply(&basis[k], &mut z);
            a.apply(&z, &mut w);
            for (l, base) in basis.iter().enumerate().take(k + 1) {
                let hij = dot(&w, base);
                h[l * restart + k] = hij;
                for (wv, bv) in w.iter_mut().zip(base) {
                    *wv -= hij * bv;
                }
            }
            let hk1 = norm2(&w);
            h[(k + 1) * restart + k] = hk1;

            for l in 0..k {
                let (a0, a1) = (h[l * restart + k], h[(l + 1) * restart + k]);
                h[l * restart + k] = cs[l] * a0 + sn[l] * a1;
                h[(l + 1) * restart + k] = -sn[l] * a0 + cs[l] * a1;
            }
            let (c, s) = givens(h[k * restart + k], h[(k + 1) * restart + k]);
            cs[k] = c;
            sn[k] = s;
            h[k * restart + k] = c * h[k * restart + k] + s * h[(k + 1) * restart + k];
            h[(k + 1) * restart + k] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            k_used = k + 1;

            let est = g[k + 1].abs() / b_norm;
            if est <= tol || hk1 == 0.0 || total >= options.max_iterations {
                break;
            }
            basis.push(w.iter().map(|v| v / hk1).collect());
        }

        // y solves the small triangular system; x += M⁻¹ (V y).
        let mut y = vec![0.0f64; k_used];
        for k in (0..k_used).rev() {
            let mut s = g[k];
            for (l, yl) in y.iter().enumerate().skip(k + 1) {
                s -= h[k * restart + l] * yl;
            }
            y[k] = s / h[k * restart + k];
        }
        let mut update = vec![0.0f64; n];
        for (k, yk) in y.iter().enumerate() {
            for (uv, bv) in update.iter_mut().zip(&basis[k]) {
                *uv += yk * bv;
            }
        }
        ilu.apply(&update, &mut z);
        for (xv, zv) in x.iter_mut().zip(&z) {
            *xv += zv;
        }
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    let r = a.hypot(b);
    if r == 0.0 {
        (1.0, 0.0)
    } else {
        (a / r, b / r)
    }
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest eigenvalue of the symmetric part (A + Aᵀ)/2 by inverse power
/// iteration through a sparse factorization.
///
/// # Errors
///
/// `SolverBreakdown` when the symmetric part is singular.
pub fn smallest_symmetric_eigenvalue(system: &LinearSystem) -> Result<f64> {
    use faer::prelude::Solve;

    let s = system.matrix.symmetric_part();
    let n = s.dimension();
    let mut triplets = Vec::with_capacity(s.nnz());
    for r in 0..n {
        let (cols, vals) = s.row(r);
        for (c, v) in cols.iter().zip(vals) {
            triplets.push(faer::sparse::Triplet::new(r, *c, *v));
        }
    }
    let mat = faer::sparse::SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::SolverBreakdown(format!("sparse storage rejected: {e:?}")))?;
    let lu = mat
        .sp_lu()
        .map_err(|e| Error::SolverBreakdown(format!("symmetric part is singular: {e:?}")))?;

    // Deterministic non-degenerate start.
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.37 * ((i * 2_654_435_761 + 1) % 1_000) as f64 / 1_000.0)
        .collect();
    let nx = norm2(&x);
    for v in &mut x {
        *v /= nx;
    }
    let mut rho_prev = f64::INFINITY;
    let mut sx = vec![0.0f64; n];
    for _ in 0..500 {
        let mut rhs = faer::Mat::<f64>::zeros(n, 1);
        for (i, v) in x.iter().enumerate() {
            rhs[(i, 0)] = *v;
        }
        let ym = lu.solve(&rhs);
        let mut y: Vec<f64> = (0..n).map(|i| ym[(i, 0)]).collect();
        let ny = norm2(&y);
        if !ny.is_finite() || ny == 0.0 {
            return Err(Error::SolverBreakdown(
                "inverse iteration produced a degenerate vector".into(),
            ));
        }
        for v in &mut y {
            *v /= ny;
        }
        s.apply(&y, &mut sx);
        let rho = dot(&y, &sx);
        x = y;
        if (rho - rho_prev).abs() <= 1e-12 * rho.abs().max(1e-300) {
            return Ok(rho);
        }
        rho_prev = rho;
    }
    Ok(rho_prev)
}

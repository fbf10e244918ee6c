use std::f64::consts::TAU;
use std::sync::Arc;
use std::time::Instant;

use pipesurf::compact::{operator_row, SchemeOptions};
use pipesurf::fields::{build_coefficients, manufactured_rhs, CoefficientFields, HaloField};
use pipesurf::harness::{
    helical_manufactured_case, helical_pipe, torus_manufactured_case, torus_pipe,
};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Type-I discrete sine transform on the odd extension, via one complex FFT
/// of length 2(len + 1). Unnormalized; applying it twice scales by
/// (len + 1)/2.
struct SineTransform {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl SineTransform {
    fn new(planner: &mut FftPlanner<f64>, len: usize) -> SineTransform {
        SineTransform {
            len,
            fft: planner.plan_fft_forward(2 * (len + 1)),
        }
    }

    fn scratch_len(&self) -> usize {
        2 * (self.len + 1) + self.fft.get_inplace_scratch_len()
    }

    fn process(&self, x: &mut [f64], scratch: &mut [Complex<f64>]) {
        let ext = 2 * (self.len + 1);
        let (buf, fft_scratch) = scratch.split_at_mut(ext);
        buf[0] = Complex::default();
        buf[self.len + 1] = Complex::default();
        for j in 0..self.len {
            buf[j + 1] = Complex::new(x[j], 0.0);
            buf[ext - 1 - j] = Complex::new(-x[j], 0.0);
        }
        self.fft.process_with_scratch(buf, fft_scratch);
        for k in 0..self.len {
            x[k] = -0.5 * buf[k + 1].im;
        }
    }
}

struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[r] = s;
        }
    }
}

/// Solves a frozen-coefficient surrogate of the scheme exactly in Fourier
/// space: FFT in the periodic θ direction crossed with either an FFT
/// (periodic ω) or a DST-I (homogeneous Dirichlet ω).
struct Spectral {
    m: usize,
    rows: usize,
    periodic: bool,
    /// 1/s(k,l) with all transform normalization folded in, indexed l·m + k.
    inv_symbol: Vec<f64>,
    fft_t: Arc<dyn Fft<f64>>,
    ifft_t: Arc<dyn Fft<f64>>,
    fft_w: Option<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
    dst_w: Option<SineTransform>,
}

fn geometric_mean(field: &HaloField, m: usize) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        for j in 0..field.rows() {
            let v = field.get(i as isize, j as isize);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo * hi).sqrt()
}

fn mean(field: &HaloField, m: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..m {
        for j in 0..field.rows() {
            sum += field.get(i as isize, j as isize);
        }
    }
    sum / (m * field.rows()) as f64
}

impl Spectral {
    fn new(c: &CoefficientFields) -> Spectral {
        let grid = c.grid;
        let m = grid.m();
        let nn = grid.n();
        let periodic = grid.periodic_omega();
        let rows = if periodic { nn } else { nn - 1 };
        let ht = grid.h_theta();
        let hw = grid.h_omega();
        let (ht2, hw2) = (ht * ht, hw * hw);
        let (ht4, hw4) = (ht2 * ht2, hw2 * hw2);
        let beta2 = c.beta * c.beta;

        let p_bar = geometric_mean(&c.p_theta_half, m);
        let q_bar = geometric_mean(&c.q_node, m);
        let p_hat_bar = geometric_mean(&c.p_hat_theta_half, m);
        let q_hat_bar = geometric_mean(&c.q_hat_omega_half, m);
        let rho_bar = (c.rho0_min * c.rho0_max).sqrt();
        let eta_bar = geometric_mean(&c.eta_node, m);
        let a_p = geometric_mean(&c.p_hat_sq_theta_half, m) / rho_bar;
        let a_q = geometric_mean(&c.q_hat_sq_omega_half, m) / eta_bar;
        let a_q1 = geometric_mean(&c.q_hat1_sq_node, m) / rho_bar;
        let a_qe = geometric_mean(&c.q_hat_sq_node, m) / eta_bar;
        let sigma = mean(&c.varpi_node, m).max(0.0);

        let norm = if periodic {
            (m * rows) as f64
        } else {
            m as f64 * (rows + 1) as f64 / 2.0
        };
        let floor = 1e-10 * (p_bar / ht2 + q_bar / hw2);
        let mut inv_symbol = vec![0.0; rows * m];
        for l in 0..rows {
            // Mode l+1 of the interior sine basis, or DFT mode l.
            let xw = if periodic {
                TAU * l as f64 / nn as f64
            } else {
                (l + 1) as f64 * std::f64::consts::PI / nn as f64
            };
            let dw = (2.0 - 2.0 * xw.cos()) / hw2;
            let sw = xw.sin().powi(2) / hw2;
            for k in 0..m {
                let xt = TAU * k as f64 / m as f64;
                let dt = (2.0 - 2.0 * xt.cos()) / ht2;
                let st = xt.sin().powi(2) / ht2;
                let mut s = p_bar * dt + q_bar * dw + sigma;
                s -= ht2 * ((1.0 / 3.0) * p_hat_bar * dt * dt + (5.0 / 12.0) * q_hat_bar * dt * dw);
                s -= hw2 * ((1.0 / 3.0) * q_hat_bar * dw * dw + (5.0 / 12.0) * p_hat_bar * dt * dw);
                s += ht4 * ((4.0 / 9.0) * a_p * dt * dt * dt + (25.0 / 36.0) * a_q * dt * dt * dw);
                s += hw4 * ((4.0 / 9.0) * a_q * dw * dw * dw + (25.0 / 36.0) * a_p * dt * dw * dw);
                s += beta2
                    * (ht4 * (a_q1 * sw + a_qe * st) * dt * dt / 4.0
                        + hw4 * (a_q1 * sw + a_qe * st) * dw * dw / 4.0);
                if s < floor {
                    // Near-singular constant mode: pass it through unscaled
                    // relative to the lowest resolved mode.
                    s = p_bar * (2.0 - 2.0 * (TAU / m as f64).cos()) / ht2
                        + q_bar * (2.0 - 2.0 * (TAU / nn as f64).cos()) / hw2
                        + sigma;
                }
                inv_symbol[l * m + k] = 1.0 / (s * norm);
            }
        }

        let mut planner = FftPlanner::new();
        let fft_t = planner.plan_fft_forward(m);
        let ifft_t = planner.plan_fft_inverse(m);
        let (fft_w, dst_w) = if periodic {
            (
                Some((planner.plan_fft_forward(rows), planner.plan_fft_inverse(rows))),
                None,
            )
        } else {
            (None, Some(SineTransform::new(&mut planner, rows)))
        };
        Spectral {
            m,
            rows,
            periodic,
            inv_symbol,
            fft_t,
            ifft_t,
            fft_w,
            dst_w,
        }
    }

    fn apply(&self, b: &[f64], x: &mut [f64]) {
        let (m, rows) = (self.m, self.rows);
        if self.periodic {
            let (fw, iw) = self.fft_w.as_ref().unwrap();
            let mut grid: Vec<Complex<f64>> =
                b.iter().map(|&v| Complex::new(v, 0.0)).collect();
            let mut scratch =
                vec![Complex::default(); self.fft_t.get_inplace_scratch_len().max(fw.get_inplace_scratch_len())];
            for l in 0..rows {
                self.fft_t
                    .process_with_scratch(&mut grid[l * m..(l + 1) * m], &mut scratch);
            }
            let mut col = vec![Complex::default(); rows];
            for k in 0..m {
                for l in 0..rows {
                    col[l] = grid[l * m + k];
                }
                fw.process_with_scratch(&mut col, &mut scratch);
                for l in 0..rows {
                    grid[l * m + k] = col[l] * self.inv_symbol[l * m + k];
                }
            }
            for k in 0..m {
                for l in 0..rows {
                    col[l] = grid[l * m + k];
                }
                iw.process_with_scratch(&mut col, &mut scratch);
                for l in 0..rows {
                    grid[l * m + k] = col[l];
                }
            }
            for l in 0..rows {
                self.ifft_t
                    .process_with_scratch(&mut grid[l * m..(l + 1) * m], &mut scratch);
            }
            for (xi, g) in x.iter_mut().zip(&grid) {
                *xi = g.re;
            }
        } else {
            let dst = self.dst_w.as_ref().unwrap();
            x.copy_from_slice(b);
            let mut col = vec![0.0; rows];
            let mut dscratch = vec![0.0; dst.get_scratch_len()];
            for i in 0..m {
                for l in 0..rows {
                    col[l] = x[l * m + i];
                }
                dst.process_dst1_with_scratch(&mut col, &mut dscratch);
                for l in 0..rows {
                    x[l * m + i] = col[l];
                }
            }
            let mut crow = vec![Complex::default(); m];
            let mut cscratch = vec![Complex::default(); self.fft_t.get_inplace_scratch_len()];
            for l in 0..rows {
                for i in 0..m {
                    crow[i] = Complex::new(x[l * m + i], 0.0);
                }
                self.fft_t.process_with_scratch(&mut crow, &mut cscratch);
                for k in 0..m {
                    crow[k] *= self.inv_symbol[l * m + k];
                }
                self.ifft_t.process_with_scratch(&mut crow, &mut cscratch);
                for i in 0..m {
                    x[l * m + i] = crow[i].re;
                }
            }
            for i in 0..m {
                for l in 0..rows {
                    col[l] = x[l * m + i];
                }
                dst.process_dst1_with_scratch(&mut col, &mut dscratch);
                for l in 0..rows {
                    x[l * m + i] = col[l];
                }
            }
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[allow(clippy::too_many_arguments)]
fn gmres(
    a: &Csr,
    m: &Spectral,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iters: usize,
    x: &mut [f64],
) -> (usize, f64) {
    let n = a.n;
    let bnorm = norm2(b).max(1e-300);
    let mut total = 0usize;
    let mut r = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    loop {
        a.apply(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm2(&r);
        let rel = beta / bnorm;
        eprintln!("  cycle: iters {total} true rel {rel:.3e}");
        if rel <= tol || total >= max_iters {
            return (total, rel);
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut h = vec![0.0f64; (restart + 1) * restart];
        let mut cs = vec![0.0f64; restart];
        let mut sn = vec![0.0f64; restart];
        let mut g = vec![0.0f64; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            m.apply(&v[k], &mut scratch);
            let mut w = vec![0.0; n];
            a.apply(&scratch, &mut w);
            for l in 0..=k {
                let hh = dot(&w, &v[l]);
                h[l * restart + k] = hh;
                for i in 0..n {
                    w[i] -= hh * v[l][i];
                }
            }
            let wn = norm2(&w);
            h[(k + 1) * restart + k] = wn;
            for l in 0..k {
                let t = cs[l] * h[l * restart + k] + sn[l] * h[(l + 1) * restart + k];
                h[(l + 1) * restart + k] =
                    -sn[l] * h[l * restart + k] + cs[l] * h[(l + 1) * restart + k];
                h[l * restart + k] = t;
            }
            let (c, s) = {
                let (aa, bb) = (h[k * restart + k], h[(k + 1) * restart + k]);
                let rr = (aa * aa + bb * bb).sqrt();
                if rr == 0.0 {
                    (1.0, 0.0)
                } else {
                    (aa / rr, bb / rr)
                }
            };
            cs[k] = c;
            sn[k] = s;
            h[k * restart + k] = c * h[k * restart + k] + s * h[(k + 1) * restart + k];
            h[(k + 1) * restart + k] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            total += 1;
            k_used = k + 1;
            if wn == 0.0 || (g[k + 1].abs() / bnorm) <= tol || total >= max_iters {
                break;
            }
            v.push(w.iter().map(|x| x / wn).collect());
        }
        let mut y = vec![0.0f64; k_used];
        for k in (0..k_used).rev() {
            let mut s = g[k];
            for l in k + 1..k_used {
                s -= h[k * restart + l] * y[l];
            }
            y[k] = s / h[k * restart + k];
        }
        let mut z = vec![0.0; n];
        for k in 0..k_used {
            for i in 0..n {
                z[i] += y[k] * v[k][i];
            }
        }
        m.apply(&z, &mut scratch);
        for i in 0..n {
            x[i] += scratch[i];
        }
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("torus");
    let h_inv: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(60.0);
    let restart: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(50);
    let section = args.get(4).map(String::as_str).unwrap_or("circular");
    let tol: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(1e-10);
    let h = 1.0 / h_inv;

    let (pipe, case) = if which == "torus" {
        (torus_pipe(section, 1).unwrap(), torus_manufactured_case())
    } else {
        (
            helical_pipe(section, 1).unwrap(),
            helical_manufactured_case(),
        )
    };
    let (lo, hi) = pipe.centerline().domain();
    let m = (TAU / h).round() as usize;
    let nn = ((hi - lo) / h).round() as usize;
    let grid = pipesurf::discrete::Grid::new(m, nn, (lo, hi), pipe.boundary_mode()).unwrap();
    let lambda = case.lambda.clone();
    let coeffs = build_coefficients(&pipe, grid, &|t, w| lambda(t, w)).unwrap();

    let periodic = grid.periodic_omega();
    let j_lo = usize::from(!periodic);
    let unknown_rows = if periodic { grid.n() } else { grid.n() - 1 };
    let n_unknowns = m * unknown_rows;
    eprintln!("{which}/{section} h=1/{h_inv} M={m} N={nn} n={n_unknowns} restart={restart}");

    let t0 = Instant::now();
    let opts = SchemeOptions::default();
    let mut row_ptr = vec![0usize];
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut scratch = Vec::new();
    for r in 0..n_unknowns {
        let (i, j) = (r % m, j_lo + r / m);
        operator_row(&coeffs, opts, i, j, &mut scratch);
        let mut row: Vec<(usize, f64)> = scratch
            .iter()
            .map(|&(ci, cj, v)| ((cj - j_lo) * m + ci, v))
            .collect();
        row.sort_by_key(|e| e.0);
        for (c, v) in row {
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    let a = Csr {
        n: n_unknowns,
        row_ptr,
        cols,
        vals,
    };
    eprintln!("assemble: {:.2}s", t0.elapsed().as_secs_f64());

    let mut b = vec![0.0f64; n_unknowns];
    let rhs = pipesurf::compact::build_rhs(&coeffs, &|t, w| {
        manufactured_rhs(&pipe, &case, t, w).unwrap()
    });
    for r in 0..n_unknowns {
        let (i, j) = (r % m, j_lo + r / m);
        b[r] = rhs.get(i as isize, j as isize);
    }

    let t0 = Instant::now();
    let pre = Spectral::new(&coeffs);
    eprintln!("spectral setup: {:.3}s", t0.elapsed().as_secs_f64());

    {
        // Diagnostics: symbol range, DST scaling, operator symmetry.
        let mut smin = f64::INFINITY;
        let mut smax = f64::NEG_INFINITY;
        for &v in &pre.inv_symbol {
            smin = smin.min(1.0 / v);
            smax = smax.max(1.0 / v);
        }
        eprintln!("symbol*norm range [{smin:.3e}, {smax:.3e}]");
        if let Some(dst) = pre.dst_w.as_ref() {
            let rows = pre.rows;
            let mut v: Vec<f64> = (0..rows).map(|i| (i as f64 * 0.7).sin()).collect();
            let orig = v.clone();
            let mut scr = vec![0.0; dst.get_scratch_len()];
            dst.process_dst1_with_scratch(&mut v, &mut scr);
            dst.process_dst1_with_scratch(&mut v, &mut scr);
            let scale: Vec<f64> = v.iter().zip(&orig).map(|(a, b)| a / b).collect();
            eprintln!(
                "dst twice scale: first {:.6} mid {:.6} expected {:.6}",
                scale[1],
                scale[rows / 2],
                (rows + 1) as f64 / 2.0
            );
        }
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let va: Vec<f64> = (0..n_unknowns).map(|_| rng.random_range(-1.0..1.0)).collect();
        let vb: Vec<f64> = (0..n_unknowns).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut ma = vec![0.0; n_unknowns];
        let mut mb = vec![0.0; n_unknowns];
        pre.apply(&va, &mut ma);
        pre.apply(&vb, &mut mb);
        eprintln!(
            "precond symmetry: <Ma,b>={:.6e} <a,Mb>={:.6e}  |Ma|/|a|={:.3e}",
            dot(&ma, &vb),
            dot(&va, &mb),
            norm2(&ma) / norm2(&va)
        );
        if let Some(dst) = pre.dst_w.as_ref() {
            let rows = pre.rows;
            let mut x = va.clone();
            let mut col = vec![0.0; rows];
            let mut dscratch = vec![0.0; dst.get_scratch_len()];
            for i in 0..m {
                for l in 0..rows {
                    col[l] = x[l * m + i];
                }
                dst.process_dst1_with_scratch(&mut col, &mut dscratch);
                for l in 0..rows {
                    x[l * m + i] = col[l];
                }
            }
            eprintln!("stage dst1 fwd: |x| {:.3e}", norm2(&x));
            let mut crow = vec![Complex::default(); m];
            let mut cscratch =
                vec![Complex::default(); pre.fft_t.get_inplace_scratch_len()];
            for l in 0..rows {
                for i in 0..m {
                    crow[i] = Complex::new(x[l * m + i], 0.0);
                }
                pre.fft_t.process_with_scratch(&mut crow, &mut cscratch);
                for k in 0..m {
                    crow[k] *= pre.inv_symbol[l * m + k];
                }
                pre.ifft_t.process_with_scratch(&mut crow, &mut cscratch);
                for i in 0..m {
                    x[l * m + i] = crow[i].re;
                }
            }
            eprintln!("stage fft/symbol/ifft: |x| {:.3e}", norm2(&x));
            for i in 0..m {
                for l in 0..rows {
                    col[l] = x[l * m + i];
                }
                dst.process_dst1_with_scratch(&mut col, &mut dscratch);
                for l in 0..rows {
                    x[l * m + i] = col[l];
                }
            }
            eprintln!("stage dst1 back: |x| {:.3e}", norm2(&x));
        }
    }

    let t0 = Instant::now();
    let mut x = vec![0.0f64; n_unknowns];
    let (iters, rel) = gmres(&a, &pre, &b, tol, restart, 2000, &mut x);
    eprintln!(
        "gmres: {:.2}s  iters {}  rel {:.3e}",
        t0.elapsed().as_secs_f64(),
        iters,
        rel
    );

    let exact = case.sample_solution(grid);
    let mut emax = 0.0f64;
    for r in 0..n_unknowns {
        let (i, j) = (r % m, j_lo + r / m);
        emax = emax.max((x[r] - exact.get(i as isize, j as isize)).abs());
    }
    eprintln!("max node error {emax:.3e}");
}

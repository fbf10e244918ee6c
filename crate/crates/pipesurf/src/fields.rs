//! Continuous scheme coefficients sampled on the grid, and manufactured
//! solution/right-hand-side evaluation.
//!
//! The surface operator at r = 1 is driven by four base fields built from the
//! cross-section radius R, the centerline speed s = ‖r_c′‖, curvature κ and
//! the constant β = τs:
//!
//! ```text
//! ρ₀ = s(1 − κR cosθ),  p = ρ₀ + β²R²/ρ₀,  q = R²/ρ₀,  ϖ = R²ρ₀λ.
//! ```
//!
//! Everything else (tilde/hat corrections, ratio fields, η) is derived from
//! these by the chain rule; half-node values are evaluated analytically at
//! the staggered coordinates, never averaged from nodes.

use std::sync::Arc;

use crate::discrete::{Grid, GridFunction, Staggering};
use crate::geometry::{frame_allowing_flats, Centerline, FrameScalarMode, PipeGeometry};
use crate::{Error, Result};

/// Scalar samples on an extended j range: Dirichlet grids carry `halo` extra
/// rows past each ω end (coefficients are analytic there), periodic grids
/// wrap. θ always wraps.
#[derive(Debug, Clone)]
pub struct HaloField {
    m: usize,
    rows: usize,
    halo: usize,
    periodic: bool,
    values: Vec<f64>,
}

impl HaloField {
    fn zeros(m: usize, rows: usize, halo: usize, periodic: bool) -> Self {
        HaloField {
            m,
            rows,
            halo,
            periodic,
            values: vec![0.0; m * (rows + 2 * halo)],
        }
    }

    /// Value at θ index `i` (wrapping) and unshifted ω index `j`.
    ///
    /// # Panics
    ///
    /// Panics when a Dirichlet index falls outside the stored halo; stencils
    /// must stay within reach of the construction halo.
    pub fn get(&self, i: isize, j: isize) -> f64 {
        let i = i.rem_euclid(self.m as isize) as usize;
        let j = if self.periodic {
            j.rem_euclid(self.rows as isize) as usize
        } else {
            let shifted = j + self.halo as isize;
            assert!(
                (0..(self.rows + 2 * self.halo) as isize).contains(&shifted),
                "coefficient read at omega index {j} is outside the halo"
            );
            shifted as usize
        };
        self.values[i * (self.rows + 2 * self.halo) + j]
    }

    fn set(&mut self, i: usize, j: isize, value: f64) {
        let stride = self.rows + 2 * self.halo;
        let j = if self.periodic {
            j.rem_euclid(self.rows as isize) as usize
        } else {
            (j + self.halo as isize) as usize
        };
        self.values[i * stride + j] = value;
    }

    /// Base rows (without halo).
    pub fn rows(&self) -> usize {
        self.rows
    }
}

/// Speed, curvature and their ω-derivatives at one parameter value. For
/// constant-scalar curves (circles, circular helices) the derivatives are
/// exactly zero; otherwise s′, s″ come from closed forms and κ′, κ″ from
/// 6th-order centered differences of the analytic curvature.
#[derive(Debug, Clone, Copy)]
struct FrameScalars {
    s: f64,
    s1: f64,
    s2: f64,
    kappa: f64,
    kappa1: f64,
    kappa2: f64,
    beta: f64,
}

fn frame_scalars(curve: &Centerline, omega: f64) -> Result<FrameScalars> {
    let frame = frame_allowing_flats(curve, omega)?;
    match curve.scalar_mode() {
        FrameScalarMode::Constant => Ok(FrameScalars {
            s: frame.speed,
            s1: 0.0,
            s2: 0.0,
            kappa: frame.kappa,
            kappa1: 0.0,
            kappa2: 0.0,
            beta: frame.beta,
        }),
        FrameScalarMode::General => {
            let [_, d1, d2, d3] = curve.jets(omega);
            let s = frame.speed;
            let s1 = d1.dot(&d2) / s;
            let s2 = (d2.norm_squared() + d1.dot(&d3) - s1 * s1) / s;
            let (wl, wr) = curve.domain();
            let step = 1e-3 * ((wr - wl) / (2.0 * std::f64::consts::PI)).max(1.0);
            let k = |w: f64| -> Result<f64> { Ok(frame_allowing_flats(curve, w)?.kappa) };
            let mut f = [0.0; 7];
            for (idx, off) in (-3..=3).enumerate() {
                f[idx] = k(omega + off as f64 * step)?;
            }
            let kappa1 =
                (45.0 * (f[4] - f[2]) - 9.0 * (f[5] - f[1]) + (f[6] - f[0])) / (60.0 * step);
            let kappa2 = (-49.0 / 18.0 * f[3] + 1.5 * (f[4] + f[2]) - 0.15 * (f[5] + f[1])
                + (f[6] + f[0]) / 90.0)
                / (step * step);
            Ok(FrameScalars {
                s,
                s1,
                s2,
                kappa: frame.kappa,
                kappa1,
                kappa2,
                beta: frame.beta,
            })
        }
    }
}

/// All base coefficients and the derivatives the scheme consumes, at one
/// parameter point.
#[derive(Debug, Clone, Copy)]
pub struct PointCoeffs {
    pub radius: f64,
    pub rho0: f64,
    pub rho0_t: f64,
    pub rho0_w: f64,
    pub p: f64,
    pub p_t: f64,
    pub p_w: f64,
    pub p_tt: f64,
    pub q: f64,
    pub q_t: f64,
    pub q_w: f64,
    pub q_tt: f64,
    pub q_ww: f64,
    /// q̄ = ∂ω(∂θq / q).
    pub q_bar: f64,
    pub eta: f64,
}

fn eval_point(
    pipe: &PipeGeometry,
    fs: &FrameScalars,
    beta: f64,
    theta: f64,
    omega: f64,
) -> PointCoeffs {
    let sec = pipe.cross_section().eval(theta, omega);
    let (sn, c) = theta.sin_cos();
    let r = sec.r;

    let rho0 = fs.s * (1.0 - fs.kappa * r * c);
    let rho0_t = -fs.s * fs.kappa * (sec.rt * c - r * sn);
    let rho0_tt = -fs.s * fs.kappa * (sec.rtt * c - 2.0 * sec.rt * sn - r * c);
    let kr_w = fs.kappa1 * r + fs.kappa * sec.rw;
    let rho0_w = fs.s1 * (1.0 - fs.kappa * r * c) - fs.s * kr_w * c;
    let rho0_ww = fs.s2 * (1.0 - fs.kappa * r * c)
        - 2.0 * fs.s1 * kr_w * c
        - fs.s * (fs.kappa2 * r + 2.0 * fs.kappa1 * sec.rw + fs.kappa * sec.rww) * c;
    let rho0_tw = -(fs.s1 * fs.kappa + fs.s * fs.kappa1) * (sec.rt * c - r * sn)
        - fs.s * fs.kappa * (sec.rtw * c - sec.rw * sn);

    let q = r * r / rho0;
    // Logarithmic derivatives of q = R²/ρ₀ keep the quotient rule tidy.
    let gt = 2.0 * sec.rt / r - rho0_t / rho0;
    let gw = 2.0 * sec.rw / r - rho0_w / rho0;
    let q_t = q * gt;
    let q_w = q * gw;
    let dgt_dt = 2.0 * (sec.rtt * r - sec.rt * sec.rt) / (r * r)
        - (rho0_tt * rho0 - rho0_t * rho0_t) / (rho0 * rho0);
    let dgw_dw = 2.0 * (sec.rww * r - sec.rw * sec.rw) / (r * r)
        - (rho0_ww * rho0 - rho0_w * rho0_w) / (rho0 * rho0);
    let q_tt = q * (gt * gt + dgt_dt);
    let q_ww = q * (gw * gw + dgw_dw);
    let q_bar = 2.0 * (sec.rtw * r - sec.rt * sec.rw) / (r * r)
        - (rho0_tw * rho0 - rho0_t * rho0_w) / (rho0 * rho0);

    let b2 = beta * beta;
    let p = rho0 + b2 * q;
    let p_t = rho0_t + b2 * q_t;
    let p_w = rho0_w + b2 * q_w;
    let p_tt = rho0_tt + b2 * q_tt;

    // β = 0 must give η = q bit for bit, not up to roundoff.
    let eta = if beta == 0.0 {
        q
    } else {
        rho0 * r * r / (b2 * r * r + rho0 * rho0)
    };

    PointCoeffs {
        radius: r,
        rho0,
        rho0_t,
        rho0_w,
        p,
        p_t,
        p_w,
        p_tt,
        q,
        q_t,
        q_w,
        q_tt,
        q_ww,
        q_bar,
        eta,
    }
}

/// Every coefficient array the compact scheme reads, at its staggering, with
/// an ω halo wide enough for the near-boundary stencils.
#[derive(Debug, Clone)]
pub struct CoefficientFields {
    pub grid: Grid,
    /// The constant β = τ‖r_c′‖ of the supported geometry.
    pub beta: f64,
    /// η₀ = min of the two extremal ratios; scalar stabilizer weight.
    pub eta0: f64,
    pub rho0_min: f64,
    pub rho0_max: f64,
    pub radius_min: f64,

    // Node-centred fields.
    pub q_node: HaloField,
    pub q_tilde_node: HaloField,
    pub q_hat_node: HaloField,
    pub q_hat_sq_node: HaloField,
    pub q_tilde1_node: HaloField,
    pub q_hat1_node: HaloField,
    pub q_hat1_sq_node: HaloField,
    pub q_hat2_node: HaloField,
    pub q_bar_node: HaloField,
    pub varpi_node: HaloField,
    /// R²ρ₀, the surface Jacobian that scales the right-hand side.
    pub jacobian_node: HaloField,
    pub rho0_node: HaloField,
    pub inv_rho0_node: HaloField,
    pub eta_node: HaloField,
    pub dp_over_p_theta: HaloField,
    pub dp_over_p_omega: HaloField,
    pub dq_over_q_theta: HaloField,
    pub dq_over_q_omega: HaloField,

    // θ-half fields (sampled at θ_{i+1/2}, ω_j).
    pub p_theta_half: HaloField,
    pub p_tilde_theta_half: HaloField,
    pub p_hat_theta_half: HaloField,
    pub p_hat_sq_theta_half: HaloField,
    pub q_theta_half: HaloField,
    pub rho0_theta_half: HaloField,

    // ω-half fields (sampled at θ_i, ω_{j+1/2}).
    pub q_omega_half: HaloField,
    pub q_tilde_omega_half: HaloField,
    pub q_hat_omega_half: HaloField,
    pub q_hat_sq_omega_half: HaloField,
    pub eta_omega_half: HaloField,
}

/// Halo rows kept past each Dirichlet ω end; the composed right-hand-side
/// operator and the near-boundary stencils reach at most 3 rows out.
pub const COEFF_HALO: usize = 4;

/// Evaluates every coefficient array for the scheme on `grid`.
///
/// # Errors
///
/// `UnsupportedGeometry` when β = τ‖r_c′‖ varies along the centerline (the
/// compact scheme treats β as a constant), `NonPositiveJacobian` when ρ₀ or R
/// fails to stay positive at an evaluated point, `DegenerateCurve` from frame
/// evaluation.
pub fn build_coefficients(
    pipe: &PipeGeometry,
    grid: Grid,
    lambda: &dyn Fn(f64, f64) -> f64,
) -> Result<CoefficientFields> {
    let periodic = grid.periodic_omega();
    let halo = if periodic { 0 } else { COEFF_HALO };
    let m = grid.m();
    let node_rows = grid.rows(Staggering::Node);
    let half_rows = grid.rows(Staggering::OmegaHalf);
    let ht2 = grid.h_theta() * grid.h_theta();
    let hw2 = grid.h_omega() * grid.h_omega();

    // Frame scalars per ω level, cached: nodes first, then ω-half levels.
    let node_j = || -(halo as isize)..(node_rows + halo) as isize;
    let half_j = || -(halo as isize)..(half_rows + halo) as isize;
    let mut node_scalars = Vec::new();
    for j in node_j() {
        node_scalars.push(frame_scalars(pipe.centerline(), grid.omega(j))?);
    }
    let mut half_scalars = Vec::new();
    for j in half_j() {
        let omega = grid.omega(j) + 0.5 * grid.h_omega();
        half_scalars.push(frame_scalars(pipe.centerline(), omega)?);
    }

    // The scheme requires one global β.
    let beta_ref = node_scalars[0].beta;
    for fs in node_scalars.iter().chain(half_scalars.iter()) {
        if (fs.beta - beta_ref).abs() > 1e-10 * (1.0 + beta_ref.abs()) {
            return Err(Error::UnsupportedGeometry(format!(
                "torsion times speed varies along the centerline ({} vs {}); \
                 the scheme needs constant beta",
                fs.beta, beta_ref
            )));
        }
    }
    let beta = if beta_ref.abs() < 1e-12 { 0.0 } else { beta_ref };

    let new_field = |rows: usize| HaloField::zeros(m, rows, halo, periodic);
    let mut f = CoefficientFields {
        grid,
        beta,
        eta0: 0.0,
        rho0_min: f64::INFINITY,
        rho0_max: f64::NEG_INFINITY,
        radius_min: f64::INFINITY,
        q_node: new_field(node_rows),
        q_tilde_node: new_field(node_rows),
        q_hat_node: new_field(node_rows),
        q_hat_sq_node: new_field(node_rows),
        q_tilde1_node: new_field(node_rows),
        q_hat1_node: new_field(node_rows),
        q_hat1_sq_node: new_field(node_rows),
        q_hat2_node: new_field(node_rows),
        q_bar_node: new_field(node_rows),
        varpi_node: new_field(node_rows),
        jacobian_node: new_field(node_rows),
        rho0_node: new_field(node_rows),
        inv_rho0_node: new_field(node_rows),
        eta_node: new_field(node_rows),
        dp_over_p_theta: new_field(node_rows),
        dp_over_p_omega: new_field(node_rows),
        dq_over_q_theta: new_field(node_rows),
        dq_over_q_omega: new_field(node_rows),
        p_theta_half: new_field(node_rows),
        p_tilde_theta_half: new_field(node_rows),
        p_hat_theta_half: new_field(node_rows),
        p_hat_sq_theta_half: new_field(node_rows),
        q_theta_half: new_field(node_rows),
        rho0_theta_half: new_field(node_rows),
        q_omega_half: new_field(half_rows),
        q_tilde_omega_half: new_field(half_rows),
        q_hat_omega_half: new_field(half_rows),
        q_hat_sq_omega_half: new_field(half_rows),
        eta_omega_half: new_field(half_rows),
    };

    let check_positive = |pc: &PointCoeffs, theta: f64, omega: f64| -> Result<()> {
        if !(pc.rho0 > 0.0) || !(pc.radius > 0.0) {
            return Err(Error::NonPositiveJacobian {
                r: 1.0,
                theta,
                omega,
                value: pc.radius * pc.radius * pc.rho0,
            });
        }
        Ok(())
    };

    // Node pass.
    for i in 0..m {
        let theta = grid.theta(i as isize);
        for (row, j) in node_j().enumerate() {
            let omega = grid.omega(j);
            let pc = eval_point(pipe, &node_scalars[row], beta, theta, omega);
            check_positive(&pc, theta, omega)?;
            if (0..node_rows as isize).contains(&j) {
                f.rho0_min = f.rho0_min.min(pc.rho0);
                f.rho0_max = f.rho0_max.max(pc.rho0);
                f.radius_min = f.radius_min.min(pc.radius);
            }
            let q_tilde = pc.q_w * pc.q_w / pc.q - 0.5 * pc.q_ww;
            let q_hat = pc.q - hw2 / 12.0 * q_tilde;
            let q_tilde1 = pc.q_t * pc.q_t / pc.q - 0.5 * pc.q_tt;
            let q_hat1 = pc.q - ht2 / 3.0 * q_tilde1;
            f.q_node.set(i, j, pc.q);
            f.q_tilde_node.set(i, j, q_tilde);
            f.q_hat_node.set(i, j, q_hat);
            f.q_hat_sq_node.set(i, j, q_hat * q_hat);
            f.q_tilde1_node.set(i, j, q_tilde1);
            f.q_hat1_node.set(i, j, q_hat1);
            f.q_hat1_sq_node.set(i, j, q_hat1 * q_hat1);
            // q̂₂ = q − (hω²/3)q̃ = 4q̂ − 3q, exactly.
            f.q_hat2_node.set(i, j, 4.0 * q_hat - 3.0 * pc.q);
            f.q_bar_node.set(i, j, pc.q_bar);
            let jac = pc.radius * pc.radius * pc.rho0;
            f.varpi_node.set(i, j, jac * lambda(theta, omega));
            f.jacobian_node.set(i, j, jac);
            f.rho0_node.set(i, j, pc.rho0);
            f.inv_rho0_node.set(i, j, 1.0 / pc.rho0);
            f.eta_node.set(i, j, pc.eta);
            f.dp_over_p_theta.set(i, j, pc.p_t / pc.p);
            f.dp_over_p_omega.set(i, j, pc.p_w / pc.p);
            f.dq_over_q_theta.set(i, j, pc.q_t / pc.q);
            f.dq_over_q_omega.set(i, j, pc.q_w / pc.q);
        }
    }

    // θ-half pass.
    for i in 0..m {
        let theta = grid.theta(i as isize) + 0.5 * grid.h_theta();
        for (row, j) in node_j().enumerate() {
            let omega = grid.omega(j);
            let pc = eval_point(pipe, &node_scalars[row], beta, theta, omega);
            check_positive(&pc, theta, omega)?;
            let p_tilde = pc.p_t * pc.p_t / pc.p - 0.5 * pc.p_tt;
            let p_hat = pc.p - ht2 / 12.0 * p_tilde;
            f.p_theta_half.set(i, j, pc.p);
            f.p_tilde_theta_half.set(i, j, p_tilde);
            f.p_hat_theta_half.set(i, j, p_hat);
            f.p_hat_sq_theta_half.set(i, j, p_hat * p_hat);
            f.q_theta_half.set(i, j, pc.q);
            f.rho0_theta_half.set(i, j, pc.rho0);
        }
    }

    // ω-half pass.
    for i in 0..m {
        let theta = grid.theta(i as isize);
        for (row, j) in half_j().enumerate() {
            let omega = grid.omega(j) + 0.5 * grid.h_omega();
            let pc = eval_point(pipe, &half_scalars[row], beta, theta, omega);
            check_positive(&pc, theta, omega)?;
            let q_tilde = pc.q_w * pc.q_w / pc.q - 0.5 * pc.q_ww;
            let q_hat = pc.q - hw2 / 12.0 * q_tilde;
            f.q_omega_half.set(i, j, pc.q);
            f.q_tilde_omega_half.set(i, j, q_tilde);
            f.q_hat_omega_half.set(i, j, q_hat);
            f.q_hat_sq_omega_half.set(i, j, q_hat * q_hat);
            f.eta_omega_half.set(i, j, pc.eta);
        }
    }

    // η₀ from the extremal ρ₀ and the smallest radius.
    let r2 = f.radius_min * f.radius_min;
    let b2 = beta * beta;
    let lo = f.rho0_min * r2 / (b2 * r2 + f.rho0_min * f.rho0_min);
    let hi = f.rho0_max * r2 / (b2 * r2 + f.rho0_max * f.rho0_max);
    f.eta0 = lo.min(hi);

    Ok(f)
}

/// Evaluates the base coefficients and their scheme-relevant derivatives at
/// one point, with β taken from the local frame.
///
/// # Errors
///
/// Propagates frame evaluation failures on degenerate centerlines.
pub fn point_coefficients(pipe: &PipeGeometry, theta: f64, omega: f64) -> Result<PointCoeffs> {
    let fs = frame_scalars(pipe.centerline(), omega)?;
    Ok(eval_point(pipe, &fs, fs.beta, theta, omega))
}

/// Fields with constant p, q and zero ratios; no geometry produces these, but
/// they collapse the scheme to classical tensor stencils with known closed
/// forms, which pins the composition machinery in isolation.
#[cfg(test)]
pub(crate) fn constant_fields(grid: Grid, p: f64, q: f64, varpi: f64) -> CoefficientFields {
    let periodic = grid.periodic_omega();
    let halo = if periodic { 0 } else { COEFF_HALO };
    let node_rows = grid.rows(Staggering::Node);
    let half_rows = grid.rows(Staggering::OmegaHalf);
    let fill = |rows: usize, value: f64| {
        let mut f = HaloField::zeros(grid.m(), rows, halo, periodic);
        f.values.fill(value);
        f
    };
    CoefficientFields {
        grid,
        beta: 0.0,
        eta0: 1.0,
        rho0_min: 1.0,
        rho0_max: 1.0,
        radius_min: 1.0,
        q_node: fill(node_rows, q),
        q_tilde_node: fill(node_rows, 0.0),
        q_hat_node: fill(node_rows, q),
        q_hat_sq_node: fill(node_rows, q * q),
        q_tilde1_node: fill(node_rows, 0.0),
        q_hat1_node: fill(node_rows, q),
        q_hat1_sq_node: fill(node_rows, q * q),
        q_hat2_node: fill(node_rows, q),
        q_bar_node: fill(node_rows, 0.0),
        varpi_node: fill(node_rows, varpi),
        jacobian_node: fill(node_rows, 1.0),
        rho0_node: fill(node_rows, 1.0),
        inv_rho0_node: fill(node_rows, 1.0),
        eta_node: fill(node_rows, q),
        dp_over_p_theta: fill(node_rows, 0.0),
        dp_over_p_omega: fill(node_rows, 0.0),
        dq_over_q_theta: fill(node_rows, 0.0),
        dq_over_q_omega: fill(node_rows, 0.0),
        p_theta_half: fill(node_rows, p),
        p_tilde_theta_half: fill(node_rows, 0.0),
        p_hat_theta_half: fill(node_rows, p),
        p_hat_sq_theta_half: fill(node_rows, p * p),
        q_theta_half: fill(node_rows, q),
        rho0_theta_half: fill(node_rows, 1.0),
        q_omega_half: fill(half_rows, q),
        q_tilde_omega_half: fill(half_rows, 0.0),
        q_hat_omega_half: fill(half_rows, q),
        q_hat_sq_omega_half: fill(half_rows, q * q),
        eta_omega_half: fill(half_rows, q),
    }
}

type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// An exact solution with analytic partials, plus the reaction coefficient λ,
/// for convergence studies against a known answer.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub u: ScalarField,
    pub u_t: ScalarField,
    pub u_w: ScalarField,
    pub u_tt: ScalarField,
    pub u_ww: ScalarField,
    pub u_tw: ScalarField,
    pub lambda: ScalarField,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .finish()
    }
}

impl ManufacturedCase {
    /// Samples the exact solution at the grid nodes.
    pub fn sample_solution(&self, grid: Grid) -> GridFunction {
        GridFunction::sample(grid, Staggering::Node, |t, w| (self.u)(t, w))
    }
}

/// The source f = −Δ̃₀u + λu expanded by the product rule:
///
/// ```text
/// f = −(1/(R²ρ₀))[pθ uθ + p uθθ + qω uω + q uωω − β(qθ uω + qω uθ + 2q uθω)]
///     + λu.
/// ```
///
/// # Errors
///
/// Propagates frame evaluation failures on degenerate centerlines.
pub fn manufactured_rhs(
    pipe: &PipeGeometry,
    case: &ManufacturedCase,
    theta: f64,
    omega: f64,
) -> Result<f64> {
    let fs = frame_scalars(pipe.centerline(), omega)?;
    let pc = eval_point(pipe, &fs, fs.beta, theta, omega);
    let ut = (case.u_t)(theta, omega);
    let uw = (case.u_w)(theta, omega);
    let utt = (case.u_tt)(theta, omega);
    let uww = (case.u_ww)(theta, omega);
    let utw = (case.u_tw)(theta, omega);
    let div = pc.p_t * ut + pc.p * utt + pc.q_w * uw + pc.q * uww
        - fs.beta * (pc.q_t * uw + pc.q_w * ut + 2.0 * pc.q * utw);
    Ok(-div / (pc.radius * pc.radius * pc.rho0)
        + (case.lambda)(theta, omega) * (case.u)(theta, omega))
}

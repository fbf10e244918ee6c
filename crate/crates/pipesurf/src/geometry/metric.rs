//! Jacobian and metric tensors of the pipe coordinate map (r, θ, ω) → x.

use nalgebra::{Matrix3, Vector3};

use super::frame::frenet_frame;
use super::PipeGeometry;
use crate::{Error, Result};

/// Full first-fundamental-form data at one parameter point.
///
/// Index order is (r, θ, ω). `covariant` and `contravariant` are populated
/// from closed-form entries; `jacobian_matrix` is the actual Jacobian of the
/// coordinate map, so `covariant ≈ Jᵀ J` is a nontrivial consistency check.
#[derive(Debug, Clone)]
pub struct MetricData {
    pub jacobian_matrix: Matrix3<f64>,
    pub jacobian_det: f64,
    pub covariant: Matrix3<f64>,
    pub contravariant: Matrix3<f64>,
    /// ρ(r,θ,ω) = ‖r_c′‖ (1 − r κ R cos θ).
    pub rho: f64,
}

/// Evaluates the Jacobian, its determinant and both metric tensors.
///
/// # Errors
///
/// `NonPositiveJacobian` when the map degenerates at the requested point.
pub fn metric_tensors(pipe: &PipeGeometry, r: f64, theta: f64, omega: f64) -> Result<MetricData> {
    let frame = frenet_frame(pipe.centerline(), omega)?;
    let sec = pipe.cross_section().eval(theta, omega);
    let (s, c) = theta.sin_cos();
    let speed = frame.speed;
    let beta = frame.beta;
    let rho = speed * (1.0 - r * frame.kappa * sec.r * c);
    let jac_det = r * sec.r * sec.r * rho;
    if jac_det <= 0.0 {
        return Err(Error::NonPositiveJacobian {
            r,
            theta,
            omega,
            value: jac_det,
        });
    }

    // Jacobian columns in the moving frame, then rotated to Cartesian axes.
    let col_r = Vector3::new(0.0, sec.r * c, sec.r * s);
    let col_t = Vector3::new(
        0.0,
        r * (sec.rt * c - sec.r * s),
        r * (sec.rt * s + sec.r * c),
    );
    let col_w = Vector3::new(
        rho,
        r * (sec.rw * c - beta * sec.r * s),
        r * (sec.rw * s + beta * sec.r * c),
    );
    let basis = Matrix3::from_columns(&[frame.e1, frame.e2, frame.e3]);
    let jacobian_matrix =
        basis * Matrix3::from_columns(&[col_r, col_t, col_w]);

    let rr = sec.r * sec.r;
    let r_tilde = rr + sec.rt * sec.rt;
    let r_hat = sec.rw - beta * sec.rt;
    let rho2 = rho * rho;

    let g11 = rr;
    let g22 = r * r * r_tilde;
    let g33 = rho2 + r * r * (beta * beta * rr + sec.rw * sec.rw);
    let g12 = r * sec.r * sec.rt;
    let g13 = r * sec.r * sec.rw;
    let g23 = r * r * (beta * rr + sec.rt * sec.rw);
    let covariant = Matrix3::new(g11, g12, g13, g12, g22, g23, g13, g23, g33);

    let gi11 = r_tilde / (rr * rr) + r * r * r_hat * r_hat / (rho2 * rr);
    let gi22 = 1.0 / (r * r * rr) + beta * beta / rho2;
    let gi33 = 1.0 / rho2;
    let gi12 = -sec.rt / (r * rr * sec.r) + r * beta * r_hat / (rho2 * sec.r);
    let gi13 = -r * r_hat / (rho2 * sec.r);
    let gi23 = -beta / rho2;
    let contravariant = Matrix3::new(gi11, gi12, gi13, gi12, gi22, gi23, gi13, gi23, gi33);

    Ok(MetricData {
        jacobian_matrix,
        jacobian_det: jac_det,
        covariant,
        contravariant,
        rho,
    })
}

//! Moving orthonormal frames along a centerline.

use nalgebra::Vector3;

use super::centerline::Centerline;
use crate::{Error, Result};

/// Orthonormal right-handed frame at a point of the centerline, together
/// with the local speed, curvature and torsion.
///
/// `e1` is the unit tangent, `e3` the unit binormal `r′×r″/‖r′×r″‖`, and
/// `e2 = e3 × e1` the unit normal. The speed-scaled scalars `alpha = κ‖r′‖`
/// and `beta = τ‖r′‖` drive the surface operator coefficients.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
    pub e3: Vector3<f64>,
    pub speed: f64,
    pub kappa: f64,
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Computes the moving frame from the first three curve derivatives.
pub fn frenet_frame(curve: &Centerline, omega: f64) -> Result<Frame> {
    let [_, d1, d2, d3] = curve.jets(omega);
    frame_from_derivs(d1, d2, d3, omega)
}

/// Like [`frenet_frame`], but tolerates isolated zero-curvature parameters
/// (the flat side midpoints of squircle-like curves) by taking the frame
/// directions from a nearby regular parameter.
///
/// Near an even-order curvature zero the frame barely rotates (the rotation
/// rate is α = κ‖r′‖), so the probed directions agree with the limit frame to
/// machine accuracy. The tangent and speed are still evaluated exactly at
/// `omega`; the probe only supplies the binormal, re-orthogonalized against
/// the exact tangent.
pub fn frame_allowing_flats(curve: &Centerline, omega: f64) -> Result<Frame> {
    let flat = match frenet_frame(curve, omega) {
        Ok(f) => return Ok(f),
        Err(e @ Error::DegenerateCurve { .. }) => e,
        Err(e) => return Err(e),
    };
    let (wl, wr) = curve.domain();
    let d1 = curve.deriv1(omega);
    let speed = d1.norm();
    if speed < 1e-14 {
        return Err(flat);
    }
    let e1 = d1 / speed;
    let span = (wr - wl).max(1.0);
    for mag in [1e-7, 1e-5, 1e-3, 1e-2] {
        for dir in [1.0, -1.0] {
            let probe = omega + dir * mag * span;
            if !(wl..=wr).contains(&probe) && !curve.closed() {
                continue;
            }
            if let Ok(f) = frenet_frame(curve, probe) {
                let e3 = (f.e3 - e1 * f.e3.dot(&e1)).normalize();
                let e2 = e3.cross(&e1);
                return Ok(Frame {
                    e1,
                    e2,
                    e3,
                    speed,
                    kappa: f.kappa,
                    tau: f.tau,
                    alpha: f.kappa * speed,
                    beta: f.tau * speed,
                });
            }
        }
    }
    Err(flat)
}

pub(crate) fn frame_from_derivs(
    d1: Vector3<f64>,
    d2: Vector3<f64>,
    d3: Vector3<f64>,
    omega: f64,
) -> Result<Frame> {
    let speed = d1.norm();
    if speed < 1e-14 {
        return Err(Error::DegenerateCurve {
            omega,
            reason: "zero speed".into(),
        });
    }
    let cross = d1.cross(&d2);
    let cross_norm = cross.norm();
    if cross_norm < 1e-14 {
        return Err(Error::DegenerateCurve {
            omega,
            reason: "zero curvature".into(),
        });
    }
    let e1 = d1 / speed;
    let e3 = cross / cross_norm;
    let e2 = e3.cross(&e1);
    let kappa = cross_norm / (speed * speed * speed);
    let tau = cross.dot(&d3) / (cross_norm * cross_norm);
    Ok(Frame {
        e1,
        e2,
        e3,
        speed,
        kappa,
        tau,
        alpha: kappa * speed,
        beta: tau * speed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::centerline::{catalog_centerline, circle, helix, CATALOG_CENTERLINES};

    #[test]
    fn circle_frame_constants() {
        let c = circle(2.0).unwrap();
        for k in 0..7 {
            let w = 0.9 * k as f64;
            let f = frenet_frame(&c, w).unwrap();
            assert!((f.kappa - 0.5).abs() < 1e-14);
            assert!(f.tau.abs() < 1e-14);
            assert!((f.speed - 2.0).abs() < 1e-14);
            // e2 points towards the center and e3 is the vertical axis.
            let (s, co) = w.sin_cos();
            assert!((f.e2 - Vector3::new(-co, -s, 0.0)).norm() < 1e-14);
            assert!((f.e3 - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn helix_frame_reference_values() {
        // a = 8, b = 1: κ = 8/65, τ = 1/65, β = 1/√65.
        let c = helix(8.0, 1.0, (0.0, 8.0 * std::f64::consts::PI)).unwrap();
        let f = frenet_frame(&c, 0.0).unwrap();
        let r65 = 65f64.sqrt();
        assert!((f.kappa - 8.0 / 65.0).abs() < 1e-15);
        assert!((f.tau - 1.0 / 65.0).abs() < 1e-15);
        assert!((f.beta - 1.0 / r65).abs() < 1e-15);
        assert!((f.e1 - Vector3::new(0.0, 8.0 / r65, 1.0 / r65)).norm() < 1e-15);
        assert!((f.e2 - Vector3::new(-1.0, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn catalog_frames_are_orthonormal_and_right_handed() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x0f2a_31);
        let curves: Vec<_> = CATALOG_CENTERLINES
            .iter()
            .map(|kind| (kind, catalog_centerline(kind).unwrap()))
            .collect();
        let mut flats = 0usize;
        for _ in 0..10_000 {
            let (kind, curve) = &curves[rng.random_range(0..curves.len())];
            let (wl, wr) = curve.domain();
            let w = rng.random_range(wl..wr);
            // The squircle family has four isolated zero-curvature points
            // where the frame is undefined; such draws are skipped.
            let f = match frenet_frame(curve, w) {
                Ok(f) => f,
                Err(Error::DegenerateCurve { .. }) => {
                    flats += 1;
                    continue;
                }
                Err(e) => panic!("{kind}: {e}"),
            };
            for (u, v) in [(f.e1, f.e2), (f.e1, f.e3), (f.e2, f.e3)] {
                assert!(u.dot(&v).abs() < 1e-10, "{kind}: frame not orthogonal");
            }
            for u in [f.e1, f.e2, f.e3] {
                assert!((u.norm() - 1.0).abs() < 1e-10, "{kind}: frame not unit");
            }
            assert!(
                (f.e1.cross(&f.e2) - f.e3).norm() < 1e-10,
                "{kind}: frame not right-handed"
            );
            assert!(f.kappa > 0.0, "{kind}: curvature must be positive");
        }
        assert!(flats < 40, "degenerate draws should be rare, got {flats}");
    }

    #[test]
    fn flat_fallback_recovers_the_limit_frame() {
        // Squircle side midpoint ω = 3π/2: κ → 0 there, but the limit frame
        // exists (planar convex curve, binormal +z).
        let curve = catalog_centerline("squircle").unwrap();
        let w = 1.5 * std::f64::consts::PI;
        assert!(matches!(
            frenet_frame(&curve, w),
            Err(Error::DegenerateCurve { .. })
        ));
        let f = frame_allowing_flats(&curve, w).unwrap();
        assert!((f.e3 - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-10);
        assert!((f.e1 - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-10);
        assert!((f.e2 - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-10);
        assert!(f.kappa.abs() < 1e-8);
        // Regular parameters pass through untouched.
        let w_reg = 1.1;
        let a = frenet_frame(&curve, w_reg).unwrap();
        let b = frame_allowing_flats(&curve, w_reg).unwrap();
        assert_eq!(a.e2, b.e2);
        assert_eq!(a.kappa, b.kappa);
    }

    #[test]
    fn planar_catalog_curves_have_zero_torsion() {
        for kind in [
            "circle",
            "ellipse",
            "squircle",
            "curved_triangle",
            "rounded_l",
            "rounded_v",
        ] {
            let curve = catalog_centerline(kind).unwrap();
            let (wl, wr) = curve.domain();
            for k in 0..32 {
                let w = wl + (wr - wl) * (k as f64 + 0.5) / 32.0;
                let f = frenet_frame(&curve, w).unwrap();
                assert!(f.tau.abs() < 1e-10, "{kind}: tau = {} at {w}", f.tau);
            }
        }
    }

    #[test]
    fn straight_segment_is_degenerate() {
        let line = crate::geometry::centerline::custom_centerline(
            "line",
            (0.0, 1.0),
            false,
            |w| {
                [
                    Vector3::new(w, 0.0, 0.0),
                    Vector3::new(1.0, 0.0, 0.0),
                    Vector3::zeros(),
                    Vector3::zeros(),
                ]
            },
        );
        assert!(matches!(
            frenet_frame(&line, 0.5),
            Err(Error::DegenerateCurve { .. })
        ));
    }
}

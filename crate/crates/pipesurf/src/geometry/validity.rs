//! Advisory geometry scans: Jacobian positivity, the cross-section size
//! bound, and the self-intersection pitch bound for helical pipes.

use std::f64::consts::PI;

use super::frame::frame_allowing_flats;
use super::{BoundaryMode, PipeGeometry};

/// One named check with a human-readable outcome.
#[derive(Debug, Clone)]
pub struct ValidityCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Scan outcome. Advisory: the solver itself only refuses geometry whose
/// Jacobian is non-positive at actual grid nodes.
#[derive(Debug, Clone)]
pub struct ValidityReport {
    pub checks: Vec<ValidityCheck>,
    /// Minimum of 𝕁 over the scan (r ∈ {1, 1/2}).
    pub min_jacobian: f64,
}

impl ValidityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One line per check, prefixed with its status.
    pub fn summary(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "[{}] {}: {}",
                    if c.passed { "pass" } else { "FAIL" },
                    c.name,
                    c.detail
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Scans the pipe on a `theta_samples × omega_samples` grid (at least 64
/// each). Checks, in order:
///
/// 1. 𝕁 = rR²ρ > 0 at r = 1 and r = 1/2;
/// 2. R(θ,ω) < κ(ω)⁻¹ sec θ on the outward half θ ∈ [0,π/2) ∪ (3π/2,2π),
///    which makes 𝕁 > 0 automatic (the inward half needs no condition);
/// 3. for circular helices, R(θ,ω) + R(θ, ω − 2πa²/(a²+b²)) < 2πab/√(a²+b²),
///    keeping consecutive turns from touching.
pub fn validate_geometry(
    pipe: &PipeGeometry,
    theta_samples: usize,
    omega_samples: usize,
) -> ValidityReport {
    let nt = theta_samples.max(64);
    let nw = omega_samples.max(64);
    let (wl, wr) = pipe.centerline().domain();
    let periodic = pipe.boundary_mode() == BoundaryMode::PeriodicOmega;
    let omega_at = |j: usize| {
        if periodic {
            wl + (wr - wl) * j as f64 / nw as f64
        } else {
            wl + (wr - wl) * j as f64 / (nw - 1) as f64
        }
    };

    let mut checks = Vec::new();

    let mut min_j = f64::INFINITY;
    let mut min_j_at = (1.0, 0.0, wl);
    let mut frame_failure: Option<String> = None;
    // Outward-half margin: max of R κ cosθ, which must stay below 1.
    let mut worst_margin = f64::NEG_INFINITY;
    let mut worst_at = (0.0, wl);

    'scan: for j in 0..nw {
        let w = omega_at(j);
        let frame = match frame_allowing_flats(pipe.centerline(), w) {
            Ok(f) => f,
            Err(e) => {
                frame_failure = Some(format!("{e}"));
                break 'scan;
            }
        };
        for i in 0..nt {
            let t = 2.0 * PI * i as f64 / nt as f64;
            let radius = pipe.cross_section().radius(t, w);
            let cos_t = t.cos();
            for r in [1.0, 0.5] {
                let rho = frame.speed * (1.0 - r * frame.kappa * radius * cos_t);
                let jac = r * radius * radius * rho;
                if jac < min_j {
                    min_j = jac;
                    min_j_at = (r, t, w);
                }
            }
            if cos_t > 0.0 {
                let margin = radius * frame.kappa * cos_t;
                if margin > worst_margin {
                    worst_margin = margin;
                    worst_at = (t, w);
                }
            }
        }
    }

    if let Some(msg) = frame_failure {
        checks.push(ValidityCheck {
            name: "jacobian_positivity",
            passed: false,
            detail: format!("centerline frame failed during scan: {msg}"),
        });
        checks.push(ValidityCheck {
            name: "cross_section_bound",
            passed: false,
            detail: "not evaluated: centerline frame failed".to_string(),
        });
        return ValidityReport {
            checks,
            min_jacobian: f64::NAN,
        };
    }

    checks.push(ValidityCheck {
        name: "jacobian_positivity",
        passed: min_j > 0.0,
        detail: format!(
            "min 𝕁 = {:.6e} at (r, θ, ω) = ({}, {:.4}, {:.4})",
            min_j, min_j_at.0, min_j_at.1, min_j_at.2
        ),
    });
    checks.push(ValidityCheck {
        name: "cross_section_bound",
        passed: worst_margin < 1.0,
        detail: format!(
            "max R κ cosθ = {:.6} at (θ, ω) = ({:.4}, {:.4}); bound requires < 1",
            worst_margin, worst_at.0, worst_at.1
        ),
    });

    if let Some((a, b)) = pipe.centerline().helix_params() {
        let shift = 2.0 * PI * a * a / (a * a + b * b);
        let bound = 2.0 * PI * a * b / (a * a + b * b).sqrt();
        let mut worst_sum = f64::NEG_INFINITY;
        for j in 0..nw {
            let w = omega_at(j);
            for i in 0..nt {
                let t = 2.0 * PI * i as f64 / nt as f64;
                let sum = pipe.cross_section().radius(t, w)
                    + pipe.cross_section().radius(t, w - shift);
                if sum > worst_sum {
                    worst_sum = sum;
                }
            }
        }
        checks.push(ValidityCheck {
            name: "helix_pitch",
            passed: worst_sum < bound,
            detail: format!(
                "max R(θ,ω) + R(θ,ω−2πa²/(a²+b²)) = {worst_sum:.6}; bound 2πab/√(a²+b²) = {bound:.6}"
            ),
        });
    }

    ValidityReport {
        checks,
        min_jacobian: min_j,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{circle, circular, helix, BoundaryMode};

    fn torus_with_radius(r0: f64) -> PipeGeometry {
        PipeGeometry::new(
            circle(2.0).unwrap(),
            circular(r0).unwrap(),
            BoundaryMode::PeriodicOmega,
        )
        .unwrap()
    }

    #[test]
    fn modest_torus_passes_all_checks() {
        let report = validate_geometry(&torus_with_radius(0.5), 128, 128);
        assert!(report.passed(), "{}", report.summary());
        // min 𝕁 at r = 1/2, θ = 0: (1/2)(1/4)·2·(1 − 1/8) = 0.21875.
        assert!((report.min_jacobian - 0.21875).abs() < 1e-12);
    }

    #[test]
    fn oversized_section_fails_the_bound_at_theta_zero() {
        let report = validate_geometry(&torus_with_radius(2.5), 128, 128);
        assert!(!report.passed());
        let bound = report
            .checks
            .iter()
            .find(|c| c.name == "cross_section_bound")
            .unwrap();
        // R κ cosθ = 2.5 · 0.5 · 1 = 1.25 ≥ 1 at θ = 0.
        assert!(!bound.passed);
        assert!(bound.detail.contains("1.25"), "{}", bound.detail);
        let jac = report
            .checks
            .iter()
            .find(|c| c.name == "jacobian_positivity")
            .unwrap();
        assert!(!jac.passed);
    }

    #[test]
    fn helix_pitch_check_reports_the_remark_inequality() {
        let pipe = PipeGeometry::new(
            helix(8.0, 1.0, (0.0, 8.0 * PI)).unwrap(),
            circular(0.5).unwrap(),
            BoundaryMode::DirichletOmega,
        )
        .unwrap();
        let report = validate_geometry(&pipe, 64, 64);
        assert!(report.passed(), "{}", report.summary());
        let pitch = report
            .checks
            .iter()
            .find(|c| c.name == "helix_pitch")
            .expect("helical pipes must carry the pitch check");
        // Sum of radii is 1.0; bound 2π·8/√65 ≈ 6.2347.
        assert!(pitch.detail.contains("1.000000"), "{}", pitch.detail);
        assert!(pitch.detail.contains("6.2346"), "{}", pitch.detail);
    }

    #[test]
    fn non_helical_pipes_have_no_pitch_check() {
        let report = validate_geometry(&torus_with_radius(0.5), 64, 64);
        assert!(report.checks.iter().all(|c| c.name != "helix_pitch"));
    }
}

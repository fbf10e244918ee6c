//! Pipe geometry: centerline curves, moving frames, cross-section profiles,
//! the coordinate map (r, θ, ω) → ℝ³ and its metric, validity scans, and
//! surface mesh export.

pub mod centerline;
pub mod frame;
pub(crate) mod jet;
pub mod mesh;
pub mod metric;
pub mod section;
pub mod validity;

pub use centerline::{
    catalog_centerline, circle, custom_centerline, helix, Centerline, CurveEval, FrameScalarMode,
    CATALOG_CENTERLINES,
};
pub use frame::{frame_allowing_flats, frenet_frame, Frame};
pub use mesh::{export_mesh, export_mesh_with_scalar, MeshFormat};
pub use metric::{metric_tensors, MetricData};
pub use section::{
    catalog_cross_section, circular, custom_cross_section, random, sine, superellipse,
    CrossSection, SectionEval, SectionJet, SMOOTH_SECTIONS,
};
pub use validity::{validate_geometry, ValidityCheck, ValidityReport};

use nalgebra::Vector3;

use crate::{Error, Result};

/// Behaviour of the solution in the ω direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Open pipe: homogeneous Dirichlet data at ω = ω_l and ω = ω_r.
    DirichletOmega,
    /// Closed pipe: everything is periodic over the ω interval.
    PeriodicOmega,
}

/// A pipe: centerline, cross-section profile and ω-boundary behaviour.
#[derive(Debug, Clone)]
pub struct PipeGeometry {
    centerline: Centerline,
    cross_section: CrossSection,
    boundary_mode: BoundaryMode,
}

impl PipeGeometry {
    /// # Errors
    ///
    /// `InvalidParams` when `PeriodicOmega` is requested on an open centerline.
    pub fn new(
        centerline: Centerline,
        cross_section: CrossSection,
        boundary_mode: BoundaryMode,
    ) -> Result<Self> {
        if boundary_mode == BoundaryMode::PeriodicOmega && !centerline.closed() {
            return Err(Error::InvalidParams(format!(
                "periodic_omega requires a closed centerline, got {}",
                centerline.kind()
            )));
        }
        Ok(PipeGeometry {
            centerline,
            cross_section,
            boundary_mode,
        })
    }

    pub fn centerline(&self) -> &Centerline {
        &self.centerline
    }

    pub fn cross_section(&self) -> &CrossSection {
        &self.cross_section
    }

    pub fn boundary_mode(&self) -> BoundaryMode {
        self.boundary_mode
    }
}

/// Cartesian point of the coordinate map,
/// `x = r_c(ω) + rR(θ,ω)(cosθ e₂ + sinθ e₃)`.
///
/// `rR` is computed as a single product, so scaling `(R, r) → (cR, r/c)` by a
/// power of two reproduces the same floating-point result bit for bit.
///
/// # Panics
///
/// Panics when the centerline is degenerate at `omega` (zero speed, or a
/// curvature zero that is not isolated); construct geometry through the
/// catalog or run [`validate_geometry`] first to rule that out.
pub fn surface_point(pipe: &PipeGeometry, r: f64, theta: f64, omega: f64) -> Vector3<f64> {
    let f = frame_allowing_flats(pipe.centerline(), omega)
        .expect("centerline must be regular at the requested omega");
    let radius = r * pipe.cross_section().radius(theta, omega);
    let (s, c) = theta.sin_cos();
    pipe.centerline().position(omega) + f.e2 * (radius * c) + f.e3 * (radius * s)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// A spread of valid pipes covering every catalog centerline and
    /// cross-section. Sharp centerlines get thin circular sections so the
    /// coordinate map stays injective on most of the domain.
    pub fn catalog_pipes() -> Vec<(String, PipeGeometry)> {
        let mut pipes = Vec::new();
        let mut push = |name: &str, curve: Centerline, section: CrossSection| {
            let mode = if curve.closed() {
                BoundaryMode::PeriodicOmega
            } else {
                BoundaryMode::DirichletOmega
            };
            pipes.push((
                name.to_string(),
                PipeGeometry::new(curve, section, mode).unwrap(),
            ));
        };

        let torus = || catalog_centerline("circle").unwrap();
        for kind in ["circular", "cardioid", "butterfly", "star", "sine", "random"] {
            push(
                &format!("circle+{kind}"),
                torus(),
                catalog_cross_section(kind, 7).unwrap(),
            );
        }
        push("circle+superellipse", torus(), superellipse(4.0).unwrap());

        let helix_curve = || catalog_centerline("cylindrical_helix").unwrap();
        push(
            "cylindrical_helix+circular",
            helix_curve(),
            circular(0.5).unwrap(),
        );
        push(
            "cylindrical_helix+star",
            helix_curve(),
            catalog_cross_section("star", 7).unwrap(),
        );
        for (kind, r0) in [
            ("conical_helix", 0.2),
            ("rounded_l", 0.05),
            ("rounded_v", 0.1),
            ("squircle", 0.05),
            ("ellipse", 0.2),
            ("curved_triangle", 0.1),
        ] {
            push(
                &format!("{kind}+circular"),
                catalog_centerline(kind).unwrap(),
                circular(r0).unwrap(),
            );
        }
        pipes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_surface_point_reference() {
        let pipe = PipeGeometry::new(
            circle(2.0).unwrap(),
            circular(0.5).unwrap(),
            BoundaryMode::PeriodicOmega,
        )
        .unwrap();
        let x = surface_point(&pipe, 1.0, 0.0, 0.0);
        assert!((x - Vector3::new(1.5, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn helix_surface_point_reference() {
        let pipe = PipeGeometry::new(
            helix(8.0, 1.0, (0.0, 8.0 * std::f64::consts::PI)).unwrap(),
            circular(0.5).unwrap(),
            BoundaryMode::DirichletOmega,
        )
        .unwrap();
        let x = surface_point(&pipe, 1.0, std::f64::consts::FRAC_PI_2, 0.0);
        let r65 = 65f64.sqrt();
        let expect = Vector3::new(8.0, -1.0 / (2.0 * r65), 4.0 / r65);
        assert!((x - expect).norm() < 1e-14, "{x:?}");
    }

    #[test]
    fn surface_point_scaling_invariance_is_exact() {
        // rR enters only as a product, so (R, r) -> (cR, r/c) with c a power
        // of two must reproduce identical bits.
        for c in [2.0f64, 8.0, 0.25] {
            let base = PipeGeometry::new(
                circle(2.0).unwrap(),
                circular(0.5).unwrap(),
                BoundaryMode::PeriodicOmega,
            )
            .unwrap();
            let scaled = PipeGeometry::new(
                circle(2.0).unwrap(),
                circular(0.5 * c).unwrap(),
                BoundaryMode::PeriodicOmega,
            )
            .unwrap();
            for k in 0..40 {
                let r = 0.0625 + 0.9 * (k as f64 / 40.0);
                let t = 6.2 * k as f64 / 40.0;
                let w = 6.2 * ((k * 13) % 40) as f64 / 40.0;
                let a = surface_point(&base, r, t, w);
                let b = surface_point(&scaled, r / c, t, w);
                assert_eq!(a, b, "c={c} r={r} theta={t} omega={w}");
            }
        }
    }

    #[test]
    fn periodic_mode_requires_closed_centerline() {
        let open = helix(8.0, 1.0, (0.0, 1.0)).unwrap();
        assert!(matches!(
            PipeGeometry::new(open, circular(0.5).unwrap(), BoundaryMode::PeriodicOmega),
            Err(Error::InvalidParams(_))
        ));
    }
}

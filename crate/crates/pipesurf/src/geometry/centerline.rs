//! Centerline curves: catalog entries plus custom closed-form curves.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;

use super::jet::Jet3;
use crate::{Error, Result};

/// Evaluates a space curve together with its first three ω-derivatives.
pub trait CurveEval: Send + Sync {
    /// Returns `[position, deriv1, deriv2, deriv3]` at `omega`.
    fn jets(&self, omega: f64) -> [Vector3<f64>; 4];
}

/// How the frame scalars κ, τ, ‖r_c′‖ behave along the curve; lets constant
/// cases (circles, helices) report exactly zero ω-derivatives instead of
/// finite-difference noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameScalarMode {
    /// κ, τ and speed are constant in ω.
    Constant,
    /// General curve: scalar ω-derivatives come from closed forms where
    /// available and high-order finite differences otherwise.
    General,
}

/// A regular parametric space curve `r_c(ω)` with analytic derivatives.
#[derive(Clone)]
pub struct Centerline {
    kind: String,
    domain: (f64, f64),
    closed: bool,
    scalar_mode: FrameScalarMode,
    eval: Arc<dyn CurveEval>,
    /// `(a, b)` when the curve is a circular helix; drives the pitch check.
    helix_params: Option<(f64, f64)>,
}

impl fmt::Debug for Centerline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Centerline")
            .field("kind", &self.kind)
            .field("domain", &self.domain)
            .field("closed", &self.closed)
            .finish()
    }
}

impl Centerline {
    pub fn new(
        kind: impl Into<String>,
        domain: (f64, f64),
        closed: bool,
        scalar_mode: FrameScalarMode,
        eval: Arc<dyn CurveEval>,
    ) -> Self {
        Centerline {
            kind: kind.into(),
            domain,
            closed,
            scalar_mode,
            eval,
            helix_params: None,
        }
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    /// `(a, b)` for circular helices, `None` otherwise.
    pub fn helix_params(&self) -> Option<(f64, f64)> {
        self.helix_params
    }

    /// Parameter interval `[ω_l, ω_r]`; for closed curves the endpoints are
    /// identified.
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn scalar_mode(&self) -> FrameScalarMode {
        self.scalar_mode
    }

    pub fn position(&self, omega: f64) -> Vector3<f64> {
        self.eval.jets(omega)[0]
    }

    pub fn deriv1(&self, omega: f64) -> Vector3<f64> {
        self.eval.jets(omega)[1]
    }

    pub fn deriv2(&self, omega: f64) -> Vector3<f64> {
        self.eval.jets(omega)[2]
    }

    pub fn deriv3(&self, omega: f64) -> Vector3<f64> {
        self.eval.jets(omega)[3]
    }

    /// All four jets in one evaluation (cheaper than four calls).
    pub fn jets(&self, omega: f64) -> [Vector3<f64>; 4] {
        self.eval.jets(omega)
    }
}

fn vec_jets(x: Jet3, y: Jet3, z: Jet3) -> [Vector3<f64>; 4] {
    [
        Vector3::new(x.f, y.f, z.f),
        Vector3::new(x.d1, y.d1, z.d1),
        Vector3::new(x.d2, y.d2, z.d2),
        Vector3::new(x.d3, y.d3, z.d3),
    ]
}

struct Circle {
    a: f64,
}

impl CurveEval for Circle {
    fn jets(&self, w: f64) -> [Vector3<f64>; 4] {
        let (s, c) = w.sin_cos();
        let a = self.a;
        [
            Vector3::new(a * c, a * s, 0.0),
            Vector3::new(-a * s, a * c, 0.0),
            Vector3::new(-a * c, -a * s, 0.0),
            Vector3::new(a * s, -a * c, 0.0),
        ]
    }
}

struct Helix {
    a: f64,
    b: f64,
}

impl CurveEval for Helix {
    fn jets(&self, w: f64) -> [Vector3<f64>; 4] {
        let (s, c) = w.sin_cos();
        let (a, b) = (self.a, self.b);
        [
            Vector3::new(a * c, a * s, b * w),
            Vector3::new(-a * s, a * c, b),
            Vector3::new(-a * c, -a * s, 0.0),
            Vector3::new(a * s, -a * c, 0.0),
        ]
    }
}

struct Ellipse {
    a: f64,
    b: f64,
}

impl CurveEval for Ellipse {
    fn jets(&self, w: f64) -> [Vector3<f64>; 4] {
        let (s, c) = w.sin_cos();
        let (a, b) = (self.a, self.b);
        [
            Vector3::new(a * c, b * s, 0.0),
            Vector3::new(-a * s, b * c, 0.0),
            Vector3::new(-a * c, -b * s, 0.0),
            Vector3::new(a * s, -b * c, 0.0),
        ]
    }
}

/// `(cos^p ω + sin^p ω)^(-1/p) (cos ω, sin ω, 0)`; smooth for even p ≥ 2.
struct Squircle {
    p: u32,
}

impl CurveEval for Squircle {
    fn jets(&self, w: f64) -> [Vector3<f64>; 4] {
        let v = Jet3::variable(w);
        let (s, c) = (v.sin(), v.cos());
        let radius = (c.powi(self.p) + s.powi(self.p)).powf(-1.0 / self.p as f64);
        vec_jets(radius * c, radius * s, Jet3::constant(0.0))
    }
}

/// `(ω, 2√((ω−3)² + ε²), 0)` with ε = 1/2.
struct RoundedV;

impl CurveEval for RoundedV {
    fn jets(&self, w: f64) -> [Vector3<f64>; 4] {
        let v = Jet3::variable(w);
        let shifted = v - Jet3::constant(3.0);
        let y = (shifted * shifted + Jet3::constant(0.25)).sqrt() * 2.0;
        vec_jets(v, y, Jet3::constant(0.0))
    }
}

/// `(√3/3 ω cos ω, √3/3 ω sin ω, ω)`.
struct ConicalHelix;

impl CurveEval for ConicalHelix {
    fn jets(&self, w: f64) -> [Vector3<f64>; 4] {
        let v = Jet3::variable(w);
        let k = 3f64.sqrt() / 3.0;
        vec_jets(v * v.cos() * k, v * v.sin() * k, v)
    }
}

/// `(2 cos ω, sin ω / (1 − k sin ω), 0)`.
struct CurvedTriangle {
    k: f64,
}

impl CurveEval for CurvedTriangle {
    fn jets(&self, w: f64) -> [Vector3<f64>; 4] {
        let v = Jet3::variable(w);
        let s = v.sin();
        let y = s / (Jet3::constant(1.0) - s * self.k);
        vec_jets(v.cos() * 2.0, y, Jet3::constant(0.0))
    }
}

/// Custom curve built from user-supplied jet closures.
struct CustomCurve<F: Fn(f64) -> [Vector3<f64>; 4] + Send + Sync>(F);

impl<F: Fn(f64) -> [Vector3<f64>; 4] + Send + Sync> CurveEval for CustomCurve<F> {
    fn jets(&self, omega: f64) -> [Vector3<f64>; 4] {
        (self.0)(omega)
    }
}

/// Circle of radius `a` in the xy-plane, the torus centerline.
pub fn circle(a: f64) -> Result<Centerline> {
    if a <= 0.0 {
        return Err(Error::InvalidParams(format!("circle radius a = {a} <= 0")));
    }
    Ok(Centerline::new(
        format!("circle(a={a})"),
        (0.0, 2.0 * PI),
        true,
        FrameScalarMode::Constant,
        Arc::new(Circle { a }),
    ))
}

/// Circular helix `(a cos ω, a sin ω, b ω)` on the given interval.
pub fn helix(a: f64, b: f64, domain: (f64, f64)) -> Result<Centerline> {
    if a <= 0.0 {
        return Err(Error::InvalidParams(format!("helix radius a = {a} <= 0")));
    }
    if domain.1 <= domain.0 {
        return Err(Error::InvalidParams(format!(
            "helix domain [{}, {}] is empty",
            domain.0, domain.1
        )));
    }
    let mut curve = Centerline::new(
        format!("helix(a={a},b={b})"),
        domain,
        false,
        FrameScalarMode::Constant,
        Arc::new(Helix { a, b }),
    );
    curve.helix_params = Some((a, b));
    Ok(curve)
}

/// Curve catalog keyed by name. Parameters not listed use the tabulated
/// defaults.
pub fn catalog_centerline(kind: &str) -> Result<Centerline> {
    match kind {
        "rounded_l" => Ok(Centerline::new(
            "rounded_l",
            (PI, 1.5 * PI),
            false,
            FrameScalarMode::General,
            Arc::new(Squircle { p: 8 }),
        )),
        "rounded_v" => Ok(Centerline::new(
            "rounded_v",
            (0.0, 6.0),
            false,
            FrameScalarMode::General,
            Arc::new(RoundedV),
        )),
        "cylindrical_helix" => helix(8.0, 1.0, (0.0, 8.0 * PI)),
        "conical_helix" => Ok(Centerline::new(
            "conical_helix",
            (0.0, 8.0 * PI),
            false,
            FrameScalarMode::General,
            Arc::new(ConicalHelix),
        )),
        "circle" => circle(2.0),
        "squircle" => Ok(Centerline::new(
            "squircle",
            (0.0, 2.0 * PI),
            true,
            FrameScalarMode::General,
            Arc::new(Squircle { p: 8 }),
        )),
        "ellipse" => Ok(Centerline::new(
            "ellipse",
            (0.0, 2.0 * PI),
            true,
            FrameScalarMode::General,
            Arc::new(Ellipse { a: 2.0, b: 1.0 }),
        )),
        "curved_triangle" => Ok(Centerline::new(
            "curved_triangle",
            (0.0, 2.0 * PI),
            true,
            FrameScalarMode::General,
            Arc::new(CurvedTriangle { k: 0.5 }),
        )),
        other => Err(Error::UnknownKind(other.to_string())),
    }
}

/// Builds a custom centerline from a jet closure.
pub fn custom_centerline(
    name: impl Into<String>,
    domain: (f64, f64),
    closed: bool,
    jets: impl Fn(f64) -> [Vector3<f64>; 4] + Send + Sync + 'static,
) -> Centerline {
    Centerline::new(
        name,
        domain,
        closed,
        FrameScalarMode::General,
        Arc::new(CustomCurve(jets)),
    )
}

/// All catalog names, for CLI listings and sweep tests.
pub const CATALOG_CENTERLINES: &[&str] = &[
    "rounded_l",
    "rounded_v",
    "cylindrical_helix",
    "conical_helix",
    "circle",
    "squircle",
    "ellipse",
    "curved_triangle",
];

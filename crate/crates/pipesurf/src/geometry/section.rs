//! Cross-section profiles R(θ, ω) with partial derivatives through second
//! order.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::jet::Jet2;
use crate::{Error, Result};

/// Value and partials of the radius profile at one (θ, ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionJet {
    pub r: f64,
    pub rt: f64,
    pub rw: f64,
    pub rtt: f64,
    pub rtw: f64,
    pub rww: f64,
}

impl SectionJet {
    pub const fn constant(r: f64) -> Self {
        SectionJet {
            r,
            rt: 0.0,
            rw: 0.0,
            rtt: 0.0,
            rtw: 0.0,
            rww: 0.0,
        }
    }

    fn from_jet2(j: Jet2) -> Self {
        SectionJet {
            r: j.f,
            rt: j.ft,
            rw: j.fw,
            rtt: j.ftt,
            rtw: j.ftw,
            rww: j.fww,
        }
    }
}

/// Evaluates the radius profile together with its partials.
pub trait SectionEval: Send + Sync {
    fn jet(&self, theta: f64, omega: f64) -> SectionJet;
}

/// A 2π-periodic-in-θ positive radius profile.
#[derive(Clone)]
pub struct CrossSection {
    kind: String,
    eval: Arc<dyn SectionEval>,
}

impl fmt::Debug for CrossSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CrossSection")
            .field("kind", &self.kind)
            .finish()
    }
}

impl CrossSection {
    pub fn new(kind: impl Into<String>, eval: Arc<dyn SectionEval>) -> Self {
        CrossSection {
            kind: kind.into(),
            eval,
        }
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn eval(&self, theta: f64, omega: f64) -> SectionJet {
        self.eval.jet(theta, omega)
    }

    pub fn radius(&self, theta: f64, omega: f64) -> f64 {
        self.eval.jet(theta, omega).r
    }

    /// `R² + (∂θR)²`, the tangential metric factor.
    pub fn r_tilde(&self, theta: f64, omega: f64) -> f64 {
        let j = self.eval.jet(theta, omega);
        j.r * j.r + j.rt * j.rt
    }

    /// `∂ωR − β ∂θR`, the twist-corrected axial slope.
    pub fn r_hat(&self, theta: f64, omega: f64, beta: f64) -> f64 {
        let j = self.eval.jet(theta, omega);
        j.rw - beta * j.rt
    }
}

struct Circular {
    r0: f64,
}

impl SectionEval for Circular {
    fn jet(&self, _t: f64, _w: f64) -> SectionJet {
        SectionJet::constant(self.r0)
    }
}

/// `2/5 − (1/3) sin θ`.
struct Cardioid;

impl SectionEval for Cardioid {
    fn jet(&self, t: f64, _w: f64) -> SectionJet {
        let (s, c) = t.sin_cos();
        SectionJet {
            r: 0.4 - s / 3.0,
            rt: -c / 3.0,
            rw: 0.0,
            rtt: s / 3.0,
            rtw: 0.0,
            rww: 0.0,
        }
    }
}

/// `(1/5) e^{cos θ} − (1/5) cos 4θ + (3/5) sin⁵(θ/2)`.
///
/// The last term has raw period 4π; θ is reduced to [0, 2π) first, which
/// makes the profile 2π-periodic (C⁴ across the seam).
struct Butterfly;

impl SectionEval for Butterfly {
    fn jet(&self, t: f64, _w: f64) -> SectionJet {
        let t = t.rem_euclid(2.0 * PI);
        let v = Jet2::theta(t);
        let j = v.cos().exp() * 0.2 - (v * 4.0).cos() * 0.2 + (v * 0.5).sin().powi(5) * 0.6;
        SectionJet::from_jet2(j)
    }
}

/// `3/5 + (3/40) sin 5θ`.
struct Star;

impl SectionEval for Star {
    fn jet(&self, t: f64, _w: f64) -> SectionJet {
        let (s, c) = (5.0 * t).sin_cos();
        SectionJet {
            r: 0.6 + 0.075 * s,
            rt: 0.375 * c,
            rw: 0.0,
            rtt: -1.875 * s,
            rtw: 0.0,
            rww: 0.0,
        }
    }
}

/// `1/2 + (A/2) sin(k ω)`.
struct Sine {
    a: f64,
    k: f64,
}

impl SectionEval for Sine {
    fn jet(&self, _t: f64, w: f64) -> SectionJet {
        let (s, c) = (self.k * w).sin_cos();
        let half_a = 0.5 * self.a;
        SectionJet {
            r: 0.5 + half_a * s,
            rt: 0.0,
            rw: half_a * self.k * c,
            rtt: 0.0,
            rtw: 0.0,
            rww: -half_a * self.k * self.k * s,
        }
    }
}

/// `1/2 + Σ (Aₙ/2) sin(aₙθ + bₙω + cₙ)` with Aₙ = 1/(σn), integer
/// frequencies and uniform phases drawn from a seeded generator.
struct Random {
    terms: Vec<(f64, f64, f64, f64)>, // (A_n/2, a_n, b_n, c_n)
}

impl SectionEval for Random {
    fn jet(&self, t: f64, w: f64) -> SectionJet {
        let (jt, jw) = (Jet2::theta(t), Jet2::omega(w));
        let mut out = Jet2::constant(0.5);
        for &(half_amp, a, b, c) in &self.terms {
            out = out + (jt * a + jw * b + Jet2::constant(c)).sin() * half_amp;
        }
        SectionJet::from_jet2(out)
    }
}

/// `(|cos θ|^γ + |sin θ|^γ)^(−1/γ)`: the profile whose smoothness is tuned
/// by γ (kinked for γ < 2, analytic for even integers).
///
/// The value is exact; partials come from 6th-order centered differences of
/// the exact value, which stay finite at the kinks where the one-sided
/// analytic derivatives blow up.
struct Superellipse {
    gamma: f64,
}

impl Superellipse {
    fn value(&self, t: f64) -> f64 {
        let g = self.gamma;
        (t.cos().abs().powf(g) + t.sin().abs().powf(g)).powf(-1.0 / g)
    }
}

/// 6th-order first- and second-derivative stencil weights at step `h`.
const FD_STEP: f64 = 1e-3;

fn fd6(value: impl Fn(f64) -> f64, x: f64) -> (f64, f64) {
    let h = FD_STEP;
    let f = |k: f64| value(x + k * h);
    let d1 = (45.0 * (f(1.0) - f(-1.0)) - 9.0 * (f(2.0) - f(-2.0)) + (f(3.0) - f(-3.0)))
        / (60.0 * h);
    let d2 = (-49.0 / 18.0 * f(0.0) + 1.5 * (f(1.0) + f(-1.0)) - 3.0 / 20.0 * (f(2.0) + f(-2.0))
        + 1.0 / 90.0 * (f(3.0) + f(-3.0)))
        / (h * h);
    (d1, d2)
}

impl SectionEval for Superellipse {
    fn jet(&self, t: f64, _w: f64) -> SectionJet {
        let (rt, rtt) = fd6(|x| self.value(x), t);
        SectionJet {
            r: self.value(t),
            rt,
            rw: 0.0,
            rtt,
            rtw: 0.0,
            rww: 0.0,
        }
    }
}

struct CustomSection<F: Fn(f64, f64) -> SectionJet + Send + Sync>(F);

impl<F: Fn(f64, f64) -> SectionJet + Send + Sync> SectionEval for CustomSection<F> {
    fn jet(&self, theta: f64, omega: f64) -> SectionJet {
        (self.0)(theta, omega)
    }
}

pub fn circular(r0: f64) -> Result<CrossSection> {
    if r0 <= 0.0 {
        return Err(Error::InvalidParams(format!("circular radius {r0} <= 0")));
    }
    Ok(CrossSection::new(
        format!("circular(r0={r0})"),
        Arc::new(Circular { r0 }),
    ))
}

pub fn sine(a: f64, k: f64) -> Result<CrossSection> {
    if a.abs() >= 1.0 {
        return Err(Error::InvalidParams(format!(
            "sine amplitude {a} leaves no positive radius margin"
        )));
    }
    Ok(CrossSection::new(
        format!("sine(a={a},k={k})"),
        Arc::new(Sine { a, k }),
    ))
}

/// Random profile: `k_terms` harmonics, amplitudes 1/(σn), integer
/// frequencies in [-3, 3] and phases in [0, 2π), all drawn from `seed`.
pub fn random(k_terms: usize, sigma: f64, seed: u64) -> Result<CrossSection> {
    if sigma <= 0.0 || k_terms == 0 {
        return Err(Error::InvalidParams(format!(
            "random section needs sigma > 0 and at least one term (sigma={sigma}, K={k_terms})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::with_capacity(k_terms);
    for n in 1..=k_terms {
        let amp = 1.0 / (sigma * n as f64);
        let a: i32 = rng.random_range(-3..=3);
        let b: i32 = rng.random_range(-3..=3);
        let c: f64 = rng.random_range(0.0..2.0 * PI);
        terms.push((0.5 * amp, a as f64, b as f64, c));
    }
    Ok(CrossSection::new(
        format!("random(K={k_terms},sigma={sigma},seed={seed})"),
        Arc::new(Random { terms }),
    ))
}

pub fn superellipse(gamma: f64) -> Result<CrossSection> {
    if gamma <= 0.0 {
        return Err(Error::InvalidParams(format!("superellipse gamma {gamma} <= 0")));
    }
    Ok(CrossSection::new(
        format!("superellipse(gamma={gamma})"),
        Arc::new(Superellipse { gamma }),
    ))
}

/// Section catalog keyed by name with tabulated default parameters.
pub fn catalog_cross_section(kind: &str, seed: u64) -> Result<CrossSection> {
    match kind {
        "circular" => circular(0.5),
        "cardioid" => Ok(CrossSection::new("cardioid", Arc::new(Cardioid))),
        "butterfly" => Ok(CrossSection::new("butterfly", Arc::new(Butterfly))),
        "star" => Ok(CrossSection::new("star", Arc::new(Star))),
        "sine" => sine(0.3, 8.0),
        "random" => random(10, 12.0, seed),
        "superellipse" => superellipse(4.0),
        other => Err(Error::UnknownKind(other.to_string())),
    }
}

/// Builds a custom cross-section from a jet closure.
pub fn custom_cross_section(
    name: impl Into<String>,
    jet: impl Fn(f64, f64) -> SectionJet + Send + Sync + 'static,
) -> CrossSection {
    CrossSection::new(name, Arc::new(CustomSection(jet)))
}

/// Smooth catalog names (analytic partials; excludes the superellipse whose
/// partials are intentionally finite-difference based).
pub const SMOOTH_SECTIONS: &[&str] = &["circular", "cardioid", "butterfly", "star", "sine", "random"];

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_oracle(section: &CrossSection, t: f64, w: f64) -> SectionJet {
        let h = 1e-4;
        let r = |t: f64, w: f64| section.radius(t, w);
        SectionJet {
            r: r(t, w),
            rt: (r(t + h, w) - r(t - h, w)) / (2.0 * h),
            rw: (r(t, w + h) - r(t, w - h)) / (2.0 * h),
            rtt: (r(t + h, w) - 2.0 * r(t, w) + r(t - h, w)) / (h * h),
            rtw: (r(t + h, w + h) - r(t + h, w - h) - r(t - h, w + h) + r(t - h, w - h))
                / (4.0 * h * h),
            rww: (r(t, w + h) - 2.0 * r(t, w) + r(t, w - h)) / (h * h),
        }
    }

    #[test]
    fn smooth_catalog_partials_match_fd() {
        for kind in SMOOTH_SECTIONS {
            let section = catalog_cross_section(kind, 7).unwrap();
            for k in 0..12 {
                let t = 0.17 + 2.0 * PI * k as f64 / 12.0;
                let w = 0.4 + 0.45 * k as f64;
                let jet = section.eval(t, w);
                let fd = fd_oracle(&section, t, w);
                assert!((jet.rt - fd.rt).abs() < 1e-6, "{kind} rt at ({t},{w})");
                assert!((jet.rw - fd.rw).abs() < 1e-6, "{kind} rw");
                assert!((jet.rtt - fd.rtt).abs() < 1e-4, "{kind} rtt");
                assert!((jet.rtw - fd.rtw).abs() < 1e-5, "{kind} rtw");
                assert!((jet.rww - fd.rww).abs() < 1e-4, "{kind} rww");
            }
        }
    }

    #[test]
    fn star_reference_value() {
        // R(π/10) = 3/5 + (3/40) sin(π/2) = 0.675.
        let star = catalog_cross_section("star", 0).unwrap();
        assert!((star.radius(PI / 10.0, 0.0) - 0.675).abs() < 1e-15);
    }

    #[test]
    fn circular_partials_vanish() {
        let sec = catalog_cross_section("circular", 0).unwrap();
        let j = sec.eval(1.3, 2.9);
        assert_eq!(j.r, 0.5);
        assert_eq!(
            (j.rt, j.rw, j.rtt, j.rtw, j.rww),
            (0.0, 0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn sections_are_theta_periodic_and_positive() {
        for kind in [
            "circular",
            "cardioid",
            "butterfly",
            "star",
            "sine",
            "random",
            "superellipse",
        ] {
            let section = catalog_cross_section(kind, 42).unwrap();
            for k in 0..64 {
                let t = 2.0 * PI * k as f64 / 64.0;
                let w = 0.3 + 0.09 * k as f64;
                let r = section.radius(t, w);
                assert!(r > 0.0, "{kind}: R must stay positive");
                let r_shift = section.radius(t + 2.0 * PI, w);
                assert!(
                    (r - r_shift).abs() < 1e-10,
                    "{kind}: R should be 2pi-periodic in theta ({r} vs {r_shift})"
                );
            }
        }
    }

    #[test]
    fn random_section_is_deterministic_per_seed() {
        let s1 = catalog_cross_section("random", 9).unwrap();
        let s2 = catalog_cross_section("random", 9).unwrap();
        let s3 = catalog_cross_section("random", 10).unwrap();
        let mut differs = false;
        for k in 0..16 {
            let (t, w) = (0.39 * k as f64, 0.21 * k as f64);
            assert_eq!(s1.radius(t, w), s2.radius(t, w));
            differs |= (s1.radius(t, w) - s3.radius(t, w)).abs() > 1e-9;
        }
        assert!(differs, "different seeds should give different profiles");
    }

    #[test]
    fn superellipse_interpolates_circle_at_gamma_two() {
        let sec = superellipse(2.0).unwrap();
        for k in 0..32 {
            let t = 2.0 * PI * k as f64 / 32.0;
            assert!((sec.radius(t, 0.0) - 1.0).abs() < 1e-12);
            let j = sec.eval(t, 0.0);
            assert!(j.rt.abs() < 1e-9 && j.rtt.abs() < 1e-6);
        }
    }

    #[test]
    fn superellipse_fd_partials_track_smooth_case() {
        // γ = 4 is smooth; the FD-based partials must agree with the
        // analytic chain rule to far below scheme accuracy.
        let sec = superellipse(4.0).unwrap();
        let value = |t: f64| {
            (t.cos().abs().powf(4.0) + t.sin().abs().powf(4.0)).powf(-0.25)
        };
        for k in 0..24 {
            let t = 0.05 + 2.0 * PI * k as f64 / 24.0;
            let j = sec.eval(t, 0.0);
            let h = 1e-5;
            let d1 = (value(t + h) - value(t - h)) / (2.0 * h);
            let d2 = (value(t + h) - 2.0 * value(t) + value(t - h)) / (h * h);
            assert!((j.rt - d1).abs() < 1e-8, "rt at {t}: {} vs {}", j.rt, d1);
            assert!((j.rtt - d2).abs() < 1e-4, "rtt at {t}");
        }
    }

    #[test]
    fn superellipse_kinks_stay_finite() {
        // γ < 2 has kinks at multiples of π/2; the FD partials smooth over
        // them but must never produce NaN or infinity.
        for gamma in [0.5, 1.0, 1.5] {
            let sec = superellipse(gamma).unwrap();
            for t in [0.0, PI / 2.0, PI, 1.5 * PI] {
                let j = sec.eval(t, 0.0);
                assert!(j.r.is_finite() && j.rt.is_finite() && j.rtt.is_finite());
                assert!(j.r > 0.0);
            }
        }
    }
}

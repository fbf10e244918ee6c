//! Small Taylor-jet arithmetic used by the curve and section catalogs.
//!
//! `Jet3` carries a univariate value with its first three derivatives;
//! `Jet2` carries a bivariate value with all partials through second order.
//! Propagating jets through the catalog formulas yields derivatives that are
//! exact up to roundoff, which keeps coefficient errors far below the h⁴
//! truncation level of the scheme.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Univariate 3-jet: f, f′, f″, f‴ at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet3 {
    pub f: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Jet3 {
    pub const fn constant(c: f64) -> Self {
        Jet3 {
            f: c,
            d1: 0.0,
            d2: 0.0,
            d3: 0.0,
        }
    }

    /// The jet of the identity map at `x`.
    pub const fn variable(x: f64) -> Self {
        Jet3 {
            f: x,
            d1: 1.0,
            d2: 0.0,
            d3: 0.0,
        }
    }

    /// Chain rule through a scalar function with derivatives
    /// `(f, f′, f″, f‴)` evaluated at `self.f`.
    fn compose(self, f: f64, df: f64, d2f: f64, d3f: f64) -> Self {
        let g1 = self.d1;
        let g2 = self.d2;
        let g3 = self.d3;
        Jet3 {
            f,
            d1: df * g1,
            d2: d2f * g1 * g1 + df * g2,
            d3: d3f * g1 * g1 * g1 + 3.0 * d2f * g1 * g2 + df * g3,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.f.sin_cos();
        self.compose(s, c, -s, -c)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.f.sin_cos();
        self.compose(c, -s, -c, s)
    }

    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    /// Real power with constant exponent; requires `self.f > 0`
    /// unless the exponent is a nonnegative integer.
    pub fn powf(self, a: f64) -> Self {
        let x = self.f;
        let f = x.powf(a);
        let df = a * x.powf(a - 1.0);
        let d2f = a * (a - 1.0) * x.powf(a - 2.0);
        let d3f = a * (a - 1.0) * (a - 2.0) * x.powf(a - 3.0);
        self.compose(f, df, d2f, d3f)
    }

    pub fn powi(self, n: u32) -> Self {
        let mut acc = Jet3::constant(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }

    pub fn recip(self) -> Self {
        let x = self.f;
        self.compose(
            1.0 / x,
            -1.0 / (x * x),
            2.0 / (x * x * x),
            -6.0 / (x * x * x * x),
        )
    }
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(self, o: Jet3) -> Jet3 {
        Jet3 {
            f: self.f + o.f,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
            d3: self.d3 + o.d3,
        }
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, o: Jet3) -> Jet3 {
        Jet3 {
            f: self.f - o.f,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
            d3: self.d3 - o.d3,
        }
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, o: Jet3) -> Jet3 {
        // Leibniz through third order.
        Jet3 {
            f: self.f * o.f,
            d1: self.d1 * o.f + self.f * o.d1,
            d2: self.d2 * o.f + 2.0 * self.d1 * o.d1 + self.f * o.d2,
            d3: self.d3 * o.f + 3.0 * self.d2 * o.d1 + 3.0 * self.d1 * o.d2 + self.f * o.d3,
        }
    }
}

impl Div for Jet3 {
    type Output = Jet3;
    fn div(self, o: Jet3) -> Jet3 {
        self * o.recip()
    }
}

impl Mul<f64> for Jet3 {
    type Output = Jet3;
    fn mul(self, c: f64) -> Jet3 {
        Jet3 {
            f: self.f * c,
            d1: self.d1 * c,
            d2: self.d2 * c,
            d3: self.d3 * c,
        }
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self * -1.0
    }
}

/// Bivariate 2-jet in (θ, ω): value and partials through second order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub f: f64,
    pub ft: f64,
    pub fw: f64,
    pub ftt: f64,
    pub ftw: f64,
    pub fww: f64,
}

impl Jet2 {
    pub const fn constant(c: f64) -> Self {
        Jet2 {
            f: c,
            ft: 0.0,
            fw: 0.0,
            ftt: 0.0,
            ftw: 0.0,
            fww: 0.0,
        }
    }

    /// Jet of θ at (θ, ω).
    pub const fn theta(t: f64) -> Self {
        Jet2 {
            f: t,
            ft: 1.0,
            fw: 0.0,
            ftt: 0.0,
            ftw: 0.0,
            fww: 0.0,
        }
    }

    /// Jet of ω at (θ, ω).
    pub const fn omega(w: f64) -> Self {
        Jet2 {
            f: w,
            ft: 0.0,
            fw: 1.0,
            ftt: 0.0,
            ftw: 0.0,
            fww: 0.0,
        }
    }

    /// Chain rule through a scalar function with derivatives
    /// `(f, f′, f″)` evaluated at `self.f`.
    fn compose(self, f: f64, df: f64, d2f: f64) -> Self {
        Jet2 {
            f,
            ft: df * self.ft,
            fw: df * self.fw,
            ftt: d2f * self.ft * self.ft + df * self.ftt,
            ftw: d2f * self.ft * self.fw + df * self.ftw,
            fww: d2f * self.fw * self.fw + df * self.fww,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.f.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.f.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.f.exp();
        self.compose(e, e, e)
    }

    pub fn powi(self, n: u32) -> Self {
        let mut acc = Jet2::constant(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }

    pub fn recip(self) -> Self {
        let x = self.f;
        self.compose(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            f: self.f + o.f,
            ft: self.ft + o.ft,
            fw: self.fw + o.fw,
            ftt: self.ftt + o.ftt,
            ftw: self.ftw + o.ftw,
            fww: self.fww + o.fww,
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2 {
            f: self.f - o.f,
            ft: self.ft - o.ft,
            fw: self.fw - o.fw,
            ftt: self.ftt - o.ftt,
            ftw: self.ftw - o.ftw,
            fww: self.fww - o.fww,
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            f: self.f * o.f,
            ft: self.ft * o.f + self.f * o.ft,
            fw: self.fw * o.f + self.f * o.fw,
            ftt: self.ftt * o.f + 2.0 * self.ft * o.ft + self.f * o.ftt,
            ftw: self.ftw * o.f + self.ft * o.fw + self.fw * o.ft + self.f * o.ftw,
            fww: self.fww * o.f + 2.0 * self.fw * o.fw + self.f * o.fww,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, c: f64) -> Jet2 {
        Jet2 {
            f: self.f * c,
            ft: self.ft * c,
            fw: self.fw * c,
            ftt: self.ftt * c,
            ftw: self.ftw * c,
            fww: self.fww * c,
        }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self * -1.0
    }
}

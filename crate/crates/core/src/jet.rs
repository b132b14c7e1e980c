//! Forward-mode differentiation helpers.
//!
//! [`Jet`] carries a scalar function of time together with its first three
//! derivatives; arithmetic follows the Leibniz and Faà di Bruno rules so that
//! composite closed forms keep exact derivative channels. [`Dual3`] carries a
//! value and its gradient with respect to `(t, x, ẋ)`, which is what the
//! symmetry engine needs from a right-hand side `F(t, x, ẋ)`.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value and derivatives up to order three at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Jet {
    pub const fn new(v: f64, d1: f64, d2: f64, d3: f64) -> Self {
        Jet { v, d1, d2, d3 }
    }

    pub const fn constant(c: f64) -> Self {
        Jet::new(c, 0.0, 0.0, 0.0)
    }

    /// The identity map evaluated at `t`.
    pub const fn variable(t: f64) -> Self {
        Jet::new(t, 1.0, 0.0, 0.0)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.v, self.d1, self.d2, self.d3]
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.d1.is_finite() && self.d2.is_finite() && self.d3.is_finite()
    }

    /// Derivative as a jet; the top order is unknown and set to NaN.
    pub fn derivative(self) -> Jet {
        Jet::new(self.d1, self.d2, self.d3, f64::NAN)
    }

    /// Jet of an antiderivative with the given value and integrand.
    pub fn antiderivative(value: f64, integrand: Jet) -> Jet {
        Jet::new(value, integrand.v, integrand.d1, integrand.d2)
    }

    /// Composition `φ∘self`, where `phi` holds φ and its first three
    /// derivatives evaluated at `self.v`.
    pub fn compose(self, phi: [f64; 4]) -> Jet {
        let [p0, p1, p2, p3] = phi;
        let (f1, f2, f3) = (self.d1, self.d2, self.d3);
        Jet::new(
            p0,
            p1 * f1,
            p2 * f1 * f1 + p1 * f2,
            p3 * f1 * f1 * f1 + 3.0 * p2 * f1 * f2 + p1 * f3,
        )
    }

    pub fn recip(self) -> Jet {
        let u = self.v;
        let r = 1.0 / u;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn powf(self, e: f64) -> Jet {
        let u = self.v;
        self.compose([
            u.powf(e),
            e * u.powf(e - 1.0),
            e * (e - 1.0) * u.powf(e - 2.0),
            e * (e - 1.0) * (e - 2.0) * u.powf(e - 3.0),
        ])
    }

    pub fn sqrt(self) -> Jet {
        self.powf(0.5)
    }

    pub fn exp(self) -> Jet {
        let e = self.v.exp();
        self.compose([e, e, e, e])
    }

    pub fn ln(self) -> Jet {
        let u = self.v;
        self.compose([u.ln(), 1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u)])
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn scale(self, c: f64) -> Jet {
        Jet::new(c * self.v, c * self.d1, c * self.d2, c * self.d3)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2, self.d3 + o.d3)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2, self.d3 - o.d3)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
            self.d3 * o.v + 3.0 * self.d2 * o.d1 + 3.0 * self.d1 * o.d2 + self.v * o.d3,
        )
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet::new(self.v + c, self.d1, self.d2, self.d3)
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, c: f64) -> Jet {
        Jet::new(self.v - c, self.d1, self.d2, self.d3)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j.scale(self)
    }
}

/// Value and gradient with respect to `(t, x, ẋ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual3 {
    pub v: f64,
    pub dt: f64,
    pub dx: f64,
    pub dv: f64,
}

impl Dual3 {
    pub const fn new(v: f64, dt: f64, dx: f64, dv: f64) -> Self {
        Dual3 { v, dt, dx, dv }
    }

    pub const fn constant(c: f64) -> Self {
        Dual3::new(c, 0.0, 0.0, 0.0)
    }

    /// Lift a function of time only; uses value and first derivative.
    pub fn time(j: Jet) -> Self {
        Dual3::new(j.v, j.d1, 0.0, 0.0)
    }

    pub const fn state_x(x: f64) -> Self {
        Dual3::new(x, 0.0, 1.0, 0.0)
    }

    pub const fn state_v(v: f64) -> Self {
        Dual3::new(v, 0.0, 0.0, 1.0)
    }

    fn chain(self, f: f64, df: f64) -> Dual3 {
        Dual3::new(f, df * self.dt, df * self.dx, df * self.dv)
    }

    /// Apply a scalar function given its value and slope at `self.v`.
    pub fn apply(self, f: f64, df: f64) -> Dual3 {
        self.chain(f, df)
    }

    pub fn recip(self) -> Dual3 {
        let r = 1.0 / self.v;
        self.chain(r, -r * r)
    }

    pub fn powf(self, e: f64) -> Dual3 {
        self.chain(self.v.powf(e), e * self.v.powf(e - 1.0))
    }

    pub fn powi(self, e: i32) -> Dual3 {
        self.chain(self.v.powi(e), e as f64 * self.v.powi(e - 1))
    }

    pub fn exp(self) -> Dual3 {
        let e = self.v.exp();
        self.chain(e, e)
    }

    pub fn scale(self, c: f64) -> Dual3 {
        Dual3::new(c * self.v, c * self.dt, c * self.dx, c * self.dv)
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.dt.is_finite() && self.dx.is_finite() && self.dv.is_finite()
    }
}

impl Add for Dual3 {
    type Output = Dual3;
    fn add(self, o: Dual3) -> Dual3 {
        Dual3::new(self.v + o.v, self.dt + o.dt, self.dx + o.dx, self.dv + o.dv)
    }
}

impl Sub for Dual3 {
    type Output = Dual3;
    fn sub(self, o: Dual3) -> Dual3 {
        Dual3::new(self.v - o.v, self.dt - o.dt, self.dx - o.dx, self.dv - o.dv)
    }
}

impl Neg for Dual3 {
    type Output = Dual3;
    fn neg(self) -> Dual3 {
        self.scale(-1.0)
    }
}

impl Mul for Dual3 {
    type Output = Dual3;
    fn mul(self, o: Dual3) -> Dual3 {
        Dual3::new(
            self.v * o.v,
            self.dt * o.v + self.v * o.dt,
            self.dx * o.v + self.v * o.dx,
            self.dv * o.v + self.v * o.dv,
        )
    }
}

impl Div for Dual3 {
    type Output = Dual3;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Dual3) -> Dual3 {
        self * o.recip()
    }
}

impl Mul<f64> for Dual3 {
    type Output = Dual3;
    fn mul(self, c: f64) -> Dual3 {
        self.scale(c)
    }
}

impl Add<f64> for Dual3 {
    type Output = Dual3;
    fn add(self, c: f64) -> Dual3 {
        Dual3::new(self.v + c, self.dt, self.dx, self.dv)
    }
}

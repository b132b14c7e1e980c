//! Solutions of `a⃛ + 4pȧ + 2ṗa = 0` built from a Hill basis, the first
//! integral `K`, and the time reparametrisation `s = ∫ dt/a`.

use crate::error::{Error, Result};
use crate::hill::{laguerre_forsyth_check, HillBasis, Mobius};
use crate::jet::Jet;
use crate::oracle::Ivp;
use crate::timefn::{check_positive, default_anchor, integrate, primitive, TimeFn};

/// Tolerance used for `s(t)` quadratures.
pub const S_QUAD_TOL: f64 = 1e-10;

/// Coefficients of `a = Au₁² + 2Bu₁u₂ + Cu₂²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ProjectiveCoeffs {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if ![a, b, c].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite projective coefficient".into()));
        }
        if a == 0.0 && b == 0.0 && c == 0.0 {
            return Err(Error::InvalidParameter("projective coefficients are all zero".into()));
        }
        Ok(ProjectiveCoeffs { a, b, c })
    }

    /// `1 + α cos 2t` on the `(cos t, sin t)` basis.
    pub fn ince(alpha: f64) -> Self {
        ProjectiveCoeffs { a: 1.0 + alpha, b: 0.0, c: 1.0 - alpha }
    }

    /// `AC − B²`.
    pub fn discriminant(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    /// Evaluate the quadratic form on jets.
    pub fn form(&self, u1: Jet, u2: Jet) -> Jet {
        (u1 * u1).scale(self.a) + (u1 * u2).scale(2.0 * self.b) + (u2 * u2).scale(self.c)
    }
}

/// `a(t)` together with the basis and coefficients that produced it.
#[derive(Debug, Clone)]
pub struct ProjectiveSolution {
    pub basis: HillBasis,
    pub coeffs: ProjectiveCoeffs,
    pub a: TimeFn,
    /// `(AC − B²)W²`.
    pub k: f64,
}

pub fn build_a(basis: &HillBasis, coeffs: ProjectiveCoeffs) -> ProjectiveSolution {
    let (u1, u2) = (basis.u1.clone(), basis.u2.clone());
    let (lo, hi) = basis.domain();
    let a = TimeFn::new("a", (lo, hi), move |t| coeffs.form(u1.eval(t), u2.eval(t)));
    ProjectiveSolution {
        basis: basis.clone(),
        coeffs,
        a,
        k: coeffs.discriminant() * basis.w * basis.w,
    }
}

impl ProjectiveSolution {
    pub fn p(&self) -> &TimeFn {
        &self.basis.p
    }

    pub fn domain(&self) -> (f64, f64) {
        self.a.domain()
    }

    pub fn restrict(&self, lo: f64, hi: f64) -> Result<ProjectiveSolution> {
        let basis = self.basis.restrict(lo, hi)?;
        Ok(build_a(&basis, self.coeffs))
    }

    /// `s(t) = ∫_{t_ref}^t dt'/a` as a [`TimeFn`]; `a` must be positive on the
    /// whole domain. The anchor is `0` when it lies in the domain, otherwise
    /// the left endpoint.
    pub fn s_fn(&self) -> Result<TimeFn> {
        s_fn(&self.a)
    }

    pub fn residual_m(&self, t: f64) -> f64 {
        residual_m(&self.a, &self.basis.p, t)
    }

    pub fn first_integral_k(&self, t: f64) -> f64 {
        first_integral_k(&self.a, &self.basis.p, t)
    }

    /// Largest `|d³ā/dt̄³|` of the Laguerre–Forsyth image on a grid.
    pub fn laguerre_forsyth(&self, m: Mobius, grid: &[f64]) -> Result<f64> {
        laguerre_forsyth_check(&self.basis, m, &self.a, grid)
    }
}

/// `a⃛ + 4pȧ + 2ṗa`.
pub fn residual_m(a: &TimeFn, p: &TimeFn, t: f64) -> f64 {
    let (a, p) = (a.eval(t), p.eval(t));
    a.d3 + 4.0 * p.v * a.d1 + 2.0 * p.d1 * a.v
}

/// `¼(2aä − ȧ²) + pa²`.
pub fn first_integral_k(a: &TimeFn, p: &TimeFn, t: f64) -> f64 {
    let (a, p) = (a.eval(t), p.value(t));
    0.25 * (2.0 * a.v * a.d2 - a.d1 * a.d1) + p * a.v * a.v
}

/// `∫_{t₀}^{t} dt'/a(t')`, refusing intervals where `a` is not positive.
pub fn s_of_t(a: &TimeFn, t0: f64, t: f64) -> Result<f64> {
    check_positive(a, t0.min(t), t0.max(t))?;
    let inv = a.map("1/a", |j| j.recip());
    integrate(&inv, t0, t, S_QUAD_TOL)
}

/// `s` as a function of time; see [`ProjectiveSolution::s_fn`].
pub fn s_fn(a: &TimeFn) -> Result<TimeFn> {
    let (lo, hi) = a.domain();
    check_positive(a, lo, hi)?;
    let inv = a.map("1/a", |j| j.recip());
    Ok(primitive(&inv, default_anchor((lo, hi)), S_QUAD_TOL).with_label("s"))
}

/// Branch-wise `s(t)` for `a = 1 + α cos 2t` on `(−π/2, π/2)`:
/// `arctan(√((1−α)/(1+α)) tan t)/√(1−α²)`.
pub fn ince_branch_s(alpha: f64, t: f64) -> f64 {
    let q = ((1.0 - alpha) / (1.0 + alpha)).sqrt();
    (q * t.tan()).atan() / (1.0 - alpha * alpha).sqrt()
}

/// `s(t)` for `a = cos λt` on `|λt| < π/2`.
pub fn cos_branch_s(lambda: f64, t: f64) -> f64 {
    let h = (lambda * t / 2.0).tan();
    ((1.0 + h) / (1.0 - h)).ln() / lambda
}

/// `w₁₂ = a₁ȧ₂ − a₂ȧ₁` with derivatives formed from the projective equation,
/// so `a⁗ = −4pä − 6ṗȧ − 2p̈a` is never differentiated numerically.
pub fn wronskian_fn(a1: &TimeFn, a2: &TimeFn, p: &TimeFn) -> TimeFn {
    let (a1, a2, p) = (a1.clone(), a2.clone(), p.clone());
    let (lo1, hi1) = a1.domain();
    let (lo2, hi2) = a2.domain();
    TimeFn::new("w12", (lo1.max(lo2), hi1.min(hi2)), move |t| {
        let (x, y, pj) = (a1.eval(t), a2.eval(t), p.eval(t));
        let fourth = |a: &Jet| -4.0 * pj.v * a.d2 - 6.0 * pj.d1 * a.d1 - 2.0 * pj.d2 * a.v;
        Jet::new(
            x.v * y.d1 - y.v * x.d1,
            x.v * y.d2 - y.v * x.d2,
            x.d1 * y.d2 + x.v * y.d3 - y.d1 * x.d2 - y.v * x.d3,
            2.0 * (x.d1 * y.d3 - y.d1 * x.d3) + x.v * fourth(&y) - y.v * fourth(&x),
        )
    })
}

/// Determinant of the derivative matrix of `(u₁², u₁u₂, u₂²)` at `t`.
pub fn triple_wronskian(basis: &HillBasis, t: f64) -> f64 {
    let (u1, u2) = (basis.u1.eval(t), basis.u2.eval(t));
    let cols = [u1 * u1, u1 * u2, u2 * u2];
    let m: Vec<[f64; 3]> = (0..3).map(|r| cols.map(|c| [c.v, c.d1, c.d2][r])).collect();
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// The projective equation as a first-order system in `(a, ȧ, ä)`.
pub fn projective_ivp(p: &TimeFn, ic: [f64; 3], range: (f64, f64)) -> Ivp<3> {
    let p = p.clone();
    Ivp::new(
        move |t, y| {
            let pj = p.eval(t);
            [y[1], y[2], -4.0 * pj.v * y[1] - 2.0 * pj.d1 * y[0]]
        },
        ic,
        range,
    )
}

//! Second-order equations invariant under the affine and `sl(2)` algebras
//! built on a projective solution `a(t)`, and their superposition formulas.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{Dual3, Jet};
use crate::oracle::{Event, Ivp, SINGULAR_X_EPS};
use crate::projective::{ProjectiveCoeffs, ProjectiveSolution};
use crate::symmetry::Ode2;
use crate::timefn::{check_positive, default_anchor, primitive, TimeFn, DEFAULT_QUAD_TOL};

/// Absolute tolerance on superposition constraints such as `AC − B² = H₀`.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// `H(I) = h0·I³ + h1·I² + h2·I + h3`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CubicH {
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

impl CubicH {
    pub const fn new(h0: f64, h1: f64, h2: f64, h3: f64) -> Self {
        CubicH { h0, h1, h2, h3 }
    }

    pub const fn constant(c: f64) -> Self {
        CubicH::new(0.0, 0.0, 0.0, c)
    }

    /// `3I² − 3ℓI + ℓ²/2`.
    pub fn emden(l: f64) -> Self {
        CubicH::new(0.0, 3.0, -3.0 * l, 0.5 * l * l)
    }

    pub fn coeffs(&self) -> [f64; 4] {
        [self.h0, self.h1, self.h2, self.h3]
    }

    pub fn eval(&self, i: f64) -> f64 {
        ((self.h0 * i + self.h1) * i + self.h2) * i + self.h3
    }

    /// `H`, `H'`, `H''`, `H'''` at `i`.
    pub fn derivs(&self, i: f64) -> [f64; 4] {
        [
            self.eval(i),
            (3.0 * self.h0 * i + 2.0 * self.h1) * i + self.h2,
            6.0 * self.h0 * i + 2.0 * self.h1,
            6.0 * self.h0,
        ]
    }

    pub fn as_constant(&self) -> Option<f64> {
        (self.h0 == 0.0 && self.h1 == 0.0 && self.h2 == 0.0).then_some(self.h3)
    }
}

type HEval = dyn Fn(f64) -> (f64, f64) + Send + Sync;

/// The arbitrary function of the invariant.
#[derive(Clone)]
pub enum HFunction {
    Cubic(CubicH),
    /// Value and first derivative from a closure.
    Opaque { label: String, f: Arc<HEval> },
}

impl fmt::Debug for HFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HFunction::Cubic(c) => f.debug_tuple("Cubic").field(c).finish(),
            HFunction::Opaque { label, .. } => f.debug_tuple("Opaque").field(label).finish(),
        }
    }
}

impl From<CubicH> for HFunction {
    fn from(c: CubicH) -> Self {
        HFunction::Cubic(c)
    }
}

impl HFunction {
    pub fn opaque(label: impl Into<String>, f: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        HFunction::Opaque {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, i: f64) -> (f64, f64) {
        match self {
            HFunction::Cubic(c) => {
                let d = c.derivs(i);
                (d[0], d[1])
            }
            HFunction::Opaque { f, .. } => f(i),
        }
    }

    pub fn value(&self, i: f64) -> f64 {
        self.eval(i).0
    }

    pub fn as_cubic(&self) -> Option<CubicH> {
        match self {
            HFunction::Cubic(c) => Some(*c),
            HFunction::Opaque { .. } => None,
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.as_cubic().and_then(|c| c.as_constant())
    }

    fn apply(&self, i: Dual3) -> Dual3 {
        let (h, dh) = self.eval(i.v);
        i.apply(h, dh)
    }
}

/// Equation families; `n` is the power exponent (`n ≠ 1`).
#[derive(Debug, Clone)]
pub enum Family {
    /// `ẍ = −px + kx⁻³`.
    Ep { k: f64 },
    /// `ẍ = −[p − Ka⁻²]x + x⁻³H(I)`.
    AffineH { h: HFunction },
    /// `z̈ = −(2ν̇+ν²)z/(n−1) + σż²/z + zⁿH(Iₙ)`, `ν = ȧ/a`.
    AffineHn { n: f64, h: HFunction },
    /// `ẍ = −[p − Ka⁻²]x + H₀x⁻³`.
    Sl2Const { h0: f64 },
    /// `z̈ = −4[p − Ka⁻²]z/(1−n) + σż²/z + 4H₀zⁿ/(1−n)`.
    GenKs { n: f64, h0: f64 },
    /// `z̈ = −4I(t)z/(1−n) + σż²/z + 4qzⁿ/(1−n)`; the basis potential is `I`.
    Ks2 { n: f64, q: f64 },
    /// `ẅ + rẇ + 4pw/(1−n) = σẇ²/w + 4q e^{−2∫r} wⁿ/(1−n)`; the basis
    /// potential is `I = p − ¼(r² + 2ṙ)`.
    D2ks { n: f64, q: f64, r: TimeFn },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Ep { .. } => "ep",
            Family::AffineH { .. } => "affine_H",
            Family::AffineHn { .. } => "affine_H_n",
            Family::Sl2Const { .. } => "sl2_const",
            Family::GenKs { .. } => "gen_ks",
            Family::Ks2 { .. } => "ks2",
            Family::D2ks { .. } => "d2ks",
        }
    }

    /// The power `n`; `−3` for the families written in `x`.
    pub fn exponent(&self) -> f64 {
        match self {
            Family::AffineHn { n, .. } | Family::GenKs { n, .. } | Family::Ks2 { n, .. } | Family::D2ks { n, .. } => *n,
            _ => -3.0,
        }
    }

    /// Whether the right-hand side involves `a(t)` and so needs `a > 0`.
    pub fn uses_a(&self) -> bool {
        matches!(
            self,
            Family::AffineH { .. } | Family::AffineHn { .. } | Family::Sl2Const { .. } | Family::GenKs { .. }
        )
    }
}

/// One invariant equation together with the projective solution it is built on.
#[derive(Debug, Clone)]
pub struct EquationSpec {
    pub family: Family,
    pub sol: ProjectiveSolution,
    /// Physical potential; differs from the basis potential only for d2ks.
    p: TimeFn,
    /// `∫r` from the domain anchor (d2ks only).
    int_r: Option<TimeFn>,
}

impl EquationSpec {
    pub fn new(family: Family, sol: ProjectiveSolution) -> Result<EquationSpec> {
        let n = family.exponent();
        if n == 1.0 {
            return Err(Error::InvalidParameter(format!("{} needs n ≠ 1", family.name())));
        }
        if !n.is_finite() {
            return Err(Error::InvalidParameter("exponent n must be finite".into()));
        }
        let mut p = sol.basis.p.clone();
        let mut int_r = None;
        if let Family::D2ks { r, .. } = &family {
            let (lo, hi) = sol.domain();
            let (rlo, rhi) = r.domain();
            let (lo, hi) = (lo.max(rlo), hi.min(rhi));
            if !(lo < hi) {
                return Err(Error::Domain("r and the basis have disjoint domains".into()));
            }
            let r = r.restrict(lo, hi)?;
            int_r = Some(primitive(&r, default_anchor((lo, hi)), DEFAULT_QUAD_TOL));
            p = p.zip(&r, "p", |i, r| i + (r * r + r.derivative().scale(2.0)).scale(0.25));
        }
        Ok(EquationSpec { family, sol, p, int_r })
    }

    pub fn domain(&self) -> (f64, f64) {
        let (lo, hi) = self.sol.domain();
        match &self.int_r {
            Some(r) => (lo.max(r.domain().0), hi.min(r.domain().1)),
            None => (lo, hi),
        }
    }

    /// The potential `p(t)` appearing in the equation.
    pub fn p(&self) -> &TimeFn {
        &self.p
    }

    pub fn k(&self) -> f64 {
        self.sol.k
    }

    pub fn n(&self) -> f64 {
        self.family.exponent()
    }

    /// `σ = (n + 3)/4`.
    pub fn sigma(&self) -> f64 {
        (self.n() + 3.0) / 4.0
    }

    /// `∫r` from the anchor (d2ks only).
    pub fn integral_r(&self) -> Option<&TimeFn> {
        self.int_r.as_ref()
    }

    /// Restrict the underlying basis (and `r`) to `[lo, hi]`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<EquationSpec> {
        let family = match &self.family {
            Family::D2ks { n, q, r } => Family::D2ks { n: *n, q: *q, r: r.restrict(lo, hi)? },
            f => f.clone(),
        };
        EquationSpec::new(family, self.sol.restrict(lo, hi)?)
    }

    /// `F(t, x, ẋ)` with its gradient; no domain checks.
    pub fn rhs_dual(&self, t: f64, x: Dual3, v: Dual3) -> Dual3 {
        let n = self.n();
        let sigma = self.sigma();
        let pj = self.p.eval(t);
        let time = Dual3::time;
        let ptilde = || {
            let a = self.sol.a.eval(t);
            time(pj - (a * a).recip().scale(self.sol.k))
        };
        let nu = || {
            let a = self.sol.a.eval(t);
            a.derivative() / a
        };
        let ks_drag = || v * v / x * sigma;
        match &self.family {
            Family::Ep { k } => -(time(pj) * x) + x.powi(-3) * *k,
            Family::AffineH { h } => {
                let i = x * v - time(nu()) * x * x * 0.5;
                -(ptilde() * x) + x.powi(-3) * h.apply(i)
            }
            Family::AffineHn { n, h } => {
                let nu = nu();
                let c = nu.derivative().scale(2.0) + nu * nu;
                let i = x.powf(-(n + 1.0) / 2.0) * (v - time(nu) * x * (2.0 / (1.0 - n))) * ((1.0 - n) / 4.0);
                -(time(c) * x) * (1.0 / (n - 1.0)) + ks_drag() + x.powf(*n) * h.apply(i)
            }
            Family::Sl2Const { h0 } => -(ptilde() * x) + x.powi(-3) * *h0,
            Family::GenKs { h0, .. } => {
                let c = 4.0 / (1.0 - n);
                -(ptilde() * x) * c + ks_drag() + x.powf(n) * (c * h0)
            }
            Family::Ks2 { q, .. } => {
                let c = 4.0 / (1.0 - n);
                -(time(pj) * x) * c + ks_drag() + x.powf(n) * (c * q)
            }
            Family::D2ks { q, r, .. } => {
                let c = 4.0 / (1.0 - n);
                let ir = self.int_r.as_ref().map(|f| f.eval(t)).unwrap_or(Jet::constant(0.0));
                let damp = (ir.scale(-2.0)).exp();
                -(time(r.eval(t)) * v) - time(pj) * x * c + ks_drag() + time(damp) * x.powf(n) * (c * q)
            }
        }
    }

    fn check_point(&self, t: f64, x: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(Error::Domain(format!("t = {t} outside [{lo}, {hi}]")));
        }
        if !(x > 0.0) {
            return Err(Error::Singularity(format!("{} requires x > 0, got {x}", self.family.name())));
        }
        if self.family.uses_a() && !(self.sol.a.value(t) > 0.0) {
            return Err(Error::Domain(format!("a(t) ≤ 0 at t = {t}")));
        }
        Ok(())
    }

    /// `ẍ = F(t, x, ẋ)`.
    pub fn rhs(&self, t: f64, x: f64, v: f64) -> Result<f64> {
        self.check_point(t, x)?;
        let y = self.rhs_dual(t, Dual3::state_x(x), Dual3::state_v(v)).v;
        if !y.is_finite() {
            return Err(Error::Numerical(format!("rhs not finite at ({t}, {x}, {v})")));
        }
        Ok(y)
    }

    pub fn ode(&self) -> Ode2 {
        let me = self.clone();
        Ode2::new(self.family.name(), true, move |t, x, v| me.rhs_dual(t, x, v))
    }

    /// Initial value problem stopping near `x = 0` and, when `a` enters the
    /// equation, where `a ≤ 0`.
    pub fn ivp(&self, x0: f64, v0: f64, range: (f64, f64)) -> Ivp<2> {
        let me = self.clone();
        let mut ivp = Ivp::second_order(
            move |t, x, v| me.rhs_dual(t, Dual3::constant(x), Dual3::constant(v)).v,
            x0,
            v0,
            range,
        )
        .with_event(Event::singular_x(SINGULAR_X_EPS));
        if self.family.uses_a() {
            ivp = ivp.with_event(Event::nonpositive(self.sol.a.clone()));
        }
        ivp
    }
}

/// `I`, `J₁`, `J₂` at a point of the first jet space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub i: f64,
    pub j1: f64,
    pub j2: f64,
}

pub fn invariants(sol: &ProjectiveSolution, t: f64, x: f64, v: f64) -> Result<Invariants> {
    let a = sol.a.eval(t);
    if !(a.v > 0.0) {
        return Err(Error::Domain(format!("a(t) ≤ 0 at t = {t}")));
    }
    let nu = a.d1 / a.v;
    Ok(Invariants {
        i: x * v - 0.5 * nu * x * x,
        j1: x / a.v.sqrt(),
        j2: a.v.sqrt() * (v - 0.5 * nu * x),
    })
}

/// `I = xẋ − (ȧ/2a)x²`.
pub fn invariant_i(sol: &ProjectiveSolution, t: f64, x: f64, v: f64) -> Result<f64> {
    invariants(sol, t, x, v).map(|j| j.i)
}

/// `J₃ = a^{3/2}(ẍ + px)`.
pub fn invariant_j3(sol: &ProjectiveSolution, t: f64, x: f64, xdd: f64) -> Result<f64> {
    let a = sol.a.value(t);
    if !(a > 0.0) {
        return Err(Error::Domain(format!("a(t) ≤ 0 at t = {t}")));
    }
    Ok(a.powf(1.5) * (xdd + sol.basis.p.value(t) * x))
}

/// `a(A + 2Bs + Cs²)`, equal to `Aa + 2Bas + Cas²`.
pub fn quadratic_in_s(a: &TimeFn, s: &TimeFn, c: ProjectiveCoeffs) -> TimeFn {
    a.zip(s, "a(A+2Bs+Cs²)", move |a, s| a * (s.scale(2.0 * c.b) + s * s * c.c + c.a))
}

/// `[a(A + 2Bs + Cs²)]^m` for a user supplied `s`.
pub fn superpose_with_s(a: &TimeFn, s: &TimeFn, c: ProjectiveCoeffs, m: f64) -> TimeFn {
    quadratic_in_s(a, s, c).map("superposition", move |q| q.powf(m))
}

fn check_constraint(name: &str, got: f64, want: f64) -> Result<()> {
    if (got - want).abs() > CONSTRAINT_TOL {
        return Err(Error::InvalidParameter(format!(
            "{name} constraint violated: {got} ≠ {want}"
        )));
    }
    Ok(())
}

/// Which superposition formula applies to a family.
enum Superposition {
    /// `[a(A+2Bs+Cs²)]^m`, `AC − B² = h0`.
    InS { m: f64, h0: f64 },
    /// `(Au₁²+2Bu₁u₂+Cu₂²)^m`, `(AC−B²)W² = q`.
    InBasis { m: f64, q: f64 },
}

fn superposition(spec: &EquationSpec) -> Result<Superposition> {
    let n = spec.n();
    let m = 2.0 / (1.0 - n);
    match &spec.family {
        Family::Ep { k } => Ok(Superposition::InBasis { m: 0.5, q: *k }),
        Family::Sl2Const { h0 } => Ok(Superposition::InS { m: 0.5, h0: *h0 }),
        Family::GenKs { h0, .. } => Ok(Superposition::InS { m, h0: *h0 }),
        Family::AffineH { h } => match h.as_constant() {
            Some(h0) => Ok(Superposition::InS { m: 0.5, h0 }),
            None => Err(Error::InvalidParameter("affine_H has no closed form for non-constant H".into())),
        },
        Family::AffineHn { n, h } => match h.as_constant() {
            Some(c) => Ok(Superposition::InS { m, h0: c * (1.0 - n) / 4.0 }),
            None => Err(Error::InvalidParameter("affine_H_n has no closed form for non-constant H".into())),
        },
        Family::Ks2 { q, .. } | Family::D2ks { q, .. } => Ok(Superposition::InBasis { m, q: *q }),
    }
}

/// General solution by nonlinear superposition.
pub fn closed_form_solution(spec: &EquationSpec, c: ProjectiveCoeffs) -> Result<TimeFn> {
    let (lo, hi) = spec.domain();
    let basis = &spec.sol.basis;
    let (q, m) = match superposition(spec)? {
        Superposition::InS { m, h0 } => {
            check_constraint("AC − B²", c.discriminant(), h0)?;
            let s = spec.sol.s_fn()?;
            (quadratic_in_s(&spec.sol.a, &s, c), m)
        }
        Superposition::InBasis { m, q } => {
            check_constraint("(AC − B²)W²", c.discriminant() * basis.w * basis.w, q)?;
            let (u1, u2) = (basis.u1.clone(), basis.u2.clone());
            (TimeFn::new("Q", (lo, hi), move |t| c.form(u1.eval(t), u2.eval(t))), m)
        }
    };
    let q = q.restrict(lo, hi)?;
    check_positive(&q, lo, hi)?;
    let z = q.map("superposition", move |q| q.powf(m));
    match &spec.int_r {
        Some(ir) => {
            let e = 2.0 / (spec.n() - 1.0);
            Ok(z.zip(ir, "w", move |z, ir| z * ir.scale(e).exp()))
        }
        None => Ok(z),
    }
}

/// Superposition constants reproducing `x(t₀) = x₀`, `ẋ(t₀) = v₀`.
///
/// Writing the superposition quadratic as `ρ(A + 2Bθ + Cθ²)` with
/// `θ̇ = κ/ρ`, the data fix the Taylor coefficients of the bracket at `θ₀`;
/// the constraint fixes the curvature and the result is re-expanded about
/// `θ = 0`.
pub fn constants_from_ic(spec: &EquationSpec, x0: f64, v0: f64, t0: f64) -> Result<ProjectiveCoeffs> {
    if !(x0 > 0.0) {
        return Err(Error::InvalidParameter(format!("initial value must be positive, got {x0}")));
    }
    let (lo, hi) = spec.domain();
    if !(t0 >= lo && t0 <= hi) {
        return Err(Error::Domain(format!("t0 = {t0} outside [{lo}, {hi}]")));
    }
    let (mut z0, mut zd0) = (x0, v0);
    if let Some(ir) = &spec.int_r {
        let j = ir.eval(t0);
        let e = 2.0 / (spec.n() - 1.0);
        let phi = (e * j.v).exp();
        let dphi = e * j.d1 * phi;
        z0 = x0 / phi;
        zd0 = (v0 - dphi * z0) / phi;
    }
    let sup = superposition(spec)?;
    let m = match sup {
        Superposition::InS { m, .. } | Superposition::InBasis { m, .. } => m,
    };
    // Q = z^{1/m}
    let q0 = z0.powf(1.0 / m);
    let qd0 = q0 / (m * z0) * zd0;
    let basis = &spec.sol.basis;
    // (ρ, ρ̇, θ, κ, target discriminant, swapped)
    let (rho, drho, theta, kappa, disc, swapped) = match sup {
        Superposition::InS { h0, .. } => {
            let a = spec.sol.a.eval(t0);
            let s = spec.sol.s_fn()?.value(t0);
            (a.v, a.d1, s, 1.0, h0, false)
        }
        Superposition::InBasis { q, .. } => {
            let (u1, u2) = (basis.u1.eval(t0), basis.u2.eval(t0));
            let disc = q / (basis.w * basis.w);
            if u1.v.abs() >= u2.v.abs() {
                (u1.v * u1.v, 2.0 * u1.v * u1.d1, u2.v / u1.v, basis.w, disc, false)
            } else {
                (u2.v * u2.v, 2.0 * u2.v * u2.d1, u1.v / u2.v, -basis.w, disc, true)
            }
        }
    };
    let p0 = q0 / rho;
    let beta = (qd0 - drho * p0) / kappa / 2.0;
    let gamma = (disc + beta * beta) / p0;
    let a = p0 - 2.0 * beta * theta + gamma * theta * theta;
    let b = beta - gamma * theta;
    let c = gamma;
    let coeffs = if swapped {
        ProjectiveCoeffs::new(c, b, a)?
    } else {
        ProjectiveCoeffs::new(a, b, c)?
    };
    Ok(coeffs)
}

/// The standard 2KS equation behind a d2ks equation and the factor `φ` with
/// `w = φz`, `φ = exp[(2/(n−1))∫r]`.
pub fn d2ks_to_standard(spec: &EquationSpec) -> Result<(EquationSpec, TimeFn)> {
    let Family::D2ks { n, q, .. } = &spec.family else {
        return Err(Error::InvalidParameter(format!("expected d2ks, got {}", spec.family.name())));
    };
    let ir = spec.int_r.as_ref().expect("d2ks carries ∫r");
    let e = 2.0 / (n - 1.0);
    let phi = ir.map("φ", move |j| j.scale(e).exp());
    let (lo, hi) = spec.domain();
    let std = EquationSpec::new(Family::Ks2 { n: *n, q: *q }, spec.sol.restrict(lo, hi)?)?;
    Ok((std, phi))
}

/// Largest `|ẍ − F(t, x, ẋ)|` along a curve.
pub fn residual_along(spec: &EquationSpec, curve: &TimeFn, grid: &[f64]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for &t in grid {
        let j = curve.eval(t);
        let r = j.d2 - spec.rhs(t, j.v, j.d1)?;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// One candidate invariant solution.
#[derive(Debug, Clone)]
pub struct ParticularSolution {
    pub label: &'static str,
    pub x: TimeFn,
    /// Constraint as stated for the candidate.
    pub constraint: f64,
    /// Whether the stated constraint holds to [`CONSTRAINT_TOL`].
    pub stated_admissible: bool,
    /// The constraint that makes the candidate an exact solution, when it
    /// differs from the stated one.
    pub exact_constraint: Option<f64>,
    /// Measured residual on the grid; authoritative.
    pub residual: f64,
}

/// Candidates `x = C₀√a` (`H(0) = 0`) and `x = C₀√(sa)`.
///
/// For the second candidate `I = C₀²/2` and the equation reduces to
/// `C₀⁴ + 4H(C₀²/2) = 0`; the stated form `C₀ + 4H(C₀²/2) = 0` is reported
/// alongside.
pub fn particular_solutions(spec: &EquationSpec, c0: f64, grid: &[f64]) -> Result<Vec<ParticularSolution>> {
    let Family::AffineH { h } = &spec.family else {
        return Err(Error::InvalidParameter(format!("expected affine_H, got {}", spec.family.name())));
    };
    let a = spec.sol.a.clone();
    for &t in grid {
        if !(a.value(t) > 0.0) {
            return Err(Error::Domain(format!("a(t) ≤ 0 at t = {t}")));
        }
    }
    let x1 = a.map("C0√a", move |a| a.sqrt().scale(c0));
    let h0 = h.value(0.0);
    let first = ParticularSolution {
        label: "C0*sqrt(a)",
        residual: residual_along(spec, &x1, grid)?,
        x: x1,
        constraint: h0,
        stated_admissible: h0.abs() <= CONSTRAINT_TOL,
        exact_constraint: None,
    };
    let s = spec.sol.s_fn()?;
    let sa = a.zip(&s, "sa", |a, s| a * s);
    for &t in grid {
        if !(sa.value(t) > 0.0) {
            return Err(Error::Domain(format!("s(t)a(t) ≤ 0 at t = {t}")));
        }
    }
    let x2 = sa.map("C0√(sa)", move |q| q.sqrt().scale(c0));
    let hh = h.value(0.5 * c0 * c0);
    let stated = c0 + 4.0 * hh;
    let second = ParticularSolution {
        label: "C0*sqrt(s*a)",
        residual: residual_along(spec, &x2, grid)?,
        x: x2,
        constraint: stated,
        stated_admissible: stated.abs() <= CONSTRAINT_TOL,
        exact_constraint: Some(c0.powi(4) + 4.0 * hh),
    };
    Ok(vec![first, second])
}

/// Partials of a Lagrangian `L(t, z, ż)` needed for the Euler–Lagrange
/// operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangianPartials {
    pub l: f64,
    pub l_z: f64,
    pub l_v: f64,
    pub l_vt: f64,
    pub l_vz: f64,
    pub l_vv: f64,
}

type LagFn = dyn Fn(f64, f64, f64) -> Result<LagrangianPartials> + Send + Sync;

#[derive(Clone)]
pub struct Lagrangian {
    label: String,
    f: Arc<LagFn>,
}

impl fmt::Debug for Lagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lagrangian").field("label", &self.label).finish()
    }
}

impl Lagrangian {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64, f64, f64) -> Result<LagrangianPartials> + Send + Sync + 'static,
    ) -> Self {
        Lagrangian {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn partials(&self, t: f64, z: f64, v: f64) -> Result<LagrangianPartials> {
        (self.f)(t, z, v)
    }

    /// `((1−n)/4)² z^{−(n+3)/2} ż² − I(t) z^{(1−n)/2} − q z^{(n−1)/2}`.
    pub fn ks2(n: f64, q: f64, potential: TimeFn) -> Self {
        let c2 = ((1.0 - n) / 4.0).powi(2);
        let e = -(n + 3.0) / 2.0;
        let (e1, e2) = ((1.0 - n) / 2.0, (n - 1.0) / 2.0);
        Lagrangian::new("ks2", move |t, z, v| {
            if !(z > 0.0) {
                return Err(Error::Singularity(format!("Lagrangian needs z > 0, got {z}")));
            }
            let i = potential.eval(t);
            Ok(LagrangianPartials {
                l: c2 * z.powf(e) * v * v - i.v * z.powf(e1) - q * z.powf(e2),
                l_z: c2 * e * z.powf(e - 1.0) * v * v - i.v * e1 * z.powf(e1 - 1.0) - q * e2 * z.powf(e2 - 1.0),
                l_v: 2.0 * c2 * z.powf(e) * v,
                l_vt: 0.0,
                l_vz: 2.0 * c2 * e * z.powf(e - 1.0) * v,
                l_vv: 2.0 * c2 * z.powf(e),
            })
        })
    }

    /// `1/(r' + r²)`.
    pub fn riccati() -> Self {
        Lagrangian::new("1/(r'+r^2)", |_, r, v| {
            let d = v + r * r;
            if d.abs() < 1e-12 {
                return Err(Error::Singularity(format!("r' + r² vanishes at r = {r}")));
            }
            Ok(LagrangianPartials {
                l: 1.0 / d,
                l_z: -2.0 * r / (d * d),
                l_v: -1.0 / (d * d),
                l_vt: 0.0,
                l_vz: 4.0 * r / d.powi(3),
                l_vv: 2.0 / d.powi(3),
            })
        })
    }
}

/// `d/dt(L_ż) − L_z` along a curve.
pub fn el_residual(lag: &Lagrangian, curve: &TimeFn, t: f64) -> Result<f64> {
    let j = curve.eval(t);
    let p = lag.partials(t, j.v, j.d1)?;
    let r = p.l_vt + p.l_vz * j.d1 + p.l_vv * j.d2 - p.l_z;
    if !r.is_finite() {
        return Err(Error::Singularity(format!("Euler–Lagrange residual not finite at {t}")));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hill::{catalog_basis, HillBasis, HillFamily};
    use crate::oracle::{integrate_ivp, IntegratorOptions};
    use crate::projective::build_a;
    use crate::timefn::linspace;

    fn sol(family: HillFamily, c: (f64, f64, f64)) -> ProjectiveSolution {
        build_a(&catalog_basis(family).unwrap(), ProjectiveCoeffs::new(c.0, c.1, c.2).unwrap())
    }

    fn cos_a() -> ProjectiveSolution {
        sol(HillFamily::ConstPos { lambda: 1.0 }, (1.0, 0.0, -1.0)).restrict(-1.4, 1.4).unwrap()
    }

    fn ince_basis() -> HillBasis {
        catalog_basis(HillFamily::Ince { alpha: 0.0 }).unwrap()
    }

    #[test]
    fn cubic_h_evaluation() {
        let h = CubicH::new(0.3, -1.0, 2.0, 0.5);
        for i in [-2.0, -0.1, 0.0, 0.7, 3.0] {
            let brute = 0.3 * i * i * i - i * i + 2.0 * i + 0.5;
            assert!((h.eval(i) - brute).abs() < 1e-12);
            let d = h.derivs(i);
            let e = 1e-5;
            assert!((d[1] - (h.eval(i + e) - h.eval(i - e)) / (2.0 * e)).abs() < 1e-6);
        }
        assert_eq!(CubicH::emden(1.0).coeffs(), [0.0, 3.0, -3.0, 0.5]);
        assert_eq!(CubicH::constant(2.0).as_constant(), Some(2.0));
        assert_eq!(CubicH::emden(1.0).as_constant(), None);
        let op = HFunction::opaque("sin", |i: f64| (i.sin(), i.cos()));
        let e = 1e-5;
        let fd = (op.value(0.4 + e) - op.value(0.4 - e)) / (2.0 * e);
        assert!((op.eval(0.4).1 - fd).abs() < 1e-5);
        assert!(op.as_cubic().is_none());
    }

    #[test]
    fn invariant_examples() {
        let one = sol(HillFamily::Free, (0.0, 0.0, 1.0));
        let j = invariants(&one, 0.3, 1.5, -0.4).unwrap();
        assert_eq!((j.i, j.j1, j.j2), (1.5 * -0.4, 1.5, -0.4));
        // along x = C₀√(sa), I = C₀²/2
        let a = sol(HillFamily::Ince { alpha: 0.0 }, (1.4, 0.0, 0.6));
        let s = a.s_fn().unwrap();
        let c0 = 1.3;
        let x = a.a.zip(&s, "x", move |a, s| (a * s).sqrt().scale(c0));
        for t in linspace(0.2, 1.2, 6) {
            let j = x.eval(t);
            assert!((invariant_i(&a, t, j.v, j.d1).unwrap() - 0.5 * c0 * c0).abs() < 1e-9);
        }
        for (t, x, v) in [(0.1, 0.5, 2.0), (-0.7, 3.0, -1.0), (1.1, 1.2, 0.3)] {
            let j = invariants(&a, t, x, v).unwrap();
            assert!((j.i - j.j1 * j.j2).abs() < 1e-12);
        }
        let cs = sol(HillFamily::ConstPos { lambda: 1.0 }, (1.0, 0.0, -1.0));
        assert!(matches!(invariant_i(&cs, 2.0, 1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn rhs_examples() {
        let one = sol(HillFamily::Free, (0.0, 0.0, 1.0));
        let spec = EquationSpec::new(Family::AffineH { h: CubicH::new(0.0, 0.0, 1.0, 0.0).into() }, one).unwrap();
        assert!((spec.rhs(0.0, 2.0, 3.0).unwrap() - 0.75).abs() < 1e-15);
        let spec = EquationSpec::new(Family::Sl2Const { h0: 1.0 }, cos_a()).unwrap();
        assert!((spec.k() + 0.25).abs() < 1e-15);
        assert!((spec.rhs(0.0, 1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let spec = EquationSpec::new(
            Family::D2ks { n: 3.0, q: 1.0, r: TimeFn::constant(1.0) },
            sol(HillFamily::Ince { alpha: 0.0 }, (1.0, 0.0, 1.0)),
        )
        .unwrap();
        assert!((spec.p().value(0.4) - 1.25).abs() < 1e-15);
        let w = TimeFn::exp(1.0);
        assert!(residual_along(&spec, &w, &linspace(-1.0, 1.0, 9)).unwrap() < 1e-10);
        assert!(matches!(spec.rhs(0.0, -1.0, 0.0), Err(Error::Singularity(_))));
        assert!(EquationSpec::new(Family::Ks2 { n: 1.0, q: 1.0 }, cos_a()).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let free = sol(HillFamily::Free, (1.0, 0.0, 0.0));
        let spec = EquationSpec::new(Family::Ep { k: 1.0 }, free).unwrap();
        let x = closed_form_solution(&spec, ProjectiveCoeffs::new(1.0, 0.0, 1.0).unwrap()).unwrap();
        assert!((x.value(1.0) - 2f64.sqrt()).abs() < 1e-15);
        let spec = EquationSpec::new(Family::Sl2Const { h0: 1.0 }, cos_a()).unwrap();
        let x = closed_form_solution(&spec, ProjectiveCoeffs::new(1.0, 0.0, 1.0).unwrap()).unwrap();
        let j = x.eval(0.0);
        assert!((j.v - 1.0).abs() < 1e-14 && j.d1.abs() < 1e-14);
        assert!((j.d2 - 0.5).abs() < 1e-8);
        let spec = EquationSpec::new(
            Family::D2ks { n: 3.0, q: 1.0, r: TimeFn::constant(1.0) },
            sol(HillFamily::Ince { alpha: 0.0 }, (1.0, 0.0, 1.0)),
        )
        .unwrap();
        let w = closed_form_solution(&spec, ProjectiveCoeffs::new(1.0, 0.0, 1.0).unwrap()).unwrap();
        for t in linspace(-2.0, 2.0, 9) {
            assert!((w.value(t) - t.exp()).abs() < 1e-9 * t.exp());
        }
        assert!(matches!(
            closed_form_solution(&spec, ProjectiveCoeffs::new(1.0, 0.0, 2.0).unwrap()),
            Err(Error::InvalidParameter(_))
        ));
    }

    fn family_fixtures() -> Vec<(EquationSpec, ProjectiveCoeffs)> {
        let pc = |a, b, c| ProjectiveCoeffs::new(a, b, c).unwrap();
        let ince = sol(HillFamily::Ince { alpha: 0.0 }, (1.3, 0.2, 0.8));
        let specs = vec![
            (EquationSpec::new(Family::Ep { k: 0.75 }, ince.clone()).unwrap(), pc(1.0, 0.5, 1.0)),
            (EquationSpec::new(Family::Sl2Const { h0: 2.0 }, ince.clone()).unwrap(), pc(1.5, 0.5, 1.5)),
            (EquationSpec::new(Family::GenKs { n: 3.0, h0: 0.5 }, ince.clone()).unwrap(), pc(1.0, 0.5, 0.75)),
            (EquationSpec::new(Family::GenKs { n: -1.0, h0: -0.2 }, ince.clone()).unwrap(), pc(1.0, 0.2, -0.16)),
            (
                EquationSpec::new(Family::AffineH { h: CubicH::constant(1.0).into() }, ince.clone()).unwrap(),
                pc(1.0, 0.0, 1.0),
            ),
            (
                EquationSpec::new(Family::AffineHn { n: 0.0, h: CubicH::constant(2.0).into() }, ince.clone()).unwrap(),
                pc(1.0, 0.5, 0.75),
            ),
            (EquationSpec::new(Family::Ks2 { n: 5.0, q: 2.0 }, ince.clone()).unwrap(), pc(2.0, 1.0, 1.5)),
            (
                EquationSpec::new(
                    Family::D2ks { n: 3.0, q: 1.0, r: TimeFn::polynomial(&[0.5, 0.3]) },
                    build_a(&ince_basis(), pc(1.0, 0.0, 1.0)),
                )
                .unwrap(),
                pc(1.25, 0.5, 1.0),
            ),
        ];
        specs.into_iter().map(|(s, c)| (s.restrict(-1.2, 1.2).unwrap(), c)).collect()
    }

    #[test]
    fn closed_forms_solve_their_equations() {
        let grid = linspace(-1.0, 1.0, 21);
        for (spec, c) in family_fixtures() {
            let x = closed_form_solution(&spec, c).unwrap();
            let r = residual_along(&spec, &x, &grid).unwrap();
            assert!(r <= 1e-8, "{}: {r}", spec.family.name());
        }
    }

    #[test]
    fn constants_from_ic_round_trip() {
        for (spec, c) in family_fixtures() {
            let x = closed_form_solution(&spec, c).unwrap();
            for t0 in [0.0, 0.6, -0.9] {
                let j = x.eval(t0);
                let got = constants_from_ic(&spec, j.v, j.d1, t0).unwrap();
                let y = closed_form_solution(&spec, got).unwrap();
                for t in linspace(-1.0, 1.0, 5) {
                    assert!((x.value(t) - y.value(t)).abs() < 1e-8, "{} t0={t0}", spec.family.name());
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_oracle() {
        for (spec, c) in family_fixtures() {
            let x = closed_form_solution(&spec, c).unwrap();
            let j = x.eval(0.0);
            let curve = integrate_ivp(&spec.ivp(j.v, j.d1, (0.0, 1.0)), &IntegratorOptions::default()).unwrap();
            for t in linspace(0.0, 1.0, 11) {
                assert!((curve.eval(t)[0] - x.value(t)).abs() < 1e-7, "{}", spec.family.name());
            }
        }
    }

    #[test]
    fn d2ks_standard_form() {
        let b = sol(HillFamily::Ince { alpha: 0.0 }, (1.0, 0.0, 1.0));
        let spec = EquationSpec::new(Family::D2ks { n: 3.0, q: 1.0, r: TimeFn::constant(1.0) }, b.clone()).unwrap();
        let (std, phi) = d2ks_to_standard(&spec).unwrap();
        assert!(matches!(std.family, Family::Ks2 { .. }));
        assert!((std.p().value(0.3) - 1.0).abs() < 1e-15);
        assert!((phi.value(0.7) - 0.7f64.exp()).abs() < 1e-12);
        let spec0 = EquationSpec::new(Family::D2ks { n: 3.0, q: 1.0, r: TimeFn::constant(0.0) }, b.clone()).unwrap();
        let (_, phi0) = d2ks_to_standard(&spec0).unwrap();
        assert_eq!(phi0.value(0.7), 1.0);
        let spec5 = EquationSpec::new(Family::D2ks { n: 5.0, q: 1.0, r: TimeFn::constant(2.0) }, b).unwrap();
        let (std5, phi5) = d2ks_to_standard(&spec5).unwrap();
        assert!((phi5.value(0.7) - 0.7f64.exp()).abs() < 1e-12);
        // w = φz carries standard solutions to d2ks solutions
        let c = ProjectiveCoeffs::new(1.0, 0.3, 1.09).unwrap();
        let z = closed_form_solution(&std5, c).unwrap();
        let w = z.zip(&phi5, "w", |z, p| z * p);
        assert!(residual_along(&spec5, &w, &linspace(-1.0, 1.0, 11)).unwrap() < 1e-8);
        assert!(d2ks_to_standard(&std5).is_err());
    }

    #[test]
    fn particular_solution_candidates() {
        let spec = EquationSpec::new(Family::AffineH { h: CubicH::default().into() }, cos_a()).unwrap();
        let c = particular_solutions(&spec, 1.3, &linspace(0.1, 1.0, 10)).unwrap();
        assert!(c[0].stated_admissible && c[0].residual <= 1e-9);
        let one = sol(HillFamily::Free, (0.0, 0.0, 1.0));
        let spec = EquationSpec::new(Family::AffineH { h: CubicH::new(0.0, 0.0, 1.0, 0.0).into() }, one.clone()).unwrap();
        let c = particular_solutions(&spec, 0.8, &linspace(0.1, 1.0, 10)).unwrap();
        assert!(c[0].stated_admissible && c[0].residual == 0.0);
        let spec = EquationSpec::new(Family::AffineH { h: CubicH::constant(0.5).into() }, one.clone()).unwrap();
        let c = particular_solutions(&spec, 0.8, &linspace(0.1, 1.0, 10)).unwrap();
        assert!(!c[0].stated_admissible && c[0].residual > 0.1);
        // H ≡ −C₀⁴/4 makes the second candidate exact while C₀ + 4H ≠ 0
        let c0 = 1.2f64;
        let spec = EquationSpec::new(Family::AffineH { h: CubicH::constant(-c0.powi(4) / 4.0).into() }, one).unwrap();
        let c = particular_solutions(&spec, c0, &linspace(0.1, 1.0, 10)).unwrap();
        assert!(c[1].residual < 1e-9);
        assert!(c[1].exact_constraint.unwrap().abs() < 1e-12);
        assert!(!c[1].stated_admissible);
    }

    #[test]
    fn lagrangian_examples() {
        let ks = Lagrangian::ks2(3.0, 1.0, TimeFn::constant(1.0));
        let spec = EquationSpec::new(Family::Ks2 { n: 3.0, q: 1.0 }, sol(HillFamily::Ince { alpha: 0.0 }, (1.0, 0.0, 1.0))).unwrap();
        let z = closed_form_solution(&spec, ProjectiveCoeffs::new(1.0, 0.0, 1.0).unwrap()).unwrap();
        assert!(el_residual(&ks, &z, 0.4).unwrap().abs() < 1e-12);
        let z = closed_form_solution(&spec, ProjectiveCoeffs::new(2.0, 0.5, 0.625).unwrap()).unwrap();
        for t in linspace(-1.0, 1.0, 7) {
            assert!(el_residual(&ks, &z, t).unwrap().abs() < 1e-9);
        }
        let l = Lagrangian::riccati();
        let hc = TimeFn::polynomial(&[1.0, 0.0, 1.0]).map("ρ'/ρ", |p| p.derivative() / p);
        for s in linspace(0.1, 2.0, 9) {
            assert!(el_residual(&l, &hc, s).unwrap().abs() < 1e-9);
        }
        let r = TimeFn::polynomial(&[0.0, 1.0]);
        assert!((el_residual(&l, &r, 1.0).unwrap() - 1.0).abs() < 1e-14);
        let bad = TimeFn::polynomial(&[0.0, 0.0]);
        assert!(matches!(el_residual(&l, &bad, 1.0), Err(Error::Singularity(_))));
    }

    #[test]
    fn family_overlaps() {
        let a = sol(HillFamily::Ince { alpha: 0.0 }, (1.3, 0.2, 0.8));
        let pts = [(0.1, 0.7, -0.3), (-0.8, 1.9, 0.6), (1.2, 0.4, 1.5)];
        let h = HFunction::from(CubicH::constant(0.7));
        let x = EquationSpec::new(Family::AffineH { h: h.clone() }, a.clone()).unwrap();
        let z = EquationSpec::new(Family::AffineHn { n: -3.0, h }, a.clone()).unwrap();
        let s = EquationSpec::new(Family::Sl2Const { h0: 0.7 }, a).unwrap();
        for (t, p, v) in pts {
            assert!((x.rhs(t, p, v).unwrap() - z.rhs(t, p, v).unwrap()).abs() < 1e-12);
            assert!((x.rhs(t, p, v).unwrap() - s.rhs(t, p, v).unwrap()).abs() < 1e-12);
        }
        // K = 0 reduces sl2_const to the EP equation
        let sq = sol(HillFamily::ConstPos { lambda: 1.0 }, (1.0, 0.0, 0.0)).restrict(-1.0, 1.0).unwrap();
        let s = EquationSpec::new(Family::Sl2Const { h0: 0.7 }, sq.clone()).unwrap();
        let e = EquationSpec::new(Family::Ep { k: 0.7 }, sq).unwrap();
        for (t, p, v) in pts.iter().map(|&(t, p, v)| (t * 0.5, p, v)) {
            assert!((s.rhs(t, p, v).unwrap() - e.rhs(t, p, v).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn j2_conserved_without_h() {
        let a = sol(HillFamily::ConstPos { lambda: 1.0 }, (1.0, 0.3, 0.5)).restrict(-1.0, 1.0).unwrap();
        let spec = EquationSpec::new(Family::AffineH { h: CubicH::default().into() }, a.clone()).unwrap();
        let curve = integrate_ivp(&spec.ivp(1.0, 0.2, (0.0, 1.0)), &IntegratorOptions::default()).unwrap();
        let j0 = invariants(&a, 0.0, 1.0, 0.2).unwrap().j2;
        for n in curve.nodes() {
            let j = invariants(&a, n.t, n.y[0], n.y[1]).unwrap();
            assert!((j.j2 - j0).abs() < 1e-8);
        }
    }
}

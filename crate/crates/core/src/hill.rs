//! Fundamental solutions of the Hill equation `ẍ + p(t)x = 0`.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::oracle::{integrate_ivp, IntegratorOptions, Ivp};
use crate::timefn::TimeFn;

/// Default domain of catalog bases.
pub const CATALOG_DOMAIN: (f64, f64) = (-10.0, 10.0);

/// Closed-form families of the catalog.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HillFamily {
    /// `p = 0`, `u₁ = t`, `u₂ = 1`.
    Free,
    /// `p = −λ²/4`, `u₁ = e^{λt/2}`, `u₂ = e^{−λt/2}`.
    ConstNeg { lambda: f64 },
    /// `p = λ²/4`, `u₁ = cos(λt/2)`, `u₂ = sin(λt/2)`.
    ConstPos { lambda: f64 },
    /// `p = 1` with `(cos t, sin t)`; `α` selects `a = 1 + α cos 2t`.
    Ince { alpha: f64 },
    /// Numerically integrated or user supplied.
    Custom,
}

impl HillFamily {
    pub fn name(&self) -> &'static str {
        match self {
            HillFamily::Free => "free",
            HillFamily::ConstNeg { .. } => "const_neg",
            HillFamily::ConstPos { .. } => "const_pos",
            HillFamily::Ince { .. } => "ince",
            HillFamily::Custom => "custom",
        }
    }
}

/// A fundamental pair `(u₁, u₂)` with constant Wronskian `W = u₁u̇₂ − u₂u̇₁`.
#[derive(Debug, Clone)]
pub struct HillBasis {
    pub family: HillFamily,
    pub p: TimeFn,
    pub u1: TimeFn,
    pub u2: TimeFn,
    pub w: f64,
}

impl HillBasis {
    /// Assemble a basis, measuring `W` at the domain anchor.
    pub fn new(p: TimeFn, u1: TimeFn, u2: TimeFn) -> Result<HillBasis> {
        let (lo, hi) = u1.domain();
        let t = crate::timefn::default_anchor((lo.max(u2.domain().0), hi.min(u2.domain().1)));
        let (a, b) = (u1.eval(t), u2.eval(t));
        let w = a.v * b.d1 - b.v * a.d1;
        if !(w.abs() > 1e-14) {
            return Err(Error::InvalidParameter("basis solutions are linearly dependent".into()));
        }
        Ok(HillBasis {
            family: HillFamily::Custom,
            p,
            u1,
            u2,
            w,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        let (a, b) = self.u1.domain();
        let (c, d) = self.u2.domain();
        let (e, f) = self.p.domain();
        (a.max(c).max(e), b.min(d).min(f))
    }

    /// Same basis on a sub-interval of its domain.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<HillBasis> {
        Ok(HillBasis {
            family: self.family,
            p: self.p.restrict(lo, hi)?,
            u1: self.u1.restrict(lo, hi)?,
            u2: self.u2.restrict(lo, hi)?,
            w: self.w,
        })
    }

    /// Pointwise Wronskian `u₁u̇₂ − u₂u̇₁`.
    pub fn wronskian_at(&self, t: f64) -> f64 {
        let (a, b) = (self.u1.eval(t), self.u2.eval(t));
        a.v * b.d1 - b.v * a.d1
    }

    /// Largest `|ü_i + p u_i|` over a grid.
    pub fn residual(&self, grid: &[f64]) -> f64 {
        grid.iter()
            .map(|&t| {
                let p = self.p.value(t);
                let r1 = self.u1.eval(t).d2 + p * self.u1.value(t);
                let r2 = self.u2.eval(t).d2 + p * self.u2.value(t);
                r1.abs().max(r2.abs())
            })
            .fold(0.0, f64::max)
    }

    /// The ratio `u₂/u₁`, a solution of `{τ; t} = 2p`.
    pub fn ratio(&self) -> TimeFn {
        self.u2.zip(&self.u1, "u2/u1", |b, a| b / a)
    }
}

/// Closed-form catalog bases on [`CATALOG_DOMAIN`].
pub fn catalog_basis(family: HillFamily) -> Result<HillBasis> {
    let dom = CATALOG_DOMAIN;
    let basis = match family {
        HillFamily::Free => HillBasis {
            family,
            p: TimeFn::constant(0.0),
            u1: TimeFn::polynomial(&[0.0, 1.0]),
            u2: TimeFn::constant(1.0),
            w: -1.0,
        },
        HillFamily::ConstNeg { lambda } => {
            if lambda == 0.0 || !lambda.is_finite() {
                return Err(Error::InvalidParameter(format!("const_neg needs λ ≠ 0, got {lambda}")));
            }
            HillBasis {
                family,
                p: TimeFn::constant(-lambda * lambda / 4.0),
                u1: TimeFn::exp(lambda / 2.0),
                u2: TimeFn::exp(-lambda / 2.0),
                w: -lambda,
            }
        }
        HillFamily::ConstPos { lambda } => {
            if lambda == 0.0 || !lambda.is_finite() {
                return Err(Error::InvalidParameter(format!("const_pos needs λ ≠ 0, got {lambda}")));
            }
            HillBasis {
                family,
                p: TimeFn::constant(lambda * lambda / 4.0),
                u1: TimeFn::cos(lambda / 2.0),
                u2: TimeFn::sin(lambda / 2.0),
                w: lambda / 2.0,
            }
        }
        HillFamily::Ince { alpha } => {
            if !(alpha.abs() < 1.0) {
                return Err(Error::InvalidParameter(format!("ince needs |α| < 1, got {alpha}")));
            }
            HillBasis {
                family,
                p: TimeFn::constant(1.0),
                u1: TimeFn::cos(1.0),
                u2: TimeFn::sin(1.0),
                w: 1.0,
            }
        }
        HillFamily::Custom => {
            return Err(Error::InvalidParameter("custom bases are not in the catalog".into()))
        }
    };
    basis.restrict(dom.0, dom.1)
}

/// Numerical solution of `ü + p u = 0`, `u(t₀) = x₀`, `u̇(t₀) = v₀` on
/// `range = (t₀, t₁)`.
///
/// `u` and `u̇` come from the dense output; `ü = −pu` and
/// `u‴ = −ṗu − pu̇` are formed analytically.
pub fn solve_hill(p: &TimeFn, ic: (f64, f64), range: (f64, f64), tol: f64) -> Result<TimeFn> {
    let (t0, t1) = range;
    let (lo, hi) = p.domain();
    if t0.min(t1) < lo || t0.max(t1) > hi {
        return Err(Error::Domain(format!("range [{t0}, {t1}] outside domain of p")));
    }
    let pf = p.clone();
    let ivp = Ivp::second_order(move |t, x, _| -pf.value(t) * x, ic.0, ic.1, range);
    let opts = IntegratorOptions::new(tol.max(1e-13), (tol * 1e-2).max(1e-14)).max_step((t1 - t0).abs() / 256.0);
    let curve = integrate_ivp(&ivp, &opts)?;
    let p = p.clone();
    let domain = (t0.min(t1), t0.max(t1));
    Ok(TimeFn::new("hill", domain, move |t| {
        let y = curve.eval(t);
        let pj = p.eval(t);
        let (u, du) = (y[0], y[1]);
        Jet::new(u, du, -pj.v * u, -pj.d1 * u - pj.v * du)
    }))
}

/// Invariant and self-adjointness flags of `a⃛ + c₂ä + c₁ȧ + c₀a = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reducibility {
    /// Largest `|9c̈₂ + 18ċ₂c₂ − 27ċ₁ + 4c₂³ − 18c₁c₂ + 54c₀|` on the grid.
    pub invariant_max: f64,
    /// `c₂ ≡ 0` on the grid.
    pub c2_vanishes: bool,
    /// `ċ₁ = 2c₀` on the grid.
    pub c1_dot_is_2c0: bool,
}

impl Reducibility {
    pub fn self_adjoint(&self) -> bool {
        self.c2_vanishes && self.c1_dot_is_2c0
    }
}

pub fn lf_reducibility(c0: &TimeFn, c1: &TimeFn, c2: &TimeFn, grid: &[f64]) -> Result<Reducibility> {
    const FLAG_TOL: f64 = 1e-12;
    let mut out = Reducibility {
        invariant_max: 0.0,
        c2_vanishes: true,
        c1_dot_is_2c0: true,
    };
    for &t in grid {
        for f in [c0, c1, c2] {
            if !f.contains(t) {
                return Err(Error::Domain(format!("{t} outside domain of {}", f.label())));
            }
        }
        let (a0, a1, a2) = (c0.eval(t), c1.eval(t), c2.eval(t));
        let inv = 9.0 * a2.d2 + 18.0 * a2.d1 * a2.v - 27.0 * a1.d1 + 4.0 * a2.v.powi(3) - 18.0 * a1.v * a2.v
            + 54.0 * a0.v;
        out.invariant_max = out.invariant_max.max(inv.abs());
        out.c2_vanishes &= a2.v.abs() <= FLAG_TOL;
        out.c1_dot_is_2c0 &= (a1.d1 - 2.0 * a0.v).abs() <= FLAG_TOL * (1.0 + a0.v.abs());
    }
    Ok(out)
}

/// Möbius coefficients `(α, β, γ, δ)` of `τ = (αu₁+βu₂)/(γu₁+δu₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Mobius {
    pub const IDENTITY: Mobius = Mobius { alpha: 1.0, beta: 0.0, gamma: 0.0, delta: 1.0 };

    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        Mobius { alpha, beta, gamma, delta }
    }

    pub fn det(&self) -> f64 {
        self.alpha * self.delta - self.beta * self.gamma
    }
}

/// Largest `|d³ā/dt̄³|` of the Laguerre–Forsyth image of `a` on a grid, where
/// `t̄ = τ(t)` and `ā = −ΔW(γu₁+δu₂)⁻² a`.
///
/// The chain rule gives `d³ā/dt̄³ = (N'τ' − 3Nτ'')/τ'⁵` with
/// `N = ā''τ' − ā'τ''`, all in `t`-derivatives.
pub fn laguerre_forsyth_check(basis: &HillBasis, m: Mobius, a: &TimeFn, grid: &[f64]) -> Result<f64> {
    const DENOM_MIN: f64 = 1e-12;
    let det = m.det();
    if det == 0.0 {
        return Err(Error::InvalidParameter("Möbius map is degenerate (Δ = 0)".into()));
    }
    let mut worst = 0.0_f64;
    for &t in grid {
        let (u1, u2) = (basis.u1.eval(t), basis.u2.eval(t));
        let den = u1.scale(m.gamma) + u2.scale(m.delta);
        if den.v.abs() < DENOM_MIN {
            return Err(Error::Singularity(format!("γu₁+δu₂ vanishes at t = {t}")));
        }
        let num = u1.scale(m.alpha) + u2.scale(m.beta);
        let tau = num / den;
        let abar = (den * den).recip() * a.eval(t) * (-det * basis.w);
        let n = abar.d2 * tau.d1 - abar.d1 * tau.d2;
        let dn = abar.d3 * tau.d1 - abar.d1 * tau.d3;
        let third = (dn * tau.d1 - 3.0 * n * tau.d2) / tau.d1.powi(5);
        if !third.is_finite() {
            return Err(Error::Singularity(format!("τ' vanishes at t = {t}")));
        }
        worst = worst.max(third.abs());
    }
    Ok(worst)
}

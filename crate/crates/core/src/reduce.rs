//! Canonical coordinates `(s, r)` straightening the affine symmetry, and the
//! two-quadrature solution of the reduced equation
//! `r'' = σr'²/r + rⁿH(ω)`, `ω = ((1−n)/4) r^{−(n+1)/2} r'`.

use crate::error::{Error, Result};
use crate::invariant_eqs::{EquationSpec, Family, HFunction};
use crate::jet::Jet;
use crate::oracle::{integrate_ivp, CurveStatus, Event, IntegratorOptions, Ivp, SolutionCurve};
use crate::projective::ProjectiveSolution;
use crate::timefn::TimeFn;

/// Chart `r = a^{2/(n−1)} z`, `s = ∫dt/a`.
#[derive(Debug, Clone)]
pub struct CanonicalChart {
    pub sol: ProjectiveSolution,
    pub n: f64,
    s: TimeFn,
}

impl CanonicalChart {
    pub fn new(sol: &ProjectiveSolution, n: f64) -> Result<CanonicalChart> {
        if n == 1.0 || !n.is_finite() {
            return Err(Error::InvalidParameter(format!("canonical chart needs finite n ≠ 1, got {n}")));
        }
        Ok(CanonicalChart {
            sol: sol.clone(),
            n,
            s: sol.s_fn()?,
        })
    }

    fn e(&self) -> f64 {
        2.0 / (self.n - 1.0)
    }

    pub fn s_fn(&self) -> &TimeFn {
        &self.s
    }

    pub fn forward(&self, t: f64, x: f64) -> (f64, f64) {
        let a = self.sol.a.value(t);
        (self.s.value(t), a.powf(self.e()) * x)
    }

    /// `(s, r, dr/ds, d²r/ds²)` from `(t, z, ż, z̈)`.
    pub fn forward_jet(&self, t: f64, z: f64, zd: f64, zdd: f64) -> [f64; 4] {
        let e = self.e();
        let a = self.sol.a.eval(t);
        let ae = a.v.powf(e);
        let inner = e * a.d1 * z + a.v * zd;
        let r1 = ae * inner;
        let r2 = a.v.powf(e + 1.0)
            * (e * a.d1 / a.v * inner + e * a.d2 * z + (e + 1.0) * a.d1 * zd + a.v * zdd);
        [self.s.value(t), ae * z, r1, r2]
    }

    /// The time with `s(t) = s`, by safeguarded Newton iteration.
    pub fn time_of(&self, s: f64) -> Result<f64> {
        let (mut lo, mut hi) = self.s.domain();
        let (slo, shi) = (self.s.value(lo), self.s.value(hi));
        if !(s >= slo && s <= shi) {
            return Err(Error::Domain(format!("s = {s} outside chart range [{slo}, {shi}]")));
        }
        let mut t = lo + (hi - lo) * (s - slo) / (shi - slo);
        for _ in 0..200 {
            let j = self.s.eval(t);
            let f = j.v - s;
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let mut next = t - f / j.d1;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-15 * t.abs().max(1.0) {
                return Ok(next);
            }
            t = next;
        }
        Err(Error::Convergence(format!("could not invert s(t) = {s}")))
    }

    pub fn backward(&self, s: f64, r: f64) -> Result<(f64, f64)> {
        let t = self.time_of(s)?;
        Ok((t, r * self.sol.a.value(t).powf(-self.e())))
    }

    /// `(t, z, ż, z̈)` from `(s, r, dr/ds, d²r/ds²)`.
    pub fn backward_jet(&self, s: f64, r: f64, r1: f64, r2: f64) -> Result<[f64; 4]> {
        let e = self.e();
        let t = self.time_of(s)?;
        let a = self.sol.a.eval(t);
        let ae = a.v.powf(e);
        let z = r / ae;
        let zd = (r1 / ae - e * a.d1 * z) / a.v;
        let inner = e * a.d1 * z + a.v * zd;
        let zdd = (r2 / a.v.powf(e + 1.0) - e * a.d1 / a.v * inner - e * a.d2 * z - (e + 1.0) * a.d1 * zd) / a.v;
        Ok([t, z, zd, zdd])
    }

    /// `d²r/ds²` of the transported equation at `(s, r, r')`.
    pub fn transported_rhs(&self, spec: &EquationSpec, s: f64, r: f64, r1: f64) -> Result<f64> {
        let [t, z, zd, _] = self.backward_jet(s, r, r1, 0.0)?;
        let zdd = spec.rhs(t, z, zd)?;
        Ok(self.forward_jet(t, z, zd, zdd)[3])
    }
}

pub fn canonical_maps(sol: &ProjectiveSolution, n: f64) -> Result<CanonicalChart> {
    CanonicalChart::new(sol, n)
}

/// The reduced right-hand side `σr'²/r + rⁿH(ω)` and its partials in `r`, `r'`.
fn reduced_rhs(h: &HFunction, n: f64, r: f64, p: f64) -> (f64, f64, f64) {
    let c = (1.0 - n) / 4.0;
    let m = (n + 1.0) / 2.0;
    let sigma = (n + 3.0) / 4.0;
    let w = c * r.powf(-m) * p;
    let (hv, dh) = h.eval(w);
    let f = sigma * p * p / r + r.powf(n) * hv;
    let w_r = -m * w / r;
    let w_p = c * r.powf(-m);
    let f_r = -sigma * p * p / (r * r) + n * r.powf(n - 1.0) * hv + r.powf(n) * dh * w_r;
    let f_p = 2.0 * sigma * p / r + r.powf(n) * dh * w_p;
    (f, f_r, f_p)
}

/// `r(s)` obtained from the separable reduction.
#[derive(Debug, Clone)]
pub struct ReducedCurve {
    pub n: f64,
    h: HFunction,
    range: (f64, f64),
    kind: ReducedKind,
    /// Largest `|r'' − F(r, r')|` with `r''` formed from the interpolated
    /// stage-one slope.
    pub defect: f64,
}

#[derive(Debug, Clone)]
enum ReducedKind {
    Constant(f64),
    Flow {
        /// `(ω, s)` against `ξ = ln r`.
        stage1: SolutionCurve<2>,
        /// `r` against `s`.
        stage2: SolutionCurve<1>,
    },
}

impl ReducedCurve {
    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    fn phi(stage1: &SolutionCurve<2>, xi: f64) -> f64 {
        stage1.eval(xi)[0]
    }

    /// `[r, r', r'', r''']` at `s`.
    pub fn jet(&self, s: f64) -> [f64; 4] {
        match &self.kind {
            ReducedKind::Constant(r) => [*r, 0.0, 0.0, 0.0],
            ReducedKind::Flow { stage1, stage2 } => {
                let c = (1.0 - self.n) / 4.0;
                let m = (self.n + 1.0) / 2.0;
                let r = stage2.eval(s)[0];
                let p = r.powf(m) * Self::phi(stage1, r.ln()) / c;
                let (f, f_r, f_p) = reduced_rhs(&self.h, self.n, r, p);
                [r, p, f, f_r * p + f_p * f]
            }
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        self.jet(s)[0]
    }

    pub fn to_timefn(&self) -> TimeFn {
        let me = self.clone();
        let (a, b) = self.range;
        TimeFn::new("r(s)", (a.min(b), a.max(b)), move |s| {
            let [r, p, q, u] = me.jet(s);
            Jet::new(r, p, q, u)
        })
    }
}

/// Solve `r'' = σr'²/r + rⁿH(ω)` from `r(s₀) = r₀`, `r'(s₀) = R₀` on
/// `srange = (s₀, s₁)`.
///
/// Stage one integrates `dω/dξ = cω + c²H(ω)/ω` together with
/// `ds/dξ = c e^{(1−m)ξ}/ω` (`c = (1−n)/4`, `m = (n+1)/2`) until `s` reaches
/// `s₁`; stage two integrates `dr/ds = r^m Φ(ln r)/c` with the stage-one
/// interpolant `Φ`.
pub fn separable_solve(h: &HFunction, n: f64, ic: (f64, f64), srange: (f64, f64), tol: f64) -> Result<ReducedCurve> {
    if n == 1.0 || !n.is_finite() {
        return Err(Error::InvalidParameter(format!("reduction needs finite n ≠ 1, got {n}")));
    }
    let (r0, big_r0) = ic;
    if !(r0 > 0.0) {
        return Err(Error::Singularity(format!("reduction needs r₀ > 0, got {r0}")));
    }
    let (s0, s1) = srange;
    let c = (1.0 - n) / 4.0;
    let m = (n + 1.0) / 2.0;
    let w0 = c * r0.powf(-m) * big_r0;
    if !w0.is_finite() {
        return Err(Error::InvalidParameter("ω₀ is not finite".into()));
    }
    let opts = IntegratorOptions::new(tol.max(1e-13), (tol * 1e-2).max(1e-14));
    let h_at_zero = h.value(0.0);
    if w0 == 0.0 || s0 == s1 {
        if w0 == 0.0 && h_at_zero.abs() > 1e-14 {
            return Err(Error::ReductionSingular("ω₀ = 0 with H(0) ≠ 0".into()));
        }
        if w0 == 0.0 || s0 == s1 {
            return Ok(ReducedCurve {
                n,
                h: h.clone(),
                range: srange,
                kind: ReducedKind::Constant(r0),
                defect: 0.0,
            });
        }
    }
    let dir = (s1 - s0).signum();
    let xi_dir = dir * (c / w0).signum();
    let xi0 = r0.ln();
    const XI_SPAN: f64 = 40.0;
    let hf = h.clone();
    let w_eps = 1e-6 * w0.abs().max(1.0);
    let ivp = Ivp::new(
        move |xi, y: &[f64; 2]| {
            let w = y[0];
            [c * w + c * c * hf.value(w) / w, c * ((1.0 - m) * xi).exp() / w]
        },
        [w0, s0],
        (xi0, xi0 + xi_dir * XI_SPAN),
    )
    .with_event(Event::new("omega_zero", move |_, y: &[f64; 2]| y[0].abs() - w_eps))
    .with_event(Event::new("s_reached", move |_, y: &[f64; 2]| dir * (s1 - y[1])));
    let stage1 = match integrate_ivp(&ivp, &opts) {
        Ok(c) => c,
        Err(Error::StepUnderflow { t, .. }) => {
            return Err(Error::ReductionSingular(format!("separable flow breaks down at ξ = {t}")))
        }
        Err(e) => return Err(e),
    };
    match &stage1.status {
        CurveStatus::StoppedAtEvent { label, t } if label == "omega_zero" => {
            return Err(Error::ReductionSingular(format!("ω → 0 at ξ = {t} (r = {})", t.exp())));
        }
        CurveStatus::StoppedAtEvent { .. } => {}
        CurveStatus::Complete => {
            let what = if xi_dir < 0.0 { "r → 0" } else { "r → ∞" };
            return Err(Error::Singularity(format!("{what} before s reaches {s1}")));
        }
    }
    let st1 = stage1.clone();
    let ivp2 = Ivp::new(
        move |_, y: &[f64; 1]| [y[0].powf(m) * ReducedCurve::phi(&st1, y[0].ln()) / c],
        [r0],
        (s0, s1),
    );
    let stage2 = integrate_ivp(&ivp2, &opts)?;
    let mut out = ReducedCurve {
        n,
        h: h.clone(),
        range: srange,
        kind: ReducedKind::Flow { stage1, stage2 },
        defect: 0.0,
    };
    out.defect = reduced_defect(&out, 41);
    Ok(out)
}

fn reduced_defect(curve: &ReducedCurve, samples: usize) -> f64 {
    let ReducedKind::Flow { stage1, stage2 } = &curve.kind else {
        return 0.0;
    };
    let c = (1.0 - curve.n) / 4.0;
    let m = (curve.n + 1.0) / 2.0;
    let (a, b) = curve.range;
    (0..samples)
        .map(|i| {
            let s = a + (b - a) * i as f64 / (samples - 1) as f64;
            let r = stage2.eval(s)[0];
            let xi = r.ln();
            let (y, dy) = stage1.eval_with_derivative(xi);
            let p = r.powf(m) * y[0] / c;
            // d/ds [r^m Φ(ln r)/c] with Φ' from the interpolant
            let q = (m * r.powf(m - 1.0) * p * y[0] + r.powf(m) * dy[0] * p / r) / c;
            (q - reduced_rhs(&curve.h, curve.n, r, p).0).abs()
        })
        .fold(0.0, f64::max)
}

/// Solution of an affine-invariant equation through its canonical chart.
#[derive(Debug, Clone)]
pub struct QuadratureCurve {
    pub chart: CanonicalChart,
    pub reduced: ReducedCurve,
    domain: (f64, f64),
}

impl QuadratureCurve {
    pub fn to_timefn(&self) -> TimeFn {
        let me = self.clone();
        TimeFn::new("x(t)", self.domain, move |t| {
            let e = me.chart.e();
            let sj = me.chart.s.eval(t);
            let rj = sj.compose(me.reduced.jet(sj.v));
            me.chart.sol.a.eval(t).powf(-e) * rj
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        let (s, _) = self.chart.forward(t, 1.0);
        let a = self.chart.sol.a.value(t);
        self.reduced.value(s) * a.powf(-self.chart.e())
    }
}

/// Map the initial data to the chart, solve by reduction, map back.
pub fn quadrature_solve(spec: &EquationSpec, ic: (f64, f64, f64), trange: (f64, f64), tol: f64) -> Result<QuadratureCurve> {
    let (n, h) = match &spec.family {
        Family::AffineH { h } => (-3.0, h.clone()),
        Family::AffineHn { n, h } => (*n, h.clone()),
        Family::Sl2Const { h0 } => (-3.0, crate::invariant_eqs::CubicH::constant(*h0).into()),
        f => {
            return Err(Error::InvalidParameter(format!(
                "quadrature pipeline supports affine_H, affine_H_n and sl2_const, not {}",
                f.name()
            )))
        }
    };
    let (x0, v0, t0) = ic;
    let (ta, tb) = trange;
    if (t0 - ta).abs() > 0.0 {
        return Err(Error::InvalidParameter(format!("initial time {t0} must equal range start {ta}")));
    }
    let chart = CanonicalChart::new(&spec.sol, n)?;
    let xdd = spec.rhs(t0, x0, v0)?;
    let [s0, r0, big_r0, _] = chart.forward_jet(t0, x0, v0, xdd);
    let s1 = chart.s.value(tb);
    let reduced = separable_solve(&h, n, (r0, big_r0), (s0, s1), tol)?;
    Ok(QuadratureCurve {
        chart,
        reduced,
        domain: (ta.min(tb), ta.max(tb)),
    })
}

//! Point vector fields on the `(t, x)` plane, their second prolongation, and
//! numerical symmetry checks.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Dual3;
use crate::projective::ProjectiveSolution;
use crate::timefn::TimeFn;

/// A coefficient function and its partials up to order two.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Partials {
    pub v: f64,
    pub t: f64,
    pub x: f64,
    pub tt: f64,
    pub tx: f64,
    pub xx: f64,
}

impl Partials {
    fn scale(self, c: f64) -> Partials {
        Partials {
            v: c * self.v,
            t: c * self.t,
            x: c * self.x,
            tt: c * self.tt,
            tx: c * self.tx,
            xx: c * self.xx,
        }
    }

    fn add(self, o: Partials) -> Partials {
        Partials {
            v: self.v + o.v,
            t: self.t + o.t,
            x: self.x + o.x,
            tt: self.tt + o.tt,
            tx: self.tx + o.tx,
            xx: self.xx + o.xx,
        }
    }
}

type FieldFn = dyn Fn(f64, f64) -> (Partials, Partials) + Send + Sync;

/// `X = ξ(t,x)∂t + η(t,x)∂x`.
#[derive(Clone)]
pub struct PointVectorField {
    label: String,
    f: Arc<FieldFn>,
}

impl fmt::Debug for PointVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointVectorField").field("label", &self.label).finish()
    }
}

/// Fourth-order central first derivative and second derivative of `g` at `t`.
fn fd12(g: &dyn Fn(f64) -> f64, t: f64, h: f64) -> (f64, f64) {
    let (m2, m1, z, p1, p2) = (g(t - 2.0 * h), g(t - h), g(t), g(t + h), g(t + 2.0 * h));
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * z + 16.0 * p1 - p2) / (12.0 * h * h);
    (d1, d2)
}

fn fd_partials(phi: &dyn Fn(f64, f64) -> f64, t: f64, x: f64) -> Partials {
    let ht = 1e-3 * t.abs().max(1.0);
    let hx = 1e-3 * x.abs().max(1.0);
    let (pt, ptt) = fd12(&|s| phi(s, x), t, ht);
    let (px, pxx) = fd12(&|y| phi(t, y), x, hx);
    let (ptx, _) = fd12(&|y| fd12(&|s| phi(s, y), t, ht).0, x, hx);
    Partials {
        v: phi(t, x),
        t: pt,
        x: px,
        tt: ptt,
        tx: ptx,
        xx: pxx,
    }
}

impl PointVectorField {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64, f64) -> (Partials, Partials) + Send + Sync + 'static,
    ) -> Self {
        PointVectorField {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    /// `ξ = f(t)`, `η = g(t)x` with partials read off the time jets.
    pub fn time_linear(label: impl Into<String>, xi: TimeFn, g: TimeFn) -> Self {
        PointVectorField::new(label, move |t, x| {
            let (f, g) = (xi.eval(t), g.eval(t));
            (
                Partials { v: f.v, t: f.d1, x: 0.0, tt: f.d2, tx: 0.0, xx: 0.0 },
                Partials { v: g.v * x, t: g.d1 * x, x: g.v, tt: g.d2 * x, tx: g.d1, xx: 0.0 },
            )
        })
    }

    /// Field from plain coefficient functions; partials by finite differences.
    pub fn from_fns(
        label: impl Into<String>,
        xi: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        eta: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        PointVectorField::new(label, move |t, x| (fd_partials(&xi, t, x), fd_partials(&eta, t, x)))
    }

    /// `X_a = a∂t + (ȧ/2)x∂x`.
    pub fn ep(a: &TimeFn) -> Self {
        let g = a.map("ȧ/2", |j| j.derivative().scale(0.5));
        PointVectorField::time_linear(format!("X[{}]", a.label()), a.clone(), g)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64, x: f64) -> (Partials, Partials) {
        (self.f)(t, x)
    }

    pub fn components(&self, t: f64, x: f64) -> (f64, f64) {
        let (xi, eta) = self.eval(t, x);
        (xi.v, eta.v)
    }

    pub fn scale(&self, c: f64) -> Self {
        let f = self.f.clone();
        PointVectorField::new(format!("{c}·{}", self.label), move |t, x| {
            let (a, b) = f(t, x);
            (a.scale(c), b.scale(c))
        })
    }

    pub fn add(&self, other: &PointVectorField) -> Self {
        let (f, g) = (self.f.clone(), other.f.clone());
        PointVectorField::new(format!("{}+{}", self.label, other.label), move |t, x| {
            let (a, b) = f(t, x);
            let (c, d) = g(t, x);
            (a.add(c), b.add(d))
        })
    }

    /// The same field in the dependent variable `z = x^k`, valid for fields
    /// of the form `η = g(t)x`, which become `η_z = k g(t) z`.
    pub fn in_power_chart(&self, k: f64) -> Self {
        let f = self.f.clone();
        PointVectorField::new(format!("{}|z=x^{k}", self.label), move |t, z| {
            let (xi, eta) = f(t, 1.0);
            let g = eta.v;
            (
                xi,
                Partials { v: k * g * z, t: k * eta.t * z, x: k * g, tt: k * eta.tt * z, tx: k * eta.t, xx: 0.0 },
            )
        })
    }
}

/// Largest relative mismatch between a field's stored partials and finite
/// differences of its value channels.
pub fn check_partials(field: &PointVectorField, points: &[(f64, f64)]) -> f64 {
    let mut worst = 0.0_f64;
    for &(t, x) in points {
        let (xi, eta) = field.eval(t, x);
        let fx = fd_partials(&|s, y| field.eval(s, y).0.v, t, x);
        let fe = fd_partials(&|s, y| field.eval(s, y).1.v, t, x);
        for (a, b) in [(xi, fx), (eta, fe)] {
            for (p, q) in [(a.t, b.t), (a.x, b.x), (a.tt, b.tt), (a.tx, b.tx), (a.xx, b.xx)] {
                worst = worst.max((p - q).abs() / (1.0 + p.abs()));
            }
        }
    }
    worst
}

/// `ẍ = F(t, x, ẋ)`, with the gradient of `F` carried by [`Dual3`].
#[derive(Clone)]
pub struct Ode2 {
    label: String,
    positive_x: bool,
    f: Arc<dyn Fn(f64, Dual3, Dual3) -> Dual3 + Send + Sync>,
}

impl fmt::Debug for Ode2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ode2")
            .field("label", &self.label)
            .field("positive_x", &self.positive_x)
            .finish()
    }
}

impl Ode2 {
    /// `f(t, x, ẋ)` receives `x` and `ẋ` as seeded duals; time-dependent
    /// coefficients are lifted with [`Dual3::time`].
    pub fn new(
        label: impl Into<String>,
        positive_x: bool,
        f: impl Fn(f64, Dual3, Dual3) -> Dual3 + Send + Sync + 'static,
    ) -> Self {
        Ode2 {
            label: label.into(),
            positive_x,
            f: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64, x: f64, v: f64) -> Result<Dual3> {
        if self.positive_x && !(x > 0.0) {
            return Err(Error::Singularity(format!("{} requires x > 0, got {x}", self.label)));
        }
        let y = (self.f)(t, Dual3::state_x(x), Dual3::state_v(v));
        if !y.is_finite() {
            return Err(Error::Numerical(format!("{} is not finite at ({t}, {x}, {v})", self.label)));
        }
        Ok(y)
    }

    pub fn value(&self, t: f64, x: f64, v: f64) -> Result<f64> {
        self.eval(t, x, v).map(|y| y.v)
    }
}

/// `(η⁽¹⁾, η⁽²⁾)` of the second prolongation at a 2-jet.
pub fn prolong2(field: &PointVectorField, t: f64, x: f64, xd: f64, xdd: f64) -> (f64, f64) {
    let (xi, eta) = field.eval(t, x);
    let e1 = eta.t + (eta.x - xi.t) * xd - xi.x * xd * xd;
    let e2 = eta.tt + (2.0 * eta.tx - xi.tt) * xd + (eta.xx - 2.0 * xi.tx) * xd * xd - xi.xx * xd.powi(3)
        + (eta.x - 2.0 * xi.t) * xdd
        - 3.0 * xi.x * xd * xdd;
    (e1, e2)
}

/// `η⁽²⁾ − ξF_t − ηF_x − η⁽¹⁾F_ẋ` on the solution manifold `ẍ = F`.
pub fn symmetry_residual(field: &PointVectorField, ode: &Ode2, t: f64, x: f64, xd: f64) -> Result<f64> {
    let f = ode.eval(t, x, xd)?;
    let (xi, eta) = field.eval(t, x);
    let (e1, e2) = prolong2(field, t, x, xd, f.v);
    Ok(e2 - xi.v * f.dt - eta.v * f.dx - e1 * f.dv)
}

/// Largest `|symmetry_residual|` over a `(t, x, ẋ)` grid.
pub fn max_symmetry_residual(field: &PointVectorField, ode: &Ode2, grid: &[(f64, f64, f64)]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for &(t, x, v) in grid {
        worst = worst.max(symmetry_residual(field, ode, t, x, v)?.abs());
    }
    Ok(worst)
}

/// Components of `[X, Y]` at `(t, x)`.
pub fn lie_bracket(x_field: &PointVectorField, y_field: &PointVectorField, t: f64, x: f64) -> (f64, f64) {
    let (xa, ea) = x_field.eval(t, x);
    let (xb, eb) = y_field.eval(t, x);
    let apply = |xi: f64, eta: f64, g: Partials| xi * g.t + eta * g.x;
    (
        apply(xa.v, ea.v, xb) - apply(xb.v, eb.v, xa),
        apply(xa.v, ea.v, eb) - apply(xb.v, eb.v, ea),
    )
}

/// Largest componentwise `|[X, Y] − Z|` over a set of points.
pub fn bracket_defect(x: &PointVectorField, y: &PointVectorField, z: &PointVectorField, points: &[(f64, f64)]) -> f64 {
    points
        .iter()
        .map(|&(t, p)| {
            let (b1, b2) = lie_bracket(x, y, t, p);
            let (z1, z2) = z.components(t, p);
            (b1 - z1).abs().max((b2 - z2).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub enum GeneratorKind {
    /// `X₁ = a∂t + (ȧ/2)x∂x`.
    EpField,
    /// `X₁` and `X₂ = sX₁ + βx∂x`.
    AffinePair { beta: f64 },
    /// `X₁`, `X₂ = sX₁ + ½x∂x`, `X₃ = s²X₁ + s x∂x`.
    Sl2Triple,
    /// `a∂t + (2/(1−n))(ȧ − ar)w∂w`.
    D2ksField { n: f64, r: TimeFn },
}

pub fn make_generators(kind: &GeneratorKind, sol: &ProjectiveSolution) -> Result<Vec<PointVectorField>> {
    let a = sol.a.clone();
    let x1 = PointVectorField::ep(&a).with_label("X1");
    match kind {
        GeneratorKind::EpField => Ok(vec![x1]),
        GeneratorKind::AffinePair { beta } => {
            let s = sol.s_fn()?;
            Ok(vec![x1, affine_second(&a, &s, *beta)])
        }
        GeneratorKind::Sl2Triple => {
            let s = sol.s_fn()?;
            let xi = a.zip(&s, "as²", |a, s| a * s * s);
            let g = a.zip(&s, "ȧs²/2+s", |a, s| a.derivative() * s * s * 0.5 + s);
            let x3 = PointVectorField::time_linear("X3", xi, g);
            Ok(vec![x1, affine_second(&a, &s, 0.5), x3])
        }
        GeneratorKind::D2ksField { n, r } => {
            if *n == 1.0 {
                return Err(Error::InvalidParameter("d2ks field needs n ≠ 1".into()));
            }
            let c = 2.0 / (1.0 - n);
            let g = a.zip(r, "c(ȧ−ar)", move |a, r| (a.derivative() - a * r).scale(c));
            Ok(vec![PointVectorField::time_linear("X", a, g)])
        }
    }
}

fn affine_second(a: &TimeFn, s: &TimeFn, beta: f64) -> PointVectorField {
    let xi = a.zip(s, "as", |a, s| a * s);
    let g = a.zip(s, "ȧs/2+β", move |a, s| a.derivative() * s * 0.5 + beta);
    PointVectorField::time_linear("X2", xi, g)
}

impl PointVectorField {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hill::{catalog_basis, HillFamily};
    use crate::projective::{build_a, ProjectiveCoeffs};
    use crate::jet::Jet;
    use crate::timefn::linspace;

    fn close(a: (f64, f64), b: (f64, f64), tol: f64) -> bool {
        (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol
    }

    fn dt() -> PointVectorField {
        PointVectorField::time_linear("∂t", TimeFn::constant(1.0), TimeFn::constant(0.0))
    }

    fn dilation() -> PointVectorField {
        PointVectorField::time_linear("t∂t+½x∂x", TimeFn::polynomial(&[0.0, 1.0]), TimeFn::constant(0.5))
    }

    #[test]
    fn prolongation_examples() {
        let x_dx = PointVectorField::time_linear("x∂x", TimeFn::constant(0.0), TimeFn::constant(1.0));
        for &(t, x, v, a) in &[(0.3, 1.2, -0.7, 2.5), (-1.0, 0.5, 3.0, -1.0)] {
            assert_eq!(prolong2(&dt(), t, x, v, a), (0.0, 0.0));
            assert_eq!(prolong2(&x_dx, t, x, v, a), (v, a));
            assert!(close(prolong2(&dilation(), t, x, v, a), (-0.5 * v, -1.5 * a), 1e-15));
        }
    }

    /// `η⁽ʲ⁾ = Dη⁽ʲ⁻¹⁾ − u⁽ʲ⁾Dξ` along a cubic curve through the jet, with
    /// total derivatives taken by finite differences.
    fn brute_prolong2(field: &PointVectorField, t0: f64, x: f64, v: f64, a: f64) -> (f64, f64) {
        let c = 0.37;
        let curve = move |t: f64| {
            let d = t - t0;
            (x + v * d + 0.5 * a * d * d + c * d.powi(3), v + a * d + 3.0 * c * d * d, a + 6.0 * c * d)
        };
        let d = |g: &dyn Fn(f64) -> f64, t: f64| fd12(g, t, 1e-3).0;
        let xi_c = |t: f64| field.components(t, curve(t).0).0;
        let eta_c = |t: f64| field.components(t, curve(t).0).1;
        let e1 = |t: f64| d(&eta_c, t) - curve(t).1 * d(&xi_c, t);
        let e2 = d(&e1, t0) - curve(t0).2 * d(&xi_c, t0);
        (e1(t0), e2)
    }

    #[test]
    fn prolongation_matches_recursion() {
        let nonlinear = PointVectorField::from_fns("nl", |t, x| t * x * x + x.sin(), |t, x| (t * x).exp() - x.powi(3));
        let ince = catalog_basis(HillFamily::Ince { alpha: 0.0 }).unwrap();
        let sol = build_a(&ince, ProjectiveCoeffs::ince(0.4));
        let fields = make_generators(&GeneratorKind::Sl2Triple, &sol).unwrap();
        for f in fields.iter().chain([&nonlinear]) {
            for &(t, x, v, a) in &[(0.3, 1.2, -0.7, 2.5), (-0.4, 0.5, 1.0, -1.0)] {
                let want = brute_prolong2(f, t, x, v, a);
                let got = prolong2(f, t, x, v, a);
                assert!(close(got, want, 1e-5), "{}: {got:?} vs {want:?}", f.label());
            }
        }
    }

    #[test]
    fn stored_partials_match_finite_differences() {
        let ince = catalog_basis(HillFamily::Ince { alpha: 0.0 }).unwrap();
        let sol = build_a(&ince, ProjectiveCoeffs::ince(0.4));
        let pts: Vec<(f64, f64)> = linspace(-1.0, 1.0, 5).into_iter().flat_map(|t| [(t, 0.5), (t, 2.0)]).collect();
        for f in make_generators(&GeneratorKind::Sl2Triple, &sol).unwrap() {
            assert!(check_partials(&f, &pts) <= 1e-5, "{}", f.label());
        }
    }

    #[test]
    fn residual_examples() {
        let grid: Vec<(f64, f64, f64)> = linspace(-1.0, 1.0, 5)
            .into_iter()
            .flat_map(|t| [0.5, 1.0, 2.0].into_iter().flat_map(move |x| [-1.0, 0.0, 1.0].map(|v| (t, x, v))))
            .collect();
        // ẍ = −x/4 + x⁻³ with X_a, a = cos t
        let cp = catalog_basis(HillFamily::ConstPos { lambda: 1.0 }).unwrap();
        let sol = build_a(&cp, ProjectiveCoeffs::new(1.0, 0.0, -1.0).unwrap());
        let ep = Ode2::new("ep", true, |_, x, _| x.scale(-0.25) + x.powi(-3));
        let xa = make_generators(&GeneratorKind::EpField, &sol).unwrap().remove(0);
        assert!(max_symmetry_residual(&xa, &ep, &grid).unwrap() <= 1e-9);
        // ẍ = −t x with X = ∂t: the residual is −ξF_t = x
        let hill = Ode2::new("hill", false, |t, x, _| -(Dual3::time(Jet::variable(t)) * x));
        for &(t, x, v) in &grid {
            assert!((symmetry_residual(&dt(), &hill, t, x, v).unwrap() - x).abs() < 1e-14);
        }
        let free = Ode2::new("free", false, |_, _, _| Dual3::constant(0.0));
        assert_eq!(max_symmetry_residual(&dilation(), &free, &grid).unwrap(), 0.0);
    }

    #[test]
    fn bracket_examples() {
        let pts: Vec<(f64, f64)> = linspace(-1.0, 1.0, 5).into_iter().flat_map(|t| [(t, 0.5), (t, 2.0)]).collect();
        let t_dt = PointVectorField::time_linear("t∂t", TimeFn::polynomial(&[0.0, 1.0]), TimeFn::constant(0.0));
        assert_eq!(bracket_defect(&dt(), &t_dt, &dt(), &pts), 0.0);
        let t2 = PointVectorField::ep(&TimeFn::polynomial(&[0.0, 0.0, 1.0]));
        let t1 = PointVectorField::ep(&TimeFn::polynomial(&[0.0, 1.0]));
        let mt2 = PointVectorField::ep(&TimeFn::polynomial(&[0.0, 0.0, -1.0]));
        assert!(bracket_defect(&t2, &t1, &mt2, &pts) <= 1e-9);
        let b = catalog_basis(HillFamily::Ince { alpha: 0.0 }).unwrap();
        let y1 = PointVectorField::ep(&b.u1.mul(&b.u1));
        let y2 = PointVectorField::ep(&b.u1.mul(&b.u2));
        let y3 = PointVectorField::ep(&b.u2.mul(&b.u2));
        assert!(bracket_defect(&y1, &y2, &y1, &pts) <= 1e-9);
        assert!(bracket_defect(&y1, &y3, &y2.scale(2.0), &pts) <= 1e-9);
        assert!(bracket_defect(&y2, &y3, &y3, &pts) <= 1e-9);
    }

    #[test]
    fn generator_examples() {
        let pts = [(0.2, 0.7), (-0.5, 1.5), (0.9, 2.0)];
        let free = catalog_basis(HillFamily::Free).unwrap();
        let one = build_a(&free, ProjectiveCoeffs::new(0.0, 0.0, 1.0).unwrap());
        let g = make_generators(&GeneratorKind::AffinePair { beta: 0.5 }, &one).unwrap();
        for &(t, x) in &pts {
            assert_eq!(g[0].components(t, x), (1.0, 0.0));
            assert!(close(g[1].components(t, x), (t, 0.5 * x), 1e-12));
        }
        let lambda = 0.8;
        let cn = catalog_basis(HillFamily::ConstNeg { lambda }).unwrap();
        let ex = build_a(&cn, ProjectiveCoeffs::new(1.0, 0.0, 0.0).unwrap());
        let x1 = make_generators(&GeneratorKind::EpField, &ex).unwrap().remove(0);
        for &(t, x) in &pts {
            let e = (lambda * t).exp();
            assert!(close(x1.components(t, x), (e, e * lambda / 2.0 * x), 1e-12));
        }
        let cp = catalog_basis(HillFamily::ConstPos { lambda }).unwrap();
        let cs = build_a(&cp, ProjectiveCoeffs::new(1.0, 0.0, -1.0).unwrap());
        let x1 = make_generators(&GeneratorKind::EpField, &cs).unwrap().remove(0);
        for &(t, x) in &pts {
            let want = ((lambda * t).cos(), -lambda / 2.0 * (lambda * t).sin() * x);
            assert!(close(x1.components(t, x), want, 1e-12));
        }
        assert!(make_generators(&GeneratorKind::Sl2Triple, &cs).is_err());
        let r = TimeFn::constant(1.0);
        assert!(make_generators(&GeneratorKind::D2ksField { n: 1.0, r }, &one).is_err());
    }

    #[test]
    fn sl2_commutators() {
        let ince = catalog_basis(HillFamily::Ince { alpha: 0.0 }).unwrap();
        let sol = build_a(&ince, ProjectiveCoeffs::ince(0.5));
        let g = make_generators(&GeneratorKind::Sl2Triple, &sol).unwrap();
        let pts: Vec<(f64, f64)> =
            linspace(-1.0, 1.0, 5).into_iter().flat_map(|t| linspace(0.5, 2.0, 5).into_iter().map(move |x| (t, x))).collect();
        assert!(bracket_defect(&g[0], &g[1], &g[0], &pts) <= 1e-8);
        assert!(bracket_defect(&g[0], &g[2], &g[1].scale(2.0), &pts) <= 1e-8);
        assert!(bracket_defect(&g[1], &g[2], &g[2], &pts) <= 1e-8);
    }
}

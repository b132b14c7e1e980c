//! Scalar functions of time with exact derivative channels.
//!
//! Every coefficient in the library (potentials `p`, projective solutions `a`,
//! dissipation `r`, reparametrisations `τ`) is a [`TimeFn`]: a closure returning
//! a [`Jet`] on a closed interval. Derivatives come from the constructors;
//! finite differences are only used by [`check_derivatives`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Default absolute tolerance for [`integrate`].
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
/// Maximum bisection depth of the adaptive Simpson rule.
pub const MAX_QUAD_DEPTH: u32 = 60;
/// Threshold on `|τ'|` below which the Schwarzian is reported singular.
pub const SCHWARZIAN_SINGULAR: f64 = 1e-12;

type JetFn = dyn Fn(f64) -> Jet + Send + Sync;

#[derive(Clone)]
pub struct TimeFn {
    f: Arc<JetFn>,
    lo: f64,
    hi: f64,
    label: String,
}

impl fmt::Debug for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeFn")
            .field("label", &self.label)
            .field("domain", &(self.lo, self.hi))
            .finish()
    }
}

impl TimeFn {
    pub fn new(
        label: impl Into<String>,
        domain: (f64, f64),
        f: impl Fn(f64) -> Jet + Send + Sync + 'static,
    ) -> Self {
        TimeFn {
            f: Arc::new(f),
            lo: domain.0,
            hi: domain.1,
            label: label.into(),
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> Jet {
        (self.f)(t)
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        (self.f)(t).v
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Same function on a sub-interval.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<TimeFn> {
        if !(lo < hi) || lo < self.lo || hi > self.hi {
            return Err(Error::Domain(format!(
                "[{lo}, {hi}] is not a sub-interval of [{}, {}] for {}",
                self.lo, self.hi, self.label
            )));
        }
        Ok(TimeFn {
            f: self.f.clone(),
            lo,
            hi,
            label: self.label.clone(),
        })
    }

    /// Pointwise transform of the jet.
    pub fn map(
        &self,
        label: impl Into<String>,
        g: impl Fn(Jet) -> Jet + Send + Sync + 'static,
    ) -> TimeFn {
        let f = self.f.clone();
        TimeFn::new(label, (self.lo, self.hi), move |t| g(f(t)))
    }

    /// Pointwise combination of two functions on the intersection of domains.
    pub fn zip(
        &self,
        other: &TimeFn,
        label: impl Into<String>,
        g: impl Fn(Jet, Jet) -> Jet + Send + Sync + 'static,
    ) -> TimeFn {
        let f = self.f.clone();
        let h = other.f.clone();
        let dom = (self.lo.max(other.lo), self.hi.min(other.hi));
        TimeFn::new(label, dom, move |t| g(f(t), h(t)))
    }

    pub fn constant(c: f64) -> TimeFn {
        TimeFn::new(format!("{c}"), (f64::NEG_INFINITY, f64::INFINITY), move |_| {
            Jet::constant(c)
        })
    }

    /// `c[0] + c[1] t + c[2] t² + …`
    pub fn polynomial(coeffs: &[f64]) -> TimeFn {
        let c = coeffs.to_vec();
        TimeFn::new(
            format!("poly{coeffs:?}"),
            (f64::NEG_INFINITY, f64::INFINITY),
            move |t| {
                let mut acc = Jet::constant(0.0);
                for &ck in c.iter().rev() {
                    acc = acc * Jet::variable(t) + ck;
                }
                acc
            },
        )
    }

    /// `cos(ωt)`
    pub fn cos(omega: f64) -> TimeFn {
        TimeFn::new(format!("cos({omega}t)"), (f64::NEG_INFINITY, f64::INFINITY), move |t| {
            Jet::variable(t).scale(omega).cos()
        })
    }

    /// `sin(ωt)`
    pub fn sin(omega: f64) -> TimeFn {
        TimeFn::new(format!("sin({omega}t)"), (f64::NEG_INFINITY, f64::INFINITY), move |t| {
            Jet::variable(t).scale(omega).sin()
        })
    }

    /// `exp(κt)`
    pub fn exp(rate: f64) -> TimeFn {
        TimeFn::new(format!("exp({rate}t)"), (f64::NEG_INFINITY, f64::INFINITY), move |t| {
            Jet::variable(t).scale(rate).exp()
        })
    }

    /// `tan t` on `(-π/2, π/2)`.
    pub fn tan() -> TimeFn {
        let half = std::f64::consts::FRAC_PI_2;
        TimeFn::new("tan(t)", (-half, half), move |t| {
            let x = Jet::variable(t);
            x.sin() / x.cos()
        })
    }

    /// `(αt+β)/(γt+δ)`
    pub fn mobius(alpha: f64, beta: f64, gamma: f64, delta: f64) -> TimeFn {
        TimeFn::new(
            format!("mobius({alpha},{beta},{gamma},{delta})"),
            (f64::NEG_INFINITY, f64::INFINITY),
            move |t| {
                let x = Jet::variable(t);
                (x.scale(alpha) + beta) / (x.scale(gamma) + delta)
            },
        )
    }

    pub fn add(&self, other: &TimeFn) -> TimeFn {
        self.zip(other, format!("({})+({})", self.label, other.label), |a, b| a + b)
    }

    pub fn mul(&self, other: &TimeFn) -> TimeFn {
        self.zip(other, format!("({})*({})", self.label, other.label), |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> TimeFn {
        self.map(format!("{c}*({})", self.label), move |a| a.scale(c))
    }
}

/// Anchor used for indefinite integrals on a domain: `0` when it lies in the
/// domain, the left endpoint otherwise.
pub fn default_anchor(domain: (f64, f64)) -> f64 {
    if domain.0 <= 0.0 && 0.0 <= domain.1 {
        0.0
    } else {
        domain.0
    }
}

fn central_first(g: &dyn Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    let d_h = (g(t + h) - g(t - h)) / (2.0 * h);
    let d_2h = (g(t + 2.0 * h) - g(t - 2.0 * h)) / (4.0 * h);
    // one Richardson level: O(h²) → O(h⁴)
    (4.0 * d_h - d_2h) / 3.0
}

/// Largest relative discrepancy between the analytic derivative channels and
/// fourth-order central differences.
///
/// Order `k` (1..=3) is compared with the central difference of channel
/// `k-1`, so the check never divides round-off by `h³`. The step at each grid
/// point is `h·max(1, |t|)`.
pub fn check_derivatives(f: &TimeFn, grid: &[f64], h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step h must be positive, got {h}")));
    }
    let (lo, hi) = f.domain();
    let mut worst = 0.0_f64;
    for &t in grid {
        let ht = h * t.abs().max(1.0);
        if t - 2.0 * ht < lo || t + 2.0 * ht > hi {
            return Err(Error::Domain(format!(
                "grid point {t} within 2h of the boundary of [{lo}, {hi}]"
            )));
        }
        let jet = f.eval(t);
        let analytic = [jet.d1, jet.d2, jet.d3];
        for (k, &exact) in analytic.iter().enumerate() {
            let channel = |s: f64| f.eval(s).to_array()[k];
            let fd = central_first(&channel, t, ht);
            let err = (exact - fd).abs() / (1.0 + exact.abs());
            if !err.is_finite() {
                return Err(Error::Numerical(format!("non-finite derivative of {} at {t}", f.label())));
            }
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

/// Adaptive Simpson quadrature of an arbitrary integrand.
///
/// The local acceptance test is the Richardson comparison
/// `|S(left)+S(right) − S(whole)| ≤ 15·tol`, with `tol` halved on each
/// bisection.
pub fn integrate_fn(g: &dyn Fn(f64) -> f64, t0: f64, t1: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    if t0 == t1 {
        return Ok(0.0);
    }
    if t1 < t0 {
        return integrate_fn(g, t1, t0, tol).map(|v| -v);
    }
    let eval = |t: f64| -> Result<f64> {
        let y = g(t);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Numerical(format!("integrand is not finite at t = {t}")))
        }
    };
    let fa = eval(t0)?;
    let fb = eval(t1)?;
    let m = 0.5 * (t0 + t1);
    let fm = eval(m)?;
    let whole = (t1 - t0) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&eval, t0, t1, fa, fm, fb, whole, tol, MAX_QUAD_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    eval: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || lm <= a || rm >= b {
        return Err(Error::Convergence(format!(
            "adaptive Simpson depth exhausted on [{a}, {b}]"
        )));
    }
    Ok(simpson_step(eval, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(eval, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// `∫_{t0}^{t1} f(t) dt` of the value channel.
pub fn integrate(f: &TimeFn, t0: f64, t1: f64, tol: f64) -> Result<f64> {
    let (lo, hi) = f.domain();
    if t0.min(t1) < lo || t0.max(t1) > hi {
        return Err(Error::Domain(format!(
            "[{t0}, {t1}] outside domain [{lo}, {hi}] of {}",
            f.label()
        )));
    }
    integrate_fn(&|t| f.value(t), t0, t1, tol)
}

/// Running integral `t ↦ ∫_{anchor}^t f` on the domain of `f`. Values that
/// fail to converge evaluate to NaN.
pub fn primitive(f: &TimeFn, anchor: f64, tol: f64) -> TimeFn {
    let f = f.clone();
    let domain = f.domain();
    TimeFn::new(format!("∫{}", f.label()), domain, move |t| {
        let v = integrate(&f, anchor, t, tol).unwrap_or(f64::NAN);
        Jet::antiderivative(v, f.eval(t))
    })
}

/// Schwarzian derivative `τ‴/τ' − (3/2)(τ''/τ')²`.
pub fn schwarzian(tau: &TimeFn, t: f64) -> Result<f64> {
    let j = tau.eval(t);
    if j.d1.abs() < SCHWARZIAN_SINGULAR {
        return Err(Error::Singularity(format!(
            "|τ'({t})| = {} below {SCHWARZIAN_SINGULAR}",
            j.d1.abs()
        )));
    }
    let ratio = j.d2 / j.d1;
    Ok(j.d3 / j.d1 - 1.5 * ratio * ratio)
}

/// Checks `f > 0` on `[lo, hi]` by sampling 257 points plus the endpoints.
pub fn check_positive(f: &TimeFn, lo: f64, hi: f64) -> Result<()> {
    const SAMPLES: usize = 257;
    let (a, b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let probe = |t: f64| -> Result<()> {
        let v = f.value(t);
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("positivity violated: {}({t}) = {v}", f.label())))
        }
    };
    probe(a)?;
    probe(b)?;
    for i in 0..SAMPLES {
        probe(a + (b - a) * (i as f64 + 0.5) / SAMPLES as f64)?;
    }
    Ok(())
}

/// `n` equally spaced points on `[a, b]` (both ends included).
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (a + b)],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn quadratic_derivatives_are_exact() {
        let f = TimeFn::polynomial(&[0.0, 0.0, 1.0]);
        assert!(check_derivatives(&f, &[0.5], 1e-4).unwrap() <= 1e-10);
    }

    #[test]
    fn cosine_derivatives_within_tolerance() {
        let f = TimeFn::cos(1.0).restrict(-1.0, 2.0).unwrap();
        let grid = linspace(0.0, 1.0, 11);
        assert!(check_derivatives(&f, &grid, 1e-4).unwrap() <= 1e-6);
    }

    #[test]
    fn wrong_derivative_is_detected() {
        let bad = TimeFn::new("bad", (-1.0, 2.0), |t| {
            let j = Jet::variable(t).sin();
            Jet::new(j.v, j.d1 + 1.0, j.d2, j.d3)
        });
        let d = check_derivatives(&bad, &[0.5], 1e-4).unwrap();
        let fp = 0.5f64.cos() + 1.0;
        assert!((d - 1.0 / (1.0 + fp)).abs() < 1e-6);
        assert!(d > 0.1);
    }

    #[test]
    fn derivative_check_rejects_boundary_points() {
        let f = TimeFn::cos(1.0).restrict(0.0, 1.0).unwrap();
        assert!(matches!(check_derivatives(&f, &[1e-5], 1e-4), Err(Error::Domain(_))));
    }

    #[test]
    fn integrate_examples() {
        let one = TimeFn::constant(1.0);
        assert!((integrate(&one, 0.0, 2.0, 1e-10).unwrap() - 2.0).abs() < 1e-12);
        let sec = TimeFn::cos(1.0).map("sec", |j| j.recip());
        let v = integrate(&sec, 0.0, PI / 4.0, 1e-10).unwrap();
        assert!((v - (3.0 * PI / 8.0).tan().ln()).abs() < 1e-10);
        // brute-force midpoint sum as an independent cross-check
        let n = 200_000;
        let h = PI / 4.0 / n as f64;
        let riemann: f64 = (0..n).map(|i| h / ((i as f64 + 0.5) * h).cos()).sum();
        assert!((v - riemann).abs() < 1e-8);
        let cube = TimeFn::polynomial(&[0.0, 0.0, 0.0, 1.0]);
        assert!(integrate(&cube, -1.0, 1.0, 1e-10).unwrap().abs() < 1e-14);
    }

    #[test]
    fn integrate_errors() {
        let blow = TimeFn::new("1/t", (-1.0, 1.0), |t| Jet::variable(t).recip());
        assert!(matches!(integrate(&blow, 0.0, 1.0, 1e-10), Err(Error::Numerical(_))));
        let f = TimeFn::cos(1.0).restrict(0.0, 1.0).unwrap();
        assert!(matches!(integrate(&f, 0.0, 2.0, 1e-10), Err(Error::Domain(_))));
        // integrable singularity: the bisection runs out before the tolerance is met
        let rough = TimeFn::new("rough", (0.0, 1.0), |t| Jet::constant((t - 0.3).abs().powf(-0.5)));
        assert!(matches!(integrate(&rough, 0.0, 1.0, 1e-10), Err(Error::Convergence(_))));
    }

    #[test]
    fn integrate_is_additive() {
        let f = TimeFn::exp(0.7).mul(&TimeFn::sin(3.0));
        let tol = 1e-10;
        let ac = integrate(&f, -0.4, 1.9, tol).unwrap();
        let ab = integrate(&f, -0.4, 0.6, tol).unwrap();
        let bc = integrate(&f, 0.6, 1.9, tol).unwrap();
        assert!((ac - ab - bc).abs() <= 2.0 * tol);
    }

    #[test]
    fn schwarzian_examples() {
        let id = TimeFn::polynomial(&[0.0, 1.0]);
        assert!(schwarzian(&id, 0.3).unwrap().abs() < 1e-15);
        let m = TimeFn::mobius(2.0, 1.0, 0.5, 3.0);
        for t in [-1.0, 0.0, 0.7, 2.5] {
            assert!(schwarzian(&m, t).unwrap().abs() < 1e-12);
        }
        let tan = TimeFn::tan();
        assert!((schwarzian(&tan, 0.3).unwrap() - 2.0).abs() < 1e-12);
        let flat = TimeFn::constant(1.0);
        assert!(matches!(schwarzian(&flat, 0.0), Err(Error::Singularity(_))));
    }

    #[test]
    fn positivity_check() {
        let c = TimeFn::cos(1.0);
        assert!(check_positive(&c, -1.5, 1.5).is_ok());
        assert!(check_positive(&c, 0.0, 2.0).is_err());
    }
}

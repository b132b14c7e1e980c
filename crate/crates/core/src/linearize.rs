//! Lie's linearization test for `r'' = r⁻³H(rr')`, the modified Emden
//! equation and its linearizing transformations.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariant_eqs::CubicH;
use crate::jet::Jet;
use crate::timefn::TimeFn;

/// Laurent polynomial in `(p, r)`: exponent pair → coefficient.
#[derive(Debug, Clone, Default, PartialEq)]
struct Laurent(BTreeMap<(i32, i32), f64>);

impl Laurent {
    fn term(c: f64, pe: i32, re: i32) -> Laurent {
        let mut m = BTreeMap::new();
        if c != 0.0 {
            m.insert((pe, re), c);
        }
        Laurent(m)
    }

    fn add(&self, o: &Laurent) -> Laurent {
        let mut m = self.0.clone();
        for (k, v) in &o.0 {
            *m.entry(*k).or_insert(0.0) += v;
        }
        m.retain(|_, v| *v != 0.0);
        Laurent(m)
    }

    fn scale(&self, c: f64) -> Laurent {
        Laurent(self.0.iter().map(|(k, v)| (*k, v * c)).filter(|(_, v)| *v != 0.0).collect())
    }

    fn mul(&self, o: &Laurent) -> Laurent {
        let mut out = Laurent::default();
        for ((p1, r1), a) in &self.0 {
            for ((p2, r2), b) in &o.0 {
                out = out.add(&Laurent::term(a * b, p1 + p2, r1 + r2));
            }
        }
        out
    }

    fn dp(&self) -> Laurent {
        let mut out = Laurent::default();
        for ((pe, re), c) in &self.0 {
            out = out.add(&Laurent::term(c * *pe as f64, pe - 1, *re));
        }
        out
    }

    fn dr(&self) -> Laurent {
        let mut out = Laurent::default();
        for ((pe, re), c) in &self.0 {
            out = out.add(&Laurent::term(c * *re as f64, *pe, re - 1));
        }
        out
    }

    fn eval(&self, p: f64, r: f64) -> f64 {
        self.0.iter().map(|((pe, re), c)| c * p.powi(*pe) * r.powi(*re)).sum()
    }
}

/// `f(r, p) = r⁻³H(rp) = H₀p³ + H₁p²/r + H₂p/r² + H₃/r³`.
fn canonical_f(h: &CubicH) -> Laurent {
    let [h0, h1, h2, h3] = h.coeffs();
    Laurent::term(h0, 3, 0)
        .add(&Laurent::term(h1, 2, -1))
        .add(&Laurent::term(h2, 1, -2))
        .add(&Laurent::term(h3, 0, -3))
}

/// The relative invariants `(I₁, I₂)` as Laurent polynomials.
fn invariant_polys(h: &CubicH) -> (Laurent, Laurent) {
    let f = canonical_f(h);
    // total derivative along r' = p, p' = f; f has no explicit s
    let d = |g: &Laurent| Laurent::term(1.0, 1, 0).mul(&g.dr()).add(&f.mul(&g.dp()));
    let fp = f.dp();
    let fr = f.dr();
    let fpp = fp.dp();
    let frp = fr.dp();
    let frr = fr.dr();
    let i1 = fpp.dp().dp();
    let dfpp = d(&fpp);
    let i2 = d(&dfpp)
        .add(&d(&frp).scale(-4.0))
        .add(&fp.mul(&dfpp).scale(-1.0))
        .add(&frr.scale(6.0))
        .add(&fr.mul(&fpp).scale(-3.0))
        .add(&fp.mul(&frp).scale(4.0));
    (i1, i2)
}

/// Grid maxima of `|I₁|`, `|I₂|` over points `(s, r, p)`.
pub fn relative_invariants(h: &CubicH, grid: &[(f64, f64, f64)]) -> Result<(f64, f64)> {
    let (i1, i2) = invariant_polys(h);
    let mut out = (0.0f64, 0.0f64);
    for &(_, r, p) in grid {
        if r == 0.0 || !r.is_finite() {
            return Err(Error::Domain(format!("relative invariants need r ≠ 0, got r = {r}")));
        }
        out.0 = out.0.max(i1.eval(p, r).abs());
        out.1 = out.1.max(i2.eval(p, r).abs());
    }
    Ok(out)
}

pub fn default_lie_grid() -> Vec<(f64, f64, f64)> {
    let mut g = Vec::new();
    for r in [0.5, 0.8, 1.0, 1.5, 2.0] {
        for p in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            g.push((0.0, r, p));
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Branch1,
    Branch2,
    Emden,
    None,
}

impl Branch {
    pub fn tag(self) -> &'static str {
        match self {
            Branch::Branch1 => "branch1",
            Branch::Branch2 => "branch2",
            Branch::Emden => "emden",
            Branch::None => "none",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LieTestReport {
    #[serde(rename = "I1_max")]
    pub i1_max: f64,
    #[serde(rename = "I2_max")]
    pub i2_max: f64,
    pub branch: Branch,
    pub notes: Vec<String>,
}

/// `(H₀, H₁)` that make `I₂` vanish for given `H₂`, `H₃ ≠ 0`.
pub fn branch2_partner(h2: f64, h3: f64) -> (f64, f64) {
    (h2 * (h2 * h2 - 18.0 * h3) / (27.0 * h3 * h3), (h2 * h2 - 9.0 * h3) / (3.0 * h3))
}

/// The commonly quoted variant `H₀ = H₂(H₂²−18H₃)/(27H₃³)`,
/// `H₁ = (H₂²−5H₃)/(3H₃)`; kept for comparison only.
pub fn branch2_quoted(h2: f64, h3: f64) -> (f64, f64) {
    (h2 * (h2 * h2 - 18.0 * h3) / (27.0 * h3.powi(3)), (h2 * h2 - 5.0 * h3) / (3.0 * h3))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()))
}

/// Classify `H` by the Lie test. A branch tag is only assigned when the
/// measured `I₂` vanishes on the default grid.
pub fn classify(h: &CubicH) -> LieTestReport {
    let [h0, h1, h2, h3] = h.coeffs();
    let (i1_max, i2_max) = relative_invariants(h, &default_lie_grid()).expect("grid avoids r = 0");
    let scale = 1.0 + h0.abs().max(h1.abs()).max(h2.abs()).max(h3.abs());
    let tol = 1e-9 * scale * scale;
    let passes = i2_max <= tol;
    let mut notes = Vec::new();
    let branch = if h2 == 0.0 && h3 == 0.0 {
        if passes {
            notes.push(format!(
                "exchanging s and r gives the linear equation s''(r) + {h1}·s'(r)/r + {h0} = 0"
            ));
            Branch::Branch1
        } else {
            notes.push(format!("H₂ = H₃ = 0 but measured I₂ = {i2_max:e}"));
            Branch::None
        }
    } else if h3 != 0.0 {
        let (p0, p1) = branch2_partner(h2, h3);
        let (q0, q1) = branch2_quoted(h2, h3);
        let quoted = close(h0, q0) && close(h1, q1);
        if passes {
            if !quoted {
                notes.push(format!(
                    "I₂ vanishes; the quoted relations would require H₀ = {q0}, H₁ = {q1}"
                ));
            }
            if close(h3, h2 * h2 / 18.0) {
                notes.push(format!("modified Emden equation with ℓ = {}", -h2 / 3.0));
                Branch::Emden
            } else {
                Branch::Branch2
            }
        } else {
            if quoted {
                notes.push(format!(
                    "coefficients satisfy the quoted relations but measured I₂ = {i2_max:e}"
                ));
            }
            notes.push(format!("I₂ would vanish for H₀ = {p0}, H₁ = {p1} at these H₂, H₃"));
            Branch::None
        }
    } else {
        notes.push(format!("H₃ = 0 with H₂ ≠ 0: not point-linearizable (I₂ max {i2_max:e})"));
        Branch::None
    };
    LieTestReport {
        i1_max,
        i2_max,
        branch,
        notes,
    }
}

/// `(max |r'' + 3ℓrr' + ℓ²r³|, max |𝔻²r|)` with `𝔻 = D_s + ℓr`.
pub fn emden_check(l: f64, r: &TimeFn, grid: &[f64]) -> (f64, f64) {
    let mut ode = 0.0f64;
    let mut ric = 0.0f64;
    for &s in grid {
        let j = r.eval(s);
        ode = ode.max((j.d2 + 3.0 * l * j.v * j.d1 + l * l * j.v.powi(3)).abs());
        // 𝔻r as a jet, then one more application
        let q: Jet = j.derivative() + l * j * j;
        ric = ric.max((q.d1 + l * j.v * q.v).abs());
    }
    (ode, ric)
}

/// `ρ'/(ℓρ)`: solutions of the modified Emden equation from `ρ''' = 0`.
pub fn hopf_cole(rho: &TimeFn, l: f64) -> TimeFn {
    let rho = rho.clone();
    TimeFn::new(format!("{}'/({l}{})", rho.label(), rho.label()), rho.domain(), move |s| {
        let j = rho.eval(s);
        j.derivative() * j.recip() * (1.0 / l)
    })
}

/// Map `S = s − 1/r`, `R = s²/2 − s/r`; returns the largest deviation of
/// `R` from its least-squares line in `S`.
pub fn linearizing_map_check(r: &TimeFn, grid: &[f64]) -> Result<f64> {
    let mut pts = Vec::with_capacity(grid.len());
    for &s in grid {
        let rv = r.value(s);
        if rv == 0.0 || !rv.is_finite() {
            return Err(Error::Singularity(format!("linearizing map needs r ≠ 0, got r({s}) = {rv}")));
        }
        pts.push((s - 1.0 / rv, 0.5 * s * s - s / rv));
    }
    if pts.len() < 2 {
        return Err(Error::Fit("need at least two points".into()));
    }
    let n = pts.len() as f64;
    let sm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let rm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - sm).powi(2)).sum();
    let spread = pts.iter().map(|p| (p.0 - sm).abs()).fold(0.0, f64::max);
    if spread <= 1e-12 * (1.0 + sm.abs()) {
        return Err(Error::Fit(format!("image of the map is degenerate: S ≡ {sm}")));
    }
    let c1 = pts.iter().map(|p| (p.0 - sm) * (p.1 - rm)).sum::<f64>() / sxx;
    let c0 = rm - c1 * sm;
    Ok(pts.iter().map(|p| (p.1 - c1 * p.0 - c0).abs()).fold(0.0, f64::max))
}

/// With `s̄ = ∫r ds`, `r̄ = r²`: max of `|d²r̄/ds̄² + a dr̄/ds̄ + 2b r̄|`, which
/// vanishes on solutions of `r'' + a r r' + b r³ = 0`.
pub fn nonlocal_check(a: f64, b: f64, r: &TimeFn, grid: &[f64]) -> Result<f64> {
    let mut out = 0.0f64;
    for &s in grid {
        let j = r.eval(s);
        if !(j.v > 0.0) {
            return Err(Error::Domain(format!("nonlocal map needs r > 0, got r({s}) = {}", j.v)));
        }
        let rbar = j.v * j.v;
        let d1 = 2.0 * j.v * j.d1 / j.v;
        let d2 = (2.0 * j.d1 * j.d1 + 2.0 * j.v * j.d2 - d1 * j.d1) / (j.v * j.v);
        out = out.max((d2 + a * d1 + 2.0 * b * rbar).abs());
    }
    Ok(out)
}

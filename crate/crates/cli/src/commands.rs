use ermakov_core::hill::{catalog_basis, HillFamily};
use ermakov_core::invariant_eqs::{closed_form_solution, constants_from_ic, EquationSpec, Family};
use ermakov_core::linearize::classify;
use ermakov_core::oracle::{integrate_ivp, CurveStatus, IntegratorOptions, SolutionCurve};
use ermakov_core::projective::projective_ivp;
use ermakov_core::reduce::quadrature_solve;
use ermakov_core::symmetry::{bracket_defect, make_generators, max_symmetry_residual, GeneratorKind, PointVectorField};
use ermakov_core::timefn::{linspace, TimeFn};
use serde::Serialize;

use crate::output::{to_json, Csv, Num};
use crate::spec::{RunOptions, SpecFile};
use crate::CliError;

pub const CURVE_HEADER: [&str; 5] = ["t", "x_closed", "x_oracle", "abs_dev", "residual"];
pub const SYMMETRY_TOL: f64 = 1e-8;

fn finished<const N: usize>(curve: SolutionCurve<N>) -> Result<SolutionCurve<N>, CliError> {
    match &curve.status {
        CurveStatus::Complete => Ok(curve),
        CurveStatus::StoppedAtEvent { label, t } => {
            Err(CliError::Numerical(format!("oracle stopped at event `{label}` at t = {t}")))
        }
    }
}

/// Oracle trajectory through `t0`, integrated towards both ends of `[lo, hi]`.
struct TwoSided {
    t0: f64,
    left: Option<SolutionCurve<2>>,
    right: Option<SolutionCurve<2>>,
}

impl TwoSided {
    fn new(eq: &EquationSpec, ic: (f64, f64, f64), range: (f64, f64), opts: &IntegratorOptions) -> Result<Self, CliError> {
        let (x0, v0, t0) = ic;
        let run = |end: f64| -> Result<Option<SolutionCurve<2>>, CliError> {
            if end == t0 {
                return Ok(None);
            }
            Ok(Some(finished(integrate_ivp(&eq.ivp(x0, v0, (t0, end)), opts)?)?))
        };
        Ok(TwoSided {
            t0,
            left: run(range.0)?,
            right: run(range.1)?,
        })
    }

    fn value(&self, t: f64) -> f64 {
        let (near, far) = if t < self.t0 { (&self.left, &self.right) } else { (&self.right, &self.left) };
        near.as_ref().or(far.as_ref()).map_or(f64::NAN, |c| c.eval(t)[0])
    }
}

fn curve_table(eq: &EquationSpec, x: &TimeFn, oracle: &TwoSided, grid: &[f64]) -> Result<String, CliError> {
    let mut csv = Csv::new(&CURVE_HEADER);
    for &t in grid {
        let j = x.eval(t);
        let o = oracle.value(t);
        let residual = (j.d2 - eq.rhs(t, j.v, j.d1)?).abs();
        csv.row(&[t, j.v, o, (j.v - o).abs(), residual]);
    }
    Ok(csv.into_string())
}

fn ic_in_range(ic: (f64, f64, f64), range: (f64, f64)) -> Result<(), CliError> {
    if !(ic.2 >= range.0 && ic.2 <= range.1) {
        return Err(CliError::Input(format!("initial time {} outside range [{}, {}]", ic.2, range.0, range.1)));
    }
    Ok(())
}

pub fn solve(spec: &SpecFile, opts: &RunOptions) -> Result<String, CliError> {
    let eq = spec.equation()?;
    let ic = spec.ic()?;
    let range = spec.range()?;
    ic_in_range(ic, range)?;
    let coeffs = match spec.explicit_coeffs()? {
        Some(c) => c,
        None => constants_from_ic(&eq, ic.0, ic.1, ic.2)?,
    };
    let x = closed_form_solution(&eq, coeffs)?;
    let oracle = TwoSided::new(&eq, ic, range, &opts.integrator)?;
    curve_table(&eq, &x, &oracle, &linspace(range.0, range.1, opts.samples))
}

pub fn reduce(spec: &SpecFile, opts: &RunOptions) -> Result<String, CliError> {
    let eq = spec.equation()?;
    let ic = spec.ic()?;
    let range = spec.range()?;
    let q = quadrature_solve(&eq, ic, range, opts.integrator.rtol)?;
    let oracle = TwoSided::new(&eq, ic, range, &opts.integrator)?;
    curve_table(&eq, &q.to_timefn(), &oracle, &linspace(range.0, range.1, opts.samples))
}

/// `(i, j, k, c)`: `[Xᵢ, Xⱼ] = c·Xₖ`.
type Bracket = (usize, usize, usize, f64);

fn power_chart(fields: Vec<PointVectorField>, n: f64) -> Vec<PointVectorField> {
    let k = 4.0 / (1.0 - n);
    fields.into_iter().map(|f| f.in_power_chart(k)).collect()
}

fn basis_triple(eq: &EquationSpec) -> (Vec<PointVectorField>, Vec<Bracket>) {
    let b = &eq.sol.basis;
    let fields = [(&b.u1, &b.u1), (&b.u1, &b.u2), (&b.u2, &b.u2)]
        .iter()
        .enumerate()
        .map(|(i, (u, v))| PointVectorField::ep(&u.mul(v)).with_label(format!("Y{}", i + 1)))
        .collect();
    let w = b.w;
    (fields, vec![(0, 1, 0, w), (0, 2, 1, 2.0 * w), (1, 2, 2, w)])
}

fn generators(eq: &EquationSpec) -> Result<(Vec<PointVectorField>, Vec<Bracket>), CliError> {
    let sl2 = vec![(0, 1, 0, 1.0), (0, 2, 1, 2.0), (1, 2, 2, 1.0)];
    let pair = |sol| make_generators(&GeneratorKind::AffinePair { beta: 0.5 }, sol);
    let triple = |sol| make_generators(&GeneratorKind::Sl2Triple, sol);
    Ok(match &eq.family {
        Family::Ep { .. } => basis_triple(eq),
        Family::AffineH { .. } => (pair(&eq.sol)?, vec![(0, 1, 0, 1.0)]),
        Family::AffineHn { n, .. } => (power_chart(pair(&eq.sol)?, *n), vec![(0, 1, 0, 1.0)]),
        Family::Sl2Const { .. } => (triple(&eq.sol)?, sl2),
        Family::GenKs { n, .. } => (power_chart(triple(&eq.sol)?, *n), sl2),
        Family::Ks2 { n, .. } => {
            let (f, b) = basis_triple(eq);
            (power_chart(f, *n), b)
        }
        Family::D2ks { n, r, .. } => {
            (make_generators(&GeneratorKind::D2ksField { n: *n, r: r.clone() }, &eq.sol)?, vec![])
        }
    })
}

#[derive(Serialize)]
struct GeneratorRow {
    label: String,
    max_residual: Num,
}

#[derive(Serialize)]
struct CommutatorRow {
    bracket: String,
    expected: String,
    max_defect: Num,
}

#[derive(Serialize)]
struct SymmetryReport {
    family: &'static str,
    grid: GridDesc,
    generators: Vec<GeneratorRow>,
    commutators: Vec<CommutatorRow>,
    tolerance: Num,
    pass: bool,
}

#[derive(Serialize)]
struct GridDesc {
    t: Vec<Num>,
    x: Vec<Num>,
    v: Vec<Num>,
}

pub fn verify_symmetry(spec: &SpecFile, _opts: &RunOptions) -> Result<String, CliError> {
    let eq = spec.equation()?;
    let (lo, hi) = match spec.range {
        Some(_) => spec.range()?,
        None => {
            let (a, b) = eq.domain();
            (a.max(-1.0), b.min(1.0))
        }
    };
    let ts = linspace(lo, hi, 5);
    let xs = [0.5, 0.75, 1.0, 1.5, 2.0];
    let vs = [-1.0, 0.0, 1.0];
    let mut grid = Vec::new();
    for &t in &ts {
        for x in xs {
            for v in vs {
                grid.push((t, x, v));
            }
        }
    }
    let (fields, brackets) = generators(&eq)?;
    let ode = eq.ode();
    let mut pass = true;
    let mut rows = Vec::new();
    for f in &fields {
        let r = max_symmetry_residual(f, &ode, &grid)?;
        pass &= r <= SYMMETRY_TOL;
        rows.push(GeneratorRow {
            label: f.label().to_string(),
            max_residual: Num(r),
        });
    }
    let pts: Vec<(f64, f64)> = ts.iter().flat_map(|&t| xs.iter().map(move |&x| (t, x))).collect();
    let mut comms = Vec::new();
    for (i, j, k, c) in brackets {
        let d = bracket_defect(&fields[i], &fields[j], &fields[k].scale(c), &pts);
        pass &= d <= SYMMETRY_TOL;
        let expected = if c == 1.0 {
            fields[k].label().to_string()
        } else {
            format!("{c}·{}", fields[k].label())
        };
        comms.push(CommutatorRow {
            bracket: format!("[{},{}]", fields[i].label(), fields[j].label()),
            expected,
            max_defect: Num(d),
        });
    }
    to_json(&SymmetryReport {
        family: eq.family.name(),
        grid: GridDesc {
            t: ts.into_iter().map(Num).collect(),
            x: xs.into_iter().map(Num).collect(),
            v: vs.into_iter().map(Num).collect(),
        },
        generators: rows,
        commutators: comms,
        tolerance: Num(SYMMETRY_TOL),
        pass,
    })
}

pub fn first_integral(spec: &SpecFile, opts: &RunOptions) -> Result<String, CliError> {
    let sol = spec.projective()?;
    let (lo, hi) = spec.range()?;
    let p = sol.p().clone();
    let j = sol.a.eval(lo);
    let curve = finished(integrate_ivp(&projective_ivp(&p, [j.v, j.d1, j.d2], (lo, hi)), &opts.integrator)?)?;
    let k_of = |t: f64, y: [f64; 3]| 0.25 * (2.0 * y[0] * y[2] - y[1] * y[1]) + p.value(t) * y[0] * y[0];
    let k0 = k_of(lo, curve.eval(lo));
    let mut csv = Csv::new(&["t", "K", "drift"]);
    for t in linspace(lo, hi, opts.samples) {
        let k = k_of(t, curve.eval(t));
        csv.row(&[t, k, (k - k0).abs()]);
    }
    Ok(csv.into_string())
}

#[derive(Serialize)]
struct LinearizeReport {
    #[serde(rename = "H")]
    h: [Num; 4],
    #[serde(rename = "I1_max")]
    i1_max: Num,
    #[serde(rename = "I2_max")]
    i2_max: Num,
    branch: &'static str,
    notes: Vec<String>,
}

pub fn linearize(spec: &SpecFile, _opts: &RunOptions) -> Result<String, CliError> {
    let h = spec.h.as_ref().ok_or_else(|| CliError::Input("missing field `H`".into()))?.cubic()?;
    let r = classify(&h);
    to_json(&LinearizeReport {
        h: h.coeffs().map(Num),
        i1_max: Num(r.i1_max),
        i2_max: Num(r.i2_max),
        branch: r.branch.tag(),
        notes: r.notes,
    })
}

pub fn catalog() -> String {
    let mut out = String::from("Hill bases (ẍ + p x = 0)\n");
    let entries = [
        (HillFamily::Free, "free", "p = 0; u1 = t, u2 = 1"),
        (HillFamily::ConstNeg { lambda: 1.0 }, "const_neg {lambda}", "p = -λ²/4; u1 = e^{λt/2}, u2 = e^{-λt/2}"),
        (HillFamily::ConstPos { lambda: 1.0 }, "const_pos {lambda}", "p = λ²/4; u1 = cos(λt/2), u2 = sin(λt/2)"),
        (HillFamily::Ince { alpha: 0.5 }, "ince {alpha}", "p = 1; u1 = cos t, u2 = sin t; default a = 1 + α cos 2t"),
    ];
    for (fam, key, text) in entries {
        let w = catalog_basis(fam).map(|b| b.w).unwrap_or(f64::NAN);
        out.push_str(&format!("  {key:<20} {text}  (W = {w} at the sample parameter)\n"));
    }
    out.push_str("\nEquation families\n");
    for (name, keys, eq) in [
        ("ep", "k", "ẍ = -p x + k x⁻³"),
        ("affine_H", "H", "ẍ = -[p - K a⁻²] x + x⁻³ H(I)"),
        ("affine_H_n", "n, H", "z̈ = -(2ν̇+ν²) z/(n-1) + σ ż²/z + zⁿ H(Iₙ)"),
        ("sl2_const", "H0", "ẍ = -[p - K a⁻²] x + H0 x⁻³"),
        ("gen_ks", "n, H0", "z̈ = -4[p - K a⁻²] z/(1-n) + σ ż²/z + 4 H0 zⁿ/(1-n)"),
        ("ks2", "n, q", "z̈ = -4 I z/(1-n) + σ ż²/z + 4 q zⁿ/(1-n)"),
        ("d2ks", "n, q, r", "ẅ + r ẇ + 4 p w/(1-n) = σ ẇ²/w + 4 q e^{-2∫r} wⁿ/(1-n)"),
    ] {
        out.push_str(&format!("  {name:<12} keys: {keys:<8} {eq}\n"));
    }
    out.push_str("\nNamed H constants: zero, ep(H0), emden(l); or {\"poly\": [H0, H1, H2, H3]}\n");
    out.push_str("Named r families: zero, const(c), linear(c0,c1)\n");
    out
}

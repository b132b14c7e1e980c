//! Equation-spec files: JSON objects with a fixed key set.

use std::path::Path;

use ermakov_core::hill::{catalog_basis, HillFamily};
use ermakov_core::invariant_eqs::{CubicH, EquationSpec, Family, HFunction};
use ermakov_core::oracle::IntegratorOptions;
use ermakov_core::projective::{build_a, ProjectiveCoeffs, ProjectiveSolution};
use ermakov_core::timefn::TimeFn;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub family: String,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub domain: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum HSpec {
    Named(String),
    Poly {
        poly: [f64; 4],
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub family: Option<String>,
    pub basis: Option<BasisSpec>,
    pub acoeffs: Option<[f64; 3]>,
    #[serde(rename = "H")]
    pub h: Option<HSpec>,
    pub n: Option<f64>,
    #[serde(rename = "H0")]
    pub h0: Option<f64>,
    pub q: Option<f64>,
    pub k: Option<f64>,
    pub r: Option<String>,
    pub ic: Option<[f64; 3]>,
    pub range: Option<[f64; 2]>,
    pub samples: Option<usize>,
    pub tolerances: Option<Tolerances>,
    pub coeffs: Option<[f64; 3]>,
}

pub fn read_spec(path: &Path) -> Result<SpecFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_spec(&text)
}

pub fn parse_spec(text: &str) -> Result<SpecFile, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("spec: {e}")))
}

fn missing(path: &str) -> CliError {
    CliError::Input(format!("missing field `{path}`"))
}

/// `name(arg, ...)` with numeric arguments.
fn call(s: &str) -> Result<(String, Vec<f64>), CliError> {
    let s = s.trim();
    let Some(open) = s.find('(') else {
        return Ok((s.to_string(), Vec::new()));
    };
    if !s.ends_with(')') {
        return Err(CliError::Input(format!("malformed expression `{s}`")));
    }
    let args = s[open + 1..s.len() - 1]
        .split(',')
        .filter(|a| !a.trim().is_empty())
        .map(|a| a.trim().parse::<f64>().map_err(|_| CliError::Input(format!("bad number `{a}` in `{s}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((s[..open].trim().to_string(), args))
}

fn arity(name: &str, args: &[f64], n: usize) -> Result<(), CliError> {
    if args.len() != n {
        return Err(CliError::Input(format!("`{name}` takes {n} argument(s), got {}", args.len())));
    }
    Ok(())
}

impl HSpec {
    pub fn cubic(&self) -> Result<CubicH, CliError> {
        match self {
            HSpec::Poly { poly } => Ok(CubicH::new(poly[0], poly[1], poly[2], poly[3])),
            HSpec::Named(s) => {
                let (name, args) = call(s)?;
                match name.as_str() {
                    "zero" => {
                        arity("zero", &args, 0)?;
                        Ok(CubicH::default())
                    }
                    "ep" => {
                        arity("ep", &args, 1)?;
                        Ok(CubicH::constant(args[0]))
                    }
                    "emden" => {
                        arity("emden", &args, 1)?;
                        Ok(CubicH::emden(args[0]))
                    }
                    other => Err(CliError::Input(format!("unknown H constant `{other}` (zero, ep(H0), emden(l))"))),
                }
            }
        }
    }
}

fn r_family(s: &str) -> Result<TimeFn, CliError> {
    let (name, args) = call(s)?;
    match name.as_str() {
        "zero" => {
            arity("zero", &args, 0)?;
            Ok(TimeFn::constant(0.0))
        }
        "const" => {
            arity("const", &args, 1)?;
            Ok(TimeFn::constant(args[0]))
        }
        "linear" => {
            arity("linear", &args, 2)?;
            Ok(TimeFn::polynomial(&args))
        }
        other => Err(CliError::Input(format!("unknown r family `{other}` (zero, const(c), linear(c0,c1))"))),
    }
}

impl SpecFile {
    pub fn hill_family(&self) -> Result<HillFamily, CliError> {
        let b = self.basis.as_ref().ok_or_else(|| missing("basis"))?;
        Ok(match b.family.as_str() {
            "free" => HillFamily::Free,
            "const_neg" => HillFamily::ConstNeg { lambda: b.lambda.ok_or_else(|| missing("basis.lambda"))? },
            "const_pos" => HillFamily::ConstPos { lambda: b.lambda.ok_or_else(|| missing("basis.lambda"))? },
            "ince" => HillFamily::Ince { alpha: b.alpha.ok_or_else(|| missing("basis.alpha"))? },
            other => {
                return Err(CliError::Input(format!(
                    "unknown basis family `{other}` (free, const_neg, const_pos, ince)"
                )))
            }
        })
    }

    pub fn projective(&self) -> Result<ProjectiveSolution, CliError> {
        let fam = self.hill_family()?;
        let mut basis = catalog_basis(fam)?;
        if let Some([lo, hi]) = self.basis.as_ref().and_then(|b| b.domain) {
            basis = basis.restrict(lo, hi)?;
        }
        let coeffs = match (self.acoeffs, fam) {
            (Some([a, b, c]), _) => ProjectiveCoeffs::new(a, b, c)?,
            (None, HillFamily::Ince { alpha }) => ProjectiveCoeffs::ince(alpha),
            (None, _) => ProjectiveCoeffs::new(1.0, 0.0, 1.0)?,
        };
        Ok(build_a(&basis, coeffs))
    }

    fn h_function(&self) -> Result<HFunction, CliError> {
        Ok(self.h.as_ref().ok_or_else(|| missing("H"))?.cubic()?.into())
    }

    pub fn family(&self) -> Result<Family, CliError> {
        let name = self.family.as_deref().ok_or_else(|| missing("family"))?;
        let n = || self.n.ok_or_else(|| missing("n"));
        let h0 = || self.h0.ok_or_else(|| missing("H0"));
        let q = || self.q.ok_or_else(|| missing("q"));
        Ok(match name {
            "ep" => Family::Ep { k: self.k.ok_or_else(|| missing("k"))? },
            "affine_H" => Family::AffineH { h: self.h_function()? },
            "affine_H_n" => Family::AffineHn { n: n()?, h: self.h_function()? },
            "sl2_const" => Family::Sl2Const { h0: h0()? },
            "gen_ks" => Family::GenKs { n: n()?, h0: h0()? },
            "ks2" => Family::Ks2 { n: n()?, q: q()? },
            "d2ks" => Family::D2ks {
                n: n()?,
                q: q()?,
                r: r_family(self.r.as_deref().ok_or_else(|| missing("r"))?)?,
            },
            other => {
                return Err(CliError::Input(format!(
                    "unknown family `{other}` (ep, affine_H, affine_H_n, sl2_const, gen_ks, ks2, d2ks)"
                )))
            }
        })
    }

    pub fn equation(&self) -> Result<EquationSpec, CliError> {
        Ok(EquationSpec::new(self.family()?, self.projective()?)?)
    }

    pub fn ic(&self) -> Result<(f64, f64, f64), CliError> {
        let [x, v, t] = self.ic.ok_or_else(|| missing("ic"))?;
        Ok((x, v, t))
    }

    pub fn range(&self) -> Result<(f64, f64), CliError> {
        let [a, b] = self.range.ok_or_else(|| missing("range"))?;
        if !(a < b) {
            return Err(CliError::Input(format!("range must be increasing, got [{a}, {b}]")));
        }
        Ok((a, b))
    }

    pub fn explicit_coeffs(&self) -> Result<Option<ProjectiveCoeffs>, CliError> {
        self.coeffs.map(|[a, b, c]| ProjectiveCoeffs::new(a, b, c).map_err(CliError::from)).transpose()
    }
}

/// Run options after merging command-line flags over the spec file.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub integrator: IntegratorOptions,
    pub samples: usize,
}

impl RunOptions {
    pub fn merge(spec: &SpecFile, rtol: Option<f64>, atol: Option<f64>, grid: Option<usize>) -> Result<Self, CliError> {
        let d = IntegratorOptions::default();
        let tol = spec.tolerances.as_ref();
        let rtol = rtol.or(tol.and_then(|t| t.rtol)).unwrap_or(d.rtol);
        let atol = atol.or(tol.and_then(|t| t.atol)).unwrap_or(d.atol);
        let samples = grid.or(spec.samples).unwrap_or(21);
        if samples < 2 {
            return Err(CliError::Input(format!("need at least 2 samples, got {samples}")));
        }
        if !(rtol > 0.0 && atol > 0.0) {
            return Err(CliError::Input("tolerances must be positive".into()));
        }
        Ok(RunOptions {
            integrator: IntegratorOptions::new(rtol, atol),
            samples,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_ep_spec_is_valid() {
        let s = parse_spec(r#"{"family":"ep","basis":{"family":"const_pos","lambda":1},"k":1,"ic":[1,0,0],"range":[0,1]}"#)
            .unwrap();
        let eq = s.equation().unwrap();
        assert_eq!(eq.family.name(), "ep");
    }

    #[test]
    fn rejections() {
        assert!(matches!(parse_spec(r#"{"family":"ep","bogus":1}"#), Err(CliError::Input(_))));
        let s = parse_spec(r#"{"family":"affine_H_n","n":1,"H":"zero","basis":{"family":"free"}}"#).unwrap();
        assert!(matches!(s.equation(), Err(CliError::Input(_))));
        let s = parse_spec(r#"{"family":"sl2_const","H0":1,"basis":{"family":"ince","alpha":1.5}}"#).unwrap();
        assert!(matches!(s.equation(), Err(CliError::Input(_))));
        let s = parse_spec(r#"{"family":"ks2","n":3,"basis":{"family":"free"}}"#).unwrap();
        match s.equation() {
            Err(CliError::Input(m)) => assert!(m.contains("`q`")),
            other => panic!("{other:?}"),
        }
        let s = parse_spec(r#"{"family":"ep","k":1,"basis":{"family":"const_pos"}}"#).unwrap();
        match s.equation() {
            Err(CliError::Input(m)) => assert!(m.contains("basis.lambda")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn named_constants() {
        let h = |s: &str| HSpec::Named(s.into()).cubic();
        assert_eq!(h("zero").unwrap(), CubicH::default());
        assert_eq!(h("ep(2.5)").unwrap(), CubicH::constant(2.5));
        assert_eq!(h("emden(1)").unwrap().coeffs(), [0.0, 3.0, -3.0, 0.5]);
        assert!(h("ep()").is_err());
        assert!(h("cubic(1)").is_err());
        assert_eq!(r_family("const(1)").unwrap().value(0.3), 1.0);
        assert!((r_family("linear(0.5, 0.3)").unwrap().value(2.0) - 1.1).abs() < 1e-15);
        let s = parse_spec(r#"{"H":{"poly":[0,0,-3,0.5]}}"#).unwrap();
        assert_eq!(s.h.unwrap().cubic().unwrap().coeffs(), [0.0, 0.0, -3.0, 0.5]);
    }
}

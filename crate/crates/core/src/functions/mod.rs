//! Scalar function families, their domains, and exact residuals of the
//! functional equations they are checked against.
//!
//! Every family has a canonical textual form used by the CLI and in reports:
//!
//! ```text
//! zero | linear:c=2.0 | affine:a=1.0,b=3.0 | exponential:c=1.0
//! logarithmic:c=3.0 | power:c=0.5 | quadratic:lambda=1.5[,offset=-0.5]
//! cubic | abs | tabulated:@knots.csv | tabulated:0.0:1.0;1.0:2.0
//! ```

mod kernel;
mod residual;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use kernel::{AbelTriple, Kernel};
pub use residual::{
    geomspace, linspace, oddness_defect, residual, residual_at, Candidate, EquationKind, PairGrid,
    ResidualReport, EXACT_RTOL,
};

/// Where a function may be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    AllReals,
    PositiveReals,
}

impl Domain {
    pub fn contains(self, x: f64) -> bool {
        match self {
            Domain::AllReals => x.is_finite(),
            Domain::PositiveReals => x.is_finite() && x > 0.0,
        }
    }
}

/// Piecewise-linear function through strictly increasing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    knots: Vec<(f64, f64)>,
    source: Option<String>,
}

impl Table {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidInput(
                "tabulated function needs at least two knots".into(),
            ));
        }
        if knots.iter().any(|(x, fx)| !x.is_finite() || !fx.is_finite()) {
            return Err(Error::InvalidInput("tabulated knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput(
                "tabulated knots must be strictly increasing in x".into(),
            ));
        }
        Ok(Table { knots, source: None })
    }

    /// Reads a two-column CSV with header `x,fx`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Config(format!("{} is empty", path.display())))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["x", "fx"] {
            return Err(Error::Config(format!(
                "{}: expected header `x,fx`, found `{header}`",
                path.display()
            )));
        }
        let mut knots = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let mut it = line.split(',').map(str::trim);
            let (Some(x), Some(fx), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Config(format!(
                    "{}: row {} must have two columns",
                    path.display(),
                    lineno + 2
                )));
            };
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Config(format!("{}: row {}: {e}", path.display(), lineno + 2)))
            };
            knots.push((parse(x)?, parse(fx)?));
        }
        let mut table = Table::new(knots)?;
        table.source = Some(path.display().to_string());
        Ok(table)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    fn eval(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&x) {
            return None;
        }
        let i = self.knots.partition_point(|&(kx, _)| kx <= x);
        if i == self.knots.len() {
            return Some(self.knots[i - 1].1);
        }
        let (x0, y0) = self.knots[i - 1];
        let (x1, y1) = self.knots[i];
        if x == x0 {
            return Some(y0);
        }
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }

    /// True when some knot value is zero or the values change sign.
    pub fn touches_zero(&self) -> bool {
        let pos = self.knots.iter().any(|&(_, y)| y > 0.0);
        let neg = self.knots.iter().any(|&(_, y)| y < 0.0);
        self.knots.iter().any(|&(_, y)| y == 0.0) || (pos && neg)
    }
}

/// Parametric function families.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Zero,
    Linear {
        c: f64,
    },
    Affine {
        a: f64,
        b: f64,
    },
    Exponential {
        c: f64,
    },
    Logarithmic {
        c: f64,
    },
    Power {
        c: f64,
    },
    /// `lambda * x^2 + offset`; the offset carries the constant terms of
    /// the Abel solution triple.
    Quadratic {
        lambda: f64,
        offset: f64,
    },
    Cubic,
    AbsoluteValue,
    /// `sum coeffs[k] * x^k`.
    Polynomial {
        coeffs: Vec<f64>,
    },
    Tabulated(Table),
}

/// A function family together with the domain it is declared on.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    family: Family,
    domain: Domain,
}

impl FunctionSpec {
    pub fn new(family: Family) -> Self {
        let domain = match &family {
            Family::Logarithmic { .. } | Family::Power { .. } => Domain::PositiveReals,
            Family::Tabulated(t) if t.range().0 > 0.0 => Domain::PositiveReals,
            _ => Domain::AllReals,
        };
        FunctionSpec { family, domain }
    }

    pub fn zero() -> Self {
        Self::new(Family::Zero)
    }
    pub fn linear(c: f64) -> Self {
        Self::new(Family::Linear { c })
    }
    pub fn affine(a: f64, b: f64) -> Self {
        Self::new(Family::Affine { a, b })
    }
    pub fn exponential(c: f64) -> Self {
        Self::new(Family::Exponential { c })
    }
    pub fn logarithmic(c: f64) -> Self {
        Self::new(Family::Logarithmic { c })
    }
    pub fn power(c: f64) -> Self {
        Self::new(Family::Power { c })
    }
    pub fn quadratic(lambda: f64) -> Self {
        Self::new(Family::Quadratic { lambda, offset: 0.0 })
    }
    pub fn quadratic_with_offset(lambda: f64, offset: f64) -> Self {
        Self::new(Family::Quadratic { lambda, offset })
    }
    pub fn cubic() -> Self {
        Self::new(Family::Cubic)
    }
    pub fn absolute_value() -> Self {
        Self::new(Family::AbsoluteValue)
    }
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::new(Family::Polynomial { coeffs })
    }
    pub fn tabulated(table: Table) -> Self {
        Self::new(Family::Tabulated(table))
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, Family::Zero)
    }

    /// Candidates that vanish somewhere; the multiplicative equations treat
    /// these as outside the "non-zero solution" premise.
    pub fn is_degenerate_multiplicative(&self) -> bool {
        match &self.family {
            Family::Zero => true,
            Family::Tabulated(t) => t.touches_zero(),
            _ => false,
        }
    }

    fn short_name(&self) -> &'static str {
        match self.family {
            Family::Zero => "zero",
            Family::Linear { .. } => "linear",
            Family::Affine { .. } => "affine",
            Family::Exponential { .. } => "exponential",
            Family::Logarithmic { .. } => "logarithmic",
            Family::Power { .. } => "power",
            Family::Quadratic { .. } => "quadratic",
            Family::Cubic => "cubic",
            Family::AbsoluteValue => "abs",
            Family::Polynomial { .. } => "polynomial",
            Family::Tabulated(_) => "tabulated",
        }
    }

    /// Exact family formula at `x`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::domain(self.to_string(), x));
        }
        let v = match &self.family {
            Family::Zero => 0.0,
            Family::Linear { c } => c * x,
            Family::Affine { a, b } => a * x + b,
            Family::Exponential { c } => (c * x).exp(),
            Family::Logarithmic { c } => c * x.ln(),
            Family::Power { c } => x.powf(*c),
            Family::Quadratic { lambda, offset } => lambda * x * x + offset,
            Family::Cubic => x * x * x,
            Family::AbsoluteValue => x.abs(),
            Family::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Family::Tabulated(t) => t.eval(x).ok_or_else(|| Error::domain(self.to_string(), x))?,
        };
        Ok(v)
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.short_name();
        match &self.family {
            Family::Zero | Family::Cubic | Family::AbsoluteValue => write!(f, "{name}"),
            Family::Linear { c }
            | Family::Exponential { c }
            | Family::Logarithmic { c }
            | Family::Power { c } => write!(f, "{name}:c={c:?}"),
            Family::Affine { a, b } => write!(f, "{name}:a={a:?},b={b:?}"),
            Family::Quadratic { lambda, offset } => {
                if *offset == 0.0 {
                    write!(f, "{name}:lambda={lambda:?}")
                } else {
                    write!(f, "{name}:lambda={lambda:?},offset={offset:?}")
                }
            }
            Family::Polynomial { coeffs } => {
                write!(f, "{name}:")?;
                for (i, c) in coeffs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c:?}")?;
                }
                Ok(())
            }
            Family::Tabulated(t) => match &t.source {
                Some(path) => write!(f, "{name}:@{path}"),
                None => {
                    write!(f, "{name}:")?;
                    for (i, (x, y)) in t.knots.iter().enumerate() {
                        if i > 0 {
                            write!(f, ";")?;
                        }
                        write!(f, "{x:?}:{y:?}")?;
                    }
                    Ok(())
                }
            },
        }
    }
}

fn parse_params<'a>(input: &str, body: &'a str, allowed: &[&str]) -> Result<Vec<(&'a str, f64)>> {
    let mut out = Vec::new();
    for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::parse(input, format!("expected key=value, found `{part}`")))?;
        let k = k.trim();
        if !allowed.contains(&k) {
            return Err(Error::parse(input, format!("unknown parameter `{k}`")));
        }
        if out.iter().any(|(seen, _)| *seen == k) {
            return Err(Error::parse(input, format!("duplicate parameter `{k}`")));
        }
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|e| Error::parse(input, format!("parameter `{k}`: {e}")))?;
        if !v.is_finite() {
            return Err(Error::parse(input, format!("parameter `{k}` must be finite")));
        }
        out.push((k, v));
    }
    Ok(out)
}

fn get(params: &[(&str, f64)], key: &str) -> Option<f64> {
    params.iter().find(|(k, _)| *k == key).map(|&(_, v)| v)
}

fn require(input: &str, params: &[(&str, f64)], key: &str) -> Result<f64> {
    get(params, key).ok_or_else(|| Error::parse(input, format!("missing parameter `{key}`")))
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let s = input.trim();
        let (name, body) = s.split_once(':').unwrap_or((s, ""));
        let name = name.trim().to_ascii_lowercase();
        let spec = match name.as_str() {
            "zero" => {
                parse_params(input, body, &[])?;
                Self::zero()
            }
            "linear" => Self::linear(require(input, &parse_params(input, body, &["c"])?, "c")?),
            "affine" => {
                let p = parse_params(input, body, &["a", "b"])?;
                Self::affine(require(input, &p, "a")?, require(input, &p, "b")?)
            }
            "exponential" | "exp" => {
                Self::exponential(require(input, &parse_params(input, body, &["c"])?, "c")?)
            }
            "logarithmic" | "log" => {
                Self::logarithmic(require(input, &parse_params(input, body, &["c"])?, "c")?)
            }
            "power" => Self::power(require(input, &parse_params(input, body, &["c"])?, "c")?),
            "quadratic" => {
                let p = parse_params(input, body, &["lambda", "offset"])?;
                Self::quadratic_with_offset(require(input, &p, "lambda")?, get(&p, "offset").unwrap_or(0.0))
            }
            "cubic" => {
                parse_params(input, body, &[])?;
                Self::cubic()
            }
            "abs" | "absolute-value" | "absolutevalue" => {
                parse_params(input, body, &[])?;
                Self::absolute_value()
            }
            "polynomial" | "poly" => {
                let coeffs = body
                    .split(',')
                    .map(|c| {
                        c.trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| Error::parse(input, format!("bad coefficient `{c}`")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Self::polynomial(coeffs)
            }
            "tabulated" => {
                let body = body.trim();
                if let Some(path) = body.strip_prefix('@') {
                    Self::tabulated(Table::from_csv(Path::new(path))?)
                } else {
                    let mut knots = Vec::new();
                    for pair in body.split(';').map(str::trim).filter(|p| !p.is_empty()) {
                        let (x, y) = pair
                            .split_once(':')
                            .ok_or_else(|| Error::parse(input, format!("knot `{pair}` must be x:fx")))?;
                        let num = |v: &str| {
                            v.trim()
                                .parse::<f64>()
                                .map_err(|e| Error::parse(input, format!("knot `{pair}`: {e}")))
                        };
                        knots.push((num(x)?, num(y)?));
                    }
                    Self::tabulated(Table::new(knots).map_err(|e| Error::parse(input, e.to_string()))?)
                }
            }
            other => return Err(Error::parse(input, format!("unknown family `{other}`"))),
        };
        Ok(spec)
    }
}

impl Serialize for FunctionSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FunctionSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_family_formulas() {
        assert_eq!(FunctionSpec::linear(2.0).evaluate(3.0).unwrap(), 6.0);
        assert_eq!(FunctionSpec::exponential(1.0).evaluate(0.0).unwrap(), 1.0);
        assert_eq!(FunctionSpec::affine(1.0, 3.0).evaluate(2.0).unwrap(), 5.0);
        assert_eq!(FunctionSpec::cubic().evaluate(-2.0).unwrap(), -8.0);
        assert_eq!(FunctionSpec::absolute_value().evaluate(-2.5).unwrap(), 2.5);
        assert_eq!(FunctionSpec::power(2.0).evaluate(3.0).unwrap(), 9.0);
        assert_eq!(FunctionSpec::zero().evaluate(-1e300).unwrap(), 0.0);
        assert_eq!(
            FunctionSpec::quadratic_with_offset(0.5, -0.5)
                .evaluate(2.0)
                .unwrap(),
            1.5
        );
    }

    #[test]
    fn logarithm_outside_positive_reals_is_domain_violation() {
        let err = FunctionSpec::logarithmic(3.0).evaluate(-1.0).unwrap_err();
        assert!(matches!(err, Error::DomainViolation { .. }));
        assert!(FunctionSpec::power(0.5).evaluate(0.0).is_err());
        assert_eq!(FunctionSpec::logarithmic(3.0).domain(), Domain::PositiveReals);
        assert_eq!(FunctionSpec::cubic().domain(), Domain::AllReals);
    }

    #[test]
    fn tabulated_interpolates_and_refuses_extrapolation() {
        let spec = FunctionSpec::tabulated(Table::new(vec![(0.0, 1.0), (1.0, 3.0), (3.0, 2.0)]).unwrap());
        assert_eq!(spec.evaluate(0.0).unwrap(), 1.0);
        assert_eq!(spec.evaluate(0.5).unwrap(), 2.0);
        assert_eq!(spec.evaluate(1.0).unwrap(), 3.0);
        assert_eq!(spec.evaluate(2.0).unwrap(), 2.5);
        assert_eq!(spec.evaluate(3.0).unwrap(), 2.0);
        assert!(spec.evaluate(3.0001).is_err());
        assert!(spec.evaluate(-0.1).is_err());
    }

    #[test]
    fn tabulated_knots_must_increase() {
        assert!(Table::new(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(Table::new(vec![(1.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(Table::new(vec![(1.0, 1.0)]).is_err());
    }

    #[test]
    fn tabulated_domain_follows_knots() {
        let pos = FunctionSpec::tabulated(Table::new(vec![(0.5, 1.0), (2.0, 2.0)]).unwrap());
        assert_eq!(pos.domain(), Domain::PositiveReals);
        let all = FunctionSpec::tabulated(Table::new(vec![(-1.0, 1.0), (2.0, 2.0)]).unwrap());
        assert_eq!(all.domain(), Domain::AllReals);
        let crossing = FunctionSpec::tabulated(Table::new(vec![(-1.0, -1.0), (2.0, 2.0)]).unwrap());
        assert!(crossing.is_degenerate_multiplicative());
        assert!(!all.is_degenerate_multiplicative());
    }

    #[test]
    fn canonical_text_round_trips() {
        for text in [
            "zero",
            "linear:c=2.0",
            "affine:a=1.0,b=3.0",
            "exponential:c=-1.0",
            "logarithmic:c=3.0",
            "power:c=0.5",
            "quadratic:lambda=1.5",
            "quadratic:lambda=0.5,offset=-0.5",
            "cubic",
            "abs",
            "tabulated:0.0:1.0;1.0:2.5",
            "polynomial:-0.5,0.0,0.5,0.0,1.0",
        ] {
            let spec: FunctionSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        let spec: FunctionSpec = "linear:c=2".parse().unwrap();
        assert_eq!(spec, FunctionSpec::linear(2.0));
        let quartic: FunctionSpec = "poly:1,0,0,0,2".parse().unwrap();
        assert_eq!(quartic.evaluate(2.0).unwrap(), 33.0);
    }

    #[test]
    fn rejects_malformed_specs() {
        for bad in [
            "",
            "linear",
            "linear:d=1",
            "linear:c=x",
            "affine:a=1",
            "sine:c=1",
            "cubic:c=1",
            "linear:c=1,c=2",
            "linear:c=inf",
            "polynomial:",
            "polynomial:1,x",
        ] {
            assert!(bad.parse::<FunctionSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn reads_tabulated_csv() {
        let dir = std::env::temp_dir().join(format!("mglab-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("knots.csv");
        std::fs::write(&path, "x,fx\n0,0\n1,2\n2,8\n").unwrap();
        let spec: FunctionSpec = format!("tabulated:@{}", path.display()).parse().unwrap();
        assert_eq!(spec.evaluate(1.5).unwrap(), 5.0);
        assert_eq!(spec.to_string(), format!("tabulated:@{}", path.display()));
        std::fs::write(&path, "a,b\n0,0\n1,2\n").unwrap();
        assert!(format!("tabulated:@{}", path.display())
            .parse::<FunctionSpec>()
            .is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}

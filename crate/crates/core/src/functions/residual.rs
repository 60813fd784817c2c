use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Domain, FunctionSpec};
use crate::error::{Error, Result};

/// Relative tolerance for residuals that should vanish exactly.
pub const EXACT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquationKind {
    CauchyAdditive,
    CauchyExponential,
    CauchyLogarithmic,
    CauchyPower,
    ConditionalCauchySquares,
    Abel,
    Quadratic,
}

impl EquationKind {
    pub const ALL: [EquationKind; 7] = [
        EquationKind::CauchyAdditive,
        EquationKind::CauchyExponential,
        EquationKind::CauchyLogarithmic,
        EquationKind::CauchyPower,
        EquationKind::ConditionalCauchySquares,
        EquationKind::Abel,
        EquationKind::Quadratic,
    ];

    pub fn domain(self) -> Domain {
        match self {
            EquationKind::CauchyLogarithmic | EquationKind::CauchyPower => Domain::PositiveReals,
            _ => Domain::AllReals,
        }
    }

    /// Number of unknown functions in the equation.
    pub fn arity(self) -> usize {
        match self {
            EquationKind::Abel => 3,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EquationKind::CauchyAdditive => "cauchy-additive",
            EquationKind::CauchyExponential => "cauchy-exponential",
            EquationKind::CauchyLogarithmic => "cauchy-logarithmic",
            EquationKind::CauchyPower => "cauchy-power",
            EquationKind::ConditionalCauchySquares => "conditional-cauchy",
            EquationKind::Abel => "abel",
            EquationKind::Quadratic => "quadratic",
        }
    }

    fn multiplicative(self) -> bool {
        matches!(self, EquationKind::CauchyExponential | EquationKind::CauchyPower)
    }
}

impl fmt::Display for EquationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EquationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EquationKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown equation `{s}`")))
    }
}

/// The unknown function(s) substituted into an equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Candidate {
    Single(FunctionSpec),
    /// `(f, h, g)` of `f(x+y) = h(x-y) + g(xy)`.
    Triple {
        f: FunctionSpec,
        h: FunctionSpec,
        g: FunctionSpec,
    },
}

impl Candidate {
    fn specs(&self) -> Vec<&FunctionSpec> {
        match self {
            Candidate::Single(f) => vec![f],
            Candidate::Triple { f, h, g } => vec![f, h, g],
        }
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Candidate::Single(s) => write!(f, "{s}"),
            Candidate::Triple { f: ff, h, g } => write!(f, "(f={ff}, h={h}, g={g})"),
        }
    }
}

impl From<FunctionSpec> for Candidate {
    fn from(spec: FunctionSpec) -> Self {
        Candidate::Single(spec)
    }
}

/// A finite set of `(x, y)` evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGrid {
    pub points: Vec<(f64, f64)>,
    pub description: String,
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n)
        .into_iter()
        .enumerate()
        .map(|(i, l)| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => l.exp(),
        })
        .collect()
}

impl PairGrid {
    /// Cartesian square of `axis`.
    pub fn square(axis: &[f64], description: impl Into<String>) -> Self {
        let points = axis
            .iter()
            .flat_map(|&x| axis.iter().map(move |&y| (x, y)))
            .collect();
        PairGrid {
            points,
            description: description.into(),
        }
    }

    /// 41x41 points: equally spaced on [-5, 5], or geometric on [0.1, 10]
    /// for the positive half-line.
    pub fn default_for(domain: Domain) -> Self {
        match domain {
            Domain::AllReals => Self::square(&linspace(-5.0, 5.0, 41), "linspace(-5,5,41)^2"),
            Domain::PositiveReals => Self::square(&geomspace(0.1, 10.0, 41), "geomspace(0.1,10,41)^2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub equation: EquationKind,
    pub candidate: String,
    pub grid_description: String,
    pub n_points: usize,
    pub sup_abs_residual: f64,
    pub mean_abs_residual: f64,
    pub worst_point: (f64, f64),
    /// Largest magnitude among the function values entering the equation.
    pub max_abs_value: f64,
    /// Zero (or zero-touching) candidate for a multiplicative equation.
    pub degenerate: bool,
}

impl ResidualReport {
    /// Residual vanishes up to rounding: `sup <= 1e-12 * (1 + max |value|)`.
    pub fn is_exact(&self) -> bool {
        self.sup_abs_residual <= EXACT_RTOL * (1.0 + self.max_abs_value)
    }
}

/// LHS - RHS at one point, plus the largest magnitude of the terms involved.
pub fn residual_at(kind: EquationKind, candidate: &Candidate, x: f64, y: f64) -> Result<(f64, f64)> {
    let single = |c: &Candidate| -> Result<FunctionSpec> {
        match c {
            Candidate::Single(f) => Ok(f.clone()),
            Candidate::Triple { .. } => Err(Error::InvalidInput(format!(
                "{kind} takes a single function, got a triple"
            ))),
        }
    };
    let mag = |vals: &[f64]| vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !kind.domain().contains(x) || !kind.domain().contains(y) {
        return Err(Error::domain(
            kind.name(),
            if kind.domain().contains(x) { y } else { x },
        ));
    }
    match kind {
        EquationKind::Abel => {
            let Candidate::Triple { f, h, g } = candidate else {
                return Err(Error::InvalidInput("abel takes a triple (f, h, g)".into()));
            };
            let v = [f.evaluate(x + y)?, h.evaluate(x - y)?, g.evaluate(x * y)?];
            Ok((v[0] - v[1] - v[2], mag(&v)))
        }
        _ => {
            let f = single(candidate)?;
            let (r, v) = match kind {
                EquationKind::CauchyAdditive => {
                    let v = [f.evaluate(x + y)?, f.evaluate(x)?, f.evaluate(y)?];
                    (v[0] - v[1] - v[2], v.to_vec())
                }
                EquationKind::CauchyExponential => {
                    let v = [f.evaluate(x + y)?, f.evaluate(x)?, f.evaluate(y)?];
                    (v[0] - v[1] * v[2], vec![v[0], v[1] * v[2]])
                }
                EquationKind::CauchyLogarithmic => {
                    let v = [f.evaluate(x)?, f.evaluate(y)?, f.evaluate(x * y)?];
                    (v[0] + v[1] - v[2], v.to_vec())
                }
                EquationKind::CauchyPower => {
                    let v = [f.evaluate(x * y)?, f.evaluate(x)?, f.evaluate(y)?];
                    (v[0] - v[1] * v[2], vec![v[0], v[1] * v[2]])
                }
                EquationKind::ConditionalCauchySquares => {
                    let v = [f.evaluate(x * x - y * y)?, f.evaluate(x * x)?, f.evaluate(y * y)?];
                    (v[0] - v[1] + v[2], v.to_vec())
                }
                EquationKind::Quadratic => {
                    let v = [
                        f.evaluate(x + y)?,
                        f.evaluate(x - y)?,
                        f.evaluate(x)?,
                        f.evaluate(y)?,
                    ];
                    (v[0] + v[1] - 2.0 * v[2] - 2.0 * v[3], v.to_vec())
                }
                EquationKind::Abel => unreachable!(),
            };
            Ok((r, mag(&v)))
        }
    }
}

/// Evaluates LHS - RHS of `kind` over the grid and aggregates the absolute
/// residuals.
pub fn residual(kind: EquationKind, candidate: &Candidate, grid: &PairGrid) -> Result<ResidualReport> {
    if grid.points.is_empty() {
        return Err(Error::InvalidInput("empty residual grid".into()));
    }
    let mut sup = 0.0f64;
    let mut sum = 0.0;
    let mut worst = grid.points[0];
    let mut max_abs_value = 0.0f64;
    for &(x, y) in &grid.points {
        let (r, m) = residual_at(kind, candidate, x, y)?;
        let r = r.abs();
        // NaN must not hide behind `>`.
        if r > sup || r.is_nan() && !sup.is_nan() {
            sup = r;
            worst = (x, y);
        }
        sum += r;
        max_abs_value = max_abs_value.max(m);
    }
    let degenerate =
        kind.multiplicative() && candidate.specs().iter().any(|s| s.is_degenerate_multiplicative());
    Ok(ResidualReport {
        equation: kind,
        candidate: candidate.to_string(),
        grid_description: grid.description.clone(),
        n_points: grid.points.len(),
        sup_abs_residual: sup,
        mean_abs_residual: sum / grid.points.len() as f64,
        worst_point: worst,
        max_abs_value,
        degenerate,
    })
}

/// `sup |f(x) + f(-x) - 2 f(0)|` over the grid: zero exactly when the
/// non-constant part of `f` is odd on the grid.
pub fn oddness_defect(spec: &FunctionSpec, grid: &[f64]) -> Result<f64> {
    if spec.domain() != Domain::AllReals {
        return Err(Error::domain(spec.to_string(), 0.0));
    }
    let f0 = spec.evaluate(0.0)?;
    grid.iter().try_fold(0.0f64, |acc, &x| {
        let d = (spec.evaluate(x)? + spec.evaluate(-x)? - 2.0 * f0).abs();
        Ok(acc.max(d))
    })
}

//! Per-theorem suites. Every candidate of a theorem runs through the same
//! checklist; forward candidates must pass all of it, falsifiers must fail
//! at least one row.
//!
//! Checks that take a significance level share the theorem's `alpha`
//! through a Bonferroni split, so the whole suite has family-wise level
//! `alpha` against false rejection of a true solution.

mod checks;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{AbelTriple, EquationKind, FunctionSpec, Kernel, Table};
use crate::simulate::SimConfig;
use crate::transforms::TransformKind;

pub use checks::{evaluate, Check, CheckOutcome, Core, ErrorKind, Lab, TheoremCandidate, DETERMINISTIC_TOL};

#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremId {
    T2_1,
    T2_2a,
    T2_2b,
    T2_2c,
    T2_3,
    T3_1,
    T4_1,
    T5_1,
    A1,
    A2,
}

impl TheoremId {
    pub const ALL: [TheoremId; 10] = [
        TheoremId::T2_1,
        TheoremId::T2_2a,
        TheoremId::T2_2b,
        TheoremId::T2_2c,
        TheoremId::T2_3,
        TheoremId::T3_1,
        TheoremId::T4_1,
        TheoremId::T5_1,
        TheoremId::A1,
        TheoremId::A2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TheoremId::T2_1 => "T2_1",
            TheoremId::T2_2a => "T2_2a",
            TheoremId::T2_2b => "T2_2b",
            TheoremId::T2_2c => "T2_2c",
            TheoremId::T2_3 => "T2_3",
            TheoremId::T3_1 => "T3_1",
            TheoremId::T4_1 => "T4_1",
            TheoremId::T5_1 => "T5_1",
            TheoremId::A1 => "A1",
            TheoremId::A2 => "A2",
        }
    }

    /// One-line statement of what the suite demonstrates.
    pub fn statement(self) -> &'static str {
        match self {
            TheoremId::T2_1 => "f additive <=> f(W) is a martingale vanishing at 0",
            TheoremId::T2_2a => "f exponential <=> f(W) > 0 and ln f(W) is a martingale",
            TheoremId::T2_2b => "f logarithmic <=> f(e^W) is a martingale vanishing at 0",
            TheoremId::T2_2c => "f power <=> ln f(e^W) is a martingale vanishing at 0",
            TheoremId::T2_3 => "f(x + xi) = f(x) + f(xi) a.s. => f linear",
            TheoremId::T3_1 => "G(x^2 - y^2) = G(x^2) - G(y^2) <=> G(x + sigma W) martingales",
            TheoremId::T4_1 => "Abel solutions <=> K(W, y), K(x, W) martingales",
            TheoremId::T5_1 => "quadratic equation <=> f(x) = lambda x^2",
            TheoremId::A1 => "f(W) martingale => f affine",
            TheoremId::A2 => "sections of G martingales => G bilinear-affine",
        }
    }

    /// The suite table.
    pub fn checklist(self) -> Vec<Check> {
        let sections = |left: fn(f64) -> TransformKind, right: fn(f64) -> TransformKind| {
            let mut v: Vec<Check> = SECTION_POINTS
                .iter()
                .map(|&y| Check::Martingale(left(y)))
                .collect();
            v.extend(SECTION_POINTS.iter().map(|&x| Check::Martingale(right(x))));
            v
        };
        let k_left = |y| TransformKind::KLeft { y };
        let k_right = |x| TransformKind::KRight { x };
        match self {
            TheoremId::T2_1 => vec![
                Check::Residual(EquationKind::CauchyAdditive),
                Check::ZeroAtZero(TransformKind::FofW),
                Check::Martingale(TransformKind::FofW),
                Check::Bernstein,
                Check::LinearFit {
                    core: Core::Identity,
                    through_origin: true,
                },
            ],
            TheoremId::T2_2a => vec![
                Check::Residual(EquationKind::CauchyExponential),
                Check::Positivity,
                Check::ZeroAtZero(TransformKind::LogFofW),
                Check::Martingale(TransformKind::LogFofW),
                Check::LogNormality,
                Check::LinearFit {
                    core: Core::LogF,
                    through_origin: true,
                },
            ],
            TheoremId::T2_2b => vec![
                Check::Residual(EquationKind::CauchyLogarithmic),
                Check::ZeroAtZero(TransformKind::FofExpW),
                Check::Martingale(TransformKind::FofExpW),
                Check::LinearFit {
                    core: Core::FExp,
                    through_origin: true,
                },
            ],
            TheoremId::T2_2c => vec![
                Check::Residual(EquationKind::CauchyPower),
                Check::ZeroAtZero(TransformKind::LogFofExpW),
                Check::Martingale(TransformKind::LogFofExpW),
                Check::LinearFit {
                    core: Core::LogFExp,
                    through_origin: true,
                },
            ],
            TheoremId::T2_3 => vec![
                Check::XiEquation,
                Check::DerivativeConstant,
                Check::GaussianMeanZero,
                Check::XiNormality,
            ],
            TheoremId::T3_1 => {
                let mut v = vec![Check::Residual(EquationKind::ConditionalCauchySquares)];
                v.extend(
                    SHIFT_SCALES
                        .iter()
                        .map(|&(x0, sigma)| Check::Martingale(TransformKind::ShiftScale { x0, sigma })),
                );
                v.push(Check::LinearFit {
                    core: Core::Identity,
                    through_origin: true,
                });
                v
            }
            TheoremId::T4_1 => {
                let mut v = vec![Check::Residual(EquationKind::Abel), Check::TripleStructure];
                v.extend(sections(k_left, k_right));
                v.push(Check::KernelConstant);
                v.push(Check::BilinearFit {
                    vanishing: &["b", "c"],
                });
                v
            }
            TheoremId::T5_1 => {
                let mut v = vec![Check::Residual(EquationKind::Quadratic)];
                v.extend(sections(
                    |y| TransformKind::GLeft { y },
                    |x| TransformKind::GRight { x },
                ));
                v.push(Check::BilinearFit {
                    vanishing: &["b", "c", "d"],
                });
                v.push(Check::QuadraticCoefficient);
                v
            }
            TheoremId::A1 => vec![
                Check::Martingale(TransformKind::FofW),
                Check::LinearFit {
                    core: Core::Identity,
                    through_origin: false,
                },
                Check::TimeInvariance,
                Check::Kolmogorov,
            ],
            TheoremId::A2 => {
                let mut v = vec![Check::BilinearFit { vanishing: &[] }];
                v.extend(sections(k_left, k_right));
                v
            }
        }
    }

    pub fn default_forward(self) -> Vec<TheoremCandidate> {
        match self {
            TheoremId::T2_1 => vec![FunctionSpec::linear(2.5).into()],
            TheoremId::T2_2a => vec![FunctionSpec::exponential(-1.0).into()],
            TheoremId::T2_2b => vec![FunctionSpec::logarithmic(3.0).into()],
            TheoremId::T2_2c => vec![FunctionSpec::power(0.5).into()],
            TheoremId::T2_3 => vec![FunctionSpec::linear(2.5).into()],
            TheoremId::T3_1 => vec![FunctionSpec::linear(2.5).into()],
            TheoremId::T4_1 => vec![triple(ABEL_TRIPLE.expand())],
            TheoremId::T5_1 => vec![FunctionSpec::quadratic(1.5).into()],
            TheoremId::A1 => vec![
                FunctionSpec::linear(2.5).into(),
                FunctionSpec::affine(1.0, 3.0).into(),
            ],
            TheoremId::A2 => vec![Kernel::BilinearAffine {
                a: 2.0,
                b: 0.5,
                c: -1.0,
                d: 3.0,
            }
            .into()],
        }
    }

    pub fn default_falsifiers(self) -> Vec<TheoremCandidate> {
        match self {
            TheoremId::T2_1 => vec![
                FunctionSpec::quadratic(1.0).into(),
                FunctionSpec::cubic().into(),
                FunctionSpec::absolute_value().into(),
            ],
            TheoremId::T2_2a => vec![
                FunctionSpec::affine(1.0, 2.0).into(),
                FunctionSpec::linear(1.0).into(),
            ],
            TheoremId::T2_2b => vec![FunctionSpec::power(2.0).into()],
            TheoremId::T2_2c => vec![one_plus_x_table().into()],
            TheoremId::T2_3 => vec![FunctionSpec::quadratic(1.0).into()],
            TheoremId::T3_1 => vec![FunctionSpec::cubic().into()],
            TheoremId::T4_1 => vec![quartic_abel_falsifier()],
            TheoremId::T5_1 => vec![FunctionSpec::cubic().into()],
            TheoremId::A1 => vec![
                FunctionSpec::quadratic(1.0).into(),
                FunctionSpec::absolute_value().into(),
            ],
            TheoremId::A2 => vec![Kernel::Monomial {
                coef: 1.0,
                px: 2,
                py: 1,
            }
            .into()],
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TheoremId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('.', "_");
        TheoremId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(&key))
            .ok_or_else(|| Error::Config(format!("unknown theorem `{s}`")))
    }
}

/// Fixed points `y` (resp. `x`) of the sections `K(W, y)`, `K(x, W)`.
pub const SECTION_POINTS: [f64; 3] = [-2.0, 1.0, 3.0];

/// `(x0, sigma)` of the shifted and scaled processes `G(x0 + sigma W)`.
pub const SHIFT_SCALES: [(f64, f64); 3] = [(0.0, 1.0), (1.0, 2.0), (-3.0, 0.5)];

pub const ABEL_TRIPLE: AbelTriple = AbelTriple {
    a: 2.0,
    d: 1.0,
    h0: -0.5,
};

fn triple((f, h, g): (FunctionSpec, FunctionSpec, FunctionSpec)) -> TheoremCandidate {
    TheoremCandidate::Triple { f, h, g }
}

/// The default Abel triple with `x^4` added to `h`.
fn quartic_abel_falsifier() -> TheoremCandidate {
    let (f, _, g) = ABEL_TRIPLE.expand();
    let AbelTriple { a, h0, .. } = ABEL_TRIPLE;
    let h = FunctionSpec::polynomial(vec![h0, 0.0, a / 4.0, 0.0, 1.0]);
    TheoremCandidate::Triple { f, h, g }
}

/// `1 + x` on `[1e-4, 1e4]`: positive, never a power.
fn one_plus_x_table() -> FunctionSpec {
    FunctionSpec::tabulated(Table::new(vec![(1e-4, 1.0 + 1e-4), (1e4, 1.0 + 1e4)]).expect("valid knots"))
}

/// Replacements for the default candidates; `None` keeps the default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub forward: Option<Vec<TheoremCandidate>>,
    pub falsifiers: Option<Vec<TheoremCandidate>>,
    /// Family-wise level of the suite; 0.01 when unset.
    pub alpha: Option<f64>,
}

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub id: TheoremId,
    pub statement: String,
    pub master_seed: u64,
    pub n_paths: usize,
    pub time_grid: Vec<f64>,
    pub alpha: f64,
    /// Level given to each check that takes one.
    pub alpha_per_check: f64,
    pub forward: Vec<CheckOutcome>,
    pub falsification: Vec<CheckOutcome>,
    pub recovered_constants: BTreeMap<String, f64>,
    pub overall: bool,
    /// Why `overall` is false; empty on success.
    pub failures: Vec<String>,
}

impl TheoremReport {
    /// Errors that make the run inconclusive rather than a verdict.
    pub fn has_insufficient_samples(&self) -> bool {
        self.forward
            .iter()
            .chain(&self.falsification)
            .any(|c| c.error == Some(ErrorKind::InsufficientSamples))
    }

    /// A forward candidate broke a premise of the transform.
    pub fn has_forward_degeneracy(&self) -> bool {
        self.forward.iter().any(|c| {
            matches!(
                c.error,
                Some(ErrorKind::DegenerateInput | ErrorKind::DomainViolation)
            )
        })
    }
}

/// Runs one theorem on fresh ensembles.
pub fn run(id: TheoremId, sim: &SimConfig, overrides: &Overrides) -> Result<TheoremReport> {
    let lab = Lab::new(sim)?;
    Ok(run_with(id, &lab, overrides))
}

/// Runs one theorem on shared ensembles.
pub fn run_with(id: TheoremId, lab: &Lab, overrides: &Overrides) -> TheoremReport {
    let alpha = overrides.alpha.unwrap_or(DEFAULT_ALPHA);
    let checklist = id.checklist();
    let stat_checks = checklist.iter().filter(|c| c.takes_alpha()).count().max(1);
    let alpha_per_check = alpha / stat_checks as f64;
    let forward = overrides.forward.clone().unwrap_or_else(|| id.default_forward());
    let falsifiers = overrides
        .falsifiers
        .clone()
        .unwrap_or_else(|| id.default_falsifiers());

    let run_all = |cands: &[TheoremCandidate]| -> Vec<Vec<CheckOutcome>> {
        cands
            .iter()
            .map(|c| {
                checklist
                    .par_iter()
                    .map(|check| evaluate(check, c, lab, alpha_per_check))
                    .collect()
            })
            .collect()
    };
    let fwd = run_all(&forward);
    let fals = run_all(&falsifiers);

    let mut failures = Vec::new();
    let mut recovered_constants = BTreeMap::new();
    for (k, (cand, outcomes)) in forward.iter().zip(&fwd).enumerate() {
        for o in outcomes {
            if !o.pass {
                let mut msg = format!("forward check `{}` failed for {cand}", o.check);
                if !o.note.is_empty() {
                    msg.push_str(": ");
                    msg.push_str(&o.note);
                }
                failures.push(msg);
            }
            for (name, v) in &o.recovered {
                let key = if k == 0 {
                    name.clone()
                } else {
                    format!("{name}_{k}")
                };
                recovered_constants.entry(key).or_insert(*v);
            }
        }
    }
    for (cand, outcomes) in falsifiers.iter().zip(&fals) {
        if outcomes.iter().all(|o| o.pass) {
            failures.push(format!("falsifier {cand} passed every check"));
        }
        for o in outcomes
            .iter()
            .filter(|o| o.error == Some(ErrorKind::InsufficientSamples))
        {
            failures.push(format!("falsifier check `{}` inconclusive: {}", o.check, o.note));
        }
    }
    TheoremReport {
        id,
        statement: id.statement().to_string(),
        master_seed: lab.sim.master_seed,
        n_paths: lab.sim.n_paths,
        time_grid: lab.sim.time_grid.clone(),
        alpha,
        alpha_per_check,
        forward: fwd.into_iter().flatten().collect(),
        falsification: fals.into_iter().flatten().collect(),
        recovered_constants,
        overall: failures.is_empty(),
        failures,
    }
}

/// Every theorem in id order, sharing one set of ensembles.
pub fn run_all(sim: &SimConfig, alpha: Option<f64>) -> Result<Vec<TheoremReport>> {
    let lab = Lab::new(sim)?;
    let overrides = Overrides {
        alpha,
        ..Default::default()
    };
    Ok(TheoremId::ALL
        .par_iter()
        .map(|&id| run_with(id, &lab, &overrides))
        .collect())
}

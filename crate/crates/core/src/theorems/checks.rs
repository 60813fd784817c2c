use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    bilinear_fit, heat_smooth, kolmogorov_residual, recover_quadratic_coefficient, smoothed_derivative,
    spread, time_invariance_profile, FdSteps, QuadratureRule, KOLMOGOROV_TOL,
};
use crate::error::{Error, Result};
use crate::functions::{linspace, residual, Candidate, EquationKind, FunctionSpec, Kernel, PairGrid};
use crate::mgtest::{
    bernstein_check, fit_linear_with, lognormality_check, normality_check, test_martingale, CellStat,
    InstrumentSet,
};
use crate::simulate::{generate_pair, standard_normal_samples, PathEnsemble, SimConfig};
use crate::transforms::{build, zero_at_zero, Subject, TransformKind};

/// Absolute tolerance of the deterministic fits and identities.
pub const DETERMINISTIC_TOL: f64 = 1e-10;

/// What a theorem is run on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TheoremCandidate {
    Function(FunctionSpec),
    /// `(f, h, g)` of the Abel equation.
    Triple {
        f: FunctionSpec,
        h: FunctionSpec,
        g: FunctionSpec,
    },
    Kernel(Kernel),
}

impl fmt::Display for TheoremCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TheoremCandidate::Function(s) => write!(f, "{s}"),
            TheoremCandidate::Triple { f: ff, h, g } => write!(f, "(f={ff}, h={h}, g={g})"),
            TheoremCandidate::Kernel(k) => write!(f, "{k}"),
        }
    }
}

impl From<FunctionSpec> for TheoremCandidate {
    fn from(f: FunctionSpec) -> Self {
        TheoremCandidate::Function(f)
    }
}

impl From<Kernel> for TheoremCandidate {
    fn from(k: Kernel) -> Self {
        TheoremCandidate::Kernel(k)
    }
}

impl TheoremCandidate {
    fn function(&self) -> Result<&FunctionSpec> {
        match self {
            TheoremCandidate::Function(f) => Ok(f),
            other => Err(Error::InvalidInput(format!(
                "expected a single function, got {other}"
            ))),
        }
    }

    /// `K = f(x+y) - h(x-y)` for triples, `G = f(x+y) - f(x) - f(y)` for
    /// single functions, the kernel itself otherwise.
    fn kernel(&self) -> Kernel {
        match self {
            TheoremCandidate::Function(f) => Kernel::Additivity { f: f.clone() },
            TheoremCandidate::Triple { f, h, .. } => Kernel::Abel {
                f: f.clone(),
                h: h.clone(),
            },
            TheoremCandidate::Kernel(k) => k.clone(),
        }
    }

    fn residual_candidate(&self) -> Result<Candidate> {
        match self {
            TheoremCandidate::Function(f) => Ok(Candidate::Single(f.clone())),
            TheoremCandidate::Triple { f, h, g } => Ok(Candidate::Triple {
                f: f.clone(),
                h: h.clone(),
                g: g.clone(),
            }),
            TheoremCandidate::Kernel(k) => Err(Error::InvalidInput(format!(
                "no equation residual for kernel {k}"
            ))),
        }
    }

    fn subject(&self, kind: TransformKind) -> Subject {
        match (self, kind) {
            (
                _,
                TransformKind::KLeft { .. }
                | TransformKind::KRight { .. }
                | TransformKind::GLeft { .. }
                | TransformKind::GRight { .. },
            ) => Subject::Kernel(self.kernel()),
            (TheoremCandidate::Function(f), _) => Subject::Function(f.clone()),
            (_, _) => Subject::Kernel(self.kernel()),
        }
    }
}

/// The one-argument map whose linearity is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Core {
    /// `x -> f(x)`
    Identity,
    /// `x -> ln f(x)`
    LogF,
    /// `x -> f(e^x)`
    FExp,
    /// `x -> ln f(e^x)`
    LogFExp,
}

impl Core {
    fn eval(self, f: &FunctionSpec, x: f64) -> Result<f64> {
        let ln = |v: f64| {
            if v > 0.0 {
                Ok(v.ln())
            } else {
                Err(Error::domain(format!("ln {f}"), v))
            }
        };
        match self {
            Core::Identity => f.evaluate(x),
            Core::LogF => ln(f.evaluate(x)?),
            Core::FExp => f.evaluate(x.exp()),
            Core::LogFExp => ln(f.evaluate(x.exp())?),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Core::Identity => "f(x)",
            Core::LogF => "ln f(x)",
            Core::FExp => "f(e^x)",
            Core::LogFExp => "ln f(e^x)",
        }
    }
}

/// One row of a theorem's suite table.
#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    /// Equation residual vanishes on the default grid.
    Residual(EquationKind),
    /// The transformed process starts at zero.
    ZeroAtZero(TransformKind),
    /// `f(W_t) > 0` on every sampled value.
    Positivity,
    Martingale(TransformKind),
    /// Bernstein falsifier on `f(W_T)`, `f(B_T)`.
    Bernstein,
    /// `ln f(W_T)` is Gaussian.
    LogNormality,
    /// The core is affine on [-5, 5]; `through_origin` also demands a zero
    /// intercept and reports the slope as `c`.
    LinearFit {
        core: Core,
        through_origin: bool,
    },
    /// `f(x + xi) = f(x) + f(xi)` on every sampled `xi`.
    XiEquation,
    /// `E f(x + xi) xi` does not depend on `x`.
    DerivativeConstant,
    /// `E f(xi) = 0`.
    GaussianMeanZero,
    /// `f(xi)` is Gaussian.
    XiNormality,
    /// `K(0, y) = K(x, 0) = K(0, 0)` on a grid.
    KernelConstant,
    /// `f - h` is the constant `g(0)`.
    TripleStructure,
    /// Bilinear fit is exact, with the listed coefficients vanishing.
    BilinearFit {
        vanishing: &'static [&'static str],
    },
    /// `f(2x) - 2 f(x)` is proportional to `x^2`.
    QuadraticCoefficient,
    /// `E f(x + W_t)` does not depend on `t`.
    TimeInvariance,
    /// Engine check of the backward Kolmogorov equation.
    Kolmogorov,
}

impl Check {
    pub fn name(&self) -> String {
        match self {
            Check::Residual(k) => format!("residual {k}"),
            Check::ZeroAtZero(k) => format!("zero at zero {k}"),
            Check::Positivity => "positivity f(W)".into(),
            Check::Martingale(k) => format!("martingale {k}"),
            Check::Bernstein => "bernstein f(W_T), f(B_T)".into(),
            Check::LogNormality => "log-normality f(W_T)".into(),
            Check::LinearFit { core, .. } => format!("linear fit {}", core.name()),
            Check::XiEquation => "stochastic cauchy f(x+xi)".into(),
            Check::DerivativeConstant => "smoothed derivative constant".into(),
            Check::GaussianMeanZero => "E f(xi) = 0".into(),
            Check::XiNormality => "normality f(xi)".into(),
            Check::KernelConstant => "K(0,y) = K(x,0) constant".into(),
            Check::TripleStructure => "f - h = g(0)".into(),
            Check::BilinearFit { .. } => "bilinear fit".into(),
            Check::QuadraticCoefficient => "quadratic coefficient".into(),
            Check::TimeInvariance => "time invariance".into(),
            Check::Kolmogorov => "backward kolmogorov".into(),
        }
    }

    /// Checks that consume the family-wise level.
    pub fn takes_alpha(&self) -> bool {
        matches!(self, Check::Martingale(_) | Check::Bernstein)
    }
}

/// Coarse classification of an error that stopped a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorKind {
    DomainViolation,
    DegenerateInput,
    InsufficientSamples,
    SingularGrid,
    Invalid,
}

impl From<&Error> for ErrorKind {
    fn from(e: &Error) -> Self {
        match e {
            Error::DomainViolation { .. } => ErrorKind::DomainViolation,
            Error::DegenerateInput(_) => ErrorKind::DegenerateInput,
            Error::InsufficientSamples(_) => ErrorKind::InsufficientSamples,
            Error::SingularGrid(_) => ErrorKind::SingularGrid,
            _ => ErrorKind::Invalid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub candidate: String,
    pub check: String,
    pub pass: bool,
    pub statistics: BTreeMap<String, f64>,
    pub recovered: BTreeMap<String, f64>,
    pub error: Option<ErrorKind>,
    pub note: String,
    /// Martingale cells, for plot data.
    pub cells: Vec<CellStat>,
    /// `(x, value)` curves, for plot data.
    pub series: Vec<[f64; 2]>,
}

#[derive(Default)]
struct Outcome {
    pass: bool,
    statistics: Vec<(&'static str, f64)>,
    recovered: Vec<(&'static str, f64)>,
    note: String,
    cells: Vec<CellStat>,
    series: Vec<[f64; 2]>,
}

impl Outcome {
    fn judged(pass: bool) -> Self {
        Outcome {
            pass,
            ..Default::default()
        }
    }
    fn stat(mut self, name: &'static str, v: f64) -> Self {
        self.statistics.push((name, v));
        self
    }
    fn recover(mut self, name: &'static str, v: f64) -> Self {
        self.recovered.push((name, v));
        self
    }
    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

/// Shared inputs of every suite: the two ensembles, the Gaussian sample and
/// the quadrature rule.
pub struct Lab {
    pub sim: SimConfig,
    pub w: Arc<PathEnsemble>,
    pub b: Arc<PathEnsemble>,
    pub xi: Vec<f64>,
    pub rule: QuadratureRule,
}

impl Lab {
    pub fn new(sim: &SimConfig) -> Result<Self> {
        let (w, b) = generate_pair(sim)?;
        Ok(Lab {
            sim: sim.clone(),
            w: Arc::new(w),
            b: Arc::new(b),
            xi: standard_normal_samples(sim.master_seed, sim.n_paths),
            rule: QuadratureRule::default(),
        })
    }
}

fn default_axis() -> Vec<f64> {
    linspace(-5.0, 5.0, 41)
}

fn fit_axis() -> Vec<f64> {
    linspace(-2.0, 2.0, 9)
}

fn sup(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0f64, |m, v| {
        if m.is_nan() || v.is_nan() {
            f64::NAN
        } else {
            m.max(v.abs())
        }
    })
}

pub fn evaluate(check: &Check, candidate: &TheoremCandidate, lab: &Lab, alpha: f64) -> CheckOutcome {
    let result = run_check(check, candidate, lab, alpha);
    let mut out = CheckOutcome {
        candidate: candidate.to_string(),
        check: check.name(),
        pass: false,
        statistics: BTreeMap::new(),
        recovered: BTreeMap::new(),
        error: None,
        note: String::new(),
        cells: Vec::new(),
        series: Vec::new(),
    };
    match result {
        Ok(o) => {
            out.pass = o.pass;
            out.statistics = o
                .statistics
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect();
            out.recovered = o.recovered.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            out.note = o.note;
            out.cells = o.cells;
            out.series = o.series;
        }
        Err(e) => {
            out.error = Some(ErrorKind::from(&e));
            out.note = e.to_string();
        }
    }
    out
}

fn run_check(check: &Check, cand: &TheoremCandidate, lab: &Lab, alpha: f64) -> Result<Outcome> {
    match check {
        Check::Residual(kind) => {
            let c = cand.residual_candidate()?;
            let spec_domain = kind.domain();
            let r = residual(*kind, &c, &PairGrid::default_for(spec_domain))?;
            Ok(Outcome::judged(r.is_exact() && !r.degenerate)
                .stat("sup_abs_residual", r.sup_abs_residual)
                .stat("mean_abs_residual", r.mean_abs_residual)
                .stat("max_abs_value", r.max_abs_value)
                .stat("worst_x", r.worst_point.0)
                .stat("worst_y", r.worst_point.1)
                .note(if r.degenerate { "zero candidate" } else { "" }))
        }
        Check::ZeroAtZero(kind) => {
            let subject = cand.subject(*kind);
            let v = crate::transforms::value_at_time_zero(*kind, &subject)?;
            Ok(Outcome::judged(zero_at_zero(*kind, &subject)?).stat("value_at_zero", v))
        }
        Check::Positivity => {
            let f = cand.function()?;
            let p = build(TransformKind::FofW, &f.clone().into(), lab.w.clone())?;
            let min = p.values().iter().copied().fold(f64::INFINITY, f64::min);
            let bad = p
                .values()
                .iter()
                .filter(|v| v.partial_cmp(&&0.0) != Some(std::cmp::Ordering::Greater))
                .count();
            Ok(Outcome::judged(bad == 0 && !p.is_degenerate())
                .stat("min_value", min)
                .stat("non_positive_count", bad as f64))
        }
        Check::Martingale(kind) => {
            let p = build(*kind, &cand.subject(*kind), lab.w.clone())?;
            let v = test_martingale(&p, &InstrumentSet::default(), alpha)?;
            let worst = v
                .pairs
                .iter()
                .fold(None::<&CellStat>, |w, c| match w {
                    Some(w) if w.z.abs() >= c.z.abs() => Some(w),
                    _ => Some(c),
                })
                .expect("at least one cell");
            Ok(Outcome {
                pass: v.pass,
                statistics: vec![
                    ("max_abs_z", v.max_abs_z()),
                    ("critical_value", v.critical_value),
                    ("worst_s", worst.s),
                    ("worst_t", worst.t),
                    ("worst_mean", worst.mean),
                    ("tail_max_abs", v.tails.max_abs),
                    ("tail_excess_kurtosis", v.tails.excess_kurtosis),
                ],
                note: format!("worst instrument {}", worst.instrument),
                cells: v.pairs,
                ..Default::default()
            })
        }
        Check::Bernstein => {
            let f = cand.function()?;
            let last = lab.sim.time_grid.len() - 1;
            let x = build(TransformKind::FofW, &f.clone().into(), lab.w.clone())?;
            let y = build(TransformKind::FofW, &f.clone().into(), lab.b.clone())?;
            let r = bernstein_check(&x.column(last), &y.column(last), alpha)?;
            Ok(Outcome {
                pass: r.pass,
                statistics: dist_stats(
                    &r.statistics,
                    &[
                        "corr_z_v",
                        "corr_z2_v",
                        "corr_z_v2",
                        "corr_z2_v2",
                        "zscore_z_v",
                        "zscore_z2_v",
                        "zscore_z_v2",
                        "zscore_z2_v2",
                        "critical_value",
                    ],
                ),
                note: r.note,
                ..Default::default()
            })
        }
        Check::LogNormality => {
            let f = cand.function()?;
            let last = lab.sim.time_grid.len() - 1;
            let x = build(TransformKind::FofW, &f.clone().into(), lab.w.clone())?;
            let r = lognormality_check(&x.column(last))?;
            Ok(normality_outcome(&r))
        }
        Check::LinearFit { core, through_origin } => {
            let f = cand.function()?;
            let fit = fit_linear_with(|x| core.eval(f, x), &default_axis())?;
            let linear = fit.max_deviation <= DETERMINISTIC_TOL;
            let o = Outcome::default()
                .stat("a", fit.a)
                .stat("b", fit.b)
                .stat("max_deviation", fit.max_deviation);
            Ok(if *through_origin {
                let o = Outcome {
                    pass: linear && fit.b.abs() <= DETERMINISTIC_TOL,
                    ..o
                };
                o.recover("c", fit.a)
            } else {
                Outcome { pass: linear, ..o }
                    .recover("a", fit.a)
                    .recover("b", fit.b)
            })
        }
        Check::XiEquation => {
            let f = cand.function()?;
            let axis = default_axis();
            let per_x = axis
                .par_iter()
                .map(|&x| {
                    let fx = f.evaluate(x)?;
                    let mut worst = 0.0f64;
                    for &xi in &lab.xi {
                        let (a, b) = (f.evaluate(x + xi)?, f.evaluate(xi)?);
                        let scale = 1.0 + a.abs().max(fx.abs()).max(b.abs());
                        worst = worst.max((a - fx - b).abs() / scale);
                    }
                    Ok(worst)
                })
                .collect::<Result<Vec<f64>>>()?;
            let rel = sup(per_x);
            Ok(Outcome::judged(rel <= crate::functions::EXACT_RTOL).stat("sup_relative_residual", rel))
        }
        Check::DerivativeConstant => {
            let f = cand.function()?;
            let axis = default_axis();
            let d = smoothed_derivative(f, &axis, &lab.rule)?;
            let s = spread(&d);
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            Ok(Outcome {
                series: axis.iter().zip(&d).map(|(&x, &v)| [x, v]).collect(),
                ..Outcome::judged(s <= DETERMINISTIC_TOL)
                    .stat("spread", s)
                    .stat("mean", mean)
                    .recover("c", mean)
            })
        }
        Check::GaussianMeanZero => {
            let f = cand.function()?;
            let m = heat_smooth(f, 1.0, 0.0, &lab.rule)?;
            Ok(Outcome::judged(m.abs() <= DETERMINISTIC_TOL).stat("mean", m))
        }
        Check::XiNormality => {
            let f = cand.function()?;
            let vals = lab
                .xi
                .iter()
                .map(|&x| f.evaluate(x))
                .collect::<Result<Vec<f64>>>()?;
            Ok(normality_outcome(&normality_check(&vals)?))
        }
        Check::KernelConstant => {
            let k = cand.kernel();
            let k00 = k.eval(0.0, 0.0)?;
            let mut dev = 0.0f64;
            let mut scale = k00.abs();
            for &u in &default_axis() {
                let (a, b) = (k.eval(0.0, u)?, k.eval(u, 0.0)?);
                dev = sup([dev, a - k00, b - k00]);
                scale = scale.max(a.abs()).max(b.abs());
            }
            Ok(
                Outcome::judged(dev <= crate::functions::EXACT_RTOL * (1.0 + scale))
                    .stat("max_deviation", dev)
                    .recover("k0", k00),
            )
        }
        Check::TripleStructure => {
            let TheoremCandidate::Triple { f, h, g } = cand else {
                return Err(Error::InvalidInput(format!("expected a triple, got {cand}")));
            };
            let g0 = g.evaluate(0.0)?;
            let mut dev = 0.0f64;
            let mut scale = 0.0f64;
            for &x in &default_axis() {
                let (fx, hx) = (f.evaluate(x)?, h.evaluate(x)?);
                dev = sup([dev, fx - hx - g0]);
                scale = scale.max(fx.abs()).max(hx.abs());
            }
            Ok(
                Outcome::judged(dev <= crate::functions::EXACT_RTOL * (1.0 + scale))
                    .stat("max_deviation", dev)
                    .recover("h0", h.evaluate(0.0)?),
            )
        }
        Check::BilinearFit { vanishing } => {
            let axis = fit_axis();
            let fit = bilinear_fit(&cand.kernel(), &axis, &axis)?;
            let coef = |n: &str| match n {
                "a" => fit.a,
                "b" => fit.b,
                "c" => fit.c,
                _ => fit.d,
            };
            let zeros = vanishing.iter().all(|n| coef(n).abs() <= DETERMINISTIC_TOL);
            Ok(Outcome::judged(fit.max_residual <= DETERMINISTIC_TOL && zeros)
                .stat("a", fit.a)
                .stat("b", fit.b)
                .stat("c", fit.c)
                .stat("d", fit.d)
                .stat("max_residual", fit.max_residual)
                .recover("a", fit.a)
                .recover("b", fit.b)
                .recover("c", fit.c)
                .recover("d", fit.d))
        }
        Check::QuadraticCoefficient => {
            let f = cand.function()?;
            let axis: Vec<f64> = default_axis().into_iter().filter(|&x| x != 0.0).collect();
            let q = recover_quadratic_coefficient(f, &axis)?;
            Ok(Outcome::judged(q.max_residual <= DETERMINISTIC_TOL)
                .stat("a", q.a)
                .stat("max_residual", q.max_residual)
                .recover("lambda", q.a / 2.0))
        }
        Check::TimeInvariance => {
            let f = cand.function()?;
            let axis = default_axis();
            let d = time_invariance_profile(f, 0.5, 1.0, &axis, &lab.rule)?;
            let defect = sup(d.iter().copied());
            Ok(Outcome {
                series: axis.iter().zip(&d).map(|(&x, &v)| [x, v]).collect(),
                ..Outcome::judged(defect <= DETERMINISTIC_TOL).stat("defect", defect)
            })
        }
        Check::Kolmogorov => {
            let f = cand.function()?;
            let axis = linspace(-2.0, 2.0, 21);
            let steps = FdSteps::scaled(1.0, &axis)?;
            let r = kolmogorov_residual(f, 1.0, &[0.25, 0.5, 0.75], &axis, steps, &lab.rule)?;
            Ok(Outcome::judged(r <= KOLMOGOROV_TOL).stat("residual", r))
        }
    }
}

fn dist_stats(all: &BTreeMap<String, f64>, keys: &[&'static str]) -> Vec<(&'static str, f64)> {
    keys.iter().filter_map(|&k| all.get(k).map(|&v| (k, v))).collect()
}

fn normality_outcome(r: &crate::mgtest::DistReport) -> Outcome {
    Outcome {
        pass: r.pass,
        statistics: dist_stats(
            &r.statistics,
            &[
                "mean",
                "variance",
                "skewness",
                "excess_kurtosis",
                "sup_cdf_distance",
                "skewness_band",
                "kurtosis_band",
                "cdf_band",
            ],
        ),
        note: r.note.clone(),
        ..Default::default()
    }
}

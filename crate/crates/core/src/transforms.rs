//! Theorem-specific transformed processes `X_t = T(f; W_t)`.
//!
//! A domain violation while building a process (for instance the logarithm
//! of a non-positive value) is recorded as a degenerate witness instead of
//! aborting: it means the candidate breaks the premise being tested.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{FunctionSpec, Kernel};
use crate::simulate::PathEnsemble;

/// Tolerance of the time-zero check.
pub const ZERO_AT_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TransformKind {
    /// `f(W_t)`
    FofW,
    /// `ln f(W_t)`
    LogFofW,
    /// `f(exp W_t)`
    FofExpW,
    /// `ln f(exp W_t)`
    LogFofExpW,
    /// `G(x0 + sigma W_t)`
    ShiftScale { x0: f64, sigma: f64 },
    /// `K(W_t, y)`
    KLeft { y: f64 },
    /// `K(x, W_t)`
    KRight { x: f64 },
    /// `G(W_t, y)` with `G(x, y) = f(x+y) - f(x) - f(y)`
    GLeft { y: f64 },
    /// `G(x, W_t)`
    GRight { x: f64 },
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformKind::FofW => write!(f, "f(W)"),
            TransformKind::LogFofW => write!(f, "ln f(W)"),
            TransformKind::FofExpW => write!(f, "f(exp W)"),
            TransformKind::LogFofExpW => write!(f, "ln f(exp W)"),
            TransformKind::ShiftScale { x0, sigma } => write!(f, "G({x0:?} + {sigma:?} W)"),
            TransformKind::KLeft { y } => write!(f, "K(W, {y:?})"),
            TransformKind::KRight { x } => write!(f, "K({x:?}, W)"),
            TransformKind::GLeft { y } => write!(f, "G(W, {y:?})"),
            TransformKind::GRight { x } => write!(f, "G({x:?}, W)"),
        }
    }
}

impl TransformKind {
    /// Textual form accepted by `FromStr`.
    pub fn text_form(&self) -> String {
        match self {
            TransformKind::FofW => "fofw".into(),
            TransformKind::LogFofW => "log-fofw".into(),
            TransformKind::FofExpW => "fofexpw".into(),
            TransformKind::LogFofExpW => "log-fofexpw".into(),
            TransformKind::ShiftScale { x0, sigma } => format!("shift-scale:x0={x0:?},sigma={sigma:?}"),
            TransformKind::KLeft { y } => format!("k-left:y={y:?}"),
            TransformKind::KRight { x } => format!("k-right:x={x:?}"),
            TransformKind::GLeft { y } => format!("g-left:y={y:?}"),
            TransformKind::GRight { x } => format!("g-right:x={x:?}"),
        }
    }
}

fn param(input: &str, body: &str, key: &str) -> Result<f64> {
    body.split(',')
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| k.trim() == key)
        .and_then(|(_, v)| v.trim().parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(input, format!("missing or bad parameter `{key}`")))
}

/// Command-line names: `fofw`, `log-fofw`, `fofexpw`, `log-fofexpw`,
/// `shift-scale:x0=..,sigma=..`, `k-left:y=..`, `k-right:x=..`,
/// `g-left:y=..`, `g-right:x=..`.
impl std::str::FromStr for TransformKind {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let s = input.trim();
        let (name, body) = s.split_once(':').unwrap_or((s, ""));
        Ok(match name.trim().to_ascii_lowercase().as_str() {
            "fofw" => TransformKind::FofW,
            "log-fofw" => TransformKind::LogFofW,
            "fofexpw" => TransformKind::FofExpW,
            "log-fofexpw" => TransformKind::LogFofExpW,
            "shift-scale" => TransformKind::ShiftScale {
                x0: param(input, body, "x0")?,
                sigma: param(input, body, "sigma")?,
            },
            "k-left" => TransformKind::KLeft {
                y: param(input, body, "y")?,
            },
            "k-right" => TransformKind::KRight {
                x: param(input, body, "x")?,
            },
            "g-left" => TransformKind::GLeft {
                y: param(input, body, "y")?,
            },
            "g-right" => TransformKind::GRight {
                x: param(input, body, "x")?,
            },
            other => return Err(Error::parse(input, format!("unknown transform `{other}`"))),
        })
    }
}

/// What a transform is applied to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Subject {
    Function(FunctionSpec),
    Kernel(Kernel),
}

impl From<FunctionSpec> for Subject {
    fn from(f: FunctionSpec) -> Self {
        Subject::Function(f)
    }
}

impl From<Kernel> for Subject {
    fn from(k: Kernel) -> Self {
        Subject::Kernel(k)
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Function(s) => write!(f, "{s}"),
            Subject::Kernel(k) => write!(f, "{k}"),
        }
    }
}

fn log_positive(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v.ln())
    } else {
        Err(Error::domain(format!("ln {what}"), v))
    }
}

/// Kernel behind the two-argument kinds; quadratic `G` kinds accept a plain
/// function and wrap it.
fn kernel_of(kind: TransformKind, subject: &Subject) -> Result<Kernel> {
    match (kind, subject) {
        (_, Subject::Kernel(k)) => Ok(k.clone()),
        (TransformKind::GLeft { .. } | TransformKind::GRight { .. }, Subject::Function(f)) => {
            Ok(Kernel::Additivity { f: f.clone() })
        }
        (_, Subject::Function(f)) => Err(Error::InvalidInput(format!(
            "{kind} needs a two-argument kernel, got {f}"
        ))),
    }
}

fn function_of(kind: TransformKind, subject: &Subject) -> Result<&FunctionSpec> {
    match subject {
        Subject::Function(f) => Ok(f),
        Subject::Kernel(k) => Err(Error::InvalidInput(format!(
            "{kind} needs a one-argument function, got {k}"
        ))),
    }
}

/// A transform kind bound to its subject; evaluates `T(w)` for a single
/// underlying value.
#[derive(Debug, Clone)]
pub struct Transform {
    kind: TransformKind,
    function: Option<FunctionSpec>,
    kernel: Option<Kernel>,
    label: String,
}

impl Transform {
    pub fn new(kind: TransformKind, subject: &Subject) -> Result<Self> {
        let (function, kernel) = match kind {
            TransformKind::KLeft { .. }
            | TransformKind::KRight { .. }
            | TransformKind::GLeft { .. }
            | TransformKind::GRight { .. } => (None, Some(kernel_of(kind, subject)?)),
            _ => (Some(function_of(kind, subject)?.clone()), None),
        };
        Ok(Transform {
            kind,
            function,
            kernel,
            label: subject.to_string(),
        })
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn subject_label(&self) -> &str {
        &self.label
    }

    pub fn apply(&self, w: f64) -> Result<f64> {
        if let Some(k) = &self.kernel {
            return match self.kind {
                TransformKind::KLeft { y } | TransformKind::GLeft { y } => k.eval(w, y),
                TransformKind::KRight { x } | TransformKind::GRight { x } => k.eval(x, w),
                _ => unreachable!(),
            };
        }
        let f = self.function.as_ref().expect("one-argument transform");
        match self.kind {
            TransformKind::FofW => f.evaluate(w),
            TransformKind::LogFofW => log_positive(f.evaluate(w)?, &f.to_string()),
            TransformKind::FofExpW => f.evaluate(w.exp()),
            TransformKind::LogFofExpW => log_positive(f.evaluate(w.exp())?, &f.to_string()),
            TransformKind::ShiftScale { x0, sigma } => f.evaluate(x0 + sigma * w),
            _ => unreachable!(),
        }
    }

    /// The additive core `A` with `X_t - X_s = A(W_t - W_s)` for solutions.
    ///
    /// For the one-argument kinds this is the transform with the shift
    /// removed; for two-argument kinds the constant `K(0, y)` is subtracted.
    pub fn additive_core(&self, u: f64) -> Result<f64> {
        match self.kind {
            TransformKind::ShiftScale { sigma, .. } => self
                .function
                .as_ref()
                .expect("one-argument transform")
                .evaluate(sigma * u),
            TransformKind::KLeft { .. }
            | TransformKind::KRight { .. }
            | TransformKind::GLeft { .. }
            | TransformKind::GRight { .. } => Ok(self.apply(u)? - self.apply(0.0)?),
            _ => self.apply(u),
        }
    }
}

/// Where a candidate first violated the transform's premise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateWitness {
    pub path: usize,
    pub time_index: usize,
    pub w: f64,
    pub reason: String,
}

/// Per-path samples of `X_t` on the ensemble's time grid. The conditioning
/// values are the underlying `W_t` of the source ensemble.
#[derive(Debug, Clone)]
pub struct TransformedProcess {
    transform: Transform,
    source: Arc<PathEnsemble>,
    values: Vec<f64>,
    degenerate: Option<DegenerateWitness>,
}

impl TransformedProcess {
    pub fn kind(&self) -> TransformKind {
        self.transform.kind
    }
    pub fn transform(&self) -> &Transform {
        &self.transform
    }
    pub fn source(&self) -> &PathEnsemble {
        &self.source
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.source.n_times() + k]
    }
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(k)
            .step_by(self.source.n_times())
            .copied()
            .collect()
    }
    pub fn is_degenerate(&self) -> bool {
        self.degenerate.is_some()
    }
    pub fn witness(&self) -> Option<&DegenerateWitness> {
        self.degenerate.as_ref()
    }
    pub fn label(&self) -> String {
        format!("{} with {}", self.transform.kind, self.transform.label)
    }
}

/// Applies `kind` to every sampled value of `ensemble`.
pub fn build(
    kind: TransformKind,
    subject: &Subject,
    ensemble: Arc<PathEnsemble>,
) -> Result<TransformedProcess> {
    let transform = Transform::new(kind, subject)?;
    let n_times = ensemble.n_times();
    let mut values = vec![0.0; ensemble.values().len()];
    let first_failures: Vec<Option<DegenerateWitness>> = values
        .par_chunks_mut(n_times)
        .zip(ensemble.values().par_chunks(n_times))
        .enumerate()
        .map(|(i, (out, src))| {
            let mut first = None;
            for (k, (slot, &w)) in out.iter_mut().zip(src).enumerate() {
                match transform.apply(w) {
                    Ok(v) => *slot = v,
                    Err(e) => {
                        *slot = f64::NAN;
                        first.get_or_insert(DegenerateWitness {
                            path: i,
                            time_index: k,
                            w,
                            reason: e.to_string(),
                        });
                    }
                }
            }
            first
        })
        .collect();
    let degenerate = first_failures.into_iter().flatten().next();
    Ok(TransformedProcess {
        transform,
        source: ensemble,
        values,
        degenerate,
    })
}

/// Value of the transform at time zero, where `W_0 = 0`.
pub fn value_at_time_zero(kind: TransformKind, subject: &Subject) -> Result<f64> {
    Transform::new(kind, subject)?.apply(0.0)
}

/// True iff the process starts at zero (`f(0)`, `ln f(0)`, `f(1)`,
/// `ln f(1)`, ... depending on the kind) within `1e-12`.
pub fn zero_at_zero(kind: TransformKind, subject: &Subject) -> Result<bool> {
    Ok(value_at_time_zero(kind, subject)?.abs() <= ZERO_AT_ZERO_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::AbelTriple;
    use crate::simulate::{generate, Label, SimConfig};

    fn ensemble() -> Arc<PathEnsemble> {
        Arc::new(generate(&SimConfig::new(1, 2000, vec![0.25, 0.5, 1.0]), Label::W).unwrap())
    }

    fn assert_pointwise(p: &TransformedProcess, expected: impl Fn(f64) -> f64, tol: f64) {
        assert!(!p.is_degenerate());
        for (v, w) in p.values().iter().zip(p.source().values()) {
            assert!(
                (v - expected(*w)).abs() <= tol * (1.0 + w.abs()),
                "{v} vs {}",
                expected(*w)
            );
        }
    }

    #[test]
    fn transform_names_parse() {
        assert_eq!("fofw".parse::<TransformKind>().unwrap(), TransformKind::FofW);
        assert_eq!(
            "log-fofexpw".parse::<TransformKind>().unwrap(),
            TransformKind::LogFofExpW
        );
        assert_eq!(
            "shift-scale:x0=1,sigma=2".parse::<TransformKind>().unwrap(),
            TransformKind::ShiftScale { x0: 1.0, sigma: 2.0 }
        );
        assert_eq!(
            "k-right:x=-2".parse::<TransformKind>().unwrap(),
            TransformKind::KRight { x: -2.0 }
        );
        assert!("k-left".parse::<TransformKind>().is_err());
        for k in [
            TransformKind::LogFofW,
            TransformKind::ShiftScale { x0: -3.0, sigma: 0.5 },
            TransformKind::GLeft { y: 0.1 },
        ] {
            assert_eq!(k.text_form().parse::<TransformKind>().unwrap(), k);
        }
        assert!("sideways".parse::<TransformKind>().is_err());
    }

    #[test]
    fn log_of_exponential_is_linear() {
        let p = build(
            TransformKind::LogFofW,
            &FunctionSpec::exponential(3.0).into(),
            ensemble(),
        )
        .unwrap();
        assert_pointwise(&p, |w| 3.0 * w, 1e-12);
    }

    #[test]
    fn logarithm_of_exp_is_linear() {
        let p = build(
            TransformKind::FofExpW,
            &FunctionSpec::logarithmic(2.0).into(),
            ensemble(),
        )
        .unwrap();
        assert_pointwise(&p, |w| 2.0 * w, 1e-12);
    }

    #[test]
    fn log_power_of_exp_is_linear() {
        let p = build(
            TransformKind::LogFofExpW,
            &FunctionSpec::power(0.5).into(),
            ensemble(),
        )
        .unwrap();
        assert_pointwise(&p, |w| 0.5 * w, 1e-12);
    }

    #[test]
    fn log_of_linear_is_degenerate_with_witness() {
        let e = ensemble();
        let p = build(
            TransformKind::LogFofW,
            &FunctionSpec::linear(1.0).into(),
            e.clone(),
        )
        .unwrap();
        let w = p.witness().expect("degenerate");
        assert!(w.w <= 0.0);
        assert_eq!(e.value(w.path, w.time_index), w.w);
        // The witness is the first offending entry in path-major order.
        let first = e.values().iter().position(|&v| v <= 0.0).unwrap();
        assert_eq!(w.path * e.n_times() + w.time_index, first);
    }

    #[test]
    fn zero_family_under_log_is_degenerate() {
        let p = build(
            TransformKind::LogFofExpW,
            &FunctionSpec::zero().into(),
            ensemble(),
        )
        .unwrap();
        assert!(p.is_degenerate());
    }

    #[test]
    fn shift_scale_identity_matches_f_of_w() {
        let e = ensemble();
        let g: Subject = FunctionSpec::cubic().into();
        let a = build(TransformKind::ShiftScale { x0: 0.0, sigma: 1.0 }, &g, e.clone()).unwrap();
        let b = build(TransformKind::FofW, &g, e).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn abel_left_section_is_affine_in_w() {
        let subject: Subject = AbelTriple {
            a: 2.0,
            d: 1.0,
            h0: -0.5,
        }
        .kernel()
        .into();
        let p = build(TransformKind::KLeft { y: 3.0 }, &subject, ensemble()).unwrap();
        assert_pointwise(&p, |w| 6.0 * w + 1.0, 1e-12);
        let p = build(TransformKind::KRight { x: -2.0 }, &subject, ensemble()).unwrap();
        assert_pointwise(&p, |w| -4.0 * w + 1.0, 1e-12);
    }

    #[test]
    fn quadratic_g_sections() {
        let subject: Subject = FunctionSpec::quadratic(1.5).into();
        let p = build(TransformKind::GLeft { y: 2.0 }, &subject, ensemble()).unwrap();
        assert_pointwise(&p, |w| 6.0 * w, 1e-12);
    }

    #[test]
    fn kind_subject_mismatch_is_rejected() {
        let k: Subject = AbelTriple {
            a: 1.0,
            d: 0.0,
            h0: 0.0,
        }
        .kernel()
        .into();
        assert!(build(TransformKind::FofW, &k, ensemble()).is_err());
        assert!(build(
            TransformKind::KLeft { y: 1.0 },
            &FunctionSpec::linear(1.0).into(),
            ensemble()
        )
        .is_err());
    }

    #[test]
    fn zero_at_zero_cases() {
        assert!(zero_at_zero(TransformKind::FofW, &FunctionSpec::linear(4.0).into()).unwrap());
        assert!(!zero_at_zero(TransformKind::FofW, &FunctionSpec::affine(1.0, 1.0).into()).unwrap());
        assert!(zero_at_zero(TransformKind::FofExpW, &FunctionSpec::logarithmic(3.0).into()).unwrap());
        assert!(zero_at_zero(TransformKind::LogFofExpW, &FunctionSpec::power(0.5).into()).unwrap());
        assert!(zero_at_zero(TransformKind::LogFofW, &FunctionSpec::linear(1.0).into()).is_err());
    }

    #[test]
    fn additive_cores() {
        let t = Transform::new(
            TransformKind::ShiftScale { x0: 1.0, sigma: 2.0 },
            &FunctionSpec::linear(3.0).into(),
        )
        .unwrap();
        assert_eq!(t.additive_core(0.5).unwrap(), 3.0);
        let t = Transform::new(
            TransformKind::KLeft { y: 2.0 },
            &AbelTriple {
                a: 2.0,
                d: 1.0,
                h0: 0.0,
            }
            .kernel()
            .into(),
        )
        .unwrap();
        assert!((t.additive_core(0.5).unwrap() - 2.0).abs() < 1e-12);
    }
}

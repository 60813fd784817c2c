use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Candidate, FunctionSpec};
use crate::error::Result;

/// Constants of the general Abel solution:
/// `g(x) = a x + d`, `h(x) = (a/4) x^2 + h0`, `f(x) = (a/4) x^2 + h0 + d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbelTriple {
    pub a: f64,
    pub d: f64,
    pub h0: f64,
}

fn quadratic_plus_constant(lambda: f64, constant: f64) -> FunctionSpec {
    match (lambda == 0.0, constant == 0.0) {
        (true, true) => FunctionSpec::zero(),
        (true, false) => FunctionSpec::affine(0.0, constant),
        (false, _) => FunctionSpec::quadratic_with_offset(lambda, constant),
    }
}

impl AbelTriple {
    /// Expands to the specs `(f, h, g)`.
    pub fn expand(&self) -> (FunctionSpec, FunctionSpec, FunctionSpec) {
        let g = match (self.a == 0.0, self.d == 0.0) {
            (true, true) => FunctionSpec::zero(),
            (false, true) => FunctionSpec::linear(self.a),
            _ => FunctionSpec::affine(self.a, self.d),
        };
        let h = quadratic_plus_constant(self.a / 4.0, self.h0);
        let f = quadratic_plus_constant(self.a / 4.0, self.h0 + self.d);
        (f, h, g)
    }

    pub fn candidate(&self) -> Candidate {
        let (f, h, g) = self.expand();
        Candidate::Triple { f, h, g }
    }

    pub fn kernel(&self) -> Kernel {
        let (f, h, _) = self.expand();
        Kernel::Abel { f, h }
    }
}

/// Two-argument functions whose sections are tested as martingales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    /// `K(x, y) = f(x+y) - h(x-y)`.
    Abel { f: FunctionSpec, h: FunctionSpec },
    /// `G(x, y) = f(x+y) - f(x) - f(y)`.
    Additivity { f: FunctionSpec },
    /// `a xy + b x + c y + d`.
    BilinearAffine { a: f64, b: f64, c: f64, d: f64 },
    /// `coef * x^px * y^py`.
    Monomial { coef: f64, px: i32, py: i32 },
}

impl Kernel {
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        Ok(match self {
            Kernel::Abel { f, h } => f.evaluate(x + y)? - h.evaluate(x - y)?,
            Kernel::Additivity { f } => f.evaluate(x + y)? - f.evaluate(x)? - f.evaluate(y)?,
            Kernel::BilinearAffine { a, b, c, d } => a * x * y + b * x + c * y + d,
            Kernel::Monomial { coef, px, py } => coef * x.powi(*px) * y.powi(*py),
        })
    }

    /// Builds the Abel kernel from a candidate triple; `None` for singles.
    pub fn from_triple(candidate: &Candidate) -> Option<Kernel> {
        match candidate {
            Candidate::Triple { f, h, .. } => Some(Kernel::Abel {
                f: f.clone(),
                h: h.clone(),
            }),
            Candidate::Single(_) => None,
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Abel { f: ff, h } => write!(f, "K[f={ff}, h={h}]"),
            Kernel::Additivity { f: ff } => write!(f, "G[f={ff}]"),
            Kernel::BilinearAffine { a, b, c, d } => {
                write!(f, "bilinear[a={a:?},b={b:?},c={c:?},d={d:?}]")
            }
            Kernel::Monomial { coef, px, py } => write!(f, "monomial[{coef:?}*x^{px}*y^{py}]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{linspace, residual, EquationKind, PairGrid};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn expands_all_zero_triple() {
        let (f, h, g) = AbelTriple {
            a: 0.0,
            d: 0.0,
            h0: 0.0,
        }
        .expand();
        assert!(f.is_zero() && h.is_zero() && g.is_zero());
    }

    #[test]
    fn expands_documented_triples() {
        let (f, h, g) = AbelTriple {
            a: 2.0,
            d: 1.0,
            h0: -0.5,
        }
        .expand();
        assert_eq!(g, FunctionSpec::affine(2.0, 1.0));
        assert_eq!(h, FunctionSpec::quadratic_with_offset(0.5, -0.5));
        assert_eq!(f, FunctionSpec::quadratic_with_offset(0.5, 0.5));

        let (f, h, g) = AbelTriple {
            a: 4.0,
            d: 0.0,
            h0: 0.0,
        }
        .expand();
        assert_eq!(f, FunctionSpec::quadratic(1.0));
        assert_eq!(h, FunctionSpec::quadratic(1.0));
        assert_eq!(g, FunctionSpec::linear(4.0));
    }

    #[test]
    fn abel_kernel_is_axy_plus_d() {
        let k = AbelTriple {
            a: 2.0,
            d: 1.0,
            h0: -0.5,
        }
        .kernel();
        for &x in &linspace(-3.0, 3.0, 13) {
            for &y in &linspace(-3.0, 3.0, 13) {
                assert!((k.eval(x, y).unwrap() - (2.0 * x * y + 1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn additivity_kernel_of_quadratic_is_bilinear() {
        let k = Kernel::Additivity {
            f: FunctionSpec::quadratic(3.0),
        };
        assert_eq!(k.eval(2.0, -1.5).unwrap(), 6.0 * 2.0 * -1.5);
    }

    proptest! {
        #[test]
        fn expanded_triple_solves_abel(a in -5.0f64..5.0, d in -5.0f64..5.0, h0 in -5.0f64..5.0) {
            let t = AbelTriple { a, d, h0 };
            let (f, h, _) = t.expand();
            let grid = linspace(-5.0, 5.0, 41);
            let rep = residual(EquationKind::Abel, &t.candidate(), &PairGrid::square(&grid, "g")).unwrap();
            prop_assert!(rep.is_exact(), "{:?}", rep);
            for &x in &grid {
                let diff = f.evaluate(x).unwrap() - h.evaluate(x).unwrap() - d;
                prop_assert!(diff.abs() <= 1e-12 * (1.0 + f.evaluate(x).unwrap().abs()));
            }
        }
    }
}

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of nodes.
pub const DEFAULT_ORDER: usize = 64;

/// Gauss-Hermite rule for the standard normal density: `E g(xi)` is
/// approximated by `sum w_i g(x_i)`, exact for polynomials of degree
/// `< 2 * order`.
///
/// Nodes are stored ascending and are exactly symmetric about zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

/// Orthonormal Hermite values `(psi_{n-1}(x), psi_n(x))` by the three-term
/// recurrence `psi_{k+1} = (x psi_k - sqrt(k) psi_{k-1}) / sqrt(k+1)`.
fn hermite_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (prev, cur)
}

impl QuadratureRule {
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("quadrature order must be positive".into()));
        }
        let n = order;
        // Golub-Welsch start, polished by Newton on psi_n (psi_n' = sqrt(n) psi_{n-1}).
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut roots: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        roots.sort_by(f64::total_cmp);
        for x in roots.iter_mut() {
            for _ in 0..8 {
                let (pm, p) = hermite_pair(n, *x);
                let step = p / ((n as f64).sqrt() * pm);
                *x -= step;
                if step.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
        }
        for i in 0..n / 2 {
            let m = 0.5 * (roots[n - 1 - i] - roots[i]);
            roots[i] = -m;
            roots[n - 1 - i] = m;
        }
        if n % 2 == 1 {
            roots[n / 2] = 0.0;
        }
        let mut weights: Vec<f64> = roots
            .iter()
            .map(|&x| {
                let (pm, _) = hermite_pair(n, x);
                1.0 / (n as f64 * pm * pm)
            })
            .collect();
        for i in 0..n / 2 {
            let w = 0.5 * (weights[i] + weights[n - 1 - i]);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Ok(QuadratureRule {
            nodes: roots,
            weights,
            order: n,
        })
    }

    pub fn max_node(&self) -> f64 {
        self.nodes.last().copied().unwrap_or(0.0)
    }

    /// `E g(xi)`. Mirror nodes are summed in pairs so that odd integrands
    /// cancel exactly.
    pub fn expect<F>(&self, g: F) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let n = self.order;
        let mut acc = 0.0;
        for i in 0..n / 2 {
            let x = self.nodes[n - 1 - i];
            acc += self.weights[i] * (g(-x)? + g(x)?);
        }
        if n % 2 == 1 {
            acc += self.weights[n / 2] * g(0.0)?;
        }
        Ok(acc)
    }

    /// `E[g(xi) xi]`, paired the same way.
    pub fn expect_times_node<F>(&self, g: F) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let n = self.order;
        let mut acc = 0.0;
        for i in 0..n / 2 {
            let x = self.nodes[n - 1 - i];
            acc += self.weights[i] * x * (g(x)? - g(-x)?);
        }
        Ok(acc)
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::gauss_hermite(DEFAULT_ORDER).expect("positive order")
    }
}

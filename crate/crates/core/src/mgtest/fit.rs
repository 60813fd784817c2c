use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::FunctionSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub a: f64,
    pub b: f64,
    /// Sup-norm distance between `f` and `a x + b` on the grid.
    pub max_deviation: f64,
}

/// Least-squares affine fit of `spec` on `grid`.
pub fn fit_linear(spec: &FunctionSpec, grid: &[f64]) -> Result<LinearFit> {
    fit_linear_with(|x| spec.evaluate(x), grid)
}

/// [`fit_linear`] for an arbitrary evaluator, e.g. `x -> ln f(e^x)`.
pub fn fit_linear_with<F>(g: F, grid: &[f64]) -> Result<LinearFit>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut distinct = grid.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InvalidInput(
            "linear fit needs at least three distinct grid points".into(),
        ));
    }
    let ys = grid.iter().map(|&x| g(x)).collect::<Result<Vec<f64>>>()?;
    let n = grid.len() as f64;
    let mx = grid.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&x, &y) in grid.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let max_deviation = grid
        .iter()
        .zip(&ys)
        .fold(0.0f64, |m, (&x, &y)| m.max((y - (a * x + b)).abs()));
    Ok(LinearFit { a, b, max_deviation })
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{FunctionSpec, Kernel};

/// Least-squares fit of `a xy + b x + c y + d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub max_residual: f64,
}

impl BilinearFit {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a * x * y + self.b * x + self.c * y + self.d
    }
}

fn distinct(values: &[f64]) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Fits `kernel` over the tensor grid `xs x ys`.
pub fn bilinear_fit(kernel: &Kernel, xs: &[f64], ys: &[f64]) -> Result<BilinearFit> {
    bilinear_fit_with(|x, y| kernel.eval(x, y), xs, ys)
}

/// [`bilinear_fit`] for an arbitrary two-argument evaluator.
pub fn bilinear_fit_with<F>(k: F, xs: &[f64], ys: &[f64]) -> Result<BilinearFit>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if distinct(xs) < 3 || distinct(ys) < 3 {
        return Err(Error::SingularGrid(
            "bilinear fit needs at least three distinct values per axis".into(),
        ));
    }
    let points: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let values = points
        .iter()
        .map(|&(x, y)| k(x, y))
        .collect::<Result<Vec<f64>>>()?;
    let design = DMatrix::from_fn(points.len(), 4, |i, j| {
        let (x, y) = points[i];
        [x * y, x, y, 1.0][j]
    });
    let svd = design.svd(true, true);
    let (smax, smin) = svd
        .singular_values
        .iter()
        .fold((0.0f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
    if smin.partial_cmp(&(1e-12 * smax)) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::SingularGrid(format!(
            "design is rank-deficient (singular values {smin:e} .. {smax:e})"
        )));
    }
    let coef = svd
        .solve(&DVector::from_vec(values.clone()), 0.0)
        .map_err(|e| Error::SingularGrid(e.to_string()))?;
    let mut fit = BilinearFit {
        a: coef[0],
        b: coef[1],
        c: coef[2],
        d: coef[3],
        max_residual: 0.0,
    };
    fit.max_residual = points
        .iter()
        .zip(&values)
        .fold(0.0f64, |m, (&(x, y), v)| m.max((v - fit.eval(x, y)).abs()));
    Ok(fit)
}

/// Slope of `f(2x) - 2 f(x)` regressed on `x^2` through the origin, with the
/// sup-norm misfit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticRecovery {
    pub a: f64,
    pub max_residual: f64,
}

/// For `f(x) = lambda x^2` the diagonal `G(x, x) = f(2x) - 2 f(x)` equals
/// `2 lambda x^2`, so `a = 2 lambda` with zero misfit.
pub fn recover_quadratic_coefficient(f: &FunctionSpec, x_grid: &[f64]) -> Result<QuadraticRecovery> {
    if x_grid.is_empty() || x_grid.contains(&0.0) {
        return Err(Error::InvalidInput("grid must be non-empty and exclude 0".into()));
    }
    let diag = x_grid
        .iter()
        .map(|&x| Ok(f.evaluate(2.0 * x)? - 2.0 * f.evaluate(x)?))
        .collect::<Result<Vec<f64>>>()?;
    let sxx: f64 = x_grid.iter().map(|x| x.powi(4)).sum();
    let sxy: f64 = x_grid.iter().zip(&diag).map(|(x, g)| x * x * g).sum();
    let a = sxy / sxx;
    let max_residual = x_grid
        .iter()
        .zip(&diag)
        .fold(0.0f64, |m, (x, g)| m.max((g - a * x * x).abs()));
    Ok(QuadraticRecovery { a, max_residual })
}

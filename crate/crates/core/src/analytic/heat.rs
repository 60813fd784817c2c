use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::QuadratureRule;
use crate::error::{Error, Result};
use crate::functions::{Family, FunctionSpec};
use crate::stats::normal_cdf;

/// Relative size of the central finite-difference steps.
pub const FD_RELATIVE_STEP: f64 = 1e-4;

/// Default tolerance of the backward Kolmogorov residual.
pub const KOLMOGOROV_TOL: f64 = 1e-6;

/// Pieces `(lo, hi, alpha, beta)` with `f(y) = alpha + beta y` on
/// `[lo, hi]`, for the families with kinks. Polynomial quadrature converges
/// slowly across a kink, so these are integrated in closed form.
fn linear_pieces(f: &FunctionSpec) -> Option<Vec<(f64, f64, f64, f64)>> {
    match f.family() {
        Family::AbsoluteValue => Some(vec![
            (f64::NEG_INFINITY, 0.0, 0.0, -1.0),
            (0.0, f64::INFINITY, 0.0, 1.0),
        ]),
        Family::Tabulated(t) => Some(
            t.knots()
                .windows(2)
                .map(|w| {
                    let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                    let beta = (y1 - y0) / (x1 - x0);
                    (x0, x1, y0 - beta * x0, beta)
                })
                .collect(),
        ),
        _ => None,
    }
}

fn density(z: f64) -> f64 {
    if z.is_infinite() {
        0.0
    } else {
        (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }
}

/// `z phi(z)`, zero at infinity.
fn z_density(z: f64) -> f64 {
    if z.is_infinite() {
        0.0
    } else {
        z * density(z)
    }
}

/// Checks that the outermost nodes `x +- s * max_node` are admissible.
fn check_node_range(f: &FunctionSpec, x: f64, s: f64, rule: &QuadratureRule) -> Result<()> {
    let reach = s * rule.max_node();
    f.evaluate(x - reach)?;
    f.evaluate(x + reach)?;
    Ok(())
}

/// `E f(x + sqrt(t) xi)`. Every node must land inside the domain of `f`
/// (and inside the knot range of tabulated data).
pub fn heat_smooth(f: &FunctionSpec, t: f64, x: f64, rule: &QuadratureRule) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "smoothing time must be positive, got {t}"
        )));
    }
    let s = t.sqrt();
    if let Some(pieces) = linear_pieces(f) {
        check_node_range(f, x, s, rule)?;
        // E[(alpha + beta (x + s z)) 1{z0 < z < z1}]
        return Ok(pieces
            .iter()
            .map(|&(lo, hi, alpha, beta)| {
                let (z0, z1) = ((lo - x) / s, (hi - x) / s);
                (alpha + beta * x) * (normal_cdf(z1) - normal_cdf(z0))
                    + beta * s * (density(z0) - density(z1))
            })
            .sum());
    }
    rule.expect(|xi| f.evaluate(x + s * xi))
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| {
        if m.is_nan() || v.is_nan() {
            f64::NAN
        } else {
            m.max(v.abs())
        }
    })
}

/// Pointwise `|P_{t1} f(x) - P_{t2} f(x)|` on the grid.
pub fn time_invariance_profile(
    f: &FunctionSpec,
    t1: f64,
    t2: f64,
    x_grid: &[f64],
    rule: &QuadratureRule,
) -> Result<Vec<f64>> {
    if !(t1 > 0.0 && t2 > t1) {
        return Err(Error::InvalidInput(format!("need 0 < t1 < t2, got {t1}, {t2}")));
    }
    x_grid
        .par_iter()
        .map(|&x| Ok((heat_smooth(f, t1, x, rule)? - heat_smooth(f, t2, x, rule)?).abs()))
        .collect()
}

/// Sup of [`time_invariance_profile`]. Vanishes exactly for affine `f`.
pub fn time_invariance_defect(
    f: &FunctionSpec,
    t1: f64,
    t2: f64,
    x_grid: &[f64],
    rule: &QuadratureRule,
) -> Result<f64> {
    Ok(max_abs(&time_invariance_profile(f, t1, t2, x_grid, rule)?))
}

/// Central finite-difference steps in time and space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdSteps {
    pub h_t: f64,
    pub h_x: f64,
}

impl FdSteps {
    /// `h_t = 1e-4 T`, `h_x = 1e-4 * span(x_grid)`.
    pub fn scaled(horizon: f64, x_grid: &[f64]) -> Result<Self> {
        let lo = x_grid.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        if !(span > 0.0 && span.is_finite()) {
            return Err(Error::InvalidInput(
                "x grid needs two distinct finite points".into(),
            ));
        }
        Ok(FdSteps {
            h_t: FD_RELATIVE_STEP * horizon,
            h_x: FD_RELATIVE_STEP * span,
        })
    }
}

/// Sup over `t_grid x x_grid` of `|d_t g + g_xx / 2|` for
/// `g(t, x) = E f(x + W_T - W_t)`, by central differences.
pub fn kolmogorov_residual(
    f: &FunctionSpec,
    horizon: f64,
    t_grid: &[f64],
    x_grid: &[f64],
    steps: FdSteps,
    rule: &QuadratureRule,
) -> Result<f64> {
    let FdSteps { h_t, h_x } = steps;
    if !(h_t > 0.0 && h_x > 0.0) {
        return Err(Error::InvalidInput(
            "finite-difference steps must be positive".into(),
        ));
    }
    if let Some(t) = t_grid.iter().find(|&&t| !(t - h_t > 0.0 && t + h_t < horizon)) {
        return Err(Error::InvalidInput(format!(
            "t = {t} is not interior to (0, {horizon}) at step {h_t}"
        )));
    }
    let g = |t: f64, x: f64| heat_smooth(f, horizon - t, x, rule);
    let cells: Vec<(f64, f64)> = t_grid
        .iter()
        .flat_map(|&t| x_grid.iter().map(move |&x| (t, x)))
        .collect();
    let residuals = cells
        .par_iter()
        .map(|&(t, x)| {
            let dt = (g(t + h_t, x)? - g(t - h_t, x)?) / (2.0 * h_t);
            let dxx = (g(t, x + h_x)? - 2.0 * g(t, x)? + g(t, x - h_x)?) / (h_x * h_x);
            Ok(dt + 0.5 * dxx)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(max_abs(&residuals))
}

/// `E[f(x + xi) xi]` at each grid point; equals `f'(x)` for smooth `f` and
/// is constant exactly when `f` is affine.
pub fn smoothed_derivative(f: &FunctionSpec, x_grid: &[f64], rule: &QuadratureRule) -> Result<Vec<f64>> {
    let pieces = linear_pieces(f);
    x_grid
        .par_iter()
        .map(|&x| match &pieces {
            Some(pieces) => {
                check_node_range(f, x, 1.0, rule)?;
                // E[(alpha + beta (x + z)) z 1{z0 < z < z1}]
                Ok(pieces
                    .iter()
                    .map(|&(lo, hi, alpha, beta)| {
                        let (z0, z1) = (lo - x, hi - x);
                        let second = normal_cdf(z1) - normal_cdf(z0) + z_density(z0) - z_density(z1);
                        (alpha + beta * x) * (density(z0) - density(z1)) + beta * second
                    })
                    .sum())
            }
            None => rule.expect_times_node(|xi| f.evaluate(x + xi)),
        })
        .collect()
}

/// `max - min` of a list; zero for a constant list.
pub fn spread(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

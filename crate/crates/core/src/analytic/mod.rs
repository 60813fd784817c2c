//! Deterministic quadrature and finite-difference checks: Gaussian
//! smoothing `E f(x + W_t)`, its time invariance, the backward Kolmogorov
//! equation, the smoothed derivative `E f(x + xi) xi`, and least-squares
//! recovery of bilinear and quadratic forms.

mod bilinear;
mod heat;
mod quadrature;

pub use bilinear::{
    bilinear_fit, bilinear_fit_with, recover_quadratic_coefficient, BilinearFit, QuadraticRecovery,
};
pub use heat::{
    heat_smooth, kolmogorov_residual, smoothed_derivative, spread, time_invariance_defect,
    time_invariance_profile, FdSteps, FD_RELATIVE_STEP, KOLMOGOROV_TOL,
};
pub use quadrature::{QuadratureRule, DEFAULT_ORDER};

//! Reference values computed independently of the library (ChaCha-driven
//! Monte Carlo, Simpson integration, closed-form projections) and compared
//! with what the library produces.

use mglab::analytic::{bilinear_fit, heat_smooth, time_invariance_defect, QuadratureRule};
use mglab::functions::{linspace, FunctionSpec, Kernel, Table};
use mglab::mgtest::{
    bernstein_check, fit_linear, normality_check, test_martingale, Instrument, InstrumentSet,
};
use mglab::simulate::{generate, generate_pair, Label, SimConfig};
use mglab::transforms::{build, TransformKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

const N_BRUTE: usize = 1_000_000;

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// `(W_s, W_t)` pairs from an unrelated generator.
fn brute_pairs(seed: u64, s: f64, t: f64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..N_BRUTE)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            let ws = s.sqrt() * a;
            (ws, ws + (t - s).sqrt() * b)
        })
        .collect()
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

fn gaussian_expectation(f: impl Fn(f64) -> f64) -> f64 {
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    simpson(|x| f(x) * phi(x), -40.0, 40.0, 200_000)
}

fn double_factorial(k: u32) -> f64 {
    (1..=k).map(|j| (2 * j - 1) as f64).product()
}

#[test]
fn quadratic_drift_oracle() {
    let pairs = brute_pairs(11, 0.5, 1.0);
    let d: Vec<f64> = pairs.iter().map(|(s, t)| t * t - s * s).collect();
    let (m, se) = mean_se(&d);
    assert!((m - 0.5).abs() < 5.0 * se, "{m} +- {se}");

    let e = Arc::new(generate(&SimConfig::new(12, 200_000, vec![0.5, 1.0]), Label::W).unwrap());
    let p = build(TransformKind::FofW, &FunctionSpec::quadratic(1.0).into(), e).unwrap();
    let v = test_martingale(&p, &InstrumentSet::default(), 0.01).unwrap();
    let c = v.cell(0.5, 1.0, Instrument::Const1).unwrap();
    assert!((c.mean - 0.5).abs() < 0.02);
}

#[test]
fn cubic_conditional_drift_oracle() {
    // E[(W_t^3 - W_s^3) W_s] = 3 s (t - s)
    let pairs = brute_pairs(13, 0.5, 1.0);
    let d: Vec<f64> = pairs.iter().map(|(s, t)| (t.powi(3) - s.powi(3)) * s).collect();
    let (m, se) = mean_se(&d);
    assert!((m - 0.75).abs() < 5.0 * se, "{m} +- {se}");

    let e = Arc::new(generate(&SimConfig::new(14, 200_000, vec![0.5, 1.0]), Label::W).unwrap());
    let p = build(TransformKind::FofW, &FunctionSpec::cubic().into(), e).unwrap();
    let v = test_martingale(&p, &InstrumentSet::default(), 0.01).unwrap();
    let c = v.cell(0.5, 1.0, Instrument::Linear).unwrap();
    assert!((c.mean - 0.75).abs() < 0.05);
}

#[test]
fn cubic_bernstein_covariance_oracle() {
    // E W^6 = 15, E W^12 = 10395, Cov(Z^2, V^2) = 2 E X^4 - 6 (E X^2)^2.
    let ex2 = double_factorial(3);
    let ex4 = double_factorial(6);
    assert_eq!((ex2, ex4), (15.0, 10395.0));
    let oracle = 2.0 * ex4 - 6.0 * ex2 * ex2;
    assert_eq!(oracle, 19440.0);

    let mut rng = ChaCha20Rng::seed_from_u64(15);
    let prods: Vec<(f64, f64)> = (0..N_BRUTE)
        .map(|_| {
            let x: f64 = rng.sample::<f64, _>(StandardNormal).powi(3);
            let y: f64 = rng.sample::<f64, _>(StandardNormal).powi(3);
            ((x + y).powi(2), (x - y).powi(2))
        })
        .collect();
    let n = prods.len() as f64;
    let (mz, mv) = prods
        .iter()
        .fold((0.0, 0.0), |(a, b), (z, v)| (a + z / n, b + v / n));
    let terms: Vec<f64> = prods.iter().map(|(z, v)| (z - mz) * (v - mv)).collect();
    let (cov, se) = mean_se(&terms);
    assert!((cov - oracle).abs() < 5.0 * se, "{cov} +- {se}");

    let (w, b) = generate_pair(&SimConfig::new(16, 200_000, vec![1.0])).unwrap();
    let cube = |v: Vec<f64>| v.into_iter().map(|a| a * a * a).collect::<Vec<_>>();
    let r = bernstein_check(&cube(w.column(0)), &cube(b.column(0)), 0.01).unwrap();
    assert!(r.stat("corr_z2_v2") > 0.0 && r.stat("zscore_z2_v2") > 5.0);
}

#[test]
fn chi_square_skewness_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    let xs: Vec<f64> = (0..N_BRUTE)
        .map(|_| rng.sample::<f64, _>(StandardNormal).powi(2))
        .collect();
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    let brute = m3 / m2.powf(1.5);
    assert!((brute - 8f64.sqrt()).abs() < 0.05, "{brute}");

    let w = generate(&SimConfig::new(18, 200_000, vec![1.0]), Label::W)
        .unwrap()
        .column(0);
    let sq: Vec<f64> = w.iter().map(|x| x * x).collect();
    let r = normality_check(&sq).unwrap();
    assert!(!r.pass && (r.stat("skewness") - 8f64.sqrt()).abs() < 0.25);
}

#[test]
fn gaussian_moments_match_double_factorials() {
    let rule = QuadratureRule::default();
    for k in 0..=20u32 {
        let exact = double_factorial(k);
        let brute = gaussian_expectation(|x| x.powi(2 * k as i32));
        assert!((brute / exact - 1.0).abs() < 1e-8, "k={k}: {brute} vs {exact}");
        let gh = rule.expect(|x| Ok(x.powi(2 * k as i32))).unwrap();
        assert!((gh / exact - 1.0).abs() < 1e-9);
    }
}

#[test]
fn cubic_time_invariance_oracle() {
    // E (x + sqrt(t) xi)^3 = x^3 + 3 x t
    let smooth = |t: f64| gaussian_expectation(|z| (1.0 + t.sqrt() * z).powi(3));
    let brute = (smooth(1.0) - smooth(0.5)).abs();
    assert!((brute - 1.5).abs() < 1e-9, "{brute}");
    let rule = QuadratureRule::default();
    let d = time_invariance_defect(&FunctionSpec::cubic(), 0.5, 1.0, &[1.0], &rule).unwrap();
    assert!((d - brute).abs() < 1e-9);
}

#[test]
fn monomial_bilinear_fit_oracle() {
    // On a symmetric tensor grid the basis {xy, x, y, 1} is orthogonal, so
    // x^2 y projects onto y alone with coefficient mean(x^2).
    let axis = linspace(-2.0, 2.0, 9);
    let mean_x2 = axis.iter().map(|x| x * x).sum::<f64>() / axis.len() as f64;
    assert!((mean_x2 - 5.0 / 3.0).abs() < 1e-15);
    let mut oracle_residual = 0.0f64;
    for &x in &axis {
        for &y in &axis {
            oracle_residual = oracle_residual.max((x * x * y - mean_x2 * y).abs());
        }
    }
    assert!((oracle_residual - 14.0 / 3.0).abs() < 1e-12);

    let fit = bilinear_fit(
        &Kernel::Monomial {
            coef: 1.0,
            px: 2,
            py: 1,
        },
        &axis,
        &axis,
    )
    .unwrap();
    assert!(fit.a.abs() < 1e-12 && fit.b.abs() < 1e-12 && fit.d.abs() < 1e-12);
    assert!((fit.c - 5.0 / 3.0).abs() < 1e-12);
    assert!((fit.max_residual - 14.0 / 3.0).abs() < 1e-12);
}

#[test]
fn quadratic_affine_fit_oracle() {
    // Least squares of x^2 on a symmetric grid: slope 0, intercept mean(x^2).
    let grid = linspace(-5.0, 5.0, 41);
    let intercept = grid.iter().map(|x| x * x).sum::<f64>() / grid.len() as f64;
    assert!((intercept - 8.75).abs() < 1e-12);
    let oracle = 25.0 - intercept;
    let fit = fit_linear(&FunctionSpec::quadratic(1.0), &grid).unwrap();
    assert!(fit.a.abs() < 1e-12);
    assert!((fit.b - 8.75).abs() < 1e-12);
    assert!((fit.max_deviation - oracle).abs() < 1e-12);
    assert!((fit.max_deviation - 16.25).abs() < 1e-12);
}

#[test]
fn heat_smoothing_agrees_with_monte_carlo() {
    let rule = QuadratureRule::default();
    let w = generate(&SimConfig::new(19, 200_000, vec![1.0]), Label::W)
        .unwrap()
        .column(0);
    let families = [
        FunctionSpec::zero(),
        FunctionSpec::linear(2.5),
        FunctionSpec::affine(1.0, 3.0),
        FunctionSpec::exponential(0.5),
        FunctionSpec::quadratic(1.0),
        FunctionSpec::cubic(),
        FunctionSpec::absolute_value(),
        FunctionSpec::polynomial(vec![1.0, -1.0, 0.0, 0.0, 0.1]),
        FunctionSpec::tabulated(Table::new(vec![(-50.0, 3.0), (0.0, -1.0), (50.0, 4.0)]).unwrap()),
    ];
    for f in &families {
        for &x in &linspace(-5.0, 5.0, 41) {
            let q = heat_smooth(f, 1.0, x, &rule).unwrap();
            let samples: Vec<f64> = w.iter().map(|z| f.evaluate(x + z).unwrap()).collect();
            let (m, se) = mean_se(&samples);
            assert!(
                (q - m).abs() <= 4.0 * se + 1e-12,
                "{f} at {x}: {q} vs {m} +- {se}"
            );
        }
    }
    for f in [FunctionSpec::logarithmic(1.0), FunctionSpec::power(0.5)] {
        assert!(heat_smooth(&f, 1.0, 2.0, &rule).is_err());
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{
    bonferroni_critical, central_moments, correlation, ecdf_distance, mean, mean_sd, normal_cdf, sorted,
};

/// Minimum sample size for the distributional checks.
pub const MIN_SAMPLES: usize = 10_000;

/// Band on `sqrt(n) * sup |F_n - Phi|` for the normality check.
pub const NORMALITY_KS_BAND: f64 = 1.95;

/// Band on `sqrt(n) * sup |F_n(x) - G_n(x)|` where `G_n` is the empirical
/// CDF of the negated sample. Under symmetry the statistic behaves like
/// `sup_{[0,1]} |B|`, whose 0.99 quantile is about 2.81.
pub const SYMMETRY_KS_BAND: f64 = 2.81;

/// Multiple of the null standard error allowed for moment statistics.
pub const MOMENT_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistTest {
    Normality,
    LogNormality,
    BernsteinIndependence,
    Symmetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistReport {
    pub test: DistTest,
    pub n: usize,
    pub statistics: BTreeMap<String, f64>,
    pub pass: bool,
    pub note: String,
}

impl DistReport {
    pub fn stat(&self, name: &str) -> f64 {
        self.statistics[name]
    }
}

fn require_samples(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::too_few(MIN_SAMPLES, n));
    }
    Ok(())
}

fn require_finite(xs: &[f64]) -> Result<()> {
    if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite sample {x}")));
    }
    Ok(())
}

/// Necessary-condition falsifier for the Bernstein characterization: with
/// `Z = X + Y` and `V = X - Y` centered, the correlations of
/// `(Z, V)`, `(Z^2, V)`, `(Z, V^2)` and `(Z^2, V^2)` must all vanish.
/// Each cell is scored as `sqrt(n) * r` against a Bonferroni band at `alpha`.
pub fn bernstein_check(x: &[f64], y: &[f64], alpha: f64) -> Result<DistReport> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "sample lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    require_samples(x.len())?;
    require_finite(x)?;
    require_finite(y)?;
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let v: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let (mz, mv) = (mean(&z), mean(&v));
    let zc: Vec<f64> = z.iter().map(|a| a - mz).collect();
    let vc: Vec<f64> = v.iter().map(|a| a - mv).collect();
    let z2: Vec<f64> = zc.iter().map(|a| a * a).collect();
    let v2: Vec<f64> = vc.iter().map(|a| a * a).collect();

    let sqrt_n = (x.len() as f64).sqrt();
    let critical = bonferroni_critical(alpha, 4);
    let mut statistics = BTreeMap::new();
    let mut pass = true;
    for (name, a, b) in [
        ("z_v", &zc, &vc),
        ("z2_v", &z2, &vc),
        ("z_v2", &zc, &v2),
        ("z2_v2", &z2, &v2),
    ] {
        let r = correlation(a, b)
            .ok_or_else(|| Error::InsufficientSamples(format!("zero variance in the {name} cell")))?;
        let score = sqrt_n * r;
        pass &= score.abs() <= critical;
        statistics.insert(format!("corr_{name}"), r);
        statistics.insert(format!("zscore_{name}"), score);
    }
    statistics.insert("critical_value".into(), critical);
    Ok(DistReport {
        test: DistTest::BernsteinIndependence,
        n: x.len(),
        statistics,
        pass,
        note: if pass {
            "no dependence detected between X+Y and X-Y".into()
        } else {
            "dependence detected between X+Y and X-Y".into()
        },
    })
}

/// Skewness, excess kurtosis and Kolmogorov distance to the Gaussian with
/// matched mean and variance.
pub fn normality_check(samples: &[f64]) -> Result<DistReport> {
    normality_inner(samples, DistTest::Normality)
}

/// Normality of `ln X`; every sample must be strictly positive.
pub fn lognormality_check(samples: &[f64]) -> Result<DistReport> {
    if let Some(&x) = samples.iter().find(|&&x| x <= 0.0 || x.is_nan()) {
        return Err(Error::domain("ln", x));
    }
    let logs: Vec<f64> = samples.iter().map(|x| x.ln()).collect();
    normality_inner(&logs, DistTest::LogNormality)
}

fn normality_inner(samples: &[f64], test: DistTest) -> Result<DistReport> {
    require_samples(samples.len())?;
    require_finite(samples)?;
    let n = samples.len() as f64;
    let (m, m2, m3, m4) = central_moments(samples);
    if m2 <= 0.0 {
        return Err(Error::InsufficientSamples("constant sample".into()));
    }
    let skewness = m3 / m2.powf(1.5);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    let (_, sd) = mean_sd(samples);
    let xs = sorted(samples);
    let ks = xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = normal_cdf((x - m) / sd);
        d.max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs())
    });
    let skew_band = MOMENT_SIGMAS * (6.0 / n).sqrt();
    let kurt_band = MOMENT_SIGMAS * (24.0 / n).sqrt();
    let ks_band = NORMALITY_KS_BAND / n.sqrt();
    let pass = skewness.abs() <= skew_band && excess_kurtosis.abs() <= kurt_band && ks <= ks_band;
    let statistics = BTreeMap::from([
        ("mean".to_string(), m),
        ("variance".to_string(), m2),
        ("skewness".to_string(), skewness),
        ("excess_kurtosis".to_string(), excess_kurtosis),
        ("sup_cdf_distance".to_string(), ks),
        ("skewness_band".to_string(), skew_band),
        ("kurtosis_band".to_string(), kurt_band),
        ("cdf_band".to_string(), ks_band),
    ]);
    Ok(DistReport {
        test,
        n: samples.len(),
        statistics,
        pass,
        note: String::new(),
    })
}

/// Symmetry about zero: mean within 5 standard errors of 0 and the empirical
/// CDFs of the sample and its negation within `2.81 / sqrt(n)`.
pub fn symmetry_check(samples: &[f64]) -> Result<DistReport> {
    require_samples(samples.len())?;
    require_finite(samples)?;
    let n = samples.len() as f64;
    let (m, sd) = mean_sd(samples);
    let se = sd / n.sqrt();
    let a = sorted(samples);
    let b: Vec<f64> = a.iter().rev().map(|x| -x).collect();
    let dist = ecdf_distance(&a, &b);
    let band = SYMMETRY_KS_BAND / n.sqrt();
    let pass = m.abs() <= MOMENT_SIGMAS * se && dist <= band;
    let statistics = BTreeMap::from([
        ("mean".to_string(), m),
        ("standard_error".to_string(), se),
        ("sup_cdf_distance".to_string(), dist),
        ("cdf_band".to_string(), band),
    ]);
    Ok(DistReport {
        test: DistTest::Symmetry,
        n: samples.len(),
        statistics,
        pass,
        note: String::new(),
    })
}

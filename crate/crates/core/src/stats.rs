//! Small numeric helpers shared by the testers.
//!
//! Sums over samples use a fixed-shape pairwise tree so that results are
//! bit-identical no matter how many threads take part.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

const LEAF: usize = 1024;

/// Pairwise sum with a split pattern that depends only on `xs.len()`.
pub fn tree_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let leaves = xs.len().div_ceil(LEAF);
    let mid = leaves / 2 * LEAF;
    let (a, b) = rayon::join(|| tree_sum(&xs[..mid]), || tree_sum(&xs[mid..]));
    a + b
}

pub fn mean(xs: &[f64]) -> f64 {
    tree_sum(xs) / xs.len() as f64
}

/// Mean and unbiased standard deviation (two-pass).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = if xs.len() > 1 {
        tree_sum(&sq) / (xs.len() - 1) as f64
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Biased central moments `(mean, m2, m3, m4)`.
pub fn central_moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let m = mean(xs);
    let n = xs.len() as f64;
    let d: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let p2: Vec<f64> = d.iter().map(|v| v * v).collect();
    let p3: Vec<f64> = d.iter().zip(&p2).map(|(v, s)| v * s).collect();
    let p4: Vec<f64> = p2.iter().map(|s| s * s).collect();
    (m, tree_sum(&p2) / n, tree_sum(&p3) / n, tree_sum(&p4) / n)
}

/// Sample correlation, `None` when either side has zero variance.
pub fn correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ma, mb) = (mean(a), mean(b));
    let da: Vec<f64> = a.iter().map(|x| x - ma).collect();
    let db: Vec<f64> = b.iter().map(|x| x - mb).collect();
    let prod: Vec<f64> = da.iter().zip(&db).map(|(x, y)| x * y).collect();
    let saa = tree_sum(&da.iter().map(|x| x * x).collect::<Vec<_>>());
    let sbb = tree_sum(&db.iter().map(|x| x * x).collect::<Vec<_>>());
    if saa <= 0.0 || sbb <= 0.0 || !saa.is_finite() || !sbb.is_finite() {
        return None;
    }
    Some(tree_sum(&prod) / (saa * sbb).sqrt())
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// `P(|N(0,1)| > |z|)`.
pub fn two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Two-sided Bonferroni critical value for `cells` simultaneous z-tests.
pub fn bonferroni_critical(alpha: f64, cells: usize) -> f64 {
    normal_quantile(1.0 - alpha / (2.0 * cells.max(1) as f64))
}

/// Sup distance between the empirical CDFs of two sorted samples.
pub fn ecdf_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

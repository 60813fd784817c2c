//! Reproducible Brownian-motion ensembles on small explicit time grids.
//!
//! The Gaussian increment of path `i` over grid interval `k` is drawn from
//! the Philox block at counter `(k, i_lo, i_hi, label)` under the key
//! `master_seed`, then mapped through the inverse normal CDF. Paths can be
//! generated in any order, on any number of threads, with identical output.

mod philox;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub use philox::{philox4x32_10, uniform_open};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub master_seed: u64,
    pub n_paths: usize,
    /// Strictly increasing sampling times; `t = 0` is implicit.
    pub time_grid: Vec<f64>,
    #[serde(default)]
    pub antithetic: bool,
}

impl SimConfig {
    pub fn new(master_seed: u64, n_paths: usize, time_grid: Vec<f64>) -> Self {
        SimConfig {
            master_seed,
            n_paths,
            time_grid,
            antithetic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be positive".into()));
        }
        if self.time_grid.is_empty() {
            return Err(Error::Config("time grid is empty".into()));
        }
        if !self.time_grid.iter().all(|t| t.is_finite()) || self.time_grid[0] <= 0.0 {
            return Err(Error::Config("time grid must start above 0 and be finite".into()));
        }
        if self.time_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("time grid must be strictly increasing".into()));
        }
        if self.antithetic && self.n_paths < 2 {
            return Err(Error::Config(
                "antithetic sampling needs at least two paths".into(),
            ));
        }
        Ok(())
    }
}

/// Which independent Brownian motion an ensemble realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    W,
    B,
}

impl Label {
    fn stream(self) -> u32 {
        match self {
            Label::W => 0,
            Label::B => 1,
        }
    }
}

/// Stream tag for standalone standard-normal draws, disjoint from W and B.
const XI_STREAM: u32 = 2;

fn key_of(seed: u64) -> [u32; 2] {
    [seed as u32, (seed >> 32) as u32]
}

#[inline]
fn gaussian(key: [u32; 2], stream: u32, index: u64, step: u32) -> f64 {
    let block = philox4x32_10([step, index as u32, (index >> 32) as u32, stream], key);
    standard_normal().inverse_cdf(uniform_open(block))
}

fn standard_normal() -> Normal {
    Normal::standard()
}

/// `n_paths x |time_grid|` matrix of Brownian values, row-major by path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    config: SimConfig,
    label: Label,
    values: Vec<f64>,
}

impl PathEnsemble {
    pub fn config(&self) -> &SimConfig {
        &self.config
    }
    pub fn label(&self) -> Label {
        self.label
    }
    pub fn times(&self) -> &[f64] {
        &self.config.time_grid
    }
    pub fn n_paths(&self) -> usize {
        self.config.n_paths
    }
    pub fn n_times(&self) -> usize {
        self.config.time_grid.len()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn path(&self, i: usize) -> &[f64] {
        let n = self.n_times();
        &self.values[i * n..(i + 1) * n]
    }
    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.n_times() + k]
    }
    /// All path values at grid index `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(k)
            .step_by(self.n_times())
            .copied()
            .collect()
    }
    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times().iter().position(|&s| s == t)
    }
}

/// Generates the ensemble for `label`; a pure function of `(config, label)`.
pub fn generate(config: &SimConfig, label: Label) -> Result<PathEnsemble> {
    config.validate()?;
    let n_times = config.time_grid.len();
    let key = key_of(config.master_seed);
    let stream = label.stream();
    let sqrt_dt: Vec<f64> = std::iter::once(config.time_grid[0])
        .chain(config.time_grid.windows(2).map(|w| w[1] - w[0]))
        .map(f64::sqrt)
        .collect();
    let mut values = vec![0.0; config.n_paths * n_times];
    values.par_chunks_mut(n_times).enumerate().for_each(|(i, row)| {
        let (index, sign) = if config.antithetic {
            ((i / 2) as u64, if i % 2 == 1 { -1.0 } else { 1.0 })
        } else {
            (i as u64, 1.0)
        };
        let mut w = 0.0;
        for (k, slot) in row.iter_mut().enumerate() {
            w += sign * sqrt_dt[k] * gaussian(key, stream, index, k as u32);
            *slot = w;
        }
    });
    Ok(PathEnsemble {
        config: config.clone(),
        label,
        values,
    })
}

/// Two independent ensembles `(W, B)` from disjoint counter streams.
pub fn generate_pair(config: &SimConfig) -> Result<(PathEnsemble, PathEnsemble)> {
    Ok((generate(config, Label::W)?, generate(config, Label::B)?))
}

/// `n` reproducible standard-normal draws.
pub fn standard_normal_samples(seed: u64, n: usize) -> Vec<f64> {
    let key = key_of(seed);
    (0..n as u64)
        .into_par_iter()
        .map(|i| gaussian(key, XI_STREAM, i, 0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn validates_config() {
        assert!(SimConfig::new(1, 0, vec![1.0]).validate().is_err());
        assert!(SimConfig::new(1, 10, vec![]).validate().is_err());
        assert!(SimConfig::new(1, 10, vec![0.0, 1.0]).validate().is_err());
        assert!(SimConfig::new(1, 10, vec![1.0, 0.5]).validate().is_err());
        assert!(SimConfig::new(1, 10, vec![1.0, 1.0]).validate().is_err());
        let mut c = SimConfig::new(1, 1, vec![1.0]);
        c.antithetic = true;
        assert!(c.validate().is_err());
        assert!(matches!(
            generate(&SimConfig::new(1, 0, vec![1.0]), Label::W),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn terminal_mean_and_variance() {
        let e = generate(&SimConfig::new(42, 100_000, vec![1.0]), Label::W).unwrap();
        let (m, v) = mean_var(&e.column(0));
        assert!(m.abs() < 0.016, "mean {m}");
        assert!((v - 1.0).abs() < 5.0 * (2.0f64 / 100_000.0).sqrt(), "var {v}");
    }

    #[test]
    fn covariance_of_two_times_is_earlier_time() {
        let n = 100_000;
        let e = generate(&SimConfig::new(3, n, vec![0.5, 1.0]), Label::W).unwrap();
        let (a, b) = (e.column(0), e.column(1));
        let (ma, _) = mean_var(&a);
        let (mb, _) = mean_var(&b);
        let prods: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).collect();
        let (cov, var_prod) = mean_var(&prods);
        let se = (var_prod / n as f64).sqrt();
        assert!((cov - 0.5).abs() < 5.0 * se, "cov {cov} se {se}");
    }

    #[test]
    fn deterministic_and_path_local() {
        let cfg = SimConfig::new(9, 1000, vec![0.25, 1.0]);
        let a = generate(&cfg, Label::W).unwrap();
        let b = generate(&cfg, Label::W).unwrap();
        assert_eq!(a, b);
        // A larger ensemble extends the smaller one path by path.
        let big = generate(&SimConfig::new(9, 2000, vec![0.25, 1.0]), Label::W).unwrap();
        assert_eq!(&big.values()[..a.values().len()], a.values());
        let other_seed = generate(&SimConfig::new(10, 1000, vec![0.25, 1.0]), Label::W).unwrap();
        assert_ne!(a.values(), other_seed.values());
    }

    #[test]
    fn pair_is_labelled_and_uncorrelated() {
        let cfg = SimConfig::new(7, 200_000, vec![1.0]);
        let (w, b) = generate_pair(&cfg).unwrap();
        assert_eq!((w.label(), b.label()), (Label::W, Label::B));
        assert_eq!(w, generate(&cfg, Label::W).unwrap());
        let (x, y) = (w.column(0), b.column(0));
        let (mx, vx) = mean_var(&x);
        let (my, vy) = mean_var(&y);
        let cov = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() - 1) as f64;
        let corr = cov / (vx * vy).sqrt();
        assert!(corr.abs() < 0.012, "corr {corr}");
    }

    #[test]
    fn antithetic_paths_come_in_mirrored_pairs() {
        let mut cfg = SimConfig::new(5, 10, vec![0.5, 1.0]);
        cfg.antithetic = true;
        let e = generate(&cfg, Label::W).unwrap();
        for j in 0..5 {
            for k in 0..2 {
                assert_eq!(e.value(2 * j, k), -e.value(2 * j + 1, k));
            }
        }
    }

    #[test]
    fn standard_normals() {
        let xs = standard_normal_samples(11, 100_000);
        let (m, v) = mean_var(&xs);
        assert!(m.abs() < 0.016);
        assert!((v - 1.0).abs() < 0.023);
        assert_eq!(xs, standard_normal_samples(11, 100_000));
        assert_eq!(&standard_normal_samples(11, 10)[..], &xs[..10]);
    }
}

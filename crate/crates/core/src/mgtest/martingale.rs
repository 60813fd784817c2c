use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{bonferroni_critical, central_moments, mean_sd, two_sided_p};
use crate::transforms::TransformedProcess;

/// Smallest ensemble on which the Gaussian critical values are trusted.
pub const MIN_PATHS: usize = 10_000;

/// Bounded conditioning functions of the time-`s` Brownian value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Instrument {
    Const1,
    Linear,
    Square,
    Sign,
    Gauss,
}

impl Instrument {
    pub const ALL: [Instrument; 5] = [
        Instrument::Const1,
        Instrument::Linear,
        Instrument::Square,
        Instrument::Sign,
        Instrument::Gauss,
    ];

    #[inline]
    pub fn eval(self, w: f64) -> f64 {
        match self {
            Instrument::Const1 => 1.0,
            Instrument::Linear => w,
            Instrument::Square => w * w,
            Instrument::Sign => {
                if w > 0.0 {
                    1.0
                } else if w < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Instrument::Gauss => (-w * w).exp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Instrument::Const1 => "const1",
            Instrument::Linear => "linear",
            Instrument::Square => "square",
            Instrument::Sign => "sign",
            Instrument::Gauss => "gauss",
        }
    }
}

impl fmt::Display for Instrument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Instrument {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Instrument::ALL
            .into_iter()
            .find(|i| i.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown instrument `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentSet(pub Vec<Instrument>);

impl Default for InstrumentSet {
    fn default() -> Self {
        InstrumentSet(Instrument::ALL.to_vec())
    }
}

/// Studentized moment `E[(X_t - X_s) phi(W_s)]` for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStat {
    pub s: f64,
    pub t: f64,
    pub instrument: Instrument,
    pub mean: f64,
    pub sd: f64,
    pub z: f64,
    pub p: f64,
}

/// Heavy-tail diagnostics at the last sampled time; reported, never judged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDiagnostics {
    pub max_abs: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleVerdict {
    pub candidate: String,
    pub transform: String,
    pub pairs: Vec<CellStat>,
    pub alpha: f64,
    pub critical_value: f64,
    pub n_paths: usize,
    pub pass: bool,
    pub seeds: Vec<u64>,
    pub degenerate: bool,
    pub tails: TailDiagnostics,
}

impl MartingaleVerdict {
    pub fn cell(&self, s: f64, t: f64, instrument: Instrument) -> Option<&CellStat> {
        self.pairs
            .iter()
            .find(|c| c.s == s && c.t == t && c.instrument == instrument)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.pairs.iter().fold(0.0f64, |m, c| m.max(c.z.abs()))
    }
}

fn studentize(diffs: &[f64]) -> (f64, f64, f64) {
    let (mean, sd) = mean_sd(diffs);
    let n = diffs.len() as f64;
    let z = if sd > 0.0 {
        mean / (sd / n.sqrt())
    } else if mean == 0.0 {
        0.0
    } else {
        mean.signum() * f64::INFINITY
    };
    (mean, sd, z)
}

/// Tests `E[(X_t - X_s) phi(W_s)] = 0` for every ordered grid pair `s < t`
/// and every instrument, with Bonferroni control of the family-wise level.
pub fn test_martingale(
    proc: &TransformedProcess,
    instruments: &InstrumentSet,
    alpha: f64,
) -> Result<MartingaleVerdict> {
    if let Some(w) = proc.witness() {
        return Err(Error::DegenerateInput(format!(
            "{} degenerate at path {} time index {}: {}",
            proc.label(),
            w.path,
            w.time_index,
            w.reason
        )));
    }
    let src = proc.source();
    if src.n_paths() < MIN_PATHS {
        return Err(Error::too_few(MIN_PATHS, src.n_paths()));
    }
    if src.n_times() < 2 {
        return Err(Error::InvalidInput(
            "martingale test needs at least two grid times".into(),
        ));
    }
    if instruments.0.is_empty() {
        return Err(Error::InvalidInput("empty instrument set".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let times = src.times();
    let n_pairs = times.len() * (times.len() - 1) / 2;
    let critical_value = bonferroni_critical(alpha, n_pairs * instruments.0.len());

    let mut pairs = Vec::with_capacity(n_pairs * instruments.0.len());
    for si in 0..times.len() {
        let ws = src.column(si);
        let xs = proc.column(si);
        for ti in si + 1..times.len() {
            let xt = proc.column(ti);
            let incr: Vec<f64> = xt.iter().zip(&xs).map(|(a, b)| a - b).collect();
            for &inst in &instruments.0 {
                let diffs: Vec<f64> = incr.iter().zip(&ws).map(|(d, &w)| d * inst.eval(w)).collect();
                let (mean, sd, z) = studentize(&diffs);
                pairs.push(CellStat {
                    s: times[si],
                    t: times[ti],
                    instrument: inst,
                    mean,
                    sd,
                    z,
                    p: two_sided_p(z),
                });
            }
        }
    }
    let pass = pairs.iter().all(|c| c.z.abs() <= critical_value);
    let last = proc.column(times.len() - 1);
    let (_, m2, _, m4) = central_moments(&last);
    let tails = TailDiagnostics {
        max_abs: last.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        excess_kurtosis: if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 },
    };
    Ok(MartingaleVerdict {
        candidate: proc.transform().subject_label().to_string(),
        transform: proc.kind().to_string(),
        pairs,
        alpha,
        critical_value,
        n_paths: src.n_paths(),
        pass,
        seeds: vec![src.config().master_seed],
        degenerate: false,
        tails,
    })
}

/// `sup |(X_t - X_s) - A(W_t - W_s)|` over paths and ordered pairs, where
/// `A` is the additive core of the transform. Zero for solutions.
pub fn increment_identity_defect(proc: &TransformedProcess) -> Result<f64> {
    if let Some(w) = proc.witness() {
        return Err(Error::DegenerateInput(w.reason.clone()));
    }
    let src = proc.source();
    let n = src.n_times();
    let t = proc.transform();
    let mut sup = 0.0f64;
    for i in 0..src.n_paths() {
        for si in 0..n {
            for ti in si + 1..n {
                let lhs = proc.value(i, ti) - proc.value(i, si);
                let core = t
                    .additive_core(src.value(i, ti) - src.value(i, si))
                    .map_err(|e| Error::DegenerateInput(e.to_string()))?;
                let d = (lhs - core).abs();
                if d > sup || d.is_nan() {
                    sup = d;
                }
            }
        }
    }
    Ok(sup)
}

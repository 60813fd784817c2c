use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mglab::functions::{EquationKind, FunctionSpec};
use mglab::simulate::SimConfig;
use mglab::theorems::{TheoremId, DEFAULT_ALPHA};
use mglab::transforms::TransformKind;
use mglab::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum Command {
    Residual,
    Simulate,
    Martingale,
    Bernstein,
    Kolmogorov,
    Derivative,
    Theorem,
    Suite,
    EmitPlotData,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use clap::ValueEnum;
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulation {
    pub seed: u64,
    pub paths: usize,
    pub grid: Vec<f64>,
    pub antithetic: bool,
}

impl Default for Simulation {
    fn default() -> Self {
        Simulation {
            seed: 42,
            paths: 200_000,
            grid: vec![0.25, 0.5, 1.0],
            antithetic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Run {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub funcs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform: Option<String>,
    pub alpha: f64,
    pub format: Format,
    pub out: PathBuf,
}

impl Default for Run {
    fn default() -> Self {
        Run {
            command: None,
            funcs: Vec::new(),
            theorem: None,
            equation: None,
            transform: None,
            alpha: DEFAULT_ALPHA,
            format: Format::Json,
            out: PathBuf::from("mglab-out"),
        }
    }
}

/// Everything a run depends on. Written next to the reports so the run can
/// be repeated with `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub simulation: Simulation,
    pub run: Run,
}

/// Values given on the command line; each one overrides the file.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub grid: Option<Vec<f64>>,
    pub antithetic: bool,
    pub alpha: Option<f64>,
    pub funcs: Vec<String>,
    pub theorem: Option<String>,
    pub equation: Option<String>,
    pub transform: Option<String>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    pub fn apply(&mut self, flags: FlagOverrides) {
        let s = &mut self.simulation;
        let r = &mut self.run;
        if flags.command.is_some() {
            r.command = flags.command;
        }
        if let Some(v) = flags.seed {
            s.seed = v;
        }
        if let Some(v) = flags.paths {
            s.paths = v;
        }
        if let Some(v) = flags.grid {
            s.grid = v;
        }
        if flags.antithetic {
            s.antithetic = true;
        }
        if let Some(v) = flags.alpha {
            r.alpha = v;
        }
        if !flags.funcs.is_empty() {
            r.funcs = flags.funcs;
        }
        if flags.theorem.is_some() {
            r.theorem = flags.theorem;
        }
        if flags.equation.is_some() {
            r.equation = flags.equation;
        }
        if flags.transform.is_some() {
            r.transform = flags.transform;
        }
        if let Some(v) = flags.format {
            r.format = v;
        }
        if let Some(v) = flags.out {
            r.out = v;
        }
    }

    pub fn sim(&self) -> Result<SimConfig> {
        let s = &self.simulation;
        let sim = SimConfig {
            antithetic: s.antithetic,
            ..SimConfig::new(s.seed, s.paths, s.grid.clone())
        };
        sim.validate()?;
        Ok(sim)
    }

    pub fn funcs(&self) -> Result<Vec<FunctionSpec>> {
        self.run.funcs.iter().map(|f| f.parse()).collect()
    }

    pub fn equation(&self) -> Result<Option<EquationKind>> {
        self.run.equation.as_deref().map(str::parse).transpose()
    }

    pub fn transform(&self) -> Result<Option<TransformKind>> {
        self.run.transform.as_deref().map(str::parse).transpose()
    }

    pub fn theorem(&self) -> Result<Option<TheoremId>> {
        self.run.theorem.as_deref().map(TheoremId::from_str).transpose()
    }

    /// Checks every field and rewrites the textual ones in canonical form.
    pub fn normalize(&mut self) -> Result<()> {
        self.sim()?;
        let alpha = self.run.alpha;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        self.run.funcs = self.funcs()?.iter().map(|f| f.to_string()).collect();
        self.run.equation = self.equation()?.map(|e| e.to_string());
        self.run.transform = self.transform()?.map(|t| t.text_form());
        self.run.theorem = self.theorem()?.map(|t| t.name().to_string());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_sections() {
        let c = RunConfig::parse("[simulation]\nseed = 7\n").unwrap();
        assert_eq!(c.simulation.seed, 7);
        assert_eq!(c.simulation.paths, 200_000);
        assert_eq!(c.run.alpha, 0.01);
        assert!(RunConfig::parse("[simulation]\nsede = 7\n").is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut c = RunConfig::parse("[simulation]\nseed = 7\npaths = 50000\n[run]\nalpha = 0.05\n").unwrap();
        c.apply(FlagOverrides {
            seed: Some(9),
            grid: Some(vec![0.5, 1.0]),
            ..Default::default()
        });
        assert_eq!((c.simulation.seed, c.simulation.paths), (9, 50_000));
        assert_eq!(c.simulation.grid, vec![0.5, 1.0]);
        assert_eq!(c.run.alpha, 0.05);
    }

    #[test]
    fn normalized_config_round_trips() {
        let mut c = RunConfig::default();
        c.apply(FlagOverrides {
            command: Some(Command::Martingale),
            funcs: vec!["quadratic:lambda=1".into(), "linear:c=0.1".into()],
            transform: Some("shift-scale:x0=1,sigma=2".into()),
            alpha: Some(0.003),
            ..Default::default()
        });
        c.normalize().unwrap();
        assert_eq!(c.run.funcs, ["quadratic:lambda=1.0", "linear:c=0.1"]);
        let back = RunConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        let mut again = back.clone();
        again.normalize().unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for flags in [
            FlagOverrides {
                alpha: Some(1.5),
                ..Default::default()
            },
            FlagOverrides {
                grid: Some(vec![1.0, 0.5]),
                ..Default::default()
            },
            FlagOverrides {
                funcs: vec!["sine".into()],
                ..Default::default()
            },
            FlagOverrides {
                theorem: Some("T9".into()),
                ..Default::default()
            },
        ] {
            let mut c = RunConfig::default();
            c.apply(flags);
            assert!(c.normalize().is_err());
        }
    }
}

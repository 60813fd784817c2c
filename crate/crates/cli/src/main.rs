mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{CliResult, Failure, Session, Status};
use config::{Command, FlagOverrides, Format, RunConfig};

/// Martingale and deterministic checks of the classical functional equations.
///
/// Exit codes: 0 all checks passed, 1 a check failed, 2 configuration or IO
/// error, 3 inconclusive (too few samples, degenerate or out-of-domain input).
#[derive(Debug, Parser)]
#[command(name = "mglab", version)]
struct Cli {
    /// What to run; may come from the config file instead.
    #[arg(value_enum)]
    command: Option<Command>,

    /// Master seed of the simulation.
    #[arg(long)]
    seed: Option<u64>,

    /// Number of simulated paths.
    #[arg(long)]
    paths: Option<usize>,

    /// Sampling times, comma separated and strictly increasing.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    grid: Option<Vec<f64>>,

    /// Pair each path with its reflection.
    #[arg(long)]
    antithetic: bool,

    /// Family-wise significance level.
    #[arg(long)]
    alpha: Option<f64>,

    /// Candidate function in textual form, e.g. `linear:c=2.5`. Repeatable.
    #[arg(long = "func")]
    funcs: Vec<String>,

    /// Theorem id for `theorem`, e.g. `T2_1`.
    #[arg(long)]
    theorem: Option<String>,

    /// Equation for `residual`, e.g. `cauchy-additive`.
    #[arg(long)]
    equation: Option<String>,

    /// Transform for `martingale` and `simulate`, e.g. `log-fofw` or `k-left:y=1`.
    #[arg(long)]
    transform: Option<String>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum)]
    format: Option<Format>,

    /// TOML run configuration; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Report file read by `emit-plot-data`.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl Cli {
    fn resolve(self) -> CliResult<(RunConfig, Option<PathBuf>)> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.apply(FlagOverrides {
            command: self.command,
            seed: self.seed,
            paths: self.paths,
            grid: self.grid,
            antithetic: self.antithetic,
            alpha: self.alpha,
            funcs: self.funcs,
            theorem: self.theorem,
            equation: self.equation,
            transform: self.transform,
            format: self.format,
            out: self.out,
        });
        cfg.normalize()?;
        Ok((cfg, self.report))
    }
}

fn execute(cli: Cli) -> CliResult<Status> {
    let (cfg, report) = cli.resolve()?;
    let command = cfg
        .run
        .command
        .ok_or_else(|| Failure::Core(mglab::Error::Config("no command given".into())))?;
    if command == Command::EmitPlotData {
        let report = report
            .ok_or_else(|| Failure::Core(mglab::Error::Config("emit-plot-data needs --report".into())))?;
        for path in plot::emit_plot_data(&report, &cfg.run.out)? {
            println!("wrote {}", path.display());
        }
        return Ok(Status::Pass);
    }
    let mut session = Session::new(&cfg)?;
    commands::persist_config(&cfg, &session.out)?;
    let status = match command {
        Command::Residual => commands::residual_cmd(&mut session),
        Command::Simulate => commands::simulate_cmd(&mut session),
        Command::Martingale => commands::martingale_cmd(&mut session),
        Command::Bernstein => commands::bernstein_cmd(&mut session),
        Command::Kolmogorov => commands::kolmogorov_cmd(&mut session),
        Command::Derivative => commands::derivative_cmd(&mut session),
        Command::Theorem => commands::theorem_cmd(&mut session),
        Command::Suite => commands::suite_cmd(&mut session),
        Command::EmitPlotData => unreachable!("handled above"),
    }?;
    for line in &session.lines {
        println!("{line}");
    }
    Ok(status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

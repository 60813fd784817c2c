use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mglab::analytic::{
    heat_smooth, kolmogorov_residual, smoothed_derivative, spread, time_invariance_profile, FdSteps,
    QuadratureRule, KOLMOGOROV_TOL,
};
use mglab::functions::{linspace, residual, Candidate, FunctionSpec, Kernel, PairGrid, ResidualReport};
use mglab::mgtest::{bernstein_check, test_martingale, DistReport, InstrumentSet, MartingaleVerdict};
use mglab::simulate::{generate, generate_pair, Label, PathEnsemble};
use mglab::theorems::{
    run, run_all, Overrides, TheoremCandidate, TheoremId, TheoremReport, DETERMINISTIC_TOL,
};
use mglab::transforms::{build, Subject, TransformKind, TransformedProcess};
use mglab::Error;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{num, write_json, Table};

/// Result of a whole invocation, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Inconclusive => 3,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// An error that stops the invocation.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(io::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Core(e) if inconclusive(e) => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

fn inconclusive(e: &Error) -> bool {
    matches!(
        e,
        Error::InsufficientSamples(_) | Error::DegenerateInput(_) | Error::DomainViolation { .. }
    )
}

fn config_error(msg: impl Into<String>) -> Failure {
    Failure::Core(Error::Config(msg.into()))
}

/// One candidate's line in a report. Inconclusive errors are recorded here;
/// any other error aborts the run.
#[derive(Debug, Serialize)]
struct Entry<T> {
    candidate: String,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<T>,
}

impl<T> Entry<T> {
    fn new(candidate: String, r: mglab::Result<T>, pass: impl Fn(&T) -> bool) -> CliResult<Self> {
        match r {
            Ok(v) => Ok(Entry {
                candidate,
                pass: pass(&v),
                error: None,
                result: Some(v),
            }),
            Err(e) if inconclusive(&e) => Ok(Entry {
                candidate,
                pass: false,
                error: Some(e.to_string()),
                result: None,
            }),
            Err(e) => Err(e.into()),
        }
    }

    fn status(&self) -> Status {
        match (&self.error, self.pass) {
            (Some(_), _) => Status::Inconclusive,
            (None, true) => Status::Pass,
            (None, false) => Status::Fail,
        }
    }
}

#[derive(Serialize)]
struct Results<'a, T> {
    kind: &'a str,
    results: &'a [Entry<T>],
}

#[derive(Serialize)]
struct TheoremFile<'a> {
    kind: &'a str,
    report: &'a TheoremReport,
}

pub struct Session<'a> {
    pub cfg: &'a RunConfig,
    pub out: PathBuf,
    pub lines: Vec<String>,
}

impl<'a> Session<'a> {
    pub fn new(cfg: &'a RunConfig) -> CliResult<Self> {
        let out = cfg.run.out.clone();
        fs::create_dir_all(&out)?;
        Ok(Session {
            cfg,
            out,
            lines: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn say(&mut self, line: String) {
        self.lines.push(line);
    }

    fn funcs(&self) -> CliResult<Vec<FunctionSpec>> {
        let f = self.cfg.funcs()?;
        if f.is_empty() {
            return Err(config_error("at least one --func is required"));
        }
        Ok(f)
    }

    fn write_entries<T: Serialize>(
        &mut self,
        kind: &str,
        entries: &[Entry<T>],
        csv: impl FnOnce(&[Entry<T>]) -> Table,
        describe: impl Fn(&Entry<T>) -> String,
    ) -> CliResult<Status> {
        let fmt = self.cfg.run.format;
        if fmt.json() {
            write_json(
                &self.path(&format!("{kind}.json")),
                &Results {
                    kind,
                    results: entries,
                },
            )?;
        }
        if fmt.csv() {
            csv(entries).write(&self.path(&format!("{kind}.csv")))?;
        }
        let mut status = Status::Pass;
        for e in entries {
            status = status.max(e.status());
            let detail = match &e.error {
                Some(err) => err.clone(),
                None => describe(e),
            };
            self.say(format!("{:<12} {}  {}", e.status().tag(), e.candidate, detail));
        }
        Ok(status)
    }
}

/// Subjects of a transform: `K` kinds read the functions pairwise as `(f, h)`.
fn subjects(kind: TransformKind, funcs: &[FunctionSpec]) -> CliResult<Vec<Subject>> {
    match kind {
        TransformKind::KLeft { .. } | TransformKind::KRight { .. } => {
            if !funcs.len().is_multiple_of(2) {
                return Err(config_error(format!("{kind} takes --func in (f, h) pairs")));
            }
            Ok(funcs
                .chunks_exact(2)
                .map(|p| {
                    Kernel::Abel {
                        f: p[0].clone(),
                        h: p[1].clone(),
                    }
                    .into()
                })
                .collect())
        }
        _ => Ok(funcs.iter().cloned().map(Subject::from).collect()),
    }
}

fn triples(funcs: &[FunctionSpec]) -> CliResult<Vec<(FunctionSpec, FunctionSpec, FunctionSpec)>> {
    if !funcs.len().is_multiple_of(3) {
        return Err(config_error("Abel candidates take --func in (f, h, g) triples"));
    }
    Ok(funcs
        .chunks_exact(3)
        .map(|t| (t[0].clone(), t[1].clone(), t[2].clone()))
        .collect())
}

fn checked_column(p: &TransformedProcess, k: usize) -> mglab::Result<Vec<f64>> {
    if let Some(w) = p.witness() {
        return Err(Error::DegenerateInput(format!("{}: {}", p.label(), w.reason)));
    }
    Ok(p.column(k))
}

pub fn residual_cmd(s: &mut Session) -> CliResult<Status> {
    let kind = s
        .cfg
        .equation()?
        .ok_or_else(|| config_error("residual needs --equation"))?;
    let funcs = s.funcs()?;
    let candidates: Vec<Candidate> = if kind.arity() == 3 {
        triples(&funcs)?
            .into_iter()
            .map(|(f, h, g)| Candidate::Triple { f, h, g })
            .collect()
    } else {
        funcs.into_iter().map(Candidate::Single).collect()
    };
    let grid = PairGrid::default_for(kind.domain());
    let entries = candidates
        .iter()
        .map(|c| {
            Entry::new(c.to_string(), residual(kind, c, &grid), |r| {
                r.is_exact() && !r.degenerate
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut status = s.write_entries("residual", &entries, residual_table, |e| {
        let r = e.result.as_ref().expect("result");
        format!("{}  sup|residual| = {}", r.equation, num(r.sup_abs_residual))
    })?;
    if entries
        .iter()
        .any(|e| e.result.as_ref().is_some_and(|r| r.degenerate))
    {
        status = Status::Inconclusive;
    }
    Ok(status)
}

fn residual_table(entries: &[Entry<ResidualReport>]) -> Table {
    let mut t = Table::new(&[
        "candidate",
        "equation",
        "n_points",
        "sup_abs_residual",
        "mean_abs_residual",
        "worst_x",
        "worst_y",
        "degenerate",
        "pass",
        "error",
    ]);
    for e in entries {
        let err = e.error.clone().unwrap_or_default();
        match &e.result {
            Some(r) => t.push(vec![
                e.candidate.clone(),
                r.equation.to_string(),
                r.n_points.to_string(),
                num(r.sup_abs_residual),
                num(r.mean_abs_residual),
                num(r.worst_point.0),
                num(r.worst_point.1),
                r.degenerate.to_string(),
                e.pass.to_string(),
                err,
            ]),
            None => {
                let mut row = vec![e.candidate.clone()];
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.extend([e.pass.to_string(), err]);
                t.push(row);
            }
        }
    }
    t
}

fn path_table(times: &[f64], rows: usize, value: impl Fn(usize, usize) -> f64) -> Table {
    let mut header = vec!["path_index".to_string()];
    header.extend(times.iter().map(|t| format!("t={}", num(*t))));
    let mut table = Table::with_header(header);
    for i in 0..rows {
        let mut row = vec![i.to_string()];
        row.extend((0..times.len()).map(|k| num(value(i, k))));
        table.push(row);
    }
    table
}

pub fn simulate_cmd(s: &mut Session) -> CliResult<Status> {
    let sim = s.cfg.sim()?;
    let w = Arc::new(generate(&sim, Label::W)?);
    let n = w.n_paths();
    path_table(w.times(), n, |i, k| w.value(i, k)).write(&s.path("ensemble_W.csv"))?;
    s.say(format!(
        "wrote {n} paths on {} grid times to ensemble_W.csv",
        w.n_times()
    ));
    let funcs = s.cfg.funcs()?;
    if funcs.is_empty() {
        return Ok(Status::Pass);
    }
    let kind = s.cfg.transform()?.unwrap_or(TransformKind::FofW);
    let mut status = Status::Pass;
    for (k, subject) in subjects(kind, &funcs)?.iter().enumerate() {
        let p = build(kind, subject, w.clone())?;
        let name = format!("transformed_{k}.csv");
        path_table(w.times(), n, |i, j| p.value(i, j)).write(&s.path(&name))?;
        match p.witness() {
            Some(wit) => {
                status = Status::Inconclusive;
                s.say(format!("{} degenerate: {} -> {name}", p.label(), wit.reason));
            }
            None => s.say(format!("{} -> {name}", p.label())),
        }
    }
    Ok(status)
}

fn ensemble(s: &Session) -> CliResult<Arc<PathEnsemble>> {
    Ok(Arc::new(generate(&s.cfg.sim()?, Label::W)?))
}

pub fn martingale_cmd(s: &mut Session) -> CliResult<Status> {
    let kind = s.cfg.transform()?.unwrap_or(TransformKind::FofW);
    let subjects = subjects(kind, &s.funcs()?)?;
    let w = ensemble(s)?;
    let alpha = s.cfg.run.alpha;
    let entries = subjects
        .iter()
        .map(|subj| {
            let r = build(kind, subj, w.clone())
                .and_then(|p| test_martingale(&p, &InstrumentSet::default(), alpha));
            Entry::new(format!("{kind} {subj}"), r, |v| v.pass)
        })
        .collect::<CliResult<Vec<_>>>()?;
    s.write_entries("martingale", &entries, martingale_table, |e| {
        let v = e.result.as_ref().expect("result");
        let worst = v
            .pairs
            .iter()
            .max_by(|a, b| a.z.abs().total_cmp(&b.z.abs()))
            .expect("at least one cell");
        format!(
            "max |z| = {:.3} (critical {:.3}) at s={}, t={}, {}: drift {}",
            worst.z.abs(),
            v.critical_value,
            num(worst.s),
            num(worst.t),
            worst.instrument,
            num(worst.mean)
        )
    })
}

fn martingale_table(entries: &[Entry<MartingaleVerdict>]) -> Table {
    let mut t = Table::new(&[
        "candidate",
        "s",
        "t",
        "instrument",
        "mean",
        "sd",
        "z",
        "p",
        "critical_value",
        "pass",
    ]);
    for e in entries {
        if let Some(v) = &e.result {
            for c in &v.pairs {
                t.push(vec![
                    e.candidate.clone(),
                    num(c.s),
                    num(c.t),
                    c.instrument.to_string(),
                    num(c.mean),
                    num(c.sd),
                    num(c.z),
                    num(c.p),
                    num(v.critical_value),
                    e.pass.to_string(),
                ]);
            }
        }
    }
    t
}

#[derive(Debug, Serialize)]
struct Bernstein {
    t: f64,
    report: DistReport,
}

pub fn bernstein_cmd(s: &mut Session) -> CliResult<Status> {
    let funcs = s.funcs()?;
    let sim = s.cfg.sim()?;
    let (w, b) = generate_pair(&sim)?;
    let (w, b) = (Arc::new(w), Arc::new(b));
    let last = sim.time_grid.len() - 1;
    let t = sim.time_grid[last];
    let alpha = s.cfg.run.alpha;
    let entries = funcs
        .iter()
        .map(|f| {
            let subject = Subject::from(f.clone());
            let r = (|| {
                let x = checked_column(&build(TransformKind::FofW, &subject, w.clone())?, last)?;
                let y = checked_column(&build(TransformKind::FofW, &subject, b.clone())?, last)?;
                Ok(Bernstein {
                    t,
                    report: bernstein_check(&x, &y, alpha)?,
                })
            })();
            Entry::new(f.to_string(), r, |v| v.report.pass)
        })
        .collect::<CliResult<Vec<_>>>()?;
    s.write_entries("bernstein", &entries, bernstein_table, |e| {
        let r = &e.result.as_ref().expect("result").report;
        format!(
            "z(Z^2, V^2) = {:.3} (critical {:.3})",
            r.stat("zscore_z2_v2"),
            r.stat("critical_value")
        )
    })
}

fn bernstein_table(entries: &[Entry<Bernstein>]) -> Table {
    let mut t = Table::new(&["candidate", "t", "statistic", "value", "pass"]);
    for e in entries {
        if let Some(b) = &e.result {
            for (k, v) in &b.report.statistics {
                t.push(vec![
                    e.candidate.clone(),
                    num(b.t),
                    k.clone(),
                    num(*v),
                    e.pass.to_string(),
                ]);
            }
        }
    }
    t
}

#[derive(Debug, Serialize)]
struct Kolmogorov {
    horizon: f64,
    t_grid: Vec<f64>,
    residual: f64,
    tolerance: f64,
    t1: f64,
    t2: f64,
    time_invariance_defect: f64,
    /// `(x, E f(x + W_t2) - E f(x + W_t1))`
    profile: Vec<[f64; 2]>,
}

impl Kolmogorov {
    fn pass(&self) -> bool {
        self.residual <= self.tolerance && self.time_invariance_defect <= DETERMINISTIC_TOL
    }
}

/// Kolmogorov residual on `[-2, 2]` up to the last grid time, scaled by the
/// size of the smoothed function, and the time-invariance profile between the
/// first and last grid times on `[-5, 5]`.
fn kolmogorov_one(f: &FunctionSpec, grid: &[f64], rule: &QuadratureRule) -> mglab::Result<Kolmogorov> {
    let horizon = *grid.last().expect("validated grid");
    let mut t_grid: Vec<f64> = grid.iter().copied().filter(|&t| t < horizon).collect();
    if t_grid.is_empty() {
        t_grid.push(horizon / 2.0);
    }
    let x_axis = linspace(-2.0, 2.0, 21);
    let steps = FdSteps::scaled(horizon, &x_axis)?;
    let residual = kolmogorov_residual(f, horizon, &t_grid, &x_axis, steps, rule)?;
    let mut scale = 1.0f64;
    for &t in &t_grid {
        for &x in &x_axis {
            scale = scale.max(heat_smooth(f, horizon - t, x, rule)?.abs());
        }
    }
    let t2 = horizon;
    let t1 = if grid.len() > 1 { grid[0] } else { horizon / 2.0 };
    let axis = linspace(-5.0, 5.0, 41);
    let d = time_invariance_profile(f, t1, t2, &axis, rule)?;
    Ok(Kolmogorov {
        horizon,
        t_grid,
        residual,
        tolerance: KOLMOGOROV_TOL * scale,
        t1,
        t2,
        time_invariance_defect: d.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        profile: axis.iter().zip(&d).map(|(&x, &v)| [x, v]).collect(),
    })
}

pub fn kolmogorov_cmd(s: &mut Session) -> CliResult<Status> {
    let funcs = s.funcs()?;
    let grid = s.cfg.sim()?.time_grid;
    let rule = QuadratureRule::default();
    let entries = funcs
        .iter()
        .map(|f| Entry::new(f.to_string(), kolmogorov_one(f, &grid, &rule), Kolmogorov::pass))
        .collect::<CliResult<Vec<_>>>()?;
    s.write_entries(
        "kolmogorov",
        &entries,
        |es| curve_table(es, "defect", |k: &Kolmogorov| &k.profile),
        |e| {
            let k = e.result.as_ref().expect("result");
            format!(
                "kolmogorov residual {:.3e} (tol {:.1e}), time invariance defect {:.3e}",
                k.residual, k.tolerance, k.time_invariance_defect
            )
        },
    )
}

fn curve_table<T>(entries: &[Entry<T>], value: &str, series: impl Fn(&T) -> &Vec<[f64; 2]>) -> Table {
    let mut t = Table::new(&["candidate", "x", value]);
    for e in entries {
        if let Some(r) = &e.result {
            for [x, v] in series(r) {
                t.push(vec![e.candidate.clone(), num(*x), num(*v)]);
            }
        }
    }
    t
}

#[derive(Debug, Serialize)]
struct Derivative {
    mean: f64,
    spread: f64,
    tolerance: f64,
    /// `(x, E f(x + xi) xi)`
    series: Vec<[f64; 2]>,
}

pub fn derivative_cmd(s: &mut Session) -> CliResult<Status> {
    let funcs = s.funcs()?;
    let rule = QuadratureRule::default();
    let axis = linspace(-5.0, 5.0, 41);
    let entries = funcs
        .iter()
        .map(|f| {
            let r = smoothed_derivative(f, &axis, &rule).map(|d| Derivative {
                mean: d.iter().sum::<f64>() / d.len() as f64,
                spread: spread(&d),
                tolerance: DETERMINISTIC_TOL,
                series: axis.iter().zip(&d).map(|(&x, &v)| [x, v]).collect(),
            });
            Entry::new(f.to_string(), r, |d| d.spread <= d.tolerance)
        })
        .collect::<CliResult<Vec<_>>>()?;
    s.write_entries(
        "derivative",
        &entries,
        |es| curve_table(es, "derivative", |d: &Derivative| &d.series),
        |e| {
            let d = e.result.as_ref().expect("result");
            format!("mean {}  spread {:.3e}", num(d.mean), d.spread)
        },
    )
}

fn theorem_status(r: &TheoremReport) -> Status {
    if r.overall {
        Status::Pass
    } else if r.has_insufficient_samples() || r.has_forward_degeneracy() {
        Status::Inconclusive
    } else {
        Status::Fail
    }
}

fn write_theorem(s: &mut Session, r: &TheoremReport) -> CliResult<Status> {
    let stem = format!("theorem_{}", r.id.name());
    let fmt = s.cfg.run.format;
    if fmt.json() {
        write_json(
            &s.path(&format!("{stem}.json")),
            &TheoremFile {
                kind: "theorem",
                report: r,
            },
        )?;
    }
    if fmt.csv() {
        theorem_table(r).write(&s.path(&format!("{stem}.csv")))?;
    }
    let status = theorem_status(r);
    s.say(format!(
        "{:<12} {:<6} {} forward / {} falsification checks",
        status.tag(),
        r.id.name(),
        r.forward.len(),
        r.falsification.len()
    ));
    for f in &r.failures {
        s.say(format!("{:<12}        {f}", ""));
    }
    Ok(status)
}

fn theorem_table(r: &TheoremReport) -> Table {
    let mut t = Table::new(&[
        "role",
        "candidate",
        "check",
        "pass",
        "error",
        "statistic",
        "value",
    ]);
    let roles = [("forward", &r.forward), ("falsifier", &r.falsification)];
    for (role, outcomes) in roles {
        for o in outcomes {
            let error = o.error.map(|e| format!("{e:?}")).unwrap_or_default();
            let base = [
                role.to_string(),
                o.candidate.clone(),
                o.check.clone(),
                o.pass.to_string(),
                error,
            ];
            if o.statistics.is_empty() {
                let mut row = base.to_vec();
                row.extend([String::new(), String::new()]);
                t.push(row);
            }
            for (k, v) in &o.statistics {
                let mut row = base.to_vec();
                row.extend([k.clone(), num(*v)]);
                t.push(row);
            }
        }
    }
    t
}

pub fn theorem_cmd(s: &mut Session) -> CliResult<Status> {
    let id = s
        .cfg
        .theorem()?
        .ok_or_else(|| config_error("theorem needs --theorem"))?;
    let funcs = s.cfg.funcs()?;
    let forward = if funcs.is_empty() {
        None
    } else {
        Some(match id {
            TheoremId::A2 => {
                return Err(config_error("A2 runs on kernels and takes no --func"));
            }
            TheoremId::T4_1 => triples(&funcs)?
                .into_iter()
                .map(|(f, h, g)| TheoremCandidate::Triple { f, h, g })
                .collect(),
            _ => funcs.into_iter().map(TheoremCandidate::from).collect(),
        })
    };
    let overrides = Overrides {
        forward,
        falsifiers: None,
        alpha: Some(s.cfg.run.alpha),
    };
    let report = run(id, &s.cfg.sim()?, &overrides)?;
    write_theorem(s, &report)
}

pub fn suite_cmd(s: &mut Session) -> CliResult<Status> {
    if !s.cfg.run.funcs.is_empty() {
        return Err(config_error(
            "suite runs the default candidates and takes no --func",
        ));
    }
    let reports = run_all(&s.cfg.sim()?, Some(s.cfg.run.alpha))?;
    let mut status = Status::Pass;
    for r in &reports {
        status = status.max(write_theorem(s, r)?);
    }
    let passed = reports.iter().filter(|r| r.overall).count();
    s.say(format!("{passed}/{} theorems passed", reports.len()));
    Ok(status)
}

pub fn persist_config(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    fs::write(out.join("run_config.toml"), cfg.to_toml())?;
    Ok(())
}

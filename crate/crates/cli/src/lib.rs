//! `csgs`: ground states, non-existence thresholds, parameter sweeps and
//! property checks from the command line.
//!
//! Machine-readable JSON goes to stdout (or `--out`), a short human summary
//! to stderr. Exit status: 0 success, 1 failed property checks, 2 invalid
//! input or I/O failure, 3 solver did not converge (artifacts still written).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use csgs_core::fibration::default_alpha;
use csgs_core::nonexistence::{
    monotonicity_sweep, sharp_threshold, write_threshold_rows, CouplingParams, SweepAxis, SweepRow,
};
use csgs_core::solver::{minimize_on_M, shooting_oracle_with, InitShape, ShootingConfig, SolveConfig};
use csgs_core::verify::{self, CheckReport, SampleSpec};
use csgs_core::{CsgsError, GridSpec, Params};

pub const SCHEMA_VERSION: u32 = 1;
pub const BUILD_ID: &str = env!("CSGS_BUILD_ID");

pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECKS_FAILED: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const NOT_CONVERGED: i32 = 3;
}

#[derive(Debug, Parser)]
#[command(name = "csgs", version, about = "Radial ground states and non-existence thresholds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the energy over the constraint set (needs p > 5).
    Solve(SolveArgs),
    /// Sharp and sufficient non-existence thresholds (needs 1 < p < 5).
    Threshold(ThresholdArgs),
    /// Thresholds or solves along one parameter axis.
    Sweep(SweepArgs),
    /// Randomized checks of the functional inequalities and identities.
    Verify(VerifyArgs),
    /// Shooting solution of the semilinear limit q = μ = 0.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Truncation radius [default: 20/√ω].
    #[arg(long = "R")]
    pub radius: Option<f64>,
    /// Node count.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub stretch: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub omega: f64,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub lambda: f64,
    /// Scaling exponent [default: 2 for p ≥ 7, else the middle of the admissible window].
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Width of the initial Gaussian [default: 1/√ω].
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// JSON destination [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Profile CSV `r,u,h,V1,V2` [default: `--out` with a .csv extension].
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Q,
    Mu,
    Omega,
    P,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::Q => "q",
            Axis::Mu => "mu",
            Axis::Omega => "omega",
            Axis::P => "p",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: Axis,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    /// Number of points, endpoints included.
    #[arg(long)]
    pub steps: usize,
    /// Space the points geometrically.
    #[arg(long)]
    pub log: bool,
    /// Exponent (required unless sweeping p).
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Worker threads for the sweep.
    #[arg(long, env = "CSGS_JOBS")]
    pub jobs: Option<usize>,
    /// CSV destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    /// Exponent used by the identity checks.
    #[arg(long, default_value_t = 6.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "R")]
    pub radius: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, env = "CSGS_JOBS")]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub omega: f64,
    #[arg(long)]
    pub lambda: f64,
    /// RK4 step in units of 1/√ω.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Profile CSV `r,u`.
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<CsgsError> for CliError {
    fn from(e: CsgsError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Serialize)]
struct Envelope<'a, P: Serialize, R: Serialize> {
    schema_version: u32,
    command: &'a str,
    params: P,
    build_id: &'a str,
    result: R,
}

fn emit<P: Serialize, R: Serialize>(
    command: &str,
    params: P,
    result: R,
    dest: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        params,
        build_id: BUILD_ID,
        result,
    };
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    match dest {
        Some(path) => std::fs::write(path, text).map_err(io_err(path)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Invalid("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    builder.build().map_err(|e| CliError::Invalid(e.to_string()))
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return if code == 0 { exit::OK } else { exit::INVALID };
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => solve(a, stdout, stderr),
        Command::Threshold(a) => threshold(a, stdout, stderr),
        Command::Sweep(a) => sweep(a, stdout, stderr),
        Command::Verify(a) => verify_cmd(a, stdout, stderr),
        Command::Oracle(a) => oracle(a, stdout, stderr),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit::INVALID
        }
    }
}

fn grid_spec(args: &GridArgs, omega: f64, default_n: usize) -> GridSpec {
    GridSpec {
        radius: args.radius.unwrap_or(20.0 / omega.sqrt()),
        n: args.n.unwrap_or(default_n),
        stretch: args.stretch,
    }
}

fn solve_config(grid: GridSpec, alpha: Option<f64>, width: Option<f64>, max_iters: Option<usize>) -> SolveConfig {
    let mut cfg = SolveConfig {
        grid: Some(grid),
        alpha,
        init: InitShape {
            width,
            amplitude: None,
        },
        ..SolveConfig::default()
    };
    if let Some(m) = max_iters {
        cfg.max_iters = m;
    }
    cfg
}

fn solve(a: &SolveArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let params = Params::new(a.omega, a.mu, a.q, a.lambda, a.p)?;
    let grid = grid_spec(&a.grid, a.omega, csgs_core::solver::DEFAULT_NODES);
    grid.build()?;
    let cfg = solve_config(grid, a.alpha, a.width, a.max_iters);
    let res = minimize_on_M(&params, &cfg)?;

    let profile = a
        .profile
        .clone()
        .or_else(|| a.out.as_ref().map(|p| p.with_extension("csv")));
    if let Some(path) = &profile {
        write_file(path, |w| res.write_profile_csv(w))?;
    }
    emit("solve", cfg, &res, a.out.as_deref(), stdout)?;
    let _ = writeln!(
        stderr,
        "sigma = {:.10} after {} iterations ({}), nehari {:.2e}, pohozaev {:.2e}, pde {:.2e}",
        res.sigma,
        res.iterations,
        if res.converged { "converged" } else { "not converged" },
        res.residuals.nehari,
        res.residuals.pohozaev,
        res.residuals.pde_l2
    );
    Ok(if res.converged { exit::OK } else { exit::NOT_CONVERGED })
}

fn threshold(a: &ThresholdArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let params = CouplingParams::new(a.p, a.q, a.mu, a.lambda)?;
    let res = sharp_threshold(&params)?;
    emit("threshold", params, res, a.out.as_deref(), stdout)?;
    let _ = writeln!(
        stderr,
        "omega* = {:.12}, sufficient omega = {:.6e}{}",
        res.omega_sharp,
        res.omega_sufficient,
        if res.overflow { " (overflow, see log fields)" } else { "" }
    );
    Ok(exit::OK)
}

/// `steps` points from `from` to `to`, inclusive.
pub fn axis_values(from: f64, to: f64, steps: usize, log: bool) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(CliError::Invalid("--steps must be at least 1".into()));
    }
    if !(from.is_finite() && to.is_finite()) {
        return Err(CliError::Invalid("--from and --to must be finite".into()));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    if !(to > from) {
        return Err(CliError::Invalid("--to must exceed --from".into()));
    }
    if log && !(from > 0.0) {
        return Err(CliError::Invalid("--log needs positive endpoints".into()));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            let s = i as f64 / last;
            if i + 1 == steps {
                to
            } else if log {
                (from.ln() + s * (to.ln() - from.ln())).exp()
            } else {
                from + s * (to - from)
            }
        })
        .collect())
}

#[derive(Serialize)]
struct SweepParams<'a> {
    axis: Axis,
    values: &'a [f64],
    p: Option<f64>,
    omega: f64,
    mu: f64,
    q: f64,
    lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveRow {
    pub value: f64,
    pub sigma: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub nehari: Option<f64>,
    pub pohozaev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SweepResult {
    Threshold {
        rows: Vec<SweepRow>,
        monotone: Option<bool>,
        violations: Vec<usize>,
        mu_free_bound: Option<f64>,
        bounded: Option<bool>,
    },
    Solve {
        rows: Vec<SolveRow>,
        converged: usize,
    },
}

fn sweep(a: &SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let values = axis_values(a.from, a.to, a.steps, a.log)?;
    let pool = thread_pool(a.jobs)?;
    let echo = SweepParams {
        axis: a.axis,
        values: &values,
        p: a.p,
        omega: a.omega,
        mu: a.mu,
        q: a.q,
        lambda: a.lambda,
    };
    let p_values: Vec<f64> = match a.axis {
        Axis::P => values.clone(),
        _ => vec![a
            .p
            .ok_or_else(|| CliError::Invalid("--p is required unless sweeping p".into()))?],
    };
    let solve_sweep = match a.axis {
        Axis::Omega => true,
        Axis::Q | Axis::Mu => false,
        Axis::P => p_values.iter().all(|&p| p > 5.0),
    };
    if solve_sweep && !p_values.iter().all(|&p| p > 5.0) {
        return Err(CliError::Invalid("omega sweeps solve the ground state and need p > 5".into()));
    }
    if !solve_sweep && !p_values.iter().all(|&p| p > 1.0 && p < 5.0) {
        return Err(CliError::Invalid(
            "threshold sweeps need 1 < p < 5 at every point; solve sweeps need p > 5".into(),
        ));
    }

    let result = if solve_sweep {
        let rows: Vec<SolveRow> = pool.install(|| {
            values
                .par_iter()
                .map(|&v| solve_row(a, v))
                .collect()
        });
        if let Some(path) = &a.out {
            write_file(path, |w| {
                writeln!(w, "axis,value,sigma,converged,iterations,nehari,pohozaev")?;
                for r in &rows {
                    let f = |x: Option<f64>| x.map(|x| format!("{x:e}")).unwrap_or_default();
                    writeln!(
                        w,
                        "{},{:e},{},{},{},{},{}",
                        a.axis.name(),
                        r.value,
                        f(r.sigma),
                        r.converged,
                        r.iterations,
                        f(r.nehari),
                        f(r.pohozaev)
                    )?;
                }
                Ok(())
            })?;
        }
        let converged = rows.iter().filter(|r| r.converged).count();
        let _ = writeln!(stderr, "{converged}/{} solves converged", rows.len());
        SweepResult::Solve { rows, converged }
    } else {
        let base = CouplingParams {
            p: p_values[0],
            q: a.q,
            mu: a.mu,
            lambda: a.lambda,
        };
        let (rows, monotone, violations, mu_free_bound, bounded) = match a.axis {
            Axis::Q | Axis::Mu => {
                let axis = if a.axis == Axis::Q { SweepAxis::Q } else { SweepAxis::Mu };
                let table = pool.install(|| monotonicity_sweep(axis, &base, &values))?;
                if !table.monotone() {
                    let _ = writeln!(
                        stderr,
                        "warning: omega* increases along {} at rows {:?}",
                        axis.name(),
                        table.violations
                    );
                }
                (
                    table.rows.clone(),
                    Some(table.monotone()),
                    table.violations.clone(),
                    table.mu_free_bound,
                    table.bounded,
                )
            }
            _ => {
                let rows = values
                    .iter()
                    .map(|&p| {
                        let res = sharp_threshold(&CouplingParams { p, ..base })?;
                        Ok(SweepRow {
                            value: p,
                            omega_sharp: res.omega_sharp,
                            omega_sufficient: res.omega_sufficient,
                            t_star: res.t_star,
                        })
                    })
                    .collect::<Result<Vec<_>, CsgsError>>()?;
                (rows, None, Vec::new(), None, None)
            }
        };
        if let Some(path) = &a.out {
            write_file(path, |w| write_threshold_rows(a.axis.name(), &rows, w))?;
        }
        let _ = writeln!(stderr, "{} threshold rows along {}", rows.len(), a.axis.name());
        SweepResult::Threshold {
            rows,
            monotone,
            violations,
            mu_free_bound,
            bounded,
        }
    };
    emit("sweep", echo, result, None, stdout)?;
    Ok(exit::OK)
}

fn solve_row(a: &SweepArgs, value: f64) -> SolveRow {
    let (mut omega, mut p) = (a.omega, a.p.unwrap_or(f64::NAN));
    match a.axis {
        Axis::Omega => omega = value,
        Axis::P => p = value,
        _ => {}
    }
    let failed = |e: CsgsError| SolveRow {
        value,
        sigma: None,
        converged: false,
        iterations: 0,
        nehari: None,
        pohozaev: None,
        error: Some(e.to_string()),
    };
    let params = match Params::new(omega, a.mu, a.q, a.lambda, p) {
        Ok(p) => p,
        Err(e) => return failed(e),
    };
    // an explicit α may be inadmissible at some p; fall back to the default rule there
    let alpha = a.alpha.filter(|&al| csgs_core::ScalingConfig::new(al, p).is_ok());
    let alpha = alpha.or_else(|| default_alpha(p).ok());
    let cfg = solve_config(
        grid_spec(&a.grid, omega, csgs_core::solver::DEFAULT_NODES),
        alpha,
        None,
        None,
    );
    match minimize_on_M(&params, &cfg) {
        Ok(res) => SolveRow {
            value,
            sigma: Some(res.sigma),
            converged: res.converged,
            iterations: res.iterations,
            nehari: Some(res.residuals.nehari),
            pohozaev: Some(res.residuals.pohozaev),
            error: None,
        },
        Err(e) => failed(e),
    }
}

#[derive(Serialize)]
struct VerifyParams {
    seed: u64,
    count: usize,
    grid: GridSpec,
    params: Params,
    alpha: f64,
}

#[derive(Serialize)]
struct VerifyResult {
    inequality_51: CheckReport,
    inequality_52: CheckReport,
    young_combined: Vec<CheckReport>,
    identities: Vec<CheckReport>,
    passed: bool,
}

fn verify_cmd(a: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let params = Params::new(a.omega, a.mu, a.q, a.lambda, a.p)?;
    let alpha = match a.alpha {
        Some(al) => csgs_core::ScalingConfig::new(al, a.p)?.alpha,
        None => default_alpha(a.p)?,
    };
    let default = verify::default_grid();
    let grid = GridSpec {
        radius: a.radius.unwrap_or(default.radius),
        n: a.n.unwrap_or(default.n),
        stretch: 1.0,
    };
    grid.build()?;
    let spec = SampleSpec::new(a.seed, a.count);
    let pool = thread_pool(a.jobs)?;
    let (inequalities, identities) = pool.install(|| -> Result<_, CsgsError> {
        Ok((
            verify::check_inequalities(&spec, &grid)?,
            verify::check_identities(&spec, &grid, &params, alpha)?,
        ))
    })?;
    let mut inequalities = inequalities.into_iter();
    let (q51, q52) = (inequalities.next(), inequalities.next());
    let young: Vec<CheckReport> = inequalities.collect();
    let (Some(inequality_51), Some(inequality_52)) = (q51, q52) else {
        return Err(CliError::Invalid("inequality suite returned no reports".into()));
    };
    let passed = [&inequality_51, &inequality_52]
        .into_iter()
        .chain(&young)
        .chain(&identities)
        .all(CheckReport::passed);
    for r in [&inequality_51, &inequality_52].into_iter().chain(&young).chain(&identities) {
        let _ = writeln!(
            stderr,
            "{:<22} violations {:>4}/{:<5} worst margin {:+.3e}",
            r.check,
            r.violations,
            r.count - r.skipped,
            r.worst_margin.unwrap_or(f64::NAN)
        );
    }
    let result = VerifyResult {
        inequality_51,
        inequality_52,
        young_combined: young,
        identities,
        passed,
    };
    let echo = VerifyParams {
        seed: a.seed,
        count: a.count,
        grid,
        params,
        alpha,
    };
    emit("verify", echo, result, a.out.as_deref(), stdout)?;
    Ok(if passed { exit::OK } else { exit::CHECKS_FAILED })
}

#[derive(Serialize)]
struct OracleParams {
    p: f64,
    omega: f64,
    lambda: f64,
    step: f64,
}

fn oracle(a: &OracleArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let mut cfg = ShootingConfig::default();
    if let Some(h) = a.step {
        if !(h.is_finite() && h > 0.0) {
            return Err(CliError::Invalid("--step must be positive".into()));
        }
        cfg.step = h;
    }
    let res = shooting_oracle_with(a.omega, a.lambda, a.p, &cfg)?;
    if let Some(path) = &a.profile {
        write_file(path, |w| {
            writeln!(w, "r,u")?;
            for (r, u) in res.r.iter().zip(&res.u) {
                writeln!(w, "{r:e},{u:e}")?;
            }
            Ok(())
        })?;
    }
    let echo = OracleParams {
        p: a.p,
        omega: a.omega,
        lambda: a.lambda,
        step: cfg.step,
    };
    emit("oracle", echo, &res, a.out.as_deref(), stdout)?;
    let _ = writeln!(stderr, "u(0) = {:.12}, energy = {:.12}", res.u0, res.energy);
    Ok(exit::OK)
}

//! Command-line front end. `main` only parses arguments and maps the
//! result of [`execute`] to an exit code.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gelsolve::config::OracleConfig;
use gelsolve::oracle::{compare, integrate, oracle_samples, ErrorReport, Quantity, Sample};
use gelsolve::output::{fmt_num, json_num, Table};
use gelsolve::series::{arms_concentrations, concentrations, limiting_concentrations};
use gelsolve::{Error, Flavor, InitialData, InitialSpec, Model, OracleState, Output, RunConfig, Solver, Spacing};
use serde_json::{Map, Value};

#[derive(Debug, Parser)]
#[command(name = "gelsolve", version, about = "Global solutions of coagulation equations with multiplicative kernel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mass, arm count and second moment on the time grid.
    Moments(CommonArgs),
    /// Full solution state (t, M, A, ell, alpha, beta, second_moment).
    Trajectory(CommonArgs),
    /// Concentrations at one time, from series reversion or closed form.
    Concentrations {
        #[command(flatten)]
        common: CommonArgs,
        /// Evaluation time; defaults to the end of the grid.
        #[arg(long)]
        at: Option<f64>,
        /// Write the JSON summary here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Long-time limits of an arms model, as JSON; `--out` also writes c_inf(m).
    Limits(CommonArgs),
    /// Compare against the truncated kinetic system; exit 1 on tolerance violation.
    Validate(CommonArgs),
    /// Emit every output listed in the config file into a directory.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

/// Config file plus flag overrides; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// smoluchowski, flory, smoluchowski-arms or flory-arms.
    #[arg(long)]
    pub model: Option<String>,
    /// monodisperse, exponential, power-law:P, discrete:M=W,M=W,... or arms:MU0,MU1,...
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long)]
    pub root_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub ode_dt: Option<f64>,
    #[arg(long)]
    pub ode_adaptive: bool,
    #[arg(long)]
    pub t_start: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    pub grid: Option<usize>,
    /// linear or geometric.
    #[arg(long)]
    pub spacing: Option<String>,
    /// no-big-coagulation or gel-interacting.
    #[arg(long)]
    pub flavor: Option<String>,
    #[arg(long)]
    pub mmax: Option<usize>,
    #[arg(long)]
    pub amax: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Series truncation order for classic concentrations.
    #[arg(long)]
    pub order: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    ValidationFailed,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::ValidationFailed => 1,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or input; exit code 2.
    Config(String),
    /// A computation or I/O failed; exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Config(m),
            Error::Usage(_) | Error::Domain(_) | Error::Model(_) | Error::InvalidMeasure(_) => {
                CliError::Config(e.to_string())
            }
            Error::Solver(_) | Error::Instability { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Caps the global thread pool at `GELSOLVE_THREADS` when set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("GELSOLVE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("GELSOLVE_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Runtime(e.to_string()))
}

/// Parses the compact `--initial` syntax.
pub fn parse_initial(s: &str) -> Result<InitialSpec, CliError> {
    let bad = |why: &str| CliError::Config(format!("invalid --initial '{s}': {why}"));
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad(&format!("'{v}' is not a number")));
    let (kind, rest) = match s.split_once(':') {
        Some((k, r)) => (k.trim(), Some(r)),
        None => (s.trim(), None),
    };
    match (kind, rest) {
        ("monodisperse", None) => Ok(InitialSpec::Monodisperse),
        ("exponential", None) => Ok(InitialSpec::Exponential),
        ("power-law", Some(p)) => Ok(InitialSpec::PowerLaw { p: num(p)? }),
        ("discrete", Some(atoms)) => {
            let atoms = atoms
                .split(',')
                .map(|a| {
                    let (m, w) = a.split_once('=').ok_or_else(|| bad("atoms are written mass=weight"))?;
                    Ok((num(m)?, num(w)?))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(InitialSpec::Discrete { atoms })
        }
        ("arms", Some(mu)) => {
            let mu = mu.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            Ok(InitialSpec::ArmsMonodisperse { mu })
        }
        _ => Err(bad("expected monodisperse, exponential, power-law:P, discrete:M=W,... or arms:MU0,MU1,...")),
    }
}

/// Loads the config file (if any) and applies flag overrides.
pub fn build_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let mut cfg = RunConfig::from_toml(&text)?;
            if let Some(m) = &args.model {
                cfg.model = m.parse()?;
            }
            if let Some(i) = &args.initial {
                cfg.initial = parse_initial(i)?;
            }
            cfg
        }
        None => {
            let model: Model = args
                .model
                .as_deref()
                .ok_or_else(|| CliError::Config("--model is required without --config".into()))?
                .parse()?;
            let initial = parse_initial(
                args.initial
                    .as_deref()
                    .ok_or_else(|| CliError::Config("--initial is required without --config".into()))?,
            )?;
            RunConfig::new(model, initial)
        }
    };
    if let Some(v) = args.root_tol {
        cfg.solver.root_tol = v;
    }
    if let Some(v) = args.max_iter {
        cfg.solver.max_iter = v;
    }
    if let Some(v) = args.ode_dt {
        cfg.solver.ode_dt = v;
    }
    if args.ode_adaptive {
        cfg.solver.ode_adaptive = true;
    }
    if let Some(v) = args.t_start {
        cfg.time_grid.start = v;
    }
    if let Some(v) = args.t_end {
        cfg.time_grid.end = v;
    }
    if let Some(v) = args.grid {
        cfg.time_grid.count = v;
    }
    if let Some(s) = &args.spacing {
        cfg.time_grid.spacing = match s.as_str() {
            "linear" => Spacing::Linear,
            "geometric" => Spacing::Geometric,
            _ => return Err(CliError::Config(format!("unknown spacing '{s}'"))),
        };
    }
    if let Some(f) = &args.flavor {
        cfg.oracle.flavor = Some(f.parse::<Flavor>()?);
    }
    if let Some(v) = args.mmax {
        cfg.oracle.m_max = v;
        cfg.series.m_max = v;
    }
    if let Some(v) = args.amax {
        cfg.oracle.a_max = v;
        cfg.series.a_max = v;
    }
    if let Some(v) = args.dt {
        cfg.oracle.dt = v;
    }
    if let Some(v) = args.tol {
        cfg.oracle.tol = v;
    }
    if let Some(v) = args.order {
        cfg.series.order = v;
    }
    Ok(cfg)
}

/// Runs one subcommand. Primary output goes to `--out` or `stdout`,
/// diagnostics to `stderr`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Status, CliError> {
    match &cli.command {
        Command::Moments(a) => {
            let (cfg, solver) = prepare(a)?;
            emit(a.out.as_deref(), stdout, &moments(&cfg, &solver)?.to_csv())?;
        }
        Command::Trajectory(a) => {
            let (cfg, solver) = prepare(a)?;
            emit(a.out.as_deref(), stdout, &trajectory(&cfg, &solver)?.to_csv())?;
        }
        Command::Concentrations { common, at, summary } => {
            let (cfg, solver) = prepare(common)?;
            let t = at.unwrap_or(cfg.time_grid.end);
            let (table, json) = concentration_table(&cfg, &solver, t)?;
            emit(common.out.as_deref(), stdout, &table.to_csv())?;
            if let Some(path) = summary {
                write_file(path, &pretty(&json))?;
            }
        }
        Command::Limits(a) => {
            let (cfg, solver) = prepare(a)?;
            let (table, json) = limits(&cfg, &solver)?;
            if let Some(path) = &a.out {
                write_file(path, &table.to_csv())?;
            }
            write_out(stdout, &pretty(&json))?;
        }
        Command::Validate(a) => {
            let (cfg, solver) = prepare(a)?;
            let (table, report) = validate(&cfg, &solver)?;
            emit(a.out.as_deref(), stdout, &table.to_csv())?;
            let verdict = if report.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(
                stderr,
                "{verdict}: max abs error {} (tol {}), max rel error {}",
                fmt_num(report.max_abs),
                fmt_num(report.tol),
                fmt_num(report.max_rel)
            );
            if !report.pass {
                return Ok(Status::ValidationFailed);
            }
        }
        Command::Run { common, out_dir } => {
            let (cfg, solver) = prepare(common)?;
            return run_outputs(&cfg, &solver, out_dir, stderr);
        }
    }
    Ok(Status::Success)
}

fn prepare(args: &CommonArgs) -> Result<(RunConfig, Solver), CliError> {
    let cfg = build_config(args)?;
    let solver = cfg.validate()?;
    Ok((cfg, solver))
}

/// Writes each output listed in the config to `dir`.
pub fn run_outputs(cfg: &RunConfig, solver: &Solver, dir: &Path, stderr: &mut dyn Write) -> Result<Status, CliError> {
    if cfg.outputs.is_empty() {
        return Err(CliError::Config("the config lists no outputs".into()));
    }
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut status = Status::Success;
    let mut outputs = cfg.outputs.clone();
    outputs.sort();
    outputs.dedup();
    for o in outputs {
        match o {
            Output::Moments => write_file(&dir.join("moments.csv"), &moments(cfg, solver)?.to_csv())?,
            Output::Trajectory => write_file(&dir.join("trajectory.csv"), &trajectory(cfg, solver)?.to_csv())?,
            Output::Concentrations => {
                let (table, json) = concentration_table(cfg, solver, cfg.time_grid.end)?;
                write_file(&dir.join("concentrations.csv"), &table.to_csv())?;
                write_file(&dir.join("concentrations.json"), &pretty(&json))?;
            }
            Output::Limits => {
                let (table, json) = limits(cfg, solver)?;
                write_file(&dir.join("limits.csv"), &table.to_csv())?;
                write_file(&dir.join("limits.json"), &pretty(&json))?;
            }
            Output::Validate => {
                let (table, report) = validate(cfg, solver)?;
                write_file(&dir.join("validate.csv"), &table.to_csv())?;
                if !report.pass {
                    let _ = writeln!(
                        stderr,
                        "FAIL: max abs error {} (tol {})",
                        fmt_num(report.max_abs),
                        fmt_num(report.tol)
                    );
                    status = Status::ValidationFailed;
                }
            }
        }
    }
    Ok(status)
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => write_out(stdout, text),
    }
}

fn write_out(stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    stdout.write_all(text.as_bytes()).map_err(|e| CliError::Runtime(e.to_string()))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

pub fn moments(cfg: &RunConfig, solver: &Solver) -> Result<Table, CliError> {
    let times = cfg.time_grid.points();
    let mut t = Table::new(&["t", "M", "A", "second_moment"]);
    for st in solver.states(&times)? {
        t.push_numbers(&[st.t, st.mass, st.arms, solver.second_moment_at(&st)?]);
    }
    Ok(t)
}

pub fn trajectory(cfg: &RunConfig, solver: &Solver) -> Result<Table, CliError> {
    let times = cfg.time_grid.points();
    let mut t = Table::new(&["t", "M", "A", "ell", "alpha", "beta", "second_moment"]);
    for st in solver.states(&times)? {
        t.push_numbers(&[st.t, st.mass, st.arms, st.ell, st.alpha, st.beta, solver.second_moment_at(&st)?]);
    }
    Ok(t)
}

pub fn concentration_table(cfg: &RunConfig, solver: &Solver, t: f64) -> Result<(Table, Value), CliError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(CliError::Config(format!("evaluation time must be finite and >= 0, got {t}")));
    }
    let state = solver.state(t)?;
    let mut json = Map::new();
    json.insert("model".into(), Value::String(solver.model().to_string()));
    json.insert("t".into(), json_num(t));
    json.insert("T_gel".into(), json_num(solver.gel_time()));
    json.insert("M".into(), json_num(state.mass));
    json.insert("A".into(), json_num(state.arms));
    let table = match solver.initial() {
        InitialData::Mass(m) => {
            let c = concentrations(solver.model(), t, m, cfg.series.order, solver.config())?;
            let mut table = Table::new(&["m", "c"]);
            for (i, v) in c.iter().enumerate() {
                table.push(vec![(i + 1).to_string(), fmt_num(*v)]);
            }
            table
        }
        InitialData::Arms(a) => {
            let c = arms_concentrations(solver.model(), t, a, cfg.series.a_max, cfg.series.m_max, solver.config())?;
            json.insert("degenerate".into(), Value::Bool(c.degenerate));
            let mut table = Table::new(&["a", "m", "c"]);
            for (ai, row) in c.values.iter().enumerate() {
                for (mi, v) in row.iter().enumerate() {
                    table.push(vec![ai.to_string(), (mi + 1).to_string(), fmt_num(*v)]);
                }
            }
            table
        }
    };
    Ok((table, Value::Object(json)))
}

pub fn limits(cfg: &RunConfig, solver: &Solver) -> Result<(Table, Value), CliError> {
    let InitialData::Arms(a) = solver.initial() else {
        return Err(CliError::Config(format!("limits are defined for arms models, not {}", solver.model())));
    };
    let lim = limiting_concentrations(solver.model(), a, cfg.series.m_max, solver.config())?;
    let mut json = Map::new();
    json.insert("model".into(), Value::String(solver.model().to_string()));
    json.insert("beta_inf".into(), json_num(lim.beta_inf));
    json.insert("p_nu_or_c".into(), json_num(lim.p_or_c));
    json.insert("M_inf".into(), json_num(lim.m_inf));
    json.insert("T_gel".into(), json_num(lim.t_gel));
    json.insert("c_inf_0_1".into(), json_num(lim.c_inf_0_1));
    json.insert("degenerate".into(), Value::Bool(lim.degenerate));
    let mut table = Table::new(&["m", "c"]);
    for (i, v) in lim.c_inf.iter().enumerate() {
        table.push(vec![(i + 2).to_string(), fmt_num(*v)]);
    }
    Ok((table, Value::Object(json)))
}

/// Mass (classic) or arm count (arms) against the oracle on the time grid.
pub fn validate(cfg: &RunConfig, solver: &Solver) -> Result<(Table, ErrorReport), CliError> {
    let times = cfg.time_grid.points();
    let OracleConfig { flavor, m_max, a_max, dt, tol } = cfg.oracle.clone();
    let model = solver.model();
    let flavor = flavor.unwrap_or(Flavor::default_for(model));
    let (init, quantity) = match solver.initial() {
        InitialData::Mass(m) => (OracleState::classic(m, m_max)?, Quantity::Mass),
        InitialData::Arms(a) => (OracleState::arms(a, a_max, m_max)?, Quantity::Arms),
    };
    let traj = integrate(model, flavor, &init, &times, dt)?;
    let analytic: Vec<Sample> = solver
        .states(&times)?
        .iter()
        .map(|st| Sample { t: st.t, values: vec![if quantity == Quantity::Mass { st.mass } else { st.arms }] })
        .collect();
    let oracle = oracle_samples(&traj, quantity, 0);
    let report = compare(&analytic, &oracle, tol)?;
    let mut table = Table::new(&["t", "analytic", "oracle", "abs_error", "rel_error"]);
    for ((a, o), row) in analytic.iter().zip(&oracle).zip(&report.rows) {
        table.push_numbers(&[a.t, a.values[0], o.values[0], row.max_abs, row.max_rel]);
    }
    Ok((table, report))
}

pub mod config;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use elastowave::dynamics::{Dynamics, SemidiscreteState};
use elastowave::mesh::{BoundaryTag, Diagonal, Mesh};
use elastowave::spaces::DiscreteSpaces;
use elastowave::statics::{inf_sup_constant, initial_data_at};
use elastowave::verification::{
    convergence_study, format_error, locking_study, run_case, spread, unit_square_system, ConvergenceTable, DtRule,
    RunSettings,
};

pub use config::{CaseName, Command, ConfigError, ConfigLayer, RunConfig, SchemeName};

#[derive(Debug, Parser)]
#[command(name = "elastowave", version, about = "Mixed finite element elastodynamics with weakly symmetric stress")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON file with any of the flag keys (`n_list` for --n-list).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub case: Option<CaseName>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeName>,
    #[arg(long, conflicts_with = "n_list")]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long)]
    pub t0: Option<f64>,
    /// Time step; defaults to 1/n.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// CSV output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of steps for energy-audit.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    pub print_config: bool,
}

impl Cli {
    pub fn flags(&self) -> ConfigLayer {
        ConfigLayer {
            command: Some(self.command),
            case: self.case,
            alpha: self.alpha,
            k: self.k,
            scheme: self.scheme,
            n_list: self.n.map(|n| vec![n]).or_else(|| self.n_list.clone()),
            t0: self.t0,
            dt: self.dt,
            mu: self.mu,
            lambda: self.lambda,
            rho: self.rho,
            out: self.out.clone(),
            steps: self.steps,
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let file = match &self.config {
            Some(path) => ConfigLayer::from_file(path)?,
            None => ConfigLayer::default(),
        };
        RunConfig::resolve(file.merge(self.flags()))
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Solver(elastowave::Error),
    Output(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(_) | RunError::Output(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Solver(e) => write!(f, "solver: {e}"),
            RunError::Output(e) => write!(f, "output: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<elastowave::Error> for RunError {
    fn from(e: elastowave::Error) -> Self {
        RunError::Solver(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Output(e)
    }
}

type Res = Result<(), RunError>;

fn settings(cfg: &RunConfig) -> RunSettings {
    let mut s = RunSettings::new(cfg.k, cfg.scheme());
    if let Some(dt) = cfg.dt {
        s.dt_rule = DtRule::Fixed(dt);
    }
    s
}

fn dt_label(cfg: &RunConfig) -> String {
    cfg.dt.map_or_else(|| "1/n".to_string(), |dt| dt.to_string())
}

fn write_csv(cfg: &RunConfig, csv: &str) -> Res {
    if let Some(path) = &cfg.out {
        std::fs::write(path, csv)?;
    }
    Ok(())
}

/// Executes `cfg`, writing the human-readable report to `out`.
pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Res {
    match cfg.command {
        Command::MeshInfo => mesh_info(cfg, out),
        Command::Converge => converge(cfg, out),
        Command::Run => single_run(cfg, out),
        Command::EnergyAudit => energy_audit(cfg, out),
        Command::Locking => locking(cfg, out),
        Command::Infsup => infsup(cfg, out),
    }
}

fn mesh_info(cfg: &RunConfig, out: &mut dyn Write) -> Res {
    let n = cfg.n_list[0];
    let mesh = Mesh::unit_square(n, Diagonal::default())?;
    let boundary = mesh.edge_triangles().iter().filter(|t| t[1].is_none()).count();
    writeln!(out, "V={} T={} E={}", mesh.num_vertices(), mesh.num_triangles(), mesh.num_edges())?;
    writeln!(out, "boundary edges={boundary} h={:.6} area={:.6}", mesh.diameter(), mesh.total_area())?;
    if let Some(path) = &cfg.out {
        mesh.write_text(std::fs::File::create(path)?)?;
    }
    let spaces = DiscreteSpaces::new(Arc::new(mesh), cfg.k)?;
    writeln!(
        out,
        "k={} dofs: stress={} velocity={} rotation={}",
        cfg.k,
        spaces.dim_stress(),
        spaces.dim_velocity(),
        spaces.dim_rotation()
    )?;
    Ok(())
}

fn header(cfg: &RunConfig, out: &mut dyn Write) -> Res {
    let alpha = cfg.alpha.map(|a| format!(" alpha={a}")).unwrap_or_default();
    writeln!(
        out,
        "case={:?}{alpha} k={} scheme={} t0={} dt={} mu={} lambda={} rho={}",
        cfg.case,
        cfg.k,
        cfg.scheme(),
        cfg.t0,
        dt_label(cfg),
        cfg.mu,
        cfg.lambda,
        cfg.rho
    )?;
    Ok(())
}

fn converge(cfg: &RunConfig, out: &mut dyn Write) -> Res {
    let case = cfg.mms_case()?;
    let table = convergence_study(&case, settings(cfg), &cfg.n_list)?;
    header(cfg, out)?;
    write!(out, "{}", table.to_pretty())?;
    write_csv(cfg, &table.to_csv())
}

fn single_run(cfg: &RunConfig, out: &mut dyn Write) -> Res {
    let case = cfg.mms_case()?;
    let n = cfg.n_list[0];
    let outcome = run_case(&case, n, settings(cfg))?;
    header(cfg, out)?;
    write!(out, "{}", ConvergenceTable::from_errors(&[(n, outcome.errors)]).to_pretty())?;
    let drift = outcome.log.iter().map(|r| r.constraint_drift / r.alpha_norm.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    writeln!(out, "steps={} max relative constraint drift={}", outcome.log.len() - 1, format_error(drift))?;
    let mut csv = String::from("step,t,energy,constraint_drift,trace_moment\n");
    for r in &outcome.log {
        csv += &format!("{},{},{:e},{:e},{:e}\n", r.step, r.t, r.energy, r.constraint_drift, r.trace_moment);
    }
    write_csv(cfg, &csv)
}

fn energy_audit(cfg: &RunConfig, out: &mut dyn Write) -> Res {
    let case = cfg.mms_case()?;
    let n = cfg.n_list[0];
    let dt = cfg.dt(n);
    let system = unit_square_system(&case, n, &settings(cfg))?;
    let data = initial_data_at(&case, &system, cfg.t0)?;
    let mut dynamics = Dynamics::new(&system)?;
    let traj = dynamics.integrate(
        SemidiscreteState::from_initial(&data, 0.0),
        cfg.scheme(),
        dt,
        cfg.steps as f64 * dt,
        None,
        &mut |_| {},
    )?;
    let e0 = traj.log[0].energy;
    let drift = traj.log.iter().map(|r| (r.energy - e0).abs() / e0).fold(0.0, f64::max);
    let rise = traj.log.windows(2).map(|w| (w[1].energy - w[0].energy) / e0).fold(f64::NEG_INFINITY, f64::max);
    writeln!(
        out,
        "energy audit: case={:?} n={n} k={} scheme={} dt={dt} steps={} (initial data from t={}, no load)",
        cfg.case,
        cfg.k,
        cfg.scheme(),
        cfg.steps,
        cfg.t0
    )?;
    writeln!(out, "E0={e0:.6e}")?;
    writeln!(out, "max relative drift={drift:.3e}")?;
    writeln!(out, "max step increase={rise:.3e} E0")?;
    let verdict = match cfg.scheme {
        SchemeName::Cn => drift <= 1e-10,
        SchemeName::Radau2 => rise <= 1e-12,
    };
    writeln!(out, "{}", if verdict { "PASS" } else { "FAIL" })?;
    let mut csv = String::from("step,t,energy,relative_drift\n");
    for r in &traj.log {
        csv += &format!("{},{},{:e},{:e}\n", r.step, r.t, r.energy, (r.energy - e0) / e0);
    }
    write_csv(cfg, &csv)
}

fn locking(cfg: &RunConfig, out: &mut dyn Write) -> Res {
    let case = cfg.mms_case()?;
    let n = cfg.n_list[0];
    let rows = locking_study(&case, settings(cfg), n, &config::LOCKING_LAMBDAS)?;
    header(cfg, out)?;
    let mut csv = String::from("lambda,err_sigma,err_v\n");
    writeln!(out, "{:>10}  {:>10}  {:>10}", "lambda", "err_sigma", "err_v")?;
    for r in &rows {
        writeln!(out, "{:>10.0e}  {:>10}  {:>10}", r.lambda, format_error(r.err_sigma), format_error(r.err_v))?;
        csv += &format!("{:e},{},{}\n", r.lambda, format_error(r.err_sigma), format_error(r.err_v));
    }
    writeln!(
        out,
        "max/min: sigma {:.3}, v {:.3}",
        spread(rows.iter().map(|r| r.err_sigma)),
        spread(rows.iter().map(|r| r.err_v))
    )?;
    write_csv(cfg, &csv)
}

fn infsup(cfg: &RunConfig, out: &mut dyn Write) -> Res {
    let mut csv = String::from("inv_h,beta\n");
    writeln!(out, "k={} (dense eigenproblem)", cfg.k)?;
    writeln!(out, "{:>6}  {:>8}  {:>8}", "1/h", "beta", "change")?;
    let mut prev: Option<f64> = None;
    for &n in &cfg.n_list {
        let mut mesh = Mesh::unit_square(n, Diagonal::default())?;
        mesh.tag_boundary(|_| BoundaryTag::Dirichlet);
        let beta = inf_sup_constant(Arc::new(DiscreteSpaces::new(Arc::new(mesh), cfg.k)?))?;
        let change = prev.map(|p| format!("{:+.1}%", 100.0 * (beta - p) / p)).unwrap_or_default();
        writeln!(out, "{n:>6}  {beta:>8.4}  {change:>8}")?;
        csv += &format!("{n},{beta:.6}\n");
        prev = Some(beta);
    }
    write_csv(cfg, &csv)
}

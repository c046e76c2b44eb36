use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flowshape::app::{case_by_name, execute, exit_code, Settings, CASE_NAMES};

/// Phase-field shape optimization in Stokes flow.
#[derive(Debug, Parser)]
#[command(name = "flowshape", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run an optimization and write history.csv and VTK fields.
    Run(RunArgs),
    /// List the built-in cases.
    Cases,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Built-in case name.
    #[arg(value_name = "CASE")]
    case_name: Option<String>,
    /// Built-in case name (same as the positional argument).
    #[arg(long)]
    case: Option<String>,
    /// key = value settings file; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    /// Outer iterations (state solves).
    #[arg(long)]
    outer: Option<usize>,
    /// Inner Allen–Cahn iterations per state solve.
    #[arg(long)]
    inner: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Stabilizer; defaults to eta / (4 eps).
    #[arg(long)]
    stab: Option<f64>,
    #[arg(long)]
    alpha0: Option<f64>,
    /// Target fluid volume fraction.
    #[arg(long)]
    beta: Option<f64>,
    /// Multiplier step.
    #[arg(long)]
    beta0: Option<f64>,
    /// Seed of a random initial field.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write fields every N outer iterations (0: only the final state).
    #[arg(long)]
    vtk_every: Option<usize>,
    /// Accept a stabilizer below eta / (4 eps).
    #[arg(long)]
    allow_unstable: bool,
    /// nodal or quadrature.
    #[arg(long)]
    coupling: Option<String>,
    /// Use the multiplier from the start of each outer iteration in every inner step.
    #[arg(long)]
    lambda_frozen: bool,
    /// abort or record.
    #[arg(long)]
    policy: Option<String>,
    /// Relative energy plateau for early stopping, or "none".
    #[arg(long)]
    stop_tol: Option<String>,
}

impl RunArgs {
    fn settings(&self) -> flowshape::Result<Settings> {
        let mut s = Settings::default();
        if let Some(path) = &self.config {
            s.apply_file(path)?;
        }
        let mut set = |key: &str, value: Option<String>| match value {
            Some(v) => s.apply(key, &v),
            None => Ok(()),
        };
        set("case", self.case_name.clone().or_else(|| self.case.clone()))?;
        set("nx", self.nx.map(|v| v.to_string()))?;
        set("ny", self.ny.map(|v| v.to_string()))?;
        set("outer", self.outer.map(|v| v.to_string()))?;
        set("inner", self.inner.map(|v| v.to_string()))?;
        set("eps", self.eps.map(|v| v.to_string()))?;
        set("eta", self.eta.map(|v| v.to_string()))?;
        set("dt", self.dt.map(|v| v.to_string()))?;
        set("stab", self.stab.map(|v| v.to_string()))?;
        set("alpha0", self.alpha0.map(|v| v.to_string()))?;
        set("beta", self.beta.map(|v| v.to_string()))?;
        set("beta0", self.beta0.map(|v| v.to_string()))?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set(
            "out_dir",
            self.out_dir.as_ref().map(|p| p.display().to_string()),
        )?;
        set("vtk_every", self.vtk_every.map(|v| v.to_string()))?;
        set("coupling", self.coupling.clone())?;
        set("policy", self.policy.clone())?;
        set("stop_tol", self.stop_tol.clone())?;
        if self.allow_unstable {
            s.apply("allow_unstable", "true")?;
        }
        if self.lambda_frozen {
            s.apply("lambda_frozen_per_outer", "true")?;
        }
        Ok(s)
    }
}

/// Exit status of a run that completed but hit non-finite values.
const DIVERGED: u8 = 3;

fn run(args: &RunArgs) -> flowshape::Result<ExitCode> {
    let settings = args.settings()?;
    case_by_name(&settings.case)?;
    let out = execute(&settings)?;
    let r = &out.report;
    let last = r.history.last();
    println!(
        "{}: {} outer iterations{}, L = {}, J_v = {}, lambda = {}",
        out.case.name,
        r.outer_completed,
        if r.stopped_early { " (plateau)" } else { "" },
        last.map_or(f64::NAN, |l| l.total),
        last.map_or(f64::NAN, |l| l.volume_misfit),
        r.lambda
    );
    if !r.violations.is_empty() {
        println!("{} energy check(s) failed:", r.violations.len());
        for v in &r.violations {
            println!("  {}", v.summary());
        }
    }
    println!("history: {}", out.history_path.display());
    if let Some((n, k)) = r.diverged {
        eprintln!(
            "error: run halted on non-finite values at outer iteration {n}, inner iteration {k}"
        );
        return Ok(ExitCode::from(DIVERGED));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Cases => {
            for name in CASE_NAMES {
                let c = case_by_name(name).expect("built-in case");
                println!(
                    "{name}: {} x {} domain, beta = {}, default mesh {} x {}",
                    c.width, c.height, c.beta, c.nx, c.ny
                );
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => match run(&args) {
            Ok(code) => code,
            Err(err) => {
                eprintln!("error: {err}");
                ExitCode::from(exit_code(&err) as u8)
            }
        },
    }
}

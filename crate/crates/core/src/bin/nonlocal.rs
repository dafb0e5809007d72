use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nonlocal_core::harness::{format_table, run_experiment, unsettled, ExperimentConfig, ExperimentKind};
use nonlocal_core::{Error, MeshKind, Method, NormRegion, Result};

#[derive(Parser)]
#[command(name = "nonlocal", about = "Nonlocal Poisson experiments with mollified kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment: consistency, h-convergence, eps-convergence, comparison, scaling.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    experiment: ExperimentKind,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    mesh: Option<MeshKind>,
    #[arg(long)]
    solution: Option<String>,
    #[arg(long)]
    fe_degree: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    h0: Option<f64>,
    /// Inclusive mesh-level range, `a..b`.
    #[arg(long, value_parser = parse_range)]
    ml_range: Option<(u32, u32)>,
    #[arg(long)]
    lmin: Option<u32>,
    #[arg(long)]
    lmax: Option<u32>,
    /// Inclusive L_max range of the consistency sweep, `a..b`.
    #[arg(long, value_parser = parse_range)]
    lmax_range: Option<(u32, u32)>,
    /// Number of halvings of ε in the ε-study.
    #[arg(long)]
    eps_steps: Option<usize>,
    /// Escalation caps of the ε-study.
    #[arg(long)]
    ml_cap: Option<u32>,
    #[arg(long)]
    lmax_cap: Option<u32>,
    #[arg(long)]
    method: Option<Method>,
    /// Partition count, or a comma-separated sweep such as `1,2,4,8`.
    #[arg(long, value_parser = parse_parts)]
    parts: Option<Vec<usize>>,
    /// Symmetrize the matrix and solve with CG.
    #[arg(long)]
    symmetrize: bool,
    /// Run partitions one after another instead of on separate threads.
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    norm_region: Option<NormRegion>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail when an ε-study row does not settle.
    #[arg(long)]
    strict: bool,
}

fn parse_range(s: &str) -> std::result::Result<(u32, u32), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected a..b, got {s}"))?;
    let a: u32 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: u32 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok((a, b))
}

fn parse_parts(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',').map(|p| p.trim().parse::<usize>().map_err(|e| format!("{e}"))).collect()
}

fn configure(a: RunArgs) -> Result<(ExperimentConfig, bool)> {
    let mut c = ExperimentConfig::defaults(a.experiment, a.dim);
    if let Some(v) = a.mesh {
        c.mesh = v;
    }
    if let Some(v) = a.solution {
        c.solution = v;
    }
    if let Some(v) = a.fe_degree {
        if v != 1 && v != 2 {
            return Err(Error::InvalidParameter(format!("FE degree must be 1 or 2, got {v}")));
        }
        c.degree = v;
    }
    macro_rules! set {
        ($($field:ident = $arg:expr),*) => { $(if let Some(v) = $arg { c.$field = v; })* };
    }
    set!(
        delta = a.delta,
        eps0 = a.eps0,
        h0 = a.h0,
        ml_range = a.ml_range,
        l_min = a.lmin,
        l_max = a.lmax,
        l_max_range = a.lmax_range,
        eps_steps = a.eps_steps,
        ml_cap = a.ml_cap,
        l_max_cap = a.lmax_cap,
        method = a.method,
        parts = a.parts,
        norm_region = a.norm_region,
        tol = a.tol
    );
    c.concurrent = !a.sequential;
    c.symmetrize = a.symmetrize;
    c.out = a.out;
    Ok((c, a.strict))
}

fn run(cli: Cli) -> Result<()> {
    let Command::Run(args) = cli.command;
    let (cfg, strict) = configure(args)?;
    let rows = run_experiment(&cfg)?;
    print!("{}", format_table(&rows));
    let n = unsettled(&rows);
    if n > 0 {
        eprintln!("warning: {n} row(s) unsettled at the escalation cap");
        if strict {
            return Err(Error::Unsettled(n));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

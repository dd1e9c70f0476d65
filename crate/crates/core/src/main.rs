use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qbernoulli::cli::{self, Axis, CollapseArgs, Overrides, RunConfig};
use qbernoulli::scaling::{Bounds, DEFAULT_BOOTSTRAP};
use qbernoulli::{Error, Result};

#[derive(Parser)]
#[command(name = "qbernoulli", version, about = "Controlled quantum Bernoulli circuits: sweeps and scaling fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ensemble sweep of a quantum circuit family.
    Sweep(RunArgs),
    /// Half-cut entropy versus time, optionally fitting z.
    Timeseries(RunArgs),
    /// Sweep of the classical control map.
    Classical(RunArgs),
    /// Finite-size-scaling collapse of a raw sample table.
    Collapse(CollapseCli),
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON configuration, or a manifest.json from an earlier run.
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Comma list or start:stop:step.
    #[arg(long)]
    p_ctrl: Option<String>,
    /// Comma list of system sizes.
    #[arg(long = "L")]
    sizes: Option<String>,
    #[arg(long)]
    traj: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    s0_threshold: Option<f64>,
    /// Record the half-cut entropy after every step.
    #[arg(long)]
    timeseries: bool,
}

#[derive(Args)]
struct CollapseCli {
    /// raw.csv written by `sweep` or `classical`.
    input: PathBuf,
    #[arg(long)]
    observable: String,
    #[arg(long, default_value = "p_ctrl")]
    axis: String,
    /// Inclusive range `lo:hi` of the axis parameter.
    #[arg(long)]
    window: Option<String>,
    /// Comma list of system sizes to keep.
    #[arg(long = "L")]
    sizes: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    p_c0: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    nu0: f64,
    /// Bounds on nu as `lo:hi`.
    #[arg(long)]
    nu_bounds: Option<String>,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

fn pair(s: &str) -> Result<(f64, f64)> {
    let v: Vec<f64> = s
        .split(':')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("expected lo:hi, got {s:?}")))?;
    match v[..] {
        [lo, hi] if lo <= hi => Ok((lo, hi)),
        _ => Err(Error::Config(format!("expected lo:hi with lo <= hi, got {s:?}"))),
    }
}

fn load(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.apply(&Overrides {
        p_ctrl: args.p_ctrl.as_deref().map(cli::parse_grid_arg).transpose()?,
        sizes: args.sizes.as_deref().map(cli::parse_sizes_arg).transpose()?,
        n_traj: args.traj,
        seed: args.seed,
        threads: args.threads,
        s0_threshold: args.s0_threshold,
        timeseries: args.timeseries,
    });
    Ok(cfg)
}

fn collapse(c: &CollapseCli) -> Result<Vec<PathBuf>> {
    let window = c.window.as_deref().map(pair).transpose()?;
    let bounds = match (&c.nu_bounds, window) {
        (None, _) => None,
        (Some(nu), w) => {
            let nu = pair(nu)?;
            let p_c = w.ok_or_else(|| Error::Config("--nu-bounds needs --window".into()))?;
            Some(Bounds { p_c, nu })
        }
    };
    let args = CollapseArgs {
        input: c.input.clone(),
        observable: c.observable.clone(),
        axis: c.axis.parse::<Axis>()?,
        window,
        sizes: c.sizes.as_deref().map(cli::parse_sizes_arg).transpose()?,
        variant: c.variant.clone(),
        initial: c.p_c0.map(|p| (p, c.nu0)),
        bounds,
        n_bootstrap: c.bootstrap,
        seed: c.seed,
    };
    cli::cmd_collapse(&args, &c.out_dir)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::Sweep(a) => cli::cmd_sweep(&load(&a)?, &a.out_dir),
        Command::Timeseries(a) => cli::cmd_timeseries(&load(&a)?, &a.out_dir),
        Command::Classical(a) => cli::cmd_classical(&load(&a)?, &a.out_dir),
        Command::Collapse(c) => collapse(&c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration errors, not corruption
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

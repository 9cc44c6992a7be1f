use std::path::PathBuf;
use std::process::ExitCode;

use allelo_cli::acceptance::{run_suite, SuiteOptions};
use allelo_cli::error::config;
use allelo_cli::{exit, run, ExperimentConfig, ExperimentKind, Format, Result, RunOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "allelo",
    version,
    about = "Allelopathic competition: simulation, couplings, duality, mean field, percolation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the particle system and record species densities.
    Simulate(Common),
    /// Mean-field fixed points and trajectories.
    Meanfield(Common),
    /// Mean-field basin-of-attraction map.
    Basin(Common),
    /// Win-frequency sweep over a parameter plane.
    Sweep(WithKind),
    /// Coupled runs with an ordering check (grass-bush-tree or monotone ladder).
    Couple(WithKind),
    /// Duality or first-ancestor check of the symmetric model.
    Dual(WithKind),
    /// Oriented site percolation estimates.
    Perc(Common),
    /// Run the acceptance suite.
    Accept(Accept),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); the built-in example is used when absent.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Print the effective config and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct WithKind {
    #[command(flatten)]
    common: Common,
    /// Experiment variant when no config is given.
    #[arg(long)]
    kind: Option<String>,
}

#[derive(Args)]
struct Accept {
    /// Worker threads for the main pass.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Worker threads for the determinism rerun.
    #[arg(long, value_name = "N", default_value_t = 1)]
    rerun_workers: usize,
    /// Comma-separated criterion ids to run.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u32>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Ppm,
}

fn kinds_for(cmd: &Command) -> &'static [ExperimentKind] {
    use ExperimentKind::*;
    match cmd {
        Command::Simulate(_) => &[Simulate],
        Command::Meanfield(_) => &[Meanfield],
        Command::Basin(_) => &[Basin],
        Command::Sweep(_) => &[SweepGamma, SweepBeta],
        Command::Couple(_) => &[GbtCouple, MonoCouple],
        Command::Dual(_) => &[DualityCheck, AncestorCheck],
        Command::Perc(_) => &[Percolation],
        Command::Accept(_) => &[],
    }
}

fn experiment(cmd: &Command, common: &Common, kind: Option<&str>) -> Result<()> {
    let allowed = kinds_for(cmd);
    let mut cfg = match &common.config {
        Some(path) => {
            if kind.is_some() {
                return Err(config("--kind applies only without --config"));
            }
            ExperimentConfig::load(path)?
        }
        None => {
            let k = match kind {
                None => allowed[0],
                Some(name) => *allowed.iter().find(|k| k.name() == name).ok_or_else(|| {
                    let names: Vec<&str> = allowed.iter().map(|k| k.name()).collect();
                    config(format!("unknown kind {name}; expected one of {}", names.join(", ")))
                })?,
            };
            ExperimentConfig::example(k)
        }
    };
    if !allowed.contains(&cfg.kind) {
        return Err(config(format!("config kind {} does not belong to this subcommand", cfg.kind.name())));
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let opts = RunOptions {
        out: common.out.clone(),
        workers: common.workers,
        format: match common.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Ppm => Format::Ppm,
        },
    };
    let res = run(&cfg, &opts)?;
    println!("{}", serde_json::to_string_pretty(&res.summary)?);
    eprintln!("outputs in {}", res.out.display());
    Ok(())
}

fn accept(a: &Accept) -> Result<bool> {
    let opts = SuiteOptions { workers: a.workers, rerun_workers: a.rerun_workers, only: a.only.clone() };
    let outcomes = run_suite(&opts, |o| println!("{}", o.line()))?;
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} passed, {failed} failed", outcomes.len() - failed);
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Accept(a) => accept(a).map(|ok| if ok { exit::OK } else { exit::ACCEPTANCE }),
        c @ (Command::Simulate(x) | Command::Meanfield(x) | Command::Basin(x) | Command::Perc(x)) => {
            experiment(c, x, None).map(|_| exit::OK)
        }
        c @ (Command::Sweep(x) | Command::Couple(x) | Command::Dual(x)) => {
            experiment(c, &x.common, x.kind.as_deref()).map(|_| exit::OK)
        }
    };
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
